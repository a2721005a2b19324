#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "concord/model.hpp"
#include "test_support.hpp"

using namespace concord;
using testsupport::small_dataset;

// ---------------------------------------------------------------------------
// validate_dataset

TEST_CASE("well-formed dataset validates with exact counts") {
    const ValidationReport report = validate_dataset(small_dataset());
    CHECK(report.paragraph_count == 1);
    CHECK(report.question_count == 2);
    CHECK(report.choice_count == 4);
    CHECK(report.violations.empty());
    CHECK(report.ok());
}

TEST_CASE("choice referencing a missing question is a violation naming the choice") {
    Dataset d = small_dataset();
    d.choices.push_back({"stray", "no-such-question", "text", std::nullopt});
    const ValidationReport report = validate_dataset(d);
    REQUIRE_FALSE(report.ok());
    const auto hit = std::find_if(report.violations.begin(), report.violations.end(),
                                  [](const ValidationIssue& v) { return v.subject == "stray"; });
    REQUIRE(hit != report.violations.end());
    CHECK(hit->code == "dangling-question-ref");
}

TEST_CASE("question referencing a missing paragraph is a violation") {
    Dataset d = small_dataset();
    d.questions.push_back({"qX", "no-such-paragraph", "text"});
    d.choices.push_back({"qX-c1", "qX", "text", std::nullopt});
    const ValidationReport report = validate_dataset(d);
    REQUIRE_FALSE(report.ok());
    CHECK(std::any_of(report.violations.begin(), report.violations.end(),
                      [](const ValidationIssue& v) {
                          return v.code == "dangling-paragraph-ref" && v.subject == "qX";
                      }));
}

TEST_CASE("duplicate and empty ids are violations") {
    Dataset d = small_dataset();
    d.paragraphs.push_back({"p1", "duplicate"});
    d.choices.push_back({"", "p1-q1", "empty id", std::nullopt});
    const ValidationReport report = validate_dataset(d);
    CHECK(std::any_of(report.violations.begin(), report.violations.end(),
                      [](const ValidationIssue& v) { return v.code == "duplicate-paragraph-id"; }));
    CHECK(std::any_of(report.violations.begin(), report.violations.end(),
                      [](const ValidationIssue& v) { return v.code == "empty-choice-id"; }));
}

TEST_CASE("question without choices is a violation, not a silent drop") {
    Dataset d = small_dataset();
    d.questions.push_back({"p1-q3", "p1", "childless"});
    const ValidationReport report = validate_dataset(d);
    CHECK(std::any_of(report.violations.begin(), report.violations.end(),
                      [](const ValidationIssue& v) {
                          return v.code == "question-without-choices" && v.subject == "p1-q3";
                      }));
}

TEST_CASE("require_valid throws SchemaError on violations and passes clean data") {
    CHECK_NOTHROW(require_valid(small_dataset()));
    Dataset d = small_dataset();
    d.choices.push_back({"stray", "nowhere", "text", std::nullopt});
    CHECK_THROWS_AS(require_valid(d), SchemaError);
    CHECK_THROWS_WITH(require_valid(d), Catch::Matchers::ContainsSubstring("stray"));
}

// ---------------------------------------------------------------------------
// build_groups

TEST_CASE("within-question grouping yields one group per question") {
    Dataset d;
    d.paragraphs.push_back({"p1", ""});
    d.questions.push_back({"q1", "p1", ""});
    for (int i = 0; i < 5; ++i) {
        d.choices.push_back({"q1-c" + std::to_string(i), "q1", "", std::nullopt});
    }
    const auto groups = build_groups(d, GroupingMode::WithinQuestion, ExactlyOnePolicy::Off);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0].group_id == "q1");
    CHECK(groups[0].choice_ids.size() == 5);
    CHECK(groups[0].exactly_one_blocks.empty());
}

TEST_CASE("cross-question grouping merges a paragraph and keeps per-question blocks") {
    Dataset d;
    d.paragraphs.push_back({"p1", ""});
    for (int q = 0; q < 3; ++q) {
        const std::string qid = "p1-q" + std::to_string(q);
        d.questions.push_back({qid, "p1", ""});
        d.choices.push_back({qid + "-c0", qid, "", q == 0});
        d.choices.push_back({qid + "-c1", qid, "", false});
    }
    const auto groups = build_groups(d, GroupingMode::CrossQuestion, ExactlyOnePolicy::On);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0].group_id == "p1");
    CHECK(groups[0].choice_ids.size() == 6);
    REQUIRE(groups[0].exactly_one_blocks.size() == 3);
    for (const auto& block : groups[0].exactly_one_blocks) CHECK(block.size() == 2);
}

TEST_CASE("empty dataset produces no groups") {
    CHECK(build_groups(Dataset{}, GroupingMode::WithinQuestion).empty());
    CHECK(build_groups(Dataset{}, GroupingMode::CrossQuestion).empty());
}

TEST_CASE("auto exactly-one applies only to fully-labeled single-true questions") {
    Dataset d;
    d.paragraphs.push_back({"p1", ""});
    d.questions.push_back({"q1", "p1", ""});  // exactly one true
    d.choices.push_back({"q1-c0", "q1", "", true});
    d.choices.push_back({"q1-c1", "q1", "", false});
    d.questions.push_back({"q2", "p1", ""});  // two true
    d.choices.push_back({"q2-c0", "q2", "", true});
    d.choices.push_back({"q2-c1", "q2", "", true});
    d.questions.push_back({"q3", "p1", ""});  // gold missing on one choice
    d.choices.push_back({"q3-c0", "q3", "", true});
    d.choices.push_back({"q3-c1", "q3", "", std::nullopt});

    const auto auto_groups = build_groups(d, GroupingMode::WithinQuestion, ExactlyOnePolicy::Auto);
    REQUIRE(auto_groups.size() == 3);
    CHECK(auto_groups[0].exactly_one_blocks.size() == 1);  // q1
    CHECK(auto_groups[1].exactly_one_blocks.empty());      // q2
    CHECK(auto_groups[2].exactly_one_blocks.empty());      // q3

    const auto on_groups = build_groups(d, GroupingMode::WithinQuestion, ExactlyOnePolicy::On);
    for (const auto& g : on_groups) CHECK(g.exactly_one_blocks.size() == 1);

    const auto off_groups = build_groups(d, GroupingMode::WithinQuestion, ExactlyOnePolicy::Off);
    for (const auto& g : off_groups) CHECK(g.exactly_one_blocks.empty());
}

TEST_CASE("groups and their choice ids are sorted and form a partition") {
    Dataset d;
    d.paragraphs.push_back({"pB", ""});
    d.paragraphs.push_back({"pA", ""});
    d.questions.push_back({"pB-q1", "pB", ""});
    d.questions.push_back({"pA-q1", "pA", ""});
    d.choices.push_back({"pB-q1-c2", "pB-q1", "", std::nullopt});
    d.choices.push_back({"pB-q1-c1", "pB-q1", "", std::nullopt});
    d.choices.push_back({"pA-q1-c1", "pA-q1", "", std::nullopt});

    for (const GroupingMode mode : {GroupingMode::WithinQuestion, GroupingMode::CrossQuestion}) {
        const auto groups = build_groups(d, mode);
        CHECK(std::is_sorted(groups.begin(), groups.end(),
                             [](const InferenceGroup& a, const InferenceGroup& b) {
                                 return a.group_id < b.group_id;
                             }));
        std::set<std::string> seen;
        for (const auto& g : groups) {
            CHECK(std::is_sorted(g.choice_ids.begin(), g.choice_ids.end()));
            for (const auto& id : g.choice_ids) CHECK(seen.insert(id).second);
        }
        CHECK(seen.size() == d.choices.size());
        CHECK(build_groups(d, mode) == groups);  // repeated calls identical
    }
}

TEST_CASE("group counts follow the mode") {
    Dataset d = small_dataset();
    d.paragraphs.push_back({"p2", "no questions"});
    CHECK(build_groups(d, GroupingMode::WithinQuestion).size() == d.questions.size());
    CHECK(build_groups(d, GroupingMode::CrossQuestion).size() == 1);  // p2 has no questions
}

TEST_CASE("build_groups rejects invalid datasets") {
    Dataset d = small_dataset();
    d.choices.push_back({"stray", "nowhere", "", std::nullopt});
    CHECK_THROWS_AS(build_groups(d, GroupingMode::WithinQuestion), SchemaError);
}

TEST_CASE("gold_map keeps only labeled choices") {
    Dataset d = small_dataset();
    d.choices.push_back({"p1-q2-c9", "p1-q2", "unlabeled", std::nullopt});
    const auto golds = gold_map(d);
    CHECK(golds.size() == 4);
    CHECK(golds.at("p1-q1-c1") == true);
    CHECK(golds.at("p1-q1-c2") == false);
    CHECK(golds.count("p1-q2-c9") == 0);
}
