#pragma once

// Canonical data model: paragraphs, questions, answer choices and the
// grouping of choices into independent inference units.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "concord/errors.hpp"

namespace concord {

struct Paragraph {
    std::string id;
    std::string text;  // may be empty

    bool operator==(const Paragraph&) const = default;
};

struct Question {
    std::string id;
    std::string paragraph_id;
    std::string text;

    bool operator==(const Question&) const = default;
};

struct Choice {
    std::string id;
    std::string question_id;
    std::string text;
    std::optional<bool> gold;

    bool operator==(const Choice&) const = default;
};

struct Dataset {
    std::vector<Paragraph> paragraphs;
    std::vector<Question> questions;
    std::vector<Choice> choices;

    bool operator==(const Dataset&) const = default;
};

/// A set of choices solved as one unit, plus the per-question
/// "exactly one of these is true" blocks that apply to it.
struct InferenceGroup {
    std::string group_id;
    std::vector<std::string> choice_ids;                    // sorted by id
    std::vector<std::vector<std::string>> exactly_one_blocks;

    bool operator==(const InferenceGroup&) const = default;
};

// WithinQuestion: relations among the choices of one question.
// CrossQuestion: relations among all choices of one paragraph.
enum class GroupingMode { WithinQuestion, CrossQuestion };

inline const char* to_string(GroupingMode mode) {
    return mode == GroupingMode::WithinQuestion ? "within-question" : "cross-question";
}

// Auto derives the exactly-one block per question from gold labels
// (present and exactly one true); no gold means no block.
enum class ExactlyOnePolicy { Auto, On, Off };

struct ValidationIssue {
    std::string code;     // stable machine-readable kind
    std::string subject;  // offending id
    std::string message;

    bool operator==(const ValidationIssue&) const = default;
};

struct ValidationReport {
    std::size_t paragraph_count = 0;
    std::size_t question_count = 0;
    std::size_t choice_count = 0;
    std::vector<ValidationIssue> violations;
    std::vector<ValidationIssue> warnings;

    bool ok() const { return violations.empty(); }
};

// ---------------------------------------------------------------------------
// validate_dataset

/// Checks referential integrity of a Dataset. Violations are reported,
/// never thrown: dangling references, duplicate or empty ids, and
/// questions without choices.
inline ValidationReport validate_dataset(const Dataset& dataset) {
    ValidationReport report;
    report.paragraph_count = dataset.paragraphs.size();
    report.question_count = dataset.questions.size();
    report.choice_count = dataset.choices.size();

    auto add = [&](const char* code, const std::string& subject, std::string message) {
        report.violations.push_back({code, subject, std::move(message)});
    };

    std::unordered_set<std::string> paragraph_ids;
    for (const auto& p : dataset.paragraphs) {
        if (p.id.empty()) {
            add("empty-paragraph-id", "", "paragraph with empty id");
        } else if (!paragraph_ids.insert(p.id).second) {
            add("duplicate-paragraph-id", p.id, "duplicate paragraph id '" + p.id + "'");
        }
    }

    std::unordered_set<std::string> question_ids;
    for (const auto& q : dataset.questions) {
        if (q.id.empty()) {
            add("empty-question-id", "", "question with empty id");
        } else if (!question_ids.insert(q.id).second) {
            add("duplicate-question-id", q.id, "duplicate question id '" + q.id + "'");
        }
        if (!paragraph_ids.count(q.paragraph_id)) {
            add("dangling-paragraph-ref", q.id,
                "question '" + q.id + "' references missing paragraph '" + q.paragraph_id + "'");
        }
    }

    std::unordered_set<std::string> choice_ids;
    std::unordered_map<std::string, std::size_t> choices_per_question;
    for (const auto& c : dataset.choices) {
        if (c.id.empty()) {
            add("empty-choice-id", "", "choice with empty id");
        } else if (!choice_ids.insert(c.id).second) {
            add("duplicate-choice-id", c.id, "duplicate choice id '" + c.id + "'");
        }
        if (!question_ids.count(c.question_id)) {
            add("dangling-question-ref", c.id,
                "choice '" + c.id + "' references missing question '" + c.question_id + "'");
        } else {
            ++choices_per_question[c.question_id];
        }
    }

    for (const auto& q : dataset.questions) {
        if (question_ids.count(q.id) && choices_per_question.find(q.id) == choices_per_question.end()) {
            add("question-without-choices", q.id, "question '" + q.id + "' has no choices");
        }
    }

    return report;
}

inline void require_valid(const Dataset& dataset) {
    const ValidationReport report = validate_dataset(dataset);
    if (!report.ok()) {
        std::string msg = "dataset failed validation: " + report.violations.front().message;
        if (report.violations.size() > 1) {
            msg += " (+" + std::to_string(report.violations.size() - 1) + " more)";
        }
        throw SchemaError(msg);
    }
}

// ---------------------------------------------------------------------------
// build_groups

namespace detail {

inline bool question_has_exactly_one_true(const std::vector<const Choice*>& choices) {
    std::size_t trues = 0;
    for (const Choice* c : choices) {
        if (!c->gold.has_value()) return false;
        if (*c->gold) ++trues;
    }
    return trues == 1;
}

}  // namespace detail

/// Partitions a dataset's choices into inference groups. WithinQuestion
/// yields one group per question keyed by the question id; CrossQuestion
/// yields one group per paragraph (with at least one question) keyed by
/// the paragraph id. Output is sorted by group id and choice ids are
/// sorted within each group.
inline std::vector<InferenceGroup> build_groups(const Dataset& dataset, GroupingMode mode,
                                                ExactlyOnePolicy exactly_one = ExactlyOnePolicy::Auto) {
    require_valid(dataset);

    std::unordered_map<std::string, std::vector<const Choice*>> by_question;
    for (const auto& c : dataset.choices) by_question[c.question_id].push_back(&c);

    auto block_applies = [&](const std::vector<const Choice*>& qchoices) {
        switch (exactly_one) {
            case ExactlyOnePolicy::On: return true;
            case ExactlyOnePolicy::Off: return false;
            case ExactlyOnePolicy::Auto: return detail::question_has_exactly_one_true(qchoices);
        }
        return false;
    };

    auto sorted_ids = [](const std::vector<const Choice*>& cs) {
        std::vector<std::string> ids;
        ids.reserve(cs.size());
        for (const Choice* c : cs) ids.push_back(c->id);
        std::sort(ids.begin(), ids.end());
        return ids;
    };

    std::vector<InferenceGroup> groups;
    if (mode == GroupingMode::WithinQuestion) {
        for (const auto& q : dataset.questions) {
            const auto& qchoices = by_question.at(q.id);
            InferenceGroup g;
            g.group_id = q.id;
            g.choice_ids = sorted_ids(qchoices);
            if (block_applies(qchoices)) g.exactly_one_blocks.push_back(g.choice_ids);
            groups.push_back(std::move(g));
        }
    } else {
        std::unordered_map<std::string, std::vector<const Question*>> by_paragraph;
        for (const auto& q : dataset.questions) by_paragraph[q.paragraph_id].push_back(&q);
        for (const auto& p : dataset.paragraphs) {
            auto it = by_paragraph.find(p.id);
            if (it == by_paragraph.end()) continue;  // paragraph without questions: no group
            InferenceGroup g;
            g.group_id = p.id;
            for (const Question* q : it->second) {
                const auto& qchoices = by_question.at(q->id);
                auto ids = sorted_ids(qchoices);
                if (block_applies(qchoices)) g.exactly_one_blocks.push_back(ids);
                g.choice_ids.insert(g.choice_ids.end(), ids.begin(), ids.end());
            }
            std::sort(g.choice_ids.begin(), g.choice_ids.end());
            std::sort(g.exactly_one_blocks.begin(), g.exactly_one_blocks.end());
            groups.push_back(std::move(g));
        }
    }

    std::sort(groups.begin(), groups.end(),
              [](const InferenceGroup& a, const InferenceGroup& b) { return a.group_id < b.group_id; });
    return groups;
}

/// Gold labels keyed by choice id; choices without gold are absent.
inline std::unordered_map<std::string, bool> gold_map(const Dataset& dataset) {
    std::unordered_map<std::string, bool> golds;
    for (const auto& c : dataset.choices) {
        if (c.gold.has_value()) golds.emplace(c.id, *c.gold);
    }
    return golds;
}

}  // namespace concord
