#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "concord/inference.hpp"
#include "test_support.hpp"

using namespace concord;

namespace {

InferenceGroup two_choice_group() {
    InferenceGroup g;
    g.group_id = "g";
    g.choice_ids = {"c1", "c2"};
    return g;
}

RelationRecord rel(const char* src, const char* dst, double e, double c, double n) {
    return RelationRecord{"g", src, dst, {e, c, n}};
}

IlpProblem make_problem(std::vector<std::pair<double, double>> local,
                        std::vector<GroundedRule> rules, ConstraintMode mode) {
    IlpProblem p;
    p.n = local.size();
    p.local = std::move(local);
    p.rules = std::move(rules);
    p.mode = mode;
    return p;
}

IlpProblem local_problem(std::vector<double> s1, std::vector<GroundedRule> rules,
                         ConstraintMode mode) {
    std::vector<std::pair<double, double>> local;
    for (double s : s1) local.emplace_back(s, 1.0 - s);
    return make_problem(std::move(local), std::move(rules), mode);
}

IlpProblem random_problem(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    IlpProblem p;
    p.n = 1 + rng() % 12;
    for (std::size_t i = 0; i < p.n; ++i) {
        const double s = unit(rng);
        p.local.emplace_back(s, 1.0 - s);
    }
    p.mode = (rng() & 1) == 0 ? ConstraintMode::Soft : ConstraintMode::Hard;

    const std::size_t rule_count = p.n < 2 ? 0 : rng() % (2 * p.n);
    for (std::size_t r = 0; r < rule_count; ++r) {
        GroundedRule rule;
        rule.src = static_cast<int>(rng() % p.n);
        do {
            rule.dst = static_cast<int>(rng() % p.n);
        } while (rule.dst == rule.src);
        rule.kind = (rng() & 1) == 0 ? RuleKind::Entail : RuleKind::Contradict;
        rule.weight = unit(rng) * 2.0;
        p.rules.push_back(rule);
    }

    if (p.n >= 4 && rng() % 3 == 0) {
        std::vector<int> order(p.n);
        for (std::size_t i = 0; i < p.n; ++i) order[i] = static_cast<int>(i);
        std::shuffle(order.begin(), order.end(), rng);
        const std::size_t first = 2 + rng() % 2;
        p.exactly_one_blocks.push_back({order.begin(), order.begin() + first});
        if (p.n - first >= 2 && (rng() & 1) == 0) {
            const std::size_t second = 2 + rng() % std::min<std::size_t>(2, p.n - first - 1);
            p.exactly_one_blocks.push_back({order.begin() + first, order.begin() + first + second});
        }
    }
    return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// grounding

TEST_CASE("grounding keeps confident non-neutral relations") {
    const auto group = two_choice_group();
    const std::unordered_map<std::string, double> scores{{"c1", 0.9}, {"c2", 0.2}};
    SolverConfig config;

    SECTION("neutral argmax grounds nothing") {
        CHECK(ground_rules(group, scores, {rel("c1", "c2", 0.2, 0.1, 0.7)}, config).empty());
    }
    SECTION("confident entailment becomes a weighted rule") {
        const auto rules = ground_rules(group, scores, {rel("c1", "c2", 0.8, 0.1, 0.1)}, config);
        REQUIRE(rules.size() == 1);
        CHECK(rules[0].kind == RuleKind::Entail);
        CHECK(rules[0].src == 0);
        CHECK(rules[0].dst == 1);
        CHECK(rules[0].weight == 0.8);
    }
    SECTION("confidence below tau is dropped") {
        CHECK(ground_rules(group, scores, {rel("c1", "c2", 0.45, 0.3, 0.25)}, config).empty());
    }
    SECTION("lambda scales the weight") {
        SolverConfig scaled = config;
        scaled.lambda = 2.5;
        const auto rules = ground_rules(group, scores, {rel("c1", "c2", 0.8, 0.1, 0.1)}, scaled);
        REQUIRE(rules.size() == 1);
        CHECK_THAT(rules[0].weight, Catch::Matchers::WithinAbs(2.0, 1e-15));
    }
    SECTION("entail wins exact ties") {
        const auto rules = ground_rules(group, scores, {rel("c1", "c2", 0.5, 0.5, 0.0)}, config);
        REQUIRE(rules.size() == 1);
        CHECK(rules[0].kind == RuleKind::Entail);
    }
    SECTION("output is sorted by indices") {
        const auto rules = ground_rules(
            group, scores,
            {rel("c2", "c1", 0.9, 0.05, 0.05), rel("c1", "c2", 0.9, 0.05, 0.05)}, config);
        REQUIRE(rules.size() == 2);
        CHECK(rules[0].src == 0);
        CHECK(rules[1].src == 1);
    }
}

TEST_CASE("grounding errors") {
    const auto group = two_choice_group();
    const std::unordered_map<std::string, double> scores{{"c1", 0.9}, {"c2", 0.2}};
    SolverConfig config;

    SECTION("relation outside the group") {
        CHECK_THROWS_MATCHES(
            ground_rules(group, scores, {rel("c1", "ghost", 0.8, 0.1, 0.1)}, config), SchemaError,
            Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("ghost")));
    }
    SECTION("duplicate ordered pair") {
        CHECK_THROWS_AS(ground_rules(group, scores,
                                     {rel("c1", "c2", 0.8, 0.1, 0.1), rel("c1", "c2", 0.1, 0.8, 0.1)},
                                     config),
                        SchemaError);
    }
    SECTION("missing score") {
        const std::unordered_map<std::string, double> partial{{"c1", 0.9}};
        CHECK_THROWS_MATCHES(
            ground_rules(group, partial, {}, config), SchemaError,
            Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("c2")));
    }
}

TEST_CASE("compilation copies sizes, rules, and blocks") {
    InferenceGroup group;
    group.group_id = "g";
    group.choice_ids = {"a", "b", "c", "d", "e"};
    std::unordered_map<std::string, double> scores;
    for (const auto& id : group.choice_ids) scores.emplace(id, 0.5);
    SolverConfig config;

    const IlpProblem empty = compile_problem(two_choice_group(),
                                             {{"c1", 0.9}, {"c2", 0.2}}, {}, config);
    CHECK(empty.n == 2);
    CHECK(empty.rules.empty());
    CHECK(empty.exactly_one_blocks.empty());
    CHECK(empty.local[0] == std::pair{0.9, 0.09999999999999998});

    std::vector<GroundedRule> rules{{RuleKind::Entail, 0, 1, 0.8},
                                    {RuleKind::Contradict, 2, 4, 0.6},
                                    {RuleKind::Entail, 3, 0, 0.7}};
    const IlpProblem p = compile_problem(group, scores, rules, config);
    CHECK(p.n == 5);
    CHECK(p.rules.size() == 3);

    group.exactly_one_blocks = {{"a", "b"}, {"c", "d"}, {"e"}};
    const IlpProblem blocked = compile_problem(group, scores, {}, config);
    REQUIRE(blocked.exactly_one_blocks.size() == 3);
    CHECK(blocked.exactly_one_blocks[0] == std::vector<int>{0, 1});

    group.exactly_one_blocks = {{"a", "ghost"}};
    CHECK_THROWS_AS(compile_problem(group, scores, {}, config), SchemaError);
}

// ---------------------------------------------------------------------------
// objective

TEST_CASE("objective matches hand-computed values") {
    const IlpProblem p = local_problem({0.9, 0.4}, {{RuleKind::Entail, 0, 1, 0.8}},
                                       ConstraintMode::Soft);
    CHECK_THAT(objective_of(p, {false, false}), Catch::Matchers::WithinAbs(0.7, 1e-12));
    CHECK_THAT(objective_of(p, {false, true}), Catch::Matchers::WithinAbs(0.5, 1e-12));
    CHECK_THAT(objective_of(p, {true, false}), Catch::Matchers::WithinAbs(0.7, 1e-12));
    CHECK_THAT(objective_of(p, {true, true}), Catch::Matchers::WithinAbs(1.3, 1e-12));

    const IlpProblem hard = local_problem({0.9, 0.4}, {{RuleKind::Entail, 0, 1, 0.8}},
                                          ConstraintMode::Hard);
    // hard mode scores locals only; violations are infeasible, not penalized
    CHECK_THAT(objective_of(hard, {true, false}), Catch::Matchers::WithinAbs(1.5, 1e-12));
    CHECK_FALSE(satisfies_hard_constraints(hard, {true, false}));
    CHECK(satisfies_hard_constraints(hard, {true, true}));

    CHECK_THROWS_AS(objective_of(p, {true}), DomainError);
}

// ---------------------------------------------------------------------------
// solve: worked examples

TEST_CASE("no rules reduces to independent thresholding") {
    const Solution s = solve(local_problem({0.9, 0.2}, {}, ConstraintMode::Soft));
    CHECK(s.status == SolveStatus::Optimal);
    CHECK(s.assignment == std::vector<bool>{true, false});
    CHECK_THAT(s.objective, Catch::Matchers::WithinAbs(1.7, 1e-12));
}

TEST_CASE("soft entailment pulls the target true") {
    const Solution s =
        solve(local_problem({0.9, 0.4}, {{RuleKind::Entail, 0, 1, 0.8}}, ConstraintMode::Soft));
    CHECK(s.assignment == std::vector<bool>{true, true});
    CHECK_THAT(s.objective, Catch::Matchers::WithinAbs(1.3, 1e-12));
}

TEST_CASE("soft contradiction suppresses the weaker choice") {
    const Solution s =
        solve(local_problem({0.8, 0.7}, {{RuleKind::Contradict, 0, 1, 0.9}}, ConstraintMode::Soft));
    CHECK(s.assignment == std::vector<bool>{true, false});
    CHECK_THAT(s.objective, Catch::Matchers::WithinAbs(1.1, 1e-12));
}

TEST_CASE("hard entailment forces the target true") {
    const Solution s =
        solve(local_problem({0.9, 0.15}, {{RuleKind::Entail, 0, 1, 1.0}}, ConstraintMode::Hard));
    CHECK(s.assignment == std::vector<bool>{true, true});
    CHECK_THAT(s.objective, Catch::Matchers::WithinAbs(1.05, 1e-12));
}

TEST_CASE("exact ties break toward all-false") {
    const Solution s = solve(local_problem({0.5, 0.5}, {}, ConstraintMode::Soft));
    CHECK(s.assignment == std::vector<bool>{false, false});
    CHECK_THAT(s.objective, Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("cross-block contradictions are infeasible in hard mode") {
    IlpProblem p = local_problem({0.9, 0.9, 0.9, 0.9},
                                 {{RuleKind::Contradict, 0, 2, 1.0},
                                  {RuleKind::Contradict, 0, 3, 1.0},
                                  {RuleKind::Contradict, 1, 2, 1.0},
                                  {RuleKind::Contradict, 1, 3, 1.0}},
                                 ConstraintMode::Hard);
    p.exactly_one_blocks = {{0, 1}, {2, 3}};
    const Solution s = solve(p);
    CHECK(s.status == SolveStatus::Infeasible);
    CHECK(s.assignment.empty());

    const Solution oracle = brute_force(p);
    CHECK(oracle.status == SolveStatus::Infeasible);
}

// ---------------------------------------------------------------------------
// brute force oracle

TEST_CASE("brute force agrees on every worked example") {
    const std::vector<IlpProblem> problems{
        local_problem({0.9, 0.2}, {}, ConstraintMode::Soft),
        local_problem({0.9, 0.4}, {{RuleKind::Entail, 0, 1, 0.8}}, ConstraintMode::Soft),
        local_problem({0.8, 0.7}, {{RuleKind::Contradict, 0, 1, 0.9}}, ConstraintMode::Soft),
        local_problem({0.9, 0.15}, {{RuleKind::Entail, 0, 1, 1.0}}, ConstraintMode::Hard),
        local_problem({0.5, 0.5}, {}, ConstraintMode::Soft),
    };
    for (const IlpProblem& p : problems) {
        const Solution a = solve(p);
        const Solution b = brute_force(p);
        CHECK(a.status == b.status);
        CHECK(a.assignment == b.assignment);
        CHECK(a.objective == b.objective);
    }
}

TEST_CASE("brute force handles the empty problem and rejects huge ones") {
    IlpProblem empty;
    const Solution s = brute_force(empty);
    CHECK(s.status == SolveStatus::Optimal);
    CHECK(s.assignment.empty());
    CHECK(s.objective == 0.0);

    IlpProblem big;
    big.n = 26;
    big.local.assign(26, {0.5, 0.5});
    CHECK_THROWS_AS(brute_force(big), DomainError);
}

TEST_CASE("ten-variable random problem matches the oracle") {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 5; ++i) {
        IlpProblem p = random_problem(rng);
        while (p.n != 10) p = random_problem(rng);
        const Solution a = solve(p);
        const Solution b = brute_force(p);
        REQUIRE(a.status == b.status);
        if (a.status == SolveStatus::Optimal) {
            REQUIRE(std::fabs(a.objective - b.objective) <= 1e-9);
            REQUIRE(a.assignment == b.assignment);
        }
    }
}

TEST_CASE("solver equals oracle over 500 seeded random problems") {
    std::mt19937_64 rng(2024);
    int optimal = 0, infeasible = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const IlpProblem p = random_problem(rng);
        const Solution fast = solve(p);
        const Solution slow = brute_force(p);
        REQUIRE(fast.status == slow.status);
        if (fast.status == SolveStatus::Optimal) {
            ++optimal;
            REQUIRE(std::fabs(fast.objective - slow.objective) <= 1e-9);
            REQUIRE(fast.assignment == slow.assignment);
        } else {
            ++infeasible;
        }
    }
    CHECK(optimal > 400);  // infeasible cases exist but are the minority
    CHECK(optimal + infeasible == 500);
}

TEST_CASE("near ties resolve identically in both solvers") {
    const IlpProblem p = local_problem({0.5, 0.5 + 1e-13}, {}, ConstraintMode::Soft);
    const Solution a = solve(p);
    const Solution b = brute_force(p);
    CHECK(a.assignment == b.assignment);
    CHECK(a.objective == b.objective);
    CHECK(a.assignment == std::vector<bool>{false, true});
}

// ---------------------------------------------------------------------------
// solver properties

TEST_CASE("soft optimum is at least as good as thresholding") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        IlpProblem p = random_problem(rng);
        p.mode = ConstraintMode::Soft;
        p.exactly_one_blocks.clear();
        const Solution s = solve(p);
        REQUIRE(s.status == SolveStatus::Optimal);
        std::vector<bool> thresholded(p.n);
        for (std::size_t j = 0; j < p.n; ++j) thresholded[j] = p.local[j].first > 0.5;
        REQUIRE(s.objective >= objective_of(p, thresholded) - 1e-12);
    }
}

TEST_CASE("hard solutions satisfy every constraint") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        IlpProblem p = random_problem(rng);
        p.mode = ConstraintMode::Hard;
        const Solution s = solve(p);
        if (s.status == SolveStatus::Optimal) {
            REQUIRE(satisfies_hard_constraints(p, s.assignment));
        }
    }
}

TEST_CASE("large lambda makes soft match hard when satisfiable") {
    std::mt19937_64 rng(9);
    int compared = 0;
    for (int trial = 0; trial < 200; ++trial) {
        IlpProblem p = random_problem(rng);
        p.exactly_one_blocks.clear();
        const double lambda = static_cast<double>(p.n) + 1.0;
        for (GroundedRule& rule : p.rules) rule.weight = lambda;  // one-hot confidence

        IlpProblem hard = p;
        hard.mode = ConstraintMode::Hard;
        const Solution hs = solve(hard);
        if (hs.status != SolveStatus::Optimal) continue;  // no rule-satisfying assignment
        ++compared;

        IlpProblem soft = p;
        soft.mode = ConstraintMode::Soft;
        const Solution ss = solve(soft);
        REQUIRE(ss.status == SolveStatus::Optimal);
        REQUIRE(satisfies_hard_constraints(hard, ss.assignment));
        REQUIRE(ss.assignment == hs.assignment);
    }
    CHECK(compared > 50);
}

TEST_CASE("adding a rule the optimum already satisfies changes nothing") {
    std::mt19937_64 rng(10);
    int extended = 0;
    for (int trial = 0; trial < 200; ++trial) {
        IlpProblem p = random_problem(rng);
        if (p.n < 2) continue;
        const Solution before = solve(p);
        if (before.status != SolveStatus::Optimal) continue;

        GroundedRule extra;
        extra.src = static_cast<int>(rng() % p.n);
        do {
            extra.dst = static_cast<int>(rng() % p.n);
        } while (extra.dst == extra.src);
        extra.weight = 1.0;
        // pick the kind the current optimum satisfies
        if (before.assignment[extra.src] && !before.assignment[extra.dst]) {
            extra.kind = RuleKind::Contradict;
        } else if (before.assignment[extra.src] && before.assignment[extra.dst]) {
            extra.kind = RuleKind::Entail;
        } else {
            extra.kind = (rng() & 1) == 0 ? RuleKind::Entail : RuleKind::Contradict;
        }

        IlpProblem q = p;
        q.rules.push_back(extra);
        const Solution after = solve(q);
        ++extended;
        REQUIRE(after.status == SolveStatus::Optimal);
        REQUIRE(after.objective == before.objective);
        REQUIRE(after.assignment == before.assignment);
    }
    CHECK(extended > 100);
}

TEST_CASE("overlapping exactly-one blocks are rejected") {
    IlpProblem p = local_problem({0.5, 0.5, 0.5}, {}, ConstraintMode::Soft);
    p.exactly_one_blocks = {{0, 1}, {1, 2}};
    CHECK_THROWS_AS(solve(p), DomainError);
}

// ---------------------------------------------------------------------------
// infer_dataset

namespace {

Dataset entail_fixture() {
    Dataset d;
    d.paragraphs.push_back({"p1", "text"});
    d.questions.push_back({"p1-q1", "p1", "q?"});
    d.choices.push_back({"p1-q1-c1", "p1-q1", "a", std::nullopt});
    d.choices.push_back({"p1-q1-c2", "p1-q1", "b", std::nullopt});
    return d;
}

}  // namespace

TEST_CASE("no relations means pure thresholding") {
    const Dataset d = testsupport::small_dataset(3);
    std::vector<ScoreRecord> scores;
    double s = 0.05;
    for (const Choice& c : d.choices) {
        scores.push_back({c.id, s});
        s += 0.17;
    }
    SolverConfig config;
    const InferReport report =
        infer_dataset(d, scores, {}, GroupingMode::WithinQuestion, config, ExactlyOnePolicy::Off);
    CHECK(report.predictions == threshold_predictions(scores));
    CHECK(report.groups_total == 2);
    CHECK(report.groups_fell_back == 0);
}

TEST_CASE("entailment flips the second choice inside a dataset") {
    const Dataset d = entail_fixture();
    const std::vector<ScoreRecord> scores{{"p1-q1-c1", 0.9}, {"p1-q1-c2", 0.4}};
    const std::vector<RelationRecord> relations{
        {"p1-q1", "p1-q1-c1", "p1-q1-c2", {0.8, 0.1, 0.1}}};
    SolverConfig config;
    const InferReport report =
        infer_dataset(d, scores, relations, GroupingMode::WithinQuestion, config);
    REQUIRE(report.predictions.size() == 2);
    CHECK(report.predictions[0].label == true);
    CHECK(report.predictions[1].label == true);  // flipped by the rule
    CHECK(threshold_predictions(scores)[1].label == false);
}

TEST_CASE("infeasible groups fall back to soft mode when configured") {
    Dataset d;
    d.paragraphs.push_back({"p1", "t"});
    d.questions.push_back({"p1-q1", "p1", "q?"});
    d.questions.push_back({"p1-q2", "p1", "q?"});
    d.choices.push_back({"p1-q1-c1", "p1-q1", "a", true});
    d.choices.push_back({"p1-q1-c2", "p1-q1", "b", false});
    d.choices.push_back({"p1-q2-c1", "p1-q2", "c", true});
    d.choices.push_back({"p1-q2-c2", "p1-q2", "d", false});

    const std::vector<ScoreRecord> scores{{"p1-q1-c1", 0.9},
                                          {"p1-q1-c2", 0.8},
                                          {"p1-q2-c1", 0.7},
                                          {"p1-q2-c2", 0.6}};
    std::vector<RelationRecord> relations;
    for (const char* src : {"p1-q1-c1", "p1-q1-c2"}) {
        for (const char* dst : {"p1-q2-c1", "p1-q2-c2"}) {
            relations.push_back({"p1", src, dst, {0.0, 1.0, 0.0}});
        }
    }

    SolverConfig config;
    config.constraint_mode = ConstraintMode::Hard;

    SECTION("fallback-soft marks the group") {
        config.on_infeasible = OnInfeasible::FallbackSoft;
        const InferReport report = infer_dataset(d, scores, relations, GroupingMode::CrossQuestion,
                                                 config, ExactlyOnePolicy::On);
        CHECK(report.groups_fell_back == 1);
        REQUIRE(report.predictions.size() == 4);
        int q1_true = 0, q2_true = 0;
        for (const auto& pred : report.predictions) {
            if (!pred.label) continue;
            (pred.choice_id.rfind("p1-q1", 0) == 0 ? q1_true : q2_true) += 1;
        }
        CHECK(q1_true == 1);  // blocks stay hard even after the fallback
        CHECK(q2_true == 1);
    }
    SECTION("error policy raises naming the group") {
        config.on_infeasible = OnInfeasible::Error;
        CHECK_THROWS_MATCHES(
            infer_dataset(d, scores, relations, GroupingMode::CrossQuestion, config,
                          ExactlyOnePolicy::On),
            InfeasibleError,
            Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("p1")));
    }
}

TEST_CASE("relations naming unknown groups are rejected") {
    const Dataset d = entail_fixture();
    const std::vector<ScoreRecord> scores{{"p1-q1-c1", 0.9}, {"p1-q1-c2", 0.4}};
    const std::vector<RelationRecord> relations{
        {"nope", "p1-q1-c1", "p1-q1-c2", {0.8, 0.1, 0.1}}};
    SolverConfig config;
    CHECK_THROWS_MATCHES(
        infer_dataset(d, scores, relations, GroupingMode::WithinQuestion, config), SchemaError,
        Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("nope")));
}

TEST_CASE("missing scores are rejected naming the choice") {
    const Dataset d = entail_fixture();
    const std::vector<ScoreRecord> scores{{"p1-q1-c1", 0.9}};
    SolverConfig config;
    CHECK_THROWS_MATCHES(
        infer_dataset(d, scores, {}, GroupingMode::WithinQuestion, config), SchemaError,
        Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("p1-q1-c2")));
}

TEST_CASE("duplicate scores are rejected") {
    const Dataset d = entail_fixture();
    const std::vector<ScoreRecord> scores{{"p1-q1-c1", 0.9}, {"p1-q1-c1", 0.9}, {"p1-q1-c2", 0.4}};
    SolverConfig config;
    CHECK_THROWS_AS(infer_dataset(d, scores, {}, GroupingMode::WithinQuestion, config), SchemaError);
}

TEST_CASE("thread counts do not change the predictions") {
    std::mt19937_64 rng(31);
    Dataset d;
    std::vector<ScoreRecord> scores;
    std::vector<RelationRecord> relations;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int pi = 0; pi < 6; ++pi) {
        const std::string pid = "p" + std::to_string(pi);
        d.paragraphs.push_back({pid, "t"});
        for (int qi = 0; qi < 2; ++qi) {
            const std::string qid = pid + "-q" + std::to_string(qi);
            d.questions.push_back({qid, pid, "q?"});
            std::vector<std::string> ids;
            for (int ci = 0; ci < 4; ++ci) {
                const std::string cid = qid + "-c" + std::to_string(ci);
                d.choices.push_back({cid, qid, "text", std::nullopt});
                scores.push_back({cid, unit(rng)});
                ids.push_back(cid);
            }
            for (std::size_t a = 0; a < ids.size(); ++a) {
                for (std::size_t b = 0; b < ids.size(); ++b) {
                    if (a == b || (rng() % 3) != 0) continue;
                    const double e = unit(rng), c = unit(rng) * (1.0 - e);
                    relations.push_back({qid, ids[a], ids[b], {e, c, 1.0 - e - c}});
                }
            }
        }
    }
    SolverConfig config;
    const InferReport one =
        infer_dataset(d, scores, relations, GroupingMode::WithinQuestion, config,
                      ExactlyOnePolicy::Auto, 1);
    const InferReport four =
        infer_dataset(d, scores, relations, GroupingMode::WithinQuestion, config,
                      ExactlyOnePolicy::Auto, 4);
    CHECK(one.predictions == four.predictions);
    CHECK(one.groups_total == four.groups_total);
    CHECK(one.groups_fell_back == four.groups_fell_back);
}

TEST_CASE("exactly-one on forces a single true choice") {
    Dataset d;
    d.paragraphs.push_back({"p1", "t"});
    d.questions.push_back({"p1-q1", "p1", "q?"});
    d.choices.push_back({"p1-q1-c1", "p1-q1", "a", std::nullopt});
    d.choices.push_back({"p1-q1-c2", "p1-q1", "b", std::nullopt});
    const std::vector<ScoreRecord> scores{{"p1-q1-c1", 0.1}, {"p1-q1-c2", 0.2}};
    SolverConfig config;
    const InferReport report = infer_dataset(d, scores, {}, GroupingMode::WithinQuestion, config,
                                             ExactlyOnePolicy::On);
    REQUIRE(report.predictions.size() == 2);
    CHECK(report.predictions[0].label == false);
    CHECK(report.predictions[1].label == true);
}
