#pragma once

// Relational inference over answer choices. Per group: harden relation
// probabilities into weighted rules, compile an integer program whose
// objective rewards agreement with the per-choice scores and penalizes (or
// forbids) rule violations, and solve it exactly.
//
// Two solvers share one objective definition: `solve` is branch-and-bound
// with an admissible bound, `brute_force` enumerates every assignment and is
// the reference oracle. Both break objective ties toward the assignment that
// is lexicographically smallest with false < true, so they agree bit for bit.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "concord/codec.hpp"
#include "concord/errors.hpp"
#include "concord/model.hpp"

namespace concord {

// ---------------------------------------------------------------------------
// problem types

enum class RuleKind { Entail, Contradict };

struct GroundedRule {
    RuleKind kind = RuleKind::Entail;
    int src = 0;  // choice index within the group
    int dst = 0;
    double weight = 0.0;

    bool operator==(const GroundedRule&) const = default;
};

enum class ConstraintMode { Soft, Hard };
enum class OnInfeasible { Error, FallbackSoft };

struct SolverConfig {
    ConstraintMode constraint_mode = ConstraintMode::Soft;
    double lambda = 1.0;   // soft-rule scale
    double tau_rel = 0.5;  // relation-confidence threshold
    OnInfeasible on_infeasible = OnInfeasible::FallbackSoft;
};

struct IlpProblem {
    std::size_t n = 0;
    std::vector<std::pair<double, double>> local;  // (score_true, score_false)
    std::vector<GroundedRule> rules;
    std::vector<std::vector<int>> exactly_one_blocks;  // hard in both modes
    ConstraintMode mode = ConstraintMode::Soft;
    double lambda = 1.0;
};

enum class SolveStatus { Optimal, Infeasible };

struct Solution {
    std::vector<bool> assignment;  // empty when Infeasible
    double objective = 0.0;
    SolveStatus status = SolveStatus::Optimal;
    bool fell_back = false;
};

// ---------------------------------------------------------------------------
// grounding and compilation

/// Hardens relation records into rules: argmax class wins, Neutral grounds
/// nothing, and surviving rules need confidence >= tau_rel. Weight is
/// lambda * confidence. Output is sorted by (src, dst) index.
inline std::vector<GroundedRule> ground_rules(const InferenceGroup& group,
                                              const std::unordered_map<std::string, double>& scores,
                                              const std::vector<RelationRecord>& relations,
                                              const SolverConfig& config) {
    std::unordered_map<std::string, int> index_of;
    index_of.reserve(group.choice_ids.size());
    for (std::size_t i = 0; i < group.choice_ids.size(); ++i) {
        index_of.emplace(group.choice_ids[i], static_cast<int>(i));
        if (!scores.count(group.choice_ids[i])) {
            throw SchemaError("no score for choice " + group.choice_ids[i] + " in group " +
                              group.group_id);
        }
    }

    std::unordered_set<std::string> seen_pairs;
    std::vector<GroundedRule> rules;
    for (const RelationRecord& rel : relations) {
        auto src_it = index_of.find(rel.src);
        auto dst_it = index_of.find(rel.dst);
        if (src_it == index_of.end() || dst_it == index_of.end()) {
            throw SchemaError("relation " + rel.src + " -> " + rel.dst +
                              " references a choice outside group " + group.group_id);
        }
        if (!seen_pairs.insert(rel.src + "\x1f" + rel.dst).second) {
            throw SchemaError("duplicate relation for pair " + rel.src + " -> " + rel.dst +
                              " in group " + group.group_id);
        }
        const RelationClass cls = rel.probs.argmax();
        if (cls == RelationClass::Neutral) continue;
        const double confidence = rel.probs.max_prob();
        if (confidence < config.tau_rel) continue;
        GroundedRule rule;
        rule.kind = cls == RelationClass::Entail ? RuleKind::Entail : RuleKind::Contradict;
        rule.src = src_it->second;
        rule.dst = dst_it->second;
        rule.weight = config.lambda * confidence;
        rules.push_back(rule);
    }
    std::sort(rules.begin(), rules.end(), [](const GroundedRule& a, const GroundedRule& b) {
        return a.src != b.src ? a.src < b.src : a.dst < b.dst;
    });
    return rules;
}

inline IlpProblem compile_problem(const InferenceGroup& group,
                                  const std::unordered_map<std::string, double>& scores,
                                  const std::vector<GroundedRule>& rules,
                                  const SolverConfig& config) {
    IlpProblem problem;
    problem.n = group.choice_ids.size();
    problem.mode = config.constraint_mode;
    problem.lambda = config.lambda;
    problem.local.reserve(problem.n);

    std::unordered_map<std::string, int> index_of;
    index_of.reserve(problem.n);
    for (std::size_t i = 0; i < problem.n; ++i) {
        const std::string& id = group.choice_ids[i];
        auto it = scores.find(id);
        if (it == scores.end()) {
            throw SchemaError("no score for choice " + id + " in group " + group.group_id);
        }
        if (!(it->second >= 0.0 && it->second <= 1.0)) {
            throw SchemaError("score for choice " + id + " outside [0, 1]");
        }
        problem.local.emplace_back(it->second, 1.0 - it->second);
        index_of.emplace(id, static_cast<int>(i));
    }

    for (const GroundedRule& rule : rules) {
        if (rule.src == rule.dst || rule.src < 0 || rule.dst < 0 ||
            rule.src >= static_cast<int>(problem.n) || rule.dst >= static_cast<int>(problem.n)) {
            throw DomainError("rule indices out of range for group " + group.group_id);
        }
        if (rule.weight < 0.0) throw DomainError("negative rule weight");
    }
    problem.rules = rules;

    for (const std::vector<std::string>& block : group.exactly_one_blocks) {
        std::vector<int> indices;
        indices.reserve(block.size());
        for (const std::string& id : block) {
            auto it = index_of.find(id);
            if (it == index_of.end()) {
                throw SchemaError("exactly-one block references unknown choice " + id);
            }
            indices.push_back(it->second);
        }
        std::sort(indices.begin(), indices.end());
        problem.exactly_one_blocks.push_back(std::move(indices));
    }
    return problem;
}

// ---------------------------------------------------------------------------
// objective and feasibility

/// Canonical objective: local terms in index order, then penalty terms in
/// rule order. Every solver scores candidate assignments through this exact
/// accumulation sequence so that ties compare identically.
inline double objective_of(const IlpProblem& problem, const std::vector<bool>& x) {
    if (x.size() != problem.n) throw DomainError("assignment length mismatch");
    double objective = 0.0;
    for (std::size_t j = 0; j < problem.n; ++j) {
        objective += x[j] ? problem.local[j].first : problem.local[j].second;
    }
    if (problem.mode == ConstraintMode::Soft) {
        for (const GroundedRule& rule : problem.rules) {
            const bool violated = rule.kind == RuleKind::Entail
                                      ? (x[rule.src] && !x[rule.dst])
                                      : (x[rule.src] && x[rule.dst]);
            if (violated) objective -= rule.weight;
        }
    }
    return objective;
}

inline bool satisfies_hard_constraints(const IlpProblem& problem, const std::vector<bool>& x) {
    for (const std::vector<int>& block : problem.exactly_one_blocks) {
        int trues = 0;
        for (int idx : block) trues += x[idx] ? 1 : 0;
        if (trues != 1) return false;
    }
    if (problem.mode == ConstraintMode::Hard) {
        for (const GroundedRule& rule : problem.rules) {
            if (rule.kind == RuleKind::Entail) {
                if (x[rule.src] && !x[rule.dst]) return false;
            } else {
                if (x[rule.src] && x[rule.dst]) return false;
            }
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// solvers

namespace detail {

constexpr double kPruneSlack = 1e-9;

inline void check_problem(const IlpProblem& problem) {
    if (problem.local.size() != problem.n) throw DomainError("local scores length mismatch");
    const int n = static_cast<int>(problem.n);
    for (const GroundedRule& rule : problem.rules) {
        if (rule.src < 0 || rule.dst < 0 || rule.src >= n || rule.dst >= n || rule.src == rule.dst) {
            throw DomainError("rule indices out of range");
        }
    }
    for (const std::vector<int>& block : problem.exactly_one_blocks) {
        for (int idx : block) {
            if (idx < 0 || idx >= n) throw DomainError("block index out of range");
        }
    }
}

struct BranchState {
    const IlpProblem* problem = nullptr;
    std::vector<bool> x;
    std::vector<double> suffix_best;             // best local sum over vars [k, n)
    std::vector<std::vector<int>> rules_at;      // rule indices whose later endpoint is k
    std::vector<std::vector<int>> blocks_at;     // block indices whose last member is k
    std::vector<int> block_of;                   // block index per var, -1 if none
    std::vector<int> block_trues;
    double prefix = 0.0;                         // exact value of assigned part
    double best_objective = 0.0;
    std::vector<bool> best_assignment;
    bool found = false;
};

inline void branch(BranchState& s, std::size_t k) {
    const IlpProblem& p = *s.problem;
    if (k == p.n) {
        if (!satisfies_hard_constraints(p, s.x)) return;
        const double objective = objective_of(p, s.x);
        if (!s.found || objective > s.best_objective) {
            s.found = true;
            s.best_objective = objective;
            s.best_assignment = s.x;
        }
        return;
    }
    if (s.found && s.prefix + s.suffix_best[k] <= s.best_objective - kPruneSlack) return;

    for (const bool value : {false, true}) {
        s.x[k] = value;

        // Exactly-one propagation.
        const int block = s.block_of[k];
        if (block >= 0) {
            if (value) {
                if (s.block_trues[block] == 1) continue;  // second true in a block
                ++s.block_trues[block];
            }
        }
        bool feasible = true;
        for (int bi : s.blocks_at[k]) {
            if (s.block_trues[bi] != 1) feasible = false;
        }

        double penalty = 0.0;
        if (feasible) {
            for (int ri : s.rules_at[k]) {
                const GroundedRule& rule = p.rules[ri];
                const bool violated = rule.kind == RuleKind::Entail
                                          ? (s.x[rule.src] && !s.x[rule.dst])
                                          : (s.x[rule.src] && s.x[rule.dst]);
                if (!violated) continue;
                if (p.mode == ConstraintMode::Hard) {
                    feasible = false;
                    break;
                }
                penalty += rule.weight;
            }
        }

        if (feasible) {
            const double local = value ? p.local[k].first : p.local[k].second;
            const double saved_prefix = s.prefix;
            s.prefix += local - penalty;
            branch(s, k + 1);
            s.prefix = saved_prefix;
        }
        if (block >= 0 && value) --s.block_trues[block];
    }
}

}  // namespace detail

/// Exhaustive reference solver; enumerates assignments in lexicographic
/// order (false < true) keeping the first strict improvement, which makes
/// the returned optimum the lexicographically smallest one.
inline Solution brute_force(const IlpProblem& problem) {
    if (problem.n > 25) throw DomainError("brute_force supports at most 25 variables");
    detail::check_problem(problem);
    const std::size_t n = problem.n;
    Solution best;
    best.status = SolveStatus::Infeasible;
    bool found = false;
    std::vector<bool> x(n, false);
    const std::uint64_t total = 1ULL << n;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        for (std::size_t j = 0; j < n; ++j) x[j] = ((mask >> (n - 1 - j)) & 1ULL) != 0;

        bool feasible = true;
        for (const std::vector<int>& block : problem.exactly_one_blocks) {
            int trues = 0;
            for (int idx : block) trues += x[idx] ? 1 : 0;
            if (trues != 1) feasible = false;
        }
        if (feasible && problem.mode == ConstraintMode::Hard) {
            for (const GroundedRule& rule : problem.rules) {
                const bool violated = rule.kind == RuleKind::Entail
                                          ? (x[rule.src] && !x[rule.dst])
                                          : (x[rule.src] && x[rule.dst]);
                if (violated) feasible = false;
            }
        }
        if (!feasible) continue;

        // Same accumulation sequence as objective_of, written out separately
        // so the oracle does not depend on the code it checks.
        double objective = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            objective += x[j] ? problem.local[j].first : problem.local[j].second;
        }
        if (problem.mode == ConstraintMode::Soft) {
            for (const GroundedRule& rule : problem.rules) {
                const bool violated = rule.kind == RuleKind::Entail
                                          ? (x[rule.src] && !x[rule.dst])
                                          : (x[rule.src] && x[rule.dst]);
                if (violated) objective -= rule.weight;
            }
        }

        if (!found || objective > best.objective) {
            found = true;
            best.status = SolveStatus::Optimal;
            best.objective = objective;
            best.assignment = x;
        }
    }
    if (!found) {
        best.assignment.clear();
        best.objective = 0.0;
    }
    return best;
}

/// Exact branch-and-bound. DFS assigns variables in index order trying false
/// before true, so the first optimum found is the lexicographically smallest;
/// later candidates replace it only on strict improvement. The bound adds the
/// best local score of every unassigned variable and optimistically assumes
/// zero further penalties; pruning keeps 1e-9 slack so floating-point noise
/// cannot discard a true optimum.
inline Solution solve(const IlpProblem& problem) {
    detail::check_problem(problem);
    const std::size_t n = problem.n;
    detail::BranchState state;
    state.problem = &problem;
    state.x.assign(n, false);

    state.suffix_best.assign(n + 1, 0.0);
    for (std::size_t k = n; k-- > 0;) {
        state.suffix_best[k] =
            state.suffix_best[k + 1] + std::max(problem.local[k].first, problem.local[k].second);
    }

    state.rules_at.assign(n, {});
    for (std::size_t r = 0; r < problem.rules.size(); ++r) {
        const GroundedRule& rule = problem.rules[r];
        state.rules_at[static_cast<std::size_t>(std::max(rule.src, rule.dst))].push_back(
            static_cast<int>(r));
    }

    state.blocks_at.assign(n, {});
    state.block_of.assign(n, -1);
    state.block_trues.assign(problem.exactly_one_blocks.size(), 0);
    for (std::size_t b = 0; b < problem.exactly_one_blocks.size(); ++b) {
        int last = -1;
        for (int idx : problem.exactly_one_blocks[b]) {
            if (state.block_of[idx] != -1) {
                throw DomainError("exactly-one blocks overlap at variable " + std::to_string(idx));
            }
            state.block_of[idx] = static_cast<int>(b);
            last = std::max(last, idx);
        }
        if (last >= 0) state.blocks_at[static_cast<std::size_t>(last)].push_back(static_cast<int>(b));
    }

    detail::branch(state, 0);

    Solution solution;
    if (!state.found) {
        solution.status = SolveStatus::Infeasible;
        return solution;
    }
    solution.status = SolveStatus::Optimal;
    solution.assignment = std::move(state.best_assignment);
    solution.objective = state.best_objective;
    return solution;
}

// ---------------------------------------------------------------------------
// dataset-level driver

struct InferReport {
    std::vector<PredictionRecord> predictions;  // sorted by choice_id
    std::size_t groups_total = 0;
    std::size_t groups_fell_back = 0;
};

namespace detail {

inline Solution solve_group(const InferenceGroup& group,
                            const std::unordered_map<std::string, double>& score_map,
                            const std::vector<RelationRecord>& group_relations,
                            const SolverConfig& config) {
    const std::vector<GroundedRule> rules = ground_rules(group, score_map, group_relations, config);
    const IlpProblem problem = compile_problem(group, score_map, rules, config);
    Solution solution = solve(problem);
    if (solution.status == SolveStatus::Infeasible) {
        if (config.on_infeasible == OnInfeasible::Error) {
            throw InfeasibleError("no feasible assignment for group " + group.group_id);
        }
        SolverConfig soft = config;
        soft.constraint_mode = ConstraintMode::Soft;
        const IlpProblem relaxed = compile_problem(group, score_map, rules, soft);
        solution = solve(relaxed);
        solution.fell_back = true;
        if (solution.status == SolveStatus::Infeasible) {
            // Unreachable for groups built here (blocks are disjoint), kept
            // as a guard for hand-built inputs.
            throw InfeasibleError("group " + group.group_id + " infeasible even in soft mode");
        }
    }
    return solution;
}

}  // namespace detail

/// Runs grounding, compilation, and solving over every group. Groups are
/// independent; thread_count > 1 solves them in parallel with identical
/// results. Scores must cover every choice of the dataset and relations must
/// name existing groups and in-group choices.
inline InferReport infer_dataset(const Dataset& dataset, const std::vector<ScoreRecord>& scores,
                                 const std::vector<RelationRecord>& relations, GroupingMode mode,
                                 const SolverConfig& config,
                                 ExactlyOnePolicy exactly_one = ExactlyOnePolicy::Auto,
                                 unsigned thread_count = 1) {
    const std::vector<InferenceGroup> groups = build_groups(dataset, mode, exactly_one);

    std::unordered_map<std::string, double> score_map;
    score_map.reserve(scores.size());
    for (const ScoreRecord& s : scores) {
        if (!score_map.emplace(s.choice_id, s.p_true).second) {
            throw SchemaError("duplicate score for choice " + s.choice_id);
        }
    }

    std::unordered_map<std::string, std::vector<RelationRecord>> relations_of;
    {
        std::unordered_set<std::string> group_ids;
        group_ids.reserve(groups.size());
        for (const InferenceGroup& g : groups) group_ids.insert(g.group_id);
        for (const RelationRecord& rel : relations) {
            if (!group_ids.count(rel.group_id)) {
                throw SchemaError("relation references unknown group " + rel.group_id);
            }
            relations_of[rel.group_id].push_back(rel);
        }
    }

    InferReport report;
    report.groups_total = groups.size();

    std::vector<Solution> solutions(groups.size());
    std::vector<std::exception_ptr> errors(groups.size());
    static const std::vector<RelationRecord> kNoRelations;

    auto run_one = [&](std::size_t gi) {
        const InferenceGroup& group = groups[gi];
        auto it = relations_of.find(group.group_id);
        const std::vector<RelationRecord>& group_relations =
            it == relations_of.end() ? kNoRelations : it->second;
        try {
            solutions[gi] = detail::solve_group(group, score_map, group_relations, config);
        } catch (...) {
            errors[gi] = std::current_exception();
        }
    };

    if (thread_count <= 1 || groups.size() <= 1) {
        for (std::size_t gi = 0; gi < groups.size(); ++gi) run_one(gi);
    } else {
        std::atomic<std::size_t> next{0};
        const unsigned workers =
            std::min<std::size_t>(thread_count, groups.size());
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t gi = next.fetch_add(1); gi < groups.size();
                     gi = next.fetch_add(1)) {
                    run_one(gi);
                }
            });
        }
        for (std::thread& t : pool) t.join();
    }

    // First error in group order, independent of thread scheduling.
    for (const std::exception_ptr& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const InferenceGroup& group = groups[gi];
        const Solution& solution = solutions[gi];
        if (solution.fell_back) ++report.groups_fell_back;
        for (std::size_t j = 0; j < group.choice_ids.size(); ++j) {
            PredictionRecord rec;
            rec.choice_id = group.choice_ids[j];
            rec.label = solution.assignment[j];
            rec.p_true = score_map.at(rec.choice_id);
            report.predictions.push_back(std::move(rec));
        }
    }
    std::sort(report.predictions.begin(), report.predictions.end(),
              [](const PredictionRecord& a, const PredictionRecord& b) {
                  return a.choice_id < b.choice_id;
              });
    return report;
}

/// Score thresholding without relational inference: true iff p_true > 0.5.
inline std::vector<PredictionRecord> threshold_predictions(const std::vector<ScoreRecord>& scores) {
    std::vector<PredictionRecord> predictions;
    predictions.reserve(scores.size());
    for (const ScoreRecord& s : scores) {
        predictions.push_back(PredictionRecord{s.choice_id, s.p_true > 0.5, s.p_true});
    }
    std::sort(predictions.begin(), predictions.end(),
              [](const PredictionRecord& a, const PredictionRecord& b) {
                  return a.choice_id < b.choice_id;
              });
    return predictions;
}

}  // namespace concord
