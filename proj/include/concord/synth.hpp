#pragma once

// Seeded synthetic benchmark generator. Datasets come with gold labels, a
// gold-consistent relation graph, and two controlled noise knobs: eps swaps
// the confident score range (a confidently wrong stand-alone answer), rho
// replaces a relation's class with one of the other two. This isolates how
// inference quality responds to relation accuracy.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "concord/codec.hpp"
#include "concord/errors.hpp"
#include "concord/inference.hpp"
#include "concord/metrics.hpp"
#include "concord/model.hpp"

namespace concord {

// ---------------------------------------------------------------------------
// seeded randomness

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent sub-stream seed so that each generation stage consumes its own
/// stream and stays reproducible when other stages change their draw counts.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(base + splitmix64(stream));
}

struct Rng {
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform in [0, 1).
    double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return unit() < p; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    std::size_t below(std::size_t n) {
        if (n == 0) throw DomainError("Rng::below: empty range");
        const auto pick = static_cast<std::size_t>(unit() * static_cast<double>(n));
        return pick < n ? pick : n - 1;
    }

  private:
    std::mt19937_64 gen_;
};

// ---------------------------------------------------------------------------
// configuration

struct SynthConfig {
    std::size_t groups = 1;               // paragraphs
    std::size_t questions_per_group = 1;
    std::size_t choices_per_question = 2;
    double p_true = 0.5;           // gold prior (WithinQuestion regime)
    double relation_density = 0.0;  // fraction of ordered pairs related
    double eps = 0.0;              // score noise: confident-error probability
    double delta = 0.1;            // score margin around 0.5, in (0, 0.5)
    double rho = 0.0;              // relation noise: class-replacement probability
    GroupingMode mode = GroupingMode::WithinQuestion;
    std::uint64_t seed = 0;

    bool operator==(const SynthConfig&) const = default;
};

inline void validate_synth_config(const SynthConfig& config) {
    if (config.groups == 0) throw DomainError("synth: groups must be positive");
    if (config.questions_per_group == 0) throw DomainError("synth: questions_per_group must be positive");
    if (config.choices_per_question == 0) throw DomainError("synth: choices_per_question must be positive");
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(config.p_true)) throw DomainError("synth: p_true outside [0, 1]");
    if (!in_unit(config.relation_density)) throw DomainError("synth: relation_density outside [0, 1]");
    if (!in_unit(config.eps)) throw DomainError("synth: eps outside [0, 1]");
    if (!in_unit(config.rho)) throw DomainError("synth: rho outside [0, 1]");
    if (!(config.delta > 0.0 && config.delta < 0.5)) throw DomainError("synth: delta outside (0, 0.5)");
}

struct SynthBundle {
    Dataset dataset;                             // gold on every choice
    std::vector<ScoreRecord> scores;             // eps/delta-perturbed
    std::vector<RelationRecord> relations;       // rho-perturbed
    std::vector<RelationRecord> true_relations;  // gold-consistent, one-hot
};

// ---------------------------------------------------------------------------
// noise models

/// Scores that agree with gold with probability 1 - eps: gold-true draws
/// uniform from [0.5 + delta, 1], gold-false from [0, 0.5 - delta]; with
/// probability eps the two ranges swap (a confident error). Every choice
/// needs a gold label. Output follows input order.
inline std::vector<ScoreRecord> perturb_scores(const std::vector<Choice>& choices, double eps,
                                               double delta, std::uint64_t seed) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw DomainError("perturb_scores: eps outside [0, 1]");
    if (!(delta > 0.0 && delta < 0.5)) throw DomainError("perturb_scores: delta outside (0, 0.5)");
    Rng rng(seed);
    std::vector<ScoreRecord> scores;
    scores.reserve(choices.size());
    for (const Choice& c : choices) {
        if (!c.gold.has_value()) throw SchemaError("perturb_scores: no gold label on " + c.id);
        const bool swapped = rng.bernoulli(eps);
        const bool high_range = *c.gold != swapped;
        const double p_true =
            high_range ? rng.uniform(0.5 + delta, 1.0) : rng.uniform(0.0, 0.5 - delta);
        scores.push_back(ScoreRecord{c.id, p_true});
    }
    return scores;
}

/// Each record independently replaced, with probability rho, by a one-hot of
/// one of the two classes other than its argmax.
inline std::vector<RelationRecord> perturb_relations(const std::vector<RelationRecord>& relations,
                                                     double rho, std::uint64_t seed) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("perturb_relations: rho outside [0, 1]");
    Rng rng(seed);
    std::vector<RelationRecord> out = relations;
    for (RelationRecord& rec : out) {
        if (!rng.bernoulli(rho)) continue;
        const RelationClass original = rec.probs.argmax();
        RelationClass others[2];
        switch (original) {
            case RelationClass::Entail:
                others[0] = RelationClass::Contradict;
                others[1] = RelationClass::Neutral;
                break;
            case RelationClass::Contradict:
                others[0] = RelationClass::Entail;
                others[1] = RelationClass::Neutral;
                break;
            case RelationClass::Neutral:
                others[0] = RelationClass::Entail;
                others[1] = RelationClass::Contradict;
                break;
        }
        rec.probs = RelationProbs::one_hot(others[rng.below(2)]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// generation

/// One paragraph per group, `questions_per_group` questions each. Gold is
/// drawn per choice from p_true in the WithinQuestion regime; CrossQuestion
/// gives each question exactly one gold-true choice. True relations are
/// sampled per ordered in-group pair at relation_density, restricted to
/// classes the gold assignment cannot violate: Entail is allowed unless gold
/// is (true, false), Contradict unless gold is (true, true); when both remain
/// the pick is uniform. Each stage consumes its own seed stream.
inline SynthBundle generate(const SynthConfig& config) {
    validate_synth_config(config);
    SynthBundle bundle;

    Rng gold_rng(derive_seed(config.seed, 0));
    for (std::size_t g = 0; g < config.groups; ++g) {
        const std::string pid = "p" + std::to_string(g);
        bundle.dataset.paragraphs.push_back(Paragraph{pid, "synthetic paragraph " + std::to_string(g)});
        for (std::size_t q = 0; q < config.questions_per_group; ++q) {
            const std::string qid = pid + "-q" + std::to_string(q);
            bundle.dataset.questions.push_back(
                Question{qid, pid, "synthetic question " + std::to_string(q)});
            std::size_t true_index = 0;
            if (config.mode == GroupingMode::CrossQuestion) {
                true_index = gold_rng.below(config.choices_per_question);
            }
            for (std::size_t c = 0; c < config.choices_per_question; ++c) {
                const std::string cid = qid + "-c" + std::to_string(c);
                const bool gold = config.mode == GroupingMode::CrossQuestion
                                      ? c == true_index
                                      : gold_rng.bernoulli(config.p_true);
                bundle.dataset.choices.push_back(
                    Choice{cid, qid, "synthetic choice " + std::to_string(c), gold});
            }
        }
    }

    bundle.scores =
        perturb_scores(bundle.dataset.choices, config.eps, config.delta, derive_seed(config.seed, 1));

    // Group membership in generation order: per question when WithinQuestion,
    // per paragraph when CrossQuestion.
    std::vector<std::pair<std::string, std::vector<const Choice*>>> units;
    {
        const std::size_t per_group = config.questions_per_group * config.choices_per_question;
        for (std::size_t g = 0; g < config.groups; ++g) {
            const std::size_t base = g * per_group;
            if (config.mode == GroupingMode::WithinQuestion) {
                for (std::size_t q = 0; q < config.questions_per_group; ++q) {
                    std::vector<const Choice*> members;
                    members.reserve(config.choices_per_question);
                    for (std::size_t c = 0; c < config.choices_per_question; ++c) {
                        members.push_back(
                            &bundle.dataset.choices[base + q * config.choices_per_question + c]);
                    }
                    units.emplace_back(members.front()->question_id, std::move(members));
                }
            } else {
                std::vector<const Choice*> members;
                members.reserve(per_group);
                for (std::size_t i = 0; i < per_group; ++i) {
                    members.push_back(&bundle.dataset.choices[base + i]);
                }
                units.emplace_back(bundle.dataset.paragraphs[g].id, std::move(members));
            }
        }
    }

    Rng rel_rng(derive_seed(config.seed, 2));
    for (const auto& [group_id, members] : units) {
        for (const Choice* src : members) {
            for (const Choice* dst : members) {
                if (src == dst) continue;
                if (!rel_rng.bernoulli(config.relation_density)) continue;
                const bool gold_src = *src->gold;
                const bool gold_dst = *dst->gold;
                RelationClass cls;
                if (gold_src && gold_dst) {
                    cls = RelationClass::Entail;
                } else if (gold_src && !gold_dst) {
                    cls = RelationClass::Contradict;
                } else {
                    cls = rel_rng.below(2) == 0 ? RelationClass::Entail : RelationClass::Contradict;
                }
                RelationRecord rec;
                rec.group_id = group_id;
                rec.src = src->id;
                rec.dst = dst->id;
                rec.probs = RelationProbs::one_hot(cls);
                bundle.true_relations.push_back(std::move(rec));
            }
        }
    }

    bundle.relations = perturb_relations(bundle.true_relations, config.rho, derive_seed(config.seed, 3));
    return bundle;
}

// ---------------------------------------------------------------------------
// experiment driver

struct ExperimentReport {
    SynthConfig config;
    std::size_t groups_total = 0;
    std::size_t groups_fell_back = 0;
    EvalReport baseline;   // thresholded scores
    EvalReport inference;  // relational inference
    std::vector<PredictionRecord> baseline_predictions;
    std::vector<PredictionRecord> inferred_predictions;
};

/// Generates a bundle, then evaluates score thresholding against relational
/// inference on the same scores and (noisy) relations. Exactly-one blocks are
/// left off so that with no usable relations the two pipelines coincide
/// exactly.
inline ExperimentReport run_experiment(const SynthConfig& config, const SolverConfig& solver,
                                       unsigned thread_count = 1) {
    const SynthBundle bundle = generate(config);
    ExperimentReport report;
    report.config = config;
    report.baseline_predictions = threshold_predictions(bundle.scores);
    InferReport inferred = infer_dataset(bundle.dataset, bundle.scores, bundle.relations,
                                         config.mode, solver, ExactlyOnePolicy::Off, thread_count);
    report.groups_total = inferred.groups_total;
    report.groups_fell_back = inferred.groups_fell_back;
    report.baseline = build_eval_report(bundle.dataset, report.baseline_predictions);
    report.inference = build_eval_report(bundle.dataset, inferred.predictions);
    report.inferred_predictions = std::move(inferred.predictions);
    return report;
}

// ---------------------------------------------------------------------------
// rendering and file emission

inline std::string render_synth_config(const SynthConfig& config) {
    std::string out = "{";
    out += "\"groups\": " + std::to_string(config.groups);
    out += ", \"questions_per_group\": " + std::to_string(config.questions_per_group);
    out += ", \"choices_per_question\": " + std::to_string(config.choices_per_question);
    out += ", \"p_true\": " + fmt_real(config.p_true);
    out += ", \"relation_density\": " + fmt_real(config.relation_density);
    out += ", \"eps\": " + fmt_real(config.eps);
    out += ", \"delta\": " + fmt_real(config.delta);
    out += ", \"rho\": " + fmt_real(config.rho);
    out += std::string(", \"mode\": \"") + to_string(config.mode) + "\"";
    out += ", \"seed\": " + std::to_string(config.seed);
    out += "}";
    return out;
}

inline SynthConfig parse_synth_config(const std::string& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(detail::read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path + ": invalid JSON: " + e.what());
    }
    if (!doc.is_object()) throw SchemaError(path + ": config must be an object");
    SynthConfig config;
    for (const auto& [key, value] : doc.items()) {
        auto count = [&](const char* name) -> std::size_t {
            if (!value.is_number_unsigned()) {
                throw SchemaError(path + ": " + name + " must be a non-negative integer");
            }
            return value.get<std::size_t>();
        };
        auto real = [&](const char* name) -> double {
            if (!value.is_number()) throw SchemaError(path + ": " + name + " must be a number");
            return value.get<double>();
        };
        if (key == "groups") {
            config.groups = count("groups");
        } else if (key == "questions_per_group") {
            config.questions_per_group = count("questions_per_group");
        } else if (key == "choices_per_question") {
            config.choices_per_question = count("choices_per_question");
        } else if (key == "p_true") {
            config.p_true = real("p_true");
        } else if (key == "relation_density") {
            config.relation_density = real("relation_density");
        } else if (key == "eps") {
            config.eps = real("eps");
        } else if (key == "delta") {
            config.delta = real("delta");
        } else if (key == "rho") {
            config.rho = real("rho");
        } else if (key == "mode") {
            if (!value.is_string()) throw SchemaError(path + ": mode must be a string");
            const std::string mode = value.get<std::string>();
            if (mode == "within-question") {
                config.mode = GroupingMode::WithinQuestion;
            } else if (mode == "cross-question") {
                config.mode = GroupingMode::CrossQuestion;
            } else {
                throw SchemaError(path + ": unknown mode: " + mode);
            }
        } else if (key == "seed") {
            config.seed = count("seed");
        } else {
            throw SchemaError(path + ": unknown config key: " + key);
        }
    }
    return config;
}

/// dataset.json, scores.jsonl, relations.jsonl, true_relations.jsonl, and the
/// config echo config.json, all inside `dir` (created if needed).
inline void write_bundle(const SynthBundle& bundle, const SynthConfig& config,
                         const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory: " + dir + ": " + ec.message());
    const std::filesystem::path base(dir);
    write_dataset(bundle.dataset, (base / "dataset.json").string());
    write_scores(bundle.scores, (base / "scores.jsonl").string());
    write_relations(bundle.relations, (base / "relations.jsonl").string());
    write_relations(bundle.true_relations, (base / "true_relations.jsonl").string());
    detail::write_text_file((base / "config.json").string(), render_synth_config(config) + "\n");
}

inline std::string render_experiment_report(const ExperimentReport& report) {
    std::string out = "{\n";
    out += "  \"config\": " + render_synth_config(report.config) + ",\n";
    out += "  \"groups_total\": " + std::to_string(report.groups_total) + ",\n";
    out += "  \"groups_fell_back\": " + std::to_string(report.groups_fell_back) + ",\n";
    out += "  \"baseline\": " + render_eval_report(report.baseline) + ",\n";
    out += "  \"inference\": " + render_eval_report(report.inference) + "\n";
    out += "}\n";
    return out;
}

}  // namespace concord
