#pragma once

// Evaluation: exact-match at k errors (EM0, EM1, ...), choice- and
// question-level accuracy, and McNemar's chi-squared test for comparing two
// prediction sets on the same choices.
//
// All percentages are computed at full precision; rounding to two decimals
// happens only when a report is rendered.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "concord/codec.hpp"
#include "concord/errors.hpp"
#include "concord/model.hpp"

namespace concord {

/// Round half up to 2 decimals; used only at reporting boundaries.
inline double round_half_up_2(double x) { return std::floor(x * 100.0 + 0.5) / 100.0; }

struct McNemarResult {
    std::size_t b = 0;  // first model correct, second wrong
    std::size_t c = 0;  // first model wrong, second correct
    double statistic = 0.0;
    double p_value = 1.0;
    bool corrected = true;
};

struct EvalReport {
    std::map<int, double> em_by_k;  // k -> percentage, full precision
    double choice_accuracy = 0.0;
    std::optional<double> question_accuracy;  // present only in exactly-one regimes
    std::size_t question_count = 0;           // questions with >= 1 gold-labeled choice
    std::size_t choice_count = 0;             // gold-labeled choices evaluated
    std::optional<McNemarResult> mcnemar;
    std::vector<std::string> warnings;

    double em0() const { return em_by_k.count(0) ? em_by_k.at(0) : 0.0; }
    double em1() const { return em_by_k.count(1) ? em_by_k.at(1) : 0.0; }
};

enum class AccuracyLevel { Choice, Question };

namespace detail {

struct ChoiceEval {
    std::string question_id;
    bool gold = false;
    bool predicted = false;
};

struct EvalIndex {
    // Gold-labeled choices with their predictions, keyed by choice id.
    std::map<std::string, ChoiceEval> evaluated;
    // question id -> ids of its gold-labeled choices
    std::map<std::string, std::vector<std::string>> by_question;
    std::vector<std::string> warnings;
};

/// Joins predictions against the dataset's gold labels. Predictions must
/// cover every gold-labeled choice; predictions on unlabeled choices are
/// excluded with a warning; predictions on unknown choices are errors.
inline EvalIndex build_eval_index(const Dataset& dataset,
                                  const std::vector<PredictionRecord>& predictions) {
    std::unordered_map<std::string, const Choice*> choice_of;
    choice_of.reserve(dataset.choices.size());
    for (const Choice& c : dataset.choices) choice_of.emplace(c.id, &c);

    std::unordered_map<std::string, bool> predicted;
    predicted.reserve(predictions.size());
    for (const PredictionRecord& p : predictions) {
        auto it = choice_of.find(p.choice_id);
        if (it == choice_of.end()) {
            throw SchemaError("prediction for unknown choice " + p.choice_id);
        }
        if (!predicted.emplace(p.choice_id, p.label).second) {
            throw SchemaError("duplicate prediction for choice " + p.choice_id);
        }
    }

    EvalIndex index;
    for (const Choice& c : dataset.choices) {
        auto pit = predicted.find(c.id);
        if (!c.gold.has_value()) {
            if (pit != predicted.end()) {
                index.warnings.push_back("choice " + c.id +
                                         " has a prediction but no gold label; excluded");
            }
            continue;
        }
        if (pit == predicted.end()) {
            throw SchemaError("no prediction for gold-labeled choice " + c.id);
        }
        index.evaluated.emplace(c.id, ChoiceEval{c.question_id, *c.gold, pit->second});
        index.by_question[c.question_id].push_back(c.id);
    }
    return index;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// exact match and accuracy

/// Percentage of questions whose gold-labeled choices have at most k
/// misclassifications, over questions with at least one gold-labeled choice.
/// No qualifying questions means the bound holds vacuously: 100.
inline double exact_match(const Dataset& dataset, const std::vector<PredictionRecord>& predictions,
                          int k, std::vector<std::string>* warnings = nullptr) {
    if (k < 0) throw DomainError("exact_match: k must be non-negative");
    const detail::EvalIndex index = detail::build_eval_index(dataset, predictions);
    if (warnings) {
        warnings->insert(warnings->end(), index.warnings.begin(), index.warnings.end());
    }
    if (index.by_question.empty()) return 100.0;
    std::size_t within = 0;
    for (const auto& [question_id, choice_ids] : index.by_question) {
        int errors = 0;
        for (const std::string& id : choice_ids) {
            const detail::ChoiceEval& e = index.evaluated.at(id);
            if (e.predicted != e.gold) ++errors;
        }
        if (errors <= k) ++within;
    }
    return 100.0 * static_cast<double>(within) / static_cast<double>(index.by_question.size());
}

inline double accuracy(const Dataset& dataset, const std::vector<PredictionRecord>& predictions,
                       AccuracyLevel level, std::vector<std::string>* warnings = nullptr) {
    const detail::EvalIndex index = detail::build_eval_index(dataset, predictions);
    if (warnings) {
        warnings->insert(warnings->end(), index.warnings.begin(), index.warnings.end());
    }
    if (level == AccuracyLevel::Choice) {
        if (index.evaluated.empty()) return 100.0;
        std::size_t correct = 0;
        for (const auto& [id, e] : index.evaluated) {
            if (e.predicted == e.gold) ++correct;
        }
        return 100.0 * static_cast<double>(correct) / static_cast<double>(index.evaluated.size());
    }

    // Question level: every choice must carry gold and exactly one per
    // question is true; credit requires picking exactly that one.
    for (const Choice& c : dataset.choices) {
        if (!c.gold.has_value()) {
            throw DomainError("question-level accuracy needs gold on every choice; missing on " +
                              c.id);
        }
    }
    if (index.by_question.empty()) return 100.0;
    std::size_t correct = 0;
    for (const auto& [question_id, choice_ids] : index.by_question) {
        int gold_true = 0;
        int predicted_true = 0;
        bool match = false;
        for (const std::string& id : choice_ids) {
            const detail::ChoiceEval& e = index.evaluated.at(id);
            if (e.gold) ++gold_true;
            if (e.predicted) ++predicted_true;
            if (e.gold && e.predicted) match = true;
        }
        if (gold_true != 1) {
            throw DomainError("question " + question_id + " has " + std::to_string(gold_true) +
                              " gold-true choices; question-level accuracy needs exactly 1");
        }
        if (predicted_true == 1 && match) ++correct;
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(index.by_question.size());
}

// ---------------------------------------------------------------------------
// McNemar

/// Paired comparison over per-choice correctness on the gold-labeled choices.
/// With the continuity correction the statistic is (|b-c|-1)^2/(b+c); without
/// it (b-c)^2/(b+c); b+c = 0 gives statistic 0 and p 1. The p-value is the
/// chi-squared (1 dof) survival function erfc(sqrt(statistic/2)).
inline McNemarResult mcnemar(const Dataset& dataset, const std::vector<PredictionRecord>& preds_a,
                             const std::vector<PredictionRecord>& preds_b, bool corrected = true) {
    const detail::EvalIndex a = detail::build_eval_index(dataset, preds_a);
    const detail::EvalIndex b = detail::build_eval_index(dataset, preds_b);
    if (a.evaluated.size() != b.evaluated.size()) {
        throw SchemaError("prediction sets cover different choices");
    }

    McNemarResult result;
    result.corrected = corrected;
    for (const auto& [id, ea] : a.evaluated) {
        const detail::ChoiceEval& eb = b.evaluated.at(id);  // same key set by construction
        const bool a_correct = ea.predicted == ea.gold;
        const bool b_correct = eb.predicted == eb.gold;
        if (a_correct && !b_correct) ++result.b;
        if (!a_correct && b_correct) ++result.c;
    }

    const double discordant = static_cast<double>(result.b + result.c);
    if (discordant == 0.0) {
        result.statistic = 0.0;
        result.p_value = 1.0;
        return result;
    }
    const double diff = static_cast<double>(result.b) - static_cast<double>(result.c);
    const double numerator =
        corrected ? (std::fabs(diff) - 1.0) * (std::fabs(diff) - 1.0) : diff * diff;
    result.statistic = numerator / discordant;
    result.p_value = std::erfc(std::sqrt(result.statistic / 2.0));
    return result;
}

inline McNemarResult mcnemar_from_counts(std::size_t b, std::size_t c, bool corrected = true) {
    McNemarResult result;
    result.corrected = corrected;
    result.b = b;
    result.c = c;
    const double discordant = static_cast<double>(b + c);
    if (discordant == 0.0) return result;
    const double diff = static_cast<double>(b) - static_cast<double>(c);
    const double numerator =
        corrected ? (std::fabs(diff) - 1.0) * (std::fabs(diff) - 1.0) : diff * diff;
    result.statistic = numerator / discordant;
    result.p_value = std::erfc(std::sqrt(result.statistic / 2.0));
    return result;
}

// ---------------------------------------------------------------------------
// report assembly and rendering

/// Computes EM0/EM1, choice accuracy, question accuracy when the dataset is
/// an exactly-one regime (all golds present, one true per question), and
/// McNemar when a second prediction set is supplied.
inline EvalReport build_eval_report(const Dataset& dataset,
                                    const std::vector<PredictionRecord>& predictions,
                                    const std::vector<PredictionRecord>* second = nullptr,
                                    bool corrected = true) {
    EvalReport report;
    report.em_by_k[0] = exact_match(dataset, predictions, 0, &report.warnings);
    report.em_by_k[1] = exact_match(dataset, predictions, 1);
    report.choice_accuracy = accuracy(dataset, predictions, AccuracyLevel::Choice);

    const detail::EvalIndex index = detail::build_eval_index(dataset, predictions);
    report.question_count = index.by_question.size();
    report.choice_count = index.evaluated.size();

    bool exactly_one_regime = !dataset.choices.empty();
    for (const Choice& c : dataset.choices) {
        if (!c.gold.has_value()) {
            exactly_one_regime = false;
            break;
        }
    }
    if (exactly_one_regime) {
        for (const auto& [question_id, choice_ids] : index.by_question) {
            int gold_true = 0;
            for (const std::string& id : choice_ids) {
                if (index.evaluated.at(id).gold) ++gold_true;
            }
            if (gold_true != 1) {
                exactly_one_regime = false;
                break;
            }
        }
    }
    if (exactly_one_regime) {
        report.question_accuracy = accuracy(dataset, predictions, AccuracyLevel::Question);
    }

    if (second) {
        report.mcnemar = mcnemar(dataset, predictions, *second, corrected);
    }
    return report;
}

namespace detail {

inline std::string fmt_percent(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", round_half_up_2(value));
    return buf;
}

}  // namespace detail

/// Single-line JSON object; percentages at 2 decimals, test statistics at
/// full precision. Warnings are not part of the rendered report.
inline std::string render_eval_report(const EvalReport& report) {
    std::string out = "{";
    out += "\"question_count\": " + std::to_string(report.question_count);
    out += ", \"choice_count\": " + std::to_string(report.choice_count);
    for (const auto& [k, value] : report.em_by_k) {
        out += ", \"em" + std::to_string(k) + "\": " + detail::fmt_percent(value);
    }
    out += ", \"choice_accuracy\": " + detail::fmt_percent(report.choice_accuracy);
    out += ", \"question_accuracy\": ";
    out += report.question_accuracy.has_value() ? detail::fmt_percent(*report.question_accuracy)
                                                : "null";
    out += ", \"mcnemar\": ";
    if (report.mcnemar.has_value()) {
        const McNemarResult& m = *report.mcnemar;
        out += "{\"b\": " + std::to_string(m.b) + ", \"c\": " + std::to_string(m.c) +
               ", \"corrected\": " + (m.corrected ? "true" : "false") +
               ", \"statistic\": " + fmt_real(m.statistic) +
               ", \"p_value\": " + fmt_real(m.p_value) + "}";
    } else {
        out += "null";
    }
    out += "}";
    return out;
}

}  // namespace concord
