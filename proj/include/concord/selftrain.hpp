#pragma once

// Self-training label generation: turn predicted relations plus gold choice
// labels into entailment/contradiction pair labels, or derive the labels from
// gold alone, and measure how well predicted relations match them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "concord/codec.hpp"
#include "concord/errors.hpp"
#include "concord/model.hpp"

namespace concord {

enum class PairLabel { Entailment, Contradiction };

inline const char* to_string(PairLabel label) {
    return label == PairLabel::Entailment ? "entailment" : "contradiction";
}

struct LabeledPair {
    std::string src;
    std::string dst;
    PairLabel label = PairLabel::Entailment;

    bool operator==(const LabeledPair&) const = default;
};

namespace detail {

inline bool pair_order(const LabeledPair& a, const LabeledPair& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
}

inline bool gold_at(const std::unordered_map<std::string, bool>& gold, const std::string& id) {
    auto it = gold.find(id);
    if (it == gold.end()) throw SchemaError("no gold label for choice " + id);
    return it->second;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// label generation

/// Keeps a predicted relation as a training label only when gold agrees with
/// it: entail needs gold (true, true), contradict needs gold (true, false).
/// Everything else is discarded. Output is sorted by (src, dst).
inline std::vector<LabeledPair> filter_labels(const std::vector<RelationRecord>& predicted,
                                              const std::unordered_map<std::string, bool>& gold) {
    std::vector<LabeledPair> pairs;
    for (const RelationRecord& rel : predicted) {
        const bool gold_src = detail::gold_at(gold, rel.src);
        const bool gold_dst = detail::gold_at(gold, rel.dst);
        const RelationClass cls = rel.probs.argmax();
        if (cls == RelationClass::Entail && gold_src && gold_dst) {
            pairs.push_back(LabeledPair{rel.src, rel.dst, PairLabel::Entailment});
        } else if (cls == RelationClass::Contradict && gold_src && !gold_dst) {
            pairs.push_back(LabeledPair{rel.src, rel.dst, PairLabel::Contradiction});
        }
    }
    std::sort(pairs.begin(), pairs.end(), detail::pair_order);
    return pairs;
}

/// Labels every ordered in-group pair from gold alone: (true, true) is
/// entailment, (true, false) is contradiction, gold-false sources emit
/// nothing. Output is sorted by (src, dst).
inline std::vector<LabeledPair> gold_pairs(const Dataset& dataset, GroupingMode mode) {
    const std::vector<InferenceGroup> groups = build_groups(dataset, mode, ExactlyOnePolicy::Off);
    std::unordered_map<std::string, bool> gold;
    gold.reserve(dataset.choices.size());
    for (const Choice& c : dataset.choices) {
        if (c.gold.has_value()) gold.emplace(c.id, *c.gold);
    }

    std::vector<LabeledPair> pairs;
    for (const InferenceGroup& group : groups) {
        for (const std::string& src : group.choice_ids) {
            if (!detail::gold_at(gold, src)) continue;
            for (const std::string& dst : group.choice_ids) {
                if (src == dst) continue;
                pairs.push_back(LabeledPair{
                    src, dst,
                    detail::gold_at(gold, dst) ? PairLabel::Entailment : PairLabel::Contradiction});
            }
        }
    }
    std::sort(pairs.begin(), pairs.end(), detail::pair_order);
    return pairs;
}

// ---------------------------------------------------------------------------
// relation accuracy

struct RelationAccuracyReport {
    std::size_t entail_total = 0;
    std::size_t entail_correct = 0;
    std::size_t contradict_total = 0;
    std::size_t contradict_correct = 0;
    // Percentages; 0 with the matching defined flag false when the
    // denominator is empty.
    double entail_acc = 0.0;
    double contradict_acc = 0.0;
    double overall_acc = 0.0;
    bool entail_defined = false;
    bool contradict_defined = false;
    bool overall_defined = false;
};

/// Accuracy of predicted relation classes against labeled pairs, per class
/// and overall. Every labeled pair must have a prediction for its (src, dst).
inline RelationAccuracyReport relation_accuracy(const std::vector<RelationRecord>& predicted,
                                                const std::vector<LabeledPair>& labeled) {
    std::map<std::pair<std::string, std::string>, RelationClass> predicted_class;
    for (const RelationRecord& rel : predicted) {
        auto key = std::make_pair(rel.src, rel.dst);
        if (!predicted_class.emplace(key, rel.probs.argmax()).second) {
            throw SchemaError("duplicate prediction for pair " + rel.src + " -> " + rel.dst);
        }
    }

    RelationAccuracyReport report;
    for (const LabeledPair& pair : labeled) {
        auto it = predicted_class.find(std::make_pair(pair.src, pair.dst));
        if (it == predicted_class.end()) {
            throw SchemaError("no predicted relation for labeled pair " + pair.src + " -> " +
                              pair.dst);
        }
        if (pair.label == PairLabel::Entailment) {
            ++report.entail_total;
            if (it->second == RelationClass::Entail) ++report.entail_correct;
        } else {
            ++report.contradict_total;
            if (it->second == RelationClass::Contradict) ++report.contradict_correct;
        }
    }

    if (report.entail_total > 0) {
        report.entail_defined = true;
        report.entail_acc =
            100.0 * static_cast<double>(report.entail_correct) / static_cast<double>(report.entail_total);
    }
    if (report.contradict_total > 0) {
        report.contradict_defined = true;
        report.contradict_acc = 100.0 * static_cast<double>(report.contradict_correct) /
                                static_cast<double>(report.contradict_total);
    }
    const std::size_t total = report.entail_total + report.contradict_total;
    if (total > 0) {
        report.overall_defined = true;
        report.overall_acc = 100.0 *
                             static_cast<double>(report.entail_correct + report.contradict_correct) /
                             static_cast<double>(total);
    }
    return report;
}

// ---------------------------------------------------------------------------
// labeled-pair interchange

inline std::vector<LabeledPair> read_labeled_pairs(const std::string& path,
                                                   CodecStats* stats = nullptr) {
    static const std::unordered_set<std::string> known{"src", "dst", "label"};
    std::vector<LabeledPair> pairs;
    std::set<std::pair<std::string, std::string>> seen;
    detail::for_each_line(path, [&](std::size_t line_no, const std::string& line) {
        const nlohmann::json doc = detail::parse_record_line(path, line_no, line);
        LabeledPair pair;
        pair.src = detail::require_string(doc, "src", path, line_no);
        pair.dst = detail::require_string(doc, "dst", path, line_no);
        if (pair.src.empty() || pair.dst.empty()) detail::line_error(path, line_no, "empty pair id");
        const std::string label = detail::require_string(doc, "label", path, line_no);
        if (label == "entailment") {
            pair.label = PairLabel::Entailment;
        } else if (label == "contradiction") {
            pair.label = PairLabel::Contradiction;
        } else {
            detail::line_error(path, line_no, "unknown label: " + label);
        }
        if (pair.src == pair.dst) detail::line_error(path, line_no, "src equals dst: " + pair.src);
        if (!seen.emplace(pair.src, pair.dst).second) {
            detail::line_error(path, line_no, "duplicate pair: " + pair.src + " -> " + pair.dst);
        }
        detail::count_unknown_fields(doc, known, stats);
        pairs.push_back(std::move(pair));
    });
    return pairs;
}

inline std::string render_labeled_pair_line(const LabeledPair& pair) {
    return "{\"src\": " + json_quote(pair.src) + ", \"dst\": " + json_quote(pair.dst) +
           ", \"label\": \"" + to_string(pair.label) + "\"}";
}

inline void write_labeled_pairs(const std::vector<LabeledPair>& pairs, const std::string& path) {
    std::vector<LabeledPair> sorted = pairs;
    std::sort(sorted.begin(), sorted.end(), detail::pair_order);
    std::string out;
    std::set<std::pair<std::string, std::string>> seen;
    for (const LabeledPair& pair : sorted) {
        if (pair.src.empty() || pair.dst.empty()) throw SchemaError("empty pair id");
        if (pair.src == pair.dst) throw SchemaError("src equals dst: " + pair.src);
        if (!seen.emplace(pair.src, pair.dst).second) {
            throw SchemaError("duplicate pair: " + pair.src + " -> " + pair.dst);
        }
        out += render_labeled_pair_line(pair);
        out += '\n';
    }
    detail::write_text_file(path, out);
}

/// Fixed-order JSON rendering of the accuracy report; percentages rounded to
/// two decimals at this boundary only.
inline std::string render_relation_accuracy(const RelationAccuracyReport& report) {
    auto section = [](const char* name, std::size_t correct, std::size_t total, double acc,
                      bool defined) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.2f",
                      std::floor(acc * 100.0 + 0.5) / 100.0);
        std::string s = "  \"";
        s += name;
        s += "\": {\"correct\": " + std::to_string(correct) + ", \"total\": " + std::to_string(total) +
             ", \"accuracy\": " + buf + ", \"defined\": " + (defined ? "true" : "false") + "}";
        return s;
    };
    std::string out = "{\n";
    out += section("entail", report.entail_correct, report.entail_total, report.entail_acc,
                   report.entail_defined) +
           ",\n";
    out += section("contradict", report.contradict_correct, report.contradict_total,
                   report.contradict_acc, report.contradict_defined) +
           ",\n";
    out += section("overall", report.entail_correct + report.contradict_correct,
                   report.entail_total + report.contradict_total, report.overall_acc,
                   report.overall_defined) +
           "\n}\n";
    return out;
}

}  // namespace concord
