#pragma once

// Deterministic lexical relation scorer. A dependency-free stand-in for a
// trained NLI system: high token overlap with matching negation parity reads
// as entailment, high overlap with flipped parity as contradiction, low
// overlap as neutral.

#include <cstddef>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "concord/codec.hpp"
#include "concord/errors.hpp"
#include "concord/model.hpp"

namespace concord {

/// Lowercased maximal alphanumeric runs (ASCII). "Don't go!" tokenizes to
/// {"don", "t", "go"}, splitting contractions at the apostrophe.
inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char raw : text) {
        const unsigned char c = static_cast<unsigned char>(raw);
        const bool alnum = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
        if (alnum) {
            current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                                   : static_cast<char>(c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

/// Jaccard similarity of the token sets; 0 when both are empty.
inline double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const std::set<std::string> sa(a.begin(), a.end());
    const std::set<std::string> sb(b.begin(), b.end());
    std::size_t inter = 0;
    for (const std::string& t : sa) inter += sb.count(t);
    const std::size_t uni = sa.size() + sb.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Parity of negation-token occurrences over the token list. "t" catches the
/// contracted tail of "don't"/"can't" after tokenization.
inline bool negation_parity(const std::vector<std::string>& tokens) {
    static const std::set<std::string> kNegations = {"not",     "no",      "never", "none",
                                                     "nobody",  "nothing", "neither", "nor",
                                                     "cannot",  "t"};
    std::size_t count = 0;
    for (const std::string& t : tokens) count += kNegations.count(t);
    return count % 2 == 1;
}

/// Relation probabilities for one ordered text pair. Symmetric in its
/// arguments: both orders of the same pair score identically.
inline RelationProbs relate_texts(const std::string& src_text, const std::string& dst_text,
                                  double overlap_threshold = 0.5) {
    const std::vector<std::string> a = tokenize(src_text);
    const std::vector<std::string> b = tokenize(dst_text);
    const double j = jaccard(a, b);
    if (j >= overlap_threshold) {
        if (negation_parity(a) == negation_parity(b)) {
            return RelationProbs{j, (1.0 - j) / 2.0, (1.0 - j) / 2.0};
        }
        return RelationProbs{(1.0 - j) / 2.0, j, (1.0 - j) / 2.0};
    }
    return RelationProbs{j / 2.0, j / 2.0, 1.0 - j};
}

/// Scores every ordered pair of distinct choices within each group. Output is
/// sorted by (group_id, src, dst).
inline std::vector<RelationRecord> baseline_relations(const Dataset& dataset,
                                                      const std::vector<InferenceGroup>& groups,
                                                      double overlap_threshold = 0.5) {
    std::unordered_map<std::string, const Choice*> by_id;
    by_id.reserve(dataset.choices.size());
    for (const Choice& c : dataset.choices) by_id.emplace(c.id, &c);

    std::vector<RelationRecord> records;
    for (const InferenceGroup& group : groups) {
        for (const std::string& src : group.choice_ids) {
            auto src_it = by_id.find(src);
            if (src_it == by_id.end()) throw SchemaError("group references unknown choice: " + src);
            for (const std::string& dst : group.choice_ids) {
                if (src == dst) continue;
                auto dst_it = by_id.find(dst);
                if (dst_it == by_id.end()) {
                    throw SchemaError("group references unknown choice: " + dst);
                }
                RelationRecord rec;
                rec.group_id = group.group_id;
                rec.src = src;
                rec.dst = dst;
                rec.probs = relate_texts(src_it->second->text, dst_it->second->text,
                                         overlap_threshold);
                records.push_back(std::move(rec));
            }
        }
    }
    return records;
}

}  // namespace concord
