#pragma once

// Line-delimited interchange records (scores, relations, predictions) and
// the canonical nested dataset document. Readers are strict: every line
// either parses and validates or raises a SchemaError carrying the
// 1-based line number. Writers emit records sorted by primary id with
// reals rendered at 17 significant digits, so identical inputs always
// produce byte-identical files.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <tuple>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "concord/errors.hpp"
#include "concord/model.hpp"

namespace concord {

constexpr double kProbSumTolerance = 1e-6;

enum class RelationClass { Entail, Contradict, Neutral };

inline const char* to_string(RelationClass c) {
    switch (c) {
        case RelationClass::Entail: return "entail";
        case RelationClass::Contradict: return "contradict";
        case RelationClass::Neutral: return "neutral";
    }
    return "?";
}

/// Distribution over the three relation classes.
struct RelationProbs {
    double entail = 0.0;
    double contradict = 0.0;
    double neutral = 0.0;

    bool operator==(const RelationProbs&) const = default;

    double sum() const { return entail + contradict + neutral; }

    // Ties resolve in fixed order entail > contradict > neutral.
    RelationClass argmax() const {
        if (entail >= contradict && entail >= neutral) return RelationClass::Entail;
        if (contradict >= neutral) return RelationClass::Contradict;
        return RelationClass::Neutral;
    }

    double max_prob() const {
        switch (argmax()) {
            case RelationClass::Entail: return entail;
            case RelationClass::Contradict: return contradict;
            case RelationClass::Neutral: return neutral;
        }
        return 0.0;
    }

    static RelationProbs one_hot(RelationClass c) {
        switch (c) {
            case RelationClass::Entail: return {1.0, 0.0, 0.0};
            case RelationClass::Contradict: return {0.0, 1.0, 0.0};
            case RelationClass::Neutral: return {0.0, 0.0, 1.0};
        }
        return {};
    }
};

/// Stand-alone QA confidence that a choice is true.
struct ScoreRecord {
    std::string choice_id;
    double p_true = 0.0;

    bool operator==(const ScoreRecord&) const = default;
};

/// NLI confidence distribution for an ordered choice pair of one group.
struct RelationRecord {
    std::string group_id;
    std::string src;
    std::string dst;
    RelationProbs probs;

    bool operator==(const RelationRecord&) const = default;
};

struct PredictionRecord {
    std::string choice_id;
    bool label = false;
    double p_true = 0.0;  // upstream score echoed for audit

    bool operator==(const PredictionRecord&) const = default;
};

/// Counters a reader fills in when the caller wants them.
struct CodecStats {
    std::size_t unknown_fields = 0;
};

// ---------------------------------------------------------------------------
// rendering helpers

/// 17 significant digits: enough to round-trip any double exactly.
inline std::string fmt_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string json_quote(const std::string& s) {
    return nlohmann::json(s).dump();
}

namespace detail {

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

[[noreturn]] inline void line_error(const std::string& path, std::size_t line, const std::string& msg) {
    throw SchemaError(path + ":" + std::to_string(line) + ": " + msg);
}

// Parses one JSONL line into an object, rejecting non-objects.
inline nlohmann::json parse_record_line(const std::string& path, std::size_t line_no,
                                        const std::string& line) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        line_error(path, line_no, std::string("malformed record: ") + e.what());
    }
    if (!doc.is_object()) line_error(path, line_no, "record is not an object");
    return doc;
}

inline std::string require_string(const nlohmann::json& doc, const char* key, const std::string& path,
                                  std::size_t line_no) {
    auto it = doc.find(key);
    if (it == doc.end()) line_error(path, line_no, std::string("missing field '") + key + "'");
    if (!it->is_string()) line_error(path, line_no, std::string("field '") + key + "' is not a string");
    return it->get<std::string>();
}

inline double require_number(const nlohmann::json& doc, const char* key, const std::string& path,
                             std::size_t line_no) {
    auto it = doc.find(key);
    if (it == doc.end()) line_error(path, line_no, std::string("missing field '") + key + "'");
    if (!it->is_number()) line_error(path, line_no, std::string("field '") + key + "' is not a number");
    return it->get<double>();
}

inline bool require_bool(const nlohmann::json& doc, const char* key, const std::string& path,
                         std::size_t line_no) {
    auto it = doc.find(key);
    if (it == doc.end()) line_error(path, line_no, std::string("missing field '") + key + "'");
    if (!it->is_boolean()) line_error(path, line_no, std::string("field '") + key + "' is not a boolean");
    return it->get<bool>();
}

inline double require_probability(const nlohmann::json& doc, const char* key, const std::string& path,
                                  std::size_t line_no) {
    const double v = require_number(doc, key, path, line_no);
    if (!(v >= 0.0 && v <= 1.0)) {
        line_error(path, line_no,
                   std::string("field '") + key + "' out of range [0,1]: " + fmt_real(v));
    }
    return v;
}

template <typename Known>
inline void count_unknown_fields(const nlohmann::json& doc, const Known& known, CodecStats* stats) {
    if (!stats) return;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (!known.count(it.key())) ++stats->unknown_fields;
    }
}

// Iterates non-empty lines of a file, tolerating a trailing CR per line.
template <typename Fn>
inline void for_each_line(const std::string& path, Fn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) line_error(path, line_no, "blank line in record file");
        fn(line_no, line);
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// scores

inline std::vector<ScoreRecord> read_scores(const std::string& path, CodecStats* stats = nullptr) {
    static const std::unordered_set<std::string> known{"choice_id", "p_true"};
    std::vector<ScoreRecord> records;
    std::unordered_set<std::string> seen;
    detail::for_each_line(path, [&](std::size_t line_no, const std::string& line) {
        const auto doc = detail::parse_record_line(path, line_no, line);
        ScoreRecord r;
        r.choice_id = detail::require_string(doc, "choice_id", path, line_no);
        if (r.choice_id.empty()) detail::line_error(path, line_no, "empty choice_id");
        r.p_true = detail::require_probability(doc, "p_true", path, line_no);
        if (!seen.insert(r.choice_id).second) {
            detail::line_error(path, line_no, "duplicate choice_id '" + r.choice_id + "'");
        }
        detail::count_unknown_fields(doc, known, stats);
        records.push_back(std::move(r));
    });
    return records;
}

inline std::string render_score_line(const ScoreRecord& r) {
    return "{\"choice_id\": " + json_quote(r.choice_id) + ", \"p_true\": " + fmt_real(r.p_true) + "}";
}

inline void write_scores(const std::vector<ScoreRecord>& records, const std::string& path) {
    std::vector<ScoreRecord> sorted = records;
    std::sort(sorted.begin(), sorted.end(),
              [](const ScoreRecord& a, const ScoreRecord& b) { return a.choice_id < b.choice_id; });
    std::string out;
    std::unordered_set<std::string> seen;
    for (const auto& r : sorted) {
        if (r.choice_id.empty()) throw SchemaError("score record with empty choice_id");
        if (!(r.p_true >= 0.0 && r.p_true <= 1.0)) {
            throw SchemaError("score for '" + r.choice_id + "' out of range [0,1]: " + fmt_real(r.p_true));
        }
        if (!seen.insert(r.choice_id).second) {
            throw SchemaError("duplicate choice_id '" + r.choice_id + "' in scores");
        }
        out += render_score_line(r);
        out += '\n';
    }
    detail::write_text_file(path, out);
}

// ---------------------------------------------------------------------------
// relations

inline std::vector<RelationRecord> read_relations(const std::string& path, CodecStats* stats = nullptr) {
    static const std::unordered_set<std::string> known{"group_id", "src", "dst", "probs"};
    std::vector<RelationRecord> records;
    detail::for_each_line(path, [&](std::size_t line_no, const std::string& line) {
        const auto doc = detail::parse_record_line(path, line_no, line);
        RelationRecord r;
        r.group_id = detail::require_string(doc, "group_id", path, line_no);
        r.src = detail::require_string(doc, "src", path, line_no);
        r.dst = detail::require_string(doc, "dst", path, line_no);
        if (r.src == r.dst) detail::line_error(path, line_no, "src equals dst: '" + r.src + "'");
        auto probs_it = doc.find("probs");
        if (probs_it == doc.end() || !probs_it->is_object()) {
            detail::line_error(path, line_no, "missing or non-object 'probs'");
        }
        if (probs_it->size() != 3) {
            detail::line_error(path, line_no, "'probs' must contain exactly entail/contradict/neutral");
        }
        r.probs.entail = detail::require_probability(*probs_it, "entail", path, line_no);
        r.probs.contradict = detail::require_probability(*probs_it, "contradict", path, line_no);
        r.probs.neutral = detail::require_probability(*probs_it, "neutral", path, line_no);
        if (std::fabs(r.probs.sum() - 1.0) > kProbSumTolerance) {
            detail::line_error(path, line_no, "probs sum to " + fmt_real(r.probs.sum()) + ", expected 1");
        }
        detail::count_unknown_fields(doc, known, stats);
        records.push_back(std::move(r));
    });
    return records;
}

inline std::string render_relation_line(const RelationRecord& r) {
    return "{\"group_id\": " + json_quote(r.group_id) + ", \"src\": " + json_quote(r.src) +
           ", \"dst\": " + json_quote(r.dst) + ", \"probs\": {\"entail\": " + fmt_real(r.probs.entail) +
           ", \"contradict\": " + fmt_real(r.probs.contradict) +
           ", \"neutral\": " + fmt_real(r.probs.neutral) + "}}";
}

inline void write_relations(const std::vector<RelationRecord>& records, const std::string& path) {
    std::vector<RelationRecord> sorted = records;
    std::sort(sorted.begin(), sorted.end(), [](const RelationRecord& a, const RelationRecord& b) {
        return std::tie(a.group_id, a.src, a.dst) < std::tie(b.group_id, b.src, b.dst);
    });
    std::string out;
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    for (const auto& r : sorted) {
        if (r.src == r.dst) throw SchemaError("relation with src == dst: '" + r.src + "'");
        if (!seen.insert({r.group_id, r.src, r.dst}).second) {
            throw SchemaError("duplicate relation pair " + r.src + "->" + r.dst + " in group '" +
                              r.group_id + "'");
        }
        if (std::fabs(r.probs.sum() - 1.0) > kProbSumTolerance) {
            throw SchemaError("relation " + r.src + "->" + r.dst + " probs sum to " +
                              fmt_real(r.probs.sum()));
        }
        for (double p : {r.probs.entail, r.probs.contradict, r.probs.neutral}) {
            if (!(p >= 0.0 && p <= 1.0)) {
                throw SchemaError("relation " + r.src + "->" + r.dst + " prob out of range [0,1]");
            }
        }
        out += render_relation_line(r);
        out += '\n';
    }
    detail::write_text_file(path, out);
}

// ---------------------------------------------------------------------------
// predictions

inline std::vector<PredictionRecord> read_predictions(const std::string& path,
                                                      CodecStats* stats = nullptr) {
    static const std::unordered_set<std::string> known{"choice_id", "label", "p_true"};
    std::vector<PredictionRecord> records;
    std::unordered_set<std::string> seen;
    detail::for_each_line(path, [&](std::size_t line_no, const std::string& line) {
        const auto doc = detail::parse_record_line(path, line_no, line);
        PredictionRecord r;
        r.choice_id = detail::require_string(doc, "choice_id", path, line_no);
        if (r.choice_id.empty()) detail::line_error(path, line_no, "empty choice_id");
        r.label = detail::require_bool(doc, "label", path, line_no);
        r.p_true = detail::require_probability(doc, "p_true", path, line_no);
        if (!seen.insert(r.choice_id).second) {
            detail::line_error(path, line_no, "duplicate choice_id '" + r.choice_id + "'");
        }
        detail::count_unknown_fields(doc, known, stats);
        records.push_back(std::move(r));
    });
    return records;
}

inline std::string render_prediction_line(const PredictionRecord& r) {
    return "{\"choice_id\": " + json_quote(r.choice_id) +
           ", \"label\": " + (r.label ? "true" : "false") + ", \"p_true\": " + fmt_real(r.p_true) + "}";
}

inline void write_predictions(const std::vector<PredictionRecord>& records, const std::string& path) {
    std::vector<PredictionRecord> sorted = records;
    std::sort(sorted.begin(), sorted.end(), [](const PredictionRecord& a, const PredictionRecord& b) {
        return a.choice_id < b.choice_id;
    });
    std::string out;
    std::unordered_set<std::string> seen;
    for (const auto& r : sorted) {
        if (r.choice_id.empty()) throw SchemaError("prediction record with empty choice_id");
        if (!(r.p_true >= 0.0 && r.p_true <= 1.0)) {
            throw SchemaError("prediction for '" + r.choice_id + "' p_true out of range [0,1]");
        }
        if (!seen.insert(r.choice_id).second) {
            throw SchemaError("duplicate choice_id '" + r.choice_id + "' in predictions");
        }
        out += render_prediction_line(r);
        out += '\n';
    }
    detail::write_text_file(path, out);
}

// ---------------------------------------------------------------------------
// canonical dataset document

inline Dataset read_dataset(const std::string& path, CodecStats* stats = nullptr) {
    const std::string text = detail::read_text_file(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path + ": malformed dataset document: " + e.what());
    }
    if (!doc.is_object() || !doc.contains("paragraphs") || !doc["paragraphs"].is_array()) {
        throw SchemaError(path + ": expected top-level object with 'paragraphs' array");
    }

    static const std::unordered_set<std::string> known_p{"id", "text", "questions"};
    static const std::unordered_set<std::string> known_q{"id", "text", "choices"};
    static const std::unordered_set<std::string> known_c{"id", "text", "gold"};

    auto str_field = [&](const nlohmann::json& node, const char* key, const std::string& where) {
        auto it = node.find(key);
        if (it == node.end() || !it->is_string()) {
            throw SchemaError(path + ": " + where + ": missing or non-string '" + key + "'");
        }
        return it->get<std::string>();
    };

    Dataset dataset;
    std::size_t pi = 0;
    for (const auto& pnode : doc["paragraphs"]) {
        const std::string pwhere = "paragraphs[" + std::to_string(pi) + "]";
        if (!pnode.is_object()) throw SchemaError(path + ": " + pwhere + ": not an object");
        Paragraph p;
        p.id = str_field(pnode, "id", pwhere);
        p.text = str_field(pnode, "text", pwhere);
        detail::count_unknown_fields(pnode, known_p, stats);
        auto q_it = pnode.find("questions");
        if (q_it == pnode.end() || !q_it->is_array()) {
            throw SchemaError(path + ": " + pwhere + ": missing 'questions' array");
        }
        std::size_t qi = 0;
        for (const auto& qnode : *q_it) {
            const std::string qwhere = pwhere + ".questions[" + std::to_string(qi) + "]";
            if (!qnode.is_object()) throw SchemaError(path + ": " + qwhere + ": not an object");
            Question q;
            q.id = str_field(qnode, "id", qwhere);
            q.paragraph_id = p.id;
            q.text = str_field(qnode, "text", qwhere);
            detail::count_unknown_fields(qnode, known_q, stats);
            auto c_it = qnode.find("choices");
            if (c_it == qnode.end() || !c_it->is_array()) {
                throw SchemaError(path + ": " + qwhere + ": missing 'choices' array");
            }
            std::size_t ci = 0;
            for (const auto& cnode : *c_it) {
                const std::string cwhere = qwhere + ".choices[" + std::to_string(ci) + "]";
                if (!cnode.is_object()) throw SchemaError(path + ": " + cwhere + ": not an object");
                Choice c;
                c.id = str_field(cnode, "id", cwhere);
                c.question_id = q.id;
                c.text = str_field(cnode, "text", cwhere);
                if (auto g = cnode.find("gold"); g != cnode.end() && !g->is_null()) {
                    if (!g->is_boolean()) {
                        throw SchemaError(path + ": " + cwhere + ": 'gold' must be boolean or null");
                    }
                    c.gold = g->get<bool>();
                }
                detail::count_unknown_fields(cnode, known_c, stats);
                dataset.choices.push_back(std::move(c));
                ++ci;
            }
            dataset.questions.push_back(std::move(q));
            ++qi;
        }
        dataset.paragraphs.push_back(std::move(p));
        ++pi;
    }
    return dataset;
}

/// Serializes the canonical nested document. Order is preserved as given;
/// identical datasets always produce byte-identical text.
inline std::string render_dataset(const Dataset& dataset) {
    std::unordered_map<std::string, std::vector<const Question*>> questions_of;
    for (const auto& q : dataset.questions) questions_of[q.paragraph_id].push_back(&q);
    std::unordered_map<std::string, std::vector<const Choice*>> choices_of;
    for (const auto& c : dataset.choices) choices_of[c.question_id].push_back(&c);

    nlohmann::ordered_json doc;
    doc["paragraphs"] = nlohmann::ordered_json::array();
    for (const auto& p : dataset.paragraphs) {
        nlohmann::ordered_json pnode;
        pnode["id"] = p.id;
        pnode["text"] = p.text;
        pnode["questions"] = nlohmann::ordered_json::array();
        auto q_it = questions_of.find(p.id);
        if (q_it != questions_of.end()) {
            for (const Question* q : q_it->second) {
                nlohmann::ordered_json qnode;
                qnode["id"] = q->id;
                qnode["text"] = q->text;
                qnode["choices"] = nlohmann::ordered_json::array();
                auto c_it = choices_of.find(q->id);
                if (c_it != choices_of.end()) {
                    for (const Choice* c : c_it->second) {
                        nlohmann::ordered_json cnode;
                        cnode["id"] = c->id;
                        cnode["text"] = c->text;
                        if (c->gold.has_value()) {
                            cnode["gold"] = *c->gold;
                        } else {
                            cnode["gold"] = nullptr;
                        }
                        qnode["choices"].push_back(std::move(cnode));
                    }
                }
                pnode["questions"].push_back(std::move(qnode));
            }
        }
        doc["paragraphs"].push_back(std::move(pnode));
    }
    return doc.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

inline void write_dataset(const Dataset& dataset, const std::string& path) {
    detail::write_text_file(path, render_dataset(dataset));
}

}  // namespace concord
