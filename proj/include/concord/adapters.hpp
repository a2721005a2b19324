#pragma once

// Adapters from the upstream dataset layouts to the canonical model.
// Field names are validated strictly; a clear schema error beats a
// guessed parse. Ids are synthesized hierarchically (p0, p0-q1,
// p0-q1-c2) so interchange files can join on stable strings.

#include <cctype>
#include <cstddef>
#include <iterator>
#include <string>
#include <vector>

#include <json.hpp>

#include "concord/codec.hpp"
#include "concord/errors.hpp"
#include "concord/model.hpp"

namespace concord {

struct ParsedDataset {
    Dataset dataset;
    ValidationReport report;
    std::size_t missing_gold = 0;  // choices whose truth flag was absent
};

// ---------------------------------------------------------------------------
// MultiRC (JSON: data[].paragraph.{text, questions[].{question, answers[].{text, isAnswer}}})

inline ParsedDataset parse_multirc(const std::string& path) {
    const std::string text = detail::read_text_file(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path + ": malformed MultiRC document: " + e.what());
    }

    if (!doc.is_object() || !doc.contains("data") || !doc["data"].is_array()) {
        throw SchemaError(path + ": data: expected top-level object with 'data' array");
    }

    ParsedDataset out;
    std::size_t pi = 0;
    for (const auto& item : doc["data"]) {
        const std::string pwhere = "data[" + std::to_string(pi) + "]";
        if (!item.is_object() || !item.contains("paragraph") || !item["paragraph"].is_object()) {
            throw SchemaError(path + ": " + pwhere + ": missing 'paragraph' object");
        }
        const auto& para = item["paragraph"];

        Paragraph p;
        p.id = "p" + std::to_string(pi);
        if (auto t = para.find("text"); t != para.end() && t->is_string()) {
            p.text = t->get<std::string>();
        } else {
            throw SchemaError(path + ": " + pwhere + ".paragraph.text: missing or not a string");
        }

        if (!para.contains("questions") || !para["questions"].is_array()) {
            throw SchemaError(path + ": " + pwhere + ".paragraph.questions: missing array");
        }
        std::size_t qi = 0;
        for (const auto& qnode : para["questions"]) {
            const std::string qwhere = pwhere + ".paragraph.questions[" + std::to_string(qi) + "]";
            if (!qnode.is_object()) throw SchemaError(path + ": " + qwhere + ": not an object");
            Question q;
            q.id = p.id + "-q" + std::to_string(qi);
            q.paragraph_id = p.id;
            if (auto t = qnode.find("question"); t != qnode.end() && t->is_string()) {
                q.text = t->get<std::string>();
            } else {
                throw SchemaError(path + ": " + qwhere + ".question: missing or not a string");
            }
            auto answers = qnode.find("answers");
            if (answers == qnode.end() || !answers->is_array()) {
                throw SchemaError(path + ": " + qwhere + ".answers: missing array");
            }
            std::size_t ci = 0;
            for (const auto& anode : *answers) {
                const std::string cwhere = qwhere + ".answers[" + std::to_string(ci) + "]";
                if (!anode.is_object()) throw SchemaError(path + ": " + cwhere + ": not an object");
                Choice c;
                c.id = q.id + "-c" + std::to_string(ci);
                c.question_id = q.id;
                if (auto t = anode.find("text"); t != anode.end() && t->is_string()) {
                    c.text = t->get<std::string>();
                } else {
                    throw SchemaError(path + ": " + cwhere + ".text: missing or not a string");
                }
                if (auto g = anode.find("isAnswer"); g != anode.end()) {
                    if (!g->is_boolean()) {
                        throw SchemaError(path + ": " + cwhere + ".isAnswer: not a boolean");
                    }
                    c.gold = g->get<bool>();
                } else {
                    ++out.missing_gold;
                }
                out.dataset.choices.push_back(std::move(c));
                ++ci;
            }
            out.dataset.questions.push_back(std::move(q));
            ++qi;
        }
        out.dataset.paragraphs.push_back(std::move(p));
        ++pi;
    }

    out.report = validate_dataset(out.dataset);
    return out;
}

// ---------------------------------------------------------------------------
// SemEval 2018 task 11 (XML: data/instance/{text, questions/question/answer})

namespace detail {

struct XmlNode {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attrs;
    std::vector<XmlNode> children;
    std::string text;  // concatenated character data

    const std::string* attr(const std::string& key) const {
        for (const auto& [k, v] : attrs) {
            if (k == key) return &v;
        }
        return nullptr;
    }

    std::vector<const XmlNode*> children_named(const std::string& name_) const {
        std::vector<const XmlNode*> out;
        for (const auto& c : children) {
            if (c.name == name_) out.push_back(&c);
        }
        return out;
    }
};

// A deliberately small XML reader: elements, attributes, character data
// and the five standard entities. No namespaces, no DTD, no CDATA.
class XmlParser {
public:
    XmlParser(const std::string& text, const std::string& path) : text_(text), path_(path) {}

    XmlNode parse_document() {
        skip_prolog();
        XmlNode root = parse_element();
        skip_misc();
        if (pos_ != text_.size()) fail("trailing content after document element");
        return root;
    }

private:
    const std::string& text_;
    const std::string& path_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        std::size_t line = 1;
        for (std::size_t i = 0; i < pos_ && i < text_.size(); ++i) {
            if (text_[i] == '\n') ++line;
        }
        throw SchemaError(path_ + ":" + std::to_string(line) + ": " + msg);
    }

    bool starts_with(const char* s) const { return text_.compare(pos_, std::string::traits_type::length(s), s) == 0; }

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                                       text_[pos_] == '\r')) {
            ++pos_;
        }
    }

    void skip_comment() {
        pos_ += 4;  // "<!--"
        const auto end = text_.find("-->", pos_);
        if (end == std::string::npos) fail("unterminated comment");
        pos_ = end + 3;
    }

    void skip_prolog() {
        skip_ws();
        if (starts_with("<?xml")) {
            const auto end = text_.find("?>", pos_);
            if (end == std::string::npos) fail("unterminated XML declaration");
            pos_ = end + 2;
        }
        skip_misc();
    }

    void skip_misc() {
        for (;;) {
            skip_ws();
            if (starts_with("<!--")) {
                skip_comment();
            } else {
                return;
            }
        }
    }

    static bool is_name_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' || c == ':';
    }

    std::string parse_name() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && is_name_char(text_[pos_])) ++pos_;
        if (pos_ == start) fail("expected a name");
        return text_.substr(start, pos_ - start);
    }

    std::string decode_entities(const std::string& raw) {
        std::string out;
        out.reserve(raw.size());
        for (std::size_t i = 0; i < raw.size();) {
            if (raw[i] != '&') {
                out += raw[i++];
                continue;
            }
            const auto semi = raw.find(';', i);
            if (semi == std::string::npos) fail("unterminated entity reference");
            const std::string name = raw.substr(i + 1, semi - i - 1);
            if (name == "amp") out += '&';
            else if (name == "lt") out += '<';
            else if (name == "gt") out += '>';
            else if (name == "quot") out += '"';
            else if (name == "apos") out += '\'';
            else if (!name.empty() && name[0] == '#') {
                long code = 0;
                try {
                    code = name[1] == 'x' || name[1] == 'X' ? std::stol(name.substr(2), nullptr, 16)
                                                            : std::stol(name.substr(1));
                } catch (...) {
                    fail("bad character reference '&" + name + ";'");
                }
                // UTF-8 encode
                if (code < 0x80) {
                    out += static_cast<char>(code);
                } else if (code < 0x800) {
                    out += static_cast<char>(0xC0 | (code >> 6));
                    out += static_cast<char>(0x80 | (code & 0x3F));
                } else if (code < 0x10000) {
                    out += static_cast<char>(0xE0 | (code >> 12));
                    out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
                    out += static_cast<char>(0x80 | (code & 0x3F));
                } else {
                    out += static_cast<char>(0xF0 | (code >> 18));
                    out += static_cast<char>(0x80 | ((code >> 12) & 0x3F));
                    out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
                    out += static_cast<char>(0x80 | (code & 0x3F));
                }
            } else {
                fail("unknown entity '&" + name + ";'");
            }
            i = semi + 1;
        }
        return out;
    }

    XmlNode parse_element() {
        if (pos_ >= text_.size() || text_[pos_] != '<') fail("expected '<'");
        ++pos_;
        XmlNode node;
        node.name = parse_name();
        for (;;) {
            skip_ws();
            if (pos_ >= text_.size()) fail("unterminated start tag '" + node.name + "'");
            if (text_[pos_] == '>') {
                ++pos_;
                break;
            }
            if (starts_with("/>")) {
                pos_ += 2;
                return node;  // empty element
            }
            const std::string key = parse_name();
            skip_ws();
            if (pos_ >= text_.size() || text_[pos_] != '=') fail("expected '=' in attribute");
            ++pos_;
            skip_ws();
            if (pos_ >= text_.size() || (text_[pos_] != '"' && text_[pos_] != '\'')) {
                fail("expected quoted attribute value");
            }
            const char quote = text_[pos_++];
            const auto end = text_.find(quote, pos_);
            if (end == std::string::npos) fail("unterminated attribute value");
            node.attrs.emplace_back(key, decode_entities(text_.substr(pos_, end - pos_)));
            pos_ = end + 1;
        }
        // content
        for (;;) {
            if (pos_ >= text_.size()) fail("unterminated element '" + node.name + "'");
            if (starts_with("<!--")) {
                skip_comment();
                continue;
            }
            if (starts_with("</")) {
                pos_ += 2;
                const std::string closing = parse_name();
                if (closing != node.name) {
                    fail("mismatched end tag '</" + closing + ">' for '<" + node.name + ">'");
                }
                skip_ws();
                if (pos_ >= text_.size() || text_[pos_] != '>') fail("expected '>' in end tag");
                ++pos_;
                return node;
            }
            if (text_[pos_] == '<') {
                node.children.push_back(parse_element());
                continue;
            }
            const auto next = text_.find('<', pos_);
            if (next == std::string::npos) fail("unterminated element '" + node.name + "'");
            node.text += decode_entities(text_.substr(pos_, next - pos_));
            pos_ = next;
        }
    }
};

}  // namespace detail

/// Parses the SemEval'18 task 11 XML layout. Every question is expected
/// to carry two answers with exactly one marked correct; deviations are
/// reported as warnings, never repaired.
inline ParsedDataset parse_semeval(const std::string& path) {
    const std::string text = detail::read_text_file(path);
    detail::XmlParser parser(text, path);
    const detail::XmlNode root = parser.parse_document();
    if (root.name != "data") throw SchemaError(path + ": expected document element <data>");

    ParsedDataset out;
    std::size_t pi = 0;
    for (const detail::XmlNode* instance : root.children_named("instance")) {
        const std::string* source_id = instance->attr("id");
        const std::string pid = "p" + (source_id ? *source_id : std::to_string(pi));

        Paragraph p;
        p.id = pid;
        const auto texts = instance->children_named("text");
        if (texts.size() != 1) {
            throw SchemaError(path + ": instance '" + pid + "': expected exactly one <text>");
        }
        p.text = texts.front()->text;

        const auto question_blocks = instance->children_named("questions");
        if (question_blocks.size() != 1) {
            throw SchemaError(path + ": instance '" + pid + "': expected exactly one <questions>");
        }
        std::size_t qi = 0;
        for (const detail::XmlNode* qnode : question_blocks.front()->children_named("question")) {
            const std::string* qid = qnode->attr("id");
            Question q;
            q.id = pid + "-q" + (qid ? *qid : std::to_string(qi));
            q.paragraph_id = pid;
            if (const std::string* qtext = qnode->attr("text")) {
                q.text = *qtext;
            } else {
                throw SchemaError(path + ": question '" + q.id + "': missing 'text' attribute");
            }

            std::size_t ci = 0;
            std::size_t gold_true = 0;
            std::size_t with_gold = 0;
            for (const detail::XmlNode* anode : qnode->children_named("answer")) {
                const std::string* aid = anode->attr("id");
                Choice c;
                c.id = q.id + "-c" + (aid ? *aid : std::to_string(ci));
                c.question_id = q.id;
                if (const std::string* atext = anode->attr("text")) {
                    c.text = *atext;
                } else {
                    throw SchemaError(path + ": answer '" + c.id + "': missing 'text' attribute");
                }
                if (const std::string* correct = anode->attr("correct")) {
                    if (*correct == "True" || *correct == "true") {
                        c.gold = true;
                    } else if (*correct == "False" || *correct == "false") {
                        c.gold = false;
                    } else {
                        throw SchemaError(path + ": answer '" + c.id + "': bad 'correct' value '" +
                                          *correct + "'");
                    }
                    ++with_gold;
                    if (*c.gold) ++gold_true;
                } else {
                    ++out.missing_gold;
                }
                out.dataset.choices.push_back(std::move(c));
                ++ci;
            }
            if (ci != 2) {
                out.report.warnings.push_back(
                    {"semeval-choice-count", q.id,
                     "question '" + q.id + "' has " + std::to_string(ci) + " choices, expected 2"});
            }
            if (with_gold == ci && ci > 0 && gold_true != 1) {
                out.report.warnings.push_back(
                    {"semeval-not-exactly-one-true", q.id,
                     "question '" + q.id + "' has " + std::to_string(gold_true) +
                         " gold-true choices, expected 1"});
            }
            out.dataset.questions.push_back(std::move(q));
            ++qi;
        }
        out.dataset.paragraphs.push_back(std::move(p));
        ++pi;
    }

    auto adapter_warnings = std::move(out.report.warnings);
    out.report = validate_dataset(out.dataset);
    out.report.warnings.insert(out.report.warnings.end(),
                               std::make_move_iterator(adapter_warnings.begin()),
                               std::make_move_iterator(adapter_warnings.end()));
    return out;
}

}  // namespace concord
