#include "hopmix/doc_model.hpp"

#include <unordered_set>

#include "hopmix/text.hpp"

namespace hopmix {

using nlohmann::json;

int StructuredDocument::total_sentences() const {
    int n = 0;
    for (const auto& p : paragraphs) n += static_cast<int>(p.sentences.size());
    return n;
}

void StructuredDocument::validate() const {
    if (paragraphs.empty()) throw ValidationError("document '" + id + "': no paragraphs");
    std::unordered_set<std::string> ids;
    ids.insert(id);
    for (std::size_t pi = 0; pi < paragraphs.size(); ++pi) {
        const Paragraph& p = paragraphs[pi];
        if (p.sentences.empty())
            throw ValidationError("paragraph '" + p.id + "': no sentences");
        if (!ids.insert(p.id).second)
            throw ValidationError("duplicate id '" + p.id + "' in document '" + id + "'");
        for (std::size_t si = 0; si < p.sentences.size(); ++si) {
            const Sentence& s = p.sentences[si];
            if (trim(s.text).empty())
                throw ValidationError("sentence '" + s.id + "': empty text");
            if (s.para_idx != static_cast<int>(pi) || s.sent_idx != static_cast<int>(si))
                throw ValidationError("sentence '" + s.id + "': index fields inconsistent");
            if (!ids.insert(s.id).second)
                throw ValidationError("duplicate id '" + s.id + "' in document '" + id + "'");
        }
    }
}

std::string dummy_marker(int t) { return "[NULL_" + std::to_string(t) + "]"; }

bool is_dummy_marker(const std::string& unit) {
    return unit.size() > 7 && unit.rfind("[NULL_", 0) == 0 && unit.back() == ']';
}

std::string paragraph_text(const Paragraph& p) {
    std::string out;
    for (const auto& s : p.sentences) {
        if (!out.empty()) out += ' ';
        out += s.text;
    }
    return out;
}

namespace {

const json& require_field(const json& obj, const char* field, const char* ctx) {
    auto it = obj.find(field);
    if (it == obj.end())
        throw SchemaError(std::string(ctx) + ": missing field '" + field + "'");
    return *it;
}

std::string require_string(const json& obj, const char* field, const char* ctx) {
    const json& v = require_field(obj, field, ctx);
    if (!v.is_string())
        throw SchemaError(std::string(ctx) + ": field '" + field + "' is not a string");
    return v.get<std::string>();
}

Sentence make_sentence(std::string id, std::string text, int para_idx, int sent_idx) {
    Sentence s;
    s.id = std::move(id);
    s.text = std::move(text);
    s.para_idx = para_idx;
    s.sent_idx = sent_idx;
    return s;
}

}  // namespace

StructuredDocument parse_document(const json& record) {
    if (!record.is_object()) throw SchemaError("document record: not a JSON object");
    StructuredDocument doc;
    doc.id = require_string(record, "id", "document record");
    const json& paras = require_field(record, "paragraphs", "document record");
    if (!paras.is_array())
        throw SchemaError("document record: field 'paragraphs' is not an array");
    int pi = 0;
    for (const json& jp : paras) {
        Paragraph p;
        p.id = require_string(jp, "id", "paragraph record");
        if (auto it = jp.find("title"); it != jp.end() && !it->is_null()) {
            if (!it->is_string())
                throw SchemaError("paragraph record: field 'title' is not a string");
            p.title = it->get<std::string>();
        }
        const json& sents = require_field(jp, "sentences", "paragraph record");
        if (!sents.is_array())
            throw SchemaError("paragraph record: field 'sentences' is not an array");
        int si = 0;
        for (const json& js : sents) {
            if (!js.is_string())
                throw SchemaError("paragraph record: sentence is not a string");
            p.sentences.push_back(make_sentence(
                p.id + "/s" + std::to_string(si), js.get<std::string>(), pi, si));
            ++si;
        }
        doc.paragraphs.push_back(std::move(p));
        ++pi;
    }
    doc.validate();
    return doc;
}

StructuredDocument parse_document_line(std::string_view json_line) {
    json record = json::parse(json_line, nullptr, false);
    if (record.is_discarded()) throw SchemaError("document record: invalid JSON");
    return parse_document(record);
}

json document_to_json(const StructuredDocument& doc) {
    json paras = json::array();
    for (const Paragraph& p : doc.paragraphs) {
        json sents = json::array();
        for (const Sentence& s : p.sentences) sents.push_back(s.text);
        paras.push_back({{"id", p.id},
                         {"title", p.title ? json(*p.title) : json(nullptr)},
                         {"sentences", std::move(sents)}});
    }
    return {{"id", doc.id}, {"paragraphs", std::move(paras)}};
}

Paragraph linearize_table_row(const std::string& para_id,
                              const std::vector<std::string>& headers,
                              const std::vector<std::string>& cells,
                              const std::vector<std::vector<std::string>>& linked_texts) {
    if (headers.size() != cells.size())
        throw ValidationError("linearize_table_row: |headers| != |cells|");
    if (!linked_texts.empty() && linked_texts.size() != cells.size())
        throw ValidationError("linearize_table_row: |linked_texts| != |cells|");

    auto or_placeholder = [](const std::string& s) {
        std::string t = trim(s);
        return t.empty() ? std::string("[EMPTY]") : t;
    };

    Paragraph p;
    p.id = para_id;
    for (std::size_t i = 0; i < headers.size(); ++i) {
        p.sentences.push_back(make_sentence("", or_placeholder(headers[i]), 0, 0));
        p.sentences.push_back(make_sentence("", or_placeholder(cells[i]), 0, 0));
        if (i < linked_texts.size()) {
            for (const std::string& link : linked_texts[i])
                p.sentences.push_back(make_sentence("", or_placeholder(link), 0, 0));
        }
    }
    for (std::size_t si = 0; si < p.sentences.size(); ++si) {
        p.sentences[si].sent_idx = static_cast<int>(si);
        p.sentences[si].id = para_id + "/s" + std::to_string(si);
    }
    return p;
}

namespace {

void linearize_section(const SectionNode& node, std::vector<std::string> title_path,
                       StructuredDocument& doc) {
    if (!trim(node.title).empty()) title_path.push_back(trim(node.title));

    std::string title_sentence;
    for (const std::string& t : title_path) {
        if (!title_sentence.empty()) title_sentence += " ";
        title_sentence += t + ".";
    }

    // Loose text under this node becomes its own paragraph, placed before the
    // children so document order matches reading order.
    std::string body = trim(node.text);
    if (!body.empty()) {
        Paragraph p;
        p.id = "p" + std::to_string(doc.paragraphs.size());
        if (!title_path.empty()) p.title = title_path.back();
        std::vector<std::string> sents;
        if (!title_sentence.empty()) sents.push_back(title_sentence);
        for (std::string& s : split_sentences(body)) sents.push_back(std::move(s));
        int pi = static_cast<int>(doc.paragraphs.size());
        int si = 0;
        for (std::string& s : sents) {
            p.sentences.push_back(make_sentence(p.id + "/s" + std::to_string(si),
                                                std::move(s), pi, si));
            ++si;
        }
        if (!p.sentences.empty()) doc.paragraphs.push_back(std::move(p));
    }
    for (const SectionNode& child : node.children)
        linearize_section(child, title_path, doc);
}

}  // namespace

StructuredDocument linearize_paper(const std::string& doc_id,
                                   const std::vector<SectionNode>& sections) {
    if (sections.empty()) throw ValidationError("linearize_paper: empty section tree");
    StructuredDocument doc;
    doc.id = doc_id;
    for (const SectionNode& s : sections) linearize_section(s, {}, doc);
    if (doc.paragraphs.empty())
        throw ValidationError("linearize_paper: no paragraphs produced from '" + doc_id + "'");
    doc.validate();
    return doc;
}

QueryParagraph build_conversational_query(
    const std::string& q0,
    const std::vector<std::pair<std::string, std::string>>& followups,
    const std::string& query_id) {
    if (trim(q0).empty())
        throw ValidationError("build_conversational_query: empty initial question");
    QueryParagraph qp;
    qp.id = query_id;
    qp.kind = QueryKind::Conversational;
    qp.units.push_back(q0);
    for (const auto& [f, a] : followups)
        qp.units.push_back("Q: " + f + " A: " + a);
    return qp;
}

QueryParagraph build_multihop_query(const std::string& q0, int hops,
                                    const std::string& query_id) {
    if (hops < 1) throw ValidationError("build_multihop_query: hops < 1");
    if (trim(q0).empty())
        throw ValidationError("build_multihop_query: empty initial question");
    QueryParagraph qp;
    qp.id = query_id;
    qp.kind = QueryKind::MultiHop;
    qp.units.push_back(q0);
    for (int t = 1; t < hops; ++t) qp.units.push_back(dummy_marker(t));
    return qp;
}

void validate_query(const QueryParagraph& qp) {
    if (qp.units.empty()) throw ValidationError("query paragraph: no units");
    for (const std::string& u : qp.units)
        if (trim(u).empty()) throw ValidationError("query paragraph: empty unit");
    if (qp.kind == QueryKind::MultiHop && qp.units.size() > 1 &&
        !is_dummy_marker(qp.units.back()))
        throw ValidationError("multi-hop query: last unit is not a dummy marker");
}

bool operator==(const Sentence& a, const Sentence& b) {
    return a.id == b.id && a.text == b.text && a.para_idx == b.para_idx &&
           a.sent_idx == b.sent_idx;
}

bool operator==(const Paragraph& a, const Paragraph& b) {
    return a.id == b.id && a.title == b.title && a.sentences == b.sentences;
}

bool operator==(const StructuredDocument& a, const StructuredDocument& b) {
    return a.id == b.id && a.paragraphs == b.paragraphs;
}

}  // namespace hopmix
