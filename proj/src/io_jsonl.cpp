#include "hopmix/io_jsonl.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "hopmix/errors.hpp"
#include "hopmix/rank_heads.hpp"
#include "hopmix/vecmath.hpp"

namespace hopmix {

using nlohmann::json;

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
        throw SchemaError(std::string(ctx) + ": field '" + field +
                          "' must be a string");
    return v.get<std::string>();
}

int require_int(const json& obj, const char* field, const char* ctx) {
    const json& v = require_field(obj, field, ctx);
    if (!v.is_number_integer())
        throw SchemaError(std::string(ctx) + ": field '" + field +
                          "' must be an integer");
    return v.get<int>();
}

const char* kind_tag(EntryKind kind) {
    return kind == EntryKind::Paragraph ? "para" : "sent";
}

EntryKind parse_kind_tag(const std::string& tag, const char* ctx) {
    if (tag == "para") return EntryKind::Paragraph;
    if (tag == "sent") return EntryKind::Sentence;
    throw SchemaError(std::string(ctx) + ": kind must be 'para' or 'sent', got '" +
                      tag + "'");
}

// Shared line-by-line reader: skips blank lines, reports parse failures with
// their 1-based line number.
template <typename Fn>
void for_each_record(const std::string& path, const char* what, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + std::string(what) + " file: " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw SchemaError(path + ":" + std::to_string(lineno) + ": bad " +
                              what + " record: " + e.what());
        }
        fn(record);
    }
}

std::ofstream open_for_write(const std::string& path, const char* what) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + std::string(what) + " file: " + path);
    return out;
}

}  // namespace

json train_row_to_json(const TrainRow& row) {
    json q;
    q["id"] = row.query.id;
    q["kind"] = row.query.kind == QueryKind::Conversational ? "conversational"
                                                            : "multihop";
    q["units"] = row.query.units;

    json labels = json::object();
    for (const auto& [hop, refs] : row.labels) {
        json arr = json::array();
        for (const LabelRef& ref : refs) {
            arr.push_back({{"kind", kind_tag(ref.kind)},
                           {"para", ref.para},
                           {"sent", ref.sent}});
        }
        labels[std::to_string(hop)] = std::move(arr);
    }

    json record = {{"query", std::move(q)},
                   {"doc_id", row.doc_id},
                   {"labels", std::move(labels)},
                   {"drop", row.drop}};
    if (row.gold_class) record["class"] = *row.gold_class;
    if (!row.answers.empty()) record["answers"] = row.answers;
    return record;
}

TrainRow parse_train_row(const json& record) {
    static constexpr const char* ctx = "train row";
    if (!record.is_object()) throw SchemaError("train row: record must be an object");

    TrainRow row;
    const json& q = require_field(record, "query", ctx);
    if (!q.is_object()) throw SchemaError("train row: 'query' must be an object");
    if (auto it = q.find("id"); it != q.end() && it->is_string())
        row.query.id = it->get<std::string>();
    if (auto it = q.find("kind"); it != q.end()) {
        const std::string kind = it->get<std::string>();
        if (kind == "conversational")
            row.query.kind = QueryKind::Conversational;
        else if (kind == "multihop")
            row.query.kind = QueryKind::MultiHop;
        else
            throw SchemaError("train row: unknown query kind '" + kind + "'");
    }
    const json& units = require_field(q, "units", "train row query");
    if (!units.is_array() || units.empty())
        throw SchemaError("train row: 'query.units' must be a non-empty array");
    for (const json& u : units) {
        if (!u.is_string())
            throw SchemaError("train row: query units must be strings");
        row.query.units.push_back(u.get<std::string>());
    }

    row.doc_id = require_string(record, "doc_id", ctx);

    const json& labels = require_field(record, "labels", ctx);
    if (!labels.is_object())
        throw SchemaError("train row: 'labels' must be an object");
    for (const auto& [key, arr] : labels.items()) {
        int hop = 0;
        try {
            std::size_t used = 0;
            hop = std::stoi(key, &used);
            if (used != key.size()) throw std::invalid_argument(key);
        } catch (const std::exception&) {
            throw SchemaError("train row: label key '" + key +
                              "' is not a hop number");
        }
        if (!arr.is_array())
            throw SchemaError("train row: labels for hop " + key +
                              " must be an array");
        std::vector<LabelRef> refs;
        for (const json& item : arr) {
            if (!item.is_object())
                throw SchemaError("train row: each label must be an object");
            LabelRef ref;
            ref.kind = parse_kind_tag(require_string(item, "kind", "label"), "label");
            ref.para = require_int(item, "para", "label");
            ref.sent = -1;
            if (auto it = item.find("sent"); it != item.end() && !it->is_null())
                ref.sent = it->get<int>();
            if (ref.kind == EntryKind::Sentence && ref.sent < 0)
                throw SchemaError("train row: sentence label needs 'sent' >= 0");
            refs.push_back(ref);
        }
        row.labels[hop] = std::move(refs);
    }

    if (auto it = record.find("drop"); it != record.end()) {
        if (!it->is_boolean())
            throw SchemaError("train row: 'drop' must be a boolean");
        row.drop = it->get<bool>();
    }
    if (auto it = record.find("class"); it != record.end() && !it->is_null()) {
        const std::string name = it->get<std::string>();
        class_index(name);  // reject unknown names early
        row.gold_class = name;
    }
    if (auto it = record.find("answers"); it != record.end() && !it->is_null()) {
        if (!it->is_array())
            throw SchemaError("train row: 'answers' must be an array");
        for (const json& a : *it) row.answers.push_back(a.get<std::string>());
    }
    return row;
}

std::vector<TrainRow> read_train_rows(const std::string& path) {
    std::vector<TrainRow> rows;
    for_each_record(path, "training-set",
                    [&](const json& record) { rows.push_back(parse_train_row(record)); });
    return rows;
}

void write_train_rows(const std::vector<TrainRow>& rows, const std::string& path) {
    auto out = open_for_write(path, "training-set");
    for (const TrainRow& row : rows) out << train_row_to_json(row).dump() << '\n';
}

std::vector<StructuredDocument> read_documents(const std::string& path) {
    std::vector<StructuredDocument> docs;
    for_each_record(path, "document",
                    [&](const json& record) { docs.push_back(parse_document(record)); });
    return docs;
}

void write_documents(const std::vector<StructuredDocument>& docs,
                     const std::string& path) {
    auto out = open_for_write(path, "document");
    for (const StructuredDocument& doc : docs)
        out << document_to_json(doc).dump() << '\n';
}

json prediction_to_json(const Prediction& pred) {
    json ranked = json::array();
    for (const RankedSentence& r : pred.ranked)
        ranked.push_back({{"para", r.para}, {"sent", r.sent}, {"score", r.score}});

    json record = {{"query_id", pred.query_id}, {"ranked", std::move(ranked)}};
    if (pred.class_idx)
        record["class"] = std::string(kClassNames[static_cast<std::size_t>(*pred.class_idx)]);
    else
        record["class"] = nullptr;
    if (pred.class_probs)
        record["class_probs"] = *pred.class_probs;
    else
        record["class_probs"] = nullptr;
    return record;
}

Prediction parse_prediction(const json& record) {
    static constexpr const char* ctx = "prediction";
    if (!record.is_object())
        throw SchemaError("prediction: record must be an object");

    Prediction pred;
    pred.query_id = require_string(record, "query_id", ctx);
    const json& ranked = require_field(record, "ranked", ctx);
    if (!ranked.is_array())
        throw SchemaError("prediction: 'ranked' must be an array");
    for (const json& item : ranked) {
        RankedSentence r;
        r.para = require_int(item, "para", ctx);
        r.sent = require_int(item, "sent", ctx);
        const json& score = require_field(item, "score", ctx);
        if (!score.is_number())
            throw SchemaError("prediction: 'score' must be a number");
        r.score = score.get<double>();
        pred.ranked.push_back(r);
    }
    if (auto it = record.find("class"); it != record.end() && !it->is_null())
        pred.class_idx = class_index(it->get<std::string>());
    if (auto it = record.find("class_probs"); it != record.end() && !it->is_null()) {
        if (!it->is_array() || it->size() != 4)
            throw SchemaError("prediction: 'class_probs' must have 4 entries");
        std::array<double, 4> probs{};
        for (std::size_t i = 0; i < 4; ++i) probs[i] = (*it)[i].get<double>();
        pred.class_probs = probs;
    }
    return pred;
}

std::vector<Prediction> read_predictions(const std::string& path) {
    std::vector<Prediction> preds;
    for_each_record(path, "prediction",
                    [&](const json& record) { preds.push_back(parse_prediction(record)); });
    return preds;
}

void write_predictions(const std::vector<Prediction>& preds,
                       const std::string& path) {
    auto out = open_for_write(path, "prediction");
    for (const Prediction& pred : preds)
        out << prediction_to_json(pred).dump() << '\n';
}

void append_trace_lines(std::ostream& out, const std::string& query_id,
                        const RetrievalTrace& trace) {
    for (const HopRecord& rec : trace.records) {
        json line = {{"query_id", query_id},
                     {"hop", rec.hop},
                     {"retrieved",
                      {{"kind", kind_tag(rec.retrieved_kind)},
                       {"para", rec.retrieved_para},
                       {"sent", rec.retrieved_sent}}},
                     {"score", rec.retrieved_score}};
        line["alpha"] = rec.alpha ? json(*rec.alpha) : json(nullptr);
        line["beta"] = rec.beta ? json(*rec.beta) : json(nullptr);
        out << line.dump() << '\n';
    }
}

json metric_report_to_json(const MetricReport& report) {
    json obj = json::object();
    if (report.hits_at_1) obj["hits_at_1"] = *report.hits_at_1;
    if (report.evidence_coverage) obj["evidence_coverage"] = *report.evidence_coverage;
    if (report.em) obj["em"] = *report.em;
    if (report.f1) obj["f1"] = *report.f1;
    if (report.easy_acc) obj["easy_acc"] = *report.easy_acc;
    if (report.strict_acc) obj["strict_acc"] = *report.strict_acc;
    if (report.throughput_qps) obj["throughput_qps"] = *report.throughput_qps;
    return obj;
}

namespace {

SectionNode parse_section(const json& node) {
    SectionNode out;
    if (auto it = node.find("title"); it != node.end() && it->is_string())
        out.title = it->get<std::string>();
    if (auto it = node.find("text"); it != node.end() && it->is_string())
        out.text = it->get<std::string>();
    if (auto it = node.find("children"); it != node.end()) {
        if (!it->is_array())
            throw SchemaError("paper record: 'children' must be an array");
        for (const json& child : *it) out.children.push_back(parse_section(child));
    }
    return out;
}

std::vector<std::string> string_array(const json& arr, const char* ctx) {
    if (!arr.is_array())
        throw SchemaError(std::string(ctx) + " must be an array");
    std::vector<std::string> out;
    for (const json& item : arr) {
        if (item.is_null())
            out.emplace_back();
        else if (item.is_string())
            out.push_back(item.get<std::string>());
        else
            throw SchemaError(std::string(ctx) + " entries must be strings");
    }
    return out;
}

}  // namespace

StructuredDocument parse_raw_document(const json& record) {
    if (!record.is_object())
        throw SchemaError("raw document: record must be an object");
    if (record.contains("paragraphs")) return parse_document(record);

    const std::string id = require_string(record, "id", "raw document");

    if (record.contains("rows")) {
        const auto headers =
            string_array(require_field(record, "headers", "table record"),
                         "table record: 'headers'");
        const json& rows = require_field(record, "rows", "table record");
        if (!rows.is_array() || rows.empty())
            throw SchemaError("table record: 'rows' must be a non-empty array");

        StructuredDocument doc;
        doc.id = id;
        int row_idx = 0;
        for (const json& row : rows) {
            const auto cells = string_array(require_field(row, "cells", "table row"),
                                            "table row: 'cells'");
            std::vector<std::vector<std::string>> links(cells.size());
            if (auto it = row.find("links"); it != row.end() && !it->is_null()) {
                if (!it->is_array() || it->size() != cells.size())
                    throw SchemaError(
                        "table row: 'links' must align with 'cells'");
                for (std::size_t c = 0; c < cells.size(); ++c)
                    links[c] = string_array((*it)[c], "table row: 'links' entry");
            }
            doc.paragraphs.push_back(linearize_table_row(
                "r" + std::to_string(row_idx), headers, cells, links));
            ++row_idx;
        }
        doc.validate();
        return doc;
    }

    if (record.contains("sections")) {
        const json& sections = require_field(record, "sections", "paper record");
        if (!sections.is_array() || sections.empty())
            throw SchemaError("paper record: 'sections' must be a non-empty array");
        std::vector<SectionNode> nodes;
        for (const json& node : sections) nodes.push_back(parse_section(node));
        return linearize_paper(id, nodes);
    }

    throw SchemaError("raw document '" + id +
                      "': expected 'paragraphs', 'rows', or 'sections'");
}

std::vector<StructuredDocument> read_raw_documents(const std::string& path) {
    std::vector<StructuredDocument> docs;
    for_each_record(path, "raw document", [&](const json& record) {
        docs.push_back(parse_raw_document(record));
    });
    return docs;
}

TrainingInstance build_training_instance(
    const StructuredDocument& doc, const EmbeddingProvider& provider,
    const TrainRow& row, const std::vector<std::optional<EntryKind>>& masks,
    IndexRegime regime) {
    doc.validate();
    validate_query(row.query);
    const std::size_t hops = static_cast<std::size_t>(row.query.hops());
    if (masks.size() != hops)
        throw ValidationError("need one mask per hop: " +
                              std::to_string(masks.size()) + " masks for " +
                              std::to_string(hops) + " hops");

    TrainingInstance inst;
    inst.query_id = row.query.id;
    inst.regime = regime;
    inst.masks = masks;

    for (std::size_t pi = 0; pi < doc.paragraphs.size(); ++pi) {
        const auto vecs = embed_sentences(provider, doc.id, doc.paragraphs[pi]);
        std::vector<Vec> converted;
        converted.reserve(vecs.size());
        for (const VecF& v : vecs) converted.push_back(to_double(v));
        inst.sentences.push_back(std::move(converted));

        auto pv = provider.paragraph_vec(doc.id, static_cast<int>(pi));
        inst.para_override.push_back(pv ? std::optional<Vec>(to_double(*pv))
                                        : std::nullopt);
    }

    const auto units = embed_query_units(provider, row.query);
    for (const VecF& u : units) inst.query_init.push_back(to_double(u));

    inst.positives.assign(hops, {});
    for (const auto& [hop, refs] : row.labels) {
        if (hop < 0 || static_cast<std::size_t>(hop) >= hops)
            throw ValidationError("label hop " + std::to_string(hop) +
                                  " out of range for " + std::to_string(hops) +
                                  "-hop query '" + row.query.id + "'");
        const auto& mask = masks[static_cast<std::size_t>(hop)];
        auto& out = inst.positives[static_cast<std::size_t>(hop)];
        for (const LabelRef& ref : refs) {
            if (ref.para < 0 ||
                static_cast<std::size_t>(ref.para) >= doc.paragraphs.size())
                throw ValidationError("label paragraph " + std::to_string(ref.para) +
                                      " out of range in document '" + doc.id + "'");
            const std::size_t para = static_cast<std::size_t>(ref.para);
            if (ref.kind == EntryKind::Sentence) {
                if (ref.sent < 0 || static_cast<std::size_t>(ref.sent) >=
                                        doc.paragraphs[para].sentences.size())
                    throw ValidationError("label sentence " + std::to_string(ref.sent) +
                                          " out of range in paragraph " +
                                          std::to_string(ref.para));
                if (mask && *mask == EntryKind::Paragraph)
                    out.push_back(inst.entry_of_paragraph(para));
                else
                    out.push_back(inst.entry_of_sentence(
                        para, static_cast<std::size_t>(ref.sent)));
            } else {
                if (mask && *mask == EntryKind::Sentence) {
                    for (std::size_t s = 0;
                         s < inst.sentences[para].size(); ++s)
                        out.push_back(inst.entry_of_sentence(para, s));
                } else {
                    out.push_back(inst.entry_of_paragraph(para));
                }
            }
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
    }

    if (row.gold_class) inst.gold_class = class_index(*row.gold_class);

    inst.validate();
    return inst;
}

}  // namespace hopmix
