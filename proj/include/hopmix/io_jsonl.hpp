#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hopmix/distant_labels.hpp"
#include "hopmix/doc_model.hpp"
#include "hopmix/embed.hpp"
#include "hopmix/hop_engine.hpp"
#include "hopmix/metrics.hpp"
#include "hopmix/train.hpp"

namespace hopmix {

// One training-set record:
//   {"query": {"id", "kind", "units"}, "doc_id": str,
//    "labels": {"0": [{"kind": "para"|"sent", "para": int, "sent": int}, …], …},
//    "drop": bool}
// plus optional gold carried through to evaluation: "class": str,
// "answers": [str, …]. Absent optionals are omitted on write.
struct TrainRow {
    QueryParagraph query;
    std::string doc_id;
    std::map<int, std::vector<LabelRef>> labels;  // hop -> positives
    bool drop = false;
    std::optional<std::string> gold_class;
    std::vector<std::string> answers;
};

nlohmann::json train_row_to_json(const TrainRow& row);
TrainRow parse_train_row(const nlohmann::json& record);

std::vector<TrainRow> read_train_rows(const std::string& path);
void write_train_rows(const std::vector<TrainRow>& rows, const std::string& path);

std::vector<StructuredDocument> read_documents(const std::string& path);
void write_documents(const std::vector<StructuredDocument>& docs,
                     const std::string& path);

// {"query_id": str, "ranked": [{"para", "sent", "score"}, …],
//  "class": str|null, "class_probs": [4 reals]|null}
nlohmann::json prediction_to_json(const Prediction& pred);
Prediction parse_prediction(const nlohmann::json& record);
std::vector<Prediction> read_predictions(const std::string& path);
void write_predictions(const std::vector<Prediction>& preds,
                       const std::string& path);

// One line per hop:
// {"query_id", "hop", "retrieved": {"kind", "para", "sent"}, "score",
//  "alpha": […]|null, "beta": […]|null}
void append_trace_lines(std::ostream& out, const std::string& query_id,
                        const RetrievalTrace& trace);

// Only the fields the report actually carries appear in the object.
nlohmann::json metric_report_to_json(const MetricReport& report);

// Raw-input records, one JSON object per line, keyed by shape:
//   {"id", "headers": […], "rows": [{"cells": […], "links": [[…], …]}, …]}
//     -> table document, one paragraph per row
//   {"id", "sections": [{"title", "text", "children": […]}, …]}
//     -> sectioned paper, one paragraph per leaf
//   {"id", "paragraphs": […]}
//     -> already structured, parsed as-is
StructuredDocument parse_raw_document(const nlohmann::json& record);
std::vector<StructuredDocument> read_raw_documents(const std::string& path);

// Embeds one document and converts a labeled row into a self-contained
// training instance. Label positions are remapped to whatever a hop's mask
// keeps visible: a paragraph positive under a sentence-only mask becomes all
// of its sentences, a sentence positive under a paragraph-only mask becomes
// its parent paragraph.
TrainingInstance build_training_instance(
    const StructuredDocument& doc, const EmbeddingProvider& provider,
    const TrainRow& row, const std::vector<std::optional<EntryKind>>& masks,
    IndexRegime regime);

}  // namespace hopmix
