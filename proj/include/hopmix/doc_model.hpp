#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hopmix/errors.hpp"

namespace hopmix {

struct Sentence {
    std::string id;    // unique within the document
    std::string text;  // non-empty after trim
    int para_idx = -1;
    int sent_idx = -1;
};

struct Paragraph {
    std::string id;
    std::optional<std::string> title;  // prepended at linearization time
    std::vector<Sentence> sentences;   // non-empty
};

struct StructuredDocument {
    std::string id;
    std::vector<Paragraph> paragraphs;  // non-empty

    int total_sentences() const;
    // Throws ValidationError if any hierarchy invariant is violated.
    void validate() const;
};

enum class QueryKind { Conversational, MultiHop };

struct QueryParagraph {
    std::string id;  // required by FromFile embedding lookups; may be empty otherwise
    QueryKind kind = QueryKind::Conversational;
    std::vector<std::string> units;  // sub-questions; non-empty

    int hops() const { return static_cast<int>(units.size()); }
};

// Reserved marker for the t'th dummy sub-question of a multi-hop query.
std::string dummy_marker(int t);
bool is_dummy_marker(const std::string& unit);

// Sentence texts joined with single spaces; the flat-text view of a paragraph.
std::string paragraph_text(const Paragraph& p);

// --- construction ----------------------------------------------------------

// One JSON Lines record:
// {"id": str, "paragraphs": [{"id": str, "title": str|null, "sentences": [str, ...]}, ...]}
StructuredDocument parse_document(const nlohmann::json& record);
StructuredDocument parse_document_line(std::string_view json_line);
nlohmann::json document_to_json(const StructuredDocument& doc);

// One table row becomes one paragraph: header and cell text are one sentence
// each, with hyperlinked sentences interleaved right after their cell.
// Empty headers/cells are kept as the "[EMPTY]" placeholder so the
// 2*|headers| + sum(|links|) sentence count always holds.
Paragraph linearize_table_row(const std::string& para_id,
                              const std::vector<std::string>& headers,
                              const std::vector<std::string>& cells,
                              const std::vector<std::vector<std::string>>& linked_texts);

struct SectionNode {
    std::string title;
    std::string text;  // loose text directly under this node
    std::vector<SectionNode> children;
};

// One paragraph per leaf subsection, depth-first; loose parent text becomes
// its own paragraph ahead of the children. The title path (ancestors joined
// with ". ") is prepended as the paragraph's first sentence.
StructuredDocument linearize_paper(const std::string& doc_id,
                                   const std::vector<SectionNode>& sections);

// Conversational query paragraph: initial question plus one rendered unit per
// followup pair ("Q: {question} A: {answer}").
QueryParagraph build_conversational_query(
    const std::string& q0,
    const std::vector<std::pair<std::string, std::string>>& followups,
    const std::string& query_id = "");

// Multi-hop query paragraph: the question plus hops-1 distinct dummy units.
QueryParagraph build_multihop_query(const std::string& q0, int hops,
                                    const std::string& query_id = "");

void validate_query(const QueryParagraph& qp);

bool operator==(const Sentence& a, const Sentence& b);
bool operator==(const Paragraph& a, const Paragraph& b);
bool operator==(const StructuredDocument& a, const StructuredDocument& b);

}  // namespace hopmix
