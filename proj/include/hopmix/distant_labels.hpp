#pragma once

#include <string>
#include <vector>

#include "hopmix/doc_model.hpp"
#include "hopmix/index.hpp"

namespace hopmix {

// A positive by document position (not entry index); sent = -1 for paragraphs.
struct LabelRef {
    EntryKind kind;
    int para;
    int sent;

    friend bool operator==(const LabelRef&, const LabelRef&) = default;
};

struct DistantLabels {
    std::vector<std::vector<LabelRef>> per_hop;
    bool drop = false;       // example unusable (weak BLEU match)
    double best_bleu = 0.0;  // diagnostic, conversational builder only
};

// Conversational supervision: the positive paragraph maximizes
// bleu_no_bp(paragraph tokens, snippet tokens); if that maximum is below
// `bleu_threshold` the example is dropped. Each gold sentence contributes the
// document sentence with minimum token edit distance. Paragraph and sentence
// positives share one label set, applied to every hop.
DistantLabels build_distant_labels_conversational(
    const StructuredDocument& doc, const std::string& gold_snippet,
    const std::vector<std::string>& gold_sentences, std::size_t hops = 1,
    double bleu_threshold = 0.7);

// Extractive supervision: hop-2 positives are every sentence whose normalized
// text contains the normalized answer; hop-1 positives are their parent
// paragraphs. Always two hops.
DistantLabels build_distant_labels_extractive(const StructuredDocument& doc,
                                              const std::string& answer);

}  // namespace hopmix
