#include "hopmix/distant_labels.hpp"

#include <algorithm>
#include <limits>

#include "hopmix/errors.hpp"
#include "hopmix/text.hpp"
#include "hopmix/text_metrics.hpp"

namespace hopmix {

DistantLabels build_distant_labels_conversational(
    const StructuredDocument& doc, const std::string& gold_snippet,
    const std::vector<std::string>& gold_sentences, std::size_t hops,
    double bleu_threshold) {
    doc.validate();
    if (hops == 0) throw ValidationError("label builder needs at least one hop");
    const auto snippet_tokens = lower_tokens(gold_snippet);
    if (snippet_tokens.empty())
        throw ValidationError("gold snippet has no tokens");

    DistantLabels labels;
    int best_para = -1;
    double best_bleu = -1.0;
    for (std::size_t pi = 0; pi < doc.paragraphs.size(); ++pi) {
        const auto para_tokens = lower_tokens(paragraph_text(doc.paragraphs[pi]));
        if (para_tokens.empty()) continue;
        const double b = bleu_no_bp(para_tokens, snippet_tokens);
        if (b > best_bleu) {
            best_bleu = b;
            best_para = static_cast<int>(pi);
        }
    }
    if (best_para < 0) throw ValidationError("document has no token-bearing paragraphs");
    labels.best_bleu = best_bleu;
    if (best_bleu < bleu_threshold) {
        labels.drop = true;
        return labels;
    }

    std::vector<LabelRef> hop_set;
    hop_set.push_back({EntryKind::Paragraph, best_para, -1});
    for (const std::string& gold : gold_sentences) {
        const auto gold_tokens = lower_tokens(gold);
        int best_p = -1, best_s = -1;
        int best_dist = std::numeric_limits<int>::max();
        for (std::size_t pi = 0; pi < doc.paragraphs.size(); ++pi) {
            const auto& sents = doc.paragraphs[pi].sentences;
            for (std::size_t si = 0; si < sents.size(); ++si) {
                const int dist = edit_distance(lower_tokens(sents[si].text), gold_tokens);
                if (dist < best_dist) {
                    best_dist = dist;
                    best_p = static_cast<int>(pi);
                    best_s = static_cast<int>(si);
                }
            }
        }
        const LabelRef ref{EntryKind::Sentence, best_p, best_s};
        if (std::find(hop_set.begin(), hop_set.end(), ref) == hop_set.end())
            hop_set.push_back(ref);
    }
    labels.per_hop.assign(hops, hop_set);
    return labels;
}

DistantLabels build_distant_labels_extractive(const StructuredDocument& doc,
                                              const std::string& answer) {
    doc.validate();
    const std::string norm_answer = normalize_answer(answer);
    if (norm_answer.empty())
        throw ValidationError("answer is empty after normalization");

    std::vector<LabelRef> para_pos;
    std::vector<LabelRef> sent_pos;
    for (std::size_t pi = 0; pi < doc.paragraphs.size(); ++pi) {
        const auto& sents = doc.paragraphs[pi].sentences;
        bool para_hit = false;
        for (std::size_t si = 0; si < sents.size(); ++si) {
            if (normalize_answer(sents[si].text).find(norm_answer) ==
                std::string::npos)
                continue;
            sent_pos.push_back({EntryKind::Sentence, static_cast<int>(pi),
                                static_cast<int>(si)});
            para_hit = true;
        }
        if (para_hit)
            para_pos.push_back({EntryKind::Paragraph, static_cast<int>(pi), -1});
    }
    if (sent_pos.empty())
        throw LabelError("no sentence contains the answer '" + answer + "'");

    DistantLabels labels;
    labels.per_hop.push_back(std::move(para_pos));
    labels.per_hop.push_back(std::move(sent_pos));
    return labels;
}

}  // namespace hopmix
