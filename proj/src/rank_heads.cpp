#include "hopmix/rank_heads.hpp"

#include <algorithm>
#include <cmath>

#include "hopmix/errors.hpp"
#include "hopmix/text_metrics.hpp"

namespace hopmix {

std::vector<SentenceScore> fused_sentence_scores(
    const Vec& q0, const Vec& q1, const CombinedIndex& index,
    const FusionWeights& weights, std::string_view question_text,
    const std::vector<std::string>& paragraph_texts) {
    require_dim(q0, index.dim, "fusion q0");
    require_dim(q1, index.dim, "fusion q1");
    if (paragraph_texts.size() != index.paras.size())
        throw ValidationError("paragraph text count " +
                              std::to_string(paragraph_texts.size()) +
                              " does not match index paragraphs " +
                              std::to_string(index.paras.size()));

    const auto para_scores = score_all(q0, index, EntryKind::Paragraph);
    const auto sent_scores = score_all(q1, index, EntryKind::Sentence);

    Vec para_term(index.paras.size());
    for (const ScoredEntry& se : para_scores) {
        const std::size_t pi =
            static_cast<std::size_t>(index.entries[se.entry].para_idx);
        para_term[pi] =
            weights.lambda1 * se.score +
            weights.lambda2 *
                static_cast<double>(lcs_len(question_text, paragraph_texts[pi]));
    }

    std::vector<SentenceScore> out;
    out.reserve(sent_scores.size());
    for (const ScoredEntry& se : sent_scores) {
        const IndexEntry& entry = index.entries[se.entry];
        out.push_back({entry.para_idx, entry.sent_idx,
                       se.score + para_term[static_cast<std::size_t>(entry.para_idx)]});
    }
    return out;
}

ClassLogits classify_conversation(const RetrievalTrace& trace,
                                  const MixParams& params) {
    params.validate();
    std::vector<const Vec*> ks;
    for (const HopRecord& rec : trace.records)
        for (const Vec& k : rec.k_vectors) ks.push_back(&k);
    if (ks.empty())
        throw ValidationError("classification over a trace with no mixed vectors");

    Vec udotk(ks.size());
    for (std::size_t i = 0; i < ks.size(); ++i) {
        require_dim(static_cast<std::span<const double>>(*ks[i]), params.dim,
                    "classification k vector");
        udotk[i] = dot(params.u, *ks[i]);
    }
    const Vec gamma = softmax(udotk);
    Vec k_tilde(params.dim, 0.0);
    for (std::size_t i = 0; i < ks.size(); ++i) axpy(gamma[i], *ks[i], k_tilde);

    ClassLogits logits;
    logits.m.assign(4, 0.0);
    for (std::size_t r = 0; r < params.dim; ++r)
        for (std::size_t c = 0; c < 4; ++c)
            logits.m[c] += params.wc(r, c) * k_tilde[r];
    return logits;
}

Vec class_probabilities(const ClassLogits& logits) {
    if (logits.m.size() != 4)
        throw ValidationError("class logits must have length 4");
    return softmax(logits.m);
}

int class_index(std::string_view name) {
    for (std::size_t i = 0; i < kClassNames.size(); ++i)
        if (kClassNames[i] == name) return static_cast<int>(i);
    throw ValidationError("unknown class name '" + std::string(name) + "'");
}

double classification_loss(const ClassLogits& logits, int gold) {
    if (logits.m.size() != 4)
        throw ValidationError("class logits must have length 4");
    if (gold < 0 || gold > 3)
        throw ValidationError("gold class " + std::to_string(gold) +
                              " out of range");
    const double m = *std::max_element(logits.m.begin(), logits.m.end());
    double sum = 0.0;
    for (double x : logits.m) sum += std::exp(x - m);
    return m + std::log(sum) - logits.m[static_cast<std::size_t>(gold)];
}

}  // namespace hopmix
