#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "hopmix/hop_engine.hpp"
#include "hopmix/index.hpp"
#include "hopmix/vecmath.hpp"

namespace hopmix {

struct FusionWeights {
    double lambda1 = 1.5;
    double lambda2 = 3.0;
};

struct SentenceScore {
    std::int32_t para;
    std::int32_t sent;
    double score;
};

// score(s_j^i) = q1.s_j^i + lambda1 * (q0.p_i) + lambda2 * lcs_len(question,
// paragraph_text_i). The paragraph terms are broadcast to every sentence of
// the paragraph; the sparse LCS feature enters only here, never during hops.
// Results in entry order (paragraph-major, sentence order).
std::vector<SentenceScore> fused_sentence_scores(
    const Vec& q0, const Vec& q1, const CombinedIndex& index,
    const FusionWeights& weights, std::string_view question_text,
    const std::vector<std::string>& paragraph_texts);

// Fixed class order for files and flags.
inline constexpr std::array<std::string_view, 4> kClassNames = {
    "Yes", "No", "Irrelevant", "Inquire"};

// Index of a class name in kClassNames; ValidationError for anything else.
int class_index(std::string_view name);

struct ClassLogits {
    Vec m;  // exactly 4
};

// gamma = softmax over u.k for every k vector of every hop; k-tilde is their
// gamma-weighted sum; m = W_c^T k-tilde.
ClassLogits classify_conversation(const RetrievalTrace& trace,
                                  const MixParams& params);

Vec class_probabilities(const ClassLogits& logits);

// Softmax cross entropy against a one-hot gold class.
double classification_loss(const ClassLogits& logits, int gold);

}  // namespace hopmix
