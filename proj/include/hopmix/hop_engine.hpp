#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hopmix/index.hpp"
#include "hopmix/vecmath.hpp"

namespace hopmix {

// Trainable parameters of the mixing step and the classification head.
// W_q is (2*dim x dim) row-major, W_c is (dim x 4) row-major; all double.
struct MixParams {
    std::size_t dim = 0;
    Vec W_q;  // 2*dim*dim
    Vec v;    // dim
    Vec u;    // dim
    Vec W_c;  // dim*4

    static MixParams zeros(std::size_t dim);
    static MixParams random(std::size_t dim, Rng& rng, double scale = 0.1);
    void validate() const;  // shapes + finiteness

    double wq(std::size_t row, std::size_t col) const { return W_q[row * dim + col]; }
    double wc(std::size_t row, std::size_t col) const { return W_c[row * 4 + col]; }
};

struct QueryState {
    std::vector<Vec> vectors;  // q_0 .. q_{n-1}
    int current_hop = 0;
};

struct HopRecord {
    int hop = 0;
    std::vector<ScoredEntry> scores;  // empty unless scores were kept
    std::uint32_t retrieved = 0;
    EntryKind retrieved_kind = EntryKind::Paragraph;
    std::int32_t retrieved_para = -1;
    std::int32_t retrieved_sent = -1;
    double retrieved_score = 0.0;
    std::optional<Vec> alpha;  // paragraph mix only
    std::vector<Vec> k_vectors;
    std::optional<Vec> beta;  // paragraph mix only
    Vec q_tilde;
};

struct RetrievalTrace {
    std::vector<HopRecord> records;
    std::optional<std::pair<std::int32_t, std::int32_t>> final_sentence;
};

// Time spent per stage across one or more run_hops calls, in nanoseconds.
struct StageTimers {
    std::uint64_t score_ns = 0;
    std::uint64_t mix_ns = 0;
    std::uint64_t update_ns = 0;
};

struct RunOptions {
    bool keep_scores = true;
    bool update_enabled = true;  // ablation switch for the residual update
    StageTimers* timers = nullptr;
};

// Reusable per-query scratch to keep run_hops allocation-free in hot loops.
struct RunScratch {
    ScoreWorkspace ws;
    std::vector<ScoredEntry> scored;
    Vec sentence_buf;
    std::vector<Vec> para_buf;
};

struct MixOutput {
    Vec q_tilde;
    Vec alpha;  // empty for the sentence branch
    Vec beta;   // empty for the sentence branch
    std::vector<Vec> k_vectors;
};

// k[c] = sum_r W_q[r][c] * x[r] with x = [top; bottom]; callers never
// materialize the concatenation. Shared by the mix ops and the training tape.
void mix_project(const MixParams& params, std::span<const double> top,
                 std::span<const double> bottom, Vec& k);

// k = W_q^T [q; s]; q-tilde = k.
void mix_sentence(const Vec& q, std::span<const double> s, const MixParams& params,
                  Vec& q_tilde, Vec& k);
MixOutput mix_sentence(const Vec& q, std::span<const double> s,
                       const MixParams& params);

// alpha_j = softmax(q.s_j); k_j = W_q^T [alpha_j q; s_j]; beta = softmax(v.k_j);
// q-tilde = sum_j beta_j k_j. The overload taking alpha reuses weights already
// realized while scoring a deferred paragraph.
MixOutput mix_paragraph(const Vec& q, const std::vector<Vec>& sent_vecs,
                        const MixParams& params);
MixOutput mix_paragraph_with_alpha(const Vec& q, const std::vector<Vec>& sent_vecs,
                                   Vec alpha, const MixParams& params);

// vectors[current_hop+1] += q_tilde; current_hop advances.
void update_query(QueryState& state, const Vec& q_tilde);

// Full retrieve -> mix -> update loop. hop_masks must have one (possibly empty)
// filter per hop. No update after the final hop; its mix outputs are still
// recorded for the classification head.
RetrievalTrace run_hops(QueryState& state, const CombinedIndex& index,
                        const MixParams& params,
                        const std::vector<std::optional<EntryKind>>& hop_masks,
                        RunScratch* scratch = nullptr, const RunOptions& opts = {});

}  // namespace hopmix
