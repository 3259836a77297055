#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hopmix/hop_engine.hpp"
#include "hopmix/index.hpp"
#include "hopmix/vecmath.hpp"

namespace hopmix {

enum class MultiPositiveRule { MarginalLog, SumCE };

struct TrainableFlags {
    bool mix_params = true;
    bool query_vecs = false;
    bool sentence_vecs = false;
};

struct TrainConfig {
    double learning_rate = 0.05;
    int steps = 100;
    std::uint64_t seed = 1;
    MultiPositiveRule multi_positive = MultiPositiveRule::MarginalLog;
    TrainableFlags trainable;
    double momentum = 0.0;     // 0 = plain SGD; 0.9 is the documented variant
    bool update_enabled = true;  // residual-update ablation switch
    // When a gold class is present its cross entropy joins the total loss, so
    // u and W_c receive gradient through the same tape.
    bool include_classification = true;
};

// One training example: a miniature combined index held in double precision
// plus per-hop supervision. Entry numbering mirrors the index layout
// p_0, s_0^0, ..., s_0^{n_0-1}, p_1, ...
struct TrainingInstance {
    std::string query_id;
    IndexRegime regime = IndexRegime::Agnostic;
    std::vector<std::vector<Vec>> sentences;        // [para][sent]
    std::vector<std::optional<Vec>> para_override;  // explicit paragraph vectors
    std::vector<Vec> query_init;                    // q_t before residuals, per hop
    std::vector<std::optional<EntryKind>> masks;    // per-hop candidate filter
    std::vector<std::vector<std::uint32_t>> positives;  // per-hop entry indices
    std::optional<int> gold_class;

    std::size_t dim() const;
    std::size_t hops() const { return query_init.size(); }
    std::size_t n_entries() const;
    std::uint32_t entry_of_paragraph(std::size_t para) const;
    std::uint32_t entry_of_sentence(std::size_t para, std::size_t sent) const;
    // (kind, para, sent) of an entry index.
    IndexEntry entry_at(std::uint32_t entry) const;
    void validate() const;
};

// Everything the backward pass needs, recorded hop by hop.
struct HopTape {
    Vec q;                            // query after residual
    std::vector<std::uint32_t> cand;  // candidate entries under this hop's mask
    Vec scores;                       // aligned with cand
    Vec probs;
    double loss = 0.0;
    std::vector<Vec> def_sdots;  // deferred regime: per-para sentence dots
    std::vector<Vec> def_alpha;  // deferred regime: per-para attention
    std::uint32_t retrieved_entry = 0;
    EntryKind retrieved_kind = EntryKind::Paragraph;
    std::int32_t retrieved_para = -1;
    std::int32_t retrieved_sent = -1;
    double margin = 0.0;  // argmax score minus runner-up (inf when unique)
    Vec mix_g;            // fresh q.s dots driving alpha (agnostic paragraph mix)
    Vec mix_alpha;        // empty for the sentence branch
    std::vector<Vec> k;
    Vec vdotk;
    Vec beta;  // empty for the sentence branch
    Vec q_tilde;
};

struct ClassTape {
    Vec udotk;   // u.k over all hops' k vectors, flattened in hop order
    Vec gamma;
    Vec k_tilde;
    Vec logits;  // 4
    Vec probs;   // 4
    double loss = 0.0;
};

struct ForwardTape {
    std::vector<HopTape> hops;
    std::optional<ClassTape> cls;
    double total = 0.0;
};

struct GradReport {
    Vec d_Wq;  // 2*dim*dim, row-major like MixParams
    Vec d_v;
    Vec d_u;
    Vec d_Wc;  // dim*4
    std::vector<Vec> d_query_init;             // per hop; empty unless flagged
    std::vector<std::vector<Vec>> d_sentences;  // [para][sent]; empty unless flagged
};

// Per-hop loss on a real index: p = softmax over ALL entry scores (no mask),
// then MarginalLog -log(sum of positive mass) or SumCE -sum of positive log
// probs. A single positive reduces both to plain cross entropy.
double step_loss(const Vec& q, const CombinedIndex& index,
                 const std::vector<std::uint32_t>& positives,
                 MultiPositiveRule rule = MultiPositiveRule::MarginalLog);

ForwardTape forward(const TrainingInstance& inst, const MixParams& params,
                    const TrainConfig& cfg);
double total_loss(const TrainingInstance& inst, const MixParams& params,
                  const TrainConfig& cfg);

// Exact reverse-mode gradients through softmaxes, concatenations, weighted
// sums and the residual update. No gradient flows through argmax selection.
GradReport backward(const TrainingInstance& inst, const MixParams& params,
                    const ForwardTape& tape, const TrainConfig& cfg);

// Smallest retrieval margin across hops; instances near an argmax tie are
// rejected before finite-difference checking.
double min_retrieval_margin(const ForwardTape& tape);

struct GradCheckResult {
    double max_rel_error = 0.0;
    int params_checked = 0;
};

// Central finite differences against the analytic gradients for every
// parameter covered by cfg.trainable.
GradCheckResult grad_check(const TrainingInstance& inst, const MixParams& params,
                           const TrainConfig& cfg, double h = 1e-4);

struct FitResult {
    MixParams params;
    std::vector<double> loss_curve;  // mean loss per step, before that update
};

// Full-batch gradient descent (optional momentum). Deterministic: fixed
// iteration order, ordered mean of per-instance gradients.
FitResult fit(const std::vector<TrainingInstance>& dataset, MixParams init,
              const TrainConfig& cfg);

// HCKP checkpoint: magic "HCKP", u32 version=1, u32 dim, u32 n_tensors, then
// per tensor (u32 name length, name, u64 count, count * f64), little-endian.
// Round-trips bit-exactly.
void save_checkpoint(const MixParams& params, const std::string& path);
MixParams load_checkpoint(const std::string& path);

}  // namespace hopmix
