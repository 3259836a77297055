#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hopmix/doc_model.hpp"
#include "hopmix/embed.hpp"
#include "hopmix/hop_engine.hpp"
#include "hopmix/index.hpp"
#include "hopmix/train.hpp"

namespace hopmix {

// Generator for the planted-chain benchmark. One document per query; the gold
// hop-2 sentence is recoverable from the gold paragraph's *mean* through a
// fixed dataset-global linear map, but every single sentence carries that
// payload at an unknown per-sentence scale, and a decoy sentence covers the
// payload-free direction — so paragraph-level mixing solves the task while
// single-sentence conditioning and single-hop scoring both break.
struct SynthSpec {
    int n_docs = 200;
    int paras_per_doc = 10;
    int sents_per_para = 5;
    int dim = 32;
    int hops = 2;
    std::uint64_t seed = 1;

    double train_fraction = 0.8;
    double query_noise = 0.6;     // sigma of q_0 around the gold topic
    double sentence_noise = 0.4;  // sigma of the residual sentence noise
    double payload_spread = 1.1;  // sigma of the per-sentence payload scale
    double decoy_scale = 0.8;     // decoy norm relative to a typical sentence
    double min_margin = 0.3;      // planted-run argmax gap required per hop

    void validate() const;
};

struct SynthQuery {
    std::string id;
    std::string doc_id;
    int doc_index = 0;
    int gold_para = 0;                                // hop-1 target
    std::vector<std::pair<int, int>> gold_sentences;  // hops 2..n targets
    int decoy_para = -1;  // payload-free decoy position, when one was planted
    int decoy_sent = -1;
};

struct SynthDataset {
    SynthSpec spec;
    std::vector<StructuredDocument> docs;
    EmbeddingTable embeddings;  // sentence + query-unit vectors, f32
    std::vector<SynthQuery> train;
    std::vector<SynthQuery> test;
    MixParams planted;  // zero query block, payload map in the sentence block
};

// Deterministic in spec (bit-identical across calls). Every emitted query is
// verified: running the hop loop with the planted parameters retrieves the
// full gold chain with per-hop argmax margins >= spec.min_margin, re-rolling
// the document otherwise.
SynthDataset synth_generate(const SynthSpec& spec);

enum class SynthMode {
    Full,          // paragraph hop then sentence hops
    SentenceOnly,  // every hop restricted to sentence entries
};

std::vector<std::optional<EntryKind>> synth_masks(int hops, SynthMode mode);

// Fraction of queries whose final-hop retrieval equals the gold sentence,
// running the production hop loop over indexes built from the stored f32
// embeddings. update_enabled=false is the residual-update ablation.
double synth_hits_at_1(const SynthDataset& ds, const MixParams& params,
                       const std::vector<SynthQuery>& queries,
                       SynthMode mode = SynthMode::Full,
                       bool update_enabled = true);

// Labeled instances for fit(): hop 1 supervises the gold paragraph, later
// hops the gold sentences, remapped through the mode's masks.
std::vector<TrainingInstance> synth_training_instances(
    const SynthDataset& ds, const std::vector<SynthQuery>& queries,
    SynthMode mode = SynthMode::Full);

}  // namespace hopmix
