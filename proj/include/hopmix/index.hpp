#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hopmix/embed.hpp"
#include "hopmix/vecmath.hpp"

namespace hopmix {

enum class EntryKind : std::uint8_t { Paragraph = 0, Sentence = 1 };

enum class IndexRegime {
    Agnostic,                // paragraph vectors materialized at build time
    QueryDependentDeferred,  // paragraph vectors realized per query from Eq-style
                             // attention over their sentences
};

struct IndexEntry {
    EntryKind kind;
    std::int32_t para_idx;
    std::int32_t sent_idx;  // -1 for paragraph entries
};

// Entry index of a paragraph plus the contiguous range of its sentence entries.
struct ParaSpan {
    std::uint32_t para_entry;
    std::uint32_t first_sentence_entry;
    std::uint32_t n_sentences;
};

// The combined paragraph+sentence retrieval index of one document. Entries are
// ordered p_0, s_0^0, ..., s_{|p_0|}^0, p_1, ... and vectors live in one
// contiguous dim-strided f32 block. Immutable after build/load.
struct CombinedIndex {
    std::string doc_id;
    std::uint32_t dim = 0;
    IndexRegime regime = IndexRegime::Agnostic;
    std::vector<IndexEntry> entries;
    std::vector<float> values;    // entries.size() * dim; zeros for deferred paragraphs
    std::vector<ParaSpan> paras;  // indexed by para_idx

    std::size_t size() const { return entries.size(); }
    std::span<const float> vec(std::size_t entry) const {
        return {values.data() + entry * dim, dim};
    }
    std::span<const float> sentence_vec(std::uint32_t para_idx, std::uint32_t j) const {
        return vec(paras[para_idx].first_sentence_entry + j);
    }

    // Checks structural consistency (block shape, links, value-block size).
    // Paragraph blocks may appear in any order; build_index always emits the
    // canonical p_0-first order.
    void validate() const;
};

struct ScoredEntry {
    std::uint32_t entry;
    double score;
};

// Query-local scratch: sentence dot products and, under the deferred regime,
// the per-paragraph attention weights realized for the current query. Never
// shared across queries.
struct ScoreWorkspace {
    std::vector<double> raw_dots;             // per entry
    std::vector<std::vector<double>> alphas;  // per para_idx; empty if unrealized
    void reset(const CombinedIndex& index);
};

// --- operations --------------------------------------------------------------

CombinedIndex build_index(const StructuredDocument& doc,
                          const EmbeddingProvider& provider, IndexRegime regime);

// score_m = q . c_m for every entry passing the kind mask, in entry order.
// Under the deferred regime paragraph scores are softmax(q.s)-weighted sums of
// their sentence scores; the realized weights are kept in `ws` for reuse.
std::vector<ScoredEntry> score_all(const Vec& q, const CombinedIndex& index,
                                   std::optional<EntryKind> mask, ScoreWorkspace& ws);
std::vector<ScoredEntry> score_all(const Vec& q, const CombinedIndex& index,
                                   std::optional<EntryKind> mask = std::nullopt);

// Maximal score; ties break to the lowest entry index.
ScoredEntry argmax_entry(std::span<const ScoredEntry> scores);

// HIDX binary: magic "HIDX", u32 version=1, u32 dim, u32 n_paragraphs,
// u32 n_entries, then per entry (u8 kind, i32 para_idx, i32 sent_idx,
// dim * f32). Kind byte: 0 paragraph, 1 sentence, 2 deferred paragraph.
// Little-endian. load(save(x)) is bit-identical to x.
void save_index(const CombinedIndex& index, const std::string& path);
CombinedIndex load_index(const std::string& path);

}  // namespace hopmix
