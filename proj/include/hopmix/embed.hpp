#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hopmix/doc_model.hpp"
#include "hopmix/vecmath.hpp"

namespace hopmix {

// Keys of the embedding table / HMIX file:
//   "{doc}|{para_idx}|{sent_idx}"  sentence vector
//   "{doc}|{para_idx}|PARA"        explicit paragraph vector
//   "{query_id}|unit{t}"           query-unit vector
std::string sentence_key(std::string_view doc_id, int para_idx, int sent_idx);
std::string paragraph_key(std::string_view doc_id, int para_idx);
std::string query_unit_key(std::string_view query_id, int unit_idx);

// Flat key -> f32 vector store; the in-memory form of an HMIX file.
struct EmbeddingTable {
    int dim = 0;
    std::unordered_map<std::string, VecF> entries;

    void put(std::string key, VecF vec);
    const VecF* find(const std::string& key) const;
};

// HMIX binary: magic "HMIX", u32 version=1, u32 dim, u64 count, then per
// record (u32 key length, key bytes, dim * f32). Little-endian.
void save_embedding_table(const EmbeddingTable& table, const std::string& path);
EmbeddingTable load_embedding_table(const std::string& path);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual int dim() const = 0;

    virtual VecF sentence_vec(std::string_view doc_id, int para_idx, int sent_idx,
                              std::string_view text) const = 0;
    // Explicit paragraph vector, if the provider has one; nullopt means the
    // caller aggregates sentence vectors instead.
    virtual std::optional<VecF> paragraph_vec(std::string_view doc_id,
                                              int para_idx) const = 0;
    virtual VecF query_unit_vec(std::string_view query_id, int unit_idx,
                                std::string_view effective_text) const = 0;
};

// Platform-stable pseudo-embeddings: component k of the vector for a string is
//   ((fnv1a64(text, seed=k) mod 2001) - 1000) / 1000  in [-1, 1],
// where fnv1a64(text, seed=k) runs FNV-1a with offset basis
// 14695981039346656037 XOR (0x9E3779B97F4A7C15 * (k + 1)) and prime
// 1099511628211 over the UTF-8 bytes. Identical text gives identical vectors
// on every platform.
class ToyDeterministicProvider final : public EmbeddingProvider {
public:
    explicit ToyDeterministicProvider(int dim);
    int dim() const override { return dim_; }

    VecF sentence_vec(std::string_view, int, int, std::string_view text) const override;
    std::optional<VecF> paragraph_vec(std::string_view, int) const override;
    VecF query_unit_vec(std::string_view, int, std::string_view effective_text) const override;

    VecF embed_text(std::string_view text) const;
    static std::uint64_t hash64(std::string_view text, int component);

private:
    int dim_;
};

// Serves vectors from a loaded EmbeddingTable; a missing key is a LookupError
// naming the key.
class FromFileProvider final : public EmbeddingProvider {
public:
    explicit FromFileProvider(EmbeddingTable table);
    int dim() const override { return table_.dim; }

    VecF sentence_vec(std::string_view doc_id, int para_idx, int sent_idx,
                      std::string_view text) const override;
    std::optional<VecF> paragraph_vec(std::string_view doc_id, int para_idx) const override;
    VecF query_unit_vec(std::string_view query_id, int unit_idx,
                        std::string_view effective_text) const override;

    const EmbeddingTable& table() const { return table_; }

private:
    const VecF& lookup(const std::string& key) const;
    EmbeddingTable table_;
};

// --- operations -------------------------------------------------------------

// One vector per sentence, in order.
std::vector<VecF> embed_sentences(const EmbeddingProvider& provider,
                                  std::string_view doc_id, const Paragraph& paragraph);

// One vector per query unit, q_0 ... q_n. Dummy units of multi-hop queries are
// embedded from "{marker} {q0}" so every dummy sees the full original query.
std::vector<VecF> embed_query_units(const EmbeddingProvider& provider,
                                    const QueryParagraph& qp);

// Query-agnostic paragraph vector: arithmetic mean of the sentence vectors.
VecF paragraph_embedding_agnostic(const std::vector<VecF>& sent_vecs);

// Query-dependent paragraph vector (attention-weighted sum):
//   alpha_j = softmax_j(q . s_j),  p = sum_j alpha_j s_j.
struct QueryDepEmbedding {
    Vec p;
    Vec alpha;
};
QueryDepEmbedding paragraph_embedding_query_dep(const Vec& q,
                                                const std::vector<VecF>& sent_vecs);

}  // namespace hopmix
