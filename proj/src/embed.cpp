#include "hopmix/embed.hpp"

#include <cstring>
#include <fstream>

#include "hopmix/text.hpp"

#if defined(__BYTE_ORDER__) && (__BYTE_ORDER__ != __ORDER_LITTLE_ENDIAN__)
#error "hopmix binary formats are little-endian only"
#endif

namespace hopmix {

std::string sentence_key(std::string_view doc_id, int para_idx, int sent_idx) {
    return std::string(doc_id) + "|" + std::to_string(para_idx) + "|" +
           std::to_string(sent_idx);
}

std::string paragraph_key(std::string_view doc_id, int para_idx) {
    return std::string(doc_id) + "|" + std::to_string(para_idx) + "|PARA";
}

std::string query_unit_key(std::string_view query_id, int unit_idx) {
    return std::string(query_id) + "|unit" + std::to_string(unit_idx);
}

void EmbeddingTable::put(std::string key, VecF vec) {
    if (dim == 0) dim = static_cast<int>(vec.size());
    if (static_cast<int>(vec.size()) != dim)
        throw ValidationError("embedding table: vector for '" + key +
                              "' has wrong dim");
    entries[std::move(key)] = std::move(vec);
}

const VecF* EmbeddingTable::find(const std::string& key) const {
    auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
}

namespace {

constexpr char kHmixMagic[4] = {'H', 'M', 'I', 'X'};
constexpr std::uint32_t kHmixVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const char* what) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError(std::string("truncated file while reading ") + what);
    return v;
}

}  // namespace

void save_embedding_table(const EmbeddingTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kHmixMagic, 4);
    write_pod(out, kHmixVersion);
    write_pod(out, static_cast<std::uint32_t>(table.dim));
    write_pod(out, static_cast<std::uint64_t>(table.entries.size()));
    // sorted keys so identical tables serialize identically
    std::vector<const std::string*> keys;
    keys.reserve(table.entries.size());
    for (const auto& [k, v] : table.entries) keys.push_back(&k);
    std::sort(keys.begin(), keys.end(),
              [](const std::string* a, const std::string* b) { return *a < *b; });
    for (const std::string* k : keys) {
        const VecF& v = table.entries.at(*k);
        write_pod(out, static_cast<std::uint32_t>(k->size()));
        out.write(k->data(), static_cast<std::streamsize>(k->size()));
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * sizeof(float)));
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

EmbeddingTable load_embedding_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kHmixMagic, 4) != 0)
        throw FormatError("'" + path + "': not an HMIX embedding file (bad magic)");
    auto version = read_pod<std::uint32_t>(in, "HMIX version");
    if (version != kHmixVersion)
        throw FormatError("'" + path + "': unsupported HMIX version " +
                          std::to_string(version));
    auto dim = read_pod<std::uint32_t>(in, "HMIX dim");
    if (dim == 0 || dim > (1u << 20))
        throw FormatError("'" + path + "': implausible dim " + std::to_string(dim));
    auto count = read_pod<std::uint64_t>(in, "HMIX count");
    EmbeddingTable table;
    table.dim = static_cast<int>(dim);
    table.entries.reserve(static_cast<std::size_t>(count));
    for (std::uint64_t i = 0; i < count; ++i) {
        auto key_len = read_pod<std::uint32_t>(in, "HMIX key length");
        if (key_len > (1u << 16))
            throw FormatError("'" + path + "': implausible key length");
        std::string key(key_len, '\0');
        in.read(key.data(), key_len);
        VecF vec(dim);
        in.read(reinterpret_cast<char*>(vec.data()),
                static_cast<std::streamsize>(dim * sizeof(float)));
        if (!in) throw IoError("'" + path + "': truncated record " + std::to_string(i));
        table.entries.emplace(std::move(key), std::move(vec));
    }
    return table;
}

// --- ToyDeterministicProvider ------------------------------------------------

ToyDeterministicProvider::ToyDeterministicProvider(int dim) : dim_(dim) {
    if (dim < 1) throw ValidationError("embedding dim must be positive");
}

std::uint64_t ToyDeterministicProvider::hash64(std::string_view text, int component) {
    std::uint64_t h = 14695981039346656037ull ^
                      (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(component + 1));
    for (unsigned char c : text) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 1099511628211ull;
    }
    return h;
}

VecF ToyDeterministicProvider::embed_text(std::string_view text) const {
    VecF v(dim_);
    for (int k = 0; k < dim_; ++k) {
        std::uint64_t h = hash64(text, k);
        v[k] = static_cast<float>(static_cast<double>(static_cast<std::int64_t>(h % 2001) - 1000) / 1000.0);
    }
    return v;
}

VecF ToyDeterministicProvider::sentence_vec(std::string_view, int, int,
                                            std::string_view text) const {
    return embed_text(text);
}

std::optional<VecF> ToyDeterministicProvider::paragraph_vec(std::string_view, int) const {
    return std::nullopt;  // aggregate from sentences
}

VecF ToyDeterministicProvider::query_unit_vec(std::string_view, int,
                                              std::string_view effective_text) const {
    return embed_text(effective_text);
}

// --- FromFileProvider --------------------------------------------------------

FromFileProvider::FromFileProvider(EmbeddingTable table) : table_(std::move(table)) {
    if (table_.dim < 1) throw ValidationError("embedding table has no dim");
}

const VecF& FromFileProvider::lookup(const std::string& key) const {
    const VecF* v = table_.find(key);
    if (!v) throw LookupError("embedding key not found: '" + key + "'");
    return *v;
}

VecF FromFileProvider::sentence_vec(std::string_view doc_id, int para_idx, int sent_idx,
                                    std::string_view) const {
    return lookup(sentence_key(doc_id, para_idx, sent_idx));
}

std::optional<VecF> FromFileProvider::paragraph_vec(std::string_view doc_id,
                                                    int para_idx) const {
    const VecF* v = table_.find(paragraph_key(doc_id, para_idx));
    if (!v) return std::nullopt;
    return *v;
}

VecF FromFileProvider::query_unit_vec(std::string_view query_id, int unit_idx,
                                      std::string_view) const {
    return lookup(query_unit_key(query_id, unit_idx));
}

// --- operations --------------------------------------------------------------

std::vector<VecF> embed_sentences(const EmbeddingProvider& provider,
                                  std::string_view doc_id, const Paragraph& paragraph) {
    if (paragraph.sentences.empty())
        throw ValidationError("embed_sentences: paragraph '" + paragraph.id +
                              "' has no sentences");
    std::vector<VecF> out;
    out.reserve(paragraph.sentences.size());
    for (const Sentence& s : paragraph.sentences)
        out.push_back(provider.sentence_vec(doc_id, s.para_idx, s.sent_idx, s.text));
    return out;
}

std::vector<VecF> embed_query_units(const EmbeddingProvider& provider,
                                    const QueryParagraph& qp) {
    validate_query(qp);
    std::vector<VecF> out;
    out.reserve(qp.units.size());
    for (std::size_t t = 0; t < qp.units.size(); ++t) {
        std::string effective = qp.units[t];
        if (qp.kind == QueryKind::MultiHop && t > 0)
            effective = qp.units[t] + " " + qp.units[0];
        out.push_back(provider.query_unit_vec(qp.id, static_cast<int>(t), effective));
    }
    return out;
}

VecF paragraph_embedding_agnostic(const std::vector<VecF>& sent_vecs) {
    if (sent_vecs.empty())
        throw ValidationError("paragraph_embedding_agnostic: no sentence vectors");
    const std::size_t dim = sent_vecs[0].size();
    Vec acc(dim, 0.0);
    for (const VecF& s : sent_vecs) {
        require_dim(s.size(), dim, "paragraph_embedding_agnostic");
        for (std::size_t i = 0; i < dim; ++i) acc[i] += static_cast<double>(s[i]);
    }
    VecF mean(dim);
    for (std::size_t i = 0; i < dim; ++i)
        mean[i] = static_cast<float>(acc[i] / static_cast<double>(sent_vecs.size()));
    return mean;
}

QueryDepEmbedding paragraph_embedding_query_dep(const Vec& q,
                                                const std::vector<VecF>& sent_vecs) {
    if (sent_vecs.empty())
        throw ValidationError("paragraph_embedding_query_dep: no sentence vectors");
    Vec scores(sent_vecs.size());
    for (std::size_t j = 0; j < sent_vecs.size(); ++j)
        scores[j] = dot(q, std::span<const float>(sent_vecs[j]));
    QueryDepEmbedding out;
    out.alpha = softmax(scores);
    out.p.assign(q.size(), 0.0);
    for (std::size_t j = 0; j < sent_vecs.size(); ++j)
        for (std::size_t i = 0; i < q.size(); ++i)
            out.p[i] += out.alpha[j] * static_cast<double>(sent_vecs[j][i]);
    return out;
}

}  // namespace hopmix
