#include "hopmix/index.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>

#include "hopmix/errors.hpp"
#include "hopmix/kernels.hpp"

namespace hopmix {

namespace {

bool is_deferred(const CombinedIndex& index) {
    return index.regime == IndexRegime::QueryDependentDeferred;
}

}  // namespace

void CombinedIndex::validate() const {
    if (dim == 0) throw ValidationError("index has dim 0");
    if (values.size() != entries.size() * static_cast<std::size_t>(dim))
        throw ValidationError("index value block does not match entry count * dim");
    std::vector<bool> seen(entries.size(), false);
    for (std::size_t pi = 0; pi < paras.size(); ++pi) {
        const ParaSpan& span = paras[pi];
        if (span.para_entry >= entries.size())
            throw ValidationError("paragraph entry out of range");
        const IndexEntry& pe = entries[span.para_entry];
        if (pe.kind != EntryKind::Paragraph ||
            pe.para_idx != static_cast<std::int32_t>(pi) || pe.sent_idx != -1)
            throw ValidationError("paragraph entry mislabeled");
        if (span.first_sentence_entry != span.para_entry + 1)
            throw ValidationError("sentences must directly follow their paragraph entry");
        if (span.first_sentence_entry + span.n_sentences > entries.size())
            throw ValidationError("sentence span out of range");
        seen[span.para_entry] = true;
        for (std::uint32_t j = 0; j < span.n_sentences; ++j) {
            const std::uint32_t e = span.first_sentence_entry + j;
            const IndexEntry& se = entries[e];
            if (se.kind != EntryKind::Sentence ||
                se.para_idx != static_cast<std::int32_t>(pi) ||
                se.sent_idx != static_cast<std::int32_t>(j))
                throw ValidationError("sentence entry mislabeled");
            seen[e] = true;
        }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw ValidationError("index contains entries outside any paragraph span");
}

void ScoreWorkspace::reset(const CombinedIndex& index) {
    raw_dots.assign(index.size(), 0.0);
    alphas.assign(index.paras.size(), {});
}

CombinedIndex build_index(const StructuredDocument& doc,
                          const EmbeddingProvider& provider, IndexRegime regime) {
    doc.validate();
    CombinedIndex index;
    index.doc_id = doc.id;
    index.dim = static_cast<std::uint32_t>(provider.dim());
    index.regime = regime;

    const std::size_t dim = provider.dim();
    for (std::size_t pi = 0; pi < doc.paragraphs.size(); ++pi) {
        const Paragraph& para = doc.paragraphs[pi];
        std::vector<VecF> sent_vecs = embed_sentences(provider, doc.id, para);

        ParaSpan span;
        span.para_entry = static_cast<std::uint32_t>(index.entries.size());
        index.entries.push_back(
            {EntryKind::Paragraph, static_cast<std::int32_t>(pi), -1});
        if (regime == IndexRegime::Agnostic) {
            VecF pvec;
            if (auto explicit_vec =
                    provider.paragraph_vec(doc.id, static_cast<int>(pi))) {
                if (explicit_vec->size() != dim)
                    throw ValidationError("explicit paragraph vector has wrong dim");
                pvec = std::move(*explicit_vec);
            } else {
                pvec = paragraph_embedding_agnostic(sent_vecs);
            }
            index.values.insert(index.values.end(), pvec.begin(), pvec.end());
        } else {
            // Deferred: realized per query in score_all; keep the slot zeroed so
            // entry -> value-block offsets stay uniform.
            index.values.insert(index.values.end(), dim, 0.0f);
        }

        span.first_sentence_entry = static_cast<std::uint32_t>(index.entries.size());
        span.n_sentences = static_cast<std::uint32_t>(sent_vecs.size());
        for (std::size_t si = 0; si < sent_vecs.size(); ++si) {
            index.entries.push_back({EntryKind::Sentence,
                                     static_cast<std::int32_t>(pi),
                                     static_cast<std::int32_t>(si)});
            index.values.insert(index.values.end(), sent_vecs[si].begin(),
                                sent_vecs[si].end());
        }
        index.paras.push_back(span);
    }
    index.validate();
    return index;
}

std::vector<ScoredEntry> score_all(const Vec& q, const CombinedIndex& index,
                                   std::optional<EntryKind> mask, ScoreWorkspace& ws) {
    require_dim(q, index.dim, "query vector");
    ws.reset(index);
    kernels::dot_scores(index.values.data(), index.size(), index.dim, q.data(),
                        ws.raw_dots.data());

    if (is_deferred(index)) {
        // Realize each paragraph score from its sentence dots (Eq.-style
        // attention): alpha = softmax over q.s_j, score = sum alpha_j (q.s_j).
        for (std::size_t pi = 0; pi < index.paras.size(); ++pi) {
            const ParaSpan& span = index.paras[pi];
            if (span.n_sentences == 0) {
                ws.raw_dots[span.para_entry] = 0.0;
                ws.alphas[pi] = {};
                continue;
            }
            Vec dots(span.n_sentences);
            for (std::uint32_t j = 0; j < span.n_sentences; ++j)
                dots[j] = ws.raw_dots[span.first_sentence_entry + j];
            Vec alpha = softmax(dots);
            double s = 0.0;
            for (std::uint32_t j = 0; j < span.n_sentences; ++j)
                s += alpha[j] * dots[j];
            ws.raw_dots[span.para_entry] = s;
            ws.alphas[pi] = std::move(alpha);
        }
    }

    std::vector<ScoredEntry> out;
    out.reserve(index.size());
    for (std::size_t e = 0; e < index.size(); ++e) {
        if (mask && index.entries[e].kind != *mask) continue;
        out.push_back({static_cast<std::uint32_t>(e), ws.raw_dots[e]});
    }
    return out;
}

std::vector<ScoredEntry> score_all(const Vec& q, const CombinedIndex& index,
                                   std::optional<EntryKind> mask) {
    ScoreWorkspace ws;
    return score_all(q, index, mask, ws);
}

ScoredEntry argmax_entry(std::span<const ScoredEntry> scores) {
    if (scores.empty()) throw ValidationError("argmax over empty score list");
    ScoredEntry best = scores[0];
    for (const ScoredEntry& se : scores.subspan(1))
        if (se.score > best.score) best = se;
    return best;
}

// --- HIDX io -----------------------------------------------------------------

namespace {

constexpr char kIndexMagic[4] = {'H', 'I', 'D', 'X'};
constexpr std::uint32_t kIndexVersion = 1;
constexpr std::uint8_t kKindDeferredPara = 2;

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& what) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("truncated index file while reading " + what);
    return v;
}

}  // namespace

void save_index(const CombinedIndex& index, const std::string& path) {
    index.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open index file for writing: " + path);
    out.write(kIndexMagic, 4);
    write_pod<std::uint32_t>(out, kIndexVersion);
    write_pod<std::uint32_t>(out, index.dim);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(index.paras.size()));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(index.entries.size()));
    for (std::size_t e = 0; e < index.entries.size(); ++e) {
        const IndexEntry& en = index.entries[e];
        std::uint8_t kind = static_cast<std::uint8_t>(en.kind);
        if (en.kind == EntryKind::Paragraph &&
            index.regime == IndexRegime::QueryDependentDeferred)
            kind = kKindDeferredPara;
        write_pod<std::uint8_t>(out, kind);
        write_pod<std::int32_t>(out, en.para_idx);
        write_pod<std::int32_t>(out, en.sent_idx);
        out.write(reinterpret_cast<const char*>(index.values.data() + e * index.dim),
                  static_cast<std::streamsize>(sizeof(float) * index.dim));
    }
    if (!out) throw IoError("failed writing index file: " + path);
}

CombinedIndex load_index(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open index file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kIndexMagic, 4) != 0)
        throw FormatError("not an index file (bad magic): " + path);
    const auto version = read_pod<std::uint32_t>(in, "version");
    if (version != kIndexVersion)
        throw FormatError("unsupported index version " + std::to_string(version));
    const auto dim = read_pod<std::uint32_t>(in, "dim");
    if (dim == 0 || dim > (1u << 20))
        throw FormatError("implausible index dim " + std::to_string(dim));
    const auto n_paras = read_pod<std::uint32_t>(in, "paragraph count");
    const auto n_entries = read_pod<std::uint32_t>(in, "entry count");
    if (n_paras > n_entries)
        throw FormatError("paragraph count exceeds entry count");

    CombinedIndex index;
    index.dim = dim;
    index.entries.reserve(n_entries);
    index.values.resize(static_cast<std::size_t>(n_entries) * dim);
    bool any_deferred = false;
    for (std::uint32_t e = 0; e < n_entries; ++e) {
        const auto kind = read_pod<std::uint8_t>(in, "entry kind");
        if (kind > kKindDeferredPara)
            throw FormatError("unknown entry kind byte " + std::to_string(kind));
        const auto para_idx = read_pod<std::int32_t>(in, "para index");
        const auto sent_idx = read_pod<std::int32_t>(in, "sentence index");
        IndexEntry en;
        en.kind = kind == 1 ? EntryKind::Sentence : EntryKind::Paragraph;
        en.para_idx = para_idx;
        en.sent_idx = sent_idx;
        if (kind == kKindDeferredPara) any_deferred = true;
        index.entries.push_back(en);
        in.read(reinterpret_cast<char*>(index.values.data() +
                                        static_cast<std::size_t>(e) * dim),
                static_cast<std::streamsize>(sizeof(float) * dim));
        if (!in) throw IoError("truncated index file while reading vectors");
    }
    index.regime =
        any_deferred ? IndexRegime::QueryDependentDeferred : IndexRegime::Agnostic;

    // Rebuild spans from the entry stream.
    index.paras.resize(n_paras);
    std::vector<bool> have(n_paras, false);
    for (std::uint32_t e = 0; e < n_entries; ++e) {
        const IndexEntry& en = index.entries[e];
        if (en.kind != EntryKind::Paragraph) continue;
        if (en.para_idx < 0 || static_cast<std::uint32_t>(en.para_idx) >= n_paras)
            throw FormatError("paragraph index out of range in index file");
        ParaSpan span;
        span.para_entry = e;
        span.first_sentence_entry = e + 1;
        std::uint32_t n = 0;
        while (e + 1 + n < n_entries &&
               index.entries[e + 1 + n].kind == EntryKind::Sentence)
            ++n;
        span.n_sentences = n;
        index.paras[static_cast<std::size_t>(en.para_idx)] = span;
        have[static_cast<std::size_t>(en.para_idx)] = true;
    }
    if (std::find(have.begin(), have.end(), false) != have.end())
        throw FormatError("index file is missing a paragraph entry");
    index.validate();
    return index;
}

}  // namespace hopmix
