#include "hopmix/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "hopmix/errors.hpp"
#include "hopmix/io_jsonl.hpp"
#include "hopmix/vecmath.hpp"

namespace hopmix {

void SynthSpec::validate() const {
    if (n_docs < 1) throw ValidationError("synth spec: need at least one document");
    if (paras_per_doc < 2)
        throw ValidationError("synth spec: need at least two paragraphs per document");
    if (sents_per_para < 1)
        throw ValidationError("synth spec: need at least one sentence per paragraph");
    if (dim < 4) throw ValidationError("synth spec: dim must be at least 4");
    if (hops < 2) throw ValidationError("synth spec: the chain needs at least two hops");
    if (paras_per_doc < hops)
        throw ValidationError("synth spec: need one host paragraph per chained hop");
    if (!(train_fraction >= 0.0 && train_fraction <= 1.0))
        throw ValidationError("synth spec: train_fraction must lie in [0, 1]");
    for (double x : {query_noise, sentence_noise, payload_spread, decoy_scale, min_margin})
        if (!(x >= 0.0) || !std::isfinite(x))
            throw ValidationError("synth spec: noise and margin knobs must be finite and >= 0");
}

namespace {

Vec random_unit(Rng& rng, int dim) {
    Vec v(static_cast<std::size_t>(dim));
    double norm2 = 0.0;
    do {
        for (double& x : v) x = rng.normal();
        norm2 = dot(v, v);
    } while (norm2 < 1e-12);
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
    return v;
}

// Unit vector orthogonal to `base` (itself unit).
Vec random_unit_orthogonal(Rng& rng, int dim, const Vec& base) {
    for (;;) {
        Vec v = random_unit(rng, dim);
        const double proj = dot(v, base);
        for (int c = 0; c < dim; ++c) v[static_cast<std::size_t>(c)] -= proj * base[static_cast<std::size_t>(c)];
        const double norm2 = dot(v, v);
        if (norm2 < 1e-6) continue;  // nearly parallel draw; retry
        const double inv = 1.0 / std::sqrt(norm2);
        for (double& x : v) x *= inv;
        return v;
    }
}

// k = B^T x through the planted sentence block of W_q.
Vec payload_map(const MixParams& planted, const Vec& x) {
    const std::size_t dim = planted.dim;
    Vec k(dim, 0.0);
    for (std::size_t j = 0; j < dim; ++j) {
        const double xj = x[j];
        if (xj == 0.0) continue;
        const double* row = planted.W_q.data() + (dim + j) * dim;
        for (std::size_t c = 0; c < dim; ++c) k[c] += row[c] * xj;
    }
    return k;
}

Vec scaled_unit(const Vec& v, double norm) {
    const double n = std::sqrt(dot(v, v));
    if (n < 1e-12) throw ValidationError("degenerate planted direction");
    Vec out = v;
    const double f = norm / n;
    for (double& x : out) x *= f;
    return out;
}

MixParams make_planted(int dim, Rng& rng) {
    MixParams p = MixParams::zeros(static_cast<std::size_t>(dim));
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    const std::size_t d = static_cast<std::size_t>(dim);
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t c = 0; c < d; ++c)
            p.W_q[(d + j) * d + c] = rng.normal() * scale;
    return p;
}

struct DocDraft {
    StructuredDocument doc;
    std::vector<VecF> sentence_vecs;  // flat, paragraph-major
    std::vector<VecF> query_vecs;     // one per hop
    SynthQuery query;
};

// argmax gap of one hop record; scores are in entry order.
double record_margin(const HopRecord& rec) {
    double best = -std::numeric_limits<double>::infinity();
    double second = best;
    for (const ScoredEntry& se : rec.scores) {
        if (se.score > best) {
            second = best;
            best = se.score;
        } else if (se.score > second) {
            second = se.score;
        }
    }
    if (!std::isfinite(second)) return std::numeric_limits<double>::infinity();
    return best - second;
}

// One candidate document + query. Deterministic given the rng state; the
// caller re-rolls until the planted run verifies.
DocDraft draw_doc(const SynthSpec& spec, const MixParams& planted, Rng& rng,
                  int doc_index) {
    const int P = spec.paras_per_doc;
    const int S = spec.sents_per_para;
    const int dim = spec.dim;
    const std::size_t d = static_cast<std::size_t>(dim);

    DocDraft draft;
    draft.doc.id = "sdoc" + std::to_string(doc_index);

    // Latents: per-paragraph topic t_i and orthogonal payload u_i. Sentences
    // are t_i + delta_ij * u_i + rho_ij where the delta_ij average to exactly 1
    // and the rho_ij to exactly 0 across the paragraph, so the paragraph mean
    // is t_i + u_i with no residual noise.
    std::vector<Vec> topic(static_cast<std::size_t>(P));
    std::vector<Vec> payload(static_cast<std::size_t>(P));
    std::vector<std::vector<Vec>> sents(static_cast<std::size_t>(P));
    for (int i = 0; i < P; ++i) {
        topic[static_cast<std::size_t>(i)] = random_unit(rng, dim);
        payload[static_cast<std::size_t>(i)] =
            random_unit_orthogonal(rng, dim, topic[static_cast<std::size_t>(i)]);

        std::vector<double> delta(static_cast<std::size_t>(S));
        double dbar = 0.0;
        for (double& x : delta) {
            x = rng.normal();
            dbar += x;
        }
        dbar /= S;
        std::vector<Vec> rho(static_cast<std::size_t>(S), Vec(d, 0.0));
        for (std::size_t c = 0; c < d; ++c) {
            double rbar = 0.0;
            for (int j = 0; j < S; ++j) {
                rho[static_cast<std::size_t>(j)][c] = rng.normal();
                rbar += rho[static_cast<std::size_t>(j)][c];
            }
            rbar /= S;
            for (int j = 0; j < S; ++j)
                rho[static_cast<std::size_t>(j)][c] =
                    (rho[static_cast<std::size_t>(j)][c] - rbar) * spec.sentence_noise /
                    std::sqrt(static_cast<double>(dim));
        }
        auto& block = sents[static_cast<std::size_t>(i)];
        block.assign(static_cast<std::size_t>(S), Vec(d, 0.0));
        for (int j = 0; j < S; ++j) {
            const double dj = 1.0 + spec.payload_spread * (delta[static_cast<std::size_t>(j)] - dbar);
            for (std::size_t c = 0; c < d; ++c)
                block[static_cast<std::size_t>(j)][c] =
                    topic[static_cast<std::size_t>(i)][c] +
                    dj * payload[static_cast<std::size_t>(i)][c] +
                    rho[static_cast<std::size_t>(j)][c];
        }
    }

    const int g = static_cast<int>(rng.below(static_cast<std::uint64_t>(P)));

    // Hosts for the chained sentences: distinct paragraphs, none of them g.
    std::vector<int> others;
    for (int i = 0; i < P; ++i)
        if (i != g) others.push_back(i);
    for (std::size_t i = others.size(); i > 1; --i)
        std::swap(others[i - 1], others[rng.below(i)]);
    const int n_chain = spec.hops - 1;
    std::vector<int> hosts(others.begin(), others.begin() + n_chain);

    // Typical sentence norm; planted sentences are scaled to it so nothing
    // marks them before training.
    const double sfrac = 1.0 - 1.0 / S;
    const double nu = std::sqrt(1.0 + 1.0 + spec.payload_spread * spec.payload_spread * sfrac +
                                spec.sentence_noise * spec.sentence_noise * sfrac);

    SynthQuery query;
    query.id = "squery" + std::to_string(doc_index);
    query.doc_id = draft.doc.id;
    query.doc_index = doc_index;
    query.gold_para = g;

    Vec target(d, 0.0);
    for (std::size_t c = 0; c < d; ++c)
        target[c] = topic[static_cast<std::size_t>(g)][c] + payload[static_cast<std::size_t>(g)][c];
    std::vector<std::pair<int, int>> used_slots;
    for (int t = 0; t < n_chain; ++t) {
        const int host = hosts[static_cast<std::size_t>(t)];
        const int slot = static_cast<int>(rng.below(static_cast<std::uint64_t>(S)));
        const Vec link = scaled_unit(payload_map(planted, target), nu);
        sents[static_cast<std::size_t>(host)][static_cast<std::size_t>(slot)] = link;
        query.gold_sentences.emplace_back(host, slot);
        used_slots.emplace_back(host, slot);
        target = link;
    }

    // Decoy along the payload-free direction of the gold paragraph: beats any
    // strategy that recovers the topic but not the payload.
    {
        int host = -1;
        for (std::size_t i = static_cast<std::size_t>(n_chain); i < others.size(); ++i) {
            host = others[i];
            break;
        }
        int slot = -1;
        if (host < 0 && S >= 2) {
            host = hosts[0];
            const int gold_slot = used_slots[0].second;
            slot = static_cast<int>(rng.below(static_cast<std::uint64_t>(S - 1)));
            if (slot >= gold_slot) ++slot;
        } else if (host >= 0) {
            slot = static_cast<int>(rng.below(static_cast<std::uint64_t>(S)));
        }
        if (host >= 0 && slot >= 0) {
            const Vec decoy = scaled_unit(payload_map(planted, topic[static_cast<std::size_t>(g)]),
                                          nu * spec.decoy_scale);
            sents[static_cast<std::size_t>(host)][static_cast<std::size_t>(slot)] = decoy;
            query.decoy_para = host;
            query.decoy_sent = slot;
        }
    }

    // Query vectors: q_0 near the gold topic, later inits a small random nudge.
    draft.query_vecs.reserve(static_cast<std::size_t>(spec.hops));
    {
        Vec q0 = topic[static_cast<std::size_t>(g)];
        const double qscale = spec.query_noise / std::sqrt(static_cast<double>(dim));
        for (std::size_t c = 0; c < d; ++c) q0[c] += qscale * rng.normal();
        draft.query_vecs.push_back(to_float(q0));
        for (int t = 1; t < spec.hops; ++t) {
            Vec qt = random_unit(rng, dim);
            for (double& x : qt) x *= 0.1;
            draft.query_vecs.push_back(to_float(qt));
        }
    }

    for (int i = 0; i < P; ++i) {
        Paragraph para;
        para.id = "p" + std::to_string(i);
        for (int j = 0; j < S; ++j) {
            Sentence s;
            s.id = para.id + "/s" + std::to_string(j);
            s.text = "chain filler " + std::to_string(i) + "." + std::to_string(j) +
                     " of " + draft.doc.id + ".";
            s.para_idx = i;
            s.sent_idx = j;
            para.sentences.push_back(std::move(s));
            draft.sentence_vecs.push_back(
                to_float(sents[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
        }
        draft.doc.paragraphs.push_back(std::move(para));
    }
    draft.query = std::move(query);
    return draft;
}

bool verify_draft(const SynthSpec& spec, const MixParams& planted,
                  const DocDraft& draft) {
    EmbeddingTable table;
    table.dim = spec.dim;
    std::size_t flat = 0;
    for (int i = 0; i < spec.paras_per_doc; ++i)
        for (int j = 0; j < spec.sents_per_para; ++j)
            table.put(sentence_key(draft.doc.id, i, j), draft.sentence_vecs[flat++]);

    FromFileProvider provider(std::move(table));
    const CombinedIndex index = build_index(draft.doc, provider, IndexRegime::Agnostic);

    QueryState state;
    for (const VecF& v : draft.query_vecs) state.vectors.push_back(to_double(v));
    RunOptions opts;
    opts.keep_scores = true;
    const RetrievalTrace trace =
        run_hops(state, index, planted, synth_masks(spec.hops, SynthMode::Full), nullptr, opts);

    const HopRecord& first = trace.records.front();
    if (first.retrieved_kind != EntryKind::Paragraph ||
        first.retrieved_para != draft.query.gold_para)
        return false;
    if (record_margin(first) < spec.min_margin) return false;
    for (int t = 1; t < spec.hops; ++t) {
        const HopRecord& rec = trace.records[static_cast<std::size_t>(t)];
        const auto& gold = draft.query.gold_sentences[static_cast<std::size_t>(t - 1)];
        if (rec.retrieved_kind != EntryKind::Sentence ||
            rec.retrieved_para != gold.first || rec.retrieved_sent != gold.second)
            return false;
        if (record_margin(rec) < spec.min_margin) return false;
    }
    return true;
}

}  // namespace

std::vector<std::optional<EntryKind>> synth_masks(int hops, SynthMode mode) {
    if (hops < 1) throw ValidationError("need at least one hop");
    std::vector<std::optional<EntryKind>> masks(static_cast<std::size_t>(hops),
                                                EntryKind::Sentence);
    if (mode == SynthMode::Full) masks[0] = EntryKind::Paragraph;
    return masks;
}

SynthDataset synth_generate(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    SynthDataset ds;
    ds.spec = spec;
    ds.planted = make_planted(spec.dim, rng);
    ds.embeddings.dim = spec.dim;

    std::vector<SynthQuery> queries;
    constexpr int kMaxAttempts = 64;
    for (int d = 0; d < spec.n_docs; ++d) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
            DocDraft draft = draw_doc(spec, ds.planted, rng, d);
            if (!verify_draft(spec, ds.planted, draft)) continue;

            std::size_t flat = 0;
            for (int i = 0; i < spec.paras_per_doc; ++i)
                for (int j = 0; j < spec.sents_per_para; ++j)
                    ds.embeddings.put(sentence_key(draft.doc.id, i, j),
                                      draft.sentence_vecs[flat++]);
            for (int t = 0; t < spec.hops; ++t)
                ds.embeddings.put(query_unit_key(draft.query.id, t),
                                  draft.query_vecs[static_cast<std::size_t>(t)]);
            ds.docs.push_back(std::move(draft.doc));
            queries.push_back(std::move(draft.query));
            placed = true;
            break;
        }
        if (!placed)
            throw ValidationError("planted construction failed for document " +
                                  std::to_string(d) + "; spec too tight");
    }

    const int n_train = static_cast<int>(std::llround(spec.train_fraction * spec.n_docs));
    for (int i = 0; i < spec.n_docs; ++i) {
        if (i < n_train)
            ds.train.push_back(queries[static_cast<std::size_t>(i)]);
        else
            ds.test.push_back(queries[static_cast<std::size_t>(i)]);
    }
    return ds;
}

double synth_hits_at_1(const SynthDataset& ds, const MixParams& params,
                       const std::vector<SynthQuery>& queries, SynthMode mode,
                       bool update_enabled) {
    if (queries.empty()) throw ValidationError("hits@1 needs at least one query");
    const auto masks = synth_masks(ds.spec.hops, mode);
    FromFileProvider provider(ds.embeddings);

    std::unordered_map<int, CombinedIndex> index_cache;
    RunScratch scratch;
    RunOptions opts;
    opts.keep_scores = false;
    opts.update_enabled = update_enabled;

    int hits = 0;
    for (const SynthQuery& q : queries) {
        auto it = index_cache.find(q.doc_index);
        if (it == index_cache.end())
            it = index_cache
                     .emplace(q.doc_index,
                              build_index(ds.docs[static_cast<std::size_t>(q.doc_index)],
                                          provider, IndexRegime::Agnostic))
                     .first;

        QueryState state;
        for (int t = 0; t < ds.spec.hops; ++t) {
            const VecF* v = ds.embeddings.find(query_unit_key(q.id, t));
            if (!v) throw LookupError("missing query vector: " + query_unit_key(q.id, t));
            state.vectors.push_back(to_double(*v));
        }
        const RetrievalTrace trace =
            run_hops(state, it->second, params, masks, &scratch, opts);
        const HopRecord& last = trace.records.back();
        if (last.retrieved_kind == EntryKind::Sentence &&
            std::make_pair(static_cast<int>(last.retrieved_para),
                           static_cast<int>(last.retrieved_sent)) == q.gold_sentences.back())
            ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(queries.size());
}

std::vector<TrainingInstance> synth_training_instances(
    const SynthDataset& ds, const std::vector<SynthQuery>& queries, SynthMode mode) {
    const auto masks = synth_masks(ds.spec.hops, mode);
    FromFileProvider provider(ds.embeddings);

    std::vector<TrainingInstance> out;
    out.reserve(queries.size());
    for (const SynthQuery& q : queries) {
        TrainRow row;
        row.query = build_multihop_query("planted chain query for " + q.doc_id,
                                         ds.spec.hops, q.id);
        row.doc_id = q.doc_id;
        row.labels[0] = {LabelRef{EntryKind::Paragraph, q.gold_para, -1}};
        for (int t = 1; t < ds.spec.hops; ++t) {
            const auto& gs = q.gold_sentences[static_cast<std::size_t>(t - 1)];
            row.labels[t] = {LabelRef{EntryKind::Sentence, gs.first, gs.second}};
        }
        out.push_back(build_training_instance(
            ds.docs[static_cast<std::size_t>(q.doc_index)], provider, row, masks,
            IndexRegime::Agnostic));
    }
    return out;
}

}  // namespace hopmix
