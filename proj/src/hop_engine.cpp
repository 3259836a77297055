#include "hopmix/hop_engine.hpp"

#include <chrono>
#include <string>

#include "hopmix/errors.hpp"

namespace hopmix {

MixParams MixParams::zeros(std::size_t dim) {
    MixParams p;
    p.dim = dim;
    p.W_q.assign(2 * dim * dim, 0.0);
    p.v.assign(dim, 0.0);
    p.u.assign(dim, 0.0);
    p.W_c.assign(dim * 4, 0.0);
    return p;
}

MixParams MixParams::random(std::size_t dim, Rng& rng, double scale) {
    MixParams p = zeros(dim);
    for (double& x : p.W_q) x = rng.normal() * scale;
    for (double& x : p.v) x = rng.normal() * scale;
    for (double& x : p.u) x = rng.normal() * scale;
    for (double& x : p.W_c) x = rng.normal() * scale;
    return p;
}

void MixParams::validate() const {
    if (dim == 0) throw ValidationError("mix params have dim 0");
    if (W_q.size() != 2 * dim * dim || v.size() != dim || u.size() != dim ||
        W_c.size() != dim * 4)
        throw ValidationError("mix params have inconsistent shapes");
    if (!all_finite(W_q) || !all_finite(v) || !all_finite(u) || !all_finite(W_c))
        throw ValidationError("mix params contain non-finite entries");
}

void mix_project(const MixParams& params, std::span<const double> top,
                 std::span<const double> bottom, Vec& k) {
    const std::size_t d = params.dim;
    k.assign(d, 0.0);
    for (std::size_t r = 0; r < d; ++r) {
        const double xr = top[r];
        if (xr == 0.0) continue;
        const double* row = params.W_q.data() + r * d;
        for (std::size_t c = 0; c < d; ++c) k[c] += row[c] * xr;
    }
    for (std::size_t r = 0; r < d; ++r) {
        const double xr = bottom[r];
        if (xr == 0.0) continue;
        const double* row = params.W_q.data() + (d + r) * d;
        for (std::size_t c = 0; c < d; ++c) k[c] += row[c] * xr;
    }
}

void mix_sentence(const Vec& q, std::span<const double> s, const MixParams& params,
                  Vec& q_tilde, Vec& k) {
    require_dim(q, params.dim, "mix query");
    if (s.size() != params.dim) throw ValidationError("mix sentence has wrong dim");
    mix_project(params, q, s, k);
    q_tilde = k;
}

MixOutput mix_sentence(const Vec& q, std::span<const double> s,
                       const MixParams& params) {
    MixOutput out;
    Vec k;
    mix_sentence(q, s, params, out.q_tilde, k);
    out.k_vectors.push_back(std::move(k));
    return out;
}

MixOutput mix_paragraph_with_alpha(const Vec& q, const std::vector<Vec>& sent_vecs,
                                   Vec alpha, const MixParams& params) {
    require_dim(q, params.dim, "mix query");
    if (sent_vecs.empty())
        throw ValidationError("paragraph mix over empty sentence list");
    if (alpha.size() != sent_vecs.size())
        throw ValidationError("alpha weights do not match sentence count");
    const std::size_t d = params.dim;
    const std::size_t n = sent_vecs.size();

    MixOutput out;
    out.alpha = std::move(alpha);
    out.k_vectors.resize(n);
    Vec scaled_q(d);
    Vec v_dot_k(n);
    for (std::size_t j = 0; j < n; ++j) {
        require_dim(sent_vecs[j], d, "mix sentence");
        for (std::size_t c = 0; c < d; ++c) scaled_q[c] = out.alpha[j] * q[c];
        mix_project(params, scaled_q, sent_vecs[j], out.k_vectors[j]);
        v_dot_k[j] = dot(params.v, out.k_vectors[j]);
    }
    out.beta = softmax(v_dot_k);

    // Accumulate from j=0 so a singleton paragraph reproduces mix_sentence's
    // arithmetic exactly (alpha = beta = 1).
    out.q_tilde.resize(d);
    for (std::size_t c = 0; c < d; ++c)
        out.q_tilde[c] = out.beta[0] * out.k_vectors[0][c];
    for (std::size_t j = 1; j < n; ++j)
        for (std::size_t c = 0; c < d; ++c)
            out.q_tilde[c] += out.beta[j] * out.k_vectors[j][c];
    return out;
}

MixOutput mix_paragraph(const Vec& q, const std::vector<Vec>& sent_vecs,
                        const MixParams& params) {
    if (sent_vecs.empty())
        throw ValidationError("paragraph mix over empty sentence list");
    Vec dots(sent_vecs.size());
    for (std::size_t j = 0; j < sent_vecs.size(); ++j) {
        require_dim(sent_vecs[j], q.size(), "mix sentence");
        dots[j] = dot(q, sent_vecs[j]);
    }
    return mix_paragraph_with_alpha(q, sent_vecs, softmax(dots), params);
}

void update_query(QueryState& state, const Vec& q_tilde) {
    const std::size_t next = static_cast<std::size_t>(state.current_hop) + 1;
    if (next >= state.vectors.size())
        throw StateError("no next hop to update (hop " +
                         std::to_string(state.current_hop) + " of " +
                         std::to_string(state.vectors.size()) + ")");
    axpy(1.0, q_tilde, state.vectors[next]);
    state.current_hop += 1;
}

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t elapsed_ns(Clock::time_point start) {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start)
            .count());
}

}  // namespace

RetrievalTrace run_hops(QueryState& state, const CombinedIndex& index,
                        const MixParams& params,
                        const std::vector<std::optional<EntryKind>>& hop_masks,
                        RunScratch* scratch, const RunOptions& opts) {
    const std::size_t hops = state.vectors.size();
    if (hop_masks.size() != hops)
        throw ValidationError("hop mask count " + std::to_string(hop_masks.size()) +
                              " does not match hop count " + std::to_string(hops));
    if (params.dim != index.dim)
        throw ValidationError("mix params dim does not match index dim");

    RunScratch local;
    RunScratch& sc = scratch ? *scratch : local;

    RetrievalTrace trace;
    trace.records.reserve(hops - static_cast<std::size_t>(state.current_hop));

    while (static_cast<std::size_t>(state.current_hop) < hops) {
        const int t = state.current_hop;
        const Vec& q = state.vectors[static_cast<std::size_t>(t)];

        HopRecord rec;
        rec.hop = t;

        auto t0 = Clock::now();
        sc.scored = score_all(q, index, hop_masks[static_cast<std::size_t>(t)], sc.ws);
        if (opts.timers) opts.timers->score_ns += elapsed_ns(t0);

        const ScoredEntry best = argmax_entry(sc.scored);
        const IndexEntry& entry = index.entries[best.entry];
        rec.retrieved = best.entry;
        rec.retrieved_kind = entry.kind;
        rec.retrieved_para = entry.para_idx;
        rec.retrieved_sent = entry.sent_idx;
        rec.retrieved_score = best.score;
        if (opts.keep_scores) rec.scores = sc.scored;

        auto t1 = Clock::now();
        if (entry.kind == EntryKind::Sentence) {
            to_double(index.vec(best.entry), sc.sentence_buf);
            Vec k;
            mix_sentence(q, sc.sentence_buf, params, rec.q_tilde, k);
            rec.k_vectors.clear();
            rec.k_vectors.push_back(std::move(k));
        } else {
            const ParaSpan& span = index.paras[static_cast<std::size_t>(entry.para_idx)];
            if (span.n_sentences == 0)
                throw ValidationError("retrieved paragraph has no sentences to mix");
            sc.para_buf.resize(span.n_sentences);
            for (std::uint32_t j = 0; j < span.n_sentences; ++j)
                to_double(index.sentence_vec(
                              static_cast<std::uint32_t>(entry.para_idx), j),
                          sc.para_buf[j]);
            MixOutput mix;
            if (index.regime == IndexRegime::QueryDependentDeferred)
                mix = mix_paragraph_with_alpha(
                    q, sc.para_buf,
                    sc.ws.alphas[static_cast<std::size_t>(entry.para_idx)], params);
            else
                mix = mix_paragraph(q, sc.para_buf, params);
            rec.q_tilde = std::move(mix.q_tilde);
            rec.alpha = std::move(mix.alpha);
            rec.beta = std::move(mix.beta);
            rec.k_vectors = std::move(mix.k_vectors);
        }
        if (opts.timers) opts.timers->mix_ns += elapsed_ns(t1);

        const bool last = static_cast<std::size_t>(t) + 1 == hops;
        if (last) {
            trace.records.push_back(std::move(rec));
            break;  // no residual target remains; current_hop stays on the last hop
        }
        auto t2 = Clock::now();
        if (opts.update_enabled) {
            update_query(state, rec.q_tilde);
        } else {
            state.current_hop += 1;
        }
        if (opts.timers) opts.timers->update_ns += elapsed_ns(t2);

        trace.records.push_back(std::move(rec));
    }

    if (!trace.records.empty()) {
        const HopRecord& lastrec = trace.records.back();
        if (lastrec.retrieved_kind == EntryKind::Sentence)
            trace.final_sentence = {lastrec.retrieved_para, lastrec.retrieved_sent};
    }
    return trace;
}

}  // namespace hopmix
