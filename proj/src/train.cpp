#include "hopmix/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "hopmix/errors.hpp"

namespace hopmix {

// --- TrainingInstance ---------------------------------------------------------

std::size_t TrainingInstance::dim() const {
    if (!query_init.empty()) return query_init[0].size();
    return 0;
}

std::size_t TrainingInstance::n_entries() const {
    std::size_t n = sentences.size();
    for (const auto& p : sentences) n += p.size();
    return n;
}

std::uint32_t TrainingInstance::entry_of_paragraph(std::size_t para) const {
    std::uint32_t e = 0;
    for (std::size_t i = 0; i < para; ++i)
        e += 1 + static_cast<std::uint32_t>(sentences[i].size());
    return e;
}

std::uint32_t TrainingInstance::entry_of_sentence(std::size_t para,
                                                  std::size_t sent) const {
    return entry_of_paragraph(para) + 1 + static_cast<std::uint32_t>(sent);
}

IndexEntry TrainingInstance::entry_at(std::uint32_t entry) const {
    std::uint32_t e = 0;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (entry == e)
            return {EntryKind::Paragraph, static_cast<std::int32_t>(i), -1};
        const std::uint32_t n = static_cast<std::uint32_t>(sentences[i].size());
        if (entry <= e + n)
            return {EntryKind::Sentence, static_cast<std::int32_t>(i),
                    static_cast<std::int32_t>(entry - e - 1)};
        e += 1 + n;
    }
    throw ValidationError("entry index " + std::to_string(entry) +
                          " out of range for training instance");
}

void TrainingInstance::validate() const {
    if (sentences.empty())
        throw ValidationError("training instance has no paragraphs");
    if (query_init.empty())
        throw ValidationError("training instance has no hops");
    const std::size_t d = dim();
    if (d == 0) throw ValidationError("training instance has dim 0");
    for (const auto& p : sentences) {
        if (p.empty())
            throw ValidationError("training instance paragraph has no sentences");
        for (const auto& s : p) require_dim(s, d, "instance sentence");
    }
    if (!para_override.empty() && para_override.size() != sentences.size())
        throw ValidationError("paragraph override count does not match paragraphs");
    for (const auto& pv : para_override)
        if (pv) require_dim(*pv, d, "instance paragraph vector");
    for (const auto& q : query_init) require_dim(q, d, "instance query");
    if (masks.size() != hops())
        throw ValidationError("instance mask count does not match hop count");
    if (positives.size() != hops())
        throw ValidationError("instance positive count does not match hop count");
    const std::size_t n = n_entries();
    for (const auto& hop_pos : positives)
        for (std::uint32_t e : hop_pos)
            if (e >= n)
                throw ValidationError("positive entry " + std::to_string(e) +
                                      " out of range");
    if (gold_class && (*gold_class < 0 || *gold_class > 3))
        throw ValidationError("gold class out of range");
}

// --- loss combination ---------------------------------------------------------

namespace {

double logsumexp(std::span<const double> z) {
    double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double x : z) s += std::exp(x - m);
    return m + std::log(s);
}

// positions: sorted, de-duplicated indices into z.
double combined_loss(const Vec& z, const std::vector<std::size_t>& positions,
                     MultiPositiveRule rule, Vec* dz) {
    Vec zp(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) zp[i] = z[positions[i]];
    const double lse_all = logsumexp(z);
    double loss;
    if (rule == MultiPositiveRule::MarginalLog) {
        const double lse_pos = logsumexp(zp);
        loss = lse_all - lse_pos;
        if (dz) {
            dz->assign(z.size(), 0.0);
            for (std::size_t i = 0; i < z.size(); ++i)
                (*dz)[i] = std::exp(z[i] - lse_all);
            for (std::size_t pos : positions)
                (*dz)[pos] -= std::exp(z[pos] - lse_pos);
        }
    } else {
        const double p_count = static_cast<double>(positions.size());
        double zsum = 0.0;
        for (double x : zp) zsum += x;
        loss = p_count * lse_all - zsum;
        if (dz) {
            dz->assign(z.size(), 0.0);
            for (std::size_t i = 0; i < z.size(); ++i)
                (*dz)[i] = p_count * std::exp(z[i] - lse_all);
            for (std::size_t pos : positions) (*dz)[pos] -= 1.0;
        }
    }
    return loss;
}

std::vector<std::size_t> unique_sorted(std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace

double step_loss(const Vec& q, const CombinedIndex& index,
                 const std::vector<std::uint32_t>& positives,
                 MultiPositiveRule rule) {
    if (positives.empty()) throw ValidationError("step loss with no positives");
    const auto scored = score_all(q, index);
    Vec z(scored.size());
    for (const ScoredEntry& se : scored) z[se.entry] = se.score;
    std::vector<std::size_t> positions;
    positions.reserve(positives.size());
    for (std::uint32_t e : positives) {
        if (e >= z.size())
            throw ValidationError("positive entry " + std::to_string(e) +
                                  " out of range");
        positions.push_back(e);
    }
    return combined_loss(z, unique_sorted(std::move(positions)), rule, nullptr);
}

// --- forward -------------------------------------------------------------------

namespace {

// Entry table of an instance, built once per forward/backward pair.
struct InstanceLayout {
    std::vector<IndexEntry> entries;
    std::vector<std::uint32_t> para_entry;
    std::vector<Vec> para_vecs;  // agnostic regime only
};

InstanceLayout build_layout(const TrainingInstance& inst) {
    InstanceLayout lay;
    lay.entries.reserve(inst.n_entries());
    const std::size_t d = inst.dim();
    for (std::size_t i = 0; i < inst.sentences.size(); ++i) {
        lay.para_entry.push_back(static_cast<std::uint32_t>(lay.entries.size()));
        lay.entries.push_back(
            {EntryKind::Paragraph, static_cast<std::int32_t>(i), -1});
        for (std::size_t j = 0; j < inst.sentences[i].size(); ++j)
            lay.entries.push_back({EntryKind::Sentence, static_cast<std::int32_t>(i),
                                   static_cast<std::int32_t>(j)});
    }
    if (inst.regime == IndexRegime::Agnostic) {
        lay.para_vecs.resize(inst.sentences.size());
        for (std::size_t i = 0; i < inst.sentences.size(); ++i) {
            if (!inst.para_override.empty() && inst.para_override[i]) {
                lay.para_vecs[i] = *inst.para_override[i];
            } else {
                Vec mean(d, 0.0);
                for (const Vec& s : inst.sentences[i]) axpy(1.0, s, mean);
                const double inv = 1.0 / static_cast<double>(inst.sentences[i].size());
                for (double& x : mean) x *= inv;
                lay.para_vecs[i] = std::move(mean);
            }
        }
    }
    return lay;
}

std::vector<std::size_t> positive_positions(const HopTape& h,
                                            const std::vector<std::uint32_t>& pos,
                                            int hop) {
    std::vector<std::size_t> out;
    out.reserve(pos.size());
    for (std::uint32_t e : pos) {
        const auto it = std::lower_bound(h.cand.begin(), h.cand.end(), e);
        if (it == h.cand.end() || *it != e)
            throw ValidationError("positive entry " + std::to_string(e) +
                                  " is masked out at hop " + std::to_string(hop));
        out.push_back(static_cast<std::size_t>(it - h.cand.begin()));
    }
    return unique_sorted(std::move(out));
}

}  // namespace

ForwardTape forward(const TrainingInstance& inst, const MixParams& params,
                    const TrainConfig& cfg) {
    inst.validate();
    params.validate();
    require_dim(inst.dim(), params.dim, "instance vs params");
    const std::size_t d = params.dim;
    const std::size_t n_paras = inst.sentences.size();
    const InstanceLayout lay = build_layout(inst);
    const std::size_t n = lay.entries.size();
    const bool deferred = inst.regime == IndexRegime::QueryDependentDeferred;

    ForwardTape tape;
    tape.hops.reserve(inst.hops());

    for (std::size_t t = 0; t < inst.hops(); ++t) {
        HopTape h;
        h.q = inst.query_init[t];
        if (t > 0 && cfg.update_enabled) axpy(1.0, tape.hops[t - 1].q_tilde, h.q);

        Vec all_scores(n, 0.0);
        if (deferred) {
            h.def_sdots.resize(n_paras);
            h.def_alpha.resize(n_paras);
            for (std::size_t i = 0; i < n_paras; ++i) {
                const auto& sents = inst.sentences[i];
                Vec& g = h.def_sdots[i];
                g.resize(sents.size());
                for (std::size_t j = 0; j < sents.size(); ++j) {
                    g[j] = dot(h.q, sents[j]);
                    all_scores[lay.para_entry[i] + 1 + j] = g[j];
                }
                h.def_alpha[i] = softmax(g);
                double z = 0.0;
                for (std::size_t j = 0; j < sents.size(); ++j)
                    z += h.def_alpha[i][j] * g[j];
                all_scores[lay.para_entry[i]] = z;
            }
        } else {
            for (std::size_t i = 0; i < n_paras; ++i) {
                all_scores[lay.para_entry[i]] = dot(h.q, lay.para_vecs[i]);
                for (std::size_t j = 0; j < inst.sentences[i].size(); ++j)
                    all_scores[lay.para_entry[i] + 1 + j] =
                        dot(h.q, inst.sentences[i][j]);
            }
        }

        const auto& mask = inst.masks[t];
        for (std::size_t e = 0; e < n; ++e)
            if (!mask || lay.entries[e].kind == *mask)
                h.cand.push_back(static_cast<std::uint32_t>(e));
        if (h.cand.empty())
            throw ValidationError("hop " + std::to_string(t) +
                                  " mask leaves no candidates");
        h.scores.resize(h.cand.size());
        for (std::size_t c = 0; c < h.cand.size(); ++c)
            h.scores[c] = all_scores[h.cand[c]];
        h.probs = softmax(h.scores);

        if (!inst.positives[t].empty()) {
            const auto positions =
                positive_positions(h, inst.positives[t], static_cast<int>(t));
            h.loss = combined_loss(h.scores, positions, cfg.multi_positive, nullptr);
            tape.total += h.loss;
        }

        std::size_t best = 0;
        for (std::size_t c = 1; c < h.cand.size(); ++c)
            if (h.scores[c] > h.scores[best]) best = c;
        h.margin = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < h.cand.size(); ++c)
            if (c != best) h.margin = std::min(h.margin, h.scores[best] - h.scores[c]);
        const IndexEntry& entry = lay.entries[h.cand[best]];
        h.retrieved_entry = h.cand[best];
        h.retrieved_kind = entry.kind;
        h.retrieved_para = entry.para_idx;
        h.retrieved_sent = entry.sent_idx;

        if (entry.kind == EntryKind::Sentence) {
            const Vec& s = inst.sentences[static_cast<std::size_t>(entry.para_idx)]
                                         [static_cast<std::size_t>(entry.sent_idx)];
            Vec k;
            mix_project(params, h.q, s, k);
            h.q_tilde = k;
            h.k.push_back(std::move(k));
        } else {
            const std::size_t i = static_cast<std::size_t>(entry.para_idx);
            const auto& sents = inst.sentences[i];
            if (deferred) {
                h.mix_alpha = h.def_alpha[i];
            } else {
                h.mix_g.resize(sents.size());
                for (std::size_t j = 0; j < sents.size(); ++j)
                    h.mix_g[j] = all_scores[lay.para_entry[i] + 1 + j];
                h.mix_alpha = softmax(h.mix_g);
            }
            h.k.resize(sents.size());
            h.vdotk.resize(sents.size());
            Vec scaled_q(d);
            for (std::size_t j = 0; j < sents.size(); ++j) {
                for (std::size_t c = 0; c < d; ++c)
                    scaled_q[c] = h.mix_alpha[j] * h.q[c];
                mix_project(params, scaled_q, sents[j], h.k[j]);
                h.vdotk[j] = dot(params.v, h.k[j]);
            }
            h.beta = softmax(h.vdotk);
            h.q_tilde.assign(d, 0.0);
            for (std::size_t j = 0; j < sents.size(); ++j)
                axpy(h.beta[j], h.k[j], h.q_tilde);
        }
        tape.hops.push_back(std::move(h));
    }

    if (inst.gold_class && cfg.include_classification) {
        ClassTape cls;
        for (const HopTape& h : tape.hops)
            for (const Vec& k : h.k) cls.udotk.push_back(dot(params.u, k));
        cls.gamma = softmax(cls.udotk);
        cls.k_tilde.assign(d, 0.0);
        std::size_t flat = 0;
        for (const HopTape& h : tape.hops)
            for (const Vec& k : h.k) axpy(cls.gamma[flat++], k, cls.k_tilde);
        cls.logits.assign(4, 0.0);
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < 4; ++c)
                cls.logits[c] += params.wc(r, c) * cls.k_tilde[r];
        cls.probs = softmax(cls.logits);
        cls.loss = logsumexp(cls.logits) - cls.logits[static_cast<std::size_t>(
                                               *inst.gold_class)];
        tape.total += cls.loss;
        tape.cls = std::move(cls);
    }
    return tape;
}

double total_loss(const TrainingInstance& inst, const MixParams& params,
                  const TrainConfig& cfg) {
    return forward(inst, params, cfg).total;
}

double min_retrieval_margin(const ForwardTape& tape) {
    double m = std::numeric_limits<double>::infinity();
    for (const HopTape& h : tape.hops) m = std::min(m, h.margin);
    return m;
}

// --- backward -------------------------------------------------------------------

GradReport backward(const TrainingInstance& inst, const MixParams& params,
                    const ForwardTape& tape, const TrainConfig& cfg) {
    if (tape.hops.size() != inst.hops())
        throw StateError("forward tape does not match instance hop count");
    const std::size_t d = params.dim;
    const std::size_t n_paras = inst.sentences.size();
    const InstanceLayout lay = build_layout(inst);
    const bool deferred = inst.regime == IndexRegime::QueryDependentDeferred;

    GradReport g;
    g.d_Wq.assign(2 * d * d, 0.0);
    g.d_v.assign(d, 0.0);
    g.d_u.assign(d, 0.0);
    g.d_Wc.assign(d * 4, 0.0);
    std::vector<Vec> d_qinit(inst.hops(), Vec(d, 0.0));
    std::vector<std::vector<Vec>> d_sent(n_paras);
    for (std::size_t i = 0; i < n_paras; ++i)
        d_sent[i].assign(inst.sentences[i].size(), Vec(d, 0.0));

    // Per-(hop, j) gradient flowing into k vectors from the classification head.
    std::vector<std::vector<Vec>> dk_cls(tape.hops.size());
    for (std::size_t t = 0; t < tape.hops.size(); ++t)
        dk_cls[t].assign(tape.hops[t].k.size(), Vec(d, 0.0));

    if (tape.cls) {
        const ClassTape& cls = *tape.cls;
        Vec dm = cls.probs;
        dm[static_cast<std::size_t>(*inst.gold_class)] -= 1.0;
        Vec dk_tilde(d, 0.0);
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < 4; ++c) {
                g.d_Wc[r * 4 + c] += cls.k_tilde[r] * dm[c];
                dk_tilde[r] += params.wc(r, c) * dm[c];
            }
        Vec dgamma(cls.gamma.size(), 0.0);
        std::size_t flat = 0;
        for (const HopTape& h : tape.hops)
            for (const Vec& k : h.k) dgamma[flat++] = dot(dk_tilde, k);
        const Vec dudk = softmax_backward(cls.gamma, dgamma);
        flat = 0;
        for (std::size_t t = 0; t < tape.hops.size(); ++t)
            for (std::size_t j = 0; j < tape.hops[t].k.size(); ++j) {
                axpy(dudk[flat], tape.hops[t].k[j], g.d_u);
                axpy(cls.gamma[flat], dk_tilde, dk_cls[t][j]);
                axpy(dudk[flat], params.u, dk_cls[t][j]);
                ++flat;
            }
    }

    Vec dq_carry;  // dL/d q_tilde of the previous hop, i.e. dL/d q_{t+1}
    Vec dx_top(d), dx_bot(d), dk(d);
    for (std::size_t ti = tape.hops.size(); ti-- > 0;) {
        const HopTape& h = tape.hops[ti];
        Vec dq(d, 0.0);
        Vec dq_tilde(d, 0.0);
        if (ti + 1 < tape.hops.size() && cfg.update_enabled) dq_tilde = dq_carry;

        // Deferred-regime alpha/dot accumulators, shared by the mix and the
        // score paths of this hop.
        std::vector<Vec> def_dalpha, def_dg;
        std::vector<bool> def_touched;
        if (deferred) {
            def_dalpha.resize(n_paras);
            def_dg.resize(n_paras);
            def_touched.assign(n_paras, false);
            for (std::size_t i = 0; i < n_paras; ++i) {
                def_dalpha[i].assign(inst.sentences[i].size(), 0.0);
                def_dg[i].assign(inst.sentences[i].size(), 0.0);
            }
        }

        auto backprop_through_Wq = [&](std::span<const double> top,
                                       std::span<const double> bottom,
                                       const Vec& dk_in) {
            for (std::size_t r = 0; r < d; ++r) {
                const double* row = params.W_q.data() + r * d;
                double acc = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    g.d_Wq[r * d + c] += top[r] * dk_in[c];
                    acc += row[c] * dk_in[c];
                }
                dx_top[r] = acc;
            }
            for (std::size_t r = 0; r < d; ++r) {
                const double* row = params.W_q.data() + (d + r) * d;
                double acc = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    g.d_Wq[(d + r) * d + c] += bottom[r] * dk_in[c];
                    acc += row[c] * dk_in[c];
                }
                dx_bot[r] = acc;
            }
        };

        // Mix backward.
        if (h.retrieved_kind == EntryKind::Sentence) {
            const std::size_t i = static_cast<std::size_t>(h.retrieved_para);
            const std::size_t j = static_cast<std::size_t>(h.retrieved_sent);
            dk = dq_tilde;
            axpy(1.0, dk_cls[ti][0], dk);
            backprop_through_Wq(h.q, inst.sentences[i][j], dk);
            axpy(1.0, dx_top, dq);
            axpy(1.0, dx_bot, d_sent[i][j]);
        } else {
            const std::size_t i = static_cast<std::size_t>(h.retrieved_para);
            const auto& sents = inst.sentences[i];
            const std::size_t nj = sents.size();
            Vec dbeta(nj, 0.0);
            std::vector<Vec> dk_j(nj, Vec(d, 0.0));
            for (std::size_t j = 0; j < nj; ++j) {
                dbeta[j] = dot(dq_tilde, h.k[j]);
                axpy(h.beta[j], dq_tilde, dk_j[j]);
                axpy(1.0, dk_cls[ti][j], dk_j[j]);
            }
            const Vec dw = softmax_backward(h.beta, dbeta);
            for (std::size_t j = 0; j < nj; ++j) {
                axpy(dw[j], h.k[j], g.d_v);
                axpy(dw[j], params.v, dk_j[j]);
            }
            Vec dalpha(nj, 0.0);
            Vec scaled_q(d);
            for (std::size_t j = 0; j < nj; ++j) {
                for (std::size_t c = 0; c < d; ++c)
                    scaled_q[c] = h.mix_alpha[j] * h.q[c];
                backprop_through_Wq(scaled_q, sents[j], dk_j[j]);
                dalpha[j] = dot(dx_top, h.q);
                axpy(h.mix_alpha[j], dx_top, dq);
                axpy(1.0, dx_bot, d_sent[i][j]);
            }
            if (deferred) {
                axpy(1.0, dalpha, def_dalpha[i]);
                def_touched[i] = true;
            } else {
                const Vec dg_mix = softmax_backward(h.mix_alpha, dalpha);
                for (std::size_t j = 0; j < nj; ++j) {
                    axpy(dg_mix[j], sents[j], dq);
                    axpy(dg_mix[j], h.q, d_sent[i][j]);
                }
            }
        }

        // Loss backward over this hop's candidate scores.
        if (!inst.positives[ti].empty()) {
            const auto positions =
                positive_positions(h, inst.positives[ti], static_cast<int>(ti));
            Vec dz;
            combined_loss(h.scores, positions, cfg.multi_positive, &dz);
            for (std::size_t c = 0; c < h.cand.size(); ++c) {
                const double dzc = dz[c];
                if (dzc == 0.0) continue;
                const IndexEntry& entry = lay.entries[h.cand[c]];
                const std::size_t i = static_cast<std::size_t>(entry.para_idx);
                if (entry.kind == EntryKind::Sentence) {
                    const std::size_t j = static_cast<std::size_t>(entry.sent_idx);
                    axpy(dzc, inst.sentences[i][j], dq);
                    axpy(dzc, h.q, d_sent[i][j]);
                } else if (!deferred) {
                    axpy(dzc, lay.para_vecs[i], dq);
                    const bool overridden =
                        !inst.para_override.empty() && inst.para_override[i];
                    if (!overridden) {
                        const double scale =
                            dzc / static_cast<double>(inst.sentences[i].size());
                        for (std::size_t j = 0; j < inst.sentences[i].size(); ++j)
                            axpy(scale, h.q, d_sent[i][j]);
                    }
                } else {
                    // z_i = sum_j alpha_j g_j: direct g term plus alpha path.
                    const Vec& alpha = h.def_alpha[i];
                    const Vec& gdots = h.def_sdots[i];
                    for (std::size_t j = 0; j < alpha.size(); ++j) {
                        def_dalpha[i][j] += dzc * gdots[j];
                        def_dg[i][j] += dzc * alpha[j];
                    }
                    def_touched[i] = true;
                }
            }
        }

        if (deferred) {
            for (std::size_t i = 0; i < n_paras; ++i) {
                if (!def_touched[i]) continue;
                Vec dg = softmax_backward(h.def_alpha[i], def_dalpha[i]);
                axpy(1.0, def_dg[i], dg);
                for (std::size_t j = 0; j < inst.sentences[i].size(); ++j) {
                    axpy(dg[j], inst.sentences[i][j], dq);
                    axpy(dg[j], h.q, d_sent[i][j]);
                }
            }
        }

        axpy(1.0, dq, d_qinit[ti]);
        dq_carry = std::move(dq);
    }

    if (cfg.trainable.query_vecs) g.d_query_init = std::move(d_qinit);
    if (cfg.trainable.sentence_vecs) g.d_sentences = std::move(d_sent);
    return g;
}

// --- gradient check -------------------------------------------------------------

GradCheckResult grad_check(const TrainingInstance& inst, const MixParams& params,
                           const TrainConfig& cfg, double h) {
    MixParams work = params;
    TrainingInstance inst_work = inst;
    const ForwardTape tape = forward(inst_work, work, cfg);
    const GradReport analytic = backward(inst_work, work, tape, cfg);

    GradCheckResult result;
    auto check_slot = [&](double& slot, double grad) {
        const double orig = slot;
        slot = orig + h;
        const double fp = forward(inst_work, work, cfg).total;
        slot = orig - h;
        const double fm = forward(inst_work, work, cfg).total;
        slot = orig;
        const double fd = (fp - fm) / (2.0 * h);
        const double rel = std::fabs(grad - fd) /
                           std::max({std::fabs(grad), std::fabs(fd), 1e-6});
        result.max_rel_error = std::max(result.max_rel_error, rel);
        result.params_checked += 1;
    };

    if (cfg.trainable.mix_params) {
        for (std::size_t i = 0; i < work.W_q.size(); ++i)
            check_slot(work.W_q[i], analytic.d_Wq[i]);
        for (std::size_t i = 0; i < work.v.size(); ++i)
            check_slot(work.v[i], analytic.d_v[i]);
        for (std::size_t i = 0; i < work.u.size(); ++i)
            check_slot(work.u[i], analytic.d_u[i]);
        for (std::size_t i = 0; i < work.W_c.size(); ++i)
            check_slot(work.W_c[i], analytic.d_Wc[i]);
    }
    if (cfg.trainable.query_vecs) {
        for (std::size_t t = 0; t < inst_work.query_init.size(); ++t)
            for (std::size_t c = 0; c < inst_work.query_init[t].size(); ++c)
                check_slot(inst_work.query_init[t][c], analytic.d_query_init[t][c]);
    }
    if (cfg.trainable.sentence_vecs) {
        for (std::size_t i = 0; i < inst_work.sentences.size(); ++i)
            for (std::size_t j = 0; j < inst_work.sentences[i].size(); ++j)
                for (std::size_t c = 0; c < inst_work.sentences[i][j].size(); ++c)
                    check_slot(inst_work.sentences[i][j][c],
                               analytic.d_sentences[i][j][c]);
    }
    return result;
}

// --- fit -------------------------------------------------------------------------

FitResult fit(const std::vector<TrainingInstance>& dataset, MixParams init,
              const TrainConfig& cfg) {
    if (dataset.empty()) throw ValidationError("fit over empty dataset");
    init.validate();
    if (cfg.learning_rate < 0.0)
        throw ValidationError("negative learning rate");
    if (cfg.steps < 0) throw ValidationError("negative step count");

    FitResult out;
    out.params = std::move(init);
    out.loss_curve.reserve(static_cast<std::size_t>(cfg.steps));

    const std::size_t d = out.params.dim;
    Vec vel_Wq, vel_v, vel_u, vel_Wc;
    const bool use_momentum = cfg.momentum != 0.0;
    if (use_momentum) {
        vel_Wq.assign(2 * d * d, 0.0);
        vel_v.assign(d, 0.0);
        vel_u.assign(d, 0.0);
        vel_Wc.assign(d * 4, 0.0);
    }

    const double inv_n = 1.0 / static_cast<double>(dataset.size());
    for (int step = 0; step < cfg.steps; ++step) {
        Vec gWq(2 * d * d, 0.0), gv(d, 0.0), gu(d, 0.0), gWc(d * 4, 0.0);
        double loss_sum = 0.0;
        for (const TrainingInstance& inst : dataset) {
            const ForwardTape tape = forward(inst, out.params, cfg);
            loss_sum += tape.total;
            const GradReport rep = backward(inst, out.params, tape, cfg);
            axpy(1.0, rep.d_Wq, gWq);
            axpy(1.0, rep.d_v, gv);
            axpy(1.0, rep.d_u, gu);
            axpy(1.0, rep.d_Wc, gWc);
        }
        const double mean_loss = loss_sum * inv_n;
        if (!std::isfinite(mean_loss))
            throw TrainingError("loss diverged (non-finite) at step " +
                                std::to_string(step));
        out.loss_curve.push_back(mean_loss);
        if (!cfg.trainable.mix_params) continue;

        auto apply = [&](Vec& param, const Vec& grad, Vec& vel) {
            if (use_momentum) {
                for (std::size_t i = 0; i < param.size(); ++i) {
                    vel[i] = cfg.momentum * vel[i] -
                             cfg.learning_rate * inv_n * grad[i];
                    param[i] += vel[i];
                }
            } else {
                for (std::size_t i = 0; i < param.size(); ++i)
                    param[i] -= cfg.learning_rate * inv_n * grad[i];
            }
        };
        apply(out.params.W_q, gWq, vel_Wq);
        apply(out.params.v, gv, vel_v);
        apply(out.params.u, gu, vel_u);
        apply(out.params.W_c, gWc, vel_Wc);
    }
    return out;
}

// --- checkpoint io ----------------------------------------------------------------

namespace {

constexpr char kCkptMagic[4] = {'H', 'C', 'K', 'P'};
constexpr std::uint32_t kCkptVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& what) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("truncated checkpoint while reading " + what);
    return v;
}

void write_tensor(std::ofstream& out, const std::string& name, const Vec& data) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<std::uint64_t>(out, data.size());
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
}

Vec read_tensor(std::ifstream& in, const std::string& expect_name,
                std::size_t expect_count) {
    const auto name_len = read_pod<std::uint32_t>(in, "tensor name length");
    if (name_len > 64)
        throw FormatError("implausible checkpoint tensor name length " +
                          std::to_string(name_len));
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw IoError("truncated checkpoint while reading tensor name");
    if (name != expect_name)
        throw FormatError("unexpected checkpoint tensor '" + name + "' (expected '" +
                          expect_name + "')");
    const auto count = read_pod<std::uint64_t>(in, "tensor size");
    if (count != expect_count)
        throw FormatError("checkpoint tensor '" + name + "' has " +
                          std::to_string(count) + " values, expected " +
                          std::to_string(expect_count));
    Vec data(count);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw IoError("truncated checkpoint while reading tensor data");
    return data;
}

}  // namespace

void save_checkpoint(const MixParams& params, const std::string& path) {
    params.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out.write(kCkptMagic, 4);
    write_pod<std::uint32_t>(out, kCkptVersion);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(params.dim));
    write_pod<std::uint32_t>(out, 4u);
    write_tensor(out, "W_q", params.W_q);
    write_tensor(out, "v", params.v);
    write_tensor(out, "u", params.u);
    write_tensor(out, "W_c", params.W_c);
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

MixParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCkptMagic, 4) != 0)
        throw FormatError("not a checkpoint file (bad magic): " + path);
    const auto version = read_pod<std::uint32_t>(in, "version");
    if (version != kCkptVersion)
        throw FormatError("unsupported checkpoint version " +
                          std::to_string(version));
    const auto dim = read_pod<std::uint32_t>(in, "dim");
    if (dim == 0 || dim > (1u << 20))
        throw FormatError("implausible checkpoint dim " + std::to_string(dim));
    const auto n_tensors = read_pod<std::uint32_t>(in, "tensor count");
    if (n_tensors != 4)
        throw FormatError("checkpoint must hold exactly 4 tensors, found " +
                          std::to_string(n_tensors));
    MixParams params;
    params.dim = dim;
    const std::size_t d = dim;
    params.W_q = read_tensor(in, "W_q", 2 * d * d);
    params.v = read_tensor(in, "v", d);
    params.u = read_tensor(in, "u", d);
    params.W_c = read_tensor(in, "W_c", d * 4);
    params.validate();
    return params;
}

}  // namespace hopmix
