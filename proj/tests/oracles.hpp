#pragma once

// Naive reference implementations used only by the tests. Each one is written
// independently of the code path it checks — full DP tables instead of rolling
// rows, per-entry scalar loops instead of the batched kernel, product-form
// geometric means instead of log sums — so shared bugs are unlikely. Slow on
// purpose; keep case sizes small.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hopmix/embed.hpp"
#include "hopmix/hop_engine.hpp"
#include "hopmix/index.hpp"
#include "hopmix/rank_heads.hpp"
#include "hopmix/train.hpp"
#include "hopmix/vecmath.hpp"

namespace oracles {

using hopmix::CombinedIndex;
using hopmix::EntryKind;
using hopmix::MixParams;
using hopmix::Vec;
using hopmix::VecF;

// --- scoring ------------------------------------------------------------------

inline double naive_dot(const Vec& q, std::span<const float> row) {
    double acc = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
        acc += q[i] * static_cast<double>(row[i]);
    return acc;
}

inline double naive_dot(const Vec& a, const Vec& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline Vec naive_softmax(const Vec& z) {
    double m = z[0];
    for (double x : z) m = std::max(m, x);
    Vec p(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - m);
        sum += p[i];
    }
    for (double& x : p) x /= sum;
    return p;
}

// Per-entry scores in entry order, recomputed entry by entry. Deferred
// paragraph entries are realized as sum_j alpha_j (q.s_j) with alpha the
// softmax over that paragraph's sentence dots.
inline std::vector<double> naive_all_dots(const Vec& q, const CombinedIndex& index) {
    std::vector<double> dots(index.size());
    for (std::size_t e = 0; e < index.size(); ++e) dots[e] = naive_dot(q, index.vec(e));
    if (index.regime == hopmix::IndexRegime::QueryDependentDeferred) {
        for (const hopmix::ParaSpan& span : index.paras) {
            if (span.n_sentences == 0) {
                dots[span.para_entry] = 0.0;
                continue;
            }
            Vec g(span.n_sentences);
            for (std::uint32_t j = 0; j < span.n_sentences; ++j)
                g[j] = dots[span.first_sentence_entry + j];
            const Vec alpha = naive_softmax(g);
            double z = 0.0;
            for (std::uint32_t j = 0; j < span.n_sentences; ++j) z += alpha[j] * g[j];
            dots[span.para_entry] = z;
        }
    }
    return dots;
}

inline std::vector<hopmix::ScoredEntry> naive_score_all(
    const Vec& q, const CombinedIndex& index, std::optional<EntryKind> mask) {
    const std::vector<double> dots = naive_all_dots(q, index);
    std::vector<hopmix::ScoredEntry> out;
    for (std::size_t e = 0; e < index.size(); ++e)
        if (!mask || index.entries[e].kind == *mask)
            out.push_back({static_cast<std::uint32_t>(e), dots[e]});
    return out;
}

inline std::size_t naive_argmax(const std::vector<hopmix::ScoredEntry>& scores) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i].score > scores[best].score) best = i;
    return best;
}

inline double naive_step_loss(const Vec& q, const CombinedIndex& index,
                              const std::vector<std::uint32_t>& positives,
                              hopmix::MultiPositiveRule rule) {
    const std::vector<double> z = naive_all_dots(q, index);
    const Vec p = naive_softmax(Vec(z.begin(), z.end()));
    std::vector<std::uint32_t> uniq = positives;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (rule == hopmix::MultiPositiveRule::MarginalLog) {
        double mass = 0.0;
        for (std::uint32_t e : uniq) mass += p[e];
        return -std::log(mass);
    }
    double loss = 0.0;
    for (std::uint32_t e : uniq) loss -= std::log(p[e]);
    return loss;
}

// --- mixing -------------------------------------------------------------------

// k[c] = sum_r W_q[r][c] top[r] + sum_r W_q[dim+r][c] bottom[r], column-major
// loop order (the library iterates rows).
inline Vec naive_project(const MixParams& params, const Vec& top, const Vec& bottom) {
    const std::size_t d = params.dim;
    Vec k(d, 0.0);
    for (std::size_t c = 0; c < d; ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < d; ++r) acc += params.W_q[r * d + c] * top[r];
        for (std::size_t r = 0; r < d; ++r)
            acc += params.W_q[(d + r) * d + c] * bottom[r];
        k[c] = acc;
    }
    return k;
}

struct NaiveMix {
    Vec q_tilde;
    Vec alpha;  // empty for the sentence branch
    Vec beta;
    std::vector<Vec> k;
};

inline NaiveMix naive_mix_sentence(const Vec& q, const Vec& s, const MixParams& params) {
    NaiveMix out;
    out.k.push_back(naive_project(params, q, s));
    out.q_tilde = out.k[0];
    return out;
}

inline NaiveMix naive_mix_paragraph(const Vec& q, const std::vector<Vec>& sents,
                                    const MixParams& params) {
    const std::size_t n = sents.size();
    Vec g(n);
    for (std::size_t j = 0; j < n; ++j) g[j] = naive_dot(q, sents[j]);
    NaiveMix out;
    out.alpha = naive_softmax(g);
    Vec vk(n);
    for (std::size_t j = 0; j < n; ++j) {
        Vec scaled(q.size());
        for (std::size_t c = 0; c < q.size(); ++c) scaled[c] = out.alpha[j] * q[c];
        out.k.push_back(naive_project(params, scaled, sents[j]));
        vk[j] = naive_dot(params.v, out.k[j]);
    }
    out.beta = naive_softmax(vk);
    out.q_tilde.assign(q.size(), 0.0);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t c = 0; c < q.size(); ++c)
            out.q_tilde[c] += out.beta[j] * out.k[j][c];
    return out;
}

// --- full hop loop over a real index --------------------------------------------

struct NaiveHop {
    std::uint32_t entry = 0;
    EntryKind kind = EntryKind::Paragraph;
    std::int32_t para = -1;
    std::int32_t sent = -1;
    double score = 0.0;
    Vec q_used;
    NaiveMix mix;
};

// Mirrors run_hops semantics step by step with scalar code: score under the
// hop's mask, argmax with lowest-entry tie break, mix by retrieved kind,
// residual-add into the next init vector.
inline std::vector<NaiveHop> naive_run_hops(
    std::vector<Vec> q_init, const CombinedIndex& index, const MixParams& params,
    const std::vector<std::optional<EntryKind>>& masks, bool update_enabled = true) {
    std::vector<NaiveHop> out;
    for (std::size_t t = 0; t < q_init.size(); ++t) {
        NaiveHop hop;
        hop.q_used = q_init[t];
        const auto scored = naive_score_all(hop.q_used, index, masks[t]);
        const std::size_t best = naive_argmax(scored);
        hop.entry = scored[best].entry;
        hop.score = scored[best].score;
        const hopmix::IndexEntry& entry = index.entries[hop.entry];
        hop.kind = entry.kind;
        hop.para = entry.para_idx;
        hop.sent = entry.sent_idx;
        if (entry.kind == EntryKind::Sentence) {
            hop.mix = naive_mix_sentence(hop.q_used,
                                         hopmix::to_double(index.vec(hop.entry)),
                                         params);
        } else {
            const hopmix::ParaSpan& span =
                index.paras[static_cast<std::size_t>(entry.para_idx)];
            std::vector<Vec> sents(span.n_sentences);
            for (std::uint32_t j = 0; j < span.n_sentences; ++j)
                sents[j] = hopmix::to_double(
                    index.sentence_vec(static_cast<std::uint32_t>(entry.para_idx), j));
            hop.mix = naive_mix_paragraph(hop.q_used, sents, params);
        }
        if (update_enabled && t + 1 < q_init.size())
            for (std::size_t c = 0; c < q_init[t + 1].size(); ++c)
                q_init[t + 1][c] += hop.mix.q_tilde[c];
        out.push_back(std::move(hop));
    }
    return out;
}

// --- training-instance total loss ------------------------------------------------

// From-scratch recomputation of forward()'s total: per hop, scores over the
// instance's entry layout, candidates under the hop mask, softmax cross
// entropy (marginal or summed) over the positive positions, retrieval by
// argmax over candidates, mixing, residual update; then the classification
// head over all k vectors when a gold class is present.
inline double naive_total_loss(const hopmix::TrainingInstance& inst,
                               const MixParams& params,
                               const hopmix::TrainConfig& cfg) {
    const std::size_t d = inst.dim();
    const std::size_t n_paras = inst.sentences.size();
    const bool deferred = inst.regime == hopmix::IndexRegime::QueryDependentDeferred;

    std::vector<Vec> para_vecs(n_paras);
    if (!deferred) {
        for (std::size_t i = 0; i < n_paras; ++i) {
            if (!inst.para_override.empty() && inst.para_override[i]) {
                para_vecs[i] = *inst.para_override[i];
            } else {
                para_vecs[i].assign(d, 0.0);
                for (const Vec& s : inst.sentences[i])
                    for (std::size_t c = 0; c < d; ++c) para_vecs[i][c] += s[c];
                for (double& x : para_vecs[i])
                    x /= static_cast<double>(inst.sentences[i].size());
            }
        }
    }

    double total = 0.0;
    std::vector<Vec> all_k;
    Vec carry;
    for (std::size_t t = 0; t < inst.hops(); ++t) {
        Vec q = inst.query_init[t];
        if (t > 0 && cfg.update_enabled)
            for (std::size_t c = 0; c < d; ++c) q[c] += carry[c];

        // entry scores in layout order p_0, s_0^0, ...
        std::vector<double> scores;
        std::vector<hopmix::IndexEntry> entries;
        for (std::size_t i = 0; i < n_paras; ++i) {
            double pscore;
            if (deferred) {
                Vec g(inst.sentences[i].size());
                for (std::size_t j = 0; j < g.size(); ++j)
                    g[j] = naive_dot(q, inst.sentences[i][j]);
                const Vec alpha = naive_softmax(g);
                pscore = 0.0;
                for (std::size_t j = 0; j < g.size(); ++j) pscore += alpha[j] * g[j];
            } else {
                pscore = naive_dot(q, para_vecs[i]);
            }
            entries.push_back({EntryKind::Paragraph, static_cast<std::int32_t>(i), -1});
            scores.push_back(pscore);
            for (std::size_t j = 0; j < inst.sentences[i].size(); ++j) {
                entries.push_back({EntryKind::Sentence, static_cast<std::int32_t>(i),
                                   static_cast<std::int32_t>(j)});
                scores.push_back(naive_dot(q, inst.sentences[i][j]));
            }
        }

        std::vector<std::uint32_t> cand;
        for (std::size_t e = 0; e < entries.size(); ++e)
            if (!inst.masks[t] || entries[e].kind == *inst.masks[t])
                cand.push_back(static_cast<std::uint32_t>(e));
        Vec cz(cand.size());
        for (std::size_t c = 0; c < cand.size(); ++c) cz[c] = scores[cand[c]];

        if (!inst.positives[t].empty()) {
            const Vec p = naive_softmax(cz);
            std::vector<std::size_t> positions;
            for (std::uint32_t e : inst.positives[t]) {
                for (std::size_t c = 0; c < cand.size(); ++c)
                    if (cand[c] == e) positions.push_back(c);
            }
            std::sort(positions.begin(), positions.end());
            positions.erase(std::unique(positions.begin(), positions.end()),
                            positions.end());
            if (cfg.multi_positive == hopmix::MultiPositiveRule::MarginalLog) {
                double mass = 0.0;
                for (std::size_t c : positions) mass += p[c];
                total += -std::log(mass);
            } else {
                for (std::size_t c : positions) total += -std::log(p[c]);
            }
        }

        std::size_t best = 0;
        for (std::size_t c = 1; c < cand.size(); ++c)
            if (cz[c] > cz[best]) best = c;
        const hopmix::IndexEntry& entry = entries[cand[best]];
        NaiveMix mix;
        if (entry.kind == EntryKind::Sentence) {
            mix = naive_mix_sentence(
                q,
                inst.sentences[static_cast<std::size_t>(entry.para_idx)]
                              [static_cast<std::size_t>(entry.sent_idx)],
                params);
        } else {
            mix = naive_mix_paragraph(
                q, inst.sentences[static_cast<std::size_t>(entry.para_idx)], params);
        }
        for (const Vec& k : mix.k) all_k.push_back(k);
        carry = mix.q_tilde;
    }

    if (inst.gold_class && cfg.include_classification) {
        Vec uk(all_k.size());
        for (std::size_t i = 0; i < all_k.size(); ++i)
            uk[i] = naive_dot(params.u, all_k[i]);
        const Vec gamma = naive_softmax(uk);
        Vec kt(d, 0.0);
        for (std::size_t i = 0; i < all_k.size(); ++i)
            for (std::size_t c = 0; c < d; ++c) kt[c] += gamma[i] * all_k[i][c];
        Vec logits(4, 0.0);
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < 4; ++c)
                logits[c] += params.W_c[r * 4 + c] * kt[r];
        const Vec probs = naive_softmax(logits);
        total += -std::log(probs[static_cast<std::size_t>(*inst.gold_class)]);
    }
    return total;
}

// --- fusion --------------------------------------------------------------------

inline int naive_lcs_len(std::string_view a, std::string_view b) {
    auto norm = [](std::string_view s) {
        std::string out;
        bool pending_space = false;
        for (char ch : s) {
            if (std::isspace(static_cast<unsigned char>(ch))) {
                pending_space = true;
                continue;
            }
            if (pending_space && !out.empty()) out.push_back(' ');
            pending_space = false;
            out.push_back(
                static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        }
        return out;
    };
    const std::string x = norm(a), y = norm(b);
    // full DP table: best common suffix ending at (i, j)
    std::vector<std::vector<int>> t(x.size() + 1, std::vector<int>(y.size() + 1, 0));
    int best = 0;
    for (std::size_t i = 1; i <= x.size(); ++i)
        for (std::size_t j = 1; j <= y.size(); ++j)
            if (x[i - 1] == y[j - 1]) {
                t[i][j] = t[i - 1][j - 1] + 1;
                best = std::max(best, t[i][j]);
            }
    return best;
}

// Eq-by-eq scalar recomputation: sentence dot + broadcast paragraph dot +
// broadcast sparse term, walking sentences in entry order.
inline std::vector<hopmix::SentenceScore> naive_fused_scores(
    const Vec& q0, const Vec& q1, const CombinedIndex& index, double lambda1,
    double lambda2, std::string_view question,
    const std::vector<std::string>& para_texts) {
    const std::vector<double> pdots = naive_all_dots(q0, index);
    std::vector<hopmix::SentenceScore> out;
    for (std::size_t e = 0; e < index.size(); ++e) {
        const hopmix::IndexEntry& entry = index.entries[e];
        if (entry.kind != EntryKind::Sentence) continue;
        const std::size_t pi = static_cast<std::size_t>(entry.para_idx);
        const double para_dot = pdots[index.paras[pi].para_entry];
        const double sparse =
            static_cast<double>(naive_lcs_len(question, para_texts[pi]));
        out.push_back({entry.para_idx, entry.sent_idx,
                       naive_dot(q1, index.vec(e)) + lambda1 * para_dot +
                           lambda2 * sparse});
    }
    return out;
}

// --- text metrics ----------------------------------------------------------------

inline double naive_bleu(const std::vector<std::string>& cand,
                         const std::vector<std::string>& ref, int max_n = 4) {
    const int top = std::min<int>(max_n, static_cast<int>(cand.size()));
    double product = 1.0;
    for (int n = 1; n <= top; ++n) {
        std::map<std::vector<std::string>, int> cgrams, rgrams;
        for (std::size_t i = 0; i + n <= cand.size(); ++i)
            ++cgrams[std::vector<std::string>(cand.begin() + i, cand.begin() + i + n)];
        for (std::size_t i = 0; i + n <= ref.size(); ++i)
            ++rgrams[std::vector<std::string>(ref.begin() + i, ref.begin() + i + n)];
        int matched = 0, total = 0;
        for (const auto& [gram, count] : cgrams) {
            total += count;
            const auto it = rgrams.find(gram);
            if (it != rgrams.end()) matched += std::min(count, it->second);
        }
        if (matched == 0) return 0.0;
        product *= static_cast<double>(matched) / static_cast<double>(total);
    }
    return std::pow(product, 1.0 / top);
}

inline int naive_edit_distance(const std::vector<std::string>& a,
                               const std::vector<std::string>& b) {
    std::vector<std::vector<int>> t(a.size() + 1, std::vector<int>(b.size() + 1, 0));
    for (std::size_t i = 0; i <= a.size(); ++i) t[i][0] = static_cast<int>(i);
    for (std::size_t j = 0; j <= b.size(); ++j) t[0][j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const int sub = t[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            t[i][j] = std::min({t[i - 1][j] + 1, t[i][j - 1] + 1, sub});
        }
    return t[a.size()][b.size()];
}

inline std::vector<std::string> naive_answer_tokens(std::string_view s) {
    std::string cleaned;
    for (char ch : s) {
        const auto uc = static_cast<unsigned char>(ch);
        if (std::ispunct(uc)) continue;
        cleaned.push_back(static_cast<char>(std::tolower(uc)));
    }
    std::vector<std::string> toks;
    std::string cur;
    for (char ch : cleaned) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!cur.empty()) toks.push_back(std::exchange(cur, {}));
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) toks.push_back(cur);
    return toks;
}

inline std::pair<double, double> naive_em_f1(const std::string& pred,
                                             const std::vector<std::string>& golds) {
    const auto pt = naive_answer_tokens(pred);
    double best_em = 0.0, best_f1 = 0.0;
    for (const std::string& gold : golds) {
        const auto gt = naive_answer_tokens(gold);
        double em = 0.0, f1 = 0.0;
        if (pt.empty() && gt.empty()) {
            em = f1 = 1.0;
        } else if (!pt.empty() && !gt.empty()) {
            em = pt == gt ? 1.0 : 0.0;
            auto ps = pt, gs = gt;
            std::sort(ps.begin(), ps.end());
            std::sort(gs.begin(), gs.end());
            std::vector<std::string> common;
            std::set_intersection(ps.begin(), ps.end(), gs.begin(), gs.end(),
                                  std::back_inserter(common));
            if (!common.empty()) {
                const double prec =
                    static_cast<double>(common.size()) / static_cast<double>(pt.size());
                const double rec =
                    static_cast<double>(common.size()) / static_cast<double>(gt.size());
                f1 = 2.0 * prec * rec / (prec + rec);
            }
        }
        best_em = std::max(best_em, em);
        best_f1 = std::max(best_f1, f1);
    }
    return {best_em, best_f1};
}

// --- shared test fixtures ----------------------------------------------------------

// Serves vectors positionally and ignores the text, so tests can pin exact
// index contents without hashing coupling.
class TableProvider final : public hopmix::EmbeddingProvider {
public:
    TableProvider(int dim, std::vector<std::vector<VecF>> sentence_vecs)
        : dim_(dim), sents_(std::move(sentence_vecs)) {}

    int dim() const override { return dim_; }

    VecF sentence_vec(std::string_view, int para_idx, int sent_idx,
                      std::string_view) const override {
        return sents_.at(static_cast<std::size_t>(para_idx))
            .at(static_cast<std::size_t>(sent_idx));
    }
    std::optional<VecF> paragraph_vec(std::string_view, int para_idx) const override {
        const auto it = paras_.find(para_idx);
        if (it == paras_.end()) return std::nullopt;
        return it->second;
    }
    VecF query_unit_vec(std::string_view, int unit_idx, std::string_view) const override {
        return queries_.at(static_cast<std::size_t>(unit_idx));
    }

    void set_paragraph(int para_idx, VecF v) { paras_[para_idx] = std::move(v); }
    void set_queries(std::vector<VecF> qs) { queries_ = std::move(qs); }

private:
    int dim_;
    std::vector<std::vector<VecF>> sents_;
    std::map<int, VecF> paras_;
    std::vector<VecF> queries_;
};

inline VecF random_vecf(hopmix::Rng& rng, int dim, double scale = 1.0) {
    VecF v(static_cast<std::size_t>(dim));
    for (float& x : v) x = static_cast<float>(rng.normal() * scale);
    return v;
}

inline Vec random_vec(hopmix::Rng& rng, int dim, double scale = 1.0) {
    Vec v(static_cast<std::size_t>(dim));
    for (double& x : v) x = rng.normal() * scale;
    return v;
}

inline hopmix::StructuredDocument make_doc(const std::string& id,
                                           const std::vector<int>& sents_per_para) {
    hopmix::StructuredDocument doc;
    doc.id = id;
    for (std::size_t i = 0; i < sents_per_para.size(); ++i) {
        hopmix::Paragraph p;
        p.id = "p" + std::to_string(i);
        for (int j = 0; j < sents_per_para[i]; ++j) {
            hopmix::Sentence s;
            s.id = p.id + "/s" + std::to_string(j);
            s.text = "sentence " + std::to_string(i) + " " + std::to_string(j) +
                     " of " + id + ".";
            s.para_idx = static_cast<int>(i);
            s.sent_idx = j;
            p.sentences.push_back(std::move(s));
        }
        doc.paragraphs.push_back(std::move(p));
    }
    return doc;
}

// Random document + index pair; vectors land in [-scale, scale]-ish normals.
struct RandomIndexFixture {
    hopmix::StructuredDocument doc;
    std::vector<std::vector<VecF>> vecs;
    CombinedIndex index;
};

inline RandomIndexFixture random_index(hopmix::Rng& rng, int n_paras, int max_sents,
                                       int dim, hopmix::IndexRegime regime,
                                       double scale = 1.0) {
    std::vector<int> layout;
    std::vector<std::vector<VecF>> vecs;
    for (int i = 0; i < n_paras; ++i) {
        const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_sents)));
        layout.push_back(n);
        std::vector<VecF> row;
        for (int j = 0; j < n; ++j) row.push_back(random_vecf(rng, dim, scale));
        vecs.push_back(std::move(row));
    }
    RandomIndexFixture fx;
    fx.doc = make_doc("rnd", layout);
    fx.vecs = vecs;
    TableProvider provider(dim, std::move(vecs));
    fx.index = hopmix::build_index(fx.doc, provider, regime);
    return fx;
}

// Random self-contained training instance with valid per-hop positives.
inline hopmix::TrainingInstance random_instance(hopmix::Rng& rng, int dim,
                                                int n_paras, int max_sents, int hops,
                                                hopmix::IndexRegime regime,
                                                bool with_class, bool masked_hops) {
    hopmix::TrainingInstance inst;
    inst.query_id = "case";
    inst.regime = regime;
    for (int i = 0; i < n_paras; ++i) {
        const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_sents)));
        std::vector<Vec> row;
        for (int j = 0; j < n; ++j) row.push_back(random_vec(rng, dim));
        inst.sentences.push_back(std::move(row));
    }
    for (int t = 0; t < hops; ++t) {
        inst.query_init.push_back(random_vec(rng, dim));
        if (masked_hops)
            inst.masks.push_back(t == 0 ? EntryKind::Paragraph : EntryKind::Sentence);
        else
            inst.masks.push_back(std::nullopt);
    }
    for (int t = 0; t < hops; ++t) {
        const auto pi = rng.below(static_cast<std::uint64_t>(n_paras));
        std::vector<std::uint32_t> pos;
        if (masked_hops && t == 0) {
            pos.push_back(inst.entry_of_paragraph(pi));
        } else {
            const auto si =
                rng.below(static_cast<std::uint64_t>(inst.sentences[pi].size()));
            pos.push_back(inst.entry_of_sentence(pi, si));
        }
        inst.positives.push_back(std::move(pos));
    }
    if (with_class) inst.gold_class = static_cast<int>(rng.below(4));
    return inst;
}

}  // namespace oracles
