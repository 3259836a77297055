#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "doctest.h"
#include "hopmix/embed.hpp"
#include "hopmix/errors.hpp"
#include "hopmix/index.hpp"
#include "hopmix/synth.hpp"
#include "hopmix/train.hpp"
#include "hopmix/vecmath.hpp"

using namespace hopmix;

namespace {

SynthSpec small_spec() {
    SynthSpec spec;
    spec.n_docs = 12;
    spec.paras_per_doc = 6;
    spec.sents_per_para = 4;
    spec.dim = 16;
    spec.hops = 2;
    spec.seed = 7;
    spec.train_fraction = 0.75;
    return spec;
}

double scores_margin(const std::vector<ScoredEntry>& scores) {
    double best = -1e300, second = -1e300;
    for (const ScoredEntry& se : scores) {
        if (se.score > best) {
            second = best;
            best = se.score;
        } else if (se.score > second) {
            second = se.score;
        }
    }
    return best - second;
}

}  // namespace

TEST_CASE("synth spec validation") {
    SynthSpec spec = small_spec();
    CHECK_NOTHROW(spec.validate());

    SUBCASE("counts") {
        spec.n_docs = 0;
        CHECK_THROWS_AS(spec.validate(), ValidationError);
    }
    SUBCASE("too few paragraphs") {
        spec.paras_per_doc = 1;
        CHECK_THROWS_AS(spec.validate(), ValidationError);
    }
    SUBCASE("chain longer than the document") {
        spec.paras_per_doc = 2;
        spec.hops = 3;
        CHECK_THROWS_AS(spec.validate(), ValidationError);
    }
    SUBCASE("dim floor") {
        spec.dim = 3;
        CHECK_THROWS_AS(spec.validate(), ValidationError);
    }
    SUBCASE("single-hop chains make no sense") {
        spec.hops = 1;
        CHECK_THROWS_AS(spec.validate(), ValidationError);
    }
    SUBCASE("train fraction range") {
        spec.train_fraction = 1.5;
        CHECK_THROWS_AS(spec.validate(), ValidationError);
    }
    SUBCASE("noise knobs must be finite and non-negative") {
        spec.query_noise = -0.1;
        CHECK_THROWS_AS(spec.validate(), ValidationError);
    }
}

TEST_CASE("synth masks") {
    const auto full = synth_masks(3, SynthMode::Full);
    REQUIRE(full.size() == 3);
    CHECK(full[0] == std::optional<EntryKind>(EntryKind::Paragraph));
    CHECK(full[1] == std::optional<EntryKind>(EntryKind::Sentence));
    CHECK(full[2] == std::optional<EntryKind>(EntryKind::Sentence));

    const auto sent_only = synth_masks(2, SynthMode::SentenceOnly);
    CHECK(sent_only[0] == std::optional<EntryKind>(EntryKind::Sentence));
    CHECK(sent_only[1] == std::optional<EntryKind>(EntryKind::Sentence));

    CHECK_THROWS_AS(synth_masks(0, SynthMode::Full), ValidationError);
}

TEST_CASE("generated datasets have the declared shape") {
    const SynthSpec spec = small_spec();
    const SynthDataset ds = synth_generate(spec);

    CHECK(ds.docs.size() == 12);
    CHECK(ds.train.size() == 9);  // round(0.75 * 12)
    CHECK(ds.test.size() == 3);
    CHECK(ds.embeddings.dim == 16);

    for (std::size_t d = 0; d < ds.docs.size(); ++d) {
        const auto& doc = ds.docs[d];
        CHECK(doc.id == "sdoc" + std::to_string(d));
        REQUIRE(doc.paragraphs.size() == 6);
        for (const auto& para : doc.paragraphs) CHECK(para.sentences.size() == 4);
        CHECK_NOTHROW(doc.validate());
    }

    // every sentence and query unit has a stored vector
    for (const auto& doc : ds.docs)
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 4; ++j) {
                const VecF* v = ds.embeddings.find(sentence_key(doc.id, i, j));
                REQUIRE(v != nullptr);
                CHECK(v->size() == 16);
            }
    for (const auto& q : ds.train) {
        CHECK(ds.embeddings.find(query_unit_key(q.id, 0)) != nullptr);
        CHECK(ds.embeddings.find(query_unit_key(q.id, 1)) != nullptr);
    }

    // gold chain bookkeeping: one target sentence per later hop, hosted away
    // from the gold paragraph, plus a planted decoy
    for (const auto& q : ds.test) {
        CHECK(q.gold_para >= 0);
        CHECK(q.gold_para < 6);
        REQUIRE(q.gold_sentences.size() == 1);
        CHECK(q.gold_sentences[0].first != q.gold_para);
        CHECK(q.decoy_para >= 0);
        CHECK(q.decoy_sent >= 0);
        CHECK(std::make_pair(q.decoy_para, q.decoy_sent) != q.gold_sentences[0]);
    }

    // the planted parameters live entirely in the sentence block of W_q
    const std::size_t d = 16;
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t c = 0; c < d; ++c) CHECK(ds.planted.wq(j, c) == 0.0);
    bool any_nonzero = false;
    for (std::size_t j = d; j < 2 * d; ++j)
        for (std::size_t c = 0; c < d; ++c)
            if (ds.planted.wq(j, c) != 0.0) any_nonzero = true;
    CHECK(any_nonzero);
    for (double x : ds.planted.v) CHECK(x == 0.0);
    for (double x : ds.planted.u) CHECK(x == 0.0);
    for (double x : ds.planted.W_c) CHECK(x == 0.0);
}

TEST_CASE("generation is bit-identical across calls") {
    const SynthSpec spec = small_spec();
    const SynthDataset a = synth_generate(spec);
    const SynthDataset b = synth_generate(spec);

    CHECK(a.planted.W_q == b.planted.W_q);
    REQUIRE(a.embeddings.entries.size() == b.embeddings.entries.size());
    for (const auto& [key, vec] : a.embeddings.entries) {
        const VecF* other = b.embeddings.find(key);
        REQUIRE(other != nullptr);
        CHECK(vec == *other);
    }
    REQUIRE(a.train.size() == b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i) {
        CHECK(a.train[i].id == b.train[i].id);
        CHECK(a.train[i].gold_para == b.train[i].gold_para);
        CHECK(a.train[i].gold_sentences == b.train[i].gold_sentences);
        CHECK(a.train[i].decoy_para == b.train[i].decoy_para);
    }

    // a different seed actually changes the data
    SynthSpec other = spec;
    other.seed = 8;
    const SynthDataset c = synth_generate(other);
    CHECK(a.planted.W_q != c.planted.W_q);
}

TEST_CASE("planted parameters retrieve every gold chain") {
    const SynthDataset ds = synth_generate(small_spec());

    CHECK(synth_hits_at_1(ds, ds.planted, ds.train) == 1.0);
    CHECK(synth_hits_at_1(ds, ds.planted, ds.test) == 1.0);

    // zeroed mixing cannot follow the chain: hop 2 runs on the raw nudge vector
    const double broken = synth_hits_at_1(ds, MixParams::zeros(16), ds.test);
    CHECK(broken < 1.0);

    CHECK_THROWS_AS(synth_hits_at_1(ds, ds.planted, {}), ValidationError);
}

TEST_CASE("emitted queries clear the margin requirement") {
    const SynthDataset ds = synth_generate(small_spec());
    FromFileProvider provider(ds.embeddings);
    const auto masks = synth_masks(ds.spec.hops, SynthMode::Full);

    for (std::size_t k = 0; k < 3; ++k) {
        const SynthQuery& q = ds.train[k];
        const CombinedIndex index =
            build_index(ds.docs[static_cast<std::size_t>(q.doc_index)], provider,
                        IndexRegime::Agnostic);

        QueryState state;
        for (int t = 0; t < ds.spec.hops; ++t)
            state.vectors.push_back(to_double(*ds.embeddings.find(query_unit_key(q.id, t))));
        RunOptions opts;
        opts.keep_scores = true;
        const RetrievalTrace trace =
            run_hops(state, index, ds.planted, masks, nullptr, opts);

        const HopRecord& first = trace.records.front();
        CHECK(first.retrieved_kind == EntryKind::Paragraph);
        CHECK(first.retrieved_para == q.gold_para);
        CHECK(scores_margin(first.scores) >= ds.spec.min_margin);

        const HopRecord& last = trace.records.back();
        CHECK(last.retrieved_para == q.gold_sentences.back().first);
        CHECK(last.retrieved_sent == q.gold_sentences.back().second);
        CHECK(scores_margin(last.scores) >= ds.spec.min_margin);

        // independent check of hop 1 through the scoring kernel
        ScoreWorkspace ws;
        const auto scores = score_all(state.vectors[0], index, EntryKind::Paragraph, ws);
        const std::uint32_t top = argmax_entry(scores).entry;
        CHECK(top == index.paras[static_cast<std::size_t>(q.gold_para)].para_entry);
    }
}

TEST_CASE("training instances mirror the gold chain") {
    const SynthDataset ds = synth_generate(small_spec());

    SUBCASE("full mode") {
        const auto insts = synth_training_instances(ds, ds.train, SynthMode::Full);
        REQUIRE(insts.size() == ds.train.size());
        for (std::size_t k = 0; k < insts.size(); ++k) {
            const auto& inst = insts[k];
            const auto& q = ds.train[k];
            CHECK(inst.query_id == q.id);
            CHECK(inst.hops() == 2);
            CHECK(inst.masks[0] == std::optional<EntryKind>(EntryKind::Paragraph));
            CHECK(inst.masks[1] == std::optional<EntryKind>(EntryKind::Sentence));
            CHECK(inst.positives[0] ==
                  std::vector<std::uint32_t>{inst.entry_of_paragraph(q.gold_para)});
            const auto [hp, hs] = q.gold_sentences[0];
            CHECK(inst.positives[1] ==
                  std::vector<std::uint32_t>{inst.entry_of_sentence(hp, hs)});
            CHECK_NOTHROW(inst.validate());

            // stored f32 vectors come through unchanged
            const VecF* v = ds.embeddings.find(sentence_key(q.doc_id, hp, hs));
            REQUIRE(v != nullptr);
            CHECK(inst.sentences[static_cast<std::size_t>(hp)][static_cast<std::size_t>(hs)] ==
                  to_double(*v));
        }
    }
    SUBCASE("sentence-only mode widens the paragraph label") {
        const auto insts =
            synth_training_instances(ds, {ds.train[0]}, SynthMode::SentenceOnly);
        const auto& inst = insts[0];
        const auto& q = ds.train[0];
        std::vector<std::uint32_t> want;
        for (int j = 0; j < 4; ++j)
            want.push_back(inst.entry_of_sentence(q.gold_para, j));
        CHECK(inst.masks[0] == std::optional<EntryKind>(EntryKind::Sentence));
        CHECK(inst.positives[0] == want);
    }
}

TEST_CASE("the benchmark is learnable from labels alone") {
    SynthSpec spec = small_spec();
    spec.n_docs = 40;
    spec.dim = 32;
    spec.seed = 3;
    const SynthDataset ds = synth_generate(spec);
    const auto insts = synth_training_instances(ds, ds.train, SynthMode::Full);

    TrainConfig cfg;
    cfg.learning_rate = 0.5;
    cfg.steps = 300;
    cfg.momentum = 0.9;
    cfg.include_classification = false;

    Rng init_rng(41);
    const MixParams start = MixParams::random(32, init_rng, 0.1);
    const FitResult fit_out = fit(insts, start, cfg);

    CHECK(fit_out.loss_curve.front() > fit_out.loss_curve.back());

    const double untrained = synth_hits_at_1(ds, start, ds.test);
    const double trained = synth_hits_at_1(ds, fit_out.params, ds.test);
    CHECK(trained >= 0.6);
    CHECK(untrained <= 0.3);
    CHECK(trained > untrained);
}
