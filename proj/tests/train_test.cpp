#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <unistd.h>

#include "doctest.h"
#include "hopmix/errors.hpp"
#include "hopmix/index.hpp"
#include "hopmix/train.hpp"
#include "oracles.hpp"

using namespace hopmix;

namespace {

std::filesystem::path temp_file(const char* stem) {
    return std::filesystem::temp_directory_path() /
           (std::string(stem) + std::to_string(::getpid()) + ".hckp");
}

bool bitwise_equal(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) return false;
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

bool params_bitwise_equal(const MixParams& a, const MixParams& b) {
    return a.dim == b.dim && bitwise_equal(a.W_q, b.W_q) && bitwise_equal(a.v, b.v) &&
           bitwise_equal(a.u, b.u) && bitwise_equal(a.W_c, b.W_c);
}

// Components are quarters, so sums, means of <= 2 sentences and dot products
// stay exactly representable in both f32 and f64.
VecF exact_vecf(Rng& rng, int dim) {
    VecF v(static_cast<std::size_t>(dim));
    for (float& x : v)
        x = static_cast<float>(static_cast<double>(rng.below(9)) - 4.0) / 4.0f;
    return v;
}

// Two hops over one paragraph; the two instances agree on everything except
// the second hop's positive, so no parameter setting satisfies both.
std::vector<TrainingInstance> conflicting_pair() {
    TrainingInstance a;
    a.query_id = "a";
    a.sentences = {{Vec{1.0, 0.0}, Vec{0.0, 1.0}}};
    a.query_init = {Vec{1.0, 0.25}, Vec{0.0, 0.0}};
    a.masks = {EntryKind::Sentence, EntryKind::Sentence};
    a.positives = {{1}, {1}};
    TrainingInstance b = a;
    b.query_id = "b";
    b.positives = {{1}, {2}};
    return {a, b};
}

}  // namespace

TEST_CASE("training instance validation") {
    TrainingInstance inst;
    inst.sentences = {{Vec{1.0, 0.0}}};
    inst.query_init = {Vec{1.0, 0.0}};
    inst.masks = {std::nullopt};
    inst.positives = {{1}};
    CHECK_NOTHROW(inst.validate());
    CHECK(inst.n_entries() == 2);
    CHECK(inst.entry_of_paragraph(0) == 0);
    CHECK(inst.entry_of_sentence(0, 0) == 1);
    CHECK(inst.entry_at(1).kind == EntryKind::Sentence);

    SUBCASE("no paragraphs") {
        inst.sentences.clear();
        CHECK_THROWS_AS(inst.validate(), ValidationError);
    }
    SUBCASE("empty paragraph") {
        inst.sentences = {{}};
        CHECK_THROWS_AS(inst.validate(), ValidationError);
    }
    SUBCASE("no hops") {
        inst.query_init.clear();
        inst.masks.clear();
        inst.positives.clear();
        CHECK_THROWS_AS(inst.validate(), ValidationError);
    }
    SUBCASE("mask count mismatch") {
        inst.masks.push_back(std::nullopt);
        CHECK_THROWS_AS(inst.validate(), ValidationError);
    }
    SUBCASE("positive out of range") {
        inst.positives = {{2}};
        CHECK_THROWS_AS(inst.validate(), ValidationError);
    }
    SUBCASE("gold class out of range") {
        inst.gold_class = 4;
        CHECK_THROWS_AS(inst.validate(), ValidationError);
    }
}

TEST_CASE("step loss examples") {
    SUBCASE("zero query makes every entry equally likely") {
        Rng rng(5);
        const auto fx = oracles::random_index(rng, 3, 3, 4, IndexRegime::Agnostic);
        const double loss = step_loss(Vec(4, 0.0), fx.index, {0});
        CHECK(loss == doctest::Approx(std::log(static_cast<double>(fx.index.size())))
                          .epsilon(1e-9));
    }
    SUBCASE("scores 2, 1, 0 with the top entry gold") {
        const auto doc = oracles::make_doc("d", {2});
        oracles::TableProvider provider(2, {{{2.0f, 0.0f}, {1.0f, 0.0f}}});
        provider.set_paragraph(0, {0.0f, 0.0f});
        const auto index = build_index(doc, provider, IndexRegime::Agnostic);
        // entries: paragraph 0.0, sentences 2.0 and 1.0 under q = e_x
        const double loss = step_loss(Vec{1.0, 0.0}, index, {1});
        CHECK(loss == doctest::Approx(0.40761).epsilon(1e-4));
        CHECK(loss ==
              doctest::Approx(std::log(1.0 + std::exp(-1.0) + std::exp(-2.0)))
                  .epsilon(1e-12));
    }
    SUBCASE("marginal mass over all entries is free") {
        Rng rng(7);
        const auto fx = oracles::random_index(rng, 2, 2, 3, IndexRegime::Agnostic);
        std::vector<std::uint32_t> all;
        for (std::uint32_t e = 0; e < fx.index.size(); ++e) all.push_back(e);
        CHECK(step_loss(oracles::random_vec(rng, 3), fx.index, all,
                        MultiPositiveRule::MarginalLog) ==
              doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("a dominant gold entry drives the loss to zero") {
        const auto doc = oracles::make_doc("d", {2});
        oracles::TableProvider provider(2, {{{1.0f, 0.0f}, {0.0f, 1.0f}}});
        const auto index = build_index(doc, provider, IndexRegime::Agnostic);
        CHECK(step_loss(Vec{200.0, 0.0}, index, {1}) ==
              doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("duplicate positives collapse") {
        Rng rng(9);
        const auto fx = oracles::random_index(rng, 2, 3, 4, IndexRegime::Agnostic);
        const Vec q = oracles::random_vec(rng, 4);
        CHECK(step_loss(q, fx.index, {1, 1, 1}, MultiPositiveRule::SumCE) ==
              doctest::Approx(step_loss(q, fx.index, {1}, MultiPositiveRule::SumCE))
                  .epsilon(1e-12));
    }
    SUBCASE("rejects bad positives") {
        Rng rng(11);
        const auto fx = oracles::random_index(rng, 2, 2, 3, IndexRegime::Agnostic);
        CHECK_THROWS_AS(step_loss(Vec(3, 0.0), fx.index, {}), ValidationError);
        CHECK_THROWS_AS(step_loss(Vec(3, 0.0), fx.index, {99}), ValidationError);
    }
}

TEST_CASE("step loss agrees with the naive oracle under both rules") {
    Rng rng(13);
    for (int rep = 0; rep < 40; ++rep) {
        const auto regime = rep % 2 == 0 ? IndexRegime::Agnostic
                                         : IndexRegime::QueryDependentDeferred;
        const auto fx = oracles::random_index(rng, 2 + rep % 3, 3, 4, regime);
        const Vec q = oracles::random_vec(rng, 4);
        std::vector<std::uint32_t> pos{
            static_cast<std::uint32_t>(rng.below(fx.index.size()))};
        if (rep % 3 == 0)
            pos.push_back(static_cast<std::uint32_t>(rng.below(fx.index.size())));
        for (const auto rule :
             {MultiPositiveRule::MarginalLog, MultiPositiveRule::SumCE}) {
            CHECK(step_loss(q, fx.index, pos, rule) ==
                  doctest::Approx(oracles::naive_step_loss(q, fx.index, pos, rule))
                      .epsilon(1e-9));
        }
        CHECK(step_loss(q, fx.index, pos) >= -1e-12);
    }
}

TEST_CASE("single unmasked hop reduces the total to a step loss") {
    Rng rng(17);
    for (int rep = 0; rep < 10; ++rep) {
        const int dim = 4;
        std::vector<std::vector<VecF>> vecs{{exact_vecf(rng, dim), exact_vecf(rng, dim)},
                                            {exact_vecf(rng, dim)}};
        const auto doc = oracles::make_doc("d", {2, 1});
        oracles::TableProvider provider(dim, vecs);
        const auto index = build_index(doc, provider, IndexRegime::Agnostic);

        TrainingInstance inst;
        inst.query_id = "one-hop";
        for (const auto& row : vecs) {
            std::vector<Vec> drow;
            for (const auto& v : row) drow.push_back(to_double(v));
            inst.sentences.push_back(std::move(drow));
        }
        Vec q(static_cast<std::size_t>(dim));
        for (double& x : q) x = (static_cast<double>(rng.below(9)) - 4.0) / 4.0;
        inst.query_init = {q};
        inst.masks = {std::nullopt};
        inst.positives = {{static_cast<std::uint32_t>(rng.below(index.size()))}};

        const auto params = MixParams::random(static_cast<std::size_t>(dim), rng, 0.1);
        CHECK(total_loss(inst, params, {}) ==
              doctest::Approx(step_loss(q, index, inst.positives[0]))
                  .epsilon(1e-12));
    }
}

TEST_CASE("zero mixing weights decouple the hops") {
    Rng rng(19);
    auto inst = oracles::random_instance(rng, 5, 3, 3, 2, IndexRegime::Agnostic,
                                         /*with_class=*/false, /*masked_hops=*/false);
    const auto params = MixParams::zeros(5);
    const double joint = total_loss(inst, params, {});

    double separate = 0.0;
    for (std::size_t t = 0; t < 2; ++t) {
        TrainingInstance one = inst;
        one.query_init = {inst.query_init[t]};
        one.masks = {inst.masks[t]};
        one.positives = {inst.positives[t]};
        separate += total_loss(one, params, {});
    }
    CHECK(joint == doctest::Approx(separate).epsilon(1e-12));
}

TEST_CASE("total loss matches the scalar reference") {
    Rng rng(23);
    int rep = 0;
    for (const auto regime :
         {IndexRegime::Agnostic, IndexRegime::QueryDependentDeferred}) {
        for (const bool masked : {false, true}) {
            for (const bool with_class : {false, true}) {
                for (int i = 0; i < 4; ++i, ++rep) {
                    const int dim = 3 + rep % 4;
                    const auto inst = oracles::random_instance(
                        rng, dim, 2 + rep % 3, 3, 2, regime, with_class, masked);
                    const auto params =
                        MixParams::random(static_cast<std::size_t>(dim), rng, 0.3);
                    TrainConfig cfg;
                    const double got = total_loss(inst, params, cfg);
                    const double want = oracles::naive_total_loss(inst, params, cfg);
                    CHECK(got == doctest::Approx(want).epsilon(1e-9));
                }
            }
        }
    }
}

TEST_CASE("hops without positives contribute no loss") {
    Rng rng(29);
    auto inst = oracles::random_instance(rng, 4, 3, 3, 2, IndexRegime::Agnostic,
                                         false, false);
    inst.positives[0].clear();  // first hop unsupervised
    const auto params = MixParams::random(4, rng, 0.3);
    TrainConfig cfg;
    CHECK(total_loss(inst, params, cfg) ==
          doctest::Approx(oracles::naive_total_loss(inst, params, cfg))
              .epsilon(1e-9));
}

TEST_CASE("forward rejects positives that the mask excludes") {
    TrainingInstance inst;
    inst.sentences = {{Vec{1.0, 0.0}, Vec{0.0, 1.0}}};
    inst.query_init = {Vec{1.0, 0.0}};
    inst.masks = {EntryKind::Paragraph};
    inst.positives = {{1}};  // a sentence entry
    CHECK_THROWS_WITH_AS(forward(inst, MixParams::zeros(2), {}),
                         doctest::Contains("masked out"), ValidationError);
}

TEST_CASE("forward records retrieval margins") {
    TrainingInstance inst;
    inst.sentences = {{Vec{1.0, 0.0}, Vec{0.0, 1.0}}};
    inst.query_init = {Vec{2.0, 0.0}};
    inst.masks = {std::nullopt};
    inst.positives = {{1}};
    const auto tape = forward(inst, MixParams::zeros(2), {});
    // scores: paragraph 1.0, sentences 2.0 and 0.0
    CHECK(tape.hops[0].margin == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(min_retrieval_margin(tape) == doctest::Approx(1.0).epsilon(1e-12));

    inst.masks = {EntryKind::Paragraph};
    inst.positives = {{0}};
    const auto single = forward(inst, MixParams::zeros(2), {});
    CHECK(std::isinf(min_retrieval_margin(single)));
}

TEST_CASE("analytic gradients pass finite-difference checks") {
    Rng rng(31);
    int accepted = 0;
    for (int attempt = 0; attempt < 60 && accepted < 8; ++attempt) {
        const auto regime = attempt % 2 == 0 ? IndexRegime::Agnostic
                                             : IndexRegime::QueryDependentDeferred;
        const int dim = 3 + attempt % 4;
        const auto inst = oracles::random_instance(rng, dim, 2 + attempt % 2, 3, 2,
                                                   regime, attempt % 3 == 0,
                                                   attempt % 2 == 1);
        const auto params = MixParams::random(static_cast<std::size_t>(dim), rng, 0.3);
        TrainConfig cfg;
        if (min_retrieval_margin(forward(inst, params, cfg)) < 1e-2)
            continue;  // finite differences near an argmax flip are meaningless
        const auto res = grad_check(inst, params, cfg);
        CHECK(res.max_rel_error < 1e-4);
        CHECK(res.params_checked > 0);
        ++accepted;
    }
    CHECK(accepted == 8);
}

TEST_CASE("gradient checks cover query and sentence inputs when flagged") {
    Rng rng(37);
    int accepted = 0;
    for (int attempt = 0; attempt < 40 && accepted < 3; ++attempt) {
        const auto inst = oracles::random_instance(rng, 4, 2, 3, 2,
                                                   IndexRegime::Agnostic, false,
                                                   false);
        const auto params = MixParams::random(4, rng, 0.3);
        TrainConfig cfg;
        cfg.trainable.query_vecs = true;
        cfg.trainable.sentence_vecs = true;
        if (min_retrieval_margin(forward(inst, params, cfg)) < 1e-2) continue;
        const auto base = grad_check(inst, params, cfg);
        CHECK(base.max_rel_error < 1e-4);

        cfg.trainable.mix_params = false;
        const auto inputs_only = grad_check(inst, params, cfg);
        CHECK(inputs_only.max_rel_error < 1e-4);
        CHECK(inputs_only.params_checked < base.params_checked);
        ++accepted;
    }
    CHECK(accepted == 3);
}

TEST_CASE("zero W_q kills the attention-selector gradient") {
    Rng rng(41);
    const auto inst = oracles::random_instance(rng, 4, 3, 3, 2,
                                               IndexRegime::Agnostic, false, false);
    auto params = MixParams::random(4, rng, 0.3);
    params.W_q.assign(params.W_q.size(), 0.0);
    TrainConfig cfg;
    const auto tape = forward(inst, params, cfg);
    const auto grads = backward(inst, params, tape, cfg);
    // every k vector is zero, so v.k is constant in v
    for (double g : grads.d_v) CHECK(g == 0.0);
}

TEST_CASE("fit") {
    const auto dataset = conflicting_pair();
    Rng rng(43);
    const auto init = MixParams::random(2, rng, 0.2);

    SUBCASE("zero learning rate leaves parameters bit-identical") {
        TrainConfig cfg;
        cfg.learning_rate = 0.0;
        cfg.steps = 5;
        const auto res = fit(dataset, init, cfg);
        CHECK(params_bitwise_equal(res.params, init));
        REQUIRE(res.loss_curve.size() == 5);
        for (double l : res.loss_curve) CHECK(l == res.loss_curve[0]);
    }
    SUBCASE("the curve records the mean loss before each update") {
        TrainConfig cfg;
        cfg.learning_rate = 0.2;
        cfg.steps = 3;
        const auto res = fit(dataset, init, cfg);
        double mean0 = 0.0;
        for (const auto& inst : dataset) mean0 += total_loss(inst, init, cfg);
        mean0 /= static_cast<double>(dataset.size());
        CHECK(res.loss_curve[0] == doctest::Approx(mean0).epsilon(1e-12));
    }
    SUBCASE("small steps do not increase the loss") {
        TrainConfig cfg;
        cfg.learning_rate = 0.01;
        cfg.steps = 60;
        const auto res = fit(dataset, init, cfg);
        CHECK(res.loss_curve.back() <= res.loss_curve.front() + 1e-9);
    }
    SUBCASE("identical runs are bit-reproducible") {
        TrainConfig cfg;
        cfg.learning_rate = 0.3;
        cfg.steps = 20;
        cfg.momentum = 0.9;
        const auto a = fit(dataset, init, cfg);
        const auto b = fit(dataset, init, cfg);
        CHECK(params_bitwise_equal(a.params, b.params));
        REQUIRE(a.loss_curve.size() == b.loss_curve.size());
        for (std::size_t i = 0; i < a.loss_curve.size(); ++i) {
            CHECK(std::memcmp(&a.loss_curve[i], &b.loss_curve[i], sizeof(double)) ==
                  0);
        }
    }
    SUBCASE("momentum takes a different trajectory than plain descent") {
        TrainConfig plain;
        plain.learning_rate = 0.1;
        plain.steps = 10;
        TrainConfig heavy = plain;
        heavy.momentum = 0.9;
        const auto a = fit(dataset, init, plain);
        const auto b = fit(dataset, init, heavy);
        CHECK(!params_bitwise_equal(a.params, b.params));
    }
    SUBCASE("an absurd learning rate diverges loudly") {
        // A third hop squares the parameter scale inside the score path, so one
        // oversized step is enough to push the next loss out of double range.
        TrainingInstance deep = dataset[0];
        deep.query_init.push_back(Vec{0.0, 0.0});
        deep.masks.push_back(EntryKind::Sentence);
        deep.positives.push_back({2});
        TrainConfig cfg;
        cfg.learning_rate = 1e200;
        cfg.steps = 20;
        CHECK_THROWS_WITH_AS(fit({deep}, init, cfg), doctest::Contains("diverged"),
                             TrainingError);
    }
    SUBCASE("configuration errors") {
        TrainConfig cfg;
        cfg.learning_rate = -1.0;
        CHECK_THROWS_AS(fit(dataset, init, cfg), ValidationError);
        cfg.learning_rate = 0.1;
        cfg.steps = -1;
        CHECK_THROWS_AS(fit(dataset, init, cfg), ValidationError);
        CHECK_THROWS_AS(fit({}, init, TrainConfig{}), ValidationError);
    }
}

TEST_CASE("checkpoint io") {
    Rng rng(47);
    const auto params = MixParams::random(5, rng, 0.7);
    const auto path = temp_file("ckpt_");
    save_checkpoint(params, path.string());

    SUBCASE("round-trip is bit-exact") {
        const auto loaded = load_checkpoint(path.string());
        CHECK(params_bitwise_equal(loaded, params));
    }
    SUBCASE("bad magic") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.write("NOPE", 4);
        f.close();
        CHECK_THROWS_AS(load_checkpoint(path.string()), FormatError);
    }
    SUBCASE("bad version") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(4);
        const std::uint32_t v = 9;
        f.write(reinterpret_cast<const char*>(&v), 4);
        f.close();
        CHECK_THROWS_AS(load_checkpoint(path.string()), FormatError);
    }
    SUBCASE("unexpected tensor name") {
        // first tensor name starts right after the 16-byte header + u32 length
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(20);
        f.write("X", 1);
        f.close();
        CHECK_THROWS_WITH_AS(load_checkpoint(path.string()),
                             doctest::Contains("X_q"), FormatError);
    }
    SUBCASE("truncation") {
        std::filesystem::resize_file(path, std::filesystem::file_size(path) - 4);
        CHECK_THROWS_AS(load_checkpoint(path.string()), IoError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_checkpoint(path.string() + ".gone"), IoError);
    }
    std::filesystem::remove(path);
}
