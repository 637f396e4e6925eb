#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "rexp/data_io.hpp"
#include "rexp/engine.hpp"
#include "rexp/error.hpp"

using rexp::Family;
using rexp::Mode;
using rexp::Scale;

namespace {

const rexp::Dataset& sine() {
    static const rexp::Dataset d = rexp::generate_sinusoid(30, 0.1, 7);
    return d;
}

rexp::REConfig quick(Mode mode, std::size_t rounds) {
    rexp::REConfig c;
    c.mode = mode;
    c.rounds = rounds;
    c.model = {Family::mlp_tanh, Scale::small, {}};
    c.train.epochs = 40;
    c.train.learning_rate = 0.1;
    return c;
}

rexp::MultiverseConfig members(std::vector<rexp::MemberSpec> list,
                               rexp::MemberSource source = rexp::MemberSource::raw) {
    return {std::move(list), source};
}

std::vector<double> mse_series(const rexp::RunResult& r) {
    std::vector<double> out;
    for (const auto& rec : r.records) out.push_back(rec.mse);
    return out;
}

rexp::MultiverseSnapshot snapshot(std::vector<double> aulcs) {
    rexp::MultiverseSnapshot s;
    s.aulcs = aulcs;
    for (std::size_t j = 0; j < aulcs.size(); ++j)
        s.bundles.push_back({"m" + std::to_string(j), rexp::Matrix(2, 1), rexp::Matrix(2, 1), aulcs[j]});
    return s;
}

}  // namespace

TEST_SUITE("engine") {

TEST_CASE("one round re run") {
    const auto r = rexp::run_re(sine(), quick(Mode::re, 1));
    REQUIRE(r.records.size() == 1);
    const auto& rec = r.records[0];
    CHECK(rec.round == 1);
    CHECK(rec.selected == std::vector<std::size_t>{0});
    CHECK(rec.member_aulcs.size() == 1);
    CHECK(rec.member_aulcs[0] == r.baseline.aulc[0]);
    CHECK(rec.loss_curve.size() == 41);
    CHECK(rec.aulc_main == r.final_model.aulc);
    CHECK(r.final_model.spec.input_dim == 1 + rec.expanded_width);
    CHECK(rec.expanded_width == rec.retained_dims[0] + 1);
    CHECK(std::isfinite(rec.mse));
    CHECK_FALSE(r.halted);
}

TEST_CASE("zero-variance features at theta 1 keep one component plus the prediction") {
    auto c = quick(Mode::re, 1);
    c.model.init_scale = 0.0;
    c.aggregator.variance_threshold = 1.0;
    const auto r = rexp::run_re(sine(), c);
    CHECK(r.records[0].expanded_width == 2);
    CHECK(r.records[0].retained_dims == std::vector<std::size_t>{1});
}

TEST_CASE("record count equals rounds and rounds are contiguous") {
    const auto r = rexp::run_re(sine(), quick(Mode::re, 6));
    REQUIRE(r.records.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(r.records[i].round == i + 1);
}

TEST_CASE("mvre with one expanded member reproduces re") {
    const auto c = quick(Mode::re, 5);
    auto mc = c;
    mc.mode = Mode::mvre;
    const auto re = rexp::run_re(sine(), c);
    const auto mv = rexp::run_mvre(sine(), mc, members({{Family::mlp_tanh, Scale::small}},
                                                       rexp::MemberSource::expanded));
    const auto a = mse_series(re), b = mse_series(mv);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
}

TEST_CASE("mvre with one raw member matches re on the first round only") {
    const auto c = quick(Mode::re, 2);
    auto mc = c;
    mc.mode = Mode::mvre;
    const auto re = rexp::run_re(sine(), c);
    const auto mv = rexp::run_mvre(sine(), mc, members({{Family::mlp_tanh, Scale::small}}));
    CHECK(re.records[0].mse == mv.records[0].mse);
}

TEST_CASE("mvre k=3 bookkeeping and fresh member seeds") {
    auto c = quick(Mode::mvre, 3);
    const auto r = rexp::run_mvre(
        sine(), c,
        members({{Family::rbf, Scale::small}, {Family::rbf, Scale::small}, {Family::rbf, Scale::small}}));
    CHECK(r.baseline.aulc.size() == 3);
    for (const auto& rec : r.records) {
        CHECK(rec.member_aulcs.size() == 3);
        CHECK(rec.selected == std::vector<std::size_t>{0, 1, 2});
        CHECK(rec.weights == std::vector<double>(3, 1.0 / 3.0));
        CHECK(rec.retained_dims.size() == 3);
        std::size_t d = 0;
        for (std::size_t m : rec.retained_dims) d += m + 1;
        CHECK(rec.expanded_width == d);
    }
    // rbf centers are a fixed grid, so member heads differ only through per-member seeds
    CHECK(r.records[1].member_aulcs[0] != r.records[1].member_aulcs[1]);
    CHECK(r.records[1].member_aulcs != r.records[2].member_aulcs);
}

TEST_CASE("a sabotaged member gets less than the uniform weight under softmax") {
    auto c = quick(Mode::mvre, 3);
    c.aggregator.weighting = rexp::Weighting::softmax_neg_aulc;
    const auto mv = members({{Family::mlp_tanh, Scale::small}, {Family::mlp_tanh, Scale::small, 10.0}});
    const auto soft = rexp::run_mvre(sine(), c, mv);
    c.aggregator.weighting = rexp::Weighting::uniform;
    const auto flat = rexp::run_mvre(sine(), c, mv);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(flat.records[i].weights[1] == 0.5);
        CHECK(soft.records[i].member_aulcs[1] > soft.records[i].member_aulcs[0]);
        CHECK(soft.records[i].weights[1] < 0.5);
    }
}

TEST_CASE("hmvre keeps per-member retained dims") {
    auto c = quick(Mode::hmvre, 2);
    const auto r =
        rexp::run_hmvre(sine(), c, members({{Family::mlp_tanh, Scale::small}, {Family::rbf, Scale::medium}}));
    for (const auto& rec : r.records) {
        CHECK(rec.retained_dims.size() == 2);
        CHECK(rec.member_aulcs.size() == 2);
    }
}

TEST_CASE("hmvre mlp-tanh small with rff-linear medium completes ten finite rounds") {
    auto c = quick(Mode::hmvre, 10);
    const auto r = rexp::run_hmvre(
        sine(), c, members({{Family::mlp_tanh, Scale::small}, {Family::rff_linear, Scale::medium}}));
    REQUIRE(r.records.size() == 10);
    for (const auto& rec : r.records) CHECK(std::isfinite(rec.mse));
}

TEST_CASE("mode and member invariants are enforced") {
    const auto same = members({{Family::mlp_tanh, Scale::small}, {Family::mlp_tanh, Scale::large}});
    CHECK_THROWS_AS(rexp::run_hmvre(sine(), quick(Mode::hmvre, 1), same), rexp::ContractError);
    const auto mixed = members({{Family::mlp_tanh, Scale::small}, {Family::rbf, Scale::small}});
    CHECK_THROWS_AS(rexp::run_mvre(sine(), quick(Mode::mvre, 1), mixed), rexp::ContractError);
    CHECK_THROWS_AS(rexp::run_mvre(sine(), quick(Mode::re, 1), same), rexp::ContractError);
    CHECK_THROWS_AS(rexp::run_re(sine(), quick(Mode::mvre, 1)), rexp::ContractError);
    CHECK_THROWS_AS(rexp::run_mvre(sine(), quick(Mode::mvre, 1), members({})), rexp::ContractError);
    CHECK_THROWS_AS(rexp::run_re(sine(), quick(Mode::re, 0)), rexp::ContractError);
    CHECK_THROWS_AS((rexp::SelectionPolicy{3, rexp::Criterion::all}.validate(2)), rexp::ContractError);
    CHECK_THROWS_AS((rexp::SelectionPolicy{0, rexp::Criterion::all}.validate(2)), rexp::ContractError);
}

TEST_CASE("select_subset worked examples") {
    const auto s = snapshot({0.5, 0.2, 0.9});
    for (auto crit : {rexp::Criterion::lowest_aulc, rexp::Criterion::all, rexp::Criterion::round_robin})
        for (std::size_t round : {1, 2, 5})
            CHECK(rexp::select_subset(s, {3, crit}, round) == std::vector<std::size_t>{0, 1, 2});

    CHECK(rexp::select_subset(s, {2, rexp::Criterion::lowest_aulc}, 1) == std::vector<std::size_t>{0, 1});

    const std::vector<std::vector<std::size_t>> rr{{0}, {1}, {2}, {0}};
    for (std::size_t round = 1; round <= 4; ++round)
        CHECK(rexp::select_subset(s, {1, rexp::Criterion::round_robin}, round) == rr[round - 1]);

    // wrap-around comes back sorted
    CHECK(rexp::select_subset(s, {2, rexp::Criterion::round_robin}, 2) == std::vector<std::size_t>{0, 2});
    // ties go to the lower index
    CHECK(rexp::select_subset(snapshot({0.3, 0.1, 0.1, 0.1}), {2, rexp::Criterion::lowest_aulc}, 1) ==
          std::vector<std::size_t>{1, 2});
}

TEST_CASE("lowest-aulc selection is invariant to positive rescaling") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        rexp::SeededRng rng(seed);
        std::vector<double> a(2 + seed % 5);
        for (double& v : a) v = std::floor(rng.uniform(0.0, 4.0)) * 0.25;  // ties are common
        for (std::size_t m = 1; m <= a.size(); ++m) {
            const auto base = rexp::select_subset(snapshot(a), {m, rexp::Criterion::lowest_aulc}, 1);
            for (double alpha : {1e-3, 0.7, 3.0, 1e6}) {
                std::vector<double> b = a;
                for (double& v : b) v *= alpha;
                CHECK(rexp::select_subset(snapshot(b), {m, rexp::Criterion::lowest_aulc}, 1) == base);
            }
        }
    }
}

TEST_CASE("sc-hmvre with every member selected equals hmvre") {
    const auto mv = members({{Family::mlp_tanh, Scale::small}, {Family::rff_linear, Scale::small}});
    const auto h = rexp::run_hmvre(sine(), quick(Mode::hmvre, 4), mv);
    const auto s = rexp::run_schmvre(sine(), quick(Mode::sc_hmvre, 4), mv, {2, rexp::Criterion::all});
    const auto a = mse_series(h), b = mse_series(s);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
    CHECK(rexp::summary_csv(h.records) == rexp::summary_csv(s.records));
}

TEST_CASE("sc-hmvre budget one selects a single member each round") {
    const auto mv = members({{Family::mlp_tanh, Scale::small}, {Family::rbf, Scale::small},
                             {Family::rff_linear, Scale::small}});
    const auto r = rexp::run_schmvre(sine(), quick(Mode::sc_hmvre, 3), mv, {1, rexp::Criterion::lowest_aulc});
    for (const auto& rec : r.records) {
        REQUIRE(rec.selected.size() == 1);
        CHECK(rec.retained_dims.size() == 1);
        CHECK(rec.member_aulcs.size() == 3);
        std::size_t best = 0;
        for (std::size_t j = 1; j < 3; ++j)
            if (rec.member_aulcs[j] < rec.member_aulcs[best]) best = j;
        CHECK(rec.selected[0] == best);
    }
}

TEST_CASE("sc-hmvre mixed scales replays identically") {
    auto c = quick(Mode::sc_hmvre, 5);
    c.master_seed = 11;
    c.threads = 2;
    const auto mv = members({{Family::mlp_tanh, Scale::small}, {Family::rbf, Scale::small},
                             {Family::mlp_relu, Scale::large}, {Family::rff_linear, Scale::large}});
    const rexp::SelectionPolicy policy{2, rexp::Criterion::round_robin};
    const auto a = rexp::run_schmvre(sine(), c, mv, policy);
    c.threads = 1;
    const auto b = rexp::run_schmvre(sine(), c, mv, policy);
    CHECK(rexp::summary_csv(a.records) == rexp::summary_csv(b.records));
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(a.records[i].loss_curve == b.records[i].loss_curve);
        std::size_t d = 0;
        for (std::size_t m : a.records[i].retained_dims) d += m + 1;
        CHECK(a.records[i].expanded_width == d);
    }
    CHECK(a.final_model.spec.input_dim == 1 + a.records.back().expanded_width);
}

TEST_CASE("dispatcher routes on mode and observer sees every round in order") {
    std::vector<std::size_t> seen;
    const auto r = rexp::run(sine(), quick(Mode::re, 3), {}, {}, [&](const rexp::RunRecord& rec) {
        seen.push_back(rec.round);
    });
    CHECK(seen == std::vector<std::size_t>{1, 2, 3});
    CHECK(rexp::summary_csv(r.records) == rexp::summary_csv(rexp::run_re(sine(), quick(Mode::re, 3)).records));
}

TEST_CASE("divergent main model is recorded and halts only with stop_on_glitch") {
    auto c = quick(Mode::re, 3);
    c.model = {Family::mlp_relu, Scale::medium, {}};
    c.train.learning_rate = 50.0;
    const auto r = rexp::run_re(sine(), c);
    REQUIRE(r.records.size() == 3);
    CHECK(r.baseline.diverged[0]);
    for (const auto& rec : r.records) {
        CHECK(rec.diverged);
        CHECK(std::isfinite(rec.mse));
    }
    c.stop_on_glitch = true;
    const auto halted = rexp::run_re(sine(), c);
    CHECK(halted.records.size() == 1);
    CHECK(halted.halted);
}

TEST_CASE("holdout evaluates on every fifth row") {
    auto c = quick(Mode::re, 2);
    const auto full = rexp::run_re(sine(), c);
    c.holdout = true;
    const auto held = rexp::run_re(sine(), c);
    CHECK(held.records.size() == 2);
    CHECK(held.records[0].mse != full.records[0].mse);
}

}
