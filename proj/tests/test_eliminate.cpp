#include <cmath>

#include "chainfg/blockla.hpp"
#include "chainfg/eliminate.hpp"
#include "chainfg/errors.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace chainfg;
using namespace testsupport;

namespace {

Vec oracle_delta(const ChainFactorGraph& g, const StateVec& states) {
    const auto sys = assemble(g, states);
    return normal_solve_oracle(sys.jacobian, sys.rhs);
}

bool conditionals_bit_equal(const ChainConditional& a, const ChainConditional& b) {
    return a.index == b.index && a.parent == b.parent && bit_equal(a.r_block, b.r_block) &&
           bit_equal(a.t_block, b.t_block) && a.d_block == b.d_block;
}

}  // namespace

TEST_SUITE("eliminate") {

TEST_CASE("build_abar stacks g1 and b1 for the first toy elimination") {
    const auto g = toy_example();
    const auto truth = toy_ground_truth();
    AbarInputs in;
    in.gps = &g.gps.at(1);
    in.between = &g.between.at(1);
    const Mat abar = build_abar(in, 1, Direction::Forward, truth, g.layout);
    REQUIRE(abar.rows == 4);
    REQUIRE(abar.cols == 5);
    // [A11 0; A51 A52] with unit covariances: g block I2 on x1, b blocks
    // (-I2 | +I2); rhs zero at the ground truth.
    CHECK(abar(0, 0) == 1.0);
    CHECK(abar(1, 1) == 1.0);
    CHECK(abar(0, 2) == 0.0);
    CHECK(abar(2, 0) == -1.0);
    CHECK(abar(2, 2) == 1.0);
    CHECK(abar(3, 3) == 1.0);
    for (int r = 0; r < 4; ++r) CHECK(abar(r, 4) == 0.0);
}

TEST_CASE("build_abar row count is tau + gps + binary dims") {
    const auto g = toy_example();
    const auto truth = toy_ground_truth();
    TauFactor tau;
    tau.on_index = 2;
    tau.a_block = Mat(2, 2);
    tau.a_block(0, 0) = 1.0;
    tau.a_block(1, 1) = 1.0;
    tau.rhs = {0.0, 0.0};
    AbarInputs in;
    in.taus.push_back(&tau);
    in.gps = &g.gps.at(2);
    in.between = &g.between.at(2);
    const Mat abar = build_abar(in, 2, Direction::Forward, truth, g.layout);
    CHECK(abar.rows == 2 + 2 + 2);
    CHECK(abar.cols == 5);
}

TEST_CASE("build_abar with a single between factor and no others") {
    const auto g = toy_example();
    AbarInputs in;
    in.between = &g.between.at(2);
    const Mat abar = build_abar(in, 2, Direction::Forward, toy_ground_truth(), g.layout);
    CHECK(abar.rows == 2);
    CHECK(abar.cols == 5);
}

TEST_CASE("build_abar rejects factors that violate the chain") {
    const auto g = toy_example();
    AbarInputs in;
    in.between = &g.between.at(2);  // connects (2,3)
    CHECK_THROWS_AS(build_abar(in, 1, Direction::Forward, toy_ground_truth(), g.layout), ChainViolationError);
}

TEST_CASE("serial elimination of the toy graph") {
    const auto g = toy_example();
    const auto res = eliminate_serial(g, toy_ground_truth());
    CHECK(res.net.mode == EliminationMode::Serial);
    CHECK(res.net.root_index == 4);
    REQUIRE(res.net.conditionals.size() == 4);
    for (int i = 1; i <= 3; ++i) {
        CHECK(res.net.conditionals[i - 1].parent == i + 1);
        CHECK(!res.net.conditionals[i - 1].t_block.empty());
    }
    CHECK(!res.net.conditionals[3].parent.has_value());
    CHECK(fill_in_count(res.net) == 3);

    // Serial trace: [1,2,3,4] with growing tau rows: 4, 6, 8, 8.
    REQUIRE(res.trace.size() == 4);
    const int want_rows[] = {4, 6, 8, 8};
    for (int i = 0; i < 4; ++i) {
        CHECK(res.trace[i].index == i + 1);
        CHECK(res.trace[i].abar_rows == want_rows[i]);
    }
    CHECK(res.trace[3].abar_cols == 2);

    // Noise-free measurements at the ground truth: delta is exactly zero.
    const Vec delta = back_substitute_serial(res.net);
    CHECK(inf_norm(delta) < 1e-14);
}

TEST_CASE("single-keyframe graph gives one root conditional") {
    ChainFactorGraph g;
    g.layout = StateLayout::linear_mode();
    g.n = 1;
    g.gps[1] = GpsFactor{1, 2.0, -1.0, Mat::identity(2)};
    StateVec states(1);
    const auto res = eliminate_serial(g, states);
    REQUIRE(res.net.conditionals.size() == 1);
    CHECK(!res.net.conditionals[0].parent.has_value());
    CHECK(fill_in_count(res.net) == 0);
    const Vec delta = back_substitute_serial(res.net);
    CHECK(delta[0] == doctest::Approx(2.0));
    CHECK(delta[1] == doctest::Approx(-1.0));
}

TEST_CASE("gram identity: stacked serial R reproduces the information matrix") {
    auto rng = make_rng(41);
    for (const auto& layout : {StateLayout::linear_mode(), StateLayout::full_mode()}) {
        RandomChainOptions opt;
        opt.motion_prob = 1.0;  // keep every velocity observable in full mode
        const auto g = random_chain(8, layout, rng, opt);
        const auto states = random_states(8, layout, rng);
        const auto res = eliminate_serial(g, states);
        const auto [r, rhs] = stacked_r(res.net);
        const auto sys = assemble(g, states);
        const Mat rtr = gram(r, r.cols);
        const Mat ata = gram(sys.jacobian, sys.jacobian.cols);
        CHECK(rel_mat_diff(rtr, ata) < 1e-9);
    }
}

TEST_CASE("serial solution matches the normal-equations oracle") {
    auto rng = make_rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + static_cast<int>(uniform(rng, 0, 8));
        const auto g = random_chain(n, StateLayout::linear_mode(), rng);
        const auto states = random_states(n, StateLayout::linear_mode(), rng);
        const auto res = eliminate_serial(g, states);
        const Vec delta = back_substitute_serial(res.net);
        CHECK(max_abs_diff(delta, oracle_delta(g, states)) < 1e-8);
    }
}

TEST_CASE("parallel elimination of the toy: stages {1,4}, {2}, {3}, root x3") {
    const auto g = toy_example();
    const auto res = eliminate_parallel(g, toy_ground_truth());
    CHECK(res.net.mode == EliminationMode::Parallel);
    CHECK(res.net.root_index == 3);
    REQUIRE(res.trace.size() == 4);
    CHECK(res.trace[0].stage == 1);
    CHECK(res.trace[0].index == 1);
    CHECK(res.trace[1].stage == 1);
    CHECK(res.trace[1].index == 4);
    CHECK(res.trace[2].stage == 2);
    CHECK(res.trace[2].index == 2);
    CHECK(res.trace[3].stage == 3);
    CHECK(res.trace[3].index == 3);

    CHECK(res.net.conditionals[0].parent == 2);
    CHECK(res.net.conditionals[1].parent == 3);
    CHECK(res.net.conditionals[3].parent == 3);
    CHECK(!res.net.conditionals[2].parent.has_value());
    CHECK(fill_in_count(res.net) == 3);
}

TEST_CASE("parallel stage count is ceil((n+1)/2) for n in 2..32") {
    auto rng = make_rng(43);
    for (int n = 2; n <= 32; ++n) {
        const auto g = random_chain(n, StateLayout::linear_mode(), rng);
        const auto res = eliminate_parallel(g, random_states(n, StateLayout::linear_mode(), rng));
        int stages = 0;
        for (const auto& t : res.trace) stages = std::max(stages, t.stage);
        CHECK(stages == (n + 1 + 1) / 2);
    }
}

TEST_CASE("n=1 parallel equals serial") {
    ChainFactorGraph g;
    g.layout = StateLayout::linear_mode();
    g.n = 1;
    g.gps[1] = GpsFactor{1, 1.0, 1.0, Mat::identity(2)};
    StateVec states(1);
    const auto rs = eliminate_serial(g, states);
    const auto rp = eliminate_parallel(g, states);
    CHECK(rp.net.root_index == 1);
    CHECK(conditionals_bit_equal(rs.net.conditionals[0], rp.net.conditionals[0]));
}

TEST_CASE("mode equivalence on random graphs") {
    auto rng = make_rng(44);
    for (const auto& layout : {StateLayout::linear_mode(), StateLayout::pose_mode(), StateLayout::full_mode()}) {
        const bool full = layout.vel_dim == 2;
        RandomChainOptions opt;
        if (full) opt.motion_prob = 1.0;  // velocity needs a motion factor nearby
        // Minimum observable size: pose mode needs a between factor for the
        // heading, full mode needs n >= 3 for the velocity/bias block.
        const int n_min = full ? 3 : (layout.has_theta() ? 2 : 1);
        for (int trial = 0; trial < 8; ++trial) {
            const int n = n_min + static_cast<int>(uniform(rng, 0, 13));
            const auto g = random_chain(n, layout, rng, opt);
            const auto states = random_states(n, layout, rng);
            const Vec ds = back_substitute_serial(eliminate_serial(g, states).net);
            const Vec dp = back_substitute_parallel(eliminate_parallel(g, states).net);
            CHECK(max_abs_diff(ds, dp) < 1e-8);
        }
    }
}

TEST_CASE("parallel back substitution solves outward from the root") {
    const auto g = toy_example();
    auto gn = g;
    gn.gps[1].zx = 0.5;  // perturb one measurement so delta is nonzero
    const auto res = eliminate_parallel(gn, toy_ground_truth());
    const Vec dp = back_substitute_parallel(res.net);
    const Vec ds = back_substitute_serial(eliminate_serial(gn, toy_ground_truth()).net);
    CHECK(max_abs_diff(dp, ds) < 1e-12);
}

TEST_CASE("dual-thread execution is bit-identical to single-thread") {
    auto rng = make_rng(45);
    const auto layout = StateLayout::full_mode();
    RandomChainOptions opt;
    opt.motion_prob = 1.0;
    const auto g = random_chain(17, layout, rng, opt);
    const auto states = random_states(17, layout, rng);
    const auto r1 = eliminate_parallel(g, states, ExecPolicy::SingleThread);
    const auto r2 = eliminate_parallel(g, states, ExecPolicy::DualThread);
    REQUIRE(r1.net.conditionals.size() == r2.net.conditionals.size());
    for (std::size_t i = 0; i < r1.net.conditionals.size(); ++i)
        CHECK(conditionals_bit_equal(r1.net.conditionals[i], r2.net.conditionals[i]));
    const Vec d1 = back_substitute_parallel(r1.net, ExecPolicy::SingleThread);
    const Vec d2 = back_substitute_parallel(r1.net, ExecPolicy::DualThread);
    CHECK(d1 == d2);
}

TEST_CASE("max abar rows: parallel never exceeds serial, strictly smaller on full chains") {
    auto rng = make_rng(46);
    auto max_rows = [](const EliminationResult& r) {
        int m = 0;
        for (const auto& t : r.trace) m = std::max(m, t.abar_rows);
        return m;
    };
    for (int n : {2, 3, 4, 8, 16, 32}) {
        RandomChainOptions opt;
        opt.gps_prob = 1.0;
        opt.motion_prob = 1.0;
        // n = 2 stays linear: a two-keyframe full-layout chain has more
        // velocity/bias unknowns than motion equations.
        const auto layout = n >= 3 ? StateLayout::full_mode() : StateLayout::linear_mode();
        const auto g = random_chain(n, layout, rng, opt);
        const auto states = random_states(n, layout, rng);
        const int ms = max_rows(eliminate_serial(g, states));
        const int mp = max_rows(eliminate_parallel(g, states));
        CHECK(mp <= ms);
        if (n >= 4) CHECK(mp < ms);
    }
}

TEST_CASE("fill-in equals n-1 on connected chains in both modes") {
    auto rng = make_rng(47);
    for (int n : {1, 2, 5, 9}) {
        const auto g = random_chain(n, StateLayout::linear_mode(), rng);
        const auto states = random_states(n, StateLayout::linear_mode(), rng);
        CHECK(fill_in_count(eliminate_serial(g, states).net) == n - 1);
        CHECK(fill_in_count(eliminate_parallel(g, states).net) == n - 1);
    }
}

TEST_CASE("gauge-free graph raises an under-constrained error, never a wrong answer") {
    auto g = toy_example();
    g.gps.clear();
    try {
        const auto res = eliminate_serial(g, toy_ground_truth());
        back_substitute_serial(res.net);
        FAIL("expected SingularSystemError");
    } catch (const SingularSystemError& e) {
        CHECK(e.index() >= 1);
    }
}

TEST_CASE("hand-built two-conditional net: delta1 = d1 + d2") {
    ChainBayesNet net;
    net.mode = EliminationMode::Serial;
    net.root_index = 2;
    ChainConditional c1;
    c1.index = 1;
    c1.r_block = Mat::identity(2);
    c1.t_block = Mat(2, 2);
    c1.t_block(0, 0) = -1.0;
    c1.t_block(1, 1) = -1.0;
    c1.d_block = {1.0, 2.0};
    c1.parent = 2;
    ChainConditional c2;
    c2.index = 2;
    c2.r_block = Mat::identity(2);
    c2.d_block = {10.0, 20.0};
    net.conditionals = {c1, c2};

    const Vec delta = back_substitute_serial(net);
    CHECK(delta[0] == doctest::Approx(11.0));
    CHECK(delta[1] == doctest::Approx(22.0));
    CHECK(delta[2] == doctest::Approx(10.0));
    CHECK(delta[3] == doctest::Approx(20.0));
}

TEST_CASE("tau cache holds one factor per separator in serial mode") {
    const auto g = toy_example();
    const auto res = eliminate_serial(g, toy_ground_truth());
    REQUIRE(res.tau_cache.size() == 3);
    for (int key = 2; key <= 4; ++key) {
        REQUIRE(res.tau_cache.count(key) == 1);
        CHECK(res.tau_cache.at(key).size() == 1);
        CHECK(res.tau_cache.at(key).front().on_index == key);
    }
    // tau rows grow: 2, 4, 6.
    CHECK(res.tau_cache.at(2).front().a_block.rows == 2);
    CHECK(res.tau_cache.at(3).front().a_block.rows == 4);
    CHECK(res.tau_cache.at(4).front().a_block.rows == 6);
}

}  // TEST_SUITE
