#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "impakt/dual_dp.hpp"
#include "impakt/errors.hpp"
#include "impakt/impact_model.hpp"
#include "impakt/payoff.hpp"

using namespace impakt;

namespace {

ImpactModel benchmark() {
    return ImpactModel(CoefficientMap::constant(0.2), CoefficientMap::constant(0.1),
                       ModelConstants{10.0, 1.0, 0.0});
}

}  // namespace

TEST_CASE("control grid construction and refinement") {
    const ControlGrid c = ControlGrid::uniform(2.0, 5);
    CHECK(c.points == std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0});
    CHECK(c.a_max() == 2.0);
    const ControlGrid r = ControlGrid::uniform(2.0, 3).refined_midpoints();
    CHECK(r.points == std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0});
    CHECK_THROWS_AS(ControlGrid::uniform(-1.0, 3), ConfigError);
    CHECK_THROWS_AS(ControlGrid::uniform(2.0, 1), ConfigError);
}

TEST_CASE("chain value on affine data is exact with the base-volatility policy") {
    const ImpactModel m = benchmark();
    const DpGrid g{UniformGrid(-1.0, 2.0, 61), 0.0, 1.0, 16};
    const DpResult r = solve_dp(m, Payoff::affine(0.3, 2.0), g, ControlGrid::uniform(2.0, 5));
    // Any control preserves the affine mean, so the optimum takes the zero-cost
    // control sigma0 and the value collapses to the payoff itself.
    for (double x : {-0.6, 0.0, 0.85, 1.7})
        CHECK(r.value_at(x) == doctest::Approx(0.3 + 2.0 * x).epsilon(1e-12));
    const auto pol = r.policy_layer(0);
    for (std::size_t i = 10; i < 50; ++i) CHECK(pol[i] == 0.2);
    // Terminal policy row is the base volatility by convention.
    CHECK(r.policy_layer(16)[30] == 0.2);
}

TEST_CASE("two-step chain equals continuous-state enumeration") {
    // Binomial branches of the grid-interpolated chain land on grid nodes when
    // dx = a_step * sqrt(dt), so the production solver must reproduce an
    // interpolation-free recursive enumeration exactly (up to roundoff).
    const ImpactModel m = benchmark();
    const double dt = 0.5;
    const double h = std::sqrt(dt);  // branch offset per unit control
    const std::vector<double> ctrl{0.0, 0.2, 0.4};

    const auto phi = [](double x) { return std::max(x - 1.0, 0.0); };
    const auto v1 = [&](double x) {
        double best = -1e300;
        for (double a : ctrl)
            best = std::max(best, 0.5 * (phi(x + a * h) + phi(x - a * h)) -
                                      dt * m.running_cost(0.5, x, a));
        return best;
    };
    const auto v0 = [&](double x) {
        double best = -1e300;
        for (double a : ctrl)
            best = std::max(best, 0.5 * (v1(x + a * h) + v1(x - a * h)) -
                                      dt * m.running_cost(0.0, x, a));
        return best;
    };

    const double step = 0.2 * h;  // one node per smallest nonzero branch
    const DpGrid g{UniformGrid(1.0 - 6.0 * step, 1.0 + 6.0 * step, 13), 0.0, 1.0, 2};
    ControlGrid controls;
    controls.points = ctrl;
    const DpResult r = solve_dp(m, Payoff::call(1.0), g, controls);

    CHECK(r.value_at(1.0) == doctest::Approx(v0(1.0)).epsilon(1e-12));
    // Frozen independently computed value for the root state.
    CHECK(r.value_at(1.0) == doctest::Approx(0.07071067811865472).epsilon(1e-12));
    // Exactly the two outermost nodes per sweep: their zero-cost winner
    // a = sigma0 branches one offset beyond the grid edge. The root at x = 1
    // sits six nodes in, so its two-step query tree never reads those values.
    CHECK(r.off_grid_argmax_events == 4);
    // Root policy: one sure step of the base volatility beats both waiting
    // (a = 0 pays the idle cost) and pushing (a = 0.4 pays the same cost for
    // curvature the call kink cannot use twice).
    CHECK(lerp(g.space, std::vector<double>(r.policy_layer(0).begin(),
                                            r.policy_layer(0).end()),
               1.0) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("enlarging the control set never lowers the value") {
    const ImpactModel m = benchmark();
    const DpGrid g{UniformGrid(-0.5, 2.5, 101), 0.0, 1.0, 64};
    const DpResult coarse =
        solve_dp(m, Payoff::call(1.0), g, ControlGrid::uniform(2.0, 5));
    const DpResult fine =
        solve_dp(m, Payoff::call(1.0), g, ControlGrid::uniform(2.0, 9));
    for (std::size_t i = 0; i < g.space.n; ++i) {
        REQUIRE(fine.layer(0)[i] >= coarse.layer(0)[i] - 1e-13);
    }
    // At the kink the midpoint controls genuinely help.
    CHECK(fine.value_at(1.0) > coarse.value_at(1.0));
}

TEST_CASE("off-grid branches are counted when the winner steps outside") {
    const ImpactModel m = benchmark();
    const DpGrid g{UniformGrid(0.5, 1.5, 21), 0.0, 1.0, 8};
    const DpResult r = solve_dp(m, Payoff::call(1.0), g, ControlGrid::uniform(2.0, 5));
    CHECK(r.off_grid_argmax_events > 0);
}

TEST_CASE("composition probe: exact at the terminal split, slack elsewhere") {
    const ImpactModel m = benchmark();
    const DpGrid g{UniformGrid(-0.5, 2.5, 101), 0.0, 1.0, 128};
    const ControlGrid ctrl = ControlGrid::uniform(2.5, 9);

    SUBCASE("split at maturity reproduces the direct solve bitwise") {
        const DppReport rep = check_dpp(m, Payoff::call(1.0), g, ctrl, 1.0, 1.0);
        CHECK(rep.residual == 0.0);
        CHECK(rep.v_composed == rep.v_direct);
    }
    SUBCASE("interior splits re-optimize the tail, so the residual is one-sided") {
        for (double ts : {0.25, 0.5, 0.75}) {
            const DppReport rep = check_dpp(m, Payoff::call(1.0), g, ctrl, ts, 1.0);
            CHECK(rep.residual >= -1e-12);
            CHECK(rep.residual < 0.05);
        }
        // At the kink the midpoint refinement strictly improves the tail.
        const DppReport rep = check_dpp(m, Payoff::call(1.0), g, ctrl, 0.5, 1.0);
        CHECK(rep.residual > 0.0);
    }
    SUBCASE("affine data leaves no slack to recover") {
        const DppReport rep = check_dpp(m, Payoff::affine(0.3, 2.0), g, ctrl, 0.5, 1.0);
        CHECK(std::abs(rep.residual) <= 1e-12);
    }
    SUBCASE("split off the step lattice is rejected") {
        CHECK_THROWS_AS(check_dpp(m, Payoff::call(1.0), g, ctrl, 0.3001, 1.0),
                        ConfigError);
    }
}

TEST_CASE("path-average chain with a terminal point mass matches the plain chain") {
    const ImpactModel m = benchmark();
    const DpGrid g{UniformGrid(-0.5, 2.5, 61), 0.0, 1.0, 32};
    const ControlGrid ctrl = ControlGrid::uniform(2.0, 5);
    const UniformGrid avg(-0.5, 2.5, 31);  // m = 0 sits on a node

    const AsianDpResult asian =
        solve_dp_asian(m, Payoff::asian_call(1.0, AveragingMeasure::delta_t()), g, avg, ctrl);
    const DpResult plain = solve_dp(m, Payoff::call(1.0), g, ctrl);
    // With all averaging mass at maturity the accumulated average never moves,
    // and the m = 0 slice is the plain terminal problem.
    for (double x : {-0.3, 0.2, 1.0, 1.9, 2.4})
        CHECK(asian.value_at(x, 0.0) == doctest::Approx(plain.value_at(x)).epsilon(1e-12));
    CHECK(asian.average_clip_events == 0);
}

TEST_CASE("uniformly averaged linear payoff prices at par") {
    // phi(average) = average with uniform weight: every control keeps the
    // chain a martingale and the left-node average accumulates mean x0, so the
    // value is x0 exactly and the optimal control is the free one.
    const ImpactModel m = benchmark();
    const DpGrid g{UniformGrid(-1.0, 3.0, 81), 0.0, 1.0, 16};
    const UniformGrid avg(-1.5, 3.5, 41);
    const AsianDpResult r = solve_dp_asian(
        m, Payoff::asian_linear(AveragingMeasure::uniform()), g, avg, ControlGrid::uniform(1.5, 4));
    for (double x : {0.0, 0.5, 1.0, 1.75})
        CHECK(r.value_at(x, 0.0) == doctest::Approx(x).epsilon(1e-11));
    // Backward sweeps update every (x, m) lattice point, so edge nodes with
    // m + x * mass beyond the average grid clip no matter how wide it is. The
    // margin avg_hi - x_hi * total_mass = 0.5 keeps that boundary band out of
    // reach of any query tree rooted at m = 0, which the par prices witness.
    CHECK(r.average_clip_events > 0);
}

TEST_CASE("average-grid clipping is detected and counted") {
    const ImpactModel m = benchmark();
    const DpGrid g{UniformGrid(-0.5, 2.5, 31), 0.0, 1.0, 16};
    const UniformGrid avg(-0.05, 0.05, 5);  // far too narrow for x ~ 1
    const AsianDpResult r = solve_dp_asian(
        m, Payoff::asian_call(1.0, AveragingMeasure::uniform()), g, avg,
        ControlGrid::uniform(1.0, 3));
    CHECK(r.average_clip_events > 0);
}

TEST_CASE("kind mismatches are rejected") {
    const ImpactModel m = benchmark();
    const DpGrid g{UniformGrid(-0.5, 2.5, 31), 0.0, 1.0, 8};
    const UniformGrid avg(-0.5, 2.5, 11);
    const ControlGrid ctrl = ControlGrid::uniform(1.0, 3);
    CHECK_THROWS_AS(
        solve_dp(m, Payoff::asian_call(1.0, AveragingMeasure::uniform()), g, ctrl),
        ConfigError);
    CHECK_THROWS_AS(solve_dp_asian(m, Payoff::call(1.0), g, avg, ctrl), ConfigError);
}
