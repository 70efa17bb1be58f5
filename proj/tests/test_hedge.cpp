#include <doctest.h>

#include <cmath>

#include "impakt/errors.hpp"
#include "impakt/facelift.hpp"
#include "impakt/hedge_engine.hpp"
#include "impakt/hjb_solver.hpp"
#include "impakt/impact_model.hpp"
#include "impakt/payoff.hpp"

using namespace impakt;

namespace {

ImpactModel benchmark(double eps_margin = 0.5) {
    return ImpactModel(CoefficientMap::constant(0.2), CoefficientMap::constant(0.1),
                       ModelConstants{10.0, 1.0, eps_margin});
}

ValueSurface affine_surface() {
    const ImpactModel m = benchmark();
    const UniformGrid g(-2.0, 4.0, 121);
    const FaceliftResult lift =
        facelift_payoff(m, Payoff::affine(0.3, 2.0), g, 1.0, ShiftSpec::model(0.5));
    return solve_hjb(m, lift, SolverGrid{g, 0.0, 1.0, 4096, 64});
}

ValueSurface call_surface() {
    const ImpactModel m = benchmark();
    const UniformGrid g(-0.5, 2.5, 201);
    const FaceliftResult lift =
        facelift_payoff(m, Payoff::call(1.0), g, 1.0, ShiftSpec::model(0.5));
    return solve_hjb(m, lift, SolverGrid{g, 0.0, 1.0, 20480, 64});
}

}  // namespace

TEST_CASE("replicating an affine claim is exact path by path") {
    const ValueSurface s = affine_surface();
    SimConfig cfg;
    cfg.paths = 1000;
    cfg.steps = 256;
    cfg.seed = 11;
    cfg.x0 = 1.0;
    const HedgeResult r = simulate_optimal(s, cfg);

    CHECK(r.summary.excluded == 0);
    CHECK(r.summary.v0 == doctest::Approx(2.3).epsilon(1e-10));
    // The hedge ratio is the constant slope and the policy is costless, so the
    // book replicates the payoff to accumulated roundoff on every path.
    CHECK(r.summary.mean_abs_error <= 1e-10);
    CHECK(r.summary.rms_error <= 1e-10);
    CHECK(r.summary.max_b_resid <= 1e-9);
    CHECK(r.summary.mean_cost <= 1e-12);
    for (const HedgePathRecord& rec : r.records) {
        REQUIRE(std::abs(rec.error) <= 1e-9);
        REQUIRE(rec.v_terminal == doctest::Approx(rec.payoff).epsilon(1e-9));
    }

    const MartingaleReport mart = martingale_check(s, cfg);
    CHECK(!mart.forced);
    CHECK(std::abs(mart.mean_increment) <= 1e-10);
}

TEST_CASE("hedging the lifted call: centered errors, positive cost, sane residuals") {
    const ValueSurface s = call_surface();
    SimConfig cfg;
    cfg.paths = 4000;
    cfg.steps = 128;
    cfg.seed = 5;
    cfg.x0 = 1.0;
    const HedgeResult r = simulate_optimal(s, cfg);

    CHECK(r.summary.paths == 4000);
    CHECK(r.summary.steps == 128);
    CHECK(r.summary.v0 == doctest::Approx(s.v0(1.0)).epsilon(1e-12));
    CHECK(static_cast<double>(r.summary.excluded) <= 0.01 * 4000);
    // Discretization bias is O(dt); at 128 steps it must sit within a few
    // standard errors of zero and the error spread stays small.
    CHECK(r.summary.se_error > 0.0);
    CHECK(std::abs(r.summary.mean_error) <= 5.0 * r.summary.se_error + 2e-3);
    CHECK(r.summary.rms_error < 0.05);
    CHECK(r.summary.rms_b_resid < 0.05);
    // Riding the kink is never free in this model.
    CHECK(r.summary.mean_cost > 1e-4);

    // Record bookkeeping is self-consistent.
    REQUIRE(!r.records.empty());
    for (std::size_t i = 0; i < r.records.size(); i += 97) {
        const HedgePathRecord& rec = r.records[i];
        if (rec.excluded) continue;
        REQUIRE(rec.error == doctest::Approx(rec.v_terminal - rec.payoff).epsilon(1e-12));
        REQUIRE(rec.payoff == doctest::Approx(s.terminal(rec.x_terminal)).epsilon(1e-12));
        REQUIRE(rec.cost >= 0.0);
    }
}

TEST_CASE("antithetic pairing shares the driver with a flipped sign") {
    const ValueSurface s = affine_surface();
    SimConfig cfg;
    cfg.paths = 2;
    cfg.steps = 16;
    cfg.seed = 3;
    cfg.x0 = 1.0;
    const HedgeResult r = simulate_optimal(s, cfg);
    REQUIRE(r.records.size() == 2);
    // Constant volatility: the two members mirror each other around x0.
    CHECK(r.records[0].x_terminal - 1.0 ==
          doctest::Approx(-(r.records[1].x_terminal - 1.0)).epsilon(1e-12));
}

TEST_CASE("martingale probe separates the optimal policy from a forced control") {
    const ValueSurface s = call_surface();
    SimConfig cfg;
    cfg.paths = 4000;
    cfg.steps = 128;
    cfg.seed = 7;
    cfg.x0 = 1.0;

    const MartingaleReport opt = martingale_check(s, cfg);
    CHECK(!opt.forced);
    CHECK(opt.se_increment > 0.0);
    CHECK(std::abs(opt.zscore) <= 4.0);

    const MartingaleReport bad = martingale_check(s, cfg, 0.4);
    CHECK(bad.forced);
    CHECK(bad.control == 0.4);
    // Fixing the volatility at twice the base rate burns running cost the
    // value surface cannot justify: the drift is strongly negative.
    CHECK(bad.mean_increment < 0.0);
    CHECK(bad.zscore < -5.0);
}

TEST_CASE("pointwise primal readback") {
    const PrimalConsistency p = primal_consistency(benchmark(), 0.0, 1.0, 0.25);
    CHECK(p.a == 0.25);
    CHECK(p.gamma_hat == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(p.marginal == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(p.identity_gap <= 1e-12);
}

TEST_CASE("simulation validation and health gates") {
    const ValueSurface s = affine_surface();
    SimConfig cfg;
    cfg.x0 = 1.0;

    SUBCASE("odd path counts break the antithetic layout") {
        cfg.paths = 999;
        CHECK_THROWS_AS(simulate_optimal(s, cfg), ConfigError);
    }
    SUBCASE("zero steps") {
        cfg.steps = 0;
        CHECK_THROWS_AS(simulate_optimal(s, cfg), ConfigError);
    }
    SUBCASE("start point outside the surface grid") {
        cfg.x0 = 25.0;
        CHECK_THROWS_AS(simulate_optimal(s, cfg), ConfigError);
    }
    SUBCASE("forced control must be positive") {
        CHECK_THROWS_AS(martingale_check(s, cfg, -0.1), ConfigError);
        CHECK_THROWS_AS(martingale_check(s, cfg, 0.0), ConfigError);
    }
    SUBCASE("excessive boundary exits are a health error") {
        // A surface on a sliver of space loses nearly every path.
        const ImpactModel m = benchmark();
        const UniformGrid g(0.9, 1.1, 41);
        const FaceliftResult lift =
            facelift_payoff(m, Payoff::affine(0.0, 1.0), g, 1.0, ShiftSpec::model(0.5));
        const ValueSurface tiny = solve_hjb(m, lift, SolverGrid{g, 0.0, 1.0, 4096, 64});
        cfg.paths = 200;
        cfg.steps = 64;
        CHECK_THROWS_AS(simulate_optimal(tiny, cfg), HealthError);
    }
}
