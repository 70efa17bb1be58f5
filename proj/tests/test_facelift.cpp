#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "impakt/facelift.hpp"
#include "impakt/grid.hpp"
#include "impakt/impact_model.hpp"
#include "impakt/payoff.hpp"
#include "impakt/rng.hpp"

using namespace impakt;

namespace {

ImpactModel benchmark() {
    return ImpactModel(CoefficientMap::constant(0.2), CoefficientMap::constant(0.1),
                       ModelConstants{10.0, 1.0, 0.0});
}

// Brute-force least concave majorant: at each node take the best chord over
// every bracketing sample pair. Shares chord_value with the production code,
// so agreement is expected to be bitwise, not approximate.
std::vector<double> envelope_by_chord_scan(const std::vector<double>& xs,
                                           const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double best = ys[i];
        for (std::size_t j = 0; j <= i; ++j)
            for (std::size_t k = i; k < n; ++k) {
                if (j == k) continue;
                const double c = chord_value(xs[j], ys[j], xs[k], ys[k], xs[i]);
                if (c > best) best = c;
            }
        out[i] = best;
    }
    return out;
}

}  // namespace

TEST_CASE("concave envelope: hand examples") {
    SUBCASE("absolute value on three nodes flattens to the top chord") {
        std::vector<double> xs{-1.0, 0.0, 1.0};
        std::vector<double> ys{1.0, 0.0, 1.0};
        std::vector<char> vertex;
        const std::vector<double> env = concave_envelope(xs, ys, &vertex);
        CHECK(env[0] == 1.0);
        CHECK(env[1] == 1.0);
        CHECK(env[2] == 1.0);
        CHECK(vertex == std::vector<char>{1, 0, 1});
    }
    SUBCASE("digital step fills the left side with the rising chord") {
        std::vector<double> xs{-1.0, -0.5, 0.0, 0.5, 1.0};
        std::vector<double> ys{0.0, 0.0, 1.0, 1.0, 1.0};
        const std::vector<double> env = concave_envelope(xs, ys);
        CHECK(env[0] == 0.0);
        CHECK(env[1] == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(env[2] == 1.0);
        CHECK(env[3] == 1.0);
        CHECK(env[4] == 1.0);
    }
    SUBCASE("concave data is untouched and every node is a vertex") {
        std::vector<double> xs{0.0, 1.0, 2.0, 3.0};
        std::vector<double> ys{0.0, 1.0, 1.5, 1.6};
        std::vector<char> vertex;
        CHECK(concave_envelope(xs, ys, &vertex) == ys);
        CHECK(vertex == std::vector<char>{1, 1, 1, 1});
    }
    SUBCASE("input validation") {
        CHECK_THROWS_AS(concave_envelope(std::vector<double>{0.0, 0.0},
                                         std::vector<double>{1.0, 2.0}),
                        std::invalid_argument);
        CHECK_THROWS_AS(concave_envelope(std::vector<double>{0.0, 1.0},
                                         std::vector<double>{1.0}),
                        std::invalid_argument);
    }
}

TEST_CASE("concave envelope matches the chord-scan reference on random data") {
    // 200 random piecewise-linear payoffs with up to 25 nodes. The scan takes
    // a max over every bracketing chord and both sides share chord_value, so
    // the scan can never fall below the hull fill (the hull's own vertex pair
    // is in the scan set). It can exceed it only when a mathematically lower
    // chord rounds a few ulps high, which bounds the gap by FP noise.
    std::uint64_t draw = 0;
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 2 + static_cast<std::size_t>(
                                      uniform01(42, 0, draw++) * 23.999);
        std::vector<double> xs(n), ys(n);
        double x = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            x += 0.05 + uniform01(42, 1, draw) * 0.5;
            xs[i] = x;
            ys[i] = -2.0 + 4.0 * uniform01(42, 2, draw);
            ++draw;
        }
        const std::vector<double> fast = concave_envelope(xs, ys);
        const std::vector<double> slow = envelope_by_chord_scan(xs, ys);
        REQUIRE(fast.size() == n);
        for (std::size_t i = 0; i < n; ++i) {
            INFO("rep ", rep, " node ", i);
            REQUIRE(slow[i] >= fast[i]);           // exact one-sided ordering
            REQUIRE(slow[i] - fast[i] <= 1e-14);   // at most chord roundoff
        }
    }
}

TEST_CASE("concave envelope is a majorant, concave, and idempotent") {
    std::uint64_t draw = 1000000;
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 5 + static_cast<std::size_t>(
                                      uniform01(7, 0, draw++) * 40.0);
        std::vector<double> xs(n), ys(n);
        for (std::size_t i = 0; i < n; ++i) {
            xs[i] = static_cast<double>(i) * 0.1;
            ys[i] = std::sin(static_cast<double>(i)) + uniform01(7, 1, draw++);
        }
        const std::vector<double> env = concave_envelope(xs, ys);
        for (std::size_t i = 0; i < n; ++i) REQUIRE(env[i] >= ys[i] - 1e-14);
        // Chord slopes are non-increasing left to right.
        for (std::size_t i = 0; i + 2 < n; ++i) {
            const double s0 = (env[i + 1] - env[i]) / (xs[i + 1] - xs[i]);
            const double s1 = (env[i + 2] - env[i + 1]) / (xs[i + 2] - xs[i + 1]);
            REQUIRE(s0 >= s1 - 1e-11);
        }
        const std::vector<double> env2 = concave_envelope(xs, env);
        for (std::size_t i = 0; i < n; ++i)
            REQUIRE(env2[i] == doctest::Approx(env[i]).epsilon(1e-13));
    }
}

TEST_CASE("model-mode carrier: exact double integral for constant coefficients") {
    const ImpactModel m = benchmark();
    const UniformGrid g(-0.5, 2.5, 61);
    // g2 = 10 constant: double cumulative trapezoid from the left edge gives
    // exactly 5 (x - lo)^2 (trapezoid is exact on linear integrands), and the
    // minus tilt subtracts eps x^2.
    const std::vector<double> s = shift_samples(m, g, 1.0, ShiftSpec::model(0.5));
    for (std::size_t i = 0; i < g.n; ++i) {
        const double x = g.node(i);
        const double expect = 5.0 * (x + 0.5) * (x + 0.5) - 0.5 * x * x;
        CHECK(s[i] == doctest::Approx(expect).epsilon(1e-12));
    }
    const std::vector<double> q =
        shift_samples(m, g, 1.0, ShiftSpec::quadratic(2.0));
    for (std::size_t i = 0; i < g.n; ++i)
        CHECK(q[i] == doctest::Approx(2.0 * g.node(i) * g.node(i)).epsilon(1e-15));
    const std::vector<double> z = shift_samples(m, g, 1.0, ShiftSpec::none());
    for (double v : z) CHECK(v == 0.0);
}

TEST_CASE("face-lift of a call: bridge curvature sits at the reduced cap") {
    const ImpactModel m = benchmark();
    const UniformGrid g(-0.5, 2.5, 301);
    const FaceliftResult r =
        facelift_payoff(m, Payoff::call(1.0), g, 1.0, ShiftSpec::model(0.5));

    CHECK(r.active);
    CHECK(r.curvature_bound == doctest::Approx(10.0).epsilon(1e-14));
    // The lifted payoff follows the carrier across the bridged kink, so its
    // peak curvature is g2 - 2 eps = 9, strictly inside the admissible band.
    CHECK(r.max_curvature == doctest::Approx(9.0).epsilon(1e-9));
    CHECK(r.max_lift > 0.005);
    CHECK(r.max_lift < 0.05);
    // The lift never goes below the raw payoff and is exact on hull vertices.
    for (std::size_t i = 0; i < g.n; ++i) {
        REQUIRE(r.phi_hat[i] >= r.phi[i] - 1e-14);
        if (r.hull_vertex[i]) REQUIRE(r.phi_hat[i] == r.phi[i]);
    }
}

TEST_CASE("face-lift leaves affine payoffs untouched") {
    const ImpactModel m = benchmark();
    const UniformGrid g(-1.0, 2.0, 151);
    for (const ShiftSpec& spec : {ShiftSpec::model(0.5), ShiftSpec::quadratic(1.0),
                                  ShiftSpec::none()}) {
        const FaceliftResult r =
            facelift_payoff(m, Payoff::affine(0.3, 2.0), g, 1.0, spec);
        CHECK(!r.active);
        CHECK(r.max_lift <= 1e-14);
        for (std::size_t i = 0; i < g.n; ++i)
            REQUIRE(r.phi_hat[i] == doctest::Approx(r.phi[i]).epsilon(1e-13));
    }
}

TEST_CASE("face-lift with no carrier degenerates to the plain envelope") {
    const ImpactModel m = benchmark();
    const UniformGrid g(-1.0, 1.0, 9);  // nodes at multiples of 0.25
    const FaceliftResult r =
        facelift_payoff(m, Payoff::digital(0.0), g, 1.0, ShiftSpec::none());
    // Left of the strike the envelope is the chord from (-1, 0) to (0, 1).
    CHECK(r.phi_hat[0] == 0.0);
    CHECK(r.phi_hat[1] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(r.phi_hat[2] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r.phi_hat[3] == doctest::Approx(0.75).epsilon(1e-15));
    for (std::size_t i = 4; i < 9; ++i) CHECK(r.phi_hat[i] == 1.0);
    CHECK(r.max_lift == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("flipping the tilt sign pushes the bridge curvature above the cap") {
    // EpsSign::Plus exists to demonstrate why the inward tilt matters: the
    // lifted data then curves at g2 + 2 eps, outside the admissible band, and
    // strict runs must reject it.
    const ImpactModel m = benchmark();
    const UniformGrid g(-0.5, 2.5, 301);
    const FaceliftResult r = facelift_payoff(
        m, Payoff::call(1.0), g, 1.0, ShiftSpec::model(0.5, ShiftSpec::EpsSign::Plus));
    CHECK(r.max_curvature == doctest::Approx(11.0).epsilon(1e-9));
    CHECK(r.max_curvature > r.curvature_bound);
}

TEST_CASE("carrier magnitude: wider eps lifts less") {
    const ImpactModel m = benchmark();
    const UniformGrid g(-0.5, 2.5, 401);
    const FaceliftResult tight =
        facelift_payoff(m, Payoff::call(1.0), g, 1.0, ShiftSpec::model(1.0));
    const FaceliftResult loose =
        facelift_payoff(m, Payoff::call(1.0), g, 1.0, ShiftSpec::model(0.01));
    // A larger inward tilt means a flatter carrier, hence a wider bridge and a
    // larger lift at the kink.
    CHECK(tight.max_lift > loose.max_lift);
    CHECK(tight.max_curvature < loose.max_curvature);
}

TEST_CASE("butterfly face-lift bridges both convex kinks") {
    const ImpactModel m = benchmark();
    const UniformGrid g(-0.5, 2.5, 601);
    const FaceliftResult r =
        facelift_payoff(m, Payoff::butterfly(0.8, 1.2), g, 1.0, ShiftSpec::model(0.5));
    CHECK(r.active);
    CHECK(r.max_curvature <= 9.0 + 1e-6);
    // The tent apex is a concave kink and survives as a hull vertex.
    const std::size_t apex = g.snap_index(1.0, 1e-12);
    CHECK(r.phi_hat[apex] == r.phi[apex]);
}
