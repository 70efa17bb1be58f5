#pragma once

#include <span>
#include <vector>

#include "impakt/grid.hpp"
#include "impakt/impact_model.hpp"
#include "impakt/payoff.hpp"

namespace impakt {

// Least concave majorant of data sampled at strictly increasing abscissae,
// computed with a monotone-chain upper hull in O(n). Non-vertex nodes are
// filled in with chord_value() between their bracketing hull vertices, so any
// max-over-chords reference produces bit-identical values. If `hull_vertex`
// is non-null it is resized to mark the vertex nodes.
std::vector<double> concave_envelope(std::span<const double> xs,
                                     std::span<const double> ys,
                                     std::vector<char>* hull_vertex = nullptr);

// Curvature carrier used to lift the terminal condition: the payoff minus the
// carrier is concavified, then the carrier is added back. `Model` integrates
// the quadratic cost coefficient at maturity twice and tilts by eps * x^2 so
// the lifted data sits strictly inside the admissible curvature band;
// `Quadratic` is a plain c0 * x^2; `None` reduces to the concave envelope.
struct ShiftSpec {
    enum class Mode { None, Quadratic, Model };
    enum class EpsSign { Minus, Plus, Zero };

    Mode mode = Mode::Model;
    double quadratic_c0 = 0.0;
    double eps = 0.01;
    EpsSign eps_sign = EpsSign::Minus;

    static ShiftSpec none();
    static ShiftSpec quadratic(double c0);
    static ShiftSpec model(double eps, EpsSign sign = EpsSign::Minus);
};

// Carrier samples on the grid nodes. Model mode uses a cumulative trapezoid
// double integral of g2(maturity, x), exact for constant and affine
// coefficients; the carrier is only meaningful up to an affine function,
// which the face-lift is invariant under.
std::vector<double> shift_samples(const ImpactModel& model, const UniformGrid& grid,
                                  double maturity, const ShiftSpec& spec);

struct FaceliftResult {
    UniformGrid grid;
    std::vector<double> phi;      // raw terminal samples
    std::vector<double> phi_hat;  // lifted samples: (phi - shift)^conc + shift
    std::vector<double> shift;
    std::vector<char> hull_vertex;
    double max_lift = 0.0;        // max over nodes of phi_hat - phi
    bool active = false;          // true when max_lift exceeds a 1e-14 floor
    double max_curvature = 0.0;   // max interior centered second difference of phi_hat
    double curvature_bound = 0.0; // min over interior nodes of g2(maturity, x)
};

// Samples the payoff (phi of x_T for terminal payoffs, phi of the average for
// path-average payoffs: the lift acts on the profile function either way),
// subtracts the carrier, concavifies, and adds the carrier back.
FaceliftResult facelift_payoff(const ImpactModel& model, const Payoff& payoff,
                               const UniformGrid& grid, double maturity,
                               const ShiftSpec& spec);

}  // namespace impakt
