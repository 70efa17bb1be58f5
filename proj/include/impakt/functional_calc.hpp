#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "impakt/impact_model.hpp"
#include "impakt/payoff.hpp"

namespace impakt {

// A path sampled on a discrete time mesh. Functionals treat it as the
// piecewise-constant (cadlag) interpolation of the node values.
struct DiscretePath {
    std::vector<double> times;   // strictly increasing, size steps + 1
    std::vector<double> values;  // size steps + 1

    DiscretePath() = default;
    DiscretePath(std::vector<double> t, std::vector<double> v);
    std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
    double horizon() const { return times.back() - times.front(); }
    // Vertical bump: adds h to every node from `from_index` onward.
    DiscretePath bumped(std::size_t from_index, double h) const;
    // Freezes the path after index k (stopped path).
    DiscretePath stopped(std::size_t k) const;
};

// Plain functional of a whole path.
using PathFn = std::function<double(const DiscretePath&)>;

// Vertical (bump-from-t-onward) derivatives by central differences.
double dupire_vertical(const PathFn& fn, const DiscretePath& path, std::size_t index,
                       double h);
double dupire_second(const PathFn& fn, const DiscretePath& path, std::size_t index,
                     double h);

// First-derivative representation of a payoff functional along a path: a
// density paired with the step weights of the averaging measure plus a point
// mass at the terminal node.
struct PayoffFrechet {
    std::vector<double> step_density;  // size steps: weight of [t_k, t_{k+1})
    double terminal_atom = 0.0;
};

PayoffFrechet payoff_frechet(const Payoff& payoff, const DiscretePath& path);

// Pairing <lambda, bump> for node-sampled bump profiles (left-node convention
// on each step, atom at the terminal node).
double eval_frechet(const PayoffFrechet& lam, std::span<const double> bump);

// Spatial derivative of the running cost by central differences; zero for
// state-independent coefficients.
double cost_dx(const ImpactModel& model, double t, double x, double a, double h);

// Anticipating-weight process along a controlled path: partial sums of the
// payoff density minus the accumulated cost gradient, with the terminal atom
// added on the last node. Controls has one entry per step.
std::vector<double> compute_A(const ImpactModel& model, const DiscretePath& path,
                              std::span<const double> controls, const PayoffFrechet& lam,
                              double fd_step = 1e-6);

// Non-anticipative functional probe: f(k, path) reads the path only up to
// index k (enforced by evaluating on stopped copies).
using FunctionalProbe = std::function<double(std::size_t, const DiscretePath&)>;

struct ItoOptions {
    double fd_step = 1e-5;
    // When true, subtracts the second-order compensator 0.5 f'' (dZ)^2.
    bool with_second_order = false;
    // Optional explicit time compensator ell(t); subtracts ell(t_k) - ell(t_0).
    std::function<double(double)> time_compensator;
};

struct ItoReport {
    std::vector<double> residual;  // K_k, k = 0..steps
    double max_residual = 0.0;     // max_k K_k (signed)
    double max_abs_residual = 0.0;
};

// Discrete functional change-of-variable residual: the functional increment
// minus the accumulated vertical-derivative transport (and the optional
// compensators). For functionals concave in the path value and non-increasing
// in time the residual stays nonpositive up to mesh noise; with the full
// compensators it vanishes at first order.
ItoReport ito_residual(const FunctionalProbe& fn, const DiscretePath& path,
                       const ItoOptions& options = {});

}  // namespace impakt
