#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "impakt/grid.hpp"
#include "impakt/impact_model.hpp"
#include "impakt/payoff.hpp"

namespace impakt {

// Discrete control set for the chain: candidate volatilities a >= 0. Every
// maximization also tries the zero-cost control sigma0(t, x) exactly, so
// affine data is reproduced without discretization error.
struct ControlGrid {
    std::vector<double> points;

    static ControlGrid uniform(double a_max, std::size_t count);
    // Inserts the midpoint of each consecutive pair (2n - 1 points).
    ControlGrid refined_midpoints() const;
    double a_max() const { return points.empty() ? 0.0 : points.back(); }
};

struct DpGrid {
    UniformGrid space;
    double t0 = 0.0;
    double maturity = 1.0;
    std::size_t steps = 1;

    double dt() const { return (maturity - t0) / static_cast<double>(steps); }
    double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt(); }
};

// Value of the binomial-chain control problem: at each step the state moves to
// x +/- a sqrt(dt) with equal probability and pays the running cost of a for
// dt; values off the grid come from linear extrapolation of the edge cell.
struct DpResult {
    DpGrid grid;
    ControlGrid controls;
    std::vector<double> values;  // (steps + 1) x n, layer k at time t0 + k dt
    std::vector<double> policy;  // argmax control per node; terminal row = sigma0
    // Node updates whose winning control evaluated a branch outside the grid.
    std::size_t off_grid_argmax_events = 0;

    std::span<const double> layer(std::size_t k) const;
    std::span<const double> policy_layer(std::size_t k) const;
    double value_at(double x) const;  // t0 layer, linear interpolation
};

DpResult solve_dp(const ImpactModel& model, const Payoff& payoff, const DpGrid& grid,
                  const ControlGrid& controls);

// As solve_dp, but from explicit terminal node values (used for composing
// sub-horizon solves).
DpResult solve_dp_from_terminal(const ImpactModel& model, std::span<const double> terminal,
                                const DpGrid& grid, const ControlGrid& controls);

// Path-average payoffs: the chain state carries the accumulated average m,
// advanced by the left-node rule m' = m + x * mu([t_k, t_{k+1})). Values are
// bilinear in (x, m); m' beyond the average grid is clipped and counted.
struct AsianDpResult {
    DpGrid grid;
    UniformGrid average;
    ControlGrid controls;
    std::vector<double> v0;  // t0 layer, n x m row-major (x outer, m inner)
    std::size_t off_grid_argmax_events = 0;
    std::size_t average_clip_events = 0;

    double value_at(double x, double m) const;
};

AsianDpResult solve_dp_asian(const ImpactModel& model, const Payoff& payoff,
                             const DpGrid& grid, const UniformGrid& average,
                             const ControlGrid& controls);

// Dynamic-programming consistency probe: compares the direct solve against a
// composition that re-solves the tail [t_split, T] with a midpoint-refined
// control grid and then runs the head [t0, t_split] on that tail value. The
// residual (composed minus direct) is the re-optimization slack: nonnegative,
// exactly zero at t_split = maturity, and zero through machine precision for
// affine data where the inserted sigma0 control is already optimal.
struct DppReport {
    double t_split = 0.0;
    double x_eval = 0.0;
    double v_direct = 0.0;
    double v_composed = 0.0;
    double residual = 0.0;
    std::size_t off_grid_argmax_events = 0;
};

DppReport check_dpp(const ImpactModel& model, const Payoff& payoff, const DpGrid& grid,
                    const ControlGrid& controls, double t_split, double x_eval);

}  // namespace impakt
