#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace impakt {

// Uniform 1-D grid on [lo, hi] with n nodes, n >= 2.
struct UniformGrid {
    double lo = 0.0;
    double hi = 1.0;
    std::size_t n = 2;

    UniformGrid() = default;
    UniformGrid(double lo_, double hi_, std::size_t n_);

    double step() const { return (hi - lo) / static_cast<double>(n - 1); }
    double node(std::size_t i) const { return lo + static_cast<double>(i) * step(); }
    std::vector<double> nodes() const;
    bool contains(double x) const { return x >= lo && x <= hi; }

    // Left index of the cell bracketing x, clamped to [0, n-2]. Points outside
    // the grid map to the outermost cell, so interpolation through this index
    // extrapolates linearly (zero curvature) beyond the boundary.
    std::size_t cell(double x) const;

    // Index of the node nearest to x; throws std::invalid_argument when x is
    // farther than tol from every node.
    std::size_t snap_index(double x, double tol) const;
};

// Piecewise-linear evaluation of values (sampled on g) at x, extrapolating
// linearly outside [g.lo, g.hi].
double lerp(const UniformGrid& g, std::span<const double> values, double x);

// Value at x of the chord through (xj, yj) and (xk, yk). Shared by the
// concave envelope and its brute-force test oracle so both produce bitwise
// identical results.
inline double chord_value(double xj, double yj, double xk, double yk, double x) {
    return yj + (yk - yj) * ((x - xj) / (xk - xj));
}

// Order-independent pairwise summation.
double pairwise_sum(std::span<const double> xs);

double mean(std::span<const double> xs);
double sample_std(std::span<const double> xs);           // (n-1) normalization
double quantile(std::vector<double> xs, double p);       // sorts a copy

}  // namespace impakt
