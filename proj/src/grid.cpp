#include "impakt/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace impakt {

UniformGrid::UniformGrid(double lo_, double hi_, std::size_t n_) : lo(lo_), hi(hi_), n(n_) {
    if (!(hi > lo)) throw std::invalid_argument("UniformGrid: hi must exceed lo");
    if (n < 2) throw std::invalid_argument("UniformGrid: need at least 2 nodes");
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw std::invalid_argument("UniformGrid: bounds must be finite");
}

std::vector<double> UniformGrid::nodes() const {
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = node(i);
    return xs;
}

std::size_t UniformGrid::cell(double x) const {
    const double u = (x - lo) / step();
    if (u <= 0.0) return 0;
    const auto i = static_cast<std::size_t>(u);
    return std::min(i, n - 2);
}

std::size_t UniformGrid::snap_index(double x, double tol) const {
    const double u = (x - lo) / step();
    const double r = std::round(u);
    if (std::abs(u - r) * step() > tol || r < 0.0 || r > static_cast<double>(n - 1))
        throw std::invalid_argument("UniformGrid: point is not on the grid");
    return static_cast<std::size_t>(r);
}

double lerp(const UniformGrid& g, std::span<const double> values, double x) {
    const std::size_t i = g.cell(x);
    const double xi = g.node(i);
    const double w = (x - xi) / g.step();
    return values[i] + (values[i + 1] - values[i]) * w;
}

double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 8) {
        double s = 0.0;
        for (double v : xs) s += v;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

double mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean: empty sample");
    return pairwise_sum(xs) / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
    if (xs.size() < 2) throw std::invalid_argument("sample_std: need at least 2 samples");
    const double m = mean(xs);
    std::vector<double> sq(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) sq[i] = (xs[i] - m) * (xs[i] - m);
    return std::sqrt(pairwise_sum(sq) / static_cast<double>(xs.size() - 1));
}

double quantile(std::vector<double> xs, double p) {
    if (xs.empty()) throw std::invalid_argument("quantile: empty sample");
    std::sort(xs.begin(), xs.end());
    const double pos = p * static_cast<double>(xs.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= xs.size()) return xs.back();
    const double w = pos - static_cast<double>(i);
    return xs[i] * (1.0 - w) + xs[i + 1] * w;
}

}  // namespace impakt
