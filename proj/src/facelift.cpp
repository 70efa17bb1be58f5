#include "impakt/facelift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "impakt/errors.hpp"

namespace impakt {

std::vector<double> concave_envelope(std::span<const double> xs,
                                     std::span<const double> ys,
                                     std::vector<char>* hull_vertex) {
    const std::size_t n = xs.size();
    if (ys.size() != n) throw std::invalid_argument("concave_envelope: size mismatch");
    if (n == 0) return {};
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (!(xs[i] < xs[i + 1]))
            throw std::invalid_argument("concave_envelope: abscissae must be strictly increasing");
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(xs[i]) || !std::isfinite(ys[i]))
            throw std::invalid_argument("concave_envelope: data must be finite");

    // Monotone chain: keep vertices with strictly decreasing chord slopes.
    std::vector<std::size_t> hull;
    hull.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        while (hull.size() >= 2) {
            const std::size_t a = hull[hull.size() - 2];
            const std::size_t b = hull.back();
            // slope(a,b) <= slope(b,i)  <=>  b lies on or below chord a--i.
            if ((ys[b] - ys[a]) * (xs[i] - xs[b]) <= (ys[i] - ys[b]) * (xs[b] - xs[a]))
                hull.pop_back();
            else
                break;
        }
        hull.push_back(i);
    }

    std::vector<double> env(n);
    if (hull_vertex) hull_vertex->assign(n, 0);
    for (std::size_t seg = 0; seg + 1 < hull.size(); ++seg) {
        const std::size_t j = hull[seg];
        const std::size_t k = hull[seg + 1];
        env[j] = ys[j];
        for (std::size_t i = j + 1; i < k; ++i)
            env[i] = chord_value(xs[j], ys[j], xs[k], ys[k], xs[i]);
    }
    env[hull.back()] = ys[hull.back()];
    if (hull_vertex)
        for (std::size_t idx : hull) (*hull_vertex)[idx] = 1;
    return env;
}

ShiftSpec ShiftSpec::none() {
    ShiftSpec s;
    s.mode = Mode::None;
    return s;
}

ShiftSpec ShiftSpec::quadratic(double c0) {
    if (!(c0 >= 0.0) || !std::isfinite(c0))
        throw ConfigError("quadratic shift coefficient must be finite and >= 0");
    ShiftSpec s;
    s.mode = Mode::Quadratic;
    s.quadratic_c0 = c0;
    return s;
}

ShiftSpec ShiftSpec::model(double eps, EpsSign sign) {
    if (!(eps >= 0.0) || !std::isfinite(eps))
        throw ConfigError("model shift epsilon must be finite and >= 0");
    ShiftSpec s;
    s.mode = Mode::Model;
    s.eps = eps;
    s.eps_sign = sign;
    return s;
}

std::vector<double> shift_samples(const ImpactModel& model, const UniformGrid& grid,
                                  double maturity, const ShiftSpec& spec) {
    const std::size_t n = grid.n;
    std::vector<double> out(n, 0.0);
    if (spec.mode == ShiftSpec::Mode::None) return out;
    if (spec.mode == ShiftSpec::Mode::Quadratic) {
        for (std::size_t i = 0; i < n; ++i) {
            const double x = grid.node(i);
            out[i] = spec.quadratic_c0 * x * x;
        }
        return out;
    }
    // Model mode: double cumulative trapezoid of g2(maturity, .), plus tilt.
    const double dx = grid.step();
    std::vector<double> g2(n), first(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) g2[i] = model.g2(maturity, grid.node(i));
    for (std::size_t i = 1; i < n; ++i)
        first[i] = first[i - 1] + 0.5 * dx * (g2[i - 1] + g2[i]);
    for (std::size_t i = 1; i < n; ++i)
        out[i] = out[i - 1] + 0.5 * dx * (first[i - 1] + first[i]);
    double tilt = 0.0;
    if (spec.eps_sign == ShiftSpec::EpsSign::Minus) tilt = -spec.eps;
    else if (spec.eps_sign == ShiftSpec::EpsSign::Plus) tilt = spec.eps;
    if (tilt != 0.0)
        for (std::size_t i = 0; i < n; ++i) {
            const double x = grid.node(i);
            out[i] += tilt * x * x;
        }
    return out;
}

FaceliftResult facelift_payoff(const ImpactModel& model, const Payoff& payoff,
                               const UniformGrid& grid, double maturity,
                               const ShiftSpec& spec) {
    const std::size_t n = grid.n;
    FaceliftResult res;
    res.grid = grid;
    res.phi.resize(n);
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = grid.node(i);
        res.phi[i] = payoff.value(xs[i]);
    }
    res.shift = shift_samples(model, grid, maturity, spec);

    std::vector<double> shifted(n);
    for (std::size_t i = 0; i < n; ++i) shifted[i] = res.phi[i] - res.shift[i];
    std::vector<double> env = concave_envelope(xs, shifted, &res.hull_vertex);

    res.phi_hat.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        // Hull vertices recover the raw payoff exactly, without the round trip
        // through the carrier.
        res.phi_hat[i] = res.hull_vertex[i] ? res.phi[i] : env[i] + res.shift[i];
        res.max_lift = std::max(res.max_lift, res.phi_hat[i] - res.phi[i]);
    }
    res.active = res.max_lift > 1e-14;

    const double dx = grid.step();
    res.max_curvature = -std::numeric_limits<double>::infinity();
    res.curvature_bound = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double d2 =
            (res.phi_hat[i + 1] - 2.0 * res.phi_hat[i] + res.phi_hat[i - 1]) / (dx * dx);
        res.max_curvature = std::max(res.max_curvature, d2);
        res.curvature_bound = std::min(res.curvature_bound, model.g2(maturity, xs[i]));
    }
    return res;
}

}  // namespace impakt
