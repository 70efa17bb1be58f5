#include "impakt/hjb_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "impakt/errors.hpp"

namespace impakt {

namespace {

void validate_grid(const FaceliftResult& terminal, const SolverGrid& grid) {
    if (!(grid.maturity > grid.t0) || !std::isfinite(grid.maturity) || !std::isfinite(grid.t0))
        throw ConfigError("solver grid needs finite maturity > t0");
    if (grid.steps < 1) throw ConfigError("solver grid needs at least one time step");
    if (grid.store_stride < 1 || grid.steps % grid.store_stride != 0)
        throw ConfigError("store_stride must divide the number of time steps");
    const UniformGrid& a = terminal.grid;
    const UniformGrid& b = grid.space;
    if (a.n != b.n || a.lo != b.lo || a.hi != b.hi)
        throw ConfigError("terminal data grid does not match the solver space grid");
}

}  // namespace

ValueSurface solve_hjb(const ImpactModel& model, const FaceliftResult& terminal,
                       const SolverGrid& grid, const SolveOptions& options) {
    validate_grid(terminal, grid);
    const std::size_t n = grid.space.n;
    const double dx = grid.space.step();
    const double dx2 = dx * dx;
    const double dt = grid.dt();
    const double margin = model.eps_margin();
    const bool custom = model.has_custom_cost();

    // All built-in coefficient families are time-invariant, so per-node
    // coefficients are frozen once. (is_time_invariant() guards the shortcut.)
    std::vector<double> s(n), f(n), c0(n), c1(n), c2(n), cap(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = grid.space.node(i);
        const double t = grid.t0;
        c0[i] = model.g0(t, x);
        c1[i] = model.g1(t, x);
        c2[i] = model.g2(t, x);
        if (!custom) {
            s[i] = model.sigma0(t, x);
            f[i] = model.f(x);
        }
        cap[i] = c2[i] - margin;
        if (!(cap[i] > 0.0))
            throw ConfigError("eps_margin leaves no admissible curvature band at x = " +
                              std::to_string(x));
    }

    auto flux = [&](std::size_t i, double z, double& a_out) {
        if (custom) {
            a_out = c1[i] / (c2[i] - z);
            return 0.5 * c1[i] * a_out - c0[i];
        }
        const double denom = 1.0 - f[i] * z;
        a_out = s[i] / denom;
        return 0.5 * s[i] * s[i] * z / denom;
    };

    SurfaceHealth health;
    health.max_interior_curvature = -std::numeric_limits<double>::infinity();
    health.curvature_cap_min = *std::min_element(cap.begin(), cap.end());
    health.monotonicity_constant = *std::max_element(c0.begin(), c0.end());

    // Stability precondition from the terminal data: the explicit update moves
    // mass at rate a*^2 / dx^2, so dt * a*^2 must stay below dx^2. The lifted
    // terminal layer carries the largest curvature the sweep will see in
    // practice; in-sweep counters below catch any later growth.
    if (options.enforce_stability_precondition) {
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double z = 0.0;
            if (i > 0 && i + 1 < n)
                z = (terminal.phi_hat[i + 1] - 2.0 * terminal.phi_hat[i] +
                     terminal.phi_hat[i - 1]) / dx2;
            z = std::min(z, cap[i]);
            double a = 0.0;
            (void)flux(i, z, a);
            worst = std::max(worst, a);
        }
        const double ratio = dt * worst * worst / dx2;
        if (ratio > options.stability_slack) {
            const std::size_t need = static_cast<std::size_t>(
                std::ceil((grid.maturity - grid.t0) * worst * worst / dx2));
            throw PreconditionError(
                "explicit scheme unstable on the terminal layer: dt * a*^2 / dx^2 = " +
                std::to_string(ratio) + " > 1; increase hjb.steps to at least " +
                std::to_string(need) + " or coarsen the space grid");
        }
    }

    const std::size_t num_layers = grid.steps / grid.store_stride + 1;
    std::vector<double> layers(num_layers * n);
    std::copy(terminal.phi_hat.begin(), terminal.phi_hat.end(),
              layers.begin() + static_cast<std::ptrdiff_t>((num_layers - 1) * n));

    std::vector<double> v_old = terminal.phi_hat;
    std::vector<double> v_new(n);
    for (std::size_t k = grid.steps; k-- > 0;) {
        for (std::size_t i = 0; i < n; ++i) {
            double z = 0.0;
            if (i > 0 && i + 1 < n) {
                z = (v_old[i + 1] - 2.0 * v_old[i] + v_old[i - 1]) / dx2;
                health.max_interior_curvature = std::max(health.max_interior_curvature, z);
                if (z > cap[i]) {
                    z = cap[i];
                    ++health.clamp_events;
                }
            }
            double a = 0.0;
            const double fl = flux(i, z, a);
            const double ratio = dt * a * a / dx2;
            if (ratio > health.max_cfl_ratio) health.max_cfl_ratio = ratio;
            if (ratio > options.stability_slack) ++health.cfl_violations;
            v_new[i] = v_old[i] + dt * fl;
            const double viol = v_old[i] - v_new[i] - dt * c0[i];
            if (viol > health.time_monotonicity_violation)
                health.time_monotonicity_violation = viol;
        }
        v_old.swap(v_new);
        if (k % grid.store_stride == 0)
            std::copy(v_old.begin(), v_old.end(),
                      layers.begin() + static_cast<std::ptrdiff_t>((k / grid.store_stride) * n));
    }

    return ValueSurface(model, grid, std::move(layers), health);
}

ValueSurface::ValueSurface(ImpactModel model, SolverGrid grid, std::vector<double> layers,
                           SurfaceHealth health)
    : model_(std::move(model)),
      grid_(grid),
      num_layers_(grid.steps / grid.store_stride + 1),
      layers_(std::move(layers)),
      health_(health) {
    const std::size_t n = grid_.space.n;
    if (layers_.size() != num_layers_ * n)
        throw ConfigError("value surface layer buffer has the wrong size");
    const double dx = grid_.space.step();
    dv_.resize(layers_.size());
    d2v_.resize(layers_.size());
    for (std::size_t j = 0; j < num_layers_; ++j) {
        const double* v = layers_.data() + j * n;
        double* d1 = dv_.data() + j * n;
        double* d2 = d2v_.data() + j * n;
        d1[0] = (v[1] - v[0]) / dx;
        d1[n - 1] = (v[n - 1] - v[n - 2]) / dx;
        d2[0] = 0.0;
        d2[n - 1] = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            d1[i] = (v[i + 1] - v[i - 1]) / (2.0 * dx);
            d2[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (dx * dx);
        }
    }
}

double ValueSurface::stored_time(std::size_t j) const {
    return grid_.time(j * grid_.store_stride);
}

std::span<const double> ValueSurface::row(const std::vector<double>& a, std::size_t j) const {
    return {a.data() + j * grid_.space.n, grid_.space.n};
}

std::span<const double> ValueSurface::layer(std::size_t j) const { return row(layers_, j); }
std::span<const double> ValueSurface::layer_dv(std::size_t j) const { return row(dv_, j); }
std::span<const double> ValueSurface::layer_d2v(std::size_t j) const { return row(d2v_, j); }

double ValueSurface::lookup(const std::vector<double>& a, double t, double x) const {
    if (num_layers_ == 1) return lerp(grid_.space, row(a, 0), x);
    const double span_t = grid_.maturity - grid_.t0;
    double tau = (t - grid_.t0) / span_t * static_cast<double>(num_layers_ - 1);
    tau = std::clamp(tau, 0.0, static_cast<double>(num_layers_ - 1));
    std::size_t j0 = static_cast<std::size_t>(tau);
    if (j0 >= num_layers_ - 1) j0 = num_layers_ - 2;
    const double w = tau - static_cast<double>(j0);
    const double lo = lerp(grid_.space, row(a, j0), x);
    if (w == 0.0) return lo;
    const double hi = lerp(grid_.space, row(a, j0 + 1), x);
    return lo + w * (hi - lo);
}

double ValueSurface::value(double t, double x) const { return lookup(layers_, t, x); }
double ValueSurface::dv(double t, double x) const { return lookup(dv_, t, x); }
double ValueSurface::d2v(double t, double x) const { return lookup(d2v_, t, x); }

double ValueSurface::clamped_curvature(double t, double x) const {
    return std::min(d2v(t, x), model_.g2(t, x) - model_.eps_margin());
}

double ValueSurface::a_star(double t, double x) const {
    return model_.fenchel(t, x, clamped_curvature(t, x)).argmax;
}

double ValueSurface::gamma_hat(double t, double x) const {
    return model_.sigma_inverse(t, x, a_star(t, x));
}

double ValueSurface::terminal(double x) const {
    return lerp(grid_.space, row(layers_, num_layers_ - 1), x);
}

SurfaceDiagnostics diagnose(const ValueSurface& surface, double x_eval) {
    SurfaceDiagnostics d;
    d.x_eval = x_eval;
    d.v0 = surface.value(surface.grid().t0, x_eval);
    d.health = surface.health();
    d.max_d2v = -std::numeric_limits<double>::infinity();
    d.curvature_cap = std::numeric_limits<double>::infinity();
    d.growth_constant = 0.0;
    d.shifted_concavity_violation = 0.0;
    const UniformGrid& gx = surface.grid().space;
    const double t_end = surface.grid().maturity;
    for (std::size_t j = 0; j < surface.stored_layers(); ++j) {
        auto v = surface.layer(j);
        auto d2 = surface.layer_d2v(j);
        for (std::size_t i = 0; i < gx.n; ++i) {
            const double x = gx.node(i);
            d.growth_constant = std::max(d.growth_constant, std::abs(v[i]) / (1.0 + x * x));
            if (i == 0 || i + 1 == gx.n) continue;
            d.max_d2v = std::max(d.max_d2v, d2[i]);
            const double cap = surface.model().g2(t_end, x) - surface.model().eps_margin();
            d.curvature_cap = std::min(d.curvature_cap, cap);
            d.shifted_concavity_violation = std::max(
                d.shifted_concavity_violation, d2[i] - surface.model().g2(t_end, x));
        }
    }
    return d;
}

}  // namespace impakt
