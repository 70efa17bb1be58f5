#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "impakt/facelift.hpp"
#include "impakt/grid.hpp"
#include "impakt/impact_model.hpp"

namespace impakt {

struct SolverGrid {
    UniformGrid space;
    double t0 = 0.0;
    double maturity = 1.0;
    std::size_t steps = 1;
    // Every store_stride-th time layer is kept (plus both endpoints); steps
    // must be divisible by store_stride.
    std::size_t store_stride = 1;

    double dt() const { return (maturity - t0) / static_cast<double>(steps); }
    double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt(); }
};

struct SolveOptions {
    // Refuse to run when the terminal data alone already breaks the explicit
    // stability bound dt * a*^2 <= dx^2.
    bool enforce_stability_precondition = true;
    double stability_slack = 1.0 + 1e-9;  // allowed ratio dt * a*^2 / dx^2
};

// Streaming counters accumulated over the full backward sweep.
struct SurfaceHealth {
    std::size_t clamp_events = 0;      // interior curvature clamps applied in sweeps
    std::size_t cfl_violations = 0;    // node updates with dt * a*^2 > slack * dx^2
    double max_cfl_ratio = 0.0;        // max of dt * a*^2 / dx^2 over all updates
    double max_interior_curvature = 0.0;  // max unclamped centered D2 seen in sweeps
    double curvature_cap_min = 0.0;       // min over nodes of g2 - eps_margin
    // Max positive part of v(t_{k+1}, x) - v(t_k, x) - dt * g0(t_k, x): the
    // scheme makes the compensated value non-increasing forward in time.
    double time_monotonicity_violation = 0.0;
    double monotonicity_constant = 0.0;  // max g0 encountered (the compensator rate)
};

// Backward-in-time value surface with layer snapshots. Lookups linearly
// interpolate in x within a layer and linearly in t between stored layers
// (exact at stored times). Space derivatives use centered differences at
// interior nodes; boundary nodes use one-sided first differences and a zero
// second difference, matching the scheme's ghost-node convention.
class ValueSurface {
  public:
    ValueSurface(ImpactModel model, SolverGrid grid, std::vector<double> layers,
                 SurfaceHealth health);

    const SolverGrid& grid() const { return grid_; }
    const ImpactModel& model() const { return model_; }
    const SurfaceHealth& health() const { return health_; }

    std::size_t stored_layers() const { return num_layers_; }
    double stored_time(std::size_t j) const;
    std::span<const double> layer(std::size_t j) const;
    std::span<const double> layer_dv(std::size_t j) const;
    std::span<const double> layer_d2v(std::size_t j) const;

    double value(double t, double x) const;
    double dv(double t, double x) const;
    double d2v(double t, double x) const;
    // Optimizer of the flux at the (clamped) local curvature; gamma_hat is the
    // impacted-gamma readback sigma_inverse(t, x, a_star), which coincides
    // with the clamped curvature.
    double a_star(double t, double x) const;
    double gamma_hat(double t, double x) const;
    double v0(double x) const { return value(grid_.t0, x); }
    // Terminal profile (the lifted payoff) interpolated at x.
    double terminal(double x) const;
    double clamped_curvature(double t, double x) const;

  private:
    ImpactModel model_;
    SolverGrid grid_;
    std::size_t num_layers_ = 0;
    std::vector<double> layers_;  // num_layers x n, layer j at time t0 + j*stride*dt
    std::vector<double> dv_, d2v_;
    SurfaceHealth health_;

    std::span<const double> row(const std::vector<double>& a, std::size_t j) const;
    double lookup(const std::vector<double>& a, double t, double x) const;
};

// Explicit monotone backward sweep for the dual control value: each step adds
// dt times the curvature flux evaluated at the clamped centered second
// difference of the later layer, with coefficients frozen at the earlier time
// point. The terminal layer is the lifted payoff profile.
ValueSurface solve_hjb(const ImpactModel& model, const FaceliftResult& terminal,
                       const SolverGrid& grid, const SolveOptions& options = {});

struct SurfaceDiagnostics {
    double v0 = 0.0;                 // value at (t0, x_eval)
    double x_eval = 0.0;
    double max_d2v = 0.0;            // max interior curvature over stored layers
    double curvature_cap = 0.0;      // min admissible cap g2 - eps_margin
    double growth_constant = 0.0;    // max |v| / (1 + x^2) over stored layers
    // Max positive part of D2(v - carrier) over stored layers, carrier being
    // the double integral of g2 at maturity (concavity after the shift).
    double shifted_concavity_violation = 0.0;
    SurfaceHealth health;
};

SurfaceDiagnostics diagnose(const ValueSurface& surface, double x_eval);

}  // namespace impakt
