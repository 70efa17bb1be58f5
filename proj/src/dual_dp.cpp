#include "impakt/dual_dp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "impakt/errors.hpp"

namespace impakt {

ControlGrid ControlGrid::uniform(double a_max, std::size_t count) {
    if (!(a_max > 0.0) || !std::isfinite(a_max))
        throw ConfigError("control grid needs a finite positive a_max");
    if (count < 2) throw ConfigError("control grid needs at least two points");
    ControlGrid g;
    g.points.resize(count);
    for (std::size_t i = 0; i < count; ++i)
        g.points[i] = a_max * static_cast<double>(i) / static_cast<double>(count - 1);
    return g;
}

ControlGrid ControlGrid::refined_midpoints() const {
    ControlGrid g;
    if (points.empty()) return g;
    g.points.reserve(points.size() * 2 - 1);
    for (std::size_t i = 0; i < points.size(); ++i) {
        g.points.push_back(points[i]);
        if (i + 1 < points.size())
            g.points.push_back(0.5 * (points[i] + points[i + 1]));
    }
    std::sort(g.points.begin(), g.points.end());
    return g;
}

namespace {

void validate_dp_grid(const DpGrid& grid, const ControlGrid& controls) {
    if (!(grid.maturity > grid.t0)) throw ConfigError("dp grid needs maturity > t0");
    if (grid.steps < 1) throw ConfigError("dp grid needs at least one time step");
    if (controls.points.empty()) throw ConfigError("dp control grid is empty");
    for (double a : controls.points)
        if (!(a >= 0.0) || !std::isfinite(a))
            throw ConfigError("dp controls must be finite and >= 0");
}

struct BestMove {
    double value = -std::numeric_limits<double>::infinity();
    double control = 0.0;
    bool off_grid = false;
};

// One maximization over the candidate controls (grid points plus the exact
// zero-cost volatility); earlier candidates win ties.
inline BestMove maximize(const ImpactModel& model, const UniformGrid& gx,
                         std::span<const double> vnext, const ControlGrid& controls,
                         double t, double x, double sq_dt, double dt) {
    BestMove best;
    auto try_control = [&](double a) {
        const double h = a * sq_dt;
        const double up = lerp(gx, vnext, x + h);
        const double dn = lerp(gx, vnext, x - h);
        const double val = 0.5 * (up + dn) - model.running_cost(t, x, a) * dt;
        if (val > best.value) {
            best.value = val;
            best.control = a;
            best.off_grid = (x + h > gx.hi) || (x - h < gx.lo);
        }
    };
    for (double a : controls.points) try_control(a);
    try_control(model.sigma0(t, x));
    return best;
}

}  // namespace

std::span<const double> DpResult::layer(std::size_t k) const {
    return {values.data() + k * grid.space.n, grid.space.n};
}

std::span<const double> DpResult::policy_layer(std::size_t k) const {
    return {policy.data() + k * grid.space.n, grid.space.n};
}

double DpResult::value_at(double x) const { return lerp(grid.space, layer(0), x); }

DpResult solve_dp_from_terminal(const ImpactModel& model, std::span<const double> terminal,
                                const DpGrid& grid, const ControlGrid& controls) {
    validate_dp_grid(grid, controls);
    const std::size_t n = grid.space.n;
    if (terminal.size() != n)
        throw ConfigError("dp terminal data size does not match the space grid");

    DpResult res;
    res.grid = grid;
    res.controls = controls;
    res.values.resize((grid.steps + 1) * n);
    res.policy.resize((grid.steps + 1) * n);
    std::copy(terminal.begin(), terminal.end(),
              res.values.begin() + static_cast<std::ptrdiff_t>(grid.steps * n));
    for (std::size_t i = 0; i < n; ++i)
        res.policy[grid.steps * n + i] = model.sigma0(grid.maturity, grid.space.node(i));

    const double dt = grid.dt();
    const double sq_dt = std::sqrt(dt);
    for (std::size_t k = grid.steps; k-- > 0;) {
        const double t = grid.time(k);
        std::span<const double> vnext{res.values.data() + (k + 1) * n, n};
        for (std::size_t i = 0; i < n; ++i) {
            const BestMove b =
                maximize(model, grid.space, vnext, controls, t, grid.space.node(i), sq_dt, dt);
            res.values[k * n + i] = b.value;
            res.policy[k * n + i] = b.control;
            if (b.off_grid) ++res.off_grid_argmax_events;
        }
    }
    return res;
}

DpResult solve_dp(const ImpactModel& model, const Payoff& payoff, const DpGrid& grid,
                  const ControlGrid& controls) {
    if (payoff.kind() != Payoff::Kind::Markovian)
        throw ConfigError("solve_dp expects a terminal payoff; use solve_dp_asian for averages");
    std::vector<double> terminal(grid.space.n);
    for (std::size_t i = 0; i < grid.space.n; ++i)
        terminal[i] = payoff.value(grid.space.node(i));
    return solve_dp_from_terminal(model, terminal, grid, controls);
}

double AsianDpResult::value_at(double x, double m) const {
    const std::size_t nm = average.n;
    const std::size_t jm = average.cell(m);
    const double wm = (m - average.node(jm)) / average.step();
    // Bilinear: interpolate in x along the two bracketing m columns.
    std::vector<double> col_lo(grid.space.n), col_hi(grid.space.n);
    for (std::size_t i = 0; i < grid.space.n; ++i) {
        col_lo[i] = v0[i * nm + jm];
        col_hi[i] = v0[i * nm + jm + 1];
    }
    const double a = lerp(grid.space, col_lo, x);
    const double b = lerp(grid.space, col_hi, x);
    return a + wm * (b - a);
}

AsianDpResult solve_dp_asian(const ImpactModel& model, const Payoff& payoff,
                             const DpGrid& grid, const UniformGrid& average,
                             const ControlGrid& controls) {
    if (payoff.kind() != Payoff::Kind::Asian)
        throw ConfigError("solve_dp_asian expects a path-average payoff");
    validate_dp_grid(grid, controls);
    const std::size_t n = grid.space.n;
    const std::size_t nm = average.n;
    const double dt = grid.dt();
    const double sq_dt = std::sqrt(dt);
    const double horizon = grid.maturity - grid.t0;
    const AveragingMeasure& mu = payoff.mu();
    const double atom = mu.terminal_atom();

    AsianDpResult res;
    res.grid = grid;
    res.average = average;
    res.controls = controls;

    std::vector<double> v_old(n * nm), v_new(n * nm);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < nm; ++j)
            v_old[i * nm + j] = payoff.value(average.node(j) + atom * grid.space.node(i));

    std::vector<double> col(n);
    for (std::size_t k = grid.steps; k-- > 0;) {
        const double t = grid.time(k);
        const double mass =
            mu.interval_mass(t - grid.t0, grid.time(k + 1) - grid.t0, horizon);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = grid.space.node(i);
            const double m_adv = x * mass;  // advancement is shared by every m
            for (std::size_t j = 0; j < nm; ++j) {
                double m_next = average.node(j) + m_adv;
                if (m_next < average.lo || m_next > average.hi) {
                    m_next = std::clamp(m_next, average.lo, average.hi);
                    ++res.average_clip_events;
                }
                const std::size_t jm = average.cell(m_next);
                const double wm = (m_next - average.node(jm)) / average.step();
                double best = -std::numeric_limits<double>::infinity();
                bool best_off = false;
                auto try_control = [&](double a) {
                    const double h = a * sq_dt;
                    auto eval = [&](double xq) {
                        const std::size_t ic = grid.space.cell(xq);
                        const double wx = (xq - grid.space.node(ic)) / grid.space.step();
                        const double v00 = v_old[ic * nm + jm];
                        const double v01 = v_old[ic * nm + jm + 1];
                        const double v10 = v_old[(ic + 1) * nm + jm];
                        const double v11 = v_old[(ic + 1) * nm + jm + 1];
                        const double lo_v = v00 + wx * (v10 - v00);
                        const double hi_v = v01 + wx * (v11 - v01);
                        return lo_v + wm * (hi_v - lo_v);
                    };
                    const double val = 0.5 * (eval(x + h) + eval(x - h)) -
                                       model.running_cost(t, x, a) * dt;
                    if (val > best) {
                        best = val;
                        best_off = (x + h > grid.space.hi) || (x - h < grid.space.lo);
                    }
                };
                for (double a : controls.points) try_control(a);
                try_control(model.sigma0(t, x));
                v_new[i * nm + j] = best;
                if (best_off) ++res.off_grid_argmax_events;
            }
        }
        v_old.swap(v_new);
    }
    res.v0 = std::move(v_old);
    return res;
}

DppReport check_dpp(const ImpactModel& model, const Payoff& payoff, const DpGrid& grid,
                    const ControlGrid& controls, double t_split, double x_eval) {
    validate_dp_grid(grid, controls);
    const double dt = grid.dt();
    const double rel = (t_split - grid.t0) / dt;
    const double rounded = std::round(rel);
    if (std::abs(rel - rounded) > 1e-9 || rounded < 0.0 ||
        rounded > static_cast<double>(grid.steps))
        throw ConfigError("dpp split time must land on a dp step boundary");
    const std::size_t k_split = static_cast<std::size_t>(rounded);

    DppReport rep;
    rep.t_split = grid.time(k_split);
    rep.x_eval = x_eval;

    const DpResult direct = solve_dp(model, payoff, grid, controls);
    rep.v_direct = direct.value_at(x_eval);
    rep.off_grid_argmax_events = direct.off_grid_argmax_events;

    std::vector<double> tail_values(grid.space.n);
    if (k_split == grid.steps) {
        for (std::size_t i = 0; i < grid.space.n; ++i)
            tail_values[i] = payoff.value(grid.space.node(i));
    } else {
        DpGrid tail = grid;
        tail.t0 = rep.t_split;
        tail.steps = grid.steps - k_split;
        const DpResult tail_solve =
            solve_dp(model, payoff, tail, controls.refined_midpoints());
        auto l0 = tail_solve.layer(0);
        tail_values.assign(l0.begin(), l0.end());
        rep.off_grid_argmax_events += tail_solve.off_grid_argmax_events;
    }

    if (k_split == 0) {
        rep.v_composed = lerp(grid.space, tail_values, x_eval);
    } else {
        DpGrid head = grid;
        head.maturity = rep.t_split;
        head.steps = k_split;
        const DpResult head_solve =
            solve_dp_from_terminal(model, tail_values, head, controls);
        rep.v_composed = head_solve.value_at(x_eval);
        rep.off_grid_argmax_events += head_solve.off_grid_argmax_events;
    }
    rep.residual = rep.v_composed - rep.v_direct;
    return rep;
}

}  // namespace impakt
