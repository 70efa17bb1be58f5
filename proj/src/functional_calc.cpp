#include "impakt/functional_calc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "impakt/errors.hpp"

namespace impakt {

DiscretePath::DiscretePath(std::vector<double> t, std::vector<double> v)
    : times(std::move(t)), values(std::move(v)) {
    if (times.size() != values.size() || times.size() < 2)
        throw std::invalid_argument("path needs matching times/values with >= 2 nodes");
    for (std::size_t i = 0; i + 1 < times.size(); ++i)
        if (!(times[i] < times[i + 1]))
            throw std::invalid_argument("path times must be strictly increasing");
}

DiscretePath DiscretePath::bumped(std::size_t from_index, double h) const {
    DiscretePath out = *this;
    for (std::size_t i = from_index; i < out.values.size(); ++i) out.values[i] += h;
    return out;
}

DiscretePath DiscretePath::stopped(std::size_t k) const {
    DiscretePath out = *this;
    for (std::size_t i = k + 1; i < out.values.size(); ++i) out.values[i] = out.values[k];
    return out;
}

double dupire_vertical(const PathFn& fn, const DiscretePath& path, std::size_t index,
                       double h) {
    return (fn(path.bumped(index, h)) - fn(path.bumped(index, -h))) / (2.0 * h);
}

double dupire_second(const PathFn& fn, const DiscretePath& path, std::size_t index,
                     double h) {
    return (fn(path.bumped(index, h)) - 2.0 * fn(path) + fn(path.bumped(index, -h))) /
           (h * h);
}

PayoffFrechet payoff_frechet(const Payoff& payoff, const DiscretePath& path) {
    const std::size_t n = path.steps();
    PayoffFrechet lam;
    lam.step_density.assign(n, 0.0);
    if (payoff.kind() == Payoff::Kind::Markovian) {
        lam.terminal_atom = payoff.slope(path.values.back());
        return lam;
    }
    const AveragingMeasure& mu = payoff.mu();
    const double t0 = path.times.front();
    const double horizon = path.horizon();
    double avg = mu.terminal_atom() * path.values.back();
    std::vector<double> mass(n);
    for (std::size_t k = 0; k < n; ++k) {
        mass[k] = mu.interval_mass(path.times[k] - t0, path.times[k + 1] - t0, horizon);
        avg += mass[k] * path.values[k];
    }
    const double dphi = payoff.slope(avg);
    for (std::size_t k = 0; k < n; ++k) lam.step_density[k] = dphi * mass[k];
    lam.terminal_atom = dphi * mu.terminal_atom();
    return lam;
}

double eval_frechet(const PayoffFrechet& lam, std::span<const double> bump) {
    if (bump.size() != lam.step_density.size() + 1)
        throw std::invalid_argument("bump profile must have one node per path node");
    double acc = 0.0;
    for (std::size_t k = 0; k < lam.step_density.size(); ++k)
        acc += lam.step_density[k] * bump[k];
    return acc + lam.terminal_atom * bump.back();
}

double cost_dx(const ImpactModel& model, double t, double x, double a, double h) {
    return (model.running_cost(t, x + h, a) - model.running_cost(t, x - h, a)) / (2.0 * h);
}

std::vector<double> compute_A(const ImpactModel& model, const DiscretePath& path,
                              std::span<const double> controls, const PayoffFrechet& lam,
                              double fd_step) {
    const std::size_t n = path.steps();
    if (controls.size() != n)
        throw std::invalid_argument("compute_A needs one control per path step");
    if (lam.step_density.size() != n)
        throw std::invalid_argument("compute_A: density/path step mismatch");
    std::vector<double> a_proc(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double dt = path.times[k + 1] - path.times[k];
        const double grad =
            cost_dx(model, path.times[k], path.values[k], controls[k], fd_step);
        a_proc[k + 1] = a_proc[k] + lam.step_density[k] - grad * dt;
    }
    a_proc[n] += lam.terminal_atom;
    return a_proc;
}

ItoReport ito_residual(const FunctionalProbe& fn, const DiscretePath& path,
                       const ItoOptions& options) {
    const std::size_t n = path.steps();
    ItoReport rep;
    rep.residual.assign(n + 1, 0.0);

    // Wrap the probe so vertical differencing at step k sees the stopped path.
    auto at = [&](std::size_t k, const DiscretePath& p) { return fn(k, p.stopped(k)); };

    const double f0 = at(0, path);
    double transport = 0.0;
    double compensator = 0.0;
    const double ell0 = options.time_compensator ? options.time_compensator(path.times[0]) : 0.0;
    rep.max_residual = 0.0;
    rep.max_abs_residual = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double dz = path.values[k + 1] - path.values[k];
        const DiscretePath stop_k = path.stopped(k);
        const double up = fn(k, stop_k.bumped(k, options.fd_step));
        const double dn = fn(k, stop_k.bumped(k, -options.fd_step));
        const double d1 = (up - dn) / (2.0 * options.fd_step);
        transport += d1 * dz;
        if (options.with_second_order) {
            const double mid = fn(k, stop_k);
            const double d2 = (up - 2.0 * mid + dn) / (options.fd_step * options.fd_step);
            compensator += 0.5 * d2 * dz * dz;
        }
        const double ell = options.time_compensator
                               ? options.time_compensator(path.times[k + 1]) - ell0
                               : 0.0;
        const double fk = at(k + 1, path);
        const double res = fk - f0 - transport - compensator - ell;
        rep.residual[k + 1] = res;
        rep.max_residual = std::max(rep.max_residual, res);
        rep.max_abs_residual = std::max(rep.max_abs_residual, std::abs(res));
    }
    return rep;
}

}  // namespace impakt
