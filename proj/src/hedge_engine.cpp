#include "impakt/hedge_engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "impakt/errors.hpp"
#include "impakt/rng.hpp"

namespace impakt {

namespace {

void validate_sim(const ValueSurface& surface, const SimConfig& cfg) {
    if (cfg.paths == 0 || cfg.paths % 2 != 0)
        throw ConfigError("simulation needs a positive even path count (antithetic pairs)");
    if (cfg.steps == 0) throw ConfigError("simulation needs at least one step");
    if (!surface.grid().space.contains(cfg.x0))
        throw ConfigError("simulation start x0 lies outside the space grid");
    if (!(cfg.exclusion_max_fraction >= 0.0 && cfg.exclusion_max_fraction <= 1.0))
        throw ConfigError("exclusion_max_fraction must lie in [0, 1]");
}

void check_exclusions(std::size_t excluded, const SimConfig& cfg) {
    const double frac =
        static_cast<double>(excluded) / static_cast<double>(cfg.paths);
    if (frac > cfg.exclusion_max_fraction)
        throw HealthError("simulation dropped " + std::to_string(excluded) + " of " +
                          std::to_string(cfg.paths) +
                          " paths at the grid boundary; widen the space grid");
}

struct PairStats {
    std::vector<double> pair_means;
    double sum_abs = 0.0, sum_sq = 0.0, sum_cost = 0.0;
    std::size_t included_paths = 0;
};

}  // namespace

HedgeResult simulate_optimal(const ValueSurface& surface, const SimConfig& cfg) {
    validate_sim(surface, cfg);
    const SolverGrid& g = surface.grid();
    const double dt = (g.maturity - g.t0) / static_cast<double>(cfg.steps);
    const double sq_dt = std::sqrt(dt);
    const double v0 = surface.value(g.t0, cfg.x0);

    HedgeResult out;
    out.records.resize(cfg.paths);
    PairStats stats;
    stats.pair_means.reserve(cfg.paths / 2);
    double max_b = 0.0, sum_b_sq = 0.0;
    std::size_t b_count = 0, excluded = 0;

    std::vector<double> xi(cfg.steps);
    for (std::size_t pair = 0; pair < cfg.paths / 2; ++pair) {
        for (std::size_t k = 0; k < cfg.steps; ++k)
            xi[k] = normal_draw(cfg.seed, pair, k);

        double err[2] = {0.0, 0.0};
        bool bad = false;
        for (int member = 0; member < 2; ++member) {
            const double sign = member == 0 ? 1.0 : -1.0;
            double x = cfg.x0;
            double book = v0;
            double cost = 0.0;
            double y = surface.dv(g.t0, cfg.x0);
            bool left_grid = false;
            double local_max_b = 0.0, local_sum_b = 0.0;
            for (std::size_t k = 0; k < cfg.steps; ++k) {
                const double t = g.t0 + static_cast<double>(k) * dt;
                const double t_next = g.t0 + static_cast<double>(k + 1) * dt;
                const double a = surface.a_star(t, x);
                const double gam = surface.gamma_hat(t, x);
                const double dx = a * sq_dt * sign * xi[k];
                const double x_next = x + dx;
                if (!g.space.contains(x_next)) left_grid = true;
                const double g_run = surface.model().running_cost(t, x, a);
                book += y * dx + g_run * dt;
                cost += g_run * dt;
                const double y_next = surface.dv(t_next, x_next);
                const double b = y + gam * dx - y_next;
                local_max_b = std::max(local_max_b, std::abs(b));
                local_sum_b += b * b;
                y = y_next;
                x = x_next;
            }
            HedgePathRecord& rec = out.records[2 * pair + member];
            rec.path = 2 * pair + member;
            rec.x_terminal = x;
            rec.v_terminal = book;
            rec.payoff = surface.terminal(x);
            rec.error = book - rec.payoff;
            rec.cost = cost;
            rec.excluded = left_grid;
            err[member] = rec.error;
            if (left_grid) {
                bad = true;
            } else {
                max_b = std::max(max_b, local_max_b);
                sum_b_sq += local_sum_b;
                b_count += cfg.steps;
            }
        }
        if (bad) {
            // Drop the whole pair so the antithetic pairing stays intact.
            out.records[2 * pair].excluded = true;
            out.records[2 * pair + 1].excluded = true;
            excluded += 2;
            continue;
        }
        stats.pair_means.push_back(0.5 * (err[0] + err[1]));
        for (int member = 0; member < 2; ++member) {
            const HedgePathRecord& rec = out.records[2 * pair + member];
            stats.sum_abs += std::abs(rec.error);
            stats.sum_sq += rec.error * rec.error;
            stats.sum_cost += rec.cost;
            ++stats.included_paths;
        }
    }
    check_exclusions(excluded, cfg);
    if (stats.included_paths == 0) throw HealthError("no simulated path stayed on the grid");

    HedgeSummary& s = out.summary;
    s.paths = cfg.paths;
    s.steps = cfg.steps;
    s.excluded = excluded;
    s.v0 = v0;
    s.mean_error = mean(stats.pair_means);
    s.se_error = stats.pair_means.size() > 1
                     ? sample_std(stats.pair_means) /
                           std::sqrt(static_cast<double>(stats.pair_means.size()))
                     : 0.0;
    s.mean_abs_error = stats.sum_abs / static_cast<double>(stats.included_paths);
    s.rms_error = std::sqrt(stats.sum_sq / static_cast<double>(stats.included_paths));
    s.mean_cost = stats.sum_cost / static_cast<double>(stats.included_paths);
    s.max_b_resid = max_b;
    s.rms_b_resid = b_count ? std::sqrt(sum_b_sq / static_cast<double>(b_count)) : 0.0;
    return out;
}

MartingaleReport martingale_check(const ValueSurface& surface, const SimConfig& cfg,
                                  std::optional<double> forced_control) {
    validate_sim(surface, cfg);
    if (forced_control && !(*forced_control > 0.0))
        throw ConfigError("forced control must be positive");
    const SolverGrid& g = surface.grid();
    const double dt = (g.maturity - g.t0) / static_cast<double>(cfg.steps);
    const double sq_dt = std::sqrt(dt);
    const double m0 = surface.value(g.t0, cfg.x0);

    std::vector<double> pair_means;
    pair_means.reserve(cfg.paths / 2);
    std::size_t excluded = 0;
    std::vector<double> xi(cfg.steps);
    for (std::size_t pair = 0; pair < cfg.paths / 2; ++pair) {
        for (std::size_t k = 0; k < cfg.steps; ++k)
            xi[k] = normal_draw(cfg.seed, pair, k);
        double inc[2] = {0.0, 0.0};
        bool bad = false;
        for (int member = 0; member < 2; ++member) {
            const double sign = member == 0 ? 1.0 : -1.0;
            double x = cfg.x0;
            double cost = 0.0;
            bool left_grid = false;
            for (std::size_t k = 0; k < cfg.steps; ++k) {
                const double t = g.t0 + static_cast<double>(k) * dt;
                const double a = forced_control ? *forced_control : surface.a_star(t, x);
                cost += surface.model().running_cost(t, x, a) * dt;
                x += a * sq_dt * sign * xi[k];
                if (!g.space.contains(x)) left_grid = true;
            }
            inc[member] = surface.terminal(x) - cost - m0;
            if (left_grid) bad = true;
        }
        if (bad) {
            excluded += 2;
            continue;
        }
        pair_means.push_back(0.5 * (inc[0] + inc[1]));
    }
    check_exclusions(excluded, cfg);
    if (pair_means.empty()) throw HealthError("no simulated path stayed on the grid");

    MartingaleReport rep;
    rep.paths = cfg.paths;
    rep.steps = cfg.steps;
    rep.excluded = excluded;
    rep.forced = forced_control.has_value();
    rep.control = forced_control.value_or(0.0);
    rep.mean_increment = mean(pair_means);
    rep.se_increment = pair_means.size() > 1
                           ? sample_std(pair_means) /
                                 std::sqrt(static_cast<double>(pair_means.size()))
                           : 0.0;
    rep.zscore = rep.se_increment > 0.0 ? rep.mean_increment / rep.se_increment : 0.0;
    return rep;
}

PrimalConsistency primal_consistency(const ImpactModel& model, double t, double x, double a) {
    PrimalConsistency pc;
    pc.a = a;
    pc.gamma_hat = model.sigma_inverse(t, x, a);
    pc.marginal = model.marginal_cost(t, x, a);
    pc.identity_gap = std::abs(pc.marginal - a * pc.gamma_hat);
    return pc;
}

}  // namespace impakt
