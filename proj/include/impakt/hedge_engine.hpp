#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "impakt/hjb_solver.hpp"

namespace impakt {

struct SimConfig {
    std::size_t paths = 1000;  // must be even: paths are simulated in antithetic pairs
    std::size_t steps = 256;
    std::uint64_t seed = 1;
    double x0 = 1.0;
    // A pair is dropped from the statistics when either member leaves the
    // space grid; more than this fraction of dropped paths is a health error.
    double exclusion_max_fraction = 0.01;
};

struct HedgePathRecord {
    std::uint64_t path = 0;
    double x_terminal = 0.0;
    double v_terminal = 0.0;
    double payoff = 0.0;  // lifted terminal profile at x_terminal
    double error = 0.0;   // v_terminal - payoff
    double cost = 0.0;    // accumulated running cost
    bool excluded = false;
};

struct HedgeSummary {
    std::size_t paths = 0;
    std::size_t steps = 0;
    std::size_t excluded = 0;
    double v0 = 0.0;
    double mean_error = 0.0;      // mean over antithetic pair averages
    double se_error = 0.0;        // standard error over pair averages
    double mean_abs_error = 0.0;  // mean |error| over included paths
    double rms_error = 0.0;
    double mean_cost = 0.0;
    double max_b_resid = 0.0;  // worst slope-transport residual Y + gamma_hat dX - Y'
    double rms_b_resid = 0.0;
};

struct HedgeResult {
    HedgeSummary summary;
    std::vector<HedgePathRecord> records;
};

// Self-financing replication along the surface's optimal policy: the state
// follows the Euler chain X' = X + a*(t, X) sqrt(dt) xi, the book accrues the
// hedge increment Y dX plus the running cost, and the terminal error compares
// the book against the lifted payoff. Draws are counter-based on (pair, step),
// so results do not depend on scheduling; the odd pair member negates xi.
HedgeResult simulate_optimal(const ValueSurface& surface, const SimConfig& cfg);

struct MartingaleReport {
    std::size_t paths = 0;
    std::size_t steps = 0;
    std::size_t excluded = 0;
    bool forced = false;
    double control = 0.0;  // forced volatility (unset when following the policy)
    double mean_increment = 0.0;  // mean of M_T - M_0 over pair averages
    double se_increment = 0.0;
    double zscore = 0.0;
};

// Compensated-value martingale probe: M_t = v(t, X_t) - accrued cost. Along
// the optimal policy the increment has zero mean (up to discretization bias);
// along any other control it drifts down. A forced control pins the
// volatility to a constant for the whole run.
MartingaleReport martingale_check(const ValueSurface& surface, const SimConfig& cfg,
                                  std::optional<double> forced_control = std::nullopt);

// Pointwise primal readback for one dual control value: the impacted gamma,
// the marginal running cost, and their structure-identity gap
// |dG/da - a * sigma_inverse(a)|.
struct PrimalConsistency {
    double a = 0.0;
    double gamma_hat = 0.0;
    double marginal = 0.0;
    double identity_gap = 0.0;
};

PrimalConsistency primal_consistency(const ImpactModel& model, double t, double x, double a);

}  // namespace impakt
