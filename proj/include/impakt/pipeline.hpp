#pragma once

#include <string>

#include <json.hpp>

#include "impakt/config.hpp"
#include "impakt/dual_dp.hpp"
#include "impakt/facelift.hpp"
#include "impakt/hedge_engine.hpp"
#include "impakt/hjb_solver.hpp"
#include "impakt/impact_model.hpp"
#include "impakt/payoff.hpp"

namespace impakt {

struct RunOptions {
    std::string out_dir = "out";
    bool strict = false;
};

// Config-to-object builders shared by the commands and the test suites.
ImpactModel make_model(const Config& cfg);
Payoff make_payoff(const Config& cfg);
UniformGrid make_space_grid(const Config& cfg);
ShiftSpec make_shift(const Config& cfg);
SolverGrid make_solver_grid(const Config& cfg);
DpGrid make_dp_grid(const Config& cfg);
SimConfig make_sim_config(const Config& cfg);

// Rejects keys that no command understands (typo protection that still allows
// one config file to drive several commands).
void validate_known_keys(const Config& cfg);

// Largest-coverage default: the smallest divisor of steps that keeps the
// stored layer count at or below 1025.
std::size_t default_store_stride(std::size_t steps);

// Executes one command (facelift, solve-hjb, solve-dp, duality-check, hedge,
// functional-check, all), writes its artifacts under options.out_dir, and
// returns the result summary that also lands in the manifest.
nlohmann::json run_command(const std::string& command, const Config& cfg,
                           const RunOptions& options);

}  // namespace impakt
