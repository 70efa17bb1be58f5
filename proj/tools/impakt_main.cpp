#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "impakt/artifacts.hpp"
#include "impakt/config.hpp"
#include "impakt/errors.hpp"
#include "impakt/pipeline.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

struct CommandSpec {
    const char* name;
    const char* help;
};

const std::vector<CommandSpec> kCommands = {
    {"facelift", "lift the terminal payoff into the admissible curvature band"},
    {"solve-hjb", "backward finite-difference sweep for the dual value surface"},
    {"solve-dp", "binomial-chain dynamic program for the dual value"},
    {"duality-check", "compare the sweep and the chain, plus the composition probe"},
    {"hedge", "simulate the replicating book along the optimal policy"},
    {"functional-check", "pathwise derivative and change-of-variable diagnostics"},
    {"all", "run every stage on one config"},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"impakt: a numerical laboratory for hedging under permanent price impact"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    bool strict = false;
    for (const CommandSpec& spec : kCommands) {
        CLI::App* sub = app.add_subcommand(spec.name, spec.help);
        sub->add_option("--config", config_path, "experiment config file")->required();
        sub->add_option("--out", out_dir, "output directory (default: out)");
        sub->add_flag("--strict", strict, "escalate quality warnings to errors");
    }
    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    nlohmann::json manifest{{"version", kVersion},
                            {"command", command},
                            {"config", config_path},
                            {"out_dir", out_dir},
                            {"strict", strict},
                            {"status", "ok"}};
    int code = 0;
    try {
        const impakt::Config cfg = impakt::Config::from_file(config_path);
        manifest["config_hash"] = impakt::fnv1a_hex(cfg.raw_text());
        manifest["seeds"] = nlohmann::json{
            {"sim", cfg.get_size("sim.seed", 1)},
            {"functional", cfg.get_size("functional.seed", 2)},
            {"ito", cfg.get_size("functional.ito_seed", 3)}};
        impakt::RunOptions options;
        options.out_dir = out_dir;
        options.strict = strict;
        const nlohmann::json result = impakt::run_command(command, cfg, options);
        manifest["results"] = result["results"];
        manifest["wall_times"] = result["wall_times"];
    } catch (const impakt::ConfigError& e) {
        manifest["status"] = "error";
        manifest["error"] = {{"type", "config"}, {"message", e.what()}};
        code = 2;
    } catch (const impakt::PreconditionError& e) {
        manifest["status"] = "error";
        manifest["error"] = {{"type", "precondition"}, {"message", e.what()}};
        code = 3;
    } catch (const impakt::HealthError& e) {
        manifest["status"] = "error";
        manifest["error"] = {{"type", "health"}, {"message", e.what()}};
        code = 4;
    } catch (const std::exception& e) {
        manifest["status"] = "error";
        manifest["error"] = {{"type", "internal"}, {"message", e.what()}};
        code = 1;
    }

    try {
        impakt::write_text_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");
    } catch (const std::exception& e) {
        std::fprintf(stderr, "impakt: cannot write manifest: %s\n", e.what());
        if (code == 0) code = 1;
    }
    if (code != 0 && manifest.contains("error"))
        std::fprintf(stderr, "impakt: %s error: %s\n",
                     manifest["error"]["type"].get<std::string>().c_str(),
                     manifest["error"]["message"].get<std::string>().c_str());
    return code;
}
