#include "impakt/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "impakt/artifacts.hpp"
#include "impakt/errors.hpp"
#include "impakt/functional_calc.hpp"
#include "impakt/rng.hpp"

namespace impakt {

namespace {

using nlohmann::json;

struct CallExpr {
    std::string head;
    std::vector<std::string> args;
};

CallExpr parse_call(const std::string& expr) {
    std::string s = expr;
    s.erase(std::remove_if(s.begin(), s.end(),
                           [](unsigned char c) { return std::isspace(c); }),
            s.end());
    CallExpr out;
    const std::size_t open = s.find('(');
    if (open == std::string::npos) {
        out.head = s;
        return out;
    }
    if (s.empty() || s.back() != ')')
        throw ConfigError("unbalanced parentheses in expression: " + expr);
    out.head = s.substr(0, open);
    std::string inside = s.substr(open + 1, s.size() - open - 2);
    if (inside.empty()) return out;
    std::stringstream ss(inside);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.args.push_back(tok);
    return out;
}

double arg_double(const CallExpr& call, std::size_t i) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(call.args.at(i), &pos);
    } catch (const std::exception&) {
        throw ConfigError("bad numeric argument in " + call.head + "(...)");
    }
    if (pos != call.args[i].size())
        throw ConfigError("bad numeric argument in " + call.head + "(...)");
    return v;
}

void want_args(const CallExpr& call, std::size_t n, const std::string& expr) {
    if (call.args.size() != n)
        throw ConfigError(call.head + " expects " + std::to_string(n) +
                          " argument(s): " + expr);
}

CoefficientMap load_coefficient_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open coefficient table: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty coefficient table: " + path);
    std::vector<double> xs, ys;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string a, b;
        if (!std::getline(row, a, ',') || !std::getline(row, b))
            throw ConfigError("malformed row in coefficient table " + path + ": " + line);
        try {
            xs.push_back(std::stod(a));
            ys.push_back(std::stod(b));
        } catch (const std::exception&) {
            throw ConfigError("malformed row in coefficient table " + path + ": " + line);
        }
    }
    return CoefficientMap::tabulated(std::move(xs), std::move(ys));
}

CoefficientMap make_coefficient(const std::string& expr) {
    const CallExpr call = parse_call(expr);
    if (call.head == "constant") {
        want_args(call, 1, expr);
        return CoefficientMap::constant(arg_double(call, 0));
    }
    if (call.head == "affine") {
        want_args(call, 4, expr);
        return CoefficientMap::affine(arg_double(call, 0), arg_double(call, 1),
                                      arg_double(call, 2), arg_double(call, 3));
    }
    if (call.head == "cev") {
        want_args(call, 5, expr);
        return CoefficientMap::cev_clamped(arg_double(call, 0), arg_double(call, 1),
                                           arg_double(call, 2), arg_double(call, 3),
                                           arg_double(call, 4));
    }
    if (call.head == "tabulated") {
        if (call.args.size() != 1)
            throw ConfigError("tabulated coefficient needs a csv path: " + expr);
        return load_coefficient_table(call.args[0]);
    }
    // A bare number is shorthand for a constant map.
    if (!call.head.empty() && call.args.empty()) {
        std::size_t pos = 0;
        try {
            const double v = std::stod(call.head, &pos);
            if (pos == call.head.size()) return CoefficientMap::constant(v);
        } catch (const std::exception&) {
        }
    }
    throw ConfigError("unknown coefficient family: " + expr);
}

}  // namespace

ImpactModel make_model(const Config& cfg) {
    CoefficientMap sigma0 = make_coefficient(cfg.get_string("model.sigma0", "constant(0.2)"));
    CoefficientMap f = make_coefficient(cfg.get_string("model.f", "constant(0.1)"));
    ModelConstants constants;
    constants.c_upper = cfg.get_double("model.c_upper", 10.0);
    constants.c_lower = cfg.get_double("model.c_lower", 1.0);
    constants.eps_margin = cfg.get_double("model.eps_margin", 0.0);
    ValidationBox box;
    box.x_lo = cfg.get_double("model.box_x_lo", box.x_lo);
    box.x_hi = cfg.get_double("model.box_x_hi", box.x_hi);
    box.a_hi = cfg.get_double("model.box_a_hi", box.a_hi);
    const bool any_g = cfg.has("model.g0") || cfg.has("model.g1") || cfg.has("model.g2");
    std::optional<QuadraticCostMaps> cost;
    if (any_g) {
        if (!(cfg.has("model.g0") && cfg.has("model.g1") && cfg.has("model.g2")))
            throw ConfigError("custom cost needs model.g0, model.g1, and model.g2 together");
        cost = QuadraticCostMaps{make_coefficient(cfg.require_string("model.g0")),
                                 make_coefficient(cfg.require_string("model.g1")),
                                 make_coefficient(cfg.require_string("model.g2"))};
    }
    return ImpactModel(std::move(sigma0), std::move(f), constants, std::move(cost), box);
}

Payoff make_payoff(const Config& cfg) {
    const std::string family = cfg.require_string("payoff.family");
    const std::string mu_name = cfg.get_string("payoff.mu", "uniform");
    AveragingMeasure mu;
    if (mu_name == "uniform")
        mu = AveragingMeasure::uniform();
    else if (mu_name == "delta_T")
        mu = AveragingMeasure::delta_t();
    else
        throw ConfigError("payoff.mu must be uniform or delta_T, got " + mu_name);
    return Payoff::parse(family, mu);
}

UniformGrid make_space_grid(const Config& cfg) {
    const double lo = cfg.require_double("grid.x_lo");
    const double hi = cfg.require_double("grid.x_hi");
    const std::size_t n = cfg.require_size("grid.nodes");
    try {
        return UniformGrid(lo, hi, n);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("bad space grid: ") + e.what());
    }
}

ShiftSpec make_shift(const Config& cfg) {
    const std::string mode = cfg.get_string("facelift.shift", "model");
    const std::string sign_name = cfg.get_string("facelift.eps_shift_sign", "minus");
    ShiftSpec::EpsSign sign;
    if (sign_name == "minus")
        sign = ShiftSpec::EpsSign::Minus;
    else if (sign_name == "plus")
        sign = ShiftSpec::EpsSign::Plus;
    else if (sign_name == "none")
        sign = ShiftSpec::EpsSign::Zero;
    else
        throw ConfigError("facelift.eps_shift_sign must be minus, plus, or none");
    if (mode == "none") return ShiftSpec::none();
    if (mode == "quadratic") {
        if (!cfg.has("facelift.quadratic_c0"))
            throw ConfigError("facelift.shift = quadratic needs facelift.quadratic_c0");
        return ShiftSpec::quadratic(cfg.require_double("facelift.quadratic_c0"));
    }
    if (mode == "model")
        return ShiftSpec::model(cfg.get_double("facelift.eps", 0.01), sign);
    throw ConfigError("facelift.shift must be model, quadratic, or none, got " + mode);
}

std::size_t default_store_stride(std::size_t steps) {
    const std::size_t target = (steps + 1024) / 1025 == 0 ? 1 : (steps + 1024) / 1025;
    for (std::size_t d = std::max<std::size_t>(target, 1); d < steps; ++d)
        if (steps % d == 0) return d;
    return steps;
}

SolverGrid make_solver_grid(const Config& cfg) {
    SolverGrid g;
    g.space = make_space_grid(cfg);
    g.t0 = cfg.get_double("grid.t0", 0.0);
    g.maturity = cfg.get_double("grid.maturity", 1.0);
    g.steps = cfg.require_size("hjb.steps");
    g.store_stride = cfg.get_size("hjb.store_stride", default_store_stride(g.steps));
    return g;
}

DpGrid make_dp_grid(const Config& cfg) {
    DpGrid g;
    g.space = make_space_grid(cfg);
    g.t0 = cfg.get_double("grid.t0", 0.0);
    g.maturity = cfg.get_double("grid.maturity", 1.0);
    g.steps = cfg.get_size("dp.steps", 128);
    return g;
}

SimConfig make_sim_config(const Config& cfg) {
    SimConfig s;
    s.paths = cfg.get_size("sim.paths", 1000);
    s.steps = cfg.get_size("sim.steps", 256);
    s.seed = cfg.get_size("sim.seed", 1);
    s.x0 = cfg.get_double("sim.x0", 1.0);
    s.exclusion_max_fraction = cfg.get_double("sim.exclusion_max", 0.01);
    return s;
}

void validate_known_keys(const Config& cfg) {
    static const std::set<std::string> known = {
        "model.sigma0", "model.f", "model.c_upper", "model.c_lower", "model.eps_margin",
        "model.g0", "model.g1", "model.g2", "model.box_x_lo", "model.box_x_hi",
        "model.box_a_hi",
        "payoff.family", "payoff.mu",
        "grid.x_lo", "grid.x_hi", "grid.nodes", "grid.t0", "grid.maturity",
        "facelift.shift", "facelift.eps", "facelift.eps_shift_sign",
        "facelift.quadratic_c0",
        "hjb.steps", "hjb.store_stride",
        "dp.steps", "dp.controls", "dp.a_max", "dp.avg_lo", "dp.avg_hi", "dp.avg_nodes",
        "dpp.t_split", "dpp.x_eval",
        "sim.paths", "sim.steps", "sim.seed", "sim.x0", "sim.exclusion_max",
        "martingale.paths", "martingale.steps", "martingale.forced_control",
        "functional.paths", "functional.steps", "functional.seed", "functional.fd_step",
        "functional.ito_paths", "functional.ito_steps", "functional.ito_seed",
        "output.surface_layers_max", "output.hedge_paths_max",
    };
    std::string bad;
    for (const auto& key : cfg.untouched_keys())
        if (!known.count(key)) bad += " " + key;
    if (!bad.empty()) throw ConfigError("unknown config key(s):" + bad);
}

namespace {

// Lazily built shared state so `all` solves the surface once.
struct Workspace {
    const Config& cfg;
    std::optional<ImpactModel> model_;
    std::optional<Payoff> payoff_;
    std::optional<FaceliftResult> lift_;
    std::optional<ValueSurface> surface_;

    explicit Workspace(const Config& c) : cfg(c) {}

    const ImpactModel& model() {
        if (!model_) model_ = make_model(cfg);
        return *model_;
    }
    const Payoff& payoff() {
        if (!payoff_) payoff_ = make_payoff(cfg);
        return *payoff_;
    }
    const FaceliftResult& lift() {
        if (!lift_) {
            const double maturity = cfg.get_double("grid.maturity", 1.0);
            lift_ = facelift_payoff(model(), payoff(), make_space_grid(cfg), maturity,
                                    make_shift(cfg));
        }
        return *lift_;
    }
    const ValueSurface& surface() {
        if (!surface_) surface_ = solve_hjb(model(), lift(), make_solver_grid(cfg));
        return *surface_;
    }
};

json health_json(const SurfaceHealth& h) {
    return json{{"clamp_events", h.clamp_events},
                {"cfl_violations", h.cfl_violations},
                {"max_cfl_ratio", h.max_cfl_ratio},
                {"max_interior_curvature", h.max_interior_curvature},
                {"curvature_cap_min", h.curvature_cap_min},
                {"time_monotonicity_violation", h.time_monotonicity_violation},
                {"monotonicity_constant", h.monotonicity_constant}};
}

json facelift_json(const FaceliftResult& r) {
    std::size_t vertices = 0;
    for (char c : r.hull_vertex) vertices += c ? 1 : 0;
    return json{{"max_lift", r.max_lift},
                {"active", r.active},
                {"max_curvature", r.max_curvature},
                {"curvature_bound", r.curvature_bound},
                {"hull_vertices", vertices},
                {"nodes", r.grid.n}};
}

void strict_facelift_gate(const Workspace& ws, const FaceliftResult& r, bool strict) {
    if (!strict) return;
    const ImpactModel& m = *ws.model_;
    double cap_min = std::numeric_limits<double>::infinity();
    const double t_end = ws.cfg.get_double("grid.maturity", 1.0);
    for (std::size_t i = 1; i + 1 < r.grid.n; ++i)
        cap_min = std::min(cap_min, m.g2(t_end, r.grid.node(i)) - m.eps_margin());
    if (r.max_curvature > cap_min + 1e-9)
        throw HealthError(
            "lifted terminal data carries curvature above the solver cap; raise "
            "facelift.eps or model.eps_margin");
}

void strict_surface_gate(const ValueSurface& surface, bool strict) {
    if (!strict) return;
    if (surface.health().cfl_violations > 0)
        throw HealthError("explicit sweep recorded " +
                          std::to_string(surface.health().cfl_violations) +
                          " stability violations; increase hjb.steps");
}

double auto_dp_a_max(const ValueSurface& surface) {
    const ImpactModel& m = surface.model();
    const UniformGrid& gx = surface.grid().space;
    double worst = 0.0;
    for (std::size_t j = 0; j < surface.stored_layers(); ++j) {
        const double t = surface.stored_time(j);
        auto d2 = surface.layer_d2v(j);
        for (std::size_t i = 0; i < gx.n; ++i) {
            const double x = gx.node(i);
            const double z = std::min(d2[i], m.g2(t, x) - m.eps_margin());
            worst = std::max(worst, m.fenchel(t, x, z).argmax);
        }
    }
    return 1.25 * worst;
}

ControlGrid make_controls(const Config& cfg, std::optional<double> auto_a_max) {
    const std::size_t count = cfg.get_size("dp.controls", 101);
    double a_max;
    if (cfg.has("dp.a_max"))
        a_max = cfg.require_double("dp.a_max");
    else if (auto_a_max)
        a_max = *auto_a_max;
    else
        throw ConfigError("dp.a_max is required when no value surface is available");
    return ControlGrid::uniform(a_max, count);
}

json run_facelift_cmd(Workspace& ws, const RunOptions& opt) {
    const FaceliftResult& r = ws.lift();
    write_facelift_csv(opt.out_dir + "/facelift.csv", r);
    json j = facelift_json(r);
    write_text_file(opt.out_dir + "/facelift.json", j.dump(2) + "\n");
    strict_facelift_gate(ws, r, opt.strict);
    return j;
}

json run_solve_hjb_cmd(Workspace& ws, const RunOptions& opt) {
    const ValueSurface& surface = ws.surface();
    const double x_eval = ws.cfg.get_double("sim.x0", 1.0);
    const SurfaceDiagnostics diag = diagnose(surface, x_eval);

    const std::size_t layers_max =
        std::max<std::size_t>(2, ws.cfg.get_size("output.surface_layers_max", 65));
    const std::size_t stride =
        (surface.stored_layers() + layers_max - 1) / layers_max;
    write_value_surface_csv(opt.out_dir + "/value_surface.csv", surface,
                            std::max<std::size_t>(stride, 1));

    json j{{"v0", diag.v0},
           {"x_eval", diag.x_eval},
           {"max_d2v", diag.max_d2v},
           {"curvature_cap", diag.curvature_cap},
           {"growth_constant", diag.growth_constant},
           {"shifted_concavity_violation", diag.shifted_concavity_violation},
           {"health", health_json(diag.health)},
           {"facelift", facelift_json(ws.lift())},
           {"grid", json{{"x_lo", surface.grid().space.lo},
                         {"x_hi", surface.grid().space.hi},
                         {"nodes", surface.grid().space.n},
                         {"steps", surface.grid().steps},
                         {"store_stride", surface.grid().store_stride},
                         {"t0", surface.grid().t0},
                         {"maturity", surface.grid().maturity}}}};
    write_text_file(opt.out_dir + "/diagnostics.json", j.dump(2) + "\n");
    strict_facelift_gate(ws, ws.lift(), opt.strict);
    strict_surface_gate(surface, opt.strict);
    return j;
}

json run_solve_dp_cmd(Workspace& ws, const RunOptions& opt) {
    const double x_eval = ws.cfg.get_double("sim.x0", 1.0);
    const DpGrid grid = make_dp_grid(ws.cfg);
    json j;
    if (ws.payoff().kind() == Payoff::Kind::Markovian) {
        std::optional<double> auto_a;
        if (!ws.cfg.has("dp.a_max") && ws.surface_.has_value())
            auto_a = auto_dp_a_max(*ws.surface_);
        const ControlGrid controls = make_controls(ws.cfg, auto_a);
        const DpResult res = solve_dp(ws.model(), ws.payoff(), grid, controls);
        write_dp_value_csv(opt.out_dir + "/dp_value.csv", res);
        j = json{{"value", res.value_at(x_eval)},
                 {"x_eval", x_eval},
                 {"off_grid_argmax_events", res.off_grid_argmax_events},
                 {"steps", grid.steps},
                 {"controls", controls.points.size()},
                 {"a_max", controls.a_max()}};
    } else {
        const ControlGrid controls = make_controls(ws.cfg, std::nullopt);
        UniformGrid avg;
        try {
            avg = UniformGrid(ws.cfg.get_double("dp.avg_lo", grid.space.lo),
                              ws.cfg.get_double("dp.avg_hi", grid.space.hi),
                              ws.cfg.get_size("dp.avg_nodes", 101));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("bad average grid: ") + e.what());
        }
        const AsianDpResult res =
            solve_dp_asian(ws.model(), ws.payoff(), grid, avg, controls);
        write_dp_value_csv(opt.out_dir + "/dp_value.csv", res);
        j = json{{"value", res.value_at(x_eval, 0.0)},
                 {"x_eval", x_eval},
                 {"m0", 0.0},
                 {"off_grid_argmax_events", res.off_grid_argmax_events},
                 {"average_clip_events", res.average_clip_events},
                 {"steps", grid.steps},
                 {"controls", controls.points.size()},
                 {"a_max", controls.a_max()}};
    }
    write_text_file(opt.out_dir + "/dp.json", j.dump(2) + "\n");
    return j;
}

json run_duality_cmd(Workspace& ws, const RunOptions& opt) {
    if (ws.payoff().kind() != Payoff::Kind::Markovian)
        throw ConfigError("duality-check compares terminal payoffs; use solve-dp for averages");
    const json hjb = run_solve_hjb_cmd(ws, opt);
    const double x_eval = ws.cfg.get_double("sim.x0", 1.0);
    const double v_hjb = ws.surface().value(ws.surface().grid().t0, x_eval);

    std::optional<double> auto_a;
    if (!ws.cfg.has("dp.a_max")) auto_a = auto_dp_a_max(ws.surface());
    const ControlGrid controls = make_controls(ws.cfg, auto_a);
    const DpGrid grid = make_dp_grid(ws.cfg);
    const DpResult dp = solve_dp(ws.model(), ws.payoff(), grid, controls);
    write_dp_value_csv(opt.out_dir + "/dp_value.csv", dp);
    const double v_dp = dp.value_at(x_eval);

    const double t_split_def = 0.5 * (grid.t0 + grid.maturity);
    const double t_split = ws.cfg.get_double("dpp.t_split", t_split_def);
    const double x_dpp = ws.cfg.get_double("dpp.x_eval", x_eval);
    const DppReport dpp = check_dpp(ws.model(), ws.payoff(), grid, controls, t_split, x_dpp);
    json dpp_j{{"t_split", dpp.t_split},
               {"x_eval", dpp.x_eval},
               {"v_direct", dpp.v_direct},
               {"v_composed", dpp.v_composed},
               {"residual", dpp.residual},
               {"off_grid_argmax_events", dpp.off_grid_argmax_events}};
    write_text_file(opt.out_dir + "/dpp_residual.json", dpp_j.dump(2) + "\n");

    json j{{"v_hjb", v_hjb},
           {"v_dp", v_dp},
           {"gap", v_hjb - v_dp},
           {"abs_gap", std::abs(v_hjb - v_dp)},
           {"x_eval", x_eval},
           {"a_max", controls.a_max()},
           {"dp_steps", grid.steps},
           {"dp_off_grid_argmax_events", dp.off_grid_argmax_events},
           {"dpp", dpp_j},
           {"hjb_v0", hjb["v0"]}};
    write_text_file(opt.out_dir + "/duality.json", j.dump(2) + "\n");
    return j;
}

json martingale_json(const MartingaleReport& r) {
    json j{{"paths", r.paths},
           {"steps", r.steps},
           {"excluded", r.excluded},
           {"mean_increment", r.mean_increment},
           {"se_increment", r.se_increment},
           {"zscore", r.zscore}};
    if (r.forced) j["forced_control"] = r.control;
    return j;
}

json run_hedge_cmd(Workspace& ws, const RunOptions& opt) {
    const ValueSurface& surface = ws.surface();
    const SimConfig sim = make_sim_config(ws.cfg);
    const HedgeResult res = simulate_optimal(surface, sim);
    write_hedge_paths_csv(opt.out_dir + "/hedge_paths.csv", res,
                          ws.cfg.get_size("output.hedge_paths_max", 20000));

    SimConfig mart = sim;
    mart.paths = ws.cfg.get_size("martingale.paths", sim.paths);
    mart.steps = ws.cfg.get_size("martingale.steps", sim.steps);
    const MartingaleReport optimal = martingale_check(surface, mart);

    const HedgeSummary& s = res.summary;
    json j{{"paths", s.paths},
           {"steps", s.steps},
           {"excluded", s.excluded},
           {"v0", s.v0},
           {"mean_error", s.mean_error},
           {"se_error", s.se_error},
           {"mean_abs_error", s.mean_abs_error},
           {"rms_error", s.rms_error},
           {"mean_cost", s.mean_cost},
           {"max_b_resid", s.max_b_resid},
           {"rms_b_resid", s.rms_b_resid},
           {"martingale", martingale_json(optimal)}};
    if (ws.cfg.has("martingale.forced_control")) {
        const double forced = ws.cfg.require_double("martingale.forced_control");
        j["martingale_forced"] = martingale_json(martingale_check(surface, mart, forced));
    }
    write_text_file(opt.out_dir + "/hedge_summary.json", j.dump(2) + "\n");
    strict_surface_gate(surface, opt.strict);
    return j;
}

json run_functional_cmd(Workspace& ws, const RunOptions& opt) {
    const ValueSurface& surface = ws.surface();
    const ImpactModel& model = ws.model();
    const SolverGrid& g = surface.grid();
    const double x0 = ws.cfg.get_double("sim.x0", 1.0);
    const double fd_step = ws.cfg.get_double("functional.fd_step", 1e-5);

    // Gradient representation along optimal paths: terminal slope of the
    // lifted profile minus the accumulated cost gradient, paired against the
    // time-zero hedge slope.
    const std::size_t paths = ws.cfg.get_size("functional.paths", 10000);
    const std::size_t steps = ws.cfg.get_size("functional.steps", 256);
    const std::uint64_t seed = ws.cfg.get_size("functional.seed", 2);
    if (paths == 0 || paths % 2 != 0)
        throw ConfigError("functional.paths must be positive and even");
    const double dt = (g.maturity - g.t0) / static_cast<double>(steps);
    const double sq_dt = std::sqrt(dt);
    const AveragingMeasure& mu = ws.payoff().mu();
    const bool asian = ws.payoff().kind() == Payoff::Kind::Asian;

    std::vector<double> pair_means;
    pair_means.reserve(paths / 2);
    std::size_t excluded = 0;
    std::vector<double> xi(steps), xs(steps + 1), masses(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = g.t0 + static_cast<double>(k) * dt;
        masses[k] = mu.interval_mass(t - g.t0, t + dt - g.t0, g.maturity - g.t0);
    }
    for (std::size_t pair = 0; pair < paths / 2; ++pair) {
        for (std::size_t k = 0; k < steps; ++k) xi[k] = normal_draw(seed, pair, k);
        double a_t[2] = {0.0, 0.0};
        bool bad = false;
        for (int member = 0; member < 2; ++member) {
            const double sign = member == 0 ? 1.0 : -1.0;
            double x = x0;
            xs[0] = x;
            bool left_grid = false;
            double grad_cost = 0.0;
            for (std::size_t k = 0; k < steps; ++k) {
                const double t = g.t0 + static_cast<double>(k) * dt;
                const double a = surface.a_star(t, x);
                grad_cost += cost_dx(model, t, x, a, fd_step) * dt;
                x += a * sq_dt * sign * xi[k];
                xs[k + 1] = x;
                if (!g.space.contains(x)) left_grid = true;
            }
            double acc = -grad_cost;
            if (asian) {
                double avg = mu.terminal_atom() * x;
                for (std::size_t k = 0; k < steps; ++k) avg += masses[k] * xs[k];
                const double dphi = ws.payoff().slope(avg);
                double density_sum = 0.0;
                for (std::size_t k = 0; k < steps; ++k) density_sum += dphi * masses[k];
                acc += density_sum + dphi * mu.terminal_atom();
            } else {
                // Terminal atom: slope of the lifted profile the surface hedges.
                acc += surface.dv(g.maturity, x);
            }
            a_t[member] = acc;
            if (left_grid) bad = true;
        }
        if (bad) {
            excluded += 2;
            continue;
        }
        pair_means.push_back(0.5 * (a_t[0] + a_t[1]));
    }
    if (pair_means.empty()) throw HealthError("no functional-check path stayed on the grid");
    const double frac = static_cast<double>(excluded) / static_cast<double>(paths);
    if (frac > ws.cfg.get_double("sim.exclusion_max", 0.01))
        throw HealthError("functional-check dropped too many paths at the grid boundary");
    const double mean_at = mean(pair_means);
    const double se_at = pair_means.size() > 1
                             ? sample_std(pair_means) /
                                   std::sqrt(static_cast<double>(pair_means.size()))
                             : 0.0;
    const double dv0 = surface.dv(g.t0, x0);
    json grad_j{{"mean_A_T", mean_at},
                {"se_A_T", se_at},
                {"dv0", dv0},
                {"gap", mean_at - dv0},
                {"zscore", se_at > 0.0 ? (mean_at - dv0) / se_at : 0.0},
                {"paths", paths},
                {"steps", steps},
                {"excluded", excluded}};

    // Cost-gradient magnitude over a coarse lattice (identically zero for
    // state-independent coefficients).
    double lambda_g_max = 0.0;
    for (int it = 0; it <= 4; ++it)
        for (int ix = 0; ix <= 16; ++ix)
            for (int ia = 1; ia <= 8; ++ia) {
                const double t = g.t0 + (g.maturity - g.t0) * it / 4.0;
                const double x = g.space.lo + (g.space.hi - g.space.lo) * ix / 16.0;
                const double a = 0.25 * ia * std::max(1.0, model.sigma0(t, x));
                lambda_g_max = std::max(lambda_g_max,
                                        std::abs(cost_dx(model, t, x, a, fd_step)));
            }

    // Pathwise change-of-variable residuals on a battery of functionals that
    // are concave in the path value and non-increasing in time.
    const std::size_t ito_paths = ws.cfg.get_size("functional.ito_paths", 16);
    const std::size_t ito_steps = ws.cfg.get_size("functional.ito_steps", 4096);
    const std::uint64_t ito_seed = ws.cfg.get_size("functional.ito_seed", 3);
    const double a_ref = model.sigma0(g.t0, x0);
    const double ito_dt = (g.maturity - g.t0) / static_cast<double>(ito_steps);
    const double tol = 3.0 * a_ref * std::sqrt(ito_dt);
    const double horizon = g.maturity;

    struct Family {
        std::string name;
        FunctionalProbe probe;
    };
    std::vector<Family> families;
    families.push_back({"quad_time_drift", [](std::size_t k, const DiscretePath& p) {
                            const double x = p.values[k];
                            return -x * x - 0.1 * p.times[k];
                        }});
    families.push_back({"time_scaled_quad", [](std::size_t k, const DiscretePath& p) {
                            const double x = p.values[k];
                            return -(1.0 + p.times[k]) * x * x;
                        }});
    families.push_back({"abs_time_scaled", [](std::size_t k, const DiscretePath& p) {
                            return -std::abs(p.values[k]) * (1.0 + p.times[k]);
                        }});
    families.push_back({"integral_projection", [horizon](std::size_t k, const DiscretePath& p) {
                            double m = 0.0;
                            for (std::size_t j = 0; j < k; ++j)
                                m += p.values[j] * (p.times[j + 1] - p.times[j]);
                            const double y = m + p.values[k] * (horizon - p.times[k]);
                            return -y * y;
                        }});

    json fam_json = json::array();
    std::vector<double> times(ito_steps + 1), vals(ito_steps + 1);
    for (std::size_t k = 0; k <= ito_steps; ++k)
        times[k] = g.t0 + static_cast<double>(k) * ito_dt;
    double affine_max_abs = 0.0;
    std::vector<std::size_t> viol_counts(families.size(), 0);
    std::vector<double> max_res(families.size(),
                                -std::numeric_limits<double>::infinity());
    std::vector<double> max_abs(families.size(), 0.0);
    std::size_t residuals_per_family = 0;
    for (std::size_t p = 0; p < ito_paths; ++p) {
        vals[0] = x0;
        for (std::size_t k = 0; k < ito_steps; ++k)
            vals[k + 1] = vals[k] + a_ref * std::sqrt(ito_dt) * normal_draw(ito_seed, p, k);
        const DiscretePath path(times, vals);
        residuals_per_family += ito_steps;
        for (std::size_t fi = 0; fi < families.size(); ++fi) {
            const ItoReport rep = ito_residual(families[fi].probe, path, {});
            for (std::size_t k = 1; k < rep.residual.size(); ++k)
                if (rep.residual[k] > tol) ++viol_counts[fi];
            max_res[fi] = std::max(max_res[fi], rep.max_residual);
            max_abs[fi] = std::max(max_abs[fi], rep.max_abs_residual);
        }
        const FunctionalProbe affine_probe = [](std::size_t k, const DiscretePath& pp) {
            return 2.0 + 3.0 * pp.values[k];
        };
        // A wide bump keeps the central difference exact for affine probes
        // while avoiding subtractive cancellation at small step sizes.
        ItoOptions affine_opts;
        affine_opts.fd_step = 1e-2;
        const ItoReport rep = ito_residual(affine_probe, path, affine_opts);
        affine_max_abs = std::max(affine_max_abs, rep.max_abs_residual);
    }
    for (std::size_t fi = 0; fi < families.size(); ++fi) {
        fam_json.push_back(
            {{"name", families[fi].name},
             {"violation_fraction",
              residuals_per_family
                  ? static_cast<double>(viol_counts[fi]) /
                        static_cast<double>(residuals_per_family)
                  : 0.0},
             {"max_residual", max_res[fi]},
             {"max_abs_residual", max_abs[fi]}});
    }

    json j{{"gradient", grad_j},
           {"cost_gradient_max", lambda_g_max},
           {"ito",
            json{{"families", fam_json},
                 {"paths", ito_paths},
                 {"steps", ito_steps},
                 {"dt", ito_dt},
                 {"tolerance", tol},
                 {"affine_max_abs", affine_max_abs}}}};
    write_text_file(opt.out_dir + "/functional_checks.json", j.dump(2) + "\n");
    return j;
}

}  // namespace

json run_command(const std::string& command, const Config& cfg, const RunOptions& options) {
    ensure_dir(options.out_dir);
    Workspace ws(cfg);
    json results;
    json wall;
    auto timed = [&](const std::string& name, auto&& fn) {
        const auto start = std::chrono::steady_clock::now();
        results[name] = fn();
        const auto end = std::chrono::steady_clock::now();
        wall[name] = std::chrono::duration<double>(end - start).count();
    };

    if (command == "facelift") {
        timed("facelift", [&] { return run_facelift_cmd(ws, options); });
    } else if (command == "solve-hjb") {
        timed("solve-hjb", [&] { return run_solve_hjb_cmd(ws, options); });
    } else if (command == "solve-dp") {
        timed("solve-dp", [&] { return run_solve_dp_cmd(ws, options); });
    } else if (command == "duality-check") {
        timed("duality-check", [&] { return run_duality_cmd(ws, options); });
    } else if (command == "hedge") {
        timed("hedge", [&] { return run_hedge_cmd(ws, options); });
    } else if (command == "functional-check") {
        timed("functional-check", [&] { return run_functional_cmd(ws, options); });
    } else if (command == "all") {
        timed("facelift", [&] { return run_facelift_cmd(ws, options); });
        timed("solve-hjb", [&] { return run_solve_hjb_cmd(ws, options); });
        if (ws.payoff().kind() == Payoff::Kind::Markovian)
            timed("duality-check", [&] { return run_duality_cmd(ws, options); });
        else
            timed("solve-dp", [&] { return run_solve_dp_cmd(ws, options); });
        timed("hedge", [&] { return run_hedge_cmd(ws, options); });
        timed("functional-check", [&] { return run_functional_cmd(ws, options); });
    } else {
        throw ConfigError("unknown command: " + command);
    }

    validate_known_keys(cfg);
    return json{{"results", results}, {"wall_times", wall}};
}

}  // namespace impakt
