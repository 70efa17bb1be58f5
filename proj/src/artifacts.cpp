#include "impakt/artifacts.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "impakt/errors.hpp"

namespace impakt {

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
}

void write_text_file(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) ensure_dir(p.parent_path().string());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file for writing: " + path);
    out << content;
    if (!out) throw ConfigError("failed writing output file: " + path);
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_value_surface_csv(const std::string& path, const ValueSurface& surface,
                             std::size_t layer_stride) {
    if (layer_stride == 0) layer_stride = 1;
    const ImpactModel& model = surface.model();
    const UniformGrid& gx = surface.grid().space;
    std::string out = "t,x,v,dv,d2v,a_star,gamma_hat\n";
    const std::size_t last = surface.stored_layers() - 1;
    for (std::size_t j = 0; j < surface.stored_layers(); ++j) {
        if (j % layer_stride != 0 && j != last) continue;
        const double t = surface.stored_time(j);
        auto v = surface.layer(j);
        auto d1 = surface.layer_dv(j);
        auto d2 = surface.layer_d2v(j);
        for (std::size_t i = 0; i < gx.n; ++i) {
            const double x = gx.node(i);
            const double z = std::min(d2[i], model.g2(t, x) - model.eps_margin());
            const double a = model.fenchel(t, x, z).argmax;
            const double gam = model.sigma_inverse(t, x, a);
            out += format_g17(t);
            out += ',';
            out += format_g17(x);
            out += ',';
            out += format_g17(v[i]);
            out += ',';
            out += format_g17(d1[i]);
            out += ',';
            out += format_g17(d2[i]);
            out += ',';
            out += format_g17(a);
            out += ',';
            out += format_g17(gam);
            out += '\n';
        }
    }
    write_text_file(path, out);
}

void write_facelift_csv(const std::string& path, const FaceliftResult& result) {
    std::string out = "x,phi,phi_hat,shift,hull_vertex\n";
    for (std::size_t i = 0; i < result.grid.n; ++i) {
        out += format_g17(result.grid.node(i));
        out += ',';
        out += format_g17(result.phi[i]);
        out += ',';
        out += format_g17(result.phi_hat[i]);
        out += ',';
        out += format_g17(result.shift[i]);
        out += ',';
        out += result.hull_vertex[i] ? '1' : '0';
        out += '\n';
    }
    write_text_file(path, out);
}

void write_dp_value_csv(const std::string& path, const DpResult& result) {
    std::string out = "x,value,policy\n";
    auto v = result.layer(0);
    auto p = result.policy_layer(0);
    for (std::size_t i = 0; i < result.grid.space.n; ++i) {
        out += format_g17(result.grid.space.node(i));
        out += ',';
        out += format_g17(v[i]);
        out += ',';
        out += format_g17(p[i]);
        out += '\n';
    }
    write_text_file(path, out);
}

void write_dp_value_csv(const std::string& path, const AsianDpResult& result) {
    std::string out = "x,m,value\n";
    for (std::size_t i = 0; i < result.grid.space.n; ++i)
        for (std::size_t j = 0; j < result.average.n; ++j) {
            out += format_g17(result.grid.space.node(i));
            out += ',';
            out += format_g17(result.average.node(j));
            out += ',';
            out += format_g17(result.v0[i * result.average.n + j]);
            out += '\n';
        }
    write_text_file(path, out);
}

void write_hedge_paths_csv(const std::string& path, const HedgeResult& result,
                           std::size_t max_rows) {
    std::string out = "path,x_terminal,v_terminal,payoff,error,cost,excluded\n";
    const std::size_t rows = std::min<std::size_t>(result.records.size(), max_rows);
    for (std::size_t i = 0; i < rows; ++i) {
        const HedgePathRecord& r = result.records[i];
        out += std::to_string(r.path);
        out += ',';
        out += format_g17(r.x_terminal);
        out += ',';
        out += format_g17(r.v_terminal);
        out += ',';
        out += format_g17(r.payoff);
        out += ',';
        out += format_g17(r.error);
        out += ',';
        out += format_g17(r.cost);
        out += ',';
        out += r.excluded ? '1' : '0';
        out += '\n';
    }
    write_text_file(path, out);
}

}  // namespace impakt
