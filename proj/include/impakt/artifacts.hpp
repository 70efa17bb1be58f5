#pragma once

#include <cstdint>
#include <string>

#include "impakt/dual_dp.hpp"
#include "impakt/facelift.hpp"
#include "impakt/hedge_engine.hpp"
#include "impakt/hjb_solver.hpp"

namespace impakt {

// Shortest-exact decimal for doubles in CSV output (%.17g).
std::string format_g17(double v);

void ensure_dir(const std::string& dir);
void write_text_file(const std::string& path, const std::string& content);

// FNV-1a 64-bit hex digest, used to fingerprint config payloads.
std::string fnv1a_hex(const std::string& text);

// Columns: t,x,v,dv,d2v,a_star,gamma_hat. Writes every layer_stride-th stored
// layer plus the first and last.
void write_value_surface_csv(const std::string& path, const ValueSurface& surface,
                             std::size_t layer_stride);

// Columns: x,phi,phi_hat,shift,hull_vertex.
void write_facelift_csv(const std::string& path, const FaceliftResult& result);

// Columns: x,value,policy (the t0 layer).
void write_dp_value_csv(const std::string& path, const DpResult& result);

// Columns: x,m,value (the t0 layer of the augmented solve).
void write_dp_value_csv(const std::string& path, const AsianDpResult& result);

// Columns: path,x_terminal,v_terminal,payoff,error,cost,excluded.
void write_hedge_paths_csv(const std::string& path, const HedgeResult& result,
                           std::size_t max_rows);

}  // namespace impakt
