#pragma once

#include <cstdint>

namespace impakt {

// Counter-based random numbers: every draw is a pure function of
// (seed, stream, step), so Monte Carlo results are bitwise reproducible
// regardless of evaluation order or worker count. The mixer is the SplitMix64
// finalizer applied to the combined key words.

std::uint64_t mix64(std::uint64_t z);

// Uniform draw in the open interval (0, 1).
double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t step);

// Standard normal draw via the inverse CDF.
double normal_draw(std::uint64_t seed, std::uint64_t stream, std::uint64_t step);

// Inverse of the standard normal CDF (Wichura's AS 241, double precision).
double inverse_normal_cdf(double p);

double normal_cdf(double x);
double normal_pdf(double x);

}  // namespace impakt
