#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace impakt {

// Scalar coefficient map (t, x) -> value. The built-in families cover the
// shipped configs; "tabulated" interpolates a user table linearly in x and
// holds the end values constant outside it. All families are time-invariant;
// the (t, x) signature is kept so time-dependent coefficients can be added
// without touching call sites.
class CoefficientMap {
  public:
    static CoefficientMap constant(double value);
    // intercept + slope*x, clamped to [floor_value, cap_value]
    static CoefficientMap affine(double intercept, double slope, double floor_value,
                                 double cap_value);
    // scale * max(x, x_floor)^exponent, clamped to [floor_value, cap_value]
    static CoefficientMap cev_clamped(double scale, double exponent, double x_floor,
                                      double floor_value, double cap_value);
    static CoefficientMap tabulated(std::vector<double> xs, std::vector<double> ys);

    double operator()(double t, double x) const;
    const std::string& family() const { return family_; }
    bool is_constant() const { return family_ == "constant"; }

    // Min/max over [x_lo, x_hi] estimated by dense sampling (built-in families
    // are monotone or piecewise monotone, so 2049 samples are enough in
    // practice for validation purposes).
    std::pair<double, double> range_on(double x_lo, double x_hi) const;

  private:
    CoefficientMap() = default;
    std::string family_;
    double p0_ = 0.0, p1_ = 0.0, p2_ = 0.0, p3_ = 0.0, p4_ = 0.0;
    std::vector<double> tab_x_, tab_y_;
};

// Coefficients of the quadratic running-cost family
//   G(t,x,a) = 0.5*g2(t,x)*a^2 - g1(t,x)*a + g0(t,x).
struct QuadraticCostMaps {
    CoefficientMap g0, g1, g2;
};

struct FenchelPoint {
    double value;   // F_bar(t, x, z)
    double argmax;  // maximizing volatility a*
};

// Envelope/margin constants attached to the model: G <= c_upper*(1+a^2),
// a^2/c_lower - c_lower <= G, and the parabolicity margin eps_margin used by
// the face-lift and the solver's curvature clamp.
struct ModelConstants {
    double c_upper;
    double c_lower;
    // <= 0 means "use the default 1e-3 * sup(1/f)".
    double eps_margin = 0.0;
};

// Box on which coefficient positivity/boundedness is validated at
// construction.
struct ValidationBox {
    double x_lo = -10.0;
    double x_hi = 10.0;
    double a_hi = 10.0;  // control range for the envelope sandwich check
};

// Price-impact model. Impacted volatility sigma0/(1 - f*gamma) with inverse
// (a - sigma0)/(f a) in the control variable, running cost G, its marginal,
// and the Fenchel transform of the curvature Hamiltonian
//   F_bar(t,x,z) = sup_a ( 0.5*a^2*z - G(t,x,a) ).
// The benchmark cost derived from (sigma0, f) is G = (a - sigma0)^2 / (2 f);
// an explicit quadratic family (g0, g1, g2) may replace it, in which case the
// closed forms a* = g1/(g2 - z), F_bar = g1^2/(2(g2-z)) - g0 are used.
// Immutable after construction; safe for concurrent reads.
class ImpactModel {
  public:
    ImpactModel(CoefficientMap sigma0, CoefficientMap f, ModelConstants constants,
                std::optional<QuadraticCostMaps> cost = std::nullopt,
                ValidationBox box = {});

    double sigma0(double t, double x) const { return sigma0_(t, x); }
    double f(double x) const { return f_(0.0, x); }
    bool has_custom_cost() const { return cost_.has_value(); }

    // Quadratic cost coefficients; derived from (sigma0, f) for the benchmark.
    double g0(double t, double x) const;
    double g1(double t, double x) const;
    double g2(double t, double x) const;

    // sigma0/(1 - f*gamma) for f*gamma < 1, +infinity otherwise (inadmissible
    // gamma). With a custom cost this generalizes to g1/(g2 - gamma).
    double sigma_impacted(double t, double x, double gamma) const;

    // Inverse of the above in the volatility variable: gamma with
    // sigma_impacted(gamma) = a. Returns -infinity at a = 0; throws
    // std::domain_error for a < 0.
    double sigma_inverse(double t, double x, double a) const;

    // Running cost G(t,x,a); requires a >= 0.
    double running_cost(double t, double x, double a) const;

    // dG/da; requires a > 0.
    double marginal_cost(double t, double x, double a) const;

    // Cost as a function of gamma: F(t,x,gamma) = G(t,x,sigma_impacted(gamma)),
    // +infinity on inadmissible gamma.
    double cost_of_gamma(double t, double x, double gamma) const;

    // Fenchel transform of the running cost in the curvature variable.
    // Requires z < g2(t,x); callers clamp at g2 - eps_margin beforehand.
    FenchelPoint fenchel(double t, double x, double z) const;

    double c_upper() const { return c_upper_; }
    double c_lower() const { return c_lower_; }
    double eps_margin() const { return eps_margin_; }
    bool is_time_invariant() const { return true; }  // all built-in families are

    // Returns violations of the cost sandwich a^2/C - C <= G <= C0*(1+a^2)
    // sampled over the validation box; empty when the configured constants
    // hold.
    std::vector<std::string> envelope_violations() const;

  private:
    CoefficientMap sigma0_;
    CoefficientMap f_;
    std::optional<QuadraticCostMaps> cost_;
    double c_upper_;
    double c_lower_;
    double eps_margin_;
    ValidationBox box_;
};

}  // namespace impakt
