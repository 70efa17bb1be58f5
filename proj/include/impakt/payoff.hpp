#pragma once

#include <string>
#include <vector>

namespace impakt {

// Weight measure for the path average a(x) = \int x_t mu(dt). Atomless on
// [0,T); a point mass at T is carried separately so the Markovian case is the
// degenerate mu = delta_T.
struct AveragingMeasure {
    enum class Kind { Uniform, DeltaT };
    Kind kind = Kind::Uniform;

    static AveragingMeasure uniform() { return {Kind::Uniform}; }
    static AveragingMeasure delta_t() { return {Kind::DeltaT}; }

    // Mass of [t0, t1) with 0 <= t0 <= t1 <= horizon.
    double interval_mass(double t0, double t1, double horizon) const {
        return kind == Kind::Uniform ? (t1 - t0) / horizon : 0.0;
    }
    double terminal_atom() const { return kind == Kind::DeltaT ? 1.0 : 0.0; }
    std::string name() const { return kind == Kind::Uniform ? "uniform" : "delta_T"; }
};

// Terminal payoff. Markovian payoffs are functions of x_T with an a.e. slope
// (a fixed subgradient choice at kinks); Asian payoffs are functions of the
// weighted path average.
class Payoff {
  public:
    enum class Kind { Markovian, Asian };

    static Payoff call(double strike);
    static Payoff put(double strike);
    static Payoff digital(double strike);
    static Payoff butterfly(double k1, double k2);
    static Payoff affine(double intercept, double slope);
    // Piecewise-linear from a table; slope is the right-segment slope.
    static Payoff tabulated(std::vector<double> xs, std::vector<double> ys);
    static Payoff asian_linear(AveragingMeasure mu);
    static Payoff asian_call(double strike, AveragingMeasure mu);

    // Parses config expressions: call(1.0), put(0.9), digital(0), butterfly(0.8,1.2),
    // affine(a,b), tabulated(path.csv), asian-linear, asian-call(1.0). CSV tables
    // must have a header line "x,phi". The measure applies to asian-* only.
    static Payoff parse(const std::string& expr,
                        AveragingMeasure mu = AveragingMeasure::uniform());

    Kind kind() const { return kind_; }
    const std::string& name() const { return name_; }

    // Markovian interface (also used as phi(average) for Asian payoffs).
    double value(double x) const;
    double slope(double x) const;

    const AveragingMeasure& mu() const { return mu_; }

  private:
    Payoff() = default;
    Kind kind_ = Kind::Markovian;
    std::string name_;
    int shape_ = 0;  // 0 call, 1 put, 2 digital, 3 butterfly, 4 affine, 5 tabulated
    double k1_ = 0.0, k2_ = 0.0;
    std::vector<double> tab_x_, tab_y_;
    AveragingMeasure mu_;
};

}  // namespace impakt
