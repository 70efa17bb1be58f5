#include "impakt/impact_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "impakt/errors.hpp"

namespace impakt {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// CoefficientMap
// ---------------------------------------------------------------------------

CoefficientMap CoefficientMap::constant(double value) {
    CoefficientMap m;
    m.family_ = "constant";
    m.p0_ = value;
    return m;
}

CoefficientMap CoefficientMap::affine(double intercept, double slope, double floor_value,
                                      double cap_value) {
    if (!(floor_value <= cap_value))
        throw ConfigError("CoefficientMap::affine: floor must not exceed cap");
    CoefficientMap m;
    m.family_ = "affine";
    m.p0_ = intercept;
    m.p1_ = slope;
    m.p2_ = floor_value;
    m.p3_ = cap_value;
    return m;
}

CoefficientMap CoefficientMap::cev_clamped(double scale, double exponent, double x_floor,
                                           double floor_value, double cap_value) {
    if (!(floor_value <= cap_value))
        throw ConfigError("CoefficientMap::cev_clamped: floor must not exceed cap");
    if (!(x_floor > 0.0))
        throw ConfigError("CoefficientMap::cev_clamped: x_floor must be positive");
    CoefficientMap m;
    m.family_ = "cev-clamped";
    m.p0_ = scale;
    m.p1_ = exponent;
    m.p2_ = x_floor;
    m.p3_ = floor_value;
    m.p4_ = cap_value;
    return m;
}

CoefficientMap CoefficientMap::tabulated(std::vector<double> xs, std::vector<double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw ConfigError("CoefficientMap::tabulated: need >= 2 matching samples");
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1]))
            throw ConfigError("CoefficientMap::tabulated: x column must be strictly increasing");
    CoefficientMap m;
    m.family_ = "tabulated";
    m.tab_x_ = std::move(xs);
    m.tab_y_ = std::move(ys);
    return m;
}

double CoefficientMap::operator()(double /*t*/, double x) const {
    if (family_ == "constant") return p0_;
    if (family_ == "affine") return std::clamp(p0_ + p1_ * x, p2_, p3_);
    if (family_ == "cev-clamped")
        return std::clamp(p0_ * std::pow(std::max(x, p2_), p1_), p3_, p4_);
    // tabulated: linear interpolation, constant extension
    if (x <= tab_x_.front()) return tab_y_.front();
    if (x >= tab_x_.back()) return tab_y_.back();
    const auto it = std::upper_bound(tab_x_.begin(), tab_x_.end(), x);
    const auto k = static_cast<std::size_t>(it - tab_x_.begin());  // x < tab_x_[k]
    const double w = (x - tab_x_[k - 1]) / (tab_x_[k] - tab_x_[k - 1]);
    return tab_y_[k - 1] + (tab_y_[k] - tab_y_[k - 1]) * w;
}

std::pair<double, double> CoefficientMap::range_on(double x_lo, double x_hi) const {
    constexpr std::size_t kSamples = 2049;
    double lo = kInf, hi = -kInf;
    for (std::size_t i = 0; i < kSamples; ++i) {
        const double x =
            x_lo + (x_hi - x_lo) * static_cast<double>(i) / static_cast<double>(kSamples - 1);
        const double v = (*this)(0.0, x);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    // Table breakpoints may fall between samples.
    if (family_ == "tabulated") {
        for (std::size_t i = 0; i < tab_x_.size(); ++i) {
            if (tab_x_[i] >= x_lo && tab_x_[i] <= x_hi) {
                lo = std::min(lo, tab_y_[i]);
                hi = std::max(hi, tab_y_[i]);
            }
        }
    }
    return {lo, hi};
}

// ---------------------------------------------------------------------------
// ImpactModel
// ---------------------------------------------------------------------------

ImpactModel::ImpactModel(CoefficientMap sigma0, CoefficientMap f, ModelConstants constants,
                         std::optional<QuadraticCostMaps> cost, ValidationBox box)
    : sigma0_(std::move(sigma0)),
      f_(std::move(f)),
      cost_(std::move(cost)),
      c_upper_(constants.c_upper),
      c_lower_(constants.c_lower),
      eps_margin_(constants.eps_margin),
      box_(box) {
    const auto [s_lo, s_hi] = sigma0_.range_on(box_.x_lo, box_.x_hi);
    const auto [f_lo, f_hi] = f_.range_on(box_.x_lo, box_.x_hi);
    if (!(s_lo > 0.0) || !std::isfinite(s_hi))
        throw ConfigError("ImpactModel: sigma0 must be strictly positive and bounded");
    if (!(f_lo > 0.0) || !std::isfinite(f_hi))
        throw ConfigError("ImpactModel: f must be bounded away from 0 and bounded");
    if (!(c_upper_ > 0.0) || !(c_lower_ > 0.0))
        throw ConfigError("ImpactModel: envelope constants must be positive");
    if (eps_margin_ <= 0.0) eps_margin_ = 1e-3 / f_hi;  // default: 1e-3 * inf(1/f)
    if (cost_) {
        const auto [g2_lo, g2_hi] = cost_->g2.range_on(box_.x_lo, box_.x_hi);
        const auto [g1_lo, g1_hi] = cost_->g1.range_on(box_.x_lo, box_.x_hi);
        if (!(g2_lo > 0.0) || !std::isfinite(g2_hi))
            throw ConfigError("ImpactModel: quadratic cost requires g2 > 0 bounded");
        if (!(g1_lo > 0.0) || !std::isfinite(g1_hi))
            throw ConfigError("ImpactModel: quadratic cost requires g1 > 0 bounded");
    }
    if (auto bad = envelope_violations(); !bad.empty()) throw ConfigError(bad.front());
}

double ImpactModel::g0(double t, double x) const {
    if (cost_) return cost_->g0(t, x);
    const double s = sigma0_(t, x);
    return s * s / (2.0 * f_(0.0, x));
}

double ImpactModel::g1(double t, double x) const {
    if (cost_) return cost_->g1(t, x);
    return sigma0_(t, x) / f_(0.0, x);
}

double ImpactModel::g2(double t, double x) const {
    if (cost_) return cost_->g2(t, x);
    return 1.0 / f_(0.0, x);
}

double ImpactModel::sigma_impacted(double t, double x, double gamma) const {
    if (cost_) {
        const double c2 = cost_->g2(t, x);
        if (gamma >= c2) return kInf;
        return cost_->g1(t, x) / (c2 - gamma);
    }
    const double fg = f_(0.0, x) * gamma;
    if (fg >= 1.0) return kInf;
    return sigma0_(t, x) / (1.0 - fg);
}

double ImpactModel::sigma_inverse(double t, double x, double a) const {
    if (a < 0.0) throw std::domain_error("sigma_inverse: a must be non-negative");
    if (a == 0.0) return -kInf;
    return marginal_cost(t, x, a) / a;
}

double ImpactModel::running_cost(double t, double x, double a) const {
    if (a < 0.0) throw std::domain_error("running_cost: a must be non-negative");
    if (cost_) return 0.5 * cost_->g2(t, x) * a * a - cost_->g1(t, x) * a + cost_->g0(t, x);
    const double d = a - sigma0_(t, x);
    return d * d / (2.0 * f_(0.0, x));
}

double ImpactModel::marginal_cost(double t, double x, double a) const {
    if (a <= 0.0) throw std::domain_error("marginal_cost: a must be positive");
    if (cost_) return cost_->g2(t, x) * a - cost_->g1(t, x);
    return (a - sigma0_(t, x)) / f_(0.0, x);
}

double ImpactModel::cost_of_gamma(double t, double x, double gamma) const {
    const double a = sigma_impacted(t, x, gamma);
    if (!std::isfinite(a)) return kInf;
    return running_cost(t, x, a);
}

FenchelPoint ImpactModel::fenchel(double t, double x, double z) const {
    if (cost_) {
        const double c2 = cost_->g2(t, x);
        if (z >= c2)
            throw PreconditionError("fenchel: curvature z >= g2 (degenerate parabolicity)");
        const double c1 = cost_->g1(t, x);
        const double denom = c2 - z;
        return {c1 * c1 / (2.0 * denom) - cost_->g0(t, x), c1 / denom};
    }
    const double fv = f_(0.0, x);
    if (fv * z >= 1.0)
        throw PreconditionError("fenchel: curvature z >= 1/f (degenerate parabolicity)");
    const double s = sigma0_(t, x);
    const double one_minus = 1.0 - fv * z;
    return {s * s * z / (2.0 * one_minus), s / one_minus};
}

std::vector<std::string> ImpactModel::envelope_violations() const {
    std::vector<std::string> out;
    constexpr std::size_t kX = 65, kA = 129;
    double worst_up = 0.0, worst_lo = 0.0;
    for (std::size_t i = 0; i < kX; ++i) {
        const double x =
            box_.x_lo + (box_.x_hi - box_.x_lo) * static_cast<double>(i) / double(kX - 1);
        for (std::size_t j = 0; j < kA; ++j) {
            const double a = box_.a_hi * static_cast<double>(j) / double(kA - 1);
            const double g = running_cost(0.0, x, a);
            worst_up = std::max(worst_up, g - c_upper_ * (1.0 + a * a));
            worst_lo = std::max(worst_lo, (a * a / c_lower_ - c_lower_) - g);
        }
    }
    if (worst_up > 0.0) {
        std::ostringstream os;
        os << "ImpactModel: G exceeds c_upper*(1+a^2) by " << worst_up
           << " on the validation box; increase model.c_upper";
        out.push_back(os.str());
    }
    if (worst_lo > 0.0) {
        std::ostringstream os;
        os << "ImpactModel: G falls below a^2/c_lower - c_lower by " << worst_lo
           << " on the validation box; increase model.c_lower";
        out.push_back(os.str());
    }
    return out;
}

}  // namespace impakt
