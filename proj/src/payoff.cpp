#include "impakt/payoff.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "impakt/errors.hpp"

namespace impakt {

namespace {

bool table_ok(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2) return false;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        if (!(xs[i] < xs[i + 1])) return false;
    for (double v : xs)
        if (!std::isfinite(v)) return false;
    for (double v : ys)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace

Payoff Payoff::call(double strike) {
    Payoff p;
    p.shape_ = 0;
    p.k1_ = strike;
    p.name_ = "call";
    return p;
}

Payoff Payoff::put(double strike) {
    Payoff p;
    p.shape_ = 1;
    p.k1_ = strike;
    p.name_ = "put";
    return p;
}

Payoff Payoff::digital(double strike) {
    Payoff p;
    p.shape_ = 2;
    p.k1_ = strike;
    p.name_ = "digital";
    return p;
}

Payoff Payoff::butterfly(double k1, double k2) {
    if (!(k1 < k2)) throw ConfigError("butterfly payoff requires k1 < k2");
    Payoff p;
    p.shape_ = 3;
    p.k1_ = k1;
    p.k2_ = k2;
    p.name_ = "butterfly";
    return p;
}

Payoff Payoff::affine(double intercept, double slope) {
    Payoff p;
    p.shape_ = 4;
    p.k1_ = intercept;
    p.k2_ = slope;
    p.name_ = "affine";
    return p;
}

Payoff Payoff::tabulated(std::vector<double> xs, std::vector<double> ys) {
    if (!table_ok(xs, ys))
        throw ConfigError("tabulated payoff needs >= 2 strictly increasing finite (x, phi) rows");
    Payoff p;
    p.shape_ = 5;
    p.tab_x_ = std::move(xs);
    p.tab_y_ = std::move(ys);
    p.name_ = "tabulated";
    return p;
}

Payoff Payoff::asian_linear(AveragingMeasure mu) {
    Payoff p = Payoff::affine(0.0, 1.0);
    p.kind_ = Kind::Asian;
    p.mu_ = mu;
    p.name_ = "asian-linear";
    return p;
}

Payoff Payoff::asian_call(double strike, AveragingMeasure mu) {
    Payoff p = Payoff::call(strike);
    p.kind_ = Kind::Asian;
    p.mu_ = mu;
    p.name_ = "asian-call";
    return p;
}

double Payoff::value(double x) const {
    switch (shape_) {
        case 0: return std::max(x - k1_, 0.0);
        case 1: return std::max(k1_ - x, 0.0);
        case 2: return x >= k1_ ? 1.0 : 0.0;
        case 3: {
            const double mid = 0.5 * (k1_ + k2_);
            return std::max(x - k1_, 0.0) - 2.0 * std::max(x - mid, 0.0) +
                   std::max(x - k2_, 0.0);
        }
        case 4: return k1_ + k2_ * x;
        default: {
            // Piecewise linear with end-segment linear extension.
            const auto& xs = tab_x_;
            const auto& ys = tab_y_;
            std::size_t hi = std::upper_bound(xs.begin(), xs.end(), x) - xs.begin();
            std::size_t j = hi == 0 ? 0 : (hi >= xs.size() ? xs.size() - 2 : hi - 1);
            const double w = (x - xs[j]) / (xs[j + 1] - xs[j]);
            return ys[j] + w * (ys[j + 1] - ys[j]);
        }
    }
}

double Payoff::slope(double x) const {
    switch (shape_) {
        case 0: return x > k1_ ? 1.0 : 0.0;
        case 1: return x < k1_ ? -1.0 : 0.0;
        case 2: return 0.0;
        case 3: {
            const double mid = 0.5 * (k1_ + k2_);
            if (x <= k1_ || x >= k2_) return 0.0;
            return x < mid ? 1.0 : -1.0;
        }
        case 4: return k2_;
        default: {
            const auto& xs = tab_x_;
            const auto& ys = tab_y_;
            std::size_t hi = std::upper_bound(xs.begin(), xs.end(), x) - xs.begin();
            std::size_t j = hi == 0 ? 0 : (hi >= xs.size() ? xs.size() - 2 : hi - 1);
            return (ys[j + 1] - ys[j]) / (xs[j + 1] - xs[j]);
        }
    }
}

namespace {

std::vector<double> parse_args(const std::string& inside, const std::string& expr) {
    std::vector<double> out;
    std::stringstream ss(inside);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::size_t pos = 0;
        double v;
        try {
            v = std::stod(tok, &pos);
        } catch (const std::exception&) {
            throw ConfigError("bad numeric argument in payoff expression: " + expr);
        }
        while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
        if (pos != tok.size())
            throw ConfigError("bad numeric argument in payoff expression: " + expr);
        out.push_back(v);
    }
    return out;
}

Payoff load_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open payoff table: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty payoff table: " + path);
    std::vector<double> xs, ys;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string a, b;
        if (!std::getline(row, a, ',') || !std::getline(row, b))
            throw ConfigError("malformed row in payoff table " + path + ": " + line);
        try {
            xs.push_back(std::stod(a));
            ys.push_back(std::stod(b));
        } catch (const std::exception&) {
            throw ConfigError("malformed row in payoff table " + path + ": " + line);
        }
    }
    return Payoff::tabulated(std::move(xs), std::move(ys));
}

}  // namespace

Payoff Payoff::parse(const std::string& expr, AveragingMeasure mu) {
    std::string s = expr;
    s.erase(std::remove_if(s.begin(), s.end(),
                           [](unsigned char c) { return std::isspace(c); }),
            s.end());
    std::string head = s, inside;
    const std::size_t open = s.find('(');
    if (open != std::string::npos) {
        if (s.back() != ')') throw ConfigError("unbalanced parentheses in payoff: " + expr);
        head = s.substr(0, open);
        inside = s.substr(open + 1, s.size() - open - 2);
    }
    auto want = [&](std::size_t n, const std::vector<double>& args) {
        if (args.size() != n)
            throw ConfigError("payoff " + head + " expects " + std::to_string(n) +
                              " argument(s): " + expr);
    };
    if (head == "tabulated") {
        if (inside.empty()) throw ConfigError("tabulated payoff needs a csv path: " + expr);
        return load_table(inside);
    }
    if (head == "asian-linear") {
        if (!inside.empty()) throw ConfigError("asian-linear takes no arguments: " + expr);
        return asian_linear(mu);
    }
    const std::vector<double> args = parse_args(inside, expr);
    if (head == "call") { want(1, args); return call(args[0]); }
    if (head == "put") { want(1, args); return put(args[0]); }
    if (head == "digital") { want(1, args); return digital(args[0]); }
    if (head == "butterfly") { want(2, args); return butterfly(args[0], args[1]); }
    if (head == "affine") { want(2, args); return affine(args[0], args[1]); }
    if (head == "asian-call") { want(1, args); return asian_call(args[0], mu); }
    throw ConfigError("unknown payoff family: " + expr);
}

}  // namespace impakt
