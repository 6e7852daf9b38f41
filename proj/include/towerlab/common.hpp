#pragma once

// Small shared helpers: stable log-space arithmetic and least-squares slope
// fitting. Everything downstream works in ln-variables wherever a raw value
// could leave the double range (concentration scales reach 1e-40 and below).

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace towerlab {

inline constexpr double pi = 3.14159265358979323846;

using Field = std::vector<double>;

// ln(e^a + e^b) without overflow; tolerates -inf (empty summand).
inline double log_add(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    double hi = a > b ? a : b;
    double lo = a > b ? b : a;
    return hi + std::log1p(std::exp(lo - hi));
}

inline void require(bool cond, const std::string& what) {
    if (!cond) throw std::invalid_argument(what);
}

inline bool is_finite(double x) { return std::isfinite(x); }

// Geometric grid from a to b inclusive (a, b > 0; n >= 2, or n == 1 with a == b).
inline std::vector<double> log_spaced(double a, double b, int n) {
    require(a > 0.0 && b > 0.0, "log_spaced: endpoints must be positive");
    if (n == 1) {
        require(a == b, "log_spaced: a single point needs equal endpoints");
        return {a};
    }
    require(n >= 2, "log_spaced: need at least one point");
    std::vector<double> out(static_cast<std::size_t>(n));
    const double la = std::log(a), lb = std::log(b);
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = std::exp(la + (lb - la) * i / (n - 1));
    return out;
}

// Ordinary least squares y = a + b x; returns {intercept, slope, rms residual}.
struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double rms_residual = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, "fit_line: need >= 2 points");
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    require(std::abs(det) > 0, "fit_line: degenerate abscissae");
    LineFit f;
    f.slope = (n * sxy - sx * sy) / det;
    f.intercept = (sy - f.slope * sx) / n;
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ss += r * r;
    }
    f.rms_residual = std::sqrt(ss / n);
    return f;
}

}  // namespace towerlab
