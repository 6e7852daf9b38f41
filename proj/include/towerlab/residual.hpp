#pragma once

// Error fields of the ansatz W:
//
//   R = -Lap W - lambda (e^W - e^{-W})        (how far W is from solving)
//   S = lambda (e^W + e^{-W}) - V             (linearization vs bubble potential)
//   N(phi) = lambda [f(W+phi) - f(W) - f'(W) phi]   (quadratic remainder)
//
// -Lap W is known in closed form: each projected bubble contributes its own
// density rho_i = r^(alpha_i-2) e^{w_i} with the ansatz sign (the harmonic
// correction drops out), so no numerical differentiation enters.
//
// The subtle part is evaluating lambda e^{+-W}. On the annulus where bubble j
// dominates, lambda e^{(-1)^j W} = rho_j e^{Theta_j} *exactly* (Theta_j is
// the log mismatch, computed stably in tower.hpp), and the opposite
// exponential is lambda^2 / (rho_j e^{Theta_j}). Subtracting rho_j then uses
// expm1(Theta_j), so the leading-order cancellation — two quantities each many
// orders of magnitude larger than their difference — happens analytically
// instead of in floating point. Setting Theta_j = 0 would kill the dominant
// term identically, which is the structure the scaling laws rest on.

#include <algorithm>
#include <cmath>
#include <vector>

#include "towerlab/common.hpp"
#include "towerlab/mesh.hpp"
#include "towerlab/profiles.hpp"
#include "towerlab/tower.hpp"

namespace towerlab {

// The three mechanisms at one radius: the dominant bubble's own mismatch,
// the opposite-sign exponential, and the other bubbles' tails.
struct ResidualParts {
    int j = 1;            // dominating level (1-based)
    double self = 0.0;    // -(-1)^j rho_j expm1(Theta_j)
    double opposite = 0.0;// (-1)^j lambda^2 / (rho_j e^{Theta_j})
    double cross = 0.0;   // sum_{i != j} (-1)^i rho_i
    double total() const { return self + opposite + cross; }
};

inline ResidualParts residual_parts(const Ansatz& a, double r) {
    const BubbleParams& p = a.params;
    ResidualParts out;
    if (p.k == 0) return out;  // W == 0: the equation is satisfied exactly

    const int j = a.annuli.annulus_of(r);
    out.j = j;
    const double sj = BubbleParams::sign(j - 1);
    const double theta = a.theta_at_radius(j, r);
    const double log_rho_j =
        log_profile_density(p.alpha[j - 1], p.log_delta[j - 1], r);

    out.self = -sj * std::exp(log_rho_j) * std::expm1(theta);
    out.opposite = sj * std::exp(2.0 * p.log_lambda - log_rho_j - theta);
    for (int i = 0; i < p.k; ++i) {
        if (i == j - 1) continue;
        out.cross += BubbleParams::sign(i) *
                     std::exp(log_profile_density(p.alpha[i], p.log_delta[i], r));
    }
    return out;
}

inline double residual_at(const Ansatz& a, double r) {
    return residual_parts(a, r).total();
}

// R sampled on the ansatz mesh.
inline Field residual_field(const Ansatz& a) {
    Field out(static_cast<size_t>(a.mesh.n));
    for (int i = 0; i < a.mesh.n; ++i) out[static_cast<size_t>(i)] = residual_at(a, a.mesh.r(i));
    return out;
}

// lambda e^{+W} and lambda e^{-W} through the same exact rewriting. Returned
// as a pair (plus, minus); both are positive and finite for any tower in the
// asymptotic regime, with no exp(W) ever formed directly.
struct ExponentialPair {
    double plus = 0.0;
    double minus = 0.0;
};

inline ExponentialPair lambda_exponentials(const Ansatz& a, double r) {
    const BubbleParams& p = a.params;
    ExponentialPair out;
    if (p.k == 0) {
        out.plus = out.minus = p.lambda;
        return out;
    }
    const int j = a.annuli.annulus_of(r);
    const double theta = a.theta_at_radius(j, r);
    const double log_rho_j =
        log_profile_density(p.alpha[j - 1], p.log_delta[j - 1], r);
    const double log_dom = log_rho_j + theta;            // lambda e^{(-1)^j W}
    const double log_opp = 2.0 * p.log_lambda - log_dom; // lambda e^{-(-1)^j W}
    if (j % 2 == 0) {
        out.plus = std::exp(log_dom);
        out.minus = std::exp(log_opp);
    } else {
        out.plus = std::exp(log_opp);
        out.minus = std::exp(log_dom);
    }
    return out;
}

// S = lambda(e^W + e^{-W}) - sum_i rho_i, with the dominant rho_j folded into
// an expm1 so the near-cancellation on each annulus is exact.
inline double linear_error_at(const Ansatz& a, double r) {
    const BubbleParams& p = a.params;
    if (p.k == 0) return 2.0 * p.lambda;

    const int j = a.annuli.annulus_of(r);
    const double theta = a.theta_at_radius(j, r);
    const double log_rho_j =
        log_profile_density(p.alpha[j - 1], p.log_delta[j - 1], r);
    double s = std::exp(log_rho_j) * std::expm1(theta) +
               std::exp(2.0 * p.log_lambda - log_rho_j - theta);
    for (int i = 0; i < p.k; ++i) {
        if (i == j - 1) continue;
        s -= std::exp(log_profile_density(p.alpha[i], p.log_delta[i], r));
    }
    return s;
}

inline Field linear_error_field(const Ansatz& a) {
    Field out(static_cast<size_t>(a.mesh.n));
    for (int i = 0; i < a.mesh.n; ++i)
        out[static_cast<size_t>(i)] = linear_error_at(a, a.mesh.r(i));
    return out;
}

// N(phi) = lambda e^W (e^phi - 1 - phi) - lambda e^{-W} (e^{-phi} - 1 + phi).
// Both brackets are O(phi^2); expm1 keeps them accurate for small phi.
inline double nonlinear_term_at(const Ansatz& a, double r, double phi) {
    const ExponentialPair e = lambda_exponentials(a, r);
    return e.plus * (std::expm1(phi) - phi) - e.minus * (std::expm1(-phi) + phi);
}

inline Field nonlinear_term(const Ansatz& a, const Field& phi) {
    require(phi.size() == static_cast<size_t>(a.mesh.n),
            "nonlinear_term: phi must be sampled on the ansatz mesh");
    Field out(phi.size());
    for (int i = 0; i < a.mesh.n; ++i)
        out[static_cast<size_t>(i)] = nonlinear_term_at(a, a.mesh.r(i), phi[static_cast<size_t>(i)]);
    return out;
}

// --- weighted L^p norms --------------------------------------------------

struct NormReport {
    double p = 1.0;
    double total = 0.0;                    // || f ||_{L^p, 2D radial}
    std::vector<double> per_annulus;       // same norm restricted to each ring
    double quadrature_error_estimate = 0.0;// Richardson h vs 2h on the integral
};

namespace detail {

// integral of g(s) e^{2 s} ds over [sa, sb] using the trapezoid rule on the
// mesh, cut off at the interval ends; stride > 1 coarsens for the error
// estimate.
inline double weighted_trapezoid(const LogRadialMesh& mesh, const Field& g,
                                 double sa, double sb, int stride) {
    const int n = mesh.n;
    auto val = [&](int i) { return g[static_cast<size_t>(i)] * std::exp(2.0 * mesh.s(i)); };
    double acc = 0.0;
    for (int i = 0; i < n - 1; i += stride) {
        const int jn = std::min(i + stride, n - 1);  // trailing panel may be short
        double lo = mesh.s(i), hi = mesh.s(jn);
        double flo = val(i), fhi = val(jn);
        if (hi <= sa || lo >= sb) continue;
        if (lo < sa) {  // clip the cell on the left, interpolating linearly
            const double t = (sa - lo) / (hi - lo);
            flo = flo + t * (fhi - flo);
            lo = sa;
        }
        if (hi > sb) {
            const double t = (sb - mesh.s(i)) / (mesh.s(jn) - mesh.s(i));
            fhi = val(i) + t * (val(jn) - val(i));
            hi = sb;
        }
        acc += 0.5 * (flo + fhi) * (hi - lo);
    }
    return acc;
}

}  // namespace detail

// L^p norm of a radial field sampled on the mesh, split over the annuli of
// the decomposition. The disk r < r_min missing from the log mesh is closed
// with the flat patch pi r_min^2 |f(r_min)|^p.
inline NormReport lp_norm(const LogRadialMesh& mesh, const Field& f, double p,
                          const AnnulusDecomposition& annuli) {
    require(f.size() == static_cast<size_t>(mesh.n), "lp_norm: field/mesh size mismatch");
    require(p >= 1.0, "lp_norm: p must be >= 1");
    NormReport rep;
    rep.p = p;

    Field g(f.size());
    for (size_t i = 0; i < f.size(); ++i) g[i] = std::pow(std::abs(f[i]), p);

    const double center = pi * std::exp(2.0 * mesh.s_min) * g.front();
    double total_fine = center, total_coarse = center;
    rep.per_annulus.assign(annuli.radii.size() - 1, 0.0);
    for (size_t j = 0; j + 1 < annuli.radii.size(); ++j) {
        const double sa = (j == 0) ? mesh.s_min : std::log(annuli.radii[j]);
        const double sb = std::log(annuli.radii[j + 1]);
        const double piece = 2.0 * pi * detail::weighted_trapezoid(mesh, g, sa, sb, 1);
        rep.per_annulus[j] = std::pow(piece + (j == 0 ? center : 0.0), 1.0 / p);
        total_fine += piece;
        total_coarse += 2.0 * pi * detail::weighted_trapezoid(mesh, g, sa, sb, 2);
    }
    rep.total = std::pow(total_fine, 1.0 / p);
    if (total_fine > 0.0) {
        const double dI = std::abs(total_fine - total_coarse) / 3.0;
        rep.quadrature_error_estimate = rep.total * dI / (p * total_fine);
    }
    return rep;
}

// Whole-mesh variant when no annulus structure is wanted.
inline NormReport lp_norm(const LogRadialMesh& mesh, const Field& f, double p) {
    AnnulusDecomposition one;
    one.k = 1;
    one.radii = {0.0, mesh.r_max()};
    return lp_norm(mesh, f, p, one);
}

// --- scaling fits ---------------------------------------------------------

// Expected decay rate of ||R||_{L^p} in lambda for a k-level tower.
inline double predicted_exponent(int k, double p) {
    require(k >= 1, "predicted_exponent: k must be >= 1");
    require(p >= 1.0 && p < 2.0, "predicted_exponent: p must lie in [1, 2)");
    return (2.0 - p) / (2.0 * p * (2.0 * k - 1.0));
}

struct ScalingFit {
    double slope = 0.0;      // d ln(norm) / d ln(lambda)
    double intercept = 0.0;
    double rms_residual = 0.0;
    double predicted = 0.0;
    bool meets_prediction = true;  // slope >= predicted - 0.05
};

inline ScalingFit scaling_fit(const std::vector<double>& lambdas,
                              const std::vector<double>& norms,
                              double predicted) {
    require(lambdas.size() == norms.size() && lambdas.size() >= 2,
            "scaling_fit: need matching lists with at least two points");
    std::vector<double> x, y;
    x.reserve(lambdas.size());
    y.reserve(lambdas.size());
    for (size_t i = 0; i < lambdas.size(); ++i) {
        require(lambdas[i] > 0.0 && norms[i] > 0.0,
                "scaling_fit: lambdas and norms must be positive");
        x.push_back(std::log(lambdas[i]));
        y.push_back(std::log(norms[i]));
    }
    const LineFit line = fit_line(x, y);
    ScalingFit out;
    out.slope = line.slope;
    out.intercept = line.intercept;
    out.rms_residual = line.rms_residual;
    out.predicted = predicted;
    out.meets_prediction = line.slope >= predicted - 0.05;
    return out;
}

}  // namespace towerlab
