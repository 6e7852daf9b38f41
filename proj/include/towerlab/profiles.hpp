#pragma once

// Closed-form singular Liouville profiles
//
//     w(r) = ln( 2 a^2 d^a / (d^a + r^a)^2 ),        a = alpha, d = delta,
//
// which solve -Lap w = r^(a-2) e^w on the whole plane with total density mass
// 4*pi*a, together with the kernel of the linearization at the profile and
// the weighted-space transform used to analyse it. All evaluations run in
// log-space: delta^alpha underflows raw doubles long before the parameter
// regimes of interest are reached, ln(delta) does not.

#include <cmath>
#include <functional>
#include <vector>

#include "towerlab/common.hpp"
#include "towerlab/mesh.hpp"
#include "towerlab/quadrature.hpp"

namespace towerlab {

struct Profile {
    double alpha = 2.0;
    double log_delta = 0.0;

    void validate() const {
        require(is_finite(alpha) && is_finite(log_delta), "Profile: non-finite parameter");
        require(alpha >= 2.0, "Profile: alpha must be >= 2");
    }
};

// ln(d^a + r^a) without forming either power.
inline double log_pow_sum(double alpha, double log_delta, double r) {
    const double a_ld = alpha * log_delta;
    if (r <= 0.0) return a_ld;
    return log_add(a_ld, alpha * std::log(r));
}

// w(r), the profile value.
inline double bubble_value(const Profile& p, double r) {
    p.validate();
    require(is_finite(r) && r >= 0.0, "bubble_value: r must be finite and >= 0");
    return std::log(2.0 * p.alpha * p.alpha) + p.alpha * p.log_delta
         - 2.0 * log_pow_sum(p.alpha, p.log_delta, r);
}

inline double bubble_value(double alpha, double log_delta, double r) {
    return bubble_value(Profile{alpha, log_delta}, r);
}

// ln( r^(a-2) e^w ) = ln( 2 a^2 d^a r^(a-2) / (d^a + r^a)^2 ): the log of the
// profile's density, which is also each bubble's contribution to -Lap W and
// to the linearized potential. Finite limit at r -> 0 only for a = 2.
inline double log_profile_density(double alpha, double log_delta, double r) {
    const double log_r_part = (alpha == 2.0) ? 0.0 : (alpha - 2.0) * std::log(r);
    return std::log(2.0 * alpha * alpha) + alpha * log_delta + log_r_part
         - 2.0 * log_pow_sum(alpha, log_delta, r);
}

inline double profile_density(double alpha, double log_delta, double r) {
    return std::exp(log_profile_density(alpha, log_delta, r));
}

// --------------------------------------------------------------------------
// Kernel of the linearization at the delta = 1 profile. The radial member is
// even in the plane; the two angular members carry mode alpha/2 and are odd
// under x -> -x exactly when alpha/2 is odd (the tower only uses those).
// --------------------------------------------------------------------------

// (1 - r^a) / (1 + r^a), evaluated stably for large r.
inline double kernel_z0(double alpha, double r) {
    if (r <= 1.0) {
        const double ra = std::pow(r, alpha);
        return (1.0 - ra) / (1.0 + ra);
    }
    const double rma = std::pow(r, -alpha);  // < 1
    return (rma - 1.0) / (rma + 1.0);
}

// r^(a/2) cos(a*theta/2) / (1 + r^a) and the sine companion.
inline double kernel_phi1(double alpha, double r, double theta) {
    const double amp = std::exp(0.5 * alpha * std::log(r) - log_add(0.0, alpha * std::log(r)));
    return amp * std::cos(0.5 * alpha * theta);
}

inline double kernel_phi2(double alpha, double r, double theta) {
    const double amp = std::exp(0.5 * alpha * std::log(r) - log_add(0.0, alpha * std::log(r)));
    return amp * std::sin(0.5 * alpha * theta);
}

// Weight of the concentration-adapted norm: r^((a-2)/2) / (1 + r^a).
inline double weighted_norm_weight(double alpha, double r) {
    if (r <= 0.0) return alpha == 2.0 ? 1.0 : 0.0;
    const double lr = std::log(r);
    return std::exp(0.5 * (alpha - 2.0) * lr - log_add(0.0, alpha * lr));
}

// --------------------------------------------------------------------------
// Quadrature-verified identities
// --------------------------------------------------------------------------

// int_plane r^(a-2) e^w dx = 4*pi*a, any delta. Relative tolerance ~1e-12.
inline QuadratureResult limit_mass_result(double alpha, double log_delta = 0.0) {
    require(alpha >= 2.0, "limit_mass: alpha must be >= 2");
    return plane_radial_integral(alpha, [&](double r) {
        return profile_density(alpha, log_delta, r);
    });
}

inline double limit_mass(double alpha) { return limit_mass_result(alpha).value; }

struct KernelIntegrals {
    double i1 = 0.0;  // density * Z0            -> 0
    double i2 = 0.0;  // density * Z0 * ln(1+r^a)^2 -> -4*pi*a
    double i3 = 0.0;  // density * Z0 * ln r      -> -4*pi
    double last_change = 0.0;  // largest per-integral doubling change
};

inline KernelIntegrals kernel_integrals(double alpha) {
    require(alpha >= 2.0, "kernel_integrals: alpha must be >= 2");
    auto density = [&](double r) { return profile_density(alpha, 0.0, r); };
    auto z0 = [&](double r) { return kernel_z0(alpha, r); };
    KernelIntegrals out;
    auto r1 = plane_radial_integral(alpha, [&](double r) { return density(r) * z0(r); });
    auto r2 = plane_radial_integral(alpha, [&](double r) {
        return density(r) * z0(r) * 2.0 * log_add(0.0, alpha * std::log(r));
    });
    auto r3 = plane_radial_integral(alpha, [&](double r) {
        return density(r) * z0(r) * std::log(r);
    });
    out.i1 = r1.value;
    out.i2 = r2.value;
    out.i3 = r3.value;
    out.last_change = std::max({r1.last_change, r2.last_change, r3.last_change});
    return out;
}

// Max over interior mesh nodes of the relative defect of the profile
// equation under the second-order discrete radial Laplacian (in s = ln r the
// radial Laplacian is e^{-2s} d^2/ds^2). Shrinks at order 2 in the spacing.
inline double verify_limit_pde(const Profile& p, const LogRadialMesh& mesh) {
    p.validate();
    require(mesh.nodes_per_decade() >= 3.0, "verify_limit_pde: mesh too coarse (< 3 nodes per decade)");
    const double h = mesh.ds();
    double worst = 0.0;
    for (int i = 1; i + 1 < mesh.n; ++i) {
        const double r = mesh.r(i);
        const double w_m = bubble_value(p, mesh.r(i - 1));
        const double w_0 = bubble_value(p, r);
        const double w_p = bubble_value(p, mesh.r(i + 1));
        const double lap = std::exp(-2.0 * mesh.s(i)) * (w_m - 2.0 * w_0 + w_p) / (h * h);
        const double density = profile_density(p.alpha, p.log_delta, r);
        const double defect = std::abs(-lap - density) / density;
        worst = std::max(worst, defect);
    }
    return worst;
}

// --------------------------------------------------------------------------
// Stereographic-type substitution sigma = r^(alpha/2). For radial u the
// weighted norm ||u||_{L_alpha} and the L2 norm of the transformed function
// against (1 + sigma^2)^{-2} differ by the exact factor alpha/2:
//
//   || transformed u ||^2_{L2, (1+|z|^2)^{-2}}  =  (alpha/2) ||u||^2_{L_alpha}.
//
// The two sides are computed with *different* quadrature engines (t-substitution
// vs log-space panels) so the identity is a genuine cross-check.
// --------------------------------------------------------------------------

inline double stereographic_norm_ratio(double alpha, const std::function<double(double)>& u) {
    require(alpha >= 2.0, "stereographic_norm_ratio: alpha must be >= 2");
    auto lhs = plane_radial_integral(alpha, [&](double r) {
        const double w = weighted_norm_weight(alpha, r);
        const double v = u(r);
        return w * w * v * v;
    });
    require(lhs.value > 0.0 && is_finite(lhs.value),
            "stereographic_norm_ratio: test function has no usable weighted norm");
    // Transformed side: ubar(sigma) = u(sigma^(2/alpha)) against (1+sigma^2)^-2.
    auto rhs = plane_radial_integral_log([&](double sigma) {
        const double v = u(std::pow(sigma, 2.0 / alpha));
        const double den = std::exp(-2.0 * log_add(0.0, 2.0 * std::log(sigma)));
        return v * v * den;
    }, -30.0, 30.0);
    return rhs.value / lhs.value;
}

// Dirichlet energies of u and of its transform, for the two-sided gradient
// comparison. du must be the radial derivative of u.
struct GradientComparison {
    double energy = 0.0;              // ||grad u||^2
    double transformed_energy = 0.0;  // ||grad ubar||^2
};

inline GradientComparison stereographic_gradient_comparison(
        double alpha, const std::function<double(double)>& du) {
    GradientComparison g;
    g.energy = plane_radial_integral(alpha, [&](double r) {
        const double d = du(r);
        return d * d;
    }).value;
    g.transformed_energy = plane_radial_integral_log([&](double sigma) {
        const double r = std::pow(sigma, 2.0 / alpha);
        const double dbar = du(r) * (2.0 / alpha) * std::pow(sigma, 2.0 / alpha - 1.0);
        return dbar * dbar;
    }, -30.0, 30.0).value;
    return g;
}

}  // namespace towerlab
