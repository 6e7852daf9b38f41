#pragma once

// Solving the radial problem on a disk:  -Lap u = lambda (e^u - e^{-u}),
// u = 0 on the boundary. In log-radial coordinates the discrete system is
//
//   K u = omega .* lambda f(u),   f(u) = e^u - e^{-u},
//
// with the same stiffness matrix and lumped weights as linearized.hpp uses
// for m = 0. Two routes to the root are provided:
//
//   * damped Newton on F(u) = K u - omega lambda f(u), and
//   * the contraction scheme  L phi_{n+1} = omega (S phi_n + N(phi_n)) - R_h,
//     where L = K - diag(omega V) freezes the bubble potential and R_h is the
//     *discrete* defect of the ansatz, so the fixed point is the identical
//     discrete root and the two solvers can be compared to round-off.
//
// lambda e^{+-u} is always formed as exp(log_lambda +- u); on tower-like
// states those combinations stay bounded even when e^{-u} alone would
// overflow.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "towerlab/common.hpp"
#include "towerlab/greens.hpp"
#include "towerlab/linalg.hpp"
#include "towerlab/linearized.hpp"
#include "towerlab/mesh.hpp"
#include "towerlab/residual.hpp"
#include "towerlab/tower.hpp"

namespace towerlab {

struct DiskSystem {
    LogRadialMesh mesh;
    double radius = 1.0;
    double lambda = 0.0;
    double log_lambda = 0.0;
    Tridiagonal K;              // stiffness, Neumann inner end, Dirichlet outer
    std::vector<double> omega;  // lumped h e^{2s} weights over the unknowns
    int unknowns = 0;           // mesh.n - 1 (outer node eliminated)
};

inline DiskSystem make_disk_system(const LogRadialMesh& mesh, double radius,
                                   double lambda) {
    require(lambda > 0.0, "make_disk_system: lambda must be positive");
    require(mesh.n >= 4, "make_disk_system: mesh too coarse");
    require(std::abs(mesh.s_max - std::log(radius)) < 1e-12,
            "make_disk_system: mesh must end at the disk boundary");
    DiskSystem sys;
    sys.mesh = mesh;
    sys.radius = radius;
    sys.lambda = lambda;
    sys.log_lambda = std::log(lambda);
    sys.unknowns = mesh.n - 1;
    const double h = mesh.ds();
    sys.K = Tridiagonal::zero(sys.unknowns);
    sys.omega.resize(static_cast<size_t>(sys.unknowns));
    for (int p = 0; p < sys.unknowns; ++p) {
        const double ws = (p == 0) ? 0.5 * h : h;
        sys.K.diag[static_cast<size_t>(p)] = (p == 0 ? 1.0 : 2.0) / h;
        sys.omega[static_cast<size_t>(p)] = ws * std::exp(2.0 * mesh.s(p));
        if (p + 1 < sys.unknowns) {
            sys.K.lower[static_cast<size_t>(p)] = -1.0 / h;
            sys.K.upper[static_cast<size_t>(p)] = -1.0 / h;
        }
    }
    return sys;
}

namespace detail {

inline double lambda_f(double log_lambda, double u) {
    return std::exp(log_lambda + u) - std::exp(log_lambda - u);
}
inline double lambda_fprime(double log_lambda, double u) {
    return std::exp(log_lambda + u) + std::exp(log_lambda - u);
}

inline std::vector<double> nonlinear_defect(const DiskSystem& sys,
                                            const std::vector<double>& u) {
    std::vector<double> F = sys.K.apply(u);
    for (size_t p = 0; p < F.size(); ++p)
        F[p] -= sys.omega[p] * lambda_f(sys.log_lambda, u[p]);
    return F;
}

inline double sup_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace detail

struct SolveResult {
    Field u;                               // full mesh, outer node pinned at 0
    bool converged = false;
    std::string method;
    std::string failure;                   // reason when converged == false
    std::vector<double> residual_history;  // sup|F| per Newton step / step sizes
    double contraction_ratio = 0.0;        // largest observed step ratio
    int iterations = 0;
};

// Defect of an arbitrary full-mesh state in the discrete equations, for
// seeding diagnostics and for the contraction right-hand side.
inline std::vector<double> discrete_defect(const DiskSystem& sys, const Field& u) {
    require(u.size() == static_cast<size_t>(sys.mesh.n), "discrete_defect: field/mesh mismatch");
    std::vector<double> uu(u.begin(), u.begin() + sys.unknowns);
    return detail::nonlinear_defect(sys, uu);
}

inline SolveResult newton_solve(const DiskSystem& sys, const Field& u0,
                                double tol = 1e-11, int max_iter = 60) {
    require(u0.size() == static_cast<size_t>(sys.mesh.n), "newton_solve: seed/mesh size mismatch");
    SolveResult out;
    out.method = "newton";

    std::vector<double> u(u0.begin(), u0.begin() + sys.unknowns);
    std::vector<double> F = detail::nonlinear_defect(sys, u);
    double res = detail::sup_norm(F);
    out.residual_history.push_back(res);

    for (int it = 1; it <= max_iter && res > tol; ++it) {
        Tridiagonal J = sys.K;
        for (size_t p = 0; p < J.diag.size(); ++p)
            J.diag[p] -= sys.omega[p] * detail::lambda_fprime(sys.log_lambda, u[p]);
        TridiagonalFactor LU(J);
        if (LU.singular()) {
            out.failure = "newton jacobian is singular";
            break;
        }
        std::vector<double> rhs(F.size());
        for (size_t p = 0; p < F.size(); ++p) rhs[p] = -F[p];
        const std::vector<double> du = LU.solve(rhs);

        // backtracking: accept the first step with a genuine decrease
        double t = 1.0;
        bool accepted = false;
        for (int halve = 0; halve <= 20; ++halve, t *= 0.5) {
            std::vector<double> ut(u.size());
            for (size_t p = 0; p < u.size(); ++p) ut[p] = u[p] + t * du[p];
            std::vector<double> Ft = detail::nonlinear_defect(sys, ut);
            const double rt = detail::sup_norm(Ft);
            if (!std::isfinite(rt)) continue;
            if (rt <= (1.0 - 1e-4 * t) * res || rt <= tol) {
                u.swap(ut);
                F.swap(Ft);
                res = rt;
                accepted = true;
                break;
            }
        }
        out.iterations = it;
        out.residual_history.push_back(res);
        if (!accepted) {
            out.failure = "newton line search found no decrease";
            break;
        }
    }

    out.converged = res <= tol;
    if (!out.converged && out.failure.empty())
        out.failure = "newton did not reach tolerance";
    out.u.assign(static_cast<size_t>(sys.mesh.n), 0.0);
    std::copy(u.begin(), u.end(), out.u.begin());
    return out;
}

// Fixed-point iteration around the ansatz. Solves the same discrete equations
// as newton_solve; the linear operator freezes V and the forcing carries the
// discrete defect of W, so u = W + phi converges to the identical root.
inline SolveResult contraction_iterate(const Ansatz& a, double tol = 1e-12,
                                       int max_iter = 200) {
    const DiskSystem sys = make_disk_system(a.mesh, a.R, a.params.lambda);
    SolveResult out;
    out.method = "contraction";

    std::vector<double> W(a.W.begin(), a.W.begin() + sys.unknowns);
    const std::vector<double> Rh = detail::nonlinear_defect(sys, W);

    Tridiagonal L = sys.K;
    for (int p = 0; p < sys.unknowns; ++p)
        L.diag[static_cast<size_t>(p)] -=
            sys.omega[static_cast<size_t>(p)] * tower_potential(a.params, a.mesh.r(p));
    TridiagonalFactor LU(L);
    if (LU.singular()) {
        out.failure = "frozen linear operator is singular";
        out.u = a.W;
        return out;
    }

    const Field S = linear_error_field(a);
    std::vector<double> phi(static_cast<size_t>(sys.unknowns), 0.0);
    double prev_step = std::numeric_limits<double>::quiet_NaN();
    int diverging = 0;

    for (int it = 1; it <= max_iter; ++it) {
        std::vector<double> rhs(static_cast<size_t>(sys.unknowns));
        for (int p = 0; p < sys.unknowns; ++p) {
            const double n_p = nonlinear_term_at(a, a.mesh.r(p), phi[static_cast<size_t>(p)]);
            rhs[static_cast<size_t>(p)] =
                sys.omega[static_cast<size_t>(p)] *
                    (S[static_cast<size_t>(p)] * phi[static_cast<size_t>(p)] + n_p) -
                Rh[static_cast<size_t>(p)];
        }
        std::vector<double> next = LU.solve(rhs);
        double step = 0.0;
        for (size_t p = 0; p < next.size(); ++p)
            step = std::max(step, std::abs(next[p] - phi[static_cast<size_t>(p)]));
        out.iterations = it;
        out.residual_history.push_back(step);
        phi.swap(next);

        if (!std::isfinite(step)) {
            out.failure = "contraction step is not finite";
            break;
        }
        if (it >= 2) {
            const double ratio = step / prev_step;
            if (prev_step > 50.0 * tol && std::isfinite(ratio))
                out.contraction_ratio = std::max(out.contraction_ratio, ratio);
            diverging = (ratio >= 1.0) ? diverging + 1 : 0;
            if (diverging >= 3) {
                out.failure = "contraction steps grew three times in a row";
                break;
            }
        }
        prev_step = step;
        if (step <= tol) {
            out.converged = true;
            break;
        }
    }
    if (!out.converged && out.failure.empty())
        out.failure = "contraction did not reach tolerance";

    out.u.assign(static_cast<size_t>(sys.mesh.n), 0.0);
    for (int p = 0; p < sys.unknowns; ++p)
        out.u[static_cast<size_t>(p)] = W[static_cast<size_t>(p)] + phi[static_cast<size_t>(p)];
    return out;
}

// --- diagnostics on a solved state -----------------------------------------

struct MassPair {
    double plus = 0.0;   // integral of lambda e^{+u}
    double minus = 0.0;  // integral of lambda e^{-u}
};

// Concentrated masses inside r < r_cut; the disk below the mesh's inner
// radius is closed with a flat patch. r_cut must enclose the whole tower.
inline MassPair masses(const LogRadialMesh& mesh, const Field& u, double lambda,
                       double r_cut, double delta_outer) {
    require(u.size() == static_cast<size_t>(mesh.n), "masses: field/mesh size mismatch");
    require(lambda > 0.0, "masses: lambda must be positive");
    require(r_cut > delta_outer,
            "masses: cut radius must exceed the outermost concentration scale");
    require(r_cut <= mesh.r_max() * (1.0 + 1e-12), "masses: cut radius beyond the mesh");

    const double log_lambda = std::log(lambda);
    Field gp(u.size()), gm(u.size());
    for (size_t i = 0; i < u.size(); ++i) {
        gp[i] = std::exp(log_lambda + u[i]);
        gm[i] = std::exp(log_lambda - u[i]);
    }
    const double sb = std::log(r_cut);
    MassPair out;
    out.plus = 2.0 * pi * detail::weighted_trapezoid(mesh, gp, mesh.s_min, sb, 1) +
               pi * std::exp(2.0 * mesh.s_min) * gp.front();
    out.minus = 2.0 * pi * detail::weighted_trapezoid(mesh, gm, mesh.s_min, sb, 1) +
                pi * std::exp(2.0 * mesh.s_min) * gm.front();
    return out;
}

// Relative size of (m+ - m-)^2 - 8 pi (m+ + m-); zero for exact quantized
// blow-up masses of the alternating tower.
inline double ohtsuka_suzuki_check(const MassPair& m) {
    const double total = m.plus + m.minus;
    require(total > 0.0, "ohtsuka_suzuki_check: masses must be positive");
    const double diff = m.plus - m.minus;
    return (diff * diff - 8.0 * pi * total) / (total * total);
}

// Sup distance between u and the concentrated-limit logarithmic far field
// over the ring lo*R <= r <= hi*R.
inline double farfield_compare(const LogRadialMesh& mesh, const Field& u, int k,
                               double R, double lo = 0.4, double hi = 0.8) {
    require(u.size() == static_cast<size_t>(mesh.n), "farfield_compare: size mismatch");
    require(k >= 1 && R > 0.0 && lo > 0.0 && lo < hi && hi < 1.0,
            "farfield_compare: bad window");
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    double worst = 0.0;
    bool hit = false;
    for (int i = 0; i < mesh.n; ++i) {
        const double r = mesh.r(i);
        if (r < lo * R || r > hi * R) continue;
        hit = true;
        const double target = sign * 4.0 * k * std::log(R / r);
        worst = std::max(worst, std::abs(u[static_cast<size_t>(i)] - target));
    }
    require(hit, "farfield_compare: window contains no mesh nodes");
    return worst;
}

// Sharp-constant sanity check: int_Omega e^{eta u} against
// c |Omega| exp(eta^2 ||grad u||^2 / (16 pi)) with c = 10.
struct MoserTrudingerReport {
    double eta = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

inline std::vector<MoserTrudingerReport> moser_trudinger_spot_check(
    const LogRadialMesh& mesh, const Field& u, double R,
    const std::vector<double>& etas = {-1.0, -0.5, 0.5, 1.0}) {
    require(u.size() == static_cast<size_t>(mesh.n),
            "moser_trudinger_spot_check: size mismatch");
    const double grad_sq = [&] {
        const double e = energy_norm(mesh, u, 0);
        return e * e;
    }();
    const double area = pi * R * R;

    std::vector<MoserTrudingerReport> out;
    out.reserve(etas.size());
    for (double eta : etas) {
        require(std::abs(eta) <= 1.0, "moser_trudinger_spot_check: |eta| must be <= 1");
        Field g(u.size());
        for (size_t i = 0; i < u.size(); ++i) g[i] = std::exp(eta * u[i]);
        MoserTrudingerReport rep;
        rep.eta = eta;
        rep.lhs = 2.0 * pi *
                      detail::weighted_trapezoid(mesh, g, mesh.s_min, mesh.s_max, 1) +
                  pi * std::exp(2.0 * mesh.s_min) * g.front();
        rep.rhs = 10.0 * area * std::exp(eta * eta * grad_sq / (16.0 * pi));
        rep.holds = rep.lhs <= rep.rhs;
        out.push_back(rep);
    }
    return out;
}

// Number of strict sign alternations along the profile, skipping nodes within
// round-off of zero. A k-level tower solution alternates k - 1 times.
inline int sign_changes(const Field& u) {
    double scale = 0.0;
    for (double x : u) scale = std::max(scale, std::abs(x));
    if (scale == 0.0) return 0;
    int count = 0, last = 0;
    for (double x : u) {
        if (std::abs(x) < 1e-9 * scale) continue;
        const int s = (x > 0.0) ? 1 : -1;
        if (last != 0 && s != last) ++count;
        last = s;
    }
    return count;
}

// Empirical convergence order from a residual history: the slope ratio of the
// last three entries that still sit above the round-off floor.
inline double convergence_order(const std::vector<double>& history) {
    std::vector<double> r;
    for (double x : history)
        if (x > 1e-13 * history.front() && x > 0.0) r.push_back(x);
    require(r.size() >= 3, "convergence_order: not enough usable iterations");
    const size_t n = r.size();
    const double num = std::log(r[n - 1] / r[n - 2]);
    const double den = std::log(r[n - 2] / r[n - 3]);
    require(den < 0.0, "convergence_order: residuals were not decreasing");
    return num / den;
}

// --- lambda continuation ----------------------------------------------------

struct SweepPoint {
    double lambda = 0.0;
    SolveResult result;             // primary path (newton unless told otherwise)
    double contraction_ratio = 0.0; // filled when the contraction path also ran
    double agreement_sup =
        std::numeric_limits<double>::quiet_NaN();  // sup |u_N - u_C| when both ran
    double phi_energy = 0.0;                       // energy norm of u - W
    double m_plus = 0.0;
    double m_minus = 0.0;
    double os_residual = 0.0;
    double farfield_gap = 0.0;
    int sign_flips = 0;
};

namespace detail {

// Linear resampling in s; values outside the source range clamp to its ends
// (corrections are flat near the inner end, zero at the outer one).
inline Field resample_linear(const LogRadialMesh& from, const Field& f,
                             const LogRadialMesh& to) {
    Field out(static_cast<size_t>(to.n));
    for (int i = 0; i < to.n; ++i) {
        const double s = to.s(i);
        if (s <= from.s_min) {
            out[static_cast<size_t>(i)] = f.front();
        } else if (s >= from.s_max) {
            out[static_cast<size_t>(i)] = f.back();
        } else {
            const double t = (s - from.s_min) / from.ds();
            const int j = std::min(static_cast<int>(t), from.n - 2);
            const double w = t - j;
            out[static_cast<size_t>(i)] =
                (1.0 - w) * f[static_cast<size_t>(j)] + w * f[static_cast<size_t>(j + 1)];
        }
    }
    return out;
}

}  // namespace detail

// Solve along a descending lambda list, seeding each solve with the previous
// correction carried over to the new ansatz. method is "newton",
// "contraction", or "both" (newton primary, agreement recorded).
inline std::vector<SweepPoint> solve_sweep(int k, std::vector<double> lambdas,
                                           const DomainSpec& domain,
                                           const std::string& method = "newton",
                                           double nodes_per_unit = 64.0,
                                           double pad = 6.0, double tol = 1e-11,
                                           double r_cut_frac = 0.5) {
    require(!lambdas.empty(), "solve_sweep: empty lambda list");
    require(method == "newton" || method == "contraction" || method == "both",
            "solve_sweep: method must be newton, contraction, or both");
    require(domain.kind == DomainSpec::Kind::disk, "solve_sweep: only disk domains");
    require(r_cut_frac > 0.0 && r_cut_frac <= 1.0, "solve_sweep: bad r_cut fraction");
    std::sort(lambdas.begin(), lambdas.end(), std::greater<double>());

    const GreenData green = build_green(domain);
    std::vector<SweepPoint> points;
    points.reserve(lambdas.size());

    LogRadialMesh prev_mesh;
    Field prev_phi;
    bool have_seed = false;

    for (double lambda : lambdas) {
        const BubbleParams params = select_parameters(k, lambda, green.h00);
        const Ansatz a = assemble_ansatz(params, domain, ProjectionMode::exact,
                                         nodes_per_unit, pad);
        const DiskSystem sys = make_disk_system(a.mesh, a.R, lambda);

        SweepPoint pt;
        pt.lambda = lambda;

        SolveResult newton;
        if (method != "contraction") {
            Field u0 = a.W;
            if (have_seed) {
                const Field phi0 = detail::resample_linear(prev_mesh, prev_phi, a.mesh);
                for (size_t i = 0; i < u0.size(); ++i) u0[i] += phi0[i];
                u0.back() = 0.0;
            }
            newton = newton_solve(sys, u0, tol);
        }
        SolveResult contraction;
        if (method != "newton") contraction = contraction_iterate(a);

        pt.result = (method == "contraction") ? contraction : newton;
        if (method != "newton") pt.contraction_ratio = contraction.contraction_ratio;
        if (method == "both" && newton.converged && contraction.converged) {
            double d = 0.0;
            for (size_t i = 0; i < newton.u.size(); ++i)
                d = std::max(d, std::abs(newton.u[i] - contraction.u[i]));
            pt.agreement_sup = d;
        }

        if (pt.result.converged) {
            Field phi(pt.result.u.size());
            for (size_t i = 0; i < phi.size(); ++i) phi[i] = pt.result.u[i] - a.W[i];
            pt.phi_energy = energy_norm(a.mesh, phi, 0);
            const double r_cut = r_cut_frac * domain.inradius();
            const MassPair m = masses(a.mesh, pt.result.u, lambda, r_cut,
                                      params.delta(params.k - 1));
            pt.m_plus = m.plus;
            pt.m_minus = m.minus;
            pt.os_residual = ohtsuka_suzuki_check(m);
            pt.farfield_gap = farfield_compare(a.mesh, pt.result.u, k, a.R);
            pt.sign_flips = sign_changes(pt.result.u);
            prev_mesh = a.mesh;
            prev_phi = phi;
            have_seed = true;
        } else {
            have_seed = false;  // do not seed from a failed point
        }
        points.push_back(std::move(pt));
    }
    return points;
}

}  // namespace towerlab
