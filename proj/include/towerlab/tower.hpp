#pragma once

// Bubble-tower construction: concentration exponents alpha_i = 4i-2, the
// log-scale recursion selecting the concentration scales delta_1 << ... <<
// delta_k, boundary-corrected (projected) bubbles, assembly of the
// alternating-sign ansatz W, the annulus decomposition in which each bubble
// dominates, and the interaction mismatch Theta_j measuring how far W is,
// in its own scale, from the j-th bubble.
//
// The scales satisfy a linear system in ln(delta): requiring the mismatch
// constants to cancel level by level gives
//
//   alpha_k ln(delta_k) = ln(lambda) - ln(2 alpha_k^2) + 8 k pi H00
//   alpha_j ln(delta_j) = alpha_{j+1} ln(delta_{j+1}) + 2 ln(lambda)
//                         - ln(4 alpha_j^2 alpha_{j+1}^2)          (j < k)
//
// (back-substitution of row j+1 into row j; the Robin terms cancel in
// consecutive rows because their alternating sums are equal and opposite).
// Everything stays in ln(delta): delta_1 ~ lambda^{(2k-1)/2} reaches 1e-40
// for the larger towers.

#include <cmath>
#include <string>
#include <vector>

#include "towerlab/common.hpp"
#include "towerlab/greens.hpp"
#include "towerlab/mesh.hpp"
#include "towerlab/profiles.hpp"

namespace towerlab {

struct BubbleParams {
    int k = 1;
    double lambda = 1e-3;
    double log_lambda = 0.0;
    double h00 = 0.0;
    bool asymptotic_regime = true;  // false when lambda >= 1 was requested
    // Arrays are 0-based; level i in formulas is index i-1 here.
    std::vector<double> alpha;      // 4i - 2
    std::vector<double> log_delta;  // ln(delta_i), strictly increasing
    std::vector<double> exponent;   // e_i = (2(k-i)+1)/alpha_i
    std::vector<double> log_d;      // ln(d_i) = ln(delta_i) - e_i ln(lambda)

    double delta(int i) const { return std::exp(log_delta[i]); }
    double d(int i) const { return std::exp(log_d[i]); }
    double h0(int i) const { return 4.0 * pi * alpha[i] * h00; }
    // Sign of level i (1-based level i+1): the ansatz is sum (-1)^level Pw.
    static double sign(int i) { return (i % 2 == 0) ? -1.0 : 1.0; }
};

inline BubbleParams select_parameters(int k, double lambda, double h00) {
    require(k >= 1, "select_parameters: k must be >= 1");
    require(lambda > 0 && is_finite(lambda), "select_parameters: lambda must be positive");
    BubbleParams p;
    p.k = k;
    p.lambda = lambda;
    p.log_lambda = std::log(lambda);
    p.h00 = h00;
    p.asymptotic_regime = lambda < 1.0;
    p.alpha.resize(k);
    p.log_delta.resize(k);
    p.exponent.resize(k);
    p.log_d.resize(k);
    for (int i = 0; i < k; ++i) {
        p.alpha[i] = 4.0 * (i + 1) - 2.0;
        p.exponent[i] = (2.0 * (k - (i + 1)) + 1.0) / p.alpha[i];
    }
    // Backward recursion in ln(delta).
    {
        const double ak = p.alpha[k - 1];
        p.log_delta[k - 1] =
            (p.log_lambda - std::log(2.0 * ak * ak) + 8.0 * k * pi * h00) / ak;
    }
    for (int i = k - 2; i >= 0; --i) {
        const double aj = p.alpha[i], an = p.alpha[i + 1];
        p.log_delta[i] = (an * p.log_delta[i + 1] + 2.0 * p.log_lambda
                          - std::log(4.0 * aj * aj * an * an)) / aj;
    }
    for (int i = 0; i < k; ++i) p.log_d[i] = p.log_delta[i] - p.exponent[i] * p.log_lambda;
    for (int i = 0; i + 1 < k; ++i)
        require(p.log_delta[i] < p.log_delta[i + 1],
                "select_parameters: scales not nested (lambda too large for this k?)");
    return p;
}

// The j-th row of the scale-selection system, evaluated in log-space; zero to
// round-off when the recursion above is used. j is 1-based.
inline double matching_balance(const BubbleParams& p, int j) {
    require(j >= 1 && j <= p.k, "matching_balance: level out of range");
    const double aj = p.alpha[j - 1];
    double acc = -aj * p.log_delta[j - 1] - std::log(2.0 * aj * aj) + p.log_lambda;
    for (int i = j + 1; i <= p.k; ++i) {
        const double sgn = ((i - j) % 2 == 0) ? 1.0 : -1.0;
        acc -= 2.0 * sgn * p.alpha[i - 1] * p.log_delta[i - 1];
    }
    for (int i = 1; i <= p.k; ++i) {
        const double sgn = ((i - j) % 2 == 0) ? 1.0 : -1.0;
        acc += sgn * p.h0(i - 1);
    }
    return acc;
}

// (alpha_j - 2) + 2 * sum_{i<j} (-1)^{i-j} alpha_i, in exact integer
// arithmetic; identically zero for alpha_i = 4i-2. j is 1-based.
inline long alternating_alpha_identity(int j) {
    require(j >= 1, "alternating_alpha_identity: level out of range");
    long acc = 4L * j - 2L - 2L;
    for (int i = 1; i < j; ++i) {
        const long sgn = ((j - i) % 2 == 0) ? 1L : -1L;
        acc += 2L * sgn * (4L * i - 2L);
    }
    return acc;
}

// sum (-1)^i alpha_i = (-1)^k 2k; returns the sum and asserts the identity.
inline long check_alternating_sum(const BubbleParams& p) {
    long acc = 0;
    for (int i = 1; i <= p.k; ++i) {
        const long sgn = (i % 2 == 0) ? 1L : -1L;
        acc += sgn * (4L * i - 2L);
    }
    const long expected = ((p.k % 2 == 0) ? 1L : -1L) * 2L * p.k;
    require(acc == expected, "check_alternating_sum: identity violated");
    return acc;
}

// --------------------------------------------------------------------------
// Annuli: level j dominates for sqrt(delta_{j-1} delta_j) <= r <=
// sqrt(delta_j delta_{j+1}), with delta_0 = 0 and delta_{k+1} = +inf (the
// outer boundary is clipped to the domain).
// --------------------------------------------------------------------------

struct AnnulusDecomposition {
    int k = 1;
    std::vector<double> radii;  // k+1 boundaries, radii[0] = 0, radii[k] = outer

    // 1-based annulus index of radius r.
    int annulus_of(double r) const {
        for (int j = 1; j < k; ++j)
            if (r < radii[j]) return j;
        return k;
    }
};

inline AnnulusDecomposition make_annuli(const BubbleParams& p, double outer) {
    AnnulusDecomposition a;
    a.k = p.k;
    a.radii.assign(p.k + 1, 0.0);
    for (int j = 1; j < p.k; ++j)
        a.radii[j] = std::exp(0.5 * (p.log_delta[j - 1] + p.log_delta[j]));
    a.radii[p.k] = outer;
    return a;
}

// --------------------------------------------------------------------------
// Projected bubbles. Projection replaces w by the function with the same
// Laplacian and zero boundary values. For a radial w on a disk of radius R
// the harmonic correction is the constant -w(R), so the exact projection is
// free. The asymptotic form replaces -w(R) by its delta -> 0 limit
// -ln(2 a^2 d^a) + 4 pi a H(x,0) and differs from exact by O(delta^a).
// --------------------------------------------------------------------------

enum class ProjectionMode { exact, asymptotic };

inline double projected_bubble_disk(double alpha, double log_delta, double r, double R,
                                    ProjectionMode mode) {
    const Profile prof{alpha, log_delta};
    if (mode == ProjectionMode::exact)
        return bubble_value(prof, r) - bubble_value(prof, R);
    // h(x) on the disk of radius R is the constant 2*alpha*ln(R).
    return bubble_value(prof, r) - std::log(2.0 * alpha * alpha) - alpha * log_delta
         + 2.0 * alpha * std::log(R);
}

// 2D exact/asymptotic projection on the rectangle.
inline Field2D project_bubble_rectangle(const DomainSpec& domain, double alpha,
                                        double log_delta, ProjectionMode mode,
                                        const GreenData* green = nullptr) {
    domain.validate();
    require(domain.kind == DomainSpec::Kind::rectangle,
            "project_bubble_rectangle: rectangle domain required");
    require(std::exp(log_delta) < domain.inradius(),
            "project_bubble_rectangle: delta must lie below the inradius");
    Grid2D grid{domain.a, domain.b, domain.grid_n, domain.grid_n};
    const Profile prof{alpha, log_delta};
    Field2D out;
    if (mode == ProjectionMode::exact) {
        auto minus_w = [&](double x, double y) { return -bubble_value(prof, std::hypot(x, y)); };
        Field2D corr = harmonic_extension_grid(grid, minus_w);
        out = corr;
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i)
                out.at(i, j) = bubble_value(prof, std::hypot(grid.x(i), grid.y(j))) + corr.at(i, j);
        return out;
    }
    GreenData local;
    if (!green) {
        local = build_green(domain);
        green = &local;
    }
    out.grid = grid;
    out.v.assign(static_cast<std::size_t>(grid.nx) * grid.ny, 0.0);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const double rr = std::hypot(grid.x(i), grid.y(j));
            out.at(i, j) = bubble_value(prof, rr) - std::log(2.0 * alpha * alpha)
                         - alpha * log_delta + 4.0 * pi * alpha * green->H(grid.x(i), grid.y(j));
        }
    return out;
}

// --------------------------------------------------------------------------
// Radial ansatz on the disk (the workhorse: all scaling studies live here).
// --------------------------------------------------------------------------

struct Ansatz {
    BubbleParams params;
    double R = 1.0;  // disk radius
    ProjectionMode mode = ProjectionMode::exact;
    LogRadialMesh mesh;
    std::vector<Field> pw;  // per-level projected bubble on the mesh
    Field W;                // assembled alternating sum
    AnnulusDecomposition annuli;

    // Continuous evaluators (closed forms, no mesh interpolation).
    double pw_at(int i, double r) const {
        return projected_bubble_disk(params.alpha[i], params.log_delta[i], r, R, mode);
    }
    double W_at(double r) const {
        double acc = 0.0;
        for (int i = 0; i < params.k; ++i) acc += BubbleParams::sign(i) * pw_at(i, r);
        return acc;
    }

    // Interaction mismatch of level j (1-based) at physical radius r:
    //   Theta_j = (-1)^j W(r) - w_j(r) - (alpha_j - 2) ln r + ln(lambda).
    // Assembled from closed forms so the O(lambda) result survives the
    // cancellation of O(|ln lambda|) terms.
    double theta_at_radius(int j, double r) const {
        require(j >= 1 && j <= params.k, "theta: level out of range");
        double acc = -(params.alpha[j - 1] - 2.0) * std::log(r) + params.log_lambda;
        for (int i = 0; i < params.k; ++i) {
            // (-1)^j * (-1)^{i+1} = (-1)^{i+1-j}; the self term contributes
            // Pw_j - w_j (the boundary correction alone).
            double term = pw_at(i, r);
            if (i == j - 1) term -= bubble_value(params.alpha[i], params.log_delta[i], r);
            const double rel_sign = ((i + 1 - j) % 2 == 0) ? 1.0 : -1.0;
            acc += rel_sign * term;
        }
        return acc;
    }

    double theta(int j, double y) const { return theta_at_radius(j, y * params.delta(j - 1)); }
};

inline Ansatz assemble_ansatz(const BubbleParams& params, const DomainSpec& domain,
                              ProjectionMode mode = ProjectionMode::exact,
                              double nodes_per_unit = 64.0, double pad = 6.0) {
    domain.validate();
    require(domain.kind == DomainSpec::Kind::disk,
            "assemble_ansatz: radial assembly requires the disk (use assemble_ansatz_rectangle)");
    require(params.delta(params.k - 1) < domain.inradius(),
            "assemble_ansatz: outermost scale exceeds the domain inradius");
    Ansatz a;
    a.params = params;
    a.R = domain.radius;
    a.mode = mode;
    a.mesh = LogRadialMesh::for_scales(params.log_delta[0], std::log(domain.radius),
                                       nodes_per_unit, pad);
    require(a.mesh.nodes_per_decade() >= 8.0,
            "assemble_ansatz: mesh under-resolved (< 8 nodes per decade)");
    a.pw.assign(params.k, Field(a.mesh.n, 0.0));
    a.W.assign(a.mesh.n, 0.0);
    for (int i = 0; i < params.k; ++i) {
        for (int q = 0; q < a.mesh.n; ++q) {
            a.pw[i][q] = a.pw_at(i, a.mesh.r(q));
            a.W[q] += BubbleParams::sign(i) * a.pw[i][q];
        }
    }
    a.annuli = make_annuli(params, domain.radius);
    return a;
}

struct RectangleAnsatz {
    BubbleParams params;
    DomainSpec domain;
    ProjectionMode mode = ProjectionMode::exact;
    std::vector<Field2D> pw;
    Field2D W;
};

inline RectangleAnsatz assemble_ansatz_rectangle(const BubbleParams& params,
                                                 const DomainSpec& domain,
                                                 ProjectionMode mode = ProjectionMode::exact) {
    domain.validate();
    require(domain.kind == DomainSpec::Kind::rectangle,
            "assemble_ansatz_rectangle: rectangle domain required");
    RectangleAnsatz a;
    a.params = params;
    a.domain = domain;
    a.mode = mode;
    GreenData green;
    if (mode == ProjectionMode::asymptotic) green = build_green(domain);
    for (int i = 0; i < params.k; ++i) {
        a.pw.push_back(project_bubble_rectangle(domain, params.alpha[i], params.log_delta[i],
                                                mode,
                                                mode == ProjectionMode::asymptotic ? &green
                                                                                   : nullptr));
        if (i == 0) {
            a.W.grid = a.pw[0].grid;
            a.W.v.assign(a.pw[0].v.size(), 0.0);
        }
        for (std::size_t q = 0; q < a.W.v.size(); ++q)
            a.W.v[q] += BubbleParams::sign(i) * a.pw[i].v[q];
    }
    return a;
}

// Fitted certificate for the mismatch bound |Theta_j| <= C (r + lambda) on
// the j-th annulus: returns max over log-spaced samples of the ratio.
struct ThetaCertificate {
    int j = 1;
    double max_ratio = 0.0;  // max |Theta_j| / (r + lambda)
    double max_abs = 0.0;    // sup |Theta_j| over the annulus
};

inline ThetaCertificate theta_certificate(const Ansatz& a, int j, int samples = 400) {
    require(j >= 1 && j <= a.params.k, "theta_certificate: level out of range");
    const double inner = (j == 1) ? a.params.delta(0) * 1e-4 : a.annuli.radii[j - 1];
    const double outer = a.annuli.radii[j];
    ThetaCertificate cert;
    cert.j = j;
    const double ls = std::log(inner), le = std::log(outer);
    for (int q = 0; q <= samples; ++q) {
        const double r = std::exp(ls + (le - ls) * q / samples);
        const double th = std::abs(a.theta_at_radius(j, r));
        cert.max_abs = std::max(cert.max_abs, th);
        cert.max_ratio = std::max(cert.max_ratio, th / (r + a.params.lambda));
    }
    return cert;
}

}  // namespace towerlab
