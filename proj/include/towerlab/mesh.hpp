#pragma once

// Graded log-radial mesh: nodes uniform in s = ln r. Every concentration
// scale of a bubble tower occupies O(1) width in s, so one uniform-in-s mesh
// resolves all of them simultaneously. Radial integrals against r dr become
// integrals of f * e^{2s} in s and are done with the trapezoid rule on the
// mesh (with linear interpolation when an integration limit falls between
// nodes).

#include <algorithm>
#include <cmath>
#include <vector>

#include "towerlab/common.hpp"

namespace towerlab {

struct LogRadialMesh {
    double s_min = 0.0;
    double s_max = 0.0;
    int n = 0;  // node count, >= 2

    double ds() const { return (s_max - s_min) / (n - 1); }
    double s(int i) const { return s_min + i * ds(); }
    double r(int i) const { return std::exp(s(i)); }
    double r_min() const { return std::exp(s_min); }
    double r_max() const { return std::exp(s_max); }
    double nodes_per_decade() const { return (n - 1) / (s_max - s_min) * std::log(10.0); }

    // Mesh spanning [ln(delta_min) - pad, ln(outer)] with a fixed node density
    // per unit of s. delta_min is the innermost concentration scale.
    static LogRadialMesh for_scales(double log_delta_min, double log_outer,
                                    double nodes_per_unit = 64.0, double pad = 6.0) {
        LogRadialMesh m;
        m.s_min = log_delta_min - pad;
        m.s_max = log_outer;
        require(m.s_max > m.s_min, "LogRadialMesh: empty s-range");
        m.n = std::max(16, static_cast<int>(std::ceil((m.s_max - m.s_min) * nodes_per_unit)) + 1);
        return m;
    }
};

// Trapezoid integral of g(s) ds over [a, b] clipped to the mesh range, where
// g is sampled at the mesh nodes. Linear interpolation at the clip points.
inline double trapezoid_s(const LogRadialMesh& mesh, const Field& g, double a, double b) {
    a = std::max(a, mesh.s_min);
    b = std::min(b, mesh.s_max);
    if (b <= a) return 0.0;
    const double h = mesh.ds();
    auto value_at = [&](double s) {
        const double x = (s - mesh.s_min) / h;
        int i = std::min(static_cast<int>(std::floor(x)), mesh.n - 2);
        i = std::max(i, 0);
        const double w = x - i;
        return g[i] * (1.0 - w) + g[i + 1] * w;
    };
    const int ia = static_cast<int>(std::ceil((a - mesh.s_min) / h - 1e-12));
    const int ib = static_cast<int>(std::floor((b - mesh.s_min) / h + 1e-12));
    double total = 0.0;
    if (ia > ib) {  // both limits inside one cell
        total = 0.5 * (value_at(a) + value_at(b)) * (b - a);
        return total;
    }
    const double sa = mesh.s(ia), sb = mesh.s(ib);
    if (a < sa) total += 0.5 * (value_at(a) + g[ia]) * (sa - a);
    for (int i = ia; i < ib; ++i) total += 0.5 * (g[i] + g[i + 1]) * h;
    if (b > sb) total += 0.5 * (g[ib] + value_at(b)) * (b - sb);
    return total;
}

// 2*pi * int f(r) r dr over r in [ra, rb] (clipped to the mesh), f sampled on
// the mesh nodes.
inline double integral_r_dr(const LogRadialMesh& mesh, const Field& f, double ra, double rb) {
    require(static_cast<int>(f.size()) == mesh.n, "integral_r_dr: field/mesh size mismatch");
    Field g(mesh.n);
    for (int i = 0; i < mesh.n; ++i) g[i] = f[i] * std::exp(2.0 * mesh.s(i));
    const double a = ra > 0 ? std::log(ra) : mesh.s_min;
    const double b = std::log(rb);
    return 2.0 * pi * trapezoid_s(mesh, g, a, b);
}

}  // namespace towerlab
