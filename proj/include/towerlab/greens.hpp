#pragma once

// Green's function of the Dirichlet Laplacian with pole at the origin.
//
// Disk of radius R: everything is closed form, G(x,0) = (1/2pi) ln(R/|x|)
// and the regular part is the constant (1/2pi) ln R.
//
// Centrally symmetric rectangle [-a,a] x [-b,b]: the regular part H solves
// Laplace's equation with boundary data (1/2pi) ln|x| (smooth there, since
// the pole is interior), discretized with the 5-point stencil and factored
// once with a sparse Cholesky-type solver. The same solve doubles as the
// generic harmonic-extension engine used for exact bubble projections.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <functional>
#include <vector>

#include "towerlab/common.hpp"

namespace towerlab {

struct DomainSpec {
    enum class Kind { disk, rectangle };
    Kind kind = Kind::disk;
    double radius = 1.0;     // disk
    double a = 1.0, b = 1.0; // rectangle half-widths
    int grid_n = 257;        // 2D nodes per side (odd, so the origin is a node)
    double nodes_per_unit = 64.0;  // radial mesh density for the log-radial paths

    static DomainSpec disk(double R = 1.0) {
        DomainSpec d;
        d.kind = Kind::disk;
        d.radius = R;
        return d;
    }
    static DomainSpec rectangle(double a, double b, int grid_n = 257) {
        DomainSpec d;
        d.kind = Kind::rectangle;
        d.a = a;
        d.b = b;
        d.grid_n = grid_n;
        return d;
    }

    double inradius() const {
        return kind == Kind::disk ? radius : std::min(a, b);
    }
    void validate() const {
        if (kind == Kind::disk) {
            require(radius > 0, "DomainSpec: disk radius must be positive");
        } else {
            require(a > 0 && b > 0, "DomainSpec: rectangle half-widths must be positive");
            require(grid_n >= 17 && grid_n % 2 == 1, "DomainSpec: grid_n must be odd and >= 17");
        }
    }
};

// --------------------------------------------------------------------------
// 2D grid machinery (rectangle only)
// --------------------------------------------------------------------------

struct Grid2D {
    double a = 1.0, b = 1.0;
    int nx = 0, ny = 0;
    double hx() const { return 2.0 * a / (nx - 1); }
    double hy() const { return 2.0 * b / (ny - 1); }
    double x(int i) const { return -a + i * hx(); }
    double y(int j) const { return -b + j * hy(); }
    int idx(int i, int j) const { return j * nx + i; }
    bool boundary(int i, int j) const {
        return i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
    }
};

struct Field2D {
    Grid2D grid;
    std::vector<double> v;

    double& at(int i, int j) { return v[grid.idx(i, j)]; }
    double at(int i, int j) const { return v[grid.idx(i, j)]; }

    double interpolate(double x, double y) const {
        const double fx = (x + grid.a) / grid.hx();
        const double fy = (y + grid.b) / grid.hy();
        int i = std::clamp(static_cast<int>(std::floor(fx)), 0, grid.nx - 2);
        int j = std::clamp(static_cast<int>(std::floor(fy)), 0, grid.ny - 2);
        const double tx = std::clamp(fx - i, 0.0, 1.0);
        const double ty = std::clamp(fy - j, 0.0, 1.0);
        return (1 - tx) * (1 - ty) * at(i, j) + tx * (1 - ty) * at(i + 1, j)
             + (1 - tx) * ty * at(i, j + 1) + tx * ty * at(i + 1, j + 1);
    }
};

// Discrete harmonic extension on the rectangle: 5-point Laplacian, Dirichlet
// data from `g` on the boundary nodes. Throws (with the residual attached)
// if the factorization or the solve misbehaves.
inline Field2D harmonic_extension_grid(const Grid2D& grid,
                                       const std::function<double(double, double)>& g) {
    const int nx = grid.nx, ny = grid.ny;
    const double ihx2 = 1.0 / (grid.hx() * grid.hx());
    const double ihy2 = 1.0 / (grid.hy() * grid.hy());

    // Interior unknowns only.
    const int mx = nx - 2, my = ny - 2;
    auto interior_idx = [&](int i, int j) { return (j - 1) * mx + (i - 1); };

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(mx) * my * 5);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<long>(mx) * my);

    for (int j = 1; j <= my; ++j) {
        for (int i = 1; i <= mx; ++i) {
            const int row = interior_idx(i, j);
            trip.emplace_back(row, row, 2.0 * (ihx2 + ihy2));
            auto couple = [&](int ii, int jj, double w) {
                if (grid.boundary(ii, jj)) {
                    rhs[row] += w * g(grid.x(ii), grid.y(jj));
                } else {
                    trip.emplace_back(row, interior_idx(ii, jj), -w);
                }
            };
            couple(i - 1, j, ihx2);
            couple(i + 1, j, ihx2);
            couple(i, j - 1, ihy2);
            couple(i, j + 1, ihy2);
        }
    }

    Eigen::SparseMatrix<double> A(static_cast<long>(mx) * my, static_cast<long>(mx) * my);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
    solver.compute(A);
    require(solver.info() == Eigen::Success, "harmonic_extension: factorization failed");
    Eigen::VectorXd sol = solver.solve(rhs);
    const double residual = (A * sol - rhs).norm() / std::max(1.0, rhs.norm());
    if (solver.info() != Eigen::Success || residual > 1e-9)
        throw std::runtime_error("harmonic_extension: solve did not converge, residual = "
                                 + std::to_string(residual));

    Field2D out;
    out.grid = grid;
    out.v.assign(static_cast<std::size_t>(nx) * ny, 0.0);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            out.at(i, j) = grid.boundary(i, j) ? g(grid.x(i), grid.y(j))
                                               : sol[interior_idx(i, j)];
    return out;
}

// Harmonic extension inside the disk of radius R for boundary data g(theta),
// via the Fourier coefficients of g (trapezoid rule on the circle, spectrally
// accurate for smooth data). Boundary data must be even under x -> -x, i.e.
// only even angular modes present.
struct DiskHarmonic {
    double R = 1.0;
    double a0 = 0.0;
    std::vector<double> ac, as;  // coefficients of cos(m theta), sin(m theta), m = 1..M

    double eval(double r, double theta) const {
        double v = a0;
        for (std::size_t m = 1; m <= ac.size(); ++m) {
            const double radial = std::pow(r / R, static_cast<double>(m));
            v += radial * (ac[m - 1] * std::cos(m * theta) + as[m - 1] * std::sin(m * theta));
        }
        return v;
    }
};

inline DiskHarmonic disk_harmonic_extension(double R, const std::function<double(double)>& g,
                                            int m_max = 64) {
    const int samples = std::max(8 * m_max, 256);
    std::vector<double> gv(samples);
    for (int q = 0; q < samples; ++q) gv[q] = g(2.0 * pi * q / samples);
    // Evenness under x -> -x is g(theta) = g(theta + pi).
    for (int q = 0; q < samples / 2; ++q) {
        require(std::abs(gv[q] - gv[q + samples / 2]) < 1e-9 * (1.0 + std::abs(gv[q])),
                "disk_harmonic_extension: boundary data not even under x -> -x");
    }
    DiskHarmonic h;
    h.R = R;
    for (int q = 0; q < samples; ++q) h.a0 += gv[q];
    h.a0 /= samples;
    h.ac.assign(m_max, 0.0);
    h.as.assign(m_max, 0.0);
    for (int m = 1; m <= m_max; ++m) {
        double c = 0.0, s = 0.0;
        for (int q = 0; q < samples; ++q) {
            const double th = 2.0 * pi * q / samples;
            c += gv[q] * std::cos(m * th);
            s += gv[q] * std::sin(m * th);
        }
        h.ac[m - 1] = 2.0 * c / samples;
        h.as[m - 1] = 2.0 * s / samples;
    }
    return h;
}

// --------------------------------------------------------------------------
// GreenData
// --------------------------------------------------------------------------

struct GreenData {
    DomainSpec domain;
    double h00 = 0.0;   // regular part at the origin (Robin value)
    Field2D Hgrid;      // rectangle only

    double H(double x, double y) const {
        if (domain.kind == DomainSpec::Kind::disk)
            return std::log(domain.radius) / (2.0 * pi);
        return Hgrid.interpolate(x, y);
    }
    double G(double x, double y) const {
        const double rr = std::hypot(x, y);
        require(rr > 0, "GreenData::G: pole at the origin");
        return -std::log(rr) / (2.0 * pi) + H(x, y);
    }
};

inline GreenData build_green(const DomainSpec& domain) {
    domain.validate();
    GreenData g;
    g.domain = domain;
    if (domain.kind == DomainSpec::Kind::disk) {
        g.h00 = std::log(domain.radius) / (2.0 * pi);
        return g;
    }
    Grid2D grid{domain.a, domain.b, domain.grid_n, domain.grid_n};
    auto data = [](double x, double y) { return std::log(std::hypot(x, y)) / (2.0 * pi); };
    g.Hgrid = harmonic_extension_grid(grid, data);
    g.h00 = g.Hgrid.at((grid.nx - 1) / 2, (grid.ny - 1) / 2);
    return g;
}

// Robin value H(0,0). The rectangle value is Richardson-extrapolated from two
// grids (the raw per-grid value converges at order 2; the extrapolant at ~4).
inline double robin_at_origin(const DomainSpec& domain) {
    domain.validate();
    if (domain.kind == DomainSpec::Kind::disk)
        return std::log(domain.radius) / (2.0 * pi);
    DomainSpec coarse = domain;
    DomainSpec fine = domain;
    fine.grid_n = 2 * domain.grid_n - 1;
    const double c = build_green(coarse).h00;
    const double f = build_green(fine).h00;
    return (4.0 * f - c) / 3.0;
}

inline double green_origin(const DomainSpec& domain, double x, double y) {
    domain.validate();
    const double rr = std::hypot(x, y);
    require(rr > 0, "green_origin: x must differ from the pole");
    if (domain.kind == DomainSpec::Kind::disk) {
        require(rr <= domain.radius * (1 + 1e-12), "green_origin: point outside the disk");
        return std::log(domain.radius / rr) / (2.0 * pi);
    }
    require(std::abs(x) <= domain.a * (1 + 1e-12) && std::abs(y) <= domain.b * (1 + 1e-12),
            "green_origin: point outside the rectangle");
    return build_green(domain).G(x, y);
}

}  // namespace towerlab
