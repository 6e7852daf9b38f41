#pragma once

// Pivoted tridiagonal factorization/solves via LAPACK (dgttrf/dgttrs).
// The discretized radial operators are tridiagonal but can be strongly
// indefinite (each bubble contributes a large negative direction), so partial
// pivoting is not optional.

#include <vector>

#include "towerlab/common.hpp"

extern "C" {
void dgttrf_(const int* n, double* dl, double* d, double* du, double* du2,
             int* ipiv, int* info);
void dgttrs_(const char* trans, const int* n, const int* nrhs, const double* dl,
             const double* d, const double* du, const double* du2,
             const int* ipiv, double* b, const int* ldb, int* info);
}

namespace towerlab {

struct Tridiagonal {
    // Row i: lower[i-1] * x[i-1] + diag[i] * x[i] + upper[i] * x[i+1]
    std::vector<double> lower, diag, upper;

    int size() const { return static_cast<int>(diag.size()); }

    static Tridiagonal zero(int n) {
        Tridiagonal t;
        t.diag.assign(n, 0.0);
        t.lower.assign(n > 0 ? n - 1 : 0, 0.0);
        t.upper.assign(n > 0 ? n - 1 : 0, 0.0);
        return t;
    }

    std::vector<double> apply(const std::vector<double>& x) const {
        const int n = size();
        std::vector<double> y(n, 0.0);
        for (int i = 0; i < n; ++i) {
            double v = diag[i] * x[i];
            if (i > 0) v += lower[i - 1] * x[i - 1];
            if (i + 1 < n) v += upper[i] * x[i + 1];
            y[i] = v;
        }
        return y;
    }
};

class TridiagonalFactor {
  public:
    explicit TridiagonalFactor(const Tridiagonal& t)
        : n_(t.size()), dl_(t.lower), d_(t.diag), du_(t.upper),
          du2_(n_ > 2 ? n_ - 2 : 0, 0.0), ipiv_(n_, 0) {
        int info = 0;
        dgttrf_(&n_, dl_.data(), d_.data(), du_.data(), du2_.data(), ipiv_.data(), &info);
        singular_ = (info > 0);
        require(info >= 0, "dgttrf: bad argument");
    }

    bool singular() const { return singular_; }

    // Smallest |pivot| relative to the largest: crude conditioning signal.
    double min_pivot_ratio() const {
        double lo = 1e300, hi = 0.0;
        for (double p : d_) {
            const double a = std::abs(p);
            lo = std::min(lo, a);
            hi = std::max(hi, a);
        }
        return hi > 0 ? lo / hi : 0.0;
    }

    std::vector<double> solve(std::vector<double> rhs) const {
        require(!singular_, "tridiagonal solve: singular factorization");
        require(static_cast<int>(rhs.size()) == n_, "tridiagonal solve: size mismatch");
        const int nrhs = 1;
        int info = 0;
        const char trans = 'N';
        dgttrs_(&trans, &n_, &nrhs, dl_.data(), d_.data(), du_.data(), du2_.data(),
                ipiv_.data(), rhs.data(), &n_, &info);
        require(info == 0, "dgttrs failed");
        return rhs;
    }

  private:
    int n_;
    std::vector<double> dl_, d_, du_, du2_;
    std::vector<int> ipiv_;
    bool singular_ = false;
};

}  // namespace towerlab
