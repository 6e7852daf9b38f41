// Build a two-bubble tower on the unit disk and print what it looks like:
// the selected concentration scales, a coarse radial profile of the ansatz,
// and the per-level mismatch certificates.

#include <cstdio>

#include "towerlab/residual.hpp"
#include "towerlab/tower.hpp"

int main() {
    using namespace towerlab;

    const int k = 2;
    const double lambda = 1e-4;
    const DomainSpec disk = DomainSpec::disk();

    const BubbleParams params = select_parameters(k, lambda, build_green(disk).h00);
    std::printf("tower of %d bubbles at lambda = %.1e on the unit disk\n\n", k, lambda);
    std::printf("%5s %7s %14s %14s %12s\n", "level", "alpha", "ln(delta)", "delta", "exponent");
    for (int i = 0; i < k; ++i)
        std::printf("%5d %7.0f %14.6f %14.6e %12.6f\n", i + 1, params.alpha[i],
                    params.log_delta[i], params.delta(i), params.exponent[i]);

    const Ansatz a = assemble_ansatz(params, disk);
    std::printf("\nmesh: %d nodes, s in [%.2f, %.2f]\n", a.mesh.n, a.mesh.s_min, a.mesh.s_max);
    std::printf("annulus boundaries:");
    for (double r : a.annuli.radii) std::printf(" %.3e", r);
    std::printf("\n\n%14s %14s %14s\n", "r", "W(r)", "residual");
    for (int q = 0; q < a.mesh.n; q += a.mesh.n / 16) {
        const double r = a.mesh.r(q);
        std::printf("%14.6e %+14.6f %+14.6e\n", r, a.W[q], residual_at(a, r));
    }

    std::printf("\nmismatch certificates (sup |Theta_j| / (r + lambda)):\n");
    for (int j = 1; j <= k; ++j) {
        const ThetaCertificate cert = theta_certificate(a, j);
        std::printf("  level %d: ratio %.4f, sup |Theta| %.3e\n", j, cert.max_ratio,
                    cert.max_abs);
    }
    return 0;
}
