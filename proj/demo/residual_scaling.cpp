// Measure how the ansatz residual shrinks with the coupling: sweep lambda for
// one- and two-bubble towers, print the weighted L^1 norms, and compare the
// fitted ln-ln slope with the predicted decay rate.

#include <cstdio>
#include <vector>

#include "towerlab/residual.hpp"
#include "towerlab/tower.hpp"

int main() {
    using namespace towerlab;

    const DomainSpec disk = DomainSpec::disk();
    const double h00 = build_green(disk).h00;
    const double p = 1.0;

    for (int k = 1; k <= 2; ++k) {
        const std::vector<double> lambdas = log_spaced(1e-2, 1e-6, 6);
        std::vector<double> norms;
        std::printf("k = %d (predicted decay rate %.4f at p = 1)\n", k,
                    predicted_exponent(k, p));
        std::printf("%12s %16s\n", "lambda", "||R||_1");
        for (double lambda : lambdas) {
            const BubbleParams params = select_parameters(k, lambda, h00);
            const Ansatz a = assemble_ansatz(params, disk);
            const NormReport rep = lp_norm(a.mesh, residual_field(a), p, a.annuli);
            norms.push_back(rep.total);
            std::printf("%12.3e %16.8e\n", lambda, rep.total);
        }
        const ScalingFit fit = scaling_fit(lambdas, norms, predicted_exponent(k, p));
        std::printf("fitted slope %.4f vs predicted >= %.4f  -> %s\n\n", fit.slope,
                    fit.predicted - 0.05, fit.meets_prediction ? "ok" : "VIOLATED");
    }
    return 0;
}
