// Residual and linearization-error fields, the cancellation-free exponential
// rewriting they rest on, weighted L^p norms, and scaling fits in lambda.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "towerlab/residual.hpp"

using Catch::Approx;
using Catch::Matchers::ContainsSubstring;
using namespace towerlab;

namespace {

// Empty tower (W == 0) on a unit disk; select_parameters starts at k = 1, so
// the degenerate case is assembled by hand. Useful because every formula has
// a hand-checkable closed form there.
Ansatz flat_ansatz(double lambda) {
    Ansatz a;
    a.params.k = 0;
    a.params.lambda = lambda;
    a.params.log_lambda = std::log(lambda);
    a.R = 1.0;
    a.mesh = LogRadialMesh::for_scales(std::log(1e-3), 0.0, 64.0, 3.0);
    a.W.assign(static_cast<std::size_t>(a.mesh.n), 0.0);
    a.annuli.k = 1;
    a.annuli.radii = {0.0, 1.0};
    return a;
}

}  // namespace

TEST_CASE("the empty tower reduces every formula to its textbook value", "[residual][flat]") {
    const double lambda = 0.5;
    const auto a = flat_ansatz(lambda);

    SECTION("W == 0 solves the equation exactly") {
        const auto parts = residual_parts(a, 0.3);
        REQUIRE(parts.self == 0.0);
        REQUIRE(parts.opposite == 0.0);
        REQUIRE(parts.cross == 0.0);
        for (double v : residual_field(a)) REQUIRE(v == 0.0);
    }

    SECTION("both exponentials collapse to lambda") {
        const auto e = lambda_exponentials(a, 0.3);
        REQUIRE(e.plus == lambda);
        REQUIRE(e.minus == lambda);
    }

    SECTION("linearization error is the constant 2 lambda") {
        REQUIRE(linear_error_at(a, 0.7) == 2.0 * lambda);
    }

    SECTION("quadratic remainder is lambda (2 sinh(phi) - 2 phi)") {
        const double n = nonlinear_term_at(a, 0.3, 0.1);
        REQUIRE(n == Approx(lambda * (2.0 * std::sinh(0.1) - 0.2)).epsilon(1e-12));
        REQUIRE(n == Approx(0.000166750019844).epsilon(1e-10));
        REQUIRE(nonlinear_term_at(a, 0.3, 0.0) == 0.0);
    }
}

TEST_CASE("the exponential rewriting preserves lambda e^W * lambda e^-W = lambda^2", "[residual][exponentials]") {
    const auto a = assemble_ansatz(select_parameters(2, 1e-3, 0.0), DomainSpec::disk());
    const double l2 = 1e-3 * 1e-3;
    for (int q = 0; q < a.mesh.n; q += 97) {
        const auto e = lambda_exponentials(a, a.mesh.r(q));
        REQUIRE(e.plus > 0.0);
        REQUIRE(e.minus > 0.0);
        REQUIRE(e.plus * e.minus == Approx(l2).epsilon(1e-12));
    }
}

TEST_CASE("stable residual matches the naive formula where exp(W) is safe", "[residual]") {
    // At lambda = 1e-2, |W| stays around 12, so forming exp(+-W) directly is
    // still finite and the two evaluation routes must coincide.
    const auto p = select_parameters(1, 1e-2, 0.0);
    const auto a = assemble_ansatz(p, DomainSpec::disk());
    const double d1 = p.delta(0);
    for (double r : {d1 / 10.0, d1, std::sqrt(d1), 0.3}) {
        const double W = a.W_at(r);
        const double naive = -profile_density(2.0, p.log_delta[0], r)
                           - p.lambda * (std::exp(W) - std::exp(-W));
        const double stable = residual_at(a, r);
        REQUIRE(stable == Approx(naive).epsilon(1e-12));
    }
}

TEST_CASE("each annulus is owned by its bubble", "[residual][parts]") {
    SECTION("single bubble: no cross terms, negligible opposite exponential") {
        const auto p = select_parameters(1, 1e-2, 0.0);
        const auto a = assemble_ansatz(p, DomainSpec::disk());
        const auto parts = residual_parts(a, p.delta(0));
        REQUIRE(parts.j == 1);
        REQUIRE(parts.cross == 0.0);
        REQUIRE(parts.self == Approx(4.0).margin(0.5));
        REQUIRE(std::abs(parts.opposite) <= 1e-6 * std::abs(parts.self));
        REQUIRE(residual_at(a, p.delta(0)) == parts.total());
    }

    SECTION("two levels: the dominant mechanism wins by orders of magnitude") {
        const auto p = select_parameters(2, 1e-3, 0.0);
        const auto a = assemble_ansatz(p, DomainSpec::disk());
        for (int level = 0; level < 2; ++level) {
            const auto parts = residual_parts(a, p.delta(level));
            REQUIRE(parts.j == level + 1);
            REQUIRE(std::abs(parts.self) >= 1e6 * std::abs(parts.opposite));
            REQUIRE(std::abs(parts.self) >= 1e6 * std::abs(parts.cross));
        }
    }
}

TEST_CASE("quadratic remainder really is quadratic", "[residual]") {
    const auto a = assemble_ansatz(select_parameters(1, 1e-3, 0.0), DomainSpec::disk());
    const double r = 0.01, phi = 1e-8;
    const auto e = lambda_exponentials(a, r);
    REQUIRE(std::abs(nonlinear_term_at(a, r, phi))
            <= 0.51 * (e.plus + e.minus) * phi * phi * 1.01);
    REQUIRE_THROWS_WITH(nonlinear_term(a, Field(3, 0.0)),
                        ContainsSubstring("phi must be sampled on the ansatz mesh"));
}

TEST_CASE("weighted norms integrate radial fields over the disk", "[residual][norms]") {
    const auto mesh = LogRadialMesh::for_scales(std::log(1e-3), 0.0, 64.0, 6.0);

    SECTION("constant field, p = 1: the norm is |c| * area") {
        Field f(static_cast<std::size_t>(mesh.n), 2.5);
        const auto rep = lp_norm(mesh, f, 1.0);
        REQUIRE(rep.total == Approx(2.5 * pi).epsilon(5e-4));
        REQUIRE(std::abs(rep.total - 2.5 * pi) <= 3.0 * rep.quadrature_error_estimate);
        REQUIRE(rep.per_annulus.size() == 1);
        REQUIRE(rep.per_annulus[0] == Approx(rep.total).epsilon(1e-14));
    }

    SECTION("f(r) = r, p = 2: closed form sqrt(pi/2)") {
        Field f(static_cast<std::size_t>(mesh.n));
        for (int i = 0; i < mesh.n; ++i) f[static_cast<std::size_t>(i)] = mesh.r(i);
        const auto rep = lp_norm(mesh, f, 2.0);
        REQUIRE(rep.total == Approx(std::sqrt(pi / 2.0)).epsilon(1e-3));
    }

    SECTION("annulus pieces recombine into the total") {
        const auto a = assemble_ansatz(select_parameters(2, 1e-3, 0.0), DomainSpec::disk());
        const auto R = residual_field(a);
        for (double p : {1.0, 1.5}) {
            const auto rep = lp_norm(a.mesh, R, p, a.annuli);
            REQUIRE(rep.per_annulus.size() == 2);
            double sum = 0.0;
            for (double piece : rep.per_annulus) sum += std::pow(piece, p);
            REQUIRE(sum == Approx(std::pow(rep.total, p)).epsilon(1e-12));
        }
    }

    SECTION("input guards") {
        Field f(static_cast<std::size_t>(mesh.n), 1.0);
        REQUIRE_THROWS_WITH(lp_norm(mesh, f, 0.5), ContainsSubstring("p must be >= 1"));
        REQUIRE_THROWS_WITH(lp_norm(mesh, Field(3, 1.0), 1.0),
                            ContainsSubstring("size mismatch"));
    }
}

TEST_CASE("residual norms survive mesh refinement", "[residual][norms]") {
    const auto p = select_parameters(2, 1e-3, 0.0);
    const auto a64 = assemble_ansatz(p, DomainSpec::disk(), ProjectionMode::exact, 64.0);
    const auto a128 = assemble_ansatz(p, DomainSpec::disk(), ProjectionMode::exact, 128.0);
    const auto n64 = lp_norm(a64.mesh, residual_field(a64), 1.0, a64.annuli);
    const auto n128 = lp_norm(a128.mesh, residual_field(a128), 1.0, a128.annuli);
    REQUIRE(n64.total == Approx(0.0034174).epsilon(1e-3));
    REQUIRE(std::abs(n64.total - n128.total)
            <= 3.0 * n64.quadrature_error_estimate + 1e-12);
}

TEST_CASE("predicted decay exponents", "[residual][scaling]") {
    REQUIRE(predicted_exponent(1, 1.0) == Approx(0.5).epsilon(1e-15));
    REQUIRE(predicted_exponent(2, 1.0) == Approx(1.0 / 6.0).epsilon(1e-14));
    REQUIRE(predicted_exponent(1, 1.5) == Approx(1.0 / 6.0).epsilon(1e-14));
    REQUIRE(predicted_exponent(3, 1.0) == Approx(0.1).epsilon(1e-14));
    REQUIRE_THROWS_AS(predicted_exponent(0, 1.0), std::invalid_argument);
    REQUIRE_THROWS_WITH(predicted_exponent(1, 2.0), ContainsSubstring("p must lie in [1, 2)"));
    REQUIRE_THROWS_AS(predicted_exponent(1, 0.99), std::invalid_argument);
}

TEST_CASE("log-log fits recover exact power laws", "[residual][scaling]") {
    const std::vector<double> lambdas{1e-2, 1e-3, 1e-4};
    std::vector<double> norms;
    for (double l : lambdas) norms.push_back(3.0 * std::pow(l, 0.37));

    const auto fit = scaling_fit(lambdas, norms, 0.40);
    REQUIRE(fit.slope == Approx(0.37).margin(1e-12));
    REQUIRE(fit.intercept == Approx(std::log(3.0)).margin(1e-10));
    REQUIRE(fit.rms_residual <= 1e-13);
    REQUIRE(fit.meets_prediction);  // 0.37 >= 0.40 - 0.05

    const auto miss = scaling_fit(lambdas, norms, 0.45);
    REQUIRE_FALSE(miss.meets_prediction);  // 0.37 < 0.45 - 0.05

    REQUIRE_THROWS_WITH(scaling_fit({1e-2}, {1.0}, 0.5),
                        ContainsSubstring("at least two points"));
    REQUIRE_THROWS_WITH(scaling_fit({1e-2, 1e-3}, {1.0, -1.0}, 0.5),
                        ContainsSubstring("must be positive"));
    REQUIRE_THROWS_AS(scaling_fit({1e-2, 1e-3}, {1.0}, 0.5), std::invalid_argument);
}

TEST_CASE("measured residual norms decay at least at the predicted rate", "[residual][scaling]") {
    const std::vector<double> lambdas{1e-2, 1e-3, 1e-4, 1e-5};
    for (int k : {1, 2}) {
        std::vector<double> r_norms, s_norms;
        for (double l : lambdas) {
            const auto a = assemble_ansatz(select_parameters(k, l, 0.0), DomainSpec::disk());
            r_norms.push_back(lp_norm(a.mesh, residual_field(a), 1.0, a.annuli).total);
            s_norms.push_back(lp_norm(a.mesh, linear_error_field(a), 1.0, a.annuli).total);
        }
        const auto fr = scaling_fit(lambdas, r_norms, predicted_exponent(k, 1.0));
        const auto fs = scaling_fit(lambdas, s_norms, predicted_exponent(k, 1.0));
        // Measured slopes sit near 1.0 for both towers, comfortably above the
        // guaranteed rate; pin a band so regressions in either direction show up.
        REQUIRE(fr.slope == Approx(1.0).margin(0.1));
        REQUIRE(fs.slope == Approx(1.0).margin(0.1));
        REQUIRE(fr.meets_prediction);
        REQUIRE(fs.meets_prediction);
        REQUIRE(fr.rms_residual < 0.05);
    }
}
