#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "qspec/truth.hpp"

using namespace qspec;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using std::numbers::pi;

namespace {

/// Independent oracle: Phi2 by 2-D midpoint integration of the density over
/// [-8, h] x [-8, k].
double bvn_brute(double h, double k, double rho) {
    const int m = 1500;
    const double lo = -8.0;
    const double dx = (h - lo) / m, dy = (k - lo) / m;
    const double c = 1.0 / (2 * pi * std::sqrt(1 - rho * rho));
    double s = 0.0;
    for (int i = 0; i < m; ++i) {
        const double x = lo + (i + 0.5) * dx;
        for (int j = 0; j < m; ++j) {
            const double y = lo + (j + 0.5) * dy;
            s += std::exp(-(x * x - 2 * rho * x * y + y * y) / (2 * (1 - rho * rho)));
        }
    }
    return c * s * dx * dy;
}

}  // namespace

TEST_CASE("orthant probabilities") {
    CHECK(bvn_orthant(0.0) == 0.25);
    CHECK_THAT(bvn_orthant(1.0), WithinAbs(0.5, 1e-15));
    CHECK_THAT(bvn_orthant(-0.3), WithinAbs(0.25 + std::asin(-0.3) / (2 * pi), 1e-15));
    CHECK_THAT(bvn_orthant(-0.3), WithinAbs(0.2015070, 5e-7));
    CHECK_THROWS(bvn_orthant(1.01));
    CHECK_THROWS(bvn_cdf(0.0, 0.0, -1.5));
}

TEST_CASE("bivariate normal quadrature") {
    std::mt19937_64 g(1);
    std::uniform_real_distribution<double> u(-0.999, 0.999);
    for (int i = 0; i < 100; ++i) {
        const double rho = u(g);
        CHECK_THAT(detail::bvn_quadrature(0.0, 0.0, rho), WithinAbs(bvn_orthant(rho), 1e-10));
    }
    for (auto [h, k, rho] : {std::tuple{-1.6, 0.3, -0.3}, {0.7, 1.2, 0.8}, {-0.5, -2.0, 0.09}}) {
        CHECK_THAT(bvn_cdf(h, k, rho), WithinAbs(bvn_brute(h, k, rho), 2e-6));
    }
    CHECK_THAT(bvn_cdf(0.4, -0.2, 0.0), WithinAbs(normal_cdf(0.4) * normal_cdf(-0.2), 1e-15));
    CHECK_THAT(bvn_cdf(0.4, -0.2, 1.0), WithinAbs(normal_cdf(-0.2), 1e-15));
    CHECK_THAT(bvn_cdf(0.4, -0.2, -1.0), WithinAbs(normal_cdf(0.4) - normal_cdf(0.2), 1e-15));
}

TEST_CASE("copula cross-covariances") {
    const auto gauss = ModelSpec::ar1_of(-0.3, Distribution::gaussian);
    const auto cauchy = ModelSpec::ar1_of(-0.3, Distribution::cauchy);
    CHECK_THAT(copula_crosscov(CrossCovSource::exact, gauss, 1, 0.5, 0.5).value,
               WithinAbs(std::asin(-0.3) / (2 * pi), 1e-12));
    CHECK_THAT(copula_crosscov(CrossCovSource::exact, gauss, 1, 0.5, 0.5).value, WithinAbs(-0.0484930, 5e-7));
    for (double tau : {0.05, 0.3, 0.5}) {
        CHECK_THAT(exact_copula_crosscov(gauss, 0, tau, tau), WithinAbs(tau * (1 - tau), 1e-12));
        CHECK_THAT(exact_copula_crosscov(cauchy, 0, tau, tau), WithinAbs(tau * (1 - tau), 1e-15));
    }
    const auto white = ModelSpec::ar1_of(0.0, Distribution::gaussian);
    CHECK(exact_copula_crosscov(white, 3, 0.2, 0.7) == 0.0);
    CHECK(exact_copula_crosscov(ModelSpec::ar1_of(0.0, Distribution::cauchy), -2, 0.2, 0.7) == 0.0);
    CHECK(copula_crosscov(CrossCovSource::monte_carlo, white, 2, 0.5, 0.5, {20000, 3}).value != 0.0);
    CHECK_THROWS(gaussian_ar1_copula_crosscov(1.0, 1, 0.5, 0.5));
    CHECK_THROWS(copula_crosscov(CrossCovSource::monte_carlo, gauss, 50, 0.5, 0.5, {499, 1}));
    CHECK_THROWS(copula_crosscov(CrossCovSource::exact, gauss, 1, 0.0, 0.5));
}

TEST_CASE("Frechet bounds and lag symmetry") {
    for (const auto& m : {ModelSpec::ar1_of(-0.3, Distribution::gaussian), ModelSpec::ar1_of(0.6, Distribution::cauchy)}) {
        const auto t = exact_crosscov_table(m, {0.05, 0.25, 0.5, 0.75, 0.95}, 10);
        for (long k = -10; k <= 10; ++k)
            for (std::size_t a = 0; a < 5; ++a)
                for (std::size_t b = 0; b < 5; ++b) {
                    const double ta = t.taus()[a], tb = t.taus()[b];
                    CHECK(t.gamma(k, a, b) <= std::min(ta, tb) - ta * tb + 1e-12);
                    CHECK(t.gamma(k, a, b) >= std::max(0.0, ta + tb - 1) - ta * tb - 1e-12);
                    CHECK(t.gamma(-k, a, b) == t.gamma(k, b, a));
                }
    }
}

TEST_CASE("Cauchy quadrature against a Monte-Carlo path") {
    const auto m = ModelSpec::ar1_of(-0.3, Distribution::cauchy);
    const Series path = simulate(m, 400000, 42, 0);
    for (long k : {1L, 2L, -1L, 3L})
        for (auto [a, b] : {std::pair{0.05, 0.5}, {0.5, 0.5}, {0.25, 0.95}}) {
            const auto mc = crosscov_from_path(path.values(), k, a, b);
            CHECK(std::abs(mc.value - cauchy_ar1_copula_crosscov(-0.3, k, a, b)) <= 4 * mc.standard_error);
        }
}

TEST_CASE("Gaussian MC agrees with the exact source over the grid") {
    const auto m = ModelSpec::ar1_of(-0.3, Distribution::gaussian);
    const std::vector<double> taus{0.05, 0.25, 0.5, 0.75, 0.95};
    const auto mc = monte_carlo_crosscov_table(m, taus, 5, 200000, 9);
    const auto ex = exact_crosscov_table(m, taus, 5);
    int outside = 0, total = 0;
    for (long k = -5; k <= 5; ++k)
        for (std::size_t a = 0; a < 5; ++a)
            for (std::size_t b = 0; b < 5; ++b) {
                ++total;
                if (std::abs(mc.gamma(k, a, b) - ex.gamma(k, a, b)) > 3 * mc.standard_error(k, a, b)) ++outside;
            }
    // 275 correlated comparisons at 3 SE: a handful may fall outside
    CHECK(outside <= total / 50);
}

TEST_CASE("copula spectral density") {
    const auto iid = exact_crosscov_table(ModelSpec::iid_of(Distribution::uniform), {0.5}, 50);
    for (double w : {0.0, 0.3, 2.0, pi})
        CHECK_THAT(copula_sdk(iid, w, 0, 0).real(), WithinAbs(1 / (8 * pi), 1e-15));

    const auto g = exact_crosscov_table(ModelSpec::ar1_of(-0.3, Distribution::gaussian), {0.25, 0.5, 0.9}, 50);
    double series = 0.25;
    for (int k = 1; k <= 50; ++k) series += 2 * std::asin(std::pow(-0.3, k)) / (2 * pi);
    CHECK_THAT(copula_sdk(g, 0.0, 1, 1).real(), WithinAbs(series / (2 * pi), 1e-12));
    CHECK_THAT(copula_sdk(g, 0.0, 1, 1).real(), WithinAbs(0.027867, 2e-6));
    for (double w : {0.1, 1.0, 2.5}) {
        const auto all = copula_sdk(g, w);
        for (std::size_t a = 0; a < 3; ++a)
            for (std::size_t b = 0; b < 3; ++b) {
                CHECK(std::abs(all[b * 3 + a] - std::conj(all[a * 3 + b])) <= 1e-15);
                CHECK(std::abs(all[a * 3 + b].imag()) <= 1e-12);  // time reversible
            }
        for (std::size_t a = 0; a < 3; ++a) CHECK(all[a * 3 + a].real() >= -1e-12);
    }
    // t1 innovations are not time reversible
    const auto c = exact_crosscov_table(ModelSpec::ar1_of(-0.3, Distribution::cauchy), {0.05, 0.5}, 50);
    CHECK(std::abs(copula_sdk(c, 1.0, 0, 1).imag()) > 1e-4);
}

TEST_CASE("marginal densities and scaling") {
    CHECK_THAT(marginal_density_at_quantile(Distribution::gaussian, -0.3, TauLevel{0.5}),
               WithinAbs(std::sqrt(0.91) / std::sqrt(2 * pi), 1e-14));
    CHECK_THAT(marginal_density_at_quantile(Distribution::gaussian, -0.3, TauLevel{0.5}), WithinAbs(0.380569, 5e-6));
    CHECK_THAT(marginal_density_at_quantile(Distribution::cauchy, -0.3, TauLevel{0.5}), WithinAbs(0.7 / pi, 1e-14));
    CHECK_THAT(marginal_density_at_quantile(Distribution::gaussian, 0.0, TauLevel{0.5}), WithinAbs(0.398942, 5e-7));
    CHECK_THROWS(marginal_density_at_quantile(Distribution::gaussian, 1.2, TauLevel{0.5}));

    CHECK_THAT(scaled_sdk({0.027867, 0.0}, 0.380569, 0.380569).real(), WithinAbs(0.19241, 1e-5));
    CHECK(scaled_sdk({0.3, -0.1}, 1.0, 1.0) == KernelValue{0.3, -0.1});
    CHECK_THAT(scaled_sdk({1 / (8 * pi), 0}, normal_pdf(0), normal_pdf(0)).real(), WithinAbs(0.25, 1e-12));
    CHECK_THROWS(scaled_sdk({1, 0}, 0.0, 1.0));
}

TEST_CASE("spectral truth over a grid") {
    const auto m = ModelSpec::ar1_of(-0.3, Distribution::gaussian);
    const auto t = exact_crosscov_table(m, {0.25, 0.75}, 50);
    const FourierGrid grid(20);
    const auto f = spectral_truth(t, grid);
    CHECK(f.value(0, 1, 3) == copula_sdk(t, grid.frequency(3), 0, 1));
    const double dens[] = {marginal_density_at_quantile(m, TauLevel{0.25}), marginal_density_at_quantile(m, TauLevel{0.75})};
    const auto s = spectral_truth(t, grid, SpectralScale::scaled, dens);
    CHECK(std::abs(s.value(0, 1, 3) - f.value(0, 1, 3) / (dens[0] * dens[1])) <= 1e-15);
    CHECK_THROWS(spectral_truth(t, grid, SpectralScale::scaled, {}));
}
