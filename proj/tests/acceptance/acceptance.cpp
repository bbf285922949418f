// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Worker count follows QS_THREADS.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "qspec/qspec.hpp"

using namespace qspec;
using std::numbers::pi;

namespace {

const std::vector<double> grid5{0.05, 0.25, 0.5, 0.75, 0.95};

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
        }
    }
    void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
    char buf[200];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

int failures = 0;
std::vector<int> selected;  // empty: run everything

void report(int id, const char* title, const std::function<Outcome()>& body) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), id) == selected.end()) return;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("[%s] %d. %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs);
    std::fflush(stdout);
}

RmseReport rmse_for(Distribution d) {
    ExperimentConfig c;
    c.model = ModelSpec::ar1_of(-0.3, d);
    c.n_list = {100, 500};
    c.spans = {{2, 1}, {10, 4}};
    c.replications = 200;
    c.taus = grid5;
    c.seed = 20240501;
    return rmse_study(c);
}

/// Minimum of the check objective over all vertices (fits through P points).
template <std::size_t P>
double vertex_oracle(const std::vector<linalg::Vec<P>>& rows, const std::vector<double>& y, double tau) {
    const std::size_t n = y.size();
    double best = INFINITY;
    std::array<std::size_t, P> idx{};
    for (std::size_t k = 0; k < P; ++k) idx[k] = k;
    for (;;) {
        linalg::Mat<P> a{};
        linalg::Vec<P> b{};
        for (std::size_t k = 0; k < P; ++k) {
            a[k] = rows[idx[k]];
            b[k] = y[idx[k]];
        }
        if (auto c = linalg::solve<P>(a, b, 1e-10))
            best = std::min(best, check_objective<P>(std::span<const linalg::Vec<P>>(rows), y, tau, *c));
        std::size_t k = P;
        while (k > 0 && idx[k - 1] == n - P + k - 1) --k;
        if (k == 0) break;
        ++idx[k - 1];
        for (std::size_t t = k; t < P; ++t) idx[t] = idx[t - 1] + 1;
    }
    return best;
}

}  // namespace

int main(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
    std::printf("qspec %s acceptance, %u worker(s)\n", std::string(qspec::version).c_str(), default_threads());
    RmseReport gauss, cauchy;
    double gauss_seconds = 0.0;

    report(1, "RMSE at the reference design, Gaussian AR(1) n=500", [&] {
        Outcome o;
        gauss = rmse_for(Distribution::gaussian);
        gauss_seconds = gauss.meta.runtime_seconds;
        const auto& b = gauss.for_n(500);
        const double r05 = b.at(0.05, 0.05).rmse, r50 = b.at(0.5, 0.5).rmse;
        o.note(fmt("RMSE(.05,.05)=%.4f vs 0.0086", r05));
        o.note(fmt("RMSE(.5,.5)=%.4f vs 0.0487", r50));
        o.require(std::abs(r05 - 0.0086) <= 0.3 * 0.0086, "(.05,.05) outside +-30%");
        o.require(std::abs(r50 - 0.0487) <= 0.3 * 0.0487, "(.5,.5) outside +-30%");
        o.note(fmt("n=100 and n=500 study took %.1f s", gauss_seconds));
        o.require(gauss_seconds <= 600.0, "runtime above 10 minutes");
        return o;
    });

    report(2, "RMSE monotonicity n=100 -> n=500, both innovation laws", [&] {
        Outcome o;
        if (gauss.blocks.empty()) gauss = rmse_for(Distribution::gaussian);
        cauchy = rmse_for(Distribution::cauchy);
        for (const auto* r : {&gauss, &cauchy}) {
            const auto& small = r->for_n(100);
            const auto& large = r->for_n(500);
            int bad = 0;
            double worst = 0.0;
            for (const auto& e : small.entries) {
                const double ratio = large.at(e.tau1, e.tau2).rmse / e.rmse;
                worst = std::max(worst, ratio);
                if (!(ratio < 1.0)) ++bad;
            }
            const std::string law = r == &gauss ? "gaussian" : "t1";
            o.note(law + fmt(": largest RMSE(500)/RMSE(100) %.3f over %.0f pairs", worst,
                             static_cast<double>(small.entries.size())));
            o.require(bad == 0, law + " has pairs that do not decrease");
        }
        return o;
    });

    report(3, "Unbiasedness of the raw rank kernel at (0.5, 0.5, g_n(pi/2))", [&] {
        Outcome o;
        ExperimentConfig c;
        c.model = ModelSpec::iid_of(Distribution::uniform);
        c.n_list = {500};
        c.replications = 500;
        c.taus = {0.5};
        c.spans = {};
        c.seed = 77;
        const double w[] = {pi / 2};
        const auto white = unbiasedness_study(c, w).rows.at(0);
        o.note(fmt("white noise mean %.4f (SE %.4f)", white.mean.real(), white.se_re));
        o.require(std::abs(white.mean.real() - 0.25) <= 0.035, "white-noise mean outside 0.25 +- 0.035");
        o.require(std::abs(white.mean.real() - 0.25) <= 3 * white.se_re, "white-noise mean outside 3 SE");
        c.model = ModelSpec::ar1_of(-0.3, Distribution::gaussian);
        const auto ar = unbiasedness_study(c, w).rows.at(0);
        o.note(fmt("AR(1) mean %.4f vs truth %.4f (SE %.4f)", ar.mean.real(), ar.truth.real(), ar.se_re));
        o.require(std::abs(ar.mean.real() - ar.truth.real()) <= 3 * ar.se_re, "AR(1) mean outside 3 SE of truth");
        return o;
    });

    report(4, "Oracle agreement: Monte Carlo vs arcsine, BVN quadrature vs orthant", [&] {
        Outcome o;
        const auto m = ModelSpec::ar1_of(-0.3, Distribution::gaussian);
        const auto mc = copula_crosscov(CrossCovSource::monte_carlo, m, 1, 0.5, 0.5, {1'000'000, 314159});
        const double exact = bvn_orthant(-0.3) - 0.25;
        o.note(fmt("MC %.6f +- %.6f vs exact %.7f", mc.value, mc.standard_error, exact));
        // the reference value is quoted to seven decimals
        o.require(std::abs(exact - (-0.0484930)) <= 5e-7, "exact value differs from -0.0484930");
        o.require(std::abs(mc.value - (-0.0484930)) <= 3 * mc.standard_error, "MC outside 3 SE");
        std::mt19937_64 g(2718);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const double rho = u(g);
            worst = std::max(worst, std::abs(detail::bvn_quadrature(0.0, 0.0, rho) - bvn_orthant(rho)));
        }
        o.note(fmt("max BVN error %.2e on 100 rho", worst));
        o.require(worst <= 1e-10, "BVN quadrature error above 1e-10");
        return o;
    });

    report(5, "Asymptotic equivalence of rank and clipped kernels", [&] {
        Outcome o;
        ExperimentConfig c;
        c.model = ModelSpec::iid_of(Distribution::uniform);
        c.n_list = {128, 512, 2048};
        c.replications = 20;
        c.taus = grid5;
        c.seed = 555;
        const auto r = equivalence_study(c);
        for (double tau : grid5) {
            const double m1 = r.at(128, tau, tau).median, m2 = r.at(512, tau, tau).median,
                         m3 = r.at(2048, tau, tau).median;
            o.note(fmt("tau %.2f", tau) + fmt(" medians %.4f %.4f", m1, m2) + fmt(" %.4f", m3));
            o.require(m2 <= m1 && m3 <= m2, fmt("non-monotone at tau %.2f", tau));
            o.require(r.at(2048, tau, tau).max_diagonal_imag_gap == 0.0, "diagonal imaginary gap");
        }
        return o;
    });

    report(6, "Invariance suite", [&] {
        Outcome o;
        std::mt19937_64 g(66);
        // rank tables under monotone transforms
        int identical = 0;
        for (int rep = 0; rep < 10; ++rep) {
            const Series s = simulate(ModelSpec::ar1_of(-0.3, rep % 2 ? Distribution::cauchy : Distribution::gaussian),
                                      64 + 13 * rep, 66, rep);
            const auto base = periodogram_table(s, grid5, EstimatorMode::rank);
            // exp overflows for t1 draws; shrink first with an affine map
            const Series small = apply_monotone(s, transform::Affine{0.0, 1e-3});
            bool same = periodogram_table(apply_monotone(s, transform::Cube{}), grid5, EstimatorMode::rank) == base &&
                        periodogram_table(apply_monotone(small, transform::Exp{}), grid5, EstimatorMode::rank) == base &&
                        periodogram_table(apply_monotone(s, transform::Affine{2.0, 0.5}), grid5, EstimatorMode::rank) == base;
            identical += same ? 1 : 0;
        }
        o.note(fmt("%.0f/10 rank tables bit-identical", identical));
        o.require(identical == 10, "rank table changed under a monotone transform");
        // Hermitian symmetry, diagonal reality and non-negativity
        int bad = 0;
        const EstimatorMode modes[] = {EstimatorMode::raw, EstimatorMode::rank, EstimatorMode::clipped};
        for (int rep = 0; rep < 100; ++rep) {
            const std::size_t n = 8 + g() % 120;
            const Series s = simulate(ModelSpec::ar1_of(-0.9 + 1.8 * (g() % 1000) / 1000.0,
                                                        g() % 2 ? Distribution::cauchy : Distribution::gaussian),
                                      n, g(), 0);
            const auto t = periodogram_table(s, grid5, modes[rep % 3]);
            for (std::size_t j = 1; j <= t.grid().size(); ++j)
                for (std::size_t a = 0; a < 5; ++a) {
                    if (std::abs(t.value(a, a, j).imag()) > 1e-10 || t.value(a, a, j).real() < 0.0) ++bad;
                    for (std::size_t b = 0; b < 5; ++b)
                        if (t.value(b, a, j) != std::conj(t.value(a, b, j))) ++bad;
                }
        }
        o.note(fmt("%.0f symmetry/reality violations in 100 tables", bad));
        o.require(bad == 0, "table invariant violated");
        // Knight
        std::uniform_real_distribution<double> u(-5.0, 5.0), t(0.001, 0.999);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) worst = std::max(worst, std::abs(knight_gap(u(g), u(g), t(g))));
        o.note(fmt("Knight max gap %.1e", worst));
        o.require(worst <= 1e-12, "Knight gap above 1e-12");
        // Daniell
        int wbad = 0;
        for (int rep = 0; rep < 50; ++rep) {
            std::vector<int> spans(1 + g() % 4);
            for (int& m : spans) m = 1 + static_cast<int>(g() % 40);
            const auto w = daniell_weights(spans);
            double sum = 0.0;
            for (double v : w.values()) sum += v;
            if (std::abs(sum - 1.0) > 1e-12) ++wbad;
            const auto N = static_cast<std::ptrdiff_t>(w.half_width());
            for (std::ptrdiff_t k = 1; k <= N; ++k)
                if (w(k) != w(-k)) ++wbad;
        }
        o.require(wbad == 0, "Daniell weights not symmetric/unit-sum");
        return o;
    });

    report(7, "Solver certification on 500 small instances", [&] {
        Outcome o;
        std::mt19937_64 g(7);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        double worst_excess = -INFINITY, worst_cert = 0.0, worst_equi = 0.0;
        int bad = 0;
        for (int rep = 0; rep < 500; ++rep) {
            const std::size_t n = 4 + g() % 61;
            const Distribution d = rep % 3 == 0 ? Distribution::cauchy : Distribution::gaussian;
            const Series draw = simulate_iid(d, n, g());
            std::vector<double> y(draw.values().begin(), draw.values().end());
            if (rep % 5 == 0)  // rounded data: ties and degenerate vertices
                for (double& v : y) v = std::round(2.0 * v);
            const FourierGrid grid(n);
            const std::size_t j = 1 + g() % grid.size();
            const double tau = 0.02 + 0.96 * U(g);
            const auto rows = harmonic_design_at(n, j);
            const bool nyq = grid.is_nyquist(j);
            const auto fit = harmonic_quantile_fit(rows, y, tau, nyq);
            const double oracle = nyq ? vertex_oracle<2>(drop_sine(rows), y, tau) : vertex_oracle<3>(rows, y, tau);
            worst_excess = std::max(worst_excess, fit.objective - oracle);
            worst_cert = std::max(worst_cert, fit.subgradient_gap / (1e-6 * static_cast<double>(n)));
            if (!(fit.objective <= oracle + 1e-6) || !(fit.subgradient_gap <= 1e-6 * static_cast<double>(n))) ++bad;
            if (rep % 5 != 0) {
                // continuous data: the minimiser is unique, so coefficients transform exactly
                const double m = 3.0 * U(g) - 1.5, s = 0.1 + 5.0 * U(g);
                std::vector<double> ys(y), yc(y);
                for (double& v : ys) v += m;
                for (double& v : yc) v *= s;
                const auto fs = harmonic_quantile_fit(rows, ys, tau, nyq);
                const auto fc = harmonic_quantile_fit(rows, yc, tau, nyq);
                const double scale = std::max({1.0, std::abs(fit.a), std::abs(fit.b[0]), std::abs(fit.b[1])});
                const double e1 = std::max({std::abs(fs.a - fit.a - m), std::abs(fs.b[0] - fit.b[0]),
                                            std::abs(fs.b[1] - fit.b[1])}) / scale;
                const double e2 = std::max({std::abs(fc.a - s * fit.a), std::abs(fc.b[0] - s * fit.b[0]),
                                            std::abs(fc.b[1] - s * fit.b[1])}) / (s * scale);
                worst_equi = std::max({worst_equi, e1, e2});
            }
        }
        o.note(fmt("max objective - oracle %.2e", worst_excess));
        o.note(fmt("max certificate / tolerance %.2e", worst_cert));
        o.note(fmt("max equivariance error %.2e", worst_equi));
        o.require(bad == 0, "objective above oracle or certificate violated");
        o.require(worst_equi <= 1e-8, "equivariance error above 1e-8");
        return o;
    });

    report(8, "Time reversibility, Gaussian AR(1) n=2000", [&] {
        Outcome o;
        ExperimentConfig c;
        c.model = ModelSpec::ar1_of(-0.3, Distribution::gaussian);
        c.n_list = {2000};
        c.replications = 50;
        c.taus = grid5;
        c.spans = {proportional_spans(std::vector<int>{10, 4}, 500, 2000)};
        c.seed = 8888;
        const auto row = reversibility_study(c).rows.at(0);
        o.note(fmt("mean|Im|/mean|Re| = %.4f", row.ratio));
        o.note(fmt("truth max|Im| = %.1e", row.truth_max_abs_imag));
        o.require(row.ratio <= 0.2, "ratio above 0.2");
        o.require(row.truth_max_abs_imag <= 1e-12, "truth imaginary part not zero");
        return o;
    });

    std::printf("%s: %d criterion(s) failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
