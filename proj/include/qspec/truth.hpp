#pragma once

// Ground truth for the simulation designs: copula cross-covariances
// gamma_k(tau1, tau2) = Cov(1{U_t <= tau1}, 1{U_{t-k} <= tau2}) and the copula
// spectral density f(tau1, tau2, w) = (2 pi)^-1 sum_k gamma_k e^{-ikw}.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/distributions/cauchy.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qspec/periodogram.hpp"
#include "qspec/series.hpp"
#include "qspec/simulation.hpp"

namespace qspec {

inline double normal_cdf(double x) { return boost::math::cdf(boost::math::normal_distribution<>{}, x); }
inline double normal_pdf(double x) { return boost::math::pdf(boost::math::normal_distribution<>{}, x); }
inline double normal_quantile(double p) {
    return boost::math::quantile(boost::math::normal_distribution<>{}, p);
}

/// P(Z1 <= 0, Z2 <= 0) for standard normals with correlation rho.
inline double bvn_orthant(double rho) {
    if (!(std::abs(rho) <= 1.0)) throw std::invalid_argument("correlation must lie in [-1, 1]");
    return 0.25 + std::asin(rho) / two_pi;
}

namespace detail {

/// Phi2(h, k; rho) = Phi(h) Phi(k) + (2 pi)^-1 int_0^{asin rho}
///     exp(-(h^2 + k^2 - 2 h k sin t) / (2 cos^2 t)) dt,
/// the correlation-derivative identity with r = sin t, which removes the
/// 1/sqrt(1 - r^2) singularity at |rho| = 1.
inline double bvn_quadrature(double h, double k, double rho) {
    const double upper = std::asin(rho);
    if (upper == 0.0) return normal_cdf(h) * normal_cdf(k);
    auto integrand = [&](double t) {
        const double c = std::cos(t);
        if (c <= 0.0) return 0.0;
        const double e = (h * h + k * k - 2.0 * h * k * std::sin(t)) / (2.0 * c * c);
        return std::exp(-e);
    };
    double err = 0.0;
    const double integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, 0.0, upper, 15, 1e-14, &err);
    return normal_cdf(h) * normal_cdf(k) + integral / two_pi;
}

}  // namespace detail

/// Bivariate standard normal CDF P(Z1 <= h, Z2 <= k) with correlation rho.
inline double bvn_cdf(double h, double k, double rho) {
    if (!(std::abs(rho) <= 1.0)) throw std::invalid_argument("correlation must lie in [-1, 1]");
    if (rho == 1.0) return normal_cdf(std::min(h, k));
    if (rho == -1.0) return std::max(0.0, normal_cdf(h) - normal_cdf(-k));
    if (h == 0.0 && k == 0.0) return bvn_orthant(rho);
    return detail::bvn_quadrature(h, k, rho);
}

// ---------------------------------------------------------------------------
// Marginals of the stationary AR(1) designs

/// Stationary marginal scale: normal sd (1 - theta^2)^-1/2 or Cauchy scale
/// sum_j |theta|^j = 1 / (1 - |theta|).
inline double ar1_marginal_scale(Distribution innovation, double theta) {
    if (!(std::abs(theta) < 1.0)) throw std::invalid_argument("AR(1) needs |theta| < 1");
    switch (innovation) {
        case Distribution::gaussian: return 1.0 / std::sqrt(1.0 - theta * theta);
        case Distribution::cauchy: return 1.0 / (1.0 - std::abs(theta));
        default: throw std::invalid_argument("AR(1) marginal needs gaussian or cauchy innovations");
    }
}

inline double ar1_marginal_quantile(Distribution innovation, double theta, double tau) {
    const double s = ar1_marginal_scale(innovation, theta);
    if (innovation == Distribution::gaussian) return s * normal_quantile(tau);
    return boost::math::quantile(boost::math::cauchy_distribution<>(0.0, s), tau);
}

/// f_Y(q_tau) for the stationary marginal of an AR(1) design.
inline double marginal_density_at_quantile(Distribution innovation, double theta, TauLevel tau) {
    const double s = ar1_marginal_scale(innovation, theta);
    const double q = ar1_marginal_quantile(innovation, theta, tau);
    if (innovation == Distribution::gaussian) return normal_pdf(q / s) / s;
    return boost::math::pdf(boost::math::cauchy_distribution<>(0.0, s), q);
}

inline double marginal_density_at_quantile(const ModelSpec& m, TauLevel tau) {
    if (m.kind == ModelSpec::Kind::iid && m.distribution == Distribution::uniform) return 1.0;
    return marginal_density_at_quantile(m.distribution, m.kind == ModelSpec::Kind::iid ? 0.0 : m.theta,
                                        tau);
}

/// Copula value divided by f_Y(q_tau1) f_Y(q_tau2).
inline KernelValue scaled_sdk(KernelValue value, double f1, double f2) {
    if (!(f1 > 0.0 && f2 > 0.0)) throw std::invalid_argument("scaled_sdk: densities must be positive");
    return value / (f1 * f2);
}

// ---------------------------------------------------------------------------
// Copula cross-covariances

/// Exact Gaussian AR(1): Phi2(q1, q2; theta^|k|) - tau1 tau2.
inline double gaussian_ar1_copula_crosscov(double theta, long k, double tau1, double tau2) {
    if (!(std::abs(theta) < 1.0)) throw std::invalid_argument("AR(1) needs |theta| < 1");
    const double rho = std::pow(theta, static_cast<double>(std::labs(k)));
    return bvn_cdf(normal_quantile(tau1), normal_quantile(tau2), rho) - tau1 * tau2;
}

/// Exact Cauchy AR(1), by one-dimensional quadrature. For k >= 1,
/// Y_t = theta^k Y_{t-k} + eta with eta ~ Cauchy(0, s_k) independent of
/// Y_{t-k}, s_k = sum_{j<k} |theta|^j, so
///     P(Y_t <= q1, Y_{t-k} <= q2) = int_0^tau2 F_eta(q1 - theta^k Q(u)) du.
inline double cauchy_ar1_copula_crosscov(double theta, long k, double tau1, double tau2) {
    if (!(std::abs(theta) < 1.0)) throw std::invalid_argument("AR(1) needs |theta| < 1");
    if (k == 0) return std::min(tau1, tau2) - tau1 * tau2;
    if (k < 0) return cauchy_ar1_copula_crosscov(theta, -k, tau2, tau1);
    if (theta == 0.0) return 0.0;
    const double scale = 1.0 / (1.0 - std::abs(theta));
    const double a = std::abs(theta);
    const double eta_scale = (1.0 - std::pow(a, static_cast<double>(k))) / (1.0 - a);
    const double coef = std::pow(theta, static_cast<double>(k));
    const double q1 = scale * std::tan(std::numbers::pi * (tau1 - 0.5));
    auto integrand = [&](double u) {
        const double qu = scale * std::tan(std::numbers::pi * (u - 0.5));
        return 0.5 + std::atan((q1 - coef * qu) / eta_scale) / std::numbers::pi;
    };
    double err = 0.0;
    const double joint = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, 0.0, tau2, 15, 1e-13, &err);
    return joint - tau1 * tau2;
}

/// Exact copula cross-covariance for the supported designs.
inline double exact_copula_crosscov(const ModelSpec& m, long k, double tau1, double tau2) {
    if (m.kind == ModelSpec::Kind::iid || m.theta == 0.0)
        return k == 0 ? std::min(tau1, tau2) - tau1 * tau2 : 0.0;
    switch (m.distribution) {
        case Distribution::gaussian: return gaussian_ar1_copula_crosscov(m.theta, k, tau1, tau2);
        case Distribution::cauchy: return cauchy_ar1_copula_crosscov(m.theta, k, tau1, tau2);
        default: throw std::invalid_argument("no exact truth for this model");
    }
}

struct McEstimate {
    double value = 0.0;
    double standard_error = 0.0;
};

/// Empirical lag-k covariance of (1{y_t <= q1}, 1{y_{t-k} <= q2}) along one
/// path, with q the empirical quantiles of the path; standard error by batch
/// means over `batches` contiguous blocks.
inline McEstimate crosscov_from_path(std::span<const double> path, long k, double tau1,
                                     double tau2, std::size_t batches = 100) {
    const std::size_t lag = static_cast<std::size_t>(std::labs(k));
    if (path.size() < 10 * std::max<std::size_t>(lag, 1))
        throw std::invalid_argument("Monte-Carlo path must be at least 10 |k| long");
    if (k < 0) return crosscov_from_path(path, -k, tau2, tau1, batches);
    const double q1 = empirical_quantile(path, tau1);
    const double q2 = empirical_quantile(path, tau2);
    const std::size_t m = path.size() - lag;
    double mean1 = 0.0, mean2 = 0.0;
    for (std::size_t t = lag; t < path.size(); ++t) {
        mean1 += path[t] <= q1 ? 1.0 : 0.0;
        mean2 += path[t - lag] <= q2 ? 1.0 : 0.0;
    }
    mean1 /= static_cast<double>(m);
    mean2 /= static_cast<double>(m);
    batches = std::clamp<std::size_t>(batches, 2, m);
    const std::size_t per = m / batches;
    std::vector<double> block(batches, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double a = (path[i + lag] <= q1 ? 1.0 : 0.0) - mean1;
        const double b = (path[i] <= q2 ? 1.0 : 0.0) - mean2;
        total += a * b;
        const std::size_t bi = std::min(i / per, batches - 1);
        block[bi] += a * b;
    }
    const double value = total / static_cast<double>(m);
    double ss = 0.0;
    for (std::size_t bi = 0; bi < batches; ++bi) {
        const std::size_t len = bi + 1 == batches ? m - per * (batches - 1) : per;
        const double d = block[bi] / static_cast<double>(len) - value;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(batches - 1));
    return {value, sd / std::sqrt(static_cast<double>(batches))};
}

inline McEstimate monte_carlo_copula_crosscov(const ModelSpec& m, std::size_t length,
                                              std::uint64_t seed, long k, double tau1, double tau2) {
    if (length < 10 * std::max<std::size_t>(static_cast<std::size_t>(std::labs(k)), 1))
        throw std::invalid_argument("Monte-Carlo path must be at least 10 |k| long");
    const Series path = simulate(m, length, seed, 0);
    return crosscov_from_path(path.values(), k, tau1, tau2);
}

/// gamma_k(tau_a, tau_b) for |k| <= K over a quantile grid.
class CopulaCrossCovTable {
public:
    CopulaCrossCovTable(std::vector<double> taus, std::size_t lag_cap)
        : taus_(std::move(taus)), lag_cap_(lag_cap),
          gamma_((2 * lag_cap + 1) * taus_.size() * taus_.size(), 0.0),
          se_(gamma_.size(), 0.0) {}

    const std::vector<double>& taus() const noexcept { return taus_; }
    std::size_t lag_cap() const noexcept { return lag_cap_; }

    double& gamma(long k, std::size_t a, std::size_t b) { return gamma_[index(k, a, b)]; }
    double gamma(long k, std::size_t a, std::size_t b) const { return gamma_[index(k, a, b)]; }
    double& standard_error(long k, std::size_t a, std::size_t b) { return se_[index(k, a, b)]; }
    double standard_error(long k, std::size_t a, std::size_t b) const { return se_[index(k, a, b)]; }

private:
    std::size_t index(long k, std::size_t a, std::size_t b) const {
        const auto K = static_cast<long>(lag_cap_);
        if (k < -K || k > K || a >= taus_.size() || b >= taus_.size())
            throw std::out_of_range("cross-covariance index out of range");
        const std::size_t p = taus_.size();
        return (static_cast<std::size_t>(k + K) * p + a) * p + b;
    }

    std::vector<double> taus_;
    std::size_t lag_cap_;
    std::vector<double> gamma_;
    std::vector<double> se_;
};

inline CopulaCrossCovTable exact_crosscov_table(const ModelSpec& m, std::vector<double> taus,
                                                std::size_t lag_cap = 50) {
    CopulaCrossCovTable t(std::move(taus), lag_cap);
    const std::size_t p = t.taus().size();
    const auto K = static_cast<long>(lag_cap);
    for (long k = 0; k <= K; ++k)
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b) {
                const double g = exact_copula_crosscov(m, k, t.taus()[a], t.taus()[b]);
                t.gamma(k, a, b) = g;
                t.gamma(-k, b, a) = g;
            }
    return t;
}

enum class CrossCovSource { exact, monte_carlo };

struct MonteCarloOptions {
    std::size_t length = 1'000'000;
    std::uint64_t seed = 0;
};

/// Exact value, or an estimate from one simulated path (standard error zero
/// for the exact source).
inline McEstimate copula_crosscov(CrossCovSource source, const ModelSpec& m, long k, double tau1,
                                  double tau2, const MonteCarloOptions& mc = {}) {
    (void)TauLevel{tau1};
    (void)TauLevel{tau2};
    if (m.kind == ModelSpec::Kind::ar1 && !(std::abs(m.theta) < 1.0))
        throw std::invalid_argument("AR(1) needs |theta| < 1");
    if (source == CrossCovSource::exact) return {exact_copula_crosscov(m, k, tau1, tau2), 0.0};
    return monte_carlo_copula_crosscov(m, mc.length, mc.seed, k, tau1, tau2);
}

/// Cross-covariances estimated from one simulated path of `length` steps.
inline CopulaCrossCovTable monte_carlo_crosscov_table(const ModelSpec& m, std::vector<double> taus,
                                                      std::size_t lag_cap, std::size_t length,
                                                      std::uint64_t seed) {
    if (length < 10 * std::max<std::size_t>(lag_cap, 1))
        throw std::invalid_argument("Monte-Carlo path must be at least 10 K long");
    CopulaCrossCovTable t(std::move(taus), lag_cap);
    const Series path = simulate(m, length, seed, 0);
    const std::size_t p = t.taus().size();
    const auto K = static_cast<long>(lag_cap);
    for (long k = 0; k <= K; ++k)
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b) {
                const auto est = crosscov_from_path(path.values(), k, t.taus()[a], t.taus()[b]);
                t.gamma(k, a, b) = est.value;
                t.gamma(-k, b, a) = est.value;
                t.standard_error(k, a, b) = est.standard_error;
                t.standard_error(-k, b, a) = est.standard_error;
            }
    return t;
}

/// Truncated copula spectral density (2 pi)^-1 sum_{|k| <= K} gamma_k e^{-ikw}.
inline KernelValue copula_sdk(const CopulaCrossCovTable& t, double omega, std::size_t a,
                              std::size_t b) {
    const auto K = static_cast<long>(t.lag_cap());
    double re = 0.0, im = 0.0;
    for (long k = -K; k <= K; ++k) {
        const double g = t.gamma(k, a, b);
        re += g * std::cos(static_cast<double>(k) * omega);
        im -= g * std::sin(static_cast<double>(k) * omega);
    }
    return KernelValue{re, im} / two_pi;
}

/// All pairs at once, row-major over (a, b).
inline std::vector<KernelValue> copula_sdk(const CopulaCrossCovTable& t, double omega) {
    const std::size_t p = t.taus().size();
    std::vector<KernelValue> out(p * p);
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < p; ++b) out[a * p + b] = copula_sdk(t, omega, a, b);
    return out;
}

enum class SpectralScale { unscaled, scaled };

/// Truth f (or the scaled f / (f_Y f_Y)) on a Fourier grid.
class SpectralTruth {
public:
    SpectralTruth(std::vector<double> taus, FourierGrid grid, SpectralScale scale)
        : taus_(std::move(taus)), grid_(grid), scale_(scale),
          values_(taus_.size() * taus_.size() * grid_.size()) {}

    const std::vector<double>& taus() const noexcept { return taus_; }
    const FourierGrid& grid() const noexcept { return grid_; }
    SpectralScale scale() const noexcept { return scale_; }

    KernelValue& value(std::size_t a, std::size_t b, std::size_t j) { return values_[index(a, b, j)]; }
    KernelValue value(std::size_t a, std::size_t b, std::size_t j) const { return values_[index(a, b, j)]; }

private:
    std::size_t index(std::size_t a, std::size_t b, std::size_t j) const {
        const std::size_t p = taus_.size();
        if (a >= p || b >= p || j == 0 || j > grid_.size())
            throw std::out_of_range("truth index out of range");
        return (a * p + b) * grid_.size() + (j - 1);
    }

    std::vector<double> taus_;
    FourierGrid grid_;
    SpectralScale scale_;
    std::vector<KernelValue> values_;
};

/// Evaluates the truncated sum on every grid frequency. Scaled truth needs
/// the marginal densities at each quantile level (same order as the taus).
inline SpectralTruth spectral_truth(const CopulaCrossCovTable& t, const FourierGrid& grid,
                                    SpectralScale scale = SpectralScale::unscaled,
                                    std::span<const double> densities = {}) {
    const std::size_t p = t.taus().size();
    if (scale == SpectralScale::scaled && densities.size() != p)
        throw std::invalid_argument("scaled truth needs one density per quantile level");
    SpectralTruth out(t.taus(), grid, scale);
    for (std::size_t j = 1; j <= grid.size(); ++j) {
        const double w = grid.frequency(j);
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b) {
                KernelValue v = copula_sdk(t, w, a, b);
                if (scale == SpectralScale::scaled) v = scaled_sdk(v, densities[a], densities[b]);
                out.value(a, b, j) = v;
            }
    }
    return out;
}

}  // namespace qspec
