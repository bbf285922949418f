#pragma once

// Laplace, copula, rank-based, clipped and ordinary periodogram kernels.
//
// All quantile-based kernels follow one convention: the (tau1, tau2) value at
// w_j estimates 2 pi f(tau1, tau2, w_j) with
//
//     f(tau1, tau2, w) = (2 pi)^-1 sum_k gamma_k(tau1, tau2) exp(-i k w),
//     gamma_k(tau1, tau2) = Cov(1{U_t <= tau1}, 1{U_{t-k} <= tau2}),
//
// so that value(tau2, tau1, w) = conj(value(tau1, tau2, w)).

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qspec/parallel.hpp"
#include "qspec/quantile_regression.hpp"
#include "qspec/series.hpp"

namespace qspec {

using KernelValue = std::complex<double>;

enum class EstimatorMode { raw, known_margin, rank, clipped, ordinary };

inline std::string_view to_string(EstimatorMode m) {
    switch (m) {
        case EstimatorMode::raw: return "raw";
        case EstimatorMode::known_margin: return "known-margin";
        case EstimatorMode::rank: return "rank";
        case EstimatorMode::clipped: return "clipped";
        case EstimatorMode::ordinary: return "ordinary";
    }
    return "?";
}

inline EstimatorMode parse_mode(std::string_view s) {
    for (auto m : {EstimatorMode::raw, EstimatorMode::known_margin, EstimatorMode::rank,
                   EstimatorMode::clipped, EstimatorMode::ordinary})
        if (to_string(m) == s) return m;
    throw std::invalid_argument("unknown estimator mode '" + std::string(s) + "'");
}

/// (n/4) b1' conj(J) b2 with J = [[1, -i], [i, 1]], i.e.
/// re = (n/4)(b11 b21 + b12 b22), im = (n/4)(b11 b22 - b12 b21).
inline KernelValue laplace_kernel_value(std::size_t n, const std::array<double, 2>& b1,
                                        const std::array<double, 2>& b2) noexcept {
    const double c = static_cast<double>(n) / 4.0;
    return {c * (b1[0] * b2[0] + b1[1] * b2[1]), c * (b1[0] * b2[1] - b1[1] * b2[0])};
}

namespace detail {

inline std::size_t grid_index_of(const FourierGrid& grid, double omega) {
    const std::size_t j = grid.nearest_index(omega);
    if (std::abs(grid.frequency(j) - omega) > 1e-9)
        throw std::invalid_argument("frequency " + std::to_string(omega) +
                                    " is not a Fourier frequency for n = " +
                                    std::to_string(grid.n()));
    return j;
}

/// Observations the regressions run on for a given mode.
inline std::vector<double> regression_input(const Series& s, EstimatorMode mode) {
    switch (mode) {
        case EstimatorMode::rank: return normalized_ranks(s.values());
        case EstimatorMode::known_margin:
            for (double v : s)
                if (v < 0.0 || v > 1.0)
                    throw std::invalid_argument("known-margin mode expects values in [0, 1]");
            [[fallthrough]];
        default: return {s.begin(), s.end()};
    }
}

/// d(tau, w_j) = sum_t exp(i w_j t) (tau - 1{y_t <= q}).
inline std::complex<double> clipped_dft(std::span<const double> y, double tau, double q,
                                        std::size_t j) {
    const std::size_t n = y.size();
    const double dn = static_cast<double>(n);
    double re = 0.0, im = 0.0;
    for (std::size_t t = 1; t <= n; ++t) {
        const double x = tau - (y[t - 1] <= q ? 1.0 : 0.0);
        const double a = two_pi * static_cast<double>((j * t) % n) / dn;
        re += x * std::cos(a);
        im += x * std::sin(a);
    }
    return {re, im};
}

}  // namespace detail

/// Quantile-regression periodogram kernel at a single (tau1, tau2, w_j).
inline KernelValue periodogram_kernel(const Series& s, EstimatorMode mode, TauLevel tau1,
                                      TauLevel tau2, double omega, const SolverOptions& opt = {}) {
    if (mode != EstimatorMode::raw && mode != EstimatorMode::known_margin &&
        mode != EstimatorMode::rank)
        throw std::invalid_argument("periodogram_kernel: mode must be raw, known-margin or rank");
    if (s.size() < 4) throw std::invalid_argument("periodogram_kernel: need n >= 4");
    const FourierGrid grid(s.size());
    const std::size_t j = detail::grid_index_of(grid, omega);
    const auto y = detail::regression_input(s, mode);
    const auto rows = harmonic_design_at(s.size(), j);
    const bool nyq = grid.is_nyquist(j);
    const auto f1 = harmonic_quantile_fit(rows, y, tau1, nyq, opt);
    const auto f2 = tau1 == tau2 ? f1 : harmonic_quantile_fit(rows, y, tau2, nyq, opt);
    return laplace_kernel_value(s.size(), f1.b, f2.b);
}

/// Cross-periodogram of the clipped series (tau - 1{y_t <= q_hat_tau}), with
/// the empirical quantile standing in for the unknown population one.
inline KernelValue clipped_periodogram(const Series& s, TauLevel tau1, TauLevel tau2,
                                       double omega) {
    const FourierGrid grid(s.size());
    const std::size_t j = detail::grid_index_of(grid, omega);
    const auto d1 = detail::clipped_dft(s.values(), tau1, empirical_quantile(s, tau1), j);
    const auto d2 = detail::clipped_dft(s.values(), tau2, empirical_quantile(s, tau2), j);
    return std::conj(d1) * d2 / static_cast<double>(s.size());
}

/// I_n(w) = n^-1 |sum_t y_t exp(i t w)|^2.
inline double ordinary_periodogram(const Series& s, double omega) {
    const FourierGrid grid(s.size());
    const std::size_t j = detail::grid_index_of(grid, omega);
    const std::size_t n = s.size();
    const double dn = static_cast<double>(n);
    double re = 0.0, im = 0.0;
    for (std::size_t t = 1; t <= n; ++t) {
        const double a = two_pi * static_cast<double>((j * t) % n) / dn;
        re += s[t - 1] * std::cos(a);
        im += s[t - 1] * std::sin(a);
    }
    return (re * re + im * im) / dn;
}

/// Kernel values over a quantile grid and all Fourier frequencies. Only pairs
/// with tau1 <= tau2 are stored; the others are conjugates. Ordinary tables
/// do not depend on tau and hold a single pseudo-pair.
class PeriodogramTable {
public:
    PeriodogramTable(std::vector<double> taus, FourierGrid grid, EstimatorMode mode)
        : taus_(std::move(taus)), grid_(grid), mode_(mode) {
        const std::size_t k = tau_count();
        values_.assign(k * (k + 1) / 2, std::vector<KernelValue>(grid_.size()));
    }

    const std::vector<double>& taus() const noexcept { return taus_; }
    const FourierGrid& grid() const noexcept { return grid_; }
    EstimatorMode mode() const noexcept { return mode_; }
    std::size_t tau_count() const noexcept {
        return mode_ == EstimatorMode::ordinary ? 1 : taus_.size();
    }
    std::size_t pair_count() const noexcept { return values_.size(); }

    /// Value for tau indices (a, b) at 1-based frequency index j.
    KernelValue value(std::size_t a, std::size_t b, std::size_t j) const {
        if (a <= b) return values_.at(pair_index(a, b)).at(j - 1);
        return std::conj(values_.at(pair_index(b, a)).at(j - 1));
    }

    /// Stored series for a <= b, indexed by j - 1.
    std::vector<KernelValue>& stored(std::size_t a, std::size_t b) {
        return values_.at(pair_index(a, b));
    }
    const std::vector<KernelValue>& stored(std::size_t a, std::size_t b) const {
        return values_.at(pair_index(a, b));
    }

    friend bool operator==(const PeriodogramTable&, const PeriodogramTable&) = default;

private:
    std::size_t pair_index(std::size_t a, std::size_t b) const {
        const std::size_t k = tau_count();
        if (a > b || b >= k) throw std::out_of_range("tau index out of range");
        return a * k - a * (a - 1) / 2 + (b - a);
    }

    std::vector<double> taus_;
    FourierGrid grid_;
    EstimatorMode mode_;
    std::vector<std::vector<KernelValue>> values_;
};

struct TableOptions {
    SolverOptions solver{};
    /// 0 picks default_threads().
    unsigned threads = 0;
};

/// Builds the table for every ordered tau pair and Fourier frequency. Each
/// (tau, w_j) regression is solved once and shared across pairs.
inline PeriodogramTable periodogram_table(const Series& s, std::span<const double> taus,
                                          EstimatorMode mode, const TableOptions& opt = {}) {
    for (std::size_t i = 0; i < taus.size(); ++i) {
        (void)TauLevel{taus[i]};
        if (i > 0 && !(taus[i - 1] < taus[i]))
            throw std::invalid_argument("quantile levels must be sorted and distinct");
    }
    if (mode != EstimatorMode::ordinary && taus.empty())
        throw std::invalid_argument("periodogram_table: empty quantile grid");
    if (s.size() < 4) throw std::invalid_argument("periodogram_table: need n >= 4");

    const std::size_t n = s.size();
    PeriodogramTable table({taus.begin(), taus.end()}, FourierGrid(n), mode);
    const FourierGrid& grid = table.grid();
    const std::size_t nf = grid.size();
    const std::size_t k = table.tau_count();

    if (mode == EstimatorMode::ordinary) {
        auto& out = table.stored(0, 0);
        parallel_for(nf, [&](std::size_t i) {
            out[i] = ordinary_periodogram(s, grid.frequency(i + 1));
        }, opt.threads);
        return table;
    }

    if (mode == EstimatorMode::clipped) {
        std::vector<double> q(k);
        for (std::size_t a = 0; a < k; ++a) q[a] = empirical_quantile(s.values(), taus[a]);
        parallel_for(nf, [&](std::size_t i) {
            std::vector<std::complex<double>> d(k);
            for (std::size_t a = 0; a < k; ++a) d[a] = detail::clipped_dft(s.values(), taus[a], q[a], i + 1);
            for (std::size_t a = 0; a < k; ++a)
                for (std::size_t b = a; b < k; ++b)
                    table.stored(a, b)[i] = std::conj(d[a]) * d[b] / static_cast<double>(n);
        }, opt.threads);
        return table;
    }

    const auto y = detail::regression_input(s, mode);
    parallel_for(nf, [&](std::size_t i) {
        const std::size_t j = i + 1;
        const auto rows = harmonic_design_at(n, j);
        std::vector<std::array<double, 2>> b(k);
        for (std::size_t a = 0; a < k; ++a)
            b[a] = harmonic_quantile_fit(rows, y, taus[a], grid.is_nyquist(j), opt.solver).b;
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t c = a; c < k; ++c) table.stored(a, c)[i] = laplace_kernel_value(n, b[a], b[c]);
    }, opt.threads);
    return table;
}

}  // namespace qspec
