#pragma once

// Series, quantile levels, ranks, and the Fourier frequency grid.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qspec {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Ordered, finite, real-valued observations y_1..y_n.
class Series {
public:
    Series() = default;

    explicit Series(std::vector<double> values) : values_(std::move(values)) {
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i])) {
                throw std::invalid_argument("series value at index " + std::to_string(i) +
                                            " is not finite");
            }
        }
    }

    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }
    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }

    friend bool operator==(const Series&, const Series&) = default;

private:
    std::vector<double> values_;
};

/// A quantile order strictly inside (0, 1).
class TauLevel {
public:
    explicit TauLevel(double tau) : tau_(tau) {
        if (!(tau > 0.0 && tau < 1.0)) {
            throw std::invalid_argument("quantile level must lie in (0, 1), got " +
                                        std::to_string(tau));
        }
    }

    double value() const noexcept { return tau_; }
    operator double() const noexcept { return tau_; }

    friend auto operator<=>(const TauLevel&, const TauLevel&) = default;

private:
    double tau_;
};

/// Normalized ranks R_t / n. Ties go to the earlier index first.
inline std::vector<double> normalized_ranks(std::span<const double> y) {
    if (y.empty()) throw std::invalid_argument("normalized_ranks: empty series");
    const std::size_t n = y.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });
    std::vector<double> ranks(n);
    const double dn = static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) ranks[order[r]] = static_cast<double>(r + 1) / dn;
    return ranks;
}

inline Series normalized_ranks(const Series& s) { return Series(normalized_ranks(s.values())); }

/// Left-continuous empirical quantile inf{t : F_n(t) >= tau}.
inline double empirical_quantile(std::span<const double> y, double tau) {
    if (y.empty()) throw std::invalid_argument("empirical_quantile: empty series");
    std::vector<double> sorted(y.begin(), y.end());
    const std::size_t n = sorted.size();
    // smallest k with k/n >= tau, guarded against tau*n landing a hair above an integer
    auto k = static_cast<std::size_t>(std::ceil(tau * static_cast<double>(n) - 1e-12));
    k = std::clamp<std::size_t>(k, 1, n);
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     sorted.end());
    return sorted[k - 1];
}

inline double empirical_quantile(const Series& s, TauLevel tau) {
    return empirical_quantile(s.values(), tau.value());
}

/// Check function rho_tau(x) = x (tau - 1{x <= 0}).
inline double check_loss(double tau, double x) noexcept {
    return x > 0.0 ? tau * x : (tau - 1.0) * x;
}

/// Positive Fourier frequencies 2 pi j / n, j = 1..floor(n/2).
class FourierGrid {
public:
    explicit FourierGrid(std::size_t n) : n_(n) {
        if (n < 2) throw std::invalid_argument("Fourier grid needs n >= 2");
    }

    std::size_t n() const noexcept { return n_; }
    std::size_t size() const noexcept { return n_ / 2; }

    /// Frequency for 1-based index j.
    double frequency(std::size_t j) const noexcept {
        return two_pi * static_cast<double>(j) / static_cast<double>(n_);
    }

    std::vector<double> frequencies() const {
        std::vector<double> out(size());
        for (std::size_t j = 1; j <= size(); ++j) out[j - 1] = frequency(j);
        return out;
    }

    /// True when index j sits at omega = pi (even n, j = n/2).
    bool is_nyquist(std::size_t j) const noexcept { return 2 * j == n_; }

    /// Index of g_n(omega), the grid point closest to omega. Exact midpoints go to
    /// the larger frequency.
    std::size_t nearest_index(double omega) const {
        if (!(omega > 0.0 && omega <= std::numbers::pi)) {
            throw std::invalid_argument("frequency must lie in (0, pi], got " +
                                        std::to_string(omega));
        }
        const double x = omega * static_cast<double>(n_) / two_pi + 0.5;
        auto j = static_cast<std::ptrdiff_t>(std::floor(x));
        // 3pi/8 * 8 / 2pi is not exactly 1.5 in floating point; snap near-integers
        const auto k = static_cast<std::ptrdiff_t>(std::llround(x));
        if (std::abs(x - static_cast<double>(k)) < 1e-12 * std::max(1.0, x)) j = k;
        return static_cast<std::size_t>(
            std::clamp<std::ptrdiff_t>(j, 1, static_cast<std::ptrdiff_t>(size())));
    }

    double nearest(double omega) const { return frequency(nearest_index(omega)); }

    friend bool operator==(const FourierGrid&, const FourierGrid&) = default;

private:
    std::size_t n_;
};

inline FourierGrid fourier_frequencies(std::size_t n) { return FourierGrid(n); }

inline double nearest_fourier(double omega, std::size_t n) { return FourierGrid(n).nearest(omega); }

}  // namespace qspec
