#pragma once

// Daniell-kernel smoothing of periodogram tables over the Fourier grid.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qspec/parallel.hpp"
#include "qspec/periodogram.hpp"

namespace qspec {

/// Symmetric, positive, unit-sum weights W(k), |k| <= N.
class WeightSequence {
public:
    WeightSequence() : weights_{1.0} {}

    explicit WeightSequence(std::vector<double> weights) : weights_(std::move(weights)) {
        if (weights_.empty() || weights_.size() % 2 == 0)
            throw std::invalid_argument("weight sequence needs odd length 2N + 1");
        for (double w : weights_)
            if (!(w > 0.0)) throw std::invalid_argument("weights must be positive");
    }

    std::size_t half_width() const noexcept { return weights_.size() / 2; }

    double operator()(std::ptrdiff_t k) const {
        return weights_.at(static_cast<std::size_t>(k + static_cast<std::ptrdiff_t>(half_width())));
    }

    const std::vector<double>& values() const noexcept { return weights_; }

    double sum_of_squares() const noexcept {
        double s = 0.0;
        for (double w : weights_) s += w * w;
        return s;
    }

    friend bool operator==(const WeightSequence&, const WeightSequence&) = default;

private:
    std::vector<double> weights_;
};

/// Convolution of uniform kernels with 2m + 1 equal weights, m in `spans`.
/// Counts are convolved in integers and divided once, so the result is
/// exactly symmetric.
inline WeightSequence daniell_weights(std::span<const int> spans) {
    if (spans.empty()) throw std::invalid_argument("daniell_weights: empty span list");
    std::vector<std::uint64_t> counts{1};
    double denominator = 1.0;
    for (int m : spans) {
        if (m < 0) throw std::invalid_argument("daniell_weights: spans must be non-negative");
        const std::size_t width = 2 * static_cast<std::size_t>(m) + 1;
        std::vector<std::uint64_t> next(counts.size() + width - 1, 0);
        for (std::size_t i = 0; i < counts.size(); ++i)
            for (std::size_t k = 0; k < width; ++k) next[i + k] += counts[i];
        counts = std::move(next);
        denominator *= static_cast<double>(width);
        if (denominator > 9.0e15) throw std::invalid_argument("daniell_weights: kernel too wide");
    }
    std::vector<double> w(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) w[i] = static_cast<double>(counts[i]) / denominator;
    return WeightSequence(std::move(w));
}

inline WeightSequence daniell_weights(std::initializer_list<int> spans) {
    return daniell_weights(std::span<const int>(spans.begin(), spans.size()));
}

/// Spans scaled to a series length, keeping the bandwidth-to-length ratio of
/// `reference_spans` at `reference_n`. Every span stays >= 1.
inline std::vector<int> proportional_spans(std::span<const int> reference_spans,
                                           std::size_t reference_n, std::size_t n) {
    std::vector<int> out;
    for (int m : reference_spans) {
        const double scaled = static_cast<double>(m) * static_cast<double>(n) /
                              static_cast<double>(reference_n);
        out.push_back(std::max(1, static_cast<int>(std::lround(scaled))));
    }
    return out;
}

struct SmoothedTable {
    PeriodogramTable table;
    WeightSequence weights;
};

namespace detail {

/// Value at any integer frequency index, extended by conjugate symmetry and
/// 2 pi periodicity. Returns false at multiples of n (frequency zero).
inline bool extended_value(const std::vector<KernelValue>& series, std::size_t n,
                           std::ptrdiff_t idx, KernelValue& out) {
    const auto dn = static_cast<std::ptrdiff_t>(n);
    std::ptrdiff_t m = idx % dn;
    if (m < 0) m += dn;
    if (m == 0) return false;
    const auto half = static_cast<std::ptrdiff_t>(n / 2);
    if (m <= half) {
        out = series[static_cast<std::size_t>(m - 1)];
    } else {
        out = std::conj(series[static_cast<std::size_t>(dn - m - 1)]);
    }
    return true;
}

}  // namespace detail

/// f_hat(w_j) = sum_{|k| <= N} W(k) L(w_{j+k}). Indices outside 1..n/2 use
/// L(w_{-j}) = conj(L(w_j)) and periodicity; a window term landing on
/// frequency zero is dropped and the remaining weights renormalised.
inline SmoothedTable smooth_table(const PeriodogramTable& p, const WeightSequence& w,
                                  unsigned threads = 1) {
    const std::size_t nf = p.grid().size();
    if (w.half_width() >= nf)
        throw std::invalid_argument("smoothing half-width " + std::to_string(w.half_width()) +
                                    " needs more than " + std::to_string(nf) +
                                    " Fourier frequencies");
    SmoothedTable out{p, w};
    const std::size_t k = p.tau_count();
    const auto half = static_cast<std::ptrdiff_t>(w.half_width());
    const std::size_t n = p.grid().n();
    parallel_for(k, [&](std::size_t a) {
        for (std::size_t b = a; b < k; ++b) {
            const auto& src = p.stored(a, b);
            auto& dst = out.table.stored(a, b);
            for (std::size_t j = 1; j <= nf; ++j) {
                KernelValue acc{0.0, 0.0};
                double dropped = 0.0;
                for (std::ptrdiff_t off = -half; off <= half; ++off) {
                    KernelValue v;
                    if (detail::extended_value(src, n, static_cast<std::ptrdiff_t>(j) + off, v))
                        acc += w(off) * v;
                    else
                        dropped += w(off);
                }
                dst[j - 1] = dropped > 0.0 ? acc / (1.0 - dropped) : acc;
            }
        }
    }, threads);
    return out;
}

/// Smoothed values at g_n(omega), as a full tau_count x tau_count matrix
/// stored row-major (tau1 major).
inline std::vector<KernelValue> smooth_at(const SmoothedTable& t, double omega) {
    if (!(omega > 0.0 && omega < std::numbers::pi))
        throw std::invalid_argument("smooth_at: frequency must lie in (0, pi)");
    const std::size_t j = t.table.grid().nearest_index(omega);
    const std::size_t k = t.table.tau_count();
    std::vector<KernelValue> out(k * k);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) out[a * k + b] = t.table.value(a, b, j);
    return out;
}

}  // namespace qspec
