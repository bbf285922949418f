#pragma once

// Fixed-size dense helpers for the tiny (P <= 3) systems the regressions need.

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>

namespace qspec::linalg {

template <std::size_t P>
using Vec = std::array<double, P>;

template <std::size_t P>
using Mat = std::array<std::array<double, P>, P>;

template <std::size_t P>
double dot(const Vec<P>& a, const Vec<P>& b) noexcept {
    double s = 0.0;
    for (std::size_t k = 0; k < P; ++k) s += a[k] * b[k];
    return s;
}

/// Solves A x = b by Gaussian elimination with partial pivoting. Empty when a
/// pivot falls below `tiny` relative to the largest entry of A.
template <std::size_t P>
std::optional<Vec<P>> solve(Mat<P> a, Vec<P> b, double tiny = 1e-13) {
    double amax = 0.0;
    for (const auto& row : a)
        for (double v : row) amax = std::max(amax, std::abs(v));
    if (amax == 0.0) return std::nullopt;
    for (std::size_t c = 0; c < P; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < P; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        if (std::abs(a[piv][c]) <= tiny * amax) return std::nullopt;
        std::swap(a[piv], a[c]);
        std::swap(b[piv], b[c]);
        for (std::size_t r = c + 1; r < P; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < P; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    Vec<P> x{};
    for (std::size_t c = P; c-- > 0;) {
        double s = b[c];
        for (std::size_t k = c + 1; k < P; ++k) s -= a[c][k] * x[k];
        x[c] = s / a[c][c];
    }
    return x;
}

/// Inverse via P solves; empty when singular.
template <std::size_t P>
std::optional<Mat<P>> inverse(const Mat<P>& a, double tiny = 1e-13) {
    Mat<P> inv{};
    for (std::size_t c = 0; c < P; ++c) {
        Vec<P> e{};
        e[c] = 1.0;
        auto col = solve<P>(a, e, tiny);
        if (!col) return std::nullopt;
        for (std::size_t r = 0; r < P; ++r) inv[r][c] = (*col)[r];
    }
    return inv;
}

}  // namespace qspec::linalg
