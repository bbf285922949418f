#pragma once

// Check-loss (quantile) and least-squares regression of a series onto small
// dense designs, specialised for the harmonic design (1, cos wt, sin wt).
//
// The quantile fit runs a primal-dual (Frisch-Newton) interior point method on
// the dual linear program
//
//     max  y'd   s.t.  X'd = (1 - tau) X'1,  0 <= d <= 1,
//
// then crosses over to a vertex (P observations fitted exactly) and finishes
// with edge-following simplex steps until every directional derivative of the
// objective is non-negative. The final basis is an exact optimality
// certificate. Small problems, and fits given a warm start, skip the interior
// point stage and run the simplex alone.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qspec/linalg.hpp"
#include "qspec/series.hpp"

namespace qspec {

enum class SolverMethod { automatic, interior_point, simplex };

struct SolverOptions {
    SolverMethod method = SolverMethod::automatic;
    /// Interior point stop: duality gap divided by n, on y scaled to max |y| = 1.
    double gap_tolerance = 1e-10;
    int max_iterations = 200;
    /// Residuals with |r| <= zero_tolerance * max|y| count as zero.
    double zero_tolerance = 1e-9;
    /// `automatic` without a warm start uses the simplex alone for n below this.
    std::size_t simplex_below = 64;
};

template <std::size_t P>
struct QuantileFit {
    linalg::Vec<P> coef{};
    double objective = 0.0;
    std::size_t zero_residual_count = 0;
    /// Largest violation of the subgradient optimality condition over columns.
    double subgradient_gap = 0.0;
    int ipm_iterations = 0;
    int pivots = 0;
};

/// Thrown when an iteration cap is hit; carries the best iterate seen.
class convergence_error : public std::runtime_error {
public:
    convergence_error(const std::string& what, std::vector<double> best, double best_objective)
        : std::runtime_error(what), best_coefficients(std::move(best)),
          best_objective(best_objective) {}

    std::vector<double> best_coefficients;
    double best_objective;
};

template <std::size_t P>
double check_objective(std::span<const linalg::Vec<P>> rows, std::span<const double> y,
                       double tau, const linalg::Vec<P>& coef) {
    double f = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) f += check_loss(tau, y[i] - linalg::dot(rows[i], coef));
    return f;
}

namespace detail {

inline double data_scale(std::span<const double> y) {
    double m = 0.0;
    for (double v : y) m = std::max(m, std::abs(v));
    return m > 0.0 ? m : 1.0;
}

/// Largest step in [0, 1e20] keeping v + t dv >= 0.
inline double step_bound(std::span<const double> v, std::span<const double> dv) {
    double b = 1e20;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (dv[i] < 0.0) b = std::min(b, -v[i] / dv[i]);
    return b;
}

template <std::size_t P>
linalg::Vec<P> least_squares(std::span<const linalg::Vec<P>> rows, std::span<const double> y,
                             std::span<const double> weights = {}) {
    linalg::Mat<P> xtx{};
    linalg::Vec<P> xty{};
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        for (std::size_t r = 0; r < P; ++r) {
            xty[r] += w * rows[i][r] * y[i];
            for (std::size_t c = 0; c < P; ++c) xtx[r][c] += w * rows[i][r] * rows[i][c];
        }
    }
    auto sol = linalg::solve<P>(xtx, xty, 1e-12);
    if (!sol) throw std::invalid_argument("regression design is rank deficient");
    return *sol;
}

/// Frisch-Newton predictor-corrector interior point on the dual problem.
/// Returns coefficients in the units of y.
template <std::size_t P>
linalg::Vec<P> interior_point(std::span<const linalg::Vec<P>> rows, std::span<const double> y,
                              double tau, const SolverOptions& opt, int& iterations) {
    const std::size_t n = y.size();
    const double scale = data_scale(y);
    constexpr double damping = 0.99995;

    std::vector<double> c(n), x(n, 1.0 - tau), s(n, tau), z(n), w(n), r(n), q(n);
    std::vector<double> dx(n), ds(n), dz(n), dw(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = -y[i] / scale;

    linalg::Vec<P> b{};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < P; ++k) b[k] += (1.0 - tau) * rows[i][k];

    linalg::Vec<P> dual = least_squares<P>(rows, c);
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = c[i] - linalg::dot(rows[i], dual);
        z[i] = std::max(r[i], 0.0);
        w[i] = z[i] - r[i];
    }

    auto duality_gap = [&] {
        double g = -linalg::dot(b, dual);
        for (std::size_t i = 0; i < n; ++i) g += c[i] * x[i] + w[i];
        return g;
    };

    auto solve_normal = [&](const linalg::Mat<P>& m, const linalg::Vec<P>& rhs) {
        auto d = linalg::solve<P>(m, rhs, 1e-300);
        if (!d) throw std::runtime_error("interior point: singular normal equations");
        return *d;
    };

    const double dn = static_cast<double>(n);
    double gap = duality_gap();
    iterations = 0;
    while (gap > opt.gap_tolerance * dn && iterations < opt.max_iterations) {
        ++iterations;
        linalg::Mat<P> aqa{};
        linalg::Vec<P> rhs{};
        for (std::size_t i = 0; i < n; ++i) {
            q[i] = 1.0 / (z[i] / x[i] + w[i] / s[i]);
            r[i] = z[i] - w[i];
            for (std::size_t a = 0; a < P; ++a) {
                rhs[a] += q[i] * r[i] * rows[i][a];
                for (std::size_t k = a; k < P; ++k) aqa[a][k] += q[i] * rows[i][a] * rows[i][k];
            }
        }
        for (std::size_t a = 0; a < P; ++a)
            for (std::size_t k = 0; k < a; ++k) aqa[a][k] = aqa[k][a];

        linalg::Vec<P> dy = solve_normal(aqa, rhs);
        for (std::size_t i = 0; i < n; ++i) {
            dx[i] = q[i] * (linalg::dot(rows[i], dy) - r[i]);
            ds[i] = -dx[i];
            dz[i] = -z[i] * (dx[i] / x[i] + 1.0);
            dw[i] = -w[i] * (ds[i] / s[i] + 1.0);
        }
        double fp = std::min(damping * std::min(step_bound(x, dx), step_bound(s, ds)), 1.0);
        double fd = std::min(damping * std::min(step_bound(w, dw), step_bound(z, dz)), 1.0);

        if (std::min(fp, fd) < 1.0) {
            // corrector
            double mu = 0.0, g = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                mu += z[i] * x[i] + w[i] * s[i];
                g += (z[i] + fd * dz[i]) * (x[i] + fp * dx[i]) +
                     (w[i] + fd * dw[i]) * (s[i] + fp * ds[i]);
            }
            mu = mu * std::pow(g / mu, 3) / (2.0 * dn);
            linalg::Vec<P> rhs2 = rhs;
            for (std::size_t i = 0; i < n; ++i) {
                const double xi = mu * (1.0 / x[i] - 1.0 / s[i]);
                const double t = q[i] * (dx[i] * dz[i] - ds[i] * dw[i] - xi);
                for (std::size_t a = 0; a < P; ++a) rhs2[a] += t * rows[i][a];
            }
            dy = solve_normal(aqa, rhs2);
            for (std::size_t i = 0; i < n; ++i) {
                const double xinv = 1.0 / x[i], sinv = 1.0 / s[i];
                const double xi = mu * (xinv - sinv);
                const double dxdz = dx[i] * dz[i], dsdw = ds[i] * dw[i];
                dx[i] = q[i] * (linalg::dot(rows[i], dy) + xi - r[i] - dxdz + dsdw);
                ds[i] = -dx[i];
                dz[i] = mu * xinv - z[i] - xinv * z[i] * dx[i] - dxdz;
                dw[i] = mu * sinv - w[i] - sinv * w[i] * ds[i] - dsdw;
            }
            fp = std::min(damping * std::min(step_bound(x, dx), step_bound(s, ds)), 1.0);
            fd = std::min(damping * std::min(step_bound(w, dw), step_bound(z, dz)), 1.0);
        }

        for (std::size_t i = 0; i < n; ++i) {
            x[i] += fp * dx[i];
            s[i] += fp * ds[i];
            w[i] += fd * dw[i];
            z[i] += fd * dz[i];
        }
        for (std::size_t a = 0; a < P; ++a) dual[a] += fd * dy[a];
        gap = duality_gap();
    }

    linalg::Vec<P> coef{};
    for (std::size_t a = 0; a < P; ++a) coef[a] = -dual[a] * scale;
    if (gap > opt.gap_tolerance * dn) {
        throw convergence_error("interior point: iteration cap reached",
                                std::vector<double>(coef.begin(), coef.end()),
                                check_objective<P>(rows, y, tau, coef));
    }
    return coef;
}

/// P observations with the smallest |residual| whose rows are linearly
/// independent.
template <std::size_t P>
std::array<std::size_t, P> pick_basis(std::span<const linalg::Vec<P>> rows,
                                      std::span<const double> residuals) {
    const std::size_t n = residuals.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto closer = [&](std::size_t a, std::size_t b) {
        return std::abs(residuals[a]) < std::abs(residuals[b]);
    };
    // candidates are scanned in order of |residual|; sort lazily in blocks
    const std::size_t head = std::min(n, 4 * P + 4);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(head), order.end(),
                      closer);
    bool tail_sorted = head == n;
    std::array<std::size_t, P> basis{};
    std::array<linalg::Vec<P>, P> ortho{};
    std::size_t found = 0;
    for (std::size_t pos = 0; pos < n; ++pos) {
        if (pos == head && !tail_sorted) {
            std::sort(order.begin() + static_cast<std::ptrdiff_t>(head), order.end(), closer);
            tail_sorted = true;
        }
        const std::size_t idx = order[pos];
        linalg::Vec<P> v = rows[idx];
        const double norm0 = std::sqrt(linalg::dot(v, v));
        if (norm0 == 0.0) continue;
        for (std::size_t k = 0; k < found; ++k) {
            const double proj = linalg::dot(v, ortho[k]);
            for (std::size_t a = 0; a < P; ++a) v[a] -= proj * ortho[k][a];
        }
        const double norm = std::sqrt(linalg::dot(v, v));
        if (norm <= 1e-8 * norm0) continue;
        for (std::size_t a = 0; a < P; ++a) v[a] /= norm;
        ortho[found] = v;
        basis[found++] = idx;
        if (found == P) return basis;
    }
    throw std::invalid_argument("regression design is rank deficient");
}

/// Unit vector orthogonal to P - 1 given rows; empty when they are dependent.
template <std::size_t P>
std::optional<linalg::Vec<P>> null_direction(std::span<const linalg::Vec<P>> rows,
                                             std::span<const std::size_t> subset) {
    linalg::Vec<P> d{};
    if constexpr (P == 1) {
        d[0] = 1.0;
        return d;
    } else if constexpr (P == 2) {
        const auto& a = rows[subset[0]];
        d = {-a[1], a[0]};
    } else if constexpr (P == 3) {
        const auto& a = rows[subset[0]];
        const auto& b = rows[subset[1]];
        d = {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
    } else {
        static_assert(P <= 3, "null_direction supports P <= 3");
    }
    const double norm = std::sqrt(linalg::dot(d, d));
    double scale = 1.0;
    for (std::size_t k = 0; k + 1 < P; ++k)
        scale *= std::sqrt(linalg::dot(rows[subset[k]], rows[subset[k]]));
    if (norm <= 1e-10 * scale) return std::nullopt;
    for (double& v : d) v /= norm;
    return d;
}

/// Smallest breakpoint at which the accumulated weight reaches `need`.
/// Returns the position within `breaks` or breaks.size() when never reached.
/// Ranges are narrowed only when their weight reaches `need`.
inline std::size_t weighted_select(std::vector<std::pair<double, std::size_t>>& breaks,
                                   std::span<const double> weight, double need) {
    const double need0 = need;
    std::size_t lo = 0, hi = breaks.size();
    auto by_step = [](const auto& a, const auto& b) { return a.first < b.first; };
    while (hi > lo) {
        if (hi - lo <= 16) {
            std::sort(breaks.begin() + static_cast<std::ptrdiff_t>(lo),
                      breaks.begin() + static_cast<std::ptrdiff_t>(hi), by_step);
            for (std::size_t k = lo; k < hi; ++k) {
                need -= weight[breaks[k].second];
                if (need <= 0.0) return k;
            }
            // The block was entered because its sum reached `need`; summing in
            // sorted order can fall short by rounding.
            if (hi < breaks.size() || need <= 1e-9 * need0) return hi - 1;
            return breaks.size();
        }
        const std::size_t mid = lo + (hi - lo) / 2;
        std::nth_element(breaks.begin() + static_cast<std::ptrdiff_t>(lo),
                         breaks.begin() + static_cast<std::ptrdiff_t>(mid),
                         breaks.begin() + static_cast<std::ptrdiff_t>(hi), by_step);
        double below = 0.0;
        for (std::size_t k = lo; k < mid; ++k) below += weight[breaks[k].second];
        if (below >= need) {
            hi = mid;
        } else if (below + weight[breaks[mid].second] >= need) {
            return mid;
        } else {
            need -= below + weight[breaks[mid].second];
            lo = mid + 1;
        }
    }
    return breaks.size();
}

/// Edge-following simplex descent over vertices, from the given basis.
///
/// At a vertex every residual in the zero set Z vanishes. Edges leaving the
/// vertex keep P - 1 members of Z at zero, so degenerate vertices (|Z| > P)
/// are handled by enumerating all (P - 1)-subsets of Z rather than only the
/// subsets of the current basis.
template <std::size_t P>
QuantileFit<P> vertex_descent(std::span<const linalg::Vec<P>> rows, std::span<const double> y,
                              double tau, std::array<std::size_t, P> basis,
                              const SolverOptions& opt) {
    const std::size_t n = y.size();
    const double ztol = opt.zero_tolerance * data_scale(y);
    const double slope_tol = 1e-11 * static_cast<double>(n);
    const std::size_t pivot_cap = 20 * n + 100;

    std::vector<double> r(n), z(n);
    std::vector<std::size_t> zero_set;
    std::vector<std::pair<double, std::size_t>> breaks;
    breaks.reserve(n);
    linalg::Vec<P> coef{};
    linalg::Vec<P> g{};  // sum of x_i psi(r_i) over nonzero residuals

    // Solves the basis system, then recomputes residuals, the zero set and g.
    auto refresh = [&] {
        linalg::Mat<P> xh{};
        linalg::Vec<P> yh{};
        for (std::size_t k = 0; k < P; ++k) {
            xh[k] = rows[basis[k]];
            yh[k] = y[basis[k]];
        }
        auto sol = linalg::solve<P>(xh, yh, 1e-14);
        if (!sol) throw std::runtime_error("simplex: singular basis");
        coef = *sol;
        for (std::size_t k = 0; k < P; ++k) r[basis[k]] = 0.0;
        g = {};
        zero_set.clear();
        for (std::size_t i = 0; i < n; ++i) {
            const double ri = y[i] - linalg::dot(rows[i], coef);
            if (std::abs(ri) <= ztol) {
                r[i] = 0.0;
                zero_set.push_back(i);
                continue;
            }
            r[i] = ri;
            const double psi = ri > 0.0 ? tau : tau - 1.0;
            for (std::size_t a = 0; a < P; ++a) g[a] += psi * rows[i][a];
        }
    };
    refresh();

    QuantileFit<P> fit;
    int pivots = 0;
    for (;;) {
        if (zero_set.size() == n) break;  // exact interpolation

        // Steepest edge over all (P-1)-subsets of the zero set.
        double best = -slope_tol;
        linalg::Vec<P> best_dir{};
        std::array<std::size_t, P> best_keep{};
        bool found = false;
        std::array<std::size_t, P> pos{};
        for (std::size_t k = 0; k < P; ++k) pos[k] = k;
        const std::size_t m = zero_set.size();
        const std::size_t choose = P - 1;
        std::array<std::size_t, P> subset{};
        for (;;) {
            for (std::size_t k = 0; k < choose; ++k) subset[k] = zero_set[pos[k]];
            if (auto dir = null_direction<P>(rows, std::span<const std::size_t>(subset.data(), choose))) {
                const double gd = linalg::dot(g, *dir);
                double up = 0.0, down = 0.0;  // slopes along +dir and -dir
                for (std::size_t i : zero_set) {
                    const double zi = linalg::dot(rows[i], *dir);
                    up += zi > 0.0 ? (1.0 - tau) * zi : -tau * zi;
                    down += zi < 0.0 ? -(1.0 - tau) * zi : tau * zi;
                }
                for (double sign : {1.0, -1.0}) {
                    const double slope = -sign * gd + (sign > 0.0 ? up : down);
                    if (slope < best) {
                        best = slope;
                        found = true;
                        for (std::size_t a = 0; a < P; ++a) best_dir[a] = sign * (*dir)[a];
                        best_keep = subset;
                    }
                }
            }
            // next combination of `choose` positions out of m
            if (choose == 0) break;
            std::size_t k = choose;
            while (k > 0 && pos[k - 1] == m - choose + k - 1) --k;
            if (k == 0) break;
            ++pos[k - 1];
            for (std::size_t t = k; t < choose; ++t) pos[t] = pos[t - 1] + 1;
        }
        if (!found) break;  // optimal vertex

        if (static_cast<std::size_t>(pivots) >= pivot_cap) {
            throw convergence_error("simplex: pivot cap reached",
                                    std::vector<double>(coef.begin(), coef.end()),
                                    check_objective<P>(rows, y, tau, coef));
        }

        breaks.clear();
        for (std::size_t i = 0; i < n; ++i) {
            if (r[i] == 0.0) continue;
            const double zi = linalg::dot(rows[i], best_dir);
            z[i] = std::abs(zi);
            if (zi != 0.0 && (r[i] > 0.0) == (zi > 0.0)) breaks.emplace_back(r[i] / zi, i);
        }
        const std::size_t at = weighted_select(breaks, z, -best);
        if (at == breaks.size()) throw std::runtime_error("simplex: objective unbounded along an edge");

        for (std::size_t k = 0; k < choose; ++k) basis[k] = best_keep[k];
        basis[P - 1] = breaks[at].second;
        refresh();
        ++pivots;
    }

    fit.coef = coef;
    fit.pivots = pivots;
    return fit;
}

template <std::size_t P>
void certify(std::span<const linalg::Vec<P>> rows, std::span<const double> y, double tau,
             double zero_tolerance, QuantileFit<P>& fit) {
    const double ztol = zero_tolerance * data_scale(y);
    linalg::Vec<P> lhs{}, slack{};
    fit.objective = 0.0;
    fit.zero_residual_count = 0;
    const double wmax = std::max(tau, 1.0 - tau);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double ri = y[i] - linalg::dot(rows[i], fit.coef);
        fit.objective += check_loss(tau, ri);
        if (std::abs(ri) <= ztol) {
            ++fit.zero_residual_count;
            for (std::size_t a = 0; a < P; ++a) slack[a] += std::abs(rows[i][a]) * wmax;
        } else {
            const double psi = ri < 0.0 ? tau - 1.0 : tau;
            for (std::size_t a = 0; a < P; ++a) lhs[a] += rows[i][a] * psi;
        }
    }
    fit.subgradient_gap = 0.0;
    for (std::size_t a = 0; a < P; ++a)
        fit.subgradient_gap = std::max(fit.subgradient_gap, std::abs(lhs[a]) - slack[a]);
}

}  // namespace detail

/// Minimises sum_i rho_tau(y_i - x_i' beta) over beta. The simplex path
/// starts from `start` when given, else from least squares.
template <std::size_t P>
QuantileFit<P> quantile_fit(std::span<const linalg::Vec<P>> rows, std::span<const double> y,
                            double tau, const SolverOptions& opt = {},
                            std::optional<linalg::Vec<P>> start = std::nullopt) {
    if (rows.size() != y.size()) throw std::invalid_argument("quantile_fit: size mismatch");
    if (y.size() < P) throw std::invalid_argument("quantile_fit: fewer observations than parameters");
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("quantile_fit: tau outside (0, 1)");

    const bool use_ipm = opt.method == SolverMethod::interior_point ||
                         (opt.method == SolverMethod::automatic && !start &&
                          y.size() >= opt.simplex_below);
    int iterations = 0;
    linalg::Vec<P> from{};
    if (use_ipm) {
        from = detail::interior_point<P>(rows, y, tau, opt, iterations);
    } else {
        from = start ? *start : detail::least_squares<P>(rows, y);
    }
    std::vector<double> resid(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) resid[i] = y[i] - linalg::dot(rows[i], from);
    auto fit = detail::vertex_descent<P>(rows, y, tau, detail::pick_basis<P>(rows, resid), opt);
    fit.ipm_iterations = iterations;
    detail::certify<P>(rows, y, tau, opt.zero_tolerance, fit);
    return fit;
}

template <std::size_t P>
QuantileFit<P> quantile_fit(const std::vector<linalg::Vec<P>>& rows, std::span<const double> y,
                            double tau, const SolverOptions& opt = {},
                            std::optional<linalg::Vec<P>> start = std::nullopt) {
    return quantile_fit<P>(std::span<const linalg::Vec<P>>(rows), y, tau, opt, start);
}

/// Intercept-only quantile regression.
inline QuantileFit<1> location_quantile_fit(std::span<const double> y, double tau,
                                            const SolverOptions& opt = {}) {
    std::vector<linalg::Vec<1>> rows(y.size(), linalg::Vec<1>{1.0});
    return quantile_fit<1>(rows, y, tau, opt);
}

// ---------------------------------------------------------------------------
// Harmonic design

inline bool is_nyquist_frequency(double omega) noexcept {
    return std::abs(omega - std::numbers::pi) <= 1e-12;
}

/// Rows (1, cos wt, sin wt) for t = 1..n.
inline std::vector<linalg::Vec<3>> harmonic_design(std::size_t n, double omega) {
    std::vector<linalg::Vec<3>> rows(n);
    for (std::size_t t = 1; t <= n; ++t) {
        const double a = omega * static_cast<double>(t);
        rows[t - 1] = {1.0, std::cos(a), std::sin(a)};
    }
    return rows;
}

/// Rows at the Fourier frequency 2 pi j / n, with the angle reduced mod 2 pi
/// exactly in integer arithmetic.
inline std::vector<linalg::Vec<3>> harmonic_design_at(std::size_t n, std::size_t j) {
    std::vector<linalg::Vec<3>> rows(n);
    const double dn = static_cast<double>(n);
    for (std::size_t t = 1; t <= n; ++t) {
        const double a = two_pi * static_cast<double>((j * t) % n) / dn;
        rows[t - 1] = {1.0, std::cos(a), std::sin(a)};
    }
    return rows;
}

inline std::vector<linalg::Vec<2>> drop_sine(const std::vector<linalg::Vec<3>>& rows) {
    std::vector<linalg::Vec<2>> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = {rows[i][0], rows[i][1]};
    return out;
}

struct HarmonicQuantileFit {
    double a = 0.0;
    std::array<double, 2> b{};
    double objective = 0.0;
    std::size_t zero_residual_count = 0;
    double subgradient_gap = 0.0;
    int ipm_iterations = 0;
    int pivots = 0;
};

namespace detail {

template <std::size_t P>
HarmonicQuantileFit to_harmonic(const QuantileFit<P>& f) {
    HarmonicQuantileFit h;
    h.a = f.coef[0];
    h.b[0] = P > 1 ? f.coef[1] : 0.0;
    h.b[1] = P > 2 ? f.coef[P - 1] : 0.0;
    h.objective = f.objective;
    h.zero_residual_count = f.zero_residual_count;
    h.subgradient_gap = f.subgradient_gap;
    h.ipm_iterations = f.ipm_iterations;
    h.pivots = f.pivots;
    return h;
}

/// One-step linearisation b ~ (2 / (n f(q))) sum_t c_t (tau - 1{y_t <= q}),
/// with the sparsity 1/f(q) from a difference quotient of empirical quantiles.
/// Only used to choose the starting vertex.
inline linalg::Vec<3> linearized_start(const std::vector<linalg::Vec<3>>& rows,
                                       std::span<const double> y, double tau, bool nyquist) {
    const std::size_t n = y.size();
    std::vector<double> work(y.begin(), y.end());
    const double dn = static_cast<double>(n);
    auto quantile_at = [&](double p) {
        auto k = static_cast<std::ptrdiff_t>(std::ceil(p * dn - 1e-12));
        k = std::clamp<std::ptrdiff_t>(k, 1, static_cast<std::ptrdiff_t>(n));
        std::nth_element(work.begin(), work.begin() + (k - 1), work.end());
        return work[static_cast<std::size_t>(k - 1)];
    };
    const double q = quantile_at(tau);
    const double h = std::min({0.5 * std::pow(dn, -1.0 / 3.0), tau, 1.0 - tau});
    const double lo = std::max(tau - h, 1.0 / dn), hi = std::min(tau + h, 1.0);
    const double sparsity = hi > lo ? (quantile_at(hi) - quantile_at(lo)) / (hi - lo) : 0.0;
    double sc = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double psi = tau - (y[i] <= q ? 1.0 : 0.0);
        sc += rows[i][1] * psi;
        ss += rows[i][2] * psi;
    }
    const double f = (nyquist ? 1.0 : 2.0) * sparsity / dn;
    return {q, f * sc, nyquist ? 0.0 : f * ss};
}

inline void check_harmonic_args(std::size_t n, double omega) {
    if (n < 4) throw std::invalid_argument("harmonic regression needs n >= 4");
    if (!(omega > 0.0 && omega <= std::numbers::pi + 1e-12))
        throw std::invalid_argument("harmonic regression needs 0 < omega <= pi");
}

}  // namespace detail

/// Quantile regression on a precomputed harmonic design. At omega = pi the
/// sine column vanishes and is dropped (b2 = 0).
inline HarmonicQuantileFit harmonic_quantile_fit(const std::vector<linalg::Vec<3>>& rows,
                                                 std::span<const double> y, double tau,
                                                 bool nyquist, const SolverOptions& opt = {}) {
    const auto start = detail::linearized_start(rows, y, tau, nyquist);
    if (nyquist)
        return detail::to_harmonic<2>(
            quantile_fit<2>(drop_sine(rows), y, tau, opt, linalg::Vec<2>{start[0], start[1]}));
    return detail::to_harmonic<3>(quantile_fit<3>(rows, y, tau, opt, start));
}

inline HarmonicQuantileFit harmonic_quantile_fit(const Series& s, TauLevel tau, double omega,
                                                 const SolverOptions& opt = {}) {
    detail::check_harmonic_args(s.size(), omega);
    const bool nyq = is_nyquist_frequency(omega);
    return harmonic_quantile_fit(harmonic_design(s.size(), nyq ? std::numbers::pi : omega),
                                 s.values(), tau.value(), nyq, opt);
}

struct HarmonicOlsFit {
    double a = 0.0;
    std::array<double, 2> b{};
};

inline HarmonicOlsFit harmonic_ols_fit(const Series& s, double omega) {
    detail::check_harmonic_args(s.size(), omega);
    const auto rows = harmonic_design(s.size(), omega);
    if (is_nyquist_frequency(omega)) {
        const auto rows2 = drop_sine(rows);
        const auto c = detail::least_squares<2>(std::span<const linalg::Vec<2>>(rows2), s.values());
        return {c[0], {c[1], 0.0}};
    }
    const auto c = detail::least_squares<3>(std::span<const linalg::Vec<3>>(rows), s.values());
    return {c[0], {c[1], c[2]}};
}

// ---------------------------------------------------------------------------
// Knight's identity

/// Closed form of int_0^v (1{u <= s} - 1{u <= 0}) ds.
inline double knight_integral(double u, double v) noexcept {
    return u > 0.0 ? std::max(0.0, v - u) : std::max(0.0, u - v);
}

/// rho(u - v) - rho(u) - [-v (tau - 1{u <= 0}) + int_0^v (1{u <= s} - 1{u <= 0}) ds].
/// Zero up to rounding for every input.
inline double knight_gap(double u, double v, double tau) noexcept {
    const double psi = tau - (u <= 0.0 ? 1.0 : 0.0);
    return check_loss(tau, u - v) - check_loss(tau, u) - (-v * psi + knight_integral(u, v));
}

}  // namespace qspec
