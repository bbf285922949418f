#pragma once

// Replicated simulation studies: integrated RMSE against the truth oracle,
// unbiasedness of the raw kernel, rank/clipped equivalence and time
// reversibility of the smoothed estimator.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qspec/parallel.hpp"
#include "qspec/periodogram.hpp"
#include "qspec/simulation.hpp"
#include "qspec/smoothing.hpp"
#include "qspec/truth.hpp"
#include "qspec/version.hpp"

namespace qspec {

struct ExperimentConfig {
    ModelSpec model = ModelSpec::ar1_of(-0.3, Distribution::gaussian);
    std::vector<std::size_t> n_list{500};
    std::size_t replications = 200;
    std::vector<double> taus{0.05, 0.25, 0.5, 0.75, 0.95};
    /// One span list shared by every n, or one per entry of n_list. An empty
    /// list means no smoothing.
    std::vector<std::vector<int>> spans{{10, 4}};
    std::uint64_t seed = 1;
    std::size_t lag_cap = 50;
    EstimatorMode mode = EstimatorMode::rank;
    std::string output;
    /// 0 picks default_threads(). Results do not depend on it.
    unsigned threads = 0;

    void validate() const {
        if (replications < 1) throw std::invalid_argument("replication count must be at least 1");
        if (n_list.empty()) throw std::invalid_argument("experiment needs at least one n");
        for (std::size_t n : n_list)
            if (n < 4) throw std::invalid_argument("series length must be at least 4");
        if (taus.empty()) throw std::invalid_argument("experiment needs a quantile grid");
        for (std::size_t i = 0; i < taus.size(); ++i) {
            (void)TauLevel{taus[i]};
            if (i > 0 && !(taus[i - 1] < taus[i]))
                throw std::invalid_argument("quantile levels must be sorted and distinct");
        }
        if (!spans.empty() && spans.size() != 1 && spans.size() != n_list.size())
            throw std::invalid_argument("give one span list, or one per series length");
        if (mode == EstimatorMode::ordinary)
            throw std::invalid_argument("studies need a quantile-based estimator");
        if (model.kind == ModelSpec::Kind::ar1 && !(std::abs(model.theta) < 1.0))
            throw std::invalid_argument("AR(1) needs |theta| < 1");
    }

    std::vector<int> spans_for(std::size_t i) const {
        if (spans.empty()) return {};
        return spans.size() == 1 ? spans.front() : spans.at(i);
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["model"] = {{"kind", model.kind == ModelSpec::Kind::iid ? "iid" : "ar1"},
                      {"distribution", std::string(to_string(model.distribution))},
                      {"theta", model.theta},
                      {"burn_in", model.burn_in}};
        j["n"] = n_list;
        j["replications"] = replications;
        j["taus"] = taus;
        j["spans"] = spans;
        j["seed"] = seed;
        j["lag_cap"] = lag_cap;
        j["mode"] = std::string(to_string(mode));
        return j;
    }

    /// FNV-1a over the canonical JSON dump.
    std::string hash() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : to_json().dump()) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }
};

/// Sum in a fixed pairwise order, independent of how the terms were produced.
inline double pairwise_sum(std::span<const double> x) {
    if (x.size() <= 8) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t h = x.size() / 2;
    return pairwise_sum(x.first(h)) + pairwise_sum(x.subspan(h));
}

struct ReportMeta {
    nlohmann::ordered_json config;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string version{qspec::version};
    double runtime_seconds = 0.0;  // not serialised; reruns stay bit-identical
};

inline ReportMeta make_meta(const ExperimentConfig& cfg) {
    return {cfg.to_json(), cfg.hash(), cfg.seed};
}

namespace detail {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline std::vector<std::pair<std::size_t, std::size_t>> upper_pairs(std::size_t k) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a; b < k; ++b) out.emplace_back(a, b);
    return out;
}

/// 2 pi times the truth on the grid; scaled for raw mode, else unscaled.
inline SpectralTruth study_truth(const ExperimentConfig& cfg, const CopulaCrossCovTable& gamma,
                                 const FourierGrid& grid) {
    std::vector<double> dens;
    if (cfg.mode == EstimatorMode::raw)
        for (double t : cfg.taus) dens.push_back(marginal_density_at_quantile(cfg.model, TauLevel{t}));
    auto truth = spectral_truth(gamma, grid,
                                dens.empty() ? SpectralScale::unscaled : SpectralScale::scaled, dens);
    for (std::size_t a = 0; a < cfg.taus.size(); ++a)
        for (std::size_t b = 0; b < cfg.taus.size(); ++b)
            for (std::size_t j = 1; j <= grid.size(); ++j) truth.value(a, b, j) *= two_pi;
    return truth;
}

inline CopulaCrossCovTable study_gamma(const ExperimentConfig& cfg) {
    try {
        return exact_crosscov_table(cfg.model, cfg.taus, cfg.lag_cap);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string("no truth oracle for model ") + cfg.model.name() +
                                    ": " + e.what());
    }
}

}  // namespace detail

/// Mean over the grid of |estimate - truth|^2 for pair (a, b), and the same
/// using real parts only.
inline std::pair<double, double> integrated_squared_error(const PeriodogramTable& est,
                                                          const SpectralTruth& truth,
                                                          std::size_t a, std::size_t b) {
    const std::size_t nf = est.grid().size();
    if (truth.grid().size() != nf) throw std::invalid_argument("estimate and truth grids differ");
    std::vector<double> full(nf), real(nf);
    for (std::size_t j = 1; j <= nf; ++j) {
        const KernelValue d = est.value(a, b, j) - truth.value(a, b, j);
        full[j - 1] = std::norm(d);
        real[j - 1] = d.real() * d.real();
    }
    const double dn = static_cast<double>(nf);
    return {pairwise_sum(full) / dn, pairwise_sum(real) / dn};
}

struct RmseEntry {
    double tau1 = 0.0, tau2 = 0.0;
    double rmse = 0.0;            // complex modulus error
    double rmse_real_only = 0.0;  // alternative convention
};

struct RmseBlock {
    std::size_t n = 0;
    std::vector<int> spans;
    std::vector<RmseEntry> entries;

    const RmseEntry& at(double tau1, double tau2) const {
        for (const auto& e : entries)
            if (e.tau1 == tau1 && e.tau2 == tau2) return e;
        throw std::out_of_range("no RMSE entry for that pair");
    }
};

struct RmseReport {
    ReportMeta meta;
    std::vector<RmseBlock> blocks;

    const RmseBlock& for_n(std::size_t n) const {
        for (const auto& b : blocks)
            if (b.n == n) return b;
        throw std::out_of_range("no RMSE block for n = " + std::to_string(n));
    }
};

/// Produces the estimate for replication `rep` of a series of length n.
using EstimateFn = std::function<PeriodogramTable(const Series&, std::size_t rep)>;

/// Smoothed table in cfg.mode for the i-th series length.
inline EstimateFn default_estimator(const ExperimentConfig& cfg, std::size_t i) {
    const auto spans = cfg.spans_for(i);
    const WeightSequence w = spans.empty() ? WeightSequence{} : daniell_weights(spans);
    return [&cfg, w](const Series& s, std::size_t) {
        auto raw = periodogram_table(s, cfg.taus, cfg.mode, {.threads = 1});
        return smooth_table(raw, w).table;
    };
}

/// RMSE per (tau1 <= tau2) pair: sqrt of the mean over replications of the
/// grid-averaged squared error. `estimator` overrides the default smoothed
/// table; it receives the i-th length through n_index.
inline RmseReport rmse_study(const ExperimentConfig& cfg,
                             const std::function<EstimateFn(std::size_t n_index)>& estimator = {}) {
    cfg.validate();
    detail::Stopwatch clock;
    RmseReport report{make_meta(cfg), {}};
    const auto gamma = detail::study_gamma(cfg);
    const auto pairs = detail::upper_pairs(cfg.taus.size());
    for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
        const std::size_t n = cfg.n_list[i];
        const FourierGrid grid(n);
        const auto spans = cfg.spans_for(i);
        if (!spans.empty() && daniell_weights(spans).half_width() >= grid.size())
            throw std::invalid_argument("spans too wide for n = " + std::to_string(n));
        const auto truth = detail::study_truth(cfg, gamma, grid);
        const EstimateFn est = estimator ? estimator(i) : default_estimator(cfg, i);
        const std::size_t R = cfg.replications;
        std::vector<double> full(pairs.size() * R), real(pairs.size() * R);
        parallel_for(R, [&](std::size_t r) {
            const Series s = simulate(cfg.model, n, cfg.seed, r);
            const auto table = est(s, r);
            for (std::size_t p = 0; p < pairs.size(); ++p) {
                const auto [f, re] = integrated_squared_error(table, truth, pairs[p].first, pairs[p].second);
                full[p * R + r] = f;
                real[p * R + r] = re;
            }
        }, cfg.threads);
        RmseBlock block{n, spans, {}};
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            const auto mf = pairwise_sum(std::span(full).subspan(p * R, R)) / static_cast<double>(R);
            const auto mr = pairwise_sum(std::span(real).subspan(p * R, R)) / static_cast<double>(R);
            block.entries.push_back(
                {cfg.taus[pairs[p].first], cfg.taus[pairs[p].second], std::sqrt(mf), std::sqrt(mr)});
        }
        report.blocks.push_back(std::move(block));
    }
    report.meta.runtime_seconds = clock.seconds();
    return report;
}

struct UnbiasednessRow {
    std::size_t n = 0;
    double tau1 = 0.0, tau2 = 0.0, omega = 0.0;
    KernelValue mean{};
    double se_re = 0.0, se_im = 0.0;
    KernelValue truth{};

    bool within(double k = 3.0) const {
        return std::abs(mean.real() - truth.real()) <= k * se_re &&
               std::abs(mean.imag() - truth.imag()) <= k * se_im + 1e-15;
    }
};

struct UnbiasednessReport {
    ReportMeta meta;
    std::vector<UnbiasednessRow> rows;
};

/// Mean of the unsmoothed kernel over replications at each (pair, g_n(w)),
/// with standard errors, next to 2 pi times the truth (scaled in raw mode).
inline UnbiasednessReport unbiasedness_study(const ExperimentConfig& cfg,
                                             std::span<const double> frequencies) {
    cfg.validate();
    if (frequencies.empty()) throw std::invalid_argument("unbiasedness study needs frequencies");
    if (cfg.mode == EstimatorMode::clipped)
        throw std::invalid_argument("unbiasedness study runs a quantile-regression mode");
    detail::Stopwatch clock;
    UnbiasednessReport report{make_meta(cfg), {}};
    const auto gamma = detail::study_gamma(cfg);
    const auto pairs = detail::upper_pairs(cfg.taus.size());
    const std::size_t k = cfg.taus.size();
    for (std::size_t n : cfg.n_list) {
        const FourierGrid grid(n);
        const auto truth = detail::study_truth(cfg, gamma, grid);
        std::vector<std::size_t> idx;
        for (double w : frequencies) idx.push_back(grid.nearest_index(w));
        const std::size_t R = cfg.replications;
        const std::size_t cells = idx.size() * pairs.size();
        std::vector<KernelValue> vals(cells * R);
        parallel_for(R, [&](std::size_t r) {
            const Series s = simulate(cfg.model, n, cfg.seed, r);
            const auto y = detail::regression_input(s, cfg.mode);
            for (std::size_t f = 0; f < idx.size(); ++f) {
                const auto rows = harmonic_design_at(n, idx[f]);
                std::vector<std::array<double, 2>> b(k);
                for (std::size_t a = 0; a < k; ++a)
                    b[a] = harmonic_quantile_fit(rows, y, cfg.taus[a], grid.is_nyquist(idx[f])).b;
                for (std::size_t p = 0; p < pairs.size(); ++p)
                    vals[(f * pairs.size() + p) * R + r] =
                        laplace_kernel_value(n, b[pairs[p].first], b[pairs[p].second]);
            }
        }, cfg.threads);
        for (std::size_t f = 0; f < idx.size(); ++f)
            for (std::size_t p = 0; p < pairs.size(); ++p) {
                const std::size_t c = f * pairs.size() + p;
                std::vector<double> re(R), im(R);
                for (std::size_t r = 0; r < R; ++r) {
                    re[r] = vals[c * R + r].real();
                    im[r] = vals[c * R + r].imag();
                }
                const double dR = static_cast<double>(R);
                const double mre = pairwise_sum(re) / dR, mim = pairwise_sum(im) / dR;
                double se_re = 0.0, se_im = 0.0;
                if (R > 1) {
                    for (std::size_t r = 0; r < R; ++r) {
                        re[r] = (re[r] - mre) * (re[r] - mre);
                        im[r] = (im[r] - mim) * (im[r] - mim);
                    }
                    se_re = std::sqrt(pairwise_sum(re) / (dR - 1.0) / dR);
                    se_im = std::sqrt(pairwise_sum(im) / (dR - 1.0) / dR);
                }
                const auto [a, b] = pairs[p];
                report.rows.push_back({n, cfg.taus[a], cfg.taus[b], grid.frequency(idx[f]),
                                       {mre, mim}, se_re, se_im, truth.value(a, b, idx[f])});
            }
    }
    report.meta.runtime_seconds = clock.seconds();
    return report;
}

struct EquivalenceRow {
    std::size_t n = 0;
    double tau1 = 0.0, tau2 = 0.0;
    double median = 0.0, lower_quartile = 0.0, upper_quartile = 0.0;
    double max_diagonal_imag_gap = 0.0;
};

struct EquivalenceReport {
    ReportMeta meta;
    std::vector<EquivalenceRow> rows;

    const EquivalenceRow& at(std::size_t n, double tau1, double tau2) const {
        for (const auto& r : rows)
            if (r.n == n && r.tau1 == tau1 && r.tau2 == tau2) return r;
        throw std::out_of_range("no equivalence row for that cell");
    }
};

namespace detail {

/// Type-7 sample quantile of sorted data.
inline double sorted_quantile(const std::vector<double>& v, double p) {
    const double h = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace detail

/// Distribution over grid and replications of |rank-mode QR kernel - clipped
/// kernel computed on the normalised ranks|, per n and (tau1 <= tau2).
inline EquivalenceReport equivalence_study(const ExperimentConfig& cfg) {
    cfg.validate();
    detail::Stopwatch clock;
    EquivalenceReport report{make_meta(cfg), {}};
    const auto pairs = detail::upper_pairs(cfg.taus.size());
    for (std::size_t n : cfg.n_list) {
        const std::size_t nf = FourierGrid(n).size();
        const std::size_t R = cfg.replications;
        std::vector<double> gaps(pairs.size() * R * nf);
        std::vector<double> imag_gap(R, 0.0);
        parallel_for(R, [&](std::size_t r) {
            const Series s = simulate(cfg.model, n, cfg.seed, r);
            const auto qr = periodogram_table(s, cfg.taus, EstimatorMode::rank, {.threads = 1});
            const auto cl = periodogram_table(normalized_ranks(s), cfg.taus, EstimatorMode::clipped,
                                              {.threads = 1});
            for (std::size_t p = 0; p < pairs.size(); ++p) {
                const auto [a, b] = pairs[p];
                for (std::size_t j = 1; j <= nf; ++j) {
                    const KernelValue d = qr.value(a, b, j) - cl.value(a, b, j);
                    gaps[(p * R + r) * nf + (j - 1)] = std::abs(d);
                    if (a == b) imag_gap[r] = std::max(imag_gap[r], std::abs(d.imag()));
                }
            }
        }, cfg.threads);
        const double max_imag = *std::max_element(imag_gap.begin(), imag_gap.end());
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            std::vector<double> v(gaps.begin() + static_cast<std::ptrdiff_t>(p * R * nf),
                                  gaps.begin() + static_cast<std::ptrdiff_t>((p + 1) * R * nf));
            std::sort(v.begin(), v.end());
            const auto [a, b] = pairs[p];
            report.rows.push_back({n, cfg.taus[a], cfg.taus[b], detail::sorted_quantile(v, 0.5),
                                   detail::sorted_quantile(v, 0.25), detail::sorted_quantile(v, 0.75),
                                   a == b ? max_imag : 0.0});
        }
    }
    report.meta.runtime_seconds = clock.seconds();
    return report;
}

struct ReversibilityRow {
    std::size_t n = 0;
    double mean_abs_imag = 0.0;
    double mean_abs_real = 0.0;
    double ratio = 0.0;
    /// max |Im| of the truth over off-diagonal pairs and the grid; zero for
    /// time-reversible designs up to truncation. NaN without an oracle.
    double truth_max_abs_imag = 0.0;
};

struct ReversibilityReport {
    ReportMeta meta;
    std::vector<ReversibilityRow> rows;
};

/// mean |Im| / mean |Re| of the smoothed table over off-diagonal pairs, all
/// grid frequencies and replications.
inline ReversibilityReport reversibility_study(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.taus.size() < 2) throw std::invalid_argument("reversibility needs two or more levels");
    detail::Stopwatch clock;
    ReversibilityReport report{make_meta(cfg), {}};
    std::vector<std::pair<std::size_t, std::size_t>> off;
    for (const auto& p : detail::upper_pairs(cfg.taus.size()))
        if (p.first != p.second) off.push_back(p);
    for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
        const std::size_t n = cfg.n_list[i];
        const FourierGrid grid(n);
        const auto spans = cfg.spans_for(i);
        if (!spans.empty() && daniell_weights(spans).half_width() >= grid.size())
            throw std::invalid_argument("spans too wide for n = " + std::to_string(n));
        const EstimateFn est = default_estimator(cfg, i);
        const std::size_t R = cfg.replications;
        std::vector<double> im(R), re(R);
        parallel_for(R, [&](std::size_t r) {
            const auto table = est(simulate(cfg.model, n, cfg.seed, r), r);
            std::vector<double> ai, ar;
            for (const auto& [a, b] : off)
                for (std::size_t j = 1; j <= grid.size(); ++j) {
                    ai.push_back(std::abs(table.value(a, b, j).imag()));
                    ar.push_back(std::abs(table.value(a, b, j).real()));
                }
            im[r] = pairwise_sum(ai);
            re[r] = pairwise_sum(ar);
        }, cfg.threads);
        ReversibilityRow row{n};
        const double count = static_cast<double>(R * off.size() * grid.size());
        row.mean_abs_imag = pairwise_sum(im) / count;
        row.mean_abs_real = pairwise_sum(re) / count;
        row.ratio = row.mean_abs_imag / row.mean_abs_real;
        try {
            const auto truth = spectral_truth(exact_crosscov_table(cfg.model, cfg.taus, cfg.lag_cap), grid);
            for (const auto& [a, b] : off)
                for (std::size_t j = 1; j <= grid.size(); ++j)
                    row.truth_max_abs_imag =
                        std::max(row.truth_max_abs_imag, std::abs(truth.value(a, b, j).imag()));
        } catch (const std::invalid_argument&) {
            row.truth_max_abs_imag = std::nan("");
        }
        report.rows.push_back(row);
    }
    report.meta.runtime_seconds = clock.seconds();
    return report;
}

}  // namespace qspec
