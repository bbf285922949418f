#pragma once

// CSV ingestion, plot-ready table rows and JSON reports.

#include <charconv>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "qspec/experiments.hpp"
#include "qspec/periodogram.hpp"
#include "qspec/series.hpp"
#include "qspec/smoothing.hpp"
#include "qspec/truth.hpp"

namespace qspec {

class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Zero-based column index or header name.
using ColumnSelector = std::variant<std::size_t, std::string>;

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t c = line.find(',', start);
        out.push_back(trim(line.substr(start, c == std::string_view::npos ? c : c - start)));
        if (c == std::string_view::npos) break;
        start = c + 1;
    }
    return out;
}

inline bool parse_double(std::string_view s, double& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

/// Reads one numeric column. A first line whose selected cell is not numeric
/// is taken as a header; selecting by name requires one. Errors name the
/// 1-based line number.
inline Series read_series(std::istream& in, const ColumnSelector& column = std::size_t{0},
                          const std::string& source = "input") {
    std::string line;
    std::size_t lineno = 0;
    std::vector<double> values;
    bool first = true;
    std::size_t col = std::holds_alternative<std::size_t>(column) ? std::get<std::size_t>(column) : 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv(line);
        if (first) {
            first = false;
            if (const auto* name = std::get_if<std::string>(&column)) {
                std::size_t k = 0;
                while (k < cells.size() && cells[k] != *name) ++k;
                if (k == cells.size())
                    throw io_error(source + ": no column named '" + *name + "' in header");
                col = k;
                continue;
            }
            double v;
            if (col < cells.size() && !detail::parse_double(cells[col], v)) continue;  // header
        }
        if (col >= cells.size())
            throw io_error(source + ": line " + std::to_string(lineno) + " has no column " +
                           std::to_string(col + 1));
        double v;
        if (!detail::parse_double(cells[col], v) || !std::isfinite(v))
            throw io_error(source + ": line " + std::to_string(lineno) + ": '" +
                           std::string(cells[col]) + "' is not a finite number");
        values.push_back(v);
    }
    if (values.empty()) throw io_error(source + ": selected column is empty");
    return Series(std::move(values));
}

inline Series load_series(const std::string& path, const ColumnSelector& column = std::size_t{0}) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    return read_series(in, column, path);
}

inline void write_series(std::ostream& out, const Series& s, const std::string& header = "value") {
    out << header << '\n';
    for (double v : s) out << detail::format_double(v) << '\n';
}

enum class RowKind { raw, smoothed, truth, ordinary };

inline std::string_view to_string(RowKind k) {
    switch (k) {
        case RowKind::raw: return "raw";
        case RowKind::smoothed: return "smoothed";
        case RowKind::truth: return "truth";
        case RowKind::ordinary: return "ordinary";
    }
    return "?";
}

struct OutputRow {
    double omega = 0.0, tau1 = 0.0, tau2 = 0.0, re = 0.0, im = 0.0;
    RowKind kind = RowKind::raw;
};

/// Pair-major rows. By default pairs with tau1 <= tau2 only; with all_pairs
/// every ordered pair, the (tau2, tau1) rows carrying the negated imaginary part.
inline std::vector<OutputRow> table_rows(const PeriodogramTable& t, RowKind kind, bool all_pairs = false) {
    std::vector<OutputRow> out;
    const std::size_t k = t.tau_count();
    const bool ordinary = t.mode() == EstimatorMode::ordinary;
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = all_pairs ? 0 : a; b < k; ++b)
            for (std::size_t j = 1; j <= t.grid().size(); ++j) {
                const KernelValue v = t.value(a, b, j);
                out.push_back({t.grid().frequency(j), ordinary ? 0.0 : t.taus()[a],
                               ordinary ? 0.0 : t.taus()[b], v.real(), v.imag(), kind});
            }
    return out;
}

inline std::vector<OutputRow> table_rows(const SpectralTruth& t, bool all_pairs = false) {
    std::vector<OutputRow> out;
    const std::size_t k = t.taus().size();
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = all_pairs ? 0 : a; b < k; ++b)
            for (std::size_t j = 1; j <= t.grid().size(); ++j) {
                const KernelValue v = t.value(a, b, j);
                out.push_back({t.grid().frequency(j), t.taus()[a], t.taus()[b], v.real(), v.imag(),
                               RowKind::truth});
            }
    return out;
}

inline void write_rows(std::ostream& out, const std::vector<OutputRow>& rows) {
    out << "omega,tau1,tau2,re,im,kind\n";
    for (const auto& r : rows) {
        for (double v : {r.omega, r.tau1, r.tau2, r.re, r.im}) {
            if (!std::isfinite(v)) throw io_error("output row has a non-finite field");
            out << detail::format_double(v) << ',';
        }
        out << to_string(r.kind) << '\n';
    }
}

// ---------------------------------------------------------------------------
// JSON reports: {"config", "seed", "config_hash", "version", "rows"}

namespace detail {

inline nlohmann::ordered_json report_head(const ReportMeta& m) {
    nlohmann::ordered_json j;
    j["config"] = m.config;
    j["seed"] = m.seed;
    j["config_hash"] = m.config_hash;
    j["version"] = m.version;
    return j;
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const RmseReport& r) {
    auto j = detail::report_head(r.meta);
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& b : r.blocks)
        for (const auto& e : b.entries)
            j["rows"].push_back({{"n", b.n}, {"spans", b.spans}, {"tau1", e.tau1}, {"tau2", e.tau2},
                                 {"rmse", e.rmse}, {"rmse_real_only", e.rmse_real_only}});
    return j;
}

inline nlohmann::ordered_json to_json(const UnbiasednessReport& r) {
    auto j = detail::report_head(r.meta);
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& x : r.rows)
        j["rows"].push_back({{"n", x.n}, {"tau1", x.tau1}, {"tau2", x.tau2}, {"omega", x.omega},
                             {"mean_re", x.mean.real()}, {"mean_im", x.mean.imag()},
                             {"se_re", x.se_re}, {"se_im", x.se_im},
                             {"truth_re", x.truth.real()}, {"truth_im", x.truth.imag()},
                             {"within_3se", x.within()}});
    return j;
}

inline nlohmann::ordered_json to_json(const EquivalenceReport& r) {
    auto j = detail::report_head(r.meta);
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& x : r.rows)
        j["rows"].push_back({{"n", x.n}, {"tau1", x.tau1}, {"tau2", x.tau2}, {"median", x.median},
                             {"lower_quartile", x.lower_quartile},
                             {"upper_quartile", x.upper_quartile},
                             {"max_diagonal_imag_gap", x.max_diagonal_imag_gap}});
    return j;
}

inline nlohmann::ordered_json to_json(const ReversibilityReport& r) {
    auto j = detail::report_head(r.meta);
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& x : r.rows) {
        nlohmann::ordered_json row{{"n", x.n}, {"mean_abs_imag", x.mean_abs_imag},
                                   {"mean_abs_real", x.mean_abs_real}, {"ratio", x.ratio}};
        if (std::isnan(x.truth_max_abs_imag)) row["truth_max_abs_imag"] = nullptr;
        else row["truth_max_abs_imag"] = x.truth_max_abs_imag;
        j["rows"].push_back(row);
    }
    return j;
}

/// RMSE rows as CSV.
inline void write_rmse_csv(std::ostream& out, const RmseReport& r) {
    out << "n,tau1,tau2,rmse,rmse_real_only\n";
    for (const auto& b : r.blocks)
        for (const auto& e : b.entries)
            out << b.n << ',' << detail::format_double(e.tau1) << ',' << detail::format_double(e.tau2)
                << ',' << detail::format_double(e.rmse) << ','
                << detail::format_double(e.rmse_real_only) << '\n';
}

}  // namespace qspec
