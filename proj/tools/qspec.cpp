// qspec: simulate series, compute quantile periodograms, smooth them, export
// truth tables and run RMSE studies from the command line.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qspec/qspec.hpp"

namespace {

using namespace qspec;

std::vector<double> parse_doubles(const std::string& s, const char* what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        double v;
        if (!detail::parse_double(detail::trim(cell), v))
            throw std::invalid_argument(std::string("bad value '") + cell + "' in " + what);
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument(std::string("empty list for ") + what);
    return out;
}

std::vector<int> parse_ints(const std::string& s, const char* what) {
    std::vector<int> out;
    for (double v : parse_doubles(s, what)) {
        if (v != static_cast<int>(v)) throw std::invalid_argument(std::string(what) + " must be integers");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

/// Writes to --out when given, else stdout.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty() && path != "-") {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw io_error("cannot write '" + path + "'");
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

struct Options {
    std::string model = "ar1";
    double theta = -0.3;
    std::string innovation = "gaussian";
    std::size_t burn_in = 500;
    std::string n = "500";
    std::uint64_t seed = 1;
    std::string out;
    std::string input;
    std::string column = "0";
    std::string mode = "rank";
    std::string taus = "0.05,0.25,0.5,0.75,0.95";
    std::vector<std::string> spans;
    std::size_t runs = 200;
    std::size_t lag_cap = 50;
    bool all_pairs = false;
    bool scaled = false;
    bool estimator_scale = false;
    std::string source = "exact";
    std::size_t mc_length = 1'000'000;
    std::string csv;
};

ModelSpec model_of(const Options& o) {
    const Distribution d = parse_distribution(o.innovation);
    if (o.model == "iid") return ModelSpec::iid_of(d);
    if (o.model == "ar1") {
        Ar1Spec{o.theta, d, o.burn_in, 0}.validate();
        return ModelSpec::ar1_of(o.theta, d, o.burn_in);
    }
    throw std::invalid_argument("unknown model '" + o.model + "' (ar1 or iid)");
}

std::size_t single_n(const Options& o) {
    const auto v = parse_ints(o.n, "--n");
    if (v.size() != 1 || v[0] < 1) throw std::invalid_argument("--n must be one positive length");
    return static_cast<std::size_t>(v[0]);
}

ColumnSelector column_of(const Options& o) {
    double v;
    if (detail::parse_double(o.column, v) && v >= 0 && v == static_cast<std::size_t>(v))
        return static_cast<std::size_t>(v);
    return o.column;
}

WeightSequence weights_of(const std::vector<int>& spans, std::size_t n) {
    const auto w = daniell_weights(spans);
    if (w.half_width() >= n / 2)
        throw std::invalid_argument("spans too wide for n = " + std::to_string(n) +
                                    " (half-width " + std::to_string(w.half_width()) + ")");
    return w;
}

int cmd_simulate(const Options& o) {
    const Series s = simulate(model_of(o), single_n(o), o.seed, 0);
    Sink sink(o.out);
    write_series(sink.stream(), s);
    return 0;
}

PeriodogramTable table_of(const Options& o, const Series& s) {
    const auto taus = parse_doubles(o.taus, "--taus");
    return periodogram_table(s, taus, parse_mode(o.mode));
}

int cmd_periodogram(const Options& o) {
    const Series s = load_series(o.input, column_of(o));
    const auto t = table_of(o, s);
    Sink sink(o.out);
    write_rows(sink.stream(), table_rows(t, t.mode() == EstimatorMode::ordinary ? RowKind::ordinary : RowKind::raw,
                                         o.all_pairs));
    return 0;
}

int smooth_and_write(const Options& o, const Series& s, const std::vector<int>& spans) {
    const auto w = weights_of(spans, s.size());
    const auto t = table_of(o, s);
    const auto sm = smooth_table(t, w, default_threads());
    Sink sink(o.out);
    write_rows(sink.stream(), table_rows(sm.table, RowKind::smoothed, o.all_pairs));
    return 0;
}

int cmd_smooth(const Options& o) {
    if (o.spans.size() != 1) throw std::invalid_argument("smooth needs one --spans list");
    return smooth_and_write(o, load_series(o.input, column_of(o)), parse_ints(o.spans[0], "--spans"));
}

int cmd_analyze(const Options& o) {
    const Series s = load_series(o.input, column_of(o));
    std::vector<int> spans;
    if (o.spans.empty()) {
        const int ref[] = {200, 100};
        spans = proportional_spans(ref, 11844, s.size());
        std::cerr << "spans";
        for (int m : spans) std::cerr << ' ' << m;
        std::cerr << '\n';
    } else if (o.spans.size() == 1) {
        spans = parse_ints(o.spans[0], "--spans");
    } else {
        throw std::invalid_argument("analyze takes one --spans list");
    }
    Options rank = o;
    rank.mode = "rank";
    return smooth_and_write(rank, s, spans);
}

int cmd_truth(const Options& o) {
    const ModelSpec m = model_of(o);
    const auto taus = parse_doubles(o.taus, "--taus");
    for (double t : taus) (void)TauLevel{t};
    CopulaCrossCovTable gamma = o.source == "exact" ? exact_crosscov_table(m, taus, o.lag_cap)
                                : o.source == "mc"
                                    ? monte_carlo_crosscov_table(m, taus, o.lag_cap, o.mc_length, o.seed)
                                    : throw std::invalid_argument("--source must be exact or mc");
    const FourierGrid grid(single_n(o));
    std::vector<double> dens;
    if (o.scaled)
        for (double t : taus) dens.push_back(marginal_density_at_quantile(m, TauLevel{t}));
    auto truth = spectral_truth(gamma, grid, o.scaled ? SpectralScale::scaled : SpectralScale::unscaled, dens);
    auto rows = table_rows(truth, o.all_pairs);
    if (o.estimator_scale)
        for (auto& r : rows) {
            r.re *= two_pi;
            r.im *= two_pi;
        }
    Sink sink(o.out);
    write_rows(sink.stream(), rows);
    return 0;
}

int cmd_rmse(const Options& o) {
    ExperimentConfig cfg;
    cfg.model = model_of(o);
    cfg.n_list.clear();
    for (int n : parse_ints(o.n, "--n")) {
        if (n < 4) throw std::invalid_argument("--n entries must be at least 4");
        cfg.n_list.push_back(static_cast<std::size_t>(n));
    }
    cfg.replications = o.runs;
    cfg.taus = parse_doubles(o.taus, "--taus");
    cfg.spans.clear();
    for (const auto& s : o.spans) cfg.spans.push_back(parse_ints(s, "--spans"));
    if (o.spans.empty()) cfg.spans = {{10, 4}};
    cfg.seed = o.seed;
    cfg.lag_cap = o.lag_cap;
    cfg.mode = parse_mode(o.mode);
    cfg.output = o.out;
    const auto report = rmse_study(cfg);
    std::fprintf(stderr, "rmse: %zu replications in %.1f s\n", cfg.replications,
                 report.meta.runtime_seconds);
    Sink sink(o.out);
    sink.stream() << to_json(report).dump(2) << '\n';
    if (!o.csv.empty()) {
        Sink csv(o.csv);
        write_rmse_csv(csv.stream(), report);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantile spectral analysis: Laplace and rank-based copula periodograms"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(qspec::version));
    Options o;

    auto add_model = [&](CLI::App* c) {
        c->add_option("--model", o.model, "ar1 or iid")->capture_default_str();
        c->add_option("--theta", o.theta, "AR(1) coefficient")->capture_default_str();
        c->add_option("--innovation", o.innovation, "gaussian, cauchy-t1 or uniform (iid only)")
            ->capture_default_str();
        c->add_option("--burn-in", o.burn_in, "discarded AR(1) steps")->capture_default_str();
        c->add_option("--seed", o.seed, "master seed")->capture_default_str();
    };
    auto add_input = [&](CLI::App* c) {
        c->add_option("input", o.input, "CSV file")->required()->check(CLI::ExistingFile);
        c->add_option("--column", o.column, "column index (0-based) or header name")->capture_default_str();
    };
    auto add_table = [&](CLI::App* c) {
        c->add_option("--taus", o.taus, "comma-separated quantile levels")->capture_default_str();
        c->add_flag("--all-pairs", o.all_pairs, "write both (tau1, tau2) orders");
    };
    auto add_out = [&](CLI::App* c) { c->add_option("--out", o.out, "output file (default stdout)"); };

    auto* sim = app.add_subcommand("simulate", "write a simulated series as CSV");
    add_model(sim);
    sim->add_option("--n", o.n, "series length")->capture_default_str();
    add_out(sim);

    auto* per = app.add_subcommand("periodogram", "periodogram table of a series");
    add_input(per);
    add_table(per);
    per->add_option("--mode", o.mode, "raw, known-margin, rank, clipped or ordinary")->capture_default_str();
    add_out(per);

    auto* smo = app.add_subcommand("smooth", "Daniell-smoothed periodogram table");
    add_input(smo);
    add_table(smo);
    smo->add_option("--mode", o.mode, "estimator mode")->capture_default_str();
    smo->add_option("--spans", o.spans, "comma-separated Daniell spans")->required();
    add_out(smo);

    auto* tru = app.add_subcommand("truth", "copula spectral density on a Fourier grid");
    add_model(tru);
    add_table(tru);
    tru->add_option("--n", o.n, "grid length")->capture_default_str();
    tru->add_option("--lag-cap", o.lag_cap, "truncation lag K")->capture_default_str();
    tru->add_flag("--scaled", o.scaled, "divide by the marginal densities");
    tru->add_flag("--estimator-scale", o.estimator_scale, "multiply by 2 pi, the scale estimates target");
    tru->add_option("--source", o.source, "exact or mc")->capture_default_str();
    tru->add_option("--mc-length", o.mc_length, "Monte-Carlo path length")->capture_default_str();
    add_out(tru);

    auto* rms = app.add_subcommand("rmse", "root integrated MSE study (JSON report)");
    add_model(rms);
    rms->add_option("--n", o.n, "comma-separated series lengths")->capture_default_str();
    rms->add_option("--runs", o.runs, "replications")->capture_default_str();
    rms->add_option("--taus", o.taus, "comma-separated quantile levels")->capture_default_str();
    rms->add_option("--spans", o.spans, "Daniell spans; once, or once per --n entry");
    rms->add_option("--lag-cap", o.lag_cap, "truncation lag K")->capture_default_str();
    rms->add_option("--mode", o.mode, "estimator mode")->capture_default_str();
    rms->add_option("--csv", o.csv, "also write the rows as CSV");
    add_out(rms);

    auto* ana = app.add_subcommand("analyze", "rank periodogram of a return series, smoothed");
    add_input(ana);
    add_table(ana);
    ana->add_option("--spans", o.spans,
                    "Daniell spans (default (200,100) scaled from n = 11844 to the input length)");
    add_out(ana);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) return cmd_simulate(o);
        if (*per) return cmd_periodogram(o);
        if (*smo) return cmd_smooth(o);
        if (*tru) return cmd_truth(o);
        if (*rms) return cmd_rmse(o);
        if (*ana) return cmd_analyze(o);
    } catch (const std::exception& e) {
        std::cerr << "qspec: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
