#pragma once

// Reproducible AR(1) and white-noise generators, plus monotone transforms.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qspec/series.hpp"

namespace qspec {

/// SplitMix64 finaliser; maps (master seed, stream index) to independent
/// engine seeds regardless of the order streams are consumed in.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

using Engine = std::mt19937_64;

/// Uniform draw strictly inside (0, 1).
inline double open_uniform(Engine& g) {
    return (static_cast<double>(g() >> 11) + 0.5) * 0x1.0p-53;
}

enum class Distribution { uniform, gaussian, cauchy };

inline std::string_view to_string(Distribution d) {
    switch (d) {
        case Distribution::uniform: return "uniform";
        case Distribution::gaussian: return "gaussian";
        case Distribution::cauchy: return "cauchy-t1";
    }
    return "?";
}

inline Distribution parse_distribution(std::string_view s) {
    if (s == "uniform") return Distribution::uniform;
    if (s == "gaussian" || s == "normal") return Distribution::gaussian;
    if (s == "cauchy-t1" || s == "cauchy" || s == "t1") return Distribution::cauchy;
    throw std::invalid_argument("unknown distribution '" + std::string(s) + "'");
}

/// Draws from one distribution. t1 uses the inverse CDF tan(pi (U - 1/2)).
class Sampler {
public:
    explicit Sampler(Distribution d) : dist_(d) {}

    double operator()(Engine& g) {
        switch (dist_) {
            case Distribution::uniform: return open_uniform(g);
            case Distribution::gaussian: return normal_(g);
            case Distribution::cauchy: return std::tan(std::numbers::pi * (open_uniform(g) - 0.5));
        }
        return 0.0;
    }

private:
    Distribution dist_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

struct Ar1Spec {
    double theta = 0.0;
    Distribution innovation = Distribution::gaussian;
    std::size_t burn_in = 500;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(std::abs(theta) < 1.0)) throw std::invalid_argument("AR(1) needs |theta| < 1");
        if (innovation == Distribution::uniform)
            throw std::invalid_argument("AR(1) innovations must be gaussian or cauchy-t1");
    }
};

/// Y_t = theta Y_{t-1} + e_t from Y_0 = 0, discarding burn_in steps.
inline Series simulate_ar1(const Ar1Spec& spec, std::size_t n) {
    spec.validate();
    if (n == 0) throw std::invalid_argument("simulate_ar1: n must be positive");
    Engine g(spec.seed);
    Sampler eps(spec.innovation);
    double y = 0.0;
    for (std::size_t t = 0; t < spec.burn_in; ++t) y = spec.theta * y + eps(g);
    std::vector<double> out(n);
    for (auto& v : out) {
        y = spec.theta * y + eps(g);
        v = y;
    }
    return Series(std::move(out));
}

inline Series simulate_iid(Distribution dist, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("simulate_iid: n must be positive");
    Engine g(seed);
    Sampler draw(dist);
    std::vector<double> out(n);
    for (auto& v : out) v = draw(g);
    return Series(std::move(out));
}

/// A data-generating process for experiments.
struct ModelSpec {
    enum class Kind { iid, ar1 } kind = Kind::ar1;
    Distribution distribution = Distribution::gaussian;  // innovations for ar1
    double theta = 0.0;
    std::size_t burn_in = 500;

    static ModelSpec iid_of(Distribution d) { return {Kind::iid, d, 0.0, 0}; }
    static ModelSpec ar1_of(double theta, Distribution d, std::size_t burn_in = 500) {
        return {Kind::ar1, d, theta, burn_in};
    }

    std::string name() const {
        if (kind == Kind::iid) return "iid-" + std::string(to_string(distribution));
        return "ar1-" + std::string(to_string(distribution));
    }
};

/// Replication `stream` of `model`, seeded from (master, stream).
inline Series simulate(const ModelSpec& model, std::size_t n, std::uint64_t master,
                       std::uint64_t stream) {
    const std::uint64_t seed = derive_seed(master, stream);
    if (model.kind == ModelSpec::Kind::iid) return simulate_iid(model.distribution, n, seed);
    return simulate_ar1({model.theta, model.distribution, model.burn_in, seed}, n);
}

namespace transform {
struct Identity {};
struct Cube {};
struct Exp {};
struct Affine {
    double shift = 0.0;
    double scale = 1.0;
};
}  // namespace transform

using MonotoneTransform =
    std::variant<transform::Identity, transform::Cube, transform::Exp, transform::Affine>;

/// Applies a strictly increasing transform elementwise.
inline Series apply_monotone(const Series& s, const MonotoneTransform& h) {
    if (const auto* a = std::get_if<transform::Affine>(&h); a && !(a->scale > 0.0))
        throw std::invalid_argument("affine transform needs a positive scale");
    std::vector<double> out(s.begin(), s.end());
    std::visit([&](const auto& tr) {
        using T = std::decay_t<decltype(tr)>;
        for (double& v : out) {
            if constexpr (std::is_same_v<T, transform::Cube>) v = v * v * v;
            else if constexpr (std::is_same_v<T, transform::Exp>) v = std::exp(v);
            else if constexpr (std::is_same_v<T, transform::Affine>) v = tr.shift + tr.scale * v;
        }
    }, h);
    return Series(std::move(out));
}

}  // namespace qspec
