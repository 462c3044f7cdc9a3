#include <cmath>
#include <limits>

#include "nlkv/error.hpp"
#include "nlkv/fitting.hpp"

namespace nlkv {

namespace {

// Pairwise summation over [begin, end) with a fixed split, so a given sample
// order always produces the same bits.
template <class Term>
double pairwise_sum(std::size_t begin, std::size_t end, const Term& term) {
    if (end - begin <= 64) {
        double s = 0.0;
        for (std::size_t k = begin; k < end; ++k) s += term(k);
        return s;
    }
    const std::size_t mid = begin + (end - begin) / 2;
    return pairwise_sum(begin, mid, term) + pairwise_sum(mid, end, term);
}

constexpr double kInf = std::numeric_limits<double>::infinity();

// Residual in units of `scale`, or NaN outside the model domain.
double residual(const FdParams& params, const NlkvSample& s, double scale) noexcept {
    const double k = to_veh_per_km(s.k_a);
    if (!(k > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return (to_kmh(s.v) - equilibrium_speed_unchecked(params, k)) / scale;
}

}  // namespace

std::string_view to_string(LossKind loss) noexcept {
    switch (loss) {
        case LossKind::ece: return "ece";
        case LossKind::nll: return "nll";
        case LossKind::lse: return "lse";
    }
    return "?";
}

LossKind parse_loss(std::string_view name) {
    if (name == "ece" || name == "ECE") return LossKind::ece;
    if (name == "nll" || name == "NLL") return LossKind::nll;
    if (name == "lse" || name == "LSE") return LossKind::lse;
    throw ConfigError("unknown loss '" + std::string(name) + "'");
}

double softplus(double z) noexcept { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double compute_omega(std::span<const NlkvSample> samples) {
    if (samples.empty()) throw DataError("compute_omega: empty sample");
    std::size_t accelerating = 0;
    for (const auto& s : samples) accelerating += s.y == 0 ? 1 : 0;
    if (accelerating == 0 || accelerating == samples.size()) {
        throw DegenerateSampleError("compute_omega: single-class sample; ECE degenerate");
    }
    return static_cast<double>(accelerating) / static_cast<double>(samples.size());
}

double ece_loss(const FdParams& params, std::span<const NlkvSample> samples, double omega, double scale) {
    if (samples.empty()) throw DataError("ece_loss: empty sample");
    if (!(omega > 0.0 && omega < 1.0)) throw ConfigError("ece_loss: omega must lie in (0, 1)");
    const double total = pairwise_sum(0, samples.size(), [&](std::size_t k) {
        const auto& s = samples[k];
        const double z = residual(params, s, scale);
        if (std::isnan(z)) return kInf;
        // y = 0 terms: z + softplus(-z) == softplus(z)
        return s.y == 1 ? omega * softplus(-z) : (1.0 - omega) * softplus(z);
    });
    return total / static_cast<double>(samples.size());
}

double nll_loss(const FdParams& params, std::span<const NlkvSample> samples, double scale) {
    if (samples.empty()) throw DataError("nll_loss: empty sample");
    return pairwise_sum(0, samples.size(), [&](std::size_t k) {
        const auto& s = samples[k];
        const double z = residual(params, s, scale);
        if (std::isnan(z)) return kInf;
        return s.y == 1 ? softplus(-z) : softplus(z);
    });
}

double lse_loss(const FdParams& params, std::span<const LkvSample> samples) {
    if (samples.empty()) throw DataError("lse_loss: empty sample");
    const double total = pairwise_sum(0, samples.size(), [&](std::size_t n) {
        const double k = to_veh_per_km(samples[n].k);
        if (!(k > 0.0)) return kInf;
        const double r = to_kmh(samples[n].v) - equilibrium_speed_unchecked(params, k);
        return r * r;
    });
    return total / static_cast<double>(samples.size());
}

}  // namespace nlkv
