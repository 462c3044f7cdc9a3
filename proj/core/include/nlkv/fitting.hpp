#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "nlkv/anticipation.hpp"
#include "nlkv/models.hpp"
#include "nlkv/nelder_mead.hpp"

namespace nlkv {

enum class LossKind { ece, nll, lse };

[[nodiscard]] std::string_view to_string(LossKind loss) noexcept;
[[nodiscard]] LossKind parse_loss(std::string_view name);

/// log(1 + e^z) evaluated as max(z, 0) + log1p(exp(-|z|)).
[[nodiscard]] double softplus(double z) noexcept;

/// Share of accelerating (y = 0) samples. Throws DegenerateSampleError
/// when the sample holds a single class, DataError when it is empty.
[[nodiscard]] double compute_omega(std::span<const NlkvSample> samples);

// Losses take SI samples and evaluate the model in km/h and veh/km. A model
// evaluated at a non-positive density makes the loss +inf.

/// Class-weighted cross entropy, averaged over samples:
/// (1/m) sum[ w*y*softplus(-z) + (1-w)*(1-y)*softplus(z) ], z = (v - f(k_a))/scale.
[[nodiscard]] double ece_loss(const FdParams& params, std::span<const NlkvSample> samples, double omega,
                              double scale = 1.0);

/// Unweighted, unnormalized negative log-likelihood of the logistic model.
[[nodiscard]] double nll_loss(const FdParams& params, std::span<const NlkvSample> samples, double scale = 1.0);

/// Mean squared speed residual [(km/h)^2].
[[nodiscard]] double lse_loss(const FdParams& params, std::span<const LkvSample> samples);

/// Box bounds in model units, ordered as parameter_names(kind).
struct ParameterBounds {
    std::vector<double> lower;
    std::vector<double> upper;
};

/// v0 in [1, 200], k_jam in [1.01*k_max, 1000], k_crit in [1, 1000] (with
/// k_crit < k_jam enforced separately), lambda in [1, 10000].
[[nodiscard]] ParameterBounds default_bounds(ModelKind kind, double k_max_observed);

struct FitConfig {
    LossKind loss{LossKind::ece};
    std::size_t starts{16};
    /// Simplex restarts from the incumbent after each convergence.
    std::size_t polish_rounds{2};
    NelderMeadOptions simplex{};
    /// Initial simplex edge as a fraction of each bound width.
    double initial_step{0.1};
    std::optional<ParameterBounds> bounds;
    std::uint64_t seed{42};
    /// Logistic temperature [km/h].
    double scale{1.0};
    /// Infeasible points score loss(projection) + penalty * violation.
    double penalty{1e3};
};

struct FitResult {
    FdParams params;
    LossKind loss{LossKind::ece};
    double loss_value{0.0};
    std::size_t iterations{0};
    std::size_t evaluations{0};
    bool converged{false};
    std::size_t starts_converged{0};
    std::optional<double> omega;
    std::size_t sample_count{0};
    ParameterBounds bounds;
    std::uint64_t seed{0};
};

/// Multi-start Nelder-Mead minimization of the ECE or NLL loss over NLKV samples.
[[nodiscard]] FitResult fit_fd(ModelKind model, std::span<const NlkvSample> samples, const FitConfig& config);

/// Multi-start Nelder-Mead minimization of the LSE loss over LKV samples.
[[nodiscard]] FitResult fit_fd(ModelKind model, std::span<const LkvSample> samples, const FitConfig& config);

/// Largest density in the sample [veh/km].
[[nodiscard]] double max_density_veh_per_km(std::span<const NlkvSample> samples) noexcept;
[[nodiscard]] double max_density_veh_per_km(std::span<const LkvSample> samples) noexcept;

}  // namespace nlkv
