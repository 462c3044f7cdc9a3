#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

// Speed-density fundamental diagrams. Every model here works in km/h and
// veh/km; convert SI samples with the constants below.

namespace nlkv {

inline constexpr double kKmhPerMps = 3.6;
inline constexpr double kVehPerKmPerVehPerM = 1000.0;

[[nodiscard]] constexpr double to_kmh(double mps) noexcept { return mps * kKmhPerMps; }
[[nodiscard]] constexpr double to_veh_per_km(double veh_per_m) noexcept { return veh_per_m * kVehPerKmPerVehPerM; }
[[nodiscard]] constexpr double to_mps(double kmh) noexcept { return kmh / kKmhPerMps; }
[[nodiscard]] constexpr double to_veh_per_m(double veh_per_km) noexcept { return veh_per_km / kVehPerKmPerVehPerM; }

/// v = v0 * ln(k_jam / k)
struct Greenberg {
    double v0{0.0};
    double k_jam{0.0};
    friend bool operator==(const Greenberg&, const Greenberg&) = default;
};

/// Linear below k_crit, v0*k_crit*(1/k - 1/k_jam) above.
struct Smulders {
    double v0{0.0};
    double k_crit{0.0};
    double k_jam{0.0};
    friend bool operator==(const Smulders&, const Smulders&) = default;
};

/// v = v0 * (1 - exp(-(lambda/v0) * (1/k - 1/k_jam)))
struct FranklinNewell {
    double v0{0.0};
    double lambda{0.0};
    double k_jam{0.0};
    friend bool operator==(const FranklinNewell&, const FranklinNewell&) = default;
};

using FdParams = std::variant<Greenberg, Smulders, FranklinNewell>;

enum class ModelKind { greenberg, smulders, franklin_newell };

inline constexpr std::array kAllModels{ModelKind::greenberg, ModelKind::smulders, ModelKind::franklin_newell};

[[nodiscard]] ModelKind kind_of(const FdParams& params) noexcept;
[[nodiscard]] std::string_view model_name(ModelKind kind) noexcept;
/// Accepts "greenberg", "smulders", "franklin_newell" (case-insensitive,
/// '-' and ' ' allowed in place of '_'). Throws ConfigError otherwise.
[[nodiscard]] ModelKind parse_model(std::string_view name);
[[nodiscard]] std::vector<std::string_view> parameter_names(ModelKind kind);

[[nodiscard]] std::vector<double> to_vector(const FdParams& params);
[[nodiscard]] FdParams from_vector(ModelKind kind, std::span<const double> values);

/// Equilibrium speeds. Densities above k_jam map to 0; k <= 0 throws DomainError.
[[nodiscard]] double equilibrium_speed(const Greenberg& p, double k);
[[nodiscard]] double equilibrium_speed(const Smulders& p, double k);
[[nodiscard]] double equilibrium_speed(const FranklinNewell& p, double k);
[[nodiscard]] double equilibrium_speed(const FdParams& p, double k);

/// Same as equilibrium_speed without the domain check; callers guarantee k > 0.
[[nodiscard]] double equilibrium_speed_unchecked(const FdParams& p, double k) noexcept;

/// 1 / (1 + exp(-z)) without overflow for any finite z.
[[nodiscard]] double logistic(double z) noexcept;

/// Probability of deceleration for speed `v` [km/h] at anticipated density
/// `k_a` [veh/km]: logistic((v - f(k_a)) / scale).
[[nodiscard]] double deceleration_probability(double v, double k_a, const FdParams& params, double scale = 1.0);

struct Violation {
    std::string what;
    double magnitude{0.0};
};

/// Positivity, Smulders ordering and k_jam > k_max_observed. An empty
/// result means the parameters are admissible.
[[nodiscard]] std::vector<Violation> validate_params(const FdParams& params, double k_max_observed);

}  // namespace nlkv
