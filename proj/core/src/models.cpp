#include "nlkv/models.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "nlkv/error.hpp"

namespace nlkv {

namespace {

void require_positive_density(double k) {
    if (!(k > 0.0)) throw DomainError("density must be positive, got " + std::to_string(k));
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

double speed_of(const Greenberg& p, double k) noexcept {
    if (k >= p.k_jam) return 0.0;
    return p.v0 * std::log(p.k_jam / k);
}

double speed_of(const Smulders& p, double k) noexcept {
    if (k >= p.k_jam) return 0.0;
    if (k < p.k_crit) return p.v0 * (1.0 - k / p.k_jam);
    return p.v0 * p.k_crit * (1.0 / k - 1.0 / p.k_jam);
}

double speed_of(const FranklinNewell& p, double k) noexcept {
    if (k >= p.k_jam) return 0.0;
    return -p.v0 * std::expm1(-(p.lambda / p.v0) * (1.0 / k - 1.0 / p.k_jam));
}

}  // namespace

ModelKind kind_of(const FdParams& params) noexcept {
    return std::visit(overloaded{[](const Greenberg&) { return ModelKind::greenberg; },
                                 [](const Smulders&) { return ModelKind::smulders; },
                                 [](const FranklinNewell&) { return ModelKind::franklin_newell; }},
                      params);
}

std::string_view model_name(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::greenberg: return "greenberg";
        case ModelKind::smulders: return "smulders";
        case ModelKind::franklin_newell: return "franklin_newell";
    }
    return "?";
}

ModelKind parse_model(std::string_view name) {
    std::string key;
    for (const char c : name) {
        key.push_back(c == '-' || c == ' ' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    for (const auto kind : kAllModels) {
        if (model_name(kind) == key) return kind;
    }
    if (key == "newell" || key == "franklinnewell") return ModelKind::franklin_newell;
    throw ConfigError("unknown model '" + std::string(name) + "'");
}

std::vector<std::string_view> parameter_names(ModelKind kind) {
    switch (kind) {
        case ModelKind::greenberg: return {"v0", "k_jam"};
        case ModelKind::smulders: return {"v0", "k_crit", "k_jam"};
        case ModelKind::franklin_newell: return {"v0", "lambda", "k_jam"};
    }
    return {};
}

std::vector<double> to_vector(const FdParams& params) {
    return std::visit(overloaded{[](const Greenberg& p) { return std::vector<double>{p.v0, p.k_jam}; },
                                 [](const Smulders& p) { return std::vector<double>{p.v0, p.k_crit, p.k_jam}; },
                                 [](const FranklinNewell& p) { return std::vector<double>{p.v0, p.lambda, p.k_jam}; }},
                      params);
}

FdParams from_vector(ModelKind kind, std::span<const double> values) {
    if (values.size() != parameter_names(kind).size()) {
        throw ConfigError("model '" + std::string(model_name(kind)) + "' expects " +
                          std::to_string(parameter_names(kind).size()) + " parameters, got " +
                          std::to_string(values.size()));
    }
    switch (kind) {
        case ModelKind::greenberg: return Greenberg{values[0], values[1]};
        case ModelKind::smulders: return Smulders{values[0], values[1], values[2]};
        case ModelKind::franklin_newell: return FranklinNewell{values[0], values[1], values[2]};
    }
    throw ConfigError("unknown model kind");
}

double equilibrium_speed(const Greenberg& p, double k) {
    require_positive_density(k);
    return speed_of(p, k);
}

double equilibrium_speed(const Smulders& p, double k) {
    require_positive_density(k);
    return speed_of(p, k);
}

double equilibrium_speed(const FranklinNewell& p, double k) {
    require_positive_density(k);
    return speed_of(p, k);
}

double equilibrium_speed(const FdParams& p, double k) {
    require_positive_density(k);
    return equilibrium_speed_unchecked(p, k);
}

double equilibrium_speed_unchecked(const FdParams& p, double k) noexcept {
    return std::visit([k](const auto& model) { return speed_of(model, k); }, p);
}

double logistic(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double deceleration_probability(double v, double k_a, const FdParams& params, double scale) {
    if (!(scale > 0.0)) throw ConfigError("logistic scale must be positive");
    return logistic((v - equilibrium_speed(params, k_a)) / scale);
}

std::vector<Violation> validate_params(const FdParams& params, double k_max_observed) {
    std::vector<Violation> out;
    const auto values = to_vector(params);
    const auto names = parameter_names(kind_of(params));
    for (std::size_t n = 0; n < values.size(); ++n) {
        if (!(values[n] > 0.0)) out.push_back({std::string(names[n]) + " must be positive", -values[n]});
    }
    if (const auto* s = std::get_if<Smulders>(&params); s != nullptr && !(s->k_crit < s->k_jam)) {
        out.push_back({"k_crit >= k_jam", s->k_crit - s->k_jam});
    }
    const double k_jam = values.back();
    if (!(k_jam > k_max_observed)) {
        out.push_back({"k_jam <= k_max_observed", k_max_observed - k_jam});
    }
    return out;
}

}  // namespace nlkv
