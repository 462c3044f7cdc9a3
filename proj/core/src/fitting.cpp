#include "nlkv/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include <spdlog/spdlog.h>

#include "nlkv/error.hpp"

namespace nlkv {

namespace {

struct Candidate {
    std::vector<double> theta;
    double loss{std::numeric_limits<double>::infinity()};
    std::size_t iterations{0};
    std::size_t evaluations{0};
    bool converged{false};
};

bool better(const Candidate& a, const Candidate& b) {
    if (a.loss != b.loss) return a.loss < b.loss;
    return std::lexicographical_compare(a.theta.begin(), a.theta.end(), b.theta.begin(), b.theta.end());
}

// Maps the unit cube onto the parameter box and scores infeasible points by
// the loss at their projection plus a violation penalty.
class BoxedProblem {
public:
    BoxedProblem(ModelKind model, ParameterBounds bounds, std::function<double(const FdParams&)> loss,
                 double penalty)
        : model_(model), bounds_(std::move(bounds)), loss_(std::move(loss)), penalty_(penalty) {}

    [[nodiscard]] std::size_t dim() const { return bounds_.lower.size(); }

    [[nodiscard]] std::vector<double> to_theta(std::span<const double> u) const {
        std::vector<double> theta(u.size());
        for (std::size_t d = 0; d < u.size(); ++d) {
            theta[d] = bounds_.lower[d] + u[d] * (bounds_.upper[d] - bounds_.lower[d]);
        }
        return theta;
    }

    [[nodiscard]] std::vector<double> to_unit(std::span<const double> theta) const {
        std::vector<double> u(theta.size());
        for (std::size_t d = 0; d < theta.size(); ++d) {
            u[d] = (theta[d] - bounds_.lower[d]) / (bounds_.upper[d] - bounds_.lower[d]);
        }
        return u;
    }

    /// Clamp into the box and restore k_crit < k_jam; returns the total
    /// violation magnitude in parameter units.
    double project(std::vector<double>& theta) const {
        double violation = 0.0;
        for (std::size_t d = 0; d < theta.size(); ++d) {
            if (theta[d] < bounds_.lower[d]) {
                violation += bounds_.lower[d] - theta[d];
                theta[d] = bounds_.lower[d];
            } else if (theta[d] > bounds_.upper[d]) {
                violation += theta[d] - bounds_.upper[d];
                theta[d] = bounds_.upper[d];
            }
        }
        if (model_ == ModelKind::smulders) {
            const double ceiling = theta[2] * (1.0 - 1e-9);
            if (theta[1] > ceiling) {
                violation += theta[1] - ceiling;
                theta[1] = ceiling;
            }
        }
        return violation;
    }

    [[nodiscard]] bool admissible(std::span<const double> u) const {
        auto theta = to_theta(u);
        return project(theta) == 0.0;
    }

    double operator()(std::span<const double> u) const {
        auto theta = to_theta(u);
        const double violation = project(theta);
        return loss_(from_vector(model_, theta)) + penalty_ * violation;
    }

    [[nodiscard]] double loss_at(std::span<const double> theta) const { return loss_(from_vector(model_, theta)); }

private:
    ModelKind model_;
    ParameterBounds bounds_;
    std::function<double(const FdParams&)> loss_;
    double penalty_;
};

void check_bounds(ModelKind model, const ParameterBounds& bounds) {
    const auto n = parameter_names(model).size();
    if (bounds.lower.size() != n || bounds.upper.size() != n) {
        throw ConfigError("parameter bounds do not match model '" + std::string(model_name(model)) + "'");
    }
    for (std::size_t d = 0; d < n; ++d) {
        if (!(bounds.lower[d] > 0.0) || !(bounds.upper[d] > bounds.lower[d])) {
            throw ConfigError("parameter bounds must satisfy 0 < lower < upper");
        }
    }
}

void check_config(const FitConfig& config) {
    if (config.starts < 1) throw ConfigError("multi-start count must be at least 1");
    if (!(config.simplex.f_tolerance > 0.0) || !(config.simplex.x_tolerance > 0.0)) {
        throw ConfigError("optimizer tolerances must be positive");
    }
    if (!(config.initial_step > 0.0)) throw ConfigError("initial simplex step must be positive");
    if (!(config.scale > 0.0)) throw ConfigError("logistic scale must be positive");
}

FitResult run_multistart(ModelKind model, ParameterBounds bounds, std::function<double(const FdParams&)> loss,
                         const FitConfig& config) {
    check_bounds(model, bounds);
    const BoxedProblem problem(model, bounds, std::move(loss), config.penalty);
    const std::size_t n = problem.dim();
    const std::vector<double> step(n, config.initial_step);

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Candidate best;
    std::size_t converged_starts = 0;
    for (std::size_t s = 0; s < config.starts; ++s) {
        std::vector<double> u(n);
        do {
            for (auto& c : u) c = unit(rng);
        } while (!problem.admissible(u));

        Candidate cand;
        auto run = nelder_mead(std::cref(problem), u, step, config.simplex);
        cand.iterations += run.iterations;
        cand.evaluations += run.evaluations;
        for (std::size_t round = 0; round < config.polish_rounds; ++round) {
            auto again = nelder_mead(std::cref(problem), run.x, step, config.simplex);
            cand.iterations += again.iterations;
            cand.evaluations += again.evaluations;
            const double gain = run.value - again.value;
            const bool stalled = gain <= config.simplex.f_tolerance * (std::abs(run.value) + config.simplex.f_tolerance);
            if (again.value <= run.value) run = std::move(again);
            if (stalled) break;
        }
        cand.converged = run.converged;
        cand.theta = problem.to_theta(run.x);
        problem.project(cand.theta);
        cand.loss = problem.loss_at(cand.theta);
        converged_starts += cand.converged ? 1 : 0;
        spdlog::debug("start {}: loss {} after {} iterations", s, cand.loss, cand.iterations);
        if (s == 0 || better(cand, best)) best = std::move(cand);
    }

    FitResult result;
    result.params = from_vector(model, best.theta);
    result.loss_value = best.loss;
    result.iterations = best.iterations;
    result.evaluations = best.evaluations;
    result.converged = best.converged;
    result.starts_converged = converged_starts;
    result.bounds = std::move(bounds);
    result.seed = config.seed;
    result.loss = config.loss;
    if (!result.converged) spdlog::warn("best start of {} fit did not converge", model_name(model));
    return result;
}

}  // namespace

ParameterBounds default_bounds(ModelKind kind, double k_max_observed) {
    const double k_jam_lo = std::max(1.01 * k_max_observed, 1.0);
    const double k_jam_hi = std::max(1000.0, 2.0 * k_jam_lo);
    switch (kind) {
        case ModelKind::greenberg: return {{1.0, k_jam_lo}, {200.0, k_jam_hi}};
        case ModelKind::smulders: return {{1.0, 1.0, k_jam_lo}, {200.0, k_jam_hi, k_jam_hi}};
        case ModelKind::franklin_newell: return {{1.0, 1.0, k_jam_lo}, {200.0, 10000.0, k_jam_hi}};
    }
    throw ConfigError("unknown model kind");
}

double max_density_veh_per_km(std::span<const NlkvSample> samples) noexcept {
    double k = 0.0;
    for (const auto& s : samples) k = std::max(k, s.k_a);
    return to_veh_per_km(k);
}

double max_density_veh_per_km(std::span<const LkvSample> samples) noexcept {
    double k = 0.0;
    for (const auto& s : samples) k = std::max(k, s.k);
    return to_veh_per_km(k);
}

FitResult fit_fd(ModelKind model, std::span<const NlkvSample> samples, const FitConfig& config) {
    check_config(config);
    if (config.loss == LossKind::lse) throw ConfigError("LSE fitting needs LKV samples");
    if (samples.empty()) throw DataError("no NLKV samples to fit");

    auto bounds = config.bounds.value_or(default_bounds(model, max_density_veh_per_km(samples)));
    std::optional<double> omega;
    std::function<double(const FdParams&)> loss;
    if (config.loss == LossKind::ece) {
        omega = compute_omega(samples);
        loss = [samples, w = *omega, scale = config.scale](const FdParams& p) { return ece_loss(p, samples, w, scale); };
    } else {
        loss = [samples, scale = config.scale](const FdParams& p) { return nll_loss(p, samples, scale); };
    }
    auto result = run_multistart(model, std::move(bounds), std::move(loss), config);
    result.omega = omega;
    result.sample_count = samples.size();
    return result;
}

FitResult fit_fd(ModelKind model, std::span<const LkvSample> samples, const FitConfig& config) {
    check_config(config);
    if (config.loss != LossKind::lse) throw ConfigError("ECE/NLL fitting needs NLKV samples");
    if (samples.empty()) throw DataError("no LKV samples to fit");

    auto bounds = config.bounds.value_or(default_bounds(model, max_density_veh_per_km(samples)));
    auto result = run_multistart(model, std::move(bounds), [samples](const FdParams& p) { return lse_loss(p, samples); },
                                 config);
    result.sample_count = samples.size();
    return result;
}

}  // namespace nlkv
