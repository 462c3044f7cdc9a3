#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace nlkv {

struct NelderMeadOptions {
    double reflection{1.0};
    double expansion{2.0};
    double contraction{0.5};
    double shrink{0.5};
    std::size_t max_iterations{2000};
    /// Converged when the spread of simplex values is below
    /// f_tolerance * (|f_best| + f_tolerance) and every vertex is within
    /// x_tolerance of the best one (max-norm).
    double f_tolerance{1e-10};
    double x_tolerance{1e-8};
};

struct NelderMeadResult {
    std::vector<double> x;
    double value{0.0};
    std::size_t iterations{0};
    std::size_t evaluations{0};
    bool converged{false};
};

using Objective = std::function<double(std::span<const double>)>;

/// Unconstrained downhill simplex. The initial simplex is `start` plus one
/// vertex per axis offset by `step[d]`.
[[nodiscard]] NelderMeadResult nelder_mead(const Objective& objective, std::vector<double> start,
                                           std::span<const double> step, const NelderMeadOptions& options = {});

}  // namespace nlkv
