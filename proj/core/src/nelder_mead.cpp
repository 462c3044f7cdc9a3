#include "nlkv/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nlkv/error.hpp"

namespace nlkv {

namespace {

struct Vertex {
    std::vector<double> x;
    double f{0.0};
};

// NaN compares false everywhere; map it to +inf so ordering stays strict.
double sanitize(double f) { return std::isnan(f) ? std::numeric_limits<double>::infinity() : f; }

}  // namespace

NelderMeadResult nelder_mead(const Objective& objective, std::vector<double> start, std::span<const double> step,
                             const NelderMeadOptions& options) {
    const std::size_t n = start.size();
    if (n == 0 || step.size() != n) throw ConfigError("nelder_mead: start and step must have equal non-zero size");

    NelderMeadResult result;
    auto eval = [&](const std::vector<double>& x) {
        ++result.evaluations;
        return sanitize(objective(x));
    };

    std::vector<Vertex> simplex;
    simplex.reserve(n + 1);
    simplex.push_back({start, eval(start)});
    for (std::size_t d = 0; d < n; ++d) {
        auto x = start;
        x[d] += step[d];
        simplex.push_back({x, eval(x)});
    }

    std::vector<double> centroid(n);
    auto along = [&](const std::vector<double>& from, double t) {
        // centroid + t * (centroid - from)
        std::vector<double> x(n);
        for (std::size_t d = 0; d < n; ++d) x[d] = centroid[d] + t * (centroid[d] - from[d]);
        return x;
    };

    // Stable ordering keeps the run deterministic when values tie.
    auto order = [&] {
        std::stable_sort(simplex.begin(), simplex.end(), [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    };

    order();
    while (result.iterations < options.max_iterations) {
        const double f_best = simplex.front().f;
        const double f_worst = simplex.back().f;
        double x_spread = 0.0;
        for (std::size_t v = 1; v <= n; ++v) {
            for (std::size_t d = 0; d < n; ++d) {
                x_spread = std::max(x_spread, std::abs(simplex[v].x[d] - simplex[0].x[d]));
            }
        }
        if (std::isfinite(f_best) &&
            f_worst - f_best <= options.f_tolerance * (std::abs(f_best) + options.f_tolerance) &&
            x_spread <= options.x_tolerance) {
            result.converged = true;
            break;
        }
        ++result.iterations;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t v = 0; v < n; ++v) {
            for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[v].x[d];
        }
        for (auto& c : centroid) c /= static_cast<double>(n);

        auto& worst = simplex.back();
        const auto reflected = along(worst.x, options.reflection);
        const double f_reflected = eval(reflected);

        if (f_reflected < simplex.front().f) {
            const auto expanded = along(worst.x, options.reflection * options.expansion);
            const double f_expanded = eval(expanded);
            if (f_expanded < f_reflected) {
                worst = {expanded, f_expanded};
            } else {
                worst = {reflected, f_reflected};
            }
        } else if (f_reflected < simplex[n - 1].f) {
            worst = {reflected, f_reflected};
        } else {
            const bool outside = f_reflected < worst.f;
            const auto contracted = outside ? along(worst.x, options.reflection * options.contraction)
                                            : along(worst.x, -options.contraction);
            const double f_contracted = eval(contracted);
            if (f_contracted < std::min(f_reflected, worst.f)) {
                worst = {contracted, f_contracted};
            } else {
                const auto best = simplex.front().x;
                for (std::size_t v = 1; v <= n; ++v) {
                    for (std::size_t d = 0; d < n; ++d) {
                        simplex[v].x[d] = best[d] + options.shrink * (simplex[v].x[d] - best[d]);
                    }
                    simplex[v].f = eval(simplex[v].x);
                }
            }
        }
        order();
    }

    result.x = simplex.front().x;
    result.value = simplex.front().f;
    return result;
}

}  // namespace nlkv
