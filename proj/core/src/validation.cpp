#include "nlkv/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "nlkv/error.hpp"

namespace nlkv {

namespace {

// Common speed of every vehicle: constant within a block, linear across a
// ramp centred on each block boundary. Displacement is integrated exactly.
class SpeedProfile {
public:
    SpeedProfile(const std::vector<double>& block_speeds, double block, double ramp) {
        const std::size_t nb = block_speeds.size();
        add(0.0, block_speeds[0]);
        for (std::size_t b = 1; b < nb; ++b) {
            const double tau = block * static_cast<double>(b);
            add(tau - 0.5 * ramp, block_speeds[b - 1]);
            add(tau + 0.5 * ramp, block_speeds[b]);
        }
        add(block * static_cast<double>(nb), block_speeds[nb - 1]);
        d_.assign(t_.size(), 0.0);
        for (std::size_t k = 1; k < t_.size(); ++k) d_[k] = d_[k - 1] + 0.5 * (v_[k - 1] + v_[k]) * (t_[k] - t_[k - 1]);
    }

    [[nodiscard]] double end() const { return t_.back(); }
    [[nodiscard]] const std::vector<double>& knots() const { return t_; }

    [[nodiscard]] double displacement(double t) const {
        const std::size_t k = segment(t);
        const double dt = t - t_[k];
        const double span = t_[k + 1] - t_[k];
        const double vt = span > 0.0 ? v_[k] + (v_[k + 1] - v_[k]) * dt / span : v_[k];
        return d_[k] + 0.5 * (v_[k] + vt) * dt;
    }

    /// Time at which the displacement reaches `d`; speeds are positive so
    /// displacement is strictly increasing.
    [[nodiscard]] double time_at(double d) const {
        double lo = 0.0;
        double hi = end();
        for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            (displacement(mid) < d ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

private:
    void add(double t, double v) {
        t_.push_back(t);
        v_.push_back(v);
    }

    [[nodiscard]] std::size_t segment(double t) const {
        auto it = std::upper_bound(t_.begin(), t_.end(), t);
        std::size_t k = it == t_.begin() ? 0 : static_cast<std::size_t>(it - t_.begin()) - 1;
        return std::min(k, t_.size() - 2);
    }

    std::vector<double> t_, v_, d_;
};

double jam_density(const FdParams& p) {
    return std::visit([](const auto& m) { return m.k_jam; }, p);
}

void check_scenario(const SyntheticScenario& s) {
    if (s.densities.empty()) throw ConfigError("synthetic scenario needs at least one density block");
    if (!(s.block_duration_s > 0.0) || !(s.road_length_m > 0.0)) {
        throw ConfigError("synthetic block duration and road length must be positive");
    }
    if (!(s.ramp_duration_s >= 0.0) || s.ramp_duration_s > s.block_duration_s) {
        throw ConfigError("ramp duration must lie in [0, block duration]");
    }
    if (!(s.sample_interval_s > 0.0)) throw ConfigError("sample interval must be positive");
    if (!(s.noise_scale > 0.0)) throw ConfigError("noise scale must be positive");
    const double kj = jam_density(s.truth);
    for (double k : s.densities) {
        if (!(k >= 0.0)) throw ConfigError("synthetic densities must be non-negative");
        if (!(k < kj)) {
            throw ConfigError("synthetic density " + std::to_string(k) + " veh/km not below k_jam " + std::to_string(kj));
        }
    }
}

std::vector<double> block_speeds_mps(const SyntheticScenario& s) {
    const std::size_t nb = s.densities.size();
    std::vector<std::optional<double>> v(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        if (s.densities[b] > 0.0) v[b] = to_mps(equilibrium_speed(s.truth, s.densities[b]));
    }
    if (std::none_of(v.begin(), v.end(), [](const auto& x) { return x.has_value(); })) {
        throw ConfigError("synthetic scenario has no vehicles");
    }
    // empty blocks hold the previous block's speed, or the next one's at the start
    for (std::size_t b = 0; b < nb; ++b) {
        if (!v[b] && b > 0) v[b] = v[b - 1];
    }
    for (std::size_t b = nb; b-- > 0;) {
        if (!v[b]) v[b] = v[b + 1];
    }
    std::vector<double> out(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        if (!(*v[b] > 0.0)) throw ConfigError("synthetic block speed must be positive");
        out[b] = *v[b];
    }
    return out;
}

std::string vehicle_name(std::size_t block, long long n, long long n_lo) {
    // zero padded so that lexicographic order follows block then lattice index
    auto pad = [](std::size_t value, std::size_t width) {
        auto s = std::to_string(value);
        return std::string(s.size() < width ? width - s.size() : 0, '0') + s;
    };
    return "b" + pad(block, 4) + "_" + pad(static_cast<std::size_t>(n - n_lo), 6);
}

}  // namespace

std::vector<double> default_density_profile(const FdParams& truth) {
    static constexpr double kFractions[] = {0.08, 0.30, 0.13, 0.45, 0.20, 0.60, 0.25, 0.75, 0.35,
                                            0.15, 0.50, 0.23, 0.65, 0.10, 0.40, 0.28, 0.55, 0.18};
    const double kj = jam_density(truth);
    std::vector<double> out;
    for (double f : kFractions) out.push_back(f * kj);
    return out;
}

TrajectorySet synthesize_stationary_trajectories(const SyntheticScenario& scenario) {
    check_scenario(scenario);
    const auto speeds = block_speeds_mps(scenario);
    const SpeedProfile profile(speeds, scenario.block_duration_s, scenario.ramp_duration_s);
    const double L = scenario.road_length_m;

    // knots plus a regular sampling of each ramp, where positions are quadratic
    std::vector<double> sample_times = profile.knots();
    for (std::size_t b = 1; b < speeds.size(); ++b) {
        const double tau = scenario.block_duration_s * static_cast<double>(b);
        const double r0 = tau - 0.5 * scenario.ramp_duration_s;
        for (double t = r0 + scenario.sample_interval_s; t < tau + 0.5 * scenario.ramp_duration_s;
             t += scenario.sample_interval_s) {
            sample_times.push_back(t);
        }
    }
    std::sort(sample_times.begin(), sample_times.end());
    sample_times.erase(std::unique(sample_times.begin(), sample_times.end()), sample_times.end());

    std::mt19937_64 rng(scenario.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<VehicleTrajectory> vehicles;
    for (std::size_t b = 0; b < scenario.densities.size(); ++b) {
        const double k = scenario.densities[b];
        if (k <= 0.0) continue;
        const double spacing = 1000.0 / k;
        const double phase = unit(rng) * spacing;
        const double start = scenario.block_duration_s * static_cast<double>(b);
        const double stop = start + scenario.block_duration_s;
        const double d_start = profile.displacement(start);
        const double travel = profile.displacement(stop) - d_start;

        const auto n_lo = static_cast<long long>(std::ceil((-travel - phase) / spacing));
        const auto n_hi = static_cast<long long>(std::floor((L - phase) / spacing));
        for (long long n = n_lo; n <= n_hi; ++n) {
            const double x_start = phase + static_cast<double>(n) * spacing;
            const double t_in = x_start >= 0.0 ? start : profile.time_at(d_start - x_start);
            const double t_out = x_start + travel <= L ? stop : profile.time_at(d_start + L - x_start);
            if (!(t_out - t_in > 1e-6)) continue;

            VehicleTrajectory veh;
            veh.vehicle_id = vehicle_name(b, n, n_lo);
            auto position = [&](double t) {
                return std::clamp(profile.displacement(t) - d_start + x_start, 0.0, L);
            };
            veh.points.push_back({t_in, position(t_in)});
            auto it = std::upper_bound(sample_times.begin(), sample_times.end(), t_in);
            for (; it != sample_times.end() && *it < t_out; ++it) veh.points.push_back({*it, position(*it)});
            if (t_out - veh.points.back().t > 1e-9) {
                veh.points.push_back({t_out, position(t_out)});
            }
            if (veh.points.size() >= 2) vehicles.push_back(std::move(veh));
        }
    }
    spdlog::debug("synthesized {} vehicles over {} s", vehicles.size(), profile.end());
    return TrajectorySet(std::move(vehicles));
}

void apply_label_noise(FieldBundle& bundle, const FdParams& truth, double scale, std::uint64_t seed) {
    if (!(scale > 0.0)) throw ConfigError("noise scale must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto& V = bundle.vk.speed;
    for (std::size_t i = 0; i < V.rows(); ++i) {
        for (std::size_t j = 0; j < V.cols(); ++j) {
            const auto& v = V.at(i, j);
            const auto& ka = bundle.anticipated_density.at(i, j);
            if (!v || !ka || !bundle.acceleration.at(i, j)) {
                bundle.signs.clear(i, j);
                continue;
            }
            const double k = to_veh_per_km(*ka);
            const double p = k > 0.0 ? logistic((to_kmh(*v) - equilibrium_speed_unchecked(truth, k)) / scale) : 1.0;
            bundle.signs.set(i, j, unit(rng) < p ? 1 : 0);
        }
    }
}

std::vector<double> equal_width_edges(double lo, double hi, std::size_t count) {
    if (count == 0) throw ConfigError("bin count must be positive");
    if (!(hi > lo)) hi = lo + 1.0;
    std::vector<double> edges(count + 1);
    for (std::size_t b = 0; b <= count; ++b) {
        edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(count);
    }
    edges.back() = hi;
    return edges;
}

std::optional<double> DecelProbSurface::probability(std::size_t a, std::size_t b) const {
    const auto idx = a * v_bins() + b;
    if (n[idx] == 0) return std::nullopt;
    return static_cast<double>(n_decel[idx]) / static_cast<double>(n[idx]);
}

std::size_t DecelProbSurface::total() const { return std::accumulate(n.begin(), n.end(), std::size_t{0}); }

namespace {

std::optional<std::size_t> bin_of(const std::vector<double>& edges, double value) {
    if (value < edges.front() || value > edges.back()) return std::nullopt;
    auto it = std::upper_bound(edges.begin(), edges.end(), value);
    const auto idx = static_cast<std::size_t>(it - edges.begin());
    return std::min(idx == 0 ? 0 : idx - 1, edges.size() - 2);
}

}  // namespace

DecelProbSurface empirical_decel_probabilities(std::span<const NlkvSample> samples, std::vector<double> k_edges,
                                               std::vector<double> v_edges) {
    if (k_edges.size() < 2 || v_edges.size() < 2) throw ConfigError("need at least one bin per axis");
    DecelProbSurface s;
    s.k_edges = std::move(k_edges);
    s.v_edges = std::move(v_edges);
    s.n.assign(s.k_bins() * s.v_bins(), 0);
    s.n_decel.assign(s.n.size(), 0);
    for (const auto& x : samples) {
        const auto a = bin_of(s.k_edges, to_veh_per_km(x.k_a));
        const auto b = bin_of(s.v_edges, to_kmh(x.v));
        if (!a || !b) continue;
        const auto idx = *a * s.v_bins() + *b;
        ++s.n[idx];
        s.n_decel[idx] += x.y == 1 ? 1 : 0;
    }
    return s;
}

DecelProbSurface empirical_decel_probabilities(std::span<const NlkvSample> samples) {
    double k_lo = std::numeric_limits<double>::infinity(), k_hi = -k_lo;
    double v_lo = k_lo, v_hi = -k_lo;
    for (const auto& x : samples) {
        k_lo = std::min(k_lo, to_veh_per_km(x.k_a));
        k_hi = std::max(k_hi, to_veh_per_km(x.k_a));
        v_lo = std::min(v_lo, to_kmh(x.v));
        v_hi = std::max(v_hi, to_kmh(x.v));
    }
    if (samples.empty()) k_lo = k_hi = v_lo = v_hi = 0.0;
    return empirical_decel_probabilities(samples, equal_width_edges(k_lo, k_hi, 20), equal_width_edges(v_lo, v_hi, 20));
}

std::optional<double> half_probability_speed(std::span<const std::pair<double, double>> curve) {
    for (std::size_t q = 0; q < curve.size(); ++q) {
        if (curve[q].second == 0.5) return curve[q].first;
        if (q + 1 == curve.size()) break;
        const auto [v1, p1] = curve[q];
        const auto [v2, p2] = curve[q + 1];
        if ((p1 - 0.5) * (p2 - 0.5) < 0.0) return v1 + (0.5 - p1) * (v2 - v1) / (p2 - p1);
    }
    return std::nullopt;
}

CenteredCurves center_speed_probabilities(const DecelProbSurface& surface) {
    CenteredCurves out;
    for (std::size_t a = 0; a < surface.k_bins(); ++a) {
        std::vector<std::pair<double, double>> curve;
        for (std::size_t b = 0; b < surface.v_bins(); ++b) {
            if (auto p = surface.probability(a, b)) {
                curve.emplace_back(0.5 * (surface.v_edges[b] + surface.v_edges[b + 1]), *p);
            }
        }
        const auto v_star = half_probability_speed(curve);
        if (!v_star) {
            out.omitted_bins.push_back(a);
            continue;
        }
        CenteredCurve c{a, surface.k_edges[a], surface.k_edges[a + 1], *v_star, {}};
        for (const auto& [v, p] : curve) c.points.emplace_back(v - *v_star, p);
        out.curves.push_back(std::move(c));
    }
    return out;
}

std::vector<CalibrationBin> logistic_calibration(std::span<const NlkvSample> samples, const FdParams& truth,
                                                 double scale, std::size_t bins) {
    if (bins == 0) throw ConfigError("bin count must be positive");
    if (!(scale > 0.0)) throw ConfigError("logistic scale must be positive");
    std::vector<std::pair<double, std::uint8_t>> zy;
    zy.reserve(samples.size());
    for (const auto& s : samples) {
        const double k = to_veh_per_km(s.k_a);
        if (!(k > 0.0)) continue;
        zy.emplace_back((to_kmh(s.v) - equilibrium_speed_unchecked(truth, k)) / scale, s.y);
    }
    if (zy.size() < bins) throw DataError("fewer samples than calibration bins");
    std::stable_sort(zy.begin(), zy.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<CalibrationBin> out;
    for (std::size_t q = 0; q < bins; ++q) {
        const std::size_t lo = zy.size() * q / bins;
        const std::size_t hi = zy.size() * (q + 1) / bins;
        CalibrationBin bin{zy[lo].first, zy[hi - 1].first, hi - lo, 0.0, 0.0};
        for (std::size_t r = lo; r < hi; ++r) {
            bin.empirical += zy[r].second;
            bin.predicted += logistic(zy[r].first);
        }
        bin.empirical /= static_cast<double>(bin.n);
        bin.predicted /= static_cast<double>(bin.n);
        out.push_back(bin);
    }
    return out;
}

SampleTables build_samples(const TrajectorySet& set, const GridSpec& spec, const SampleBuildOptions& options) {
    spec.validate();
    SampleTables out;
    const auto segments = segment_contiguous(set, options.segment_gap_s);
    const AssemblyOptions quiet{0};
    for (std::size_t s = 0; s < segments.size(); ++s) {
        const auto& seg = segments[s];
        if (seg.time_extent() < spec.dt || seg.space_extent() < spec.dx) {
            spdlog::warn("segment {} ({:.1f} s x {:.1f} m) is smaller than one subdomain; skipped", s,
                         seg.time_extent(), seg.space_extent());
            continue;
        }
        auto bundle = estimate_field_bundle(seg, spec, options.zero_tol);
        if (options.noise_truth) apply_label_noise(bundle, *options.noise_truth, options.noise_scale, options.noise_seed + s);
        auto nlkv = assemble_nlkv(bundle.anticipated_density, bundle.vk.speed, bundle.signs, &bundle.acceleration, quiet);
        auto lkv = assemble_lkv(bundle.vk.density, bundle.vk.speed, quiet);
        out.nlkv.insert(out.nlkv.end(), nlkv.begin(), nlkv.end());
        out.lkv.insert(out.lkv.end(), lkv.begin(), lkv.end());
    }
    if (out.nlkv.size() < 100) spdlog::warn("only {} NLKV samples (minimum 100)", out.nlkv.size());
    return out;
}

namespace {

std::vector<ParamDelta> compare(const FdParams& reference, const FdParams& value, const std::vector<double>& tol,
                                double tol_factor) {
    const auto names = parameter_names(kind_of(reference));
    const auto r = to_vector(reference);
    const auto v = to_vector(value);
    std::vector<ParamDelta> out;
    for (std::size_t d = 0; d < r.size(); ++d) {
        ParamDelta p;
        p.name = std::string(names[d]);
        p.reference = r[d];
        p.value = v[d];
        p.relative_error = std::abs(v[d] - r[d]) / std::abs(r[d]);
        p.tolerance = tol[d] * tol_factor;
        p.pass = p.relative_error <= p.tolerance;
        out.push_back(std::move(p));
    }
    return out;
}

RecoveryRun run_once(const SyntheticScenario& scenario, const GridSpec& spec, const FitConfig& config,
                     const RecoveryOptions& options) {
    const auto started = std::chrono::steady_clock::now();
    RecoveryRun run;
    run.seed = scenario.seed;
    const auto set = synthesize_stationary_trajectories(scenario);
    SampleBuildOptions build;
    build.zero_tol = options.zero_tol;
    build.segment_gap_s = std::max(60.0, scenario.block_duration_s);
    if (scenario.label_noise) {
        build.noise_truth = scenario.truth;
        build.noise_scale = scenario.noise_scale;
        build.noise_seed = scenario.seed;
    }
    const auto tables = build_samples(set, spec, build);
    run.nlkv_count = tables.nlkv.size();
    run.lkv_count = tables.lkv.size();
    const auto model = kind_of(scenario.truth);

    FitConfig ece = config;
    if (ece.loss == LossKind::lse) ece.loss = LossKind::ece;
    run.nlkv_fit = fit_fd(model, std::span<const NlkvSample>(tables.nlkv), ece);
    if (options.fit_lkv_baseline) {
        FitConfig lse = config;
        lse.loss = LossKind::lse;
        run.lkv_fit = fit_fd(model, std::span<const LkvSample>(tables.lkv), lse);
    }
    run.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return run;
}

}  // namespace

RecoveryReport recovery_check(const FdParams& truth, const GridSpec& spec, const FitConfig& config,
                              const RecoveryOptions& options) {
    RecoveryReport report;
    report.truth = truth;
    const auto n = parameter_names(kind_of(truth)).size();
    std::vector<double> tol = options.tolerances;
    if (tol.empty()) {
        tol.assign(n, 0.05);
        tol.back() = 0.10;
    }
    try {
        if (tol.size() != n) throw ConfigError("one tolerance per model parameter expected");
        SyntheticScenario scenario = options.scenario;
        scenario.truth = truth;
        if (scenario.densities.empty()) scenario.densities = default_density_profile(truth);
        if (scenario.block_duration_s < spec.dt) {
            throw ConfigError("block duration must be at least the subdomain duration dt");
        }

        report.primary = run_once(scenario, spec, config, options);
        scenario.seed = options.second_seed;
        report.secondary = run_once(scenario, spec, config, options);

        const auto& a = report.primary.nlkv_fit->params;
        const auto& b = report.secondary.nlkv_fit->params;
        report.recovery = compare(truth, a, tol, 1.0);
        // invariance: difference between the two fits relative to the truth
        for (std::size_t d = 0; d < n; ++d) {
            ParamDelta p;
            p.name = std::string(parameter_names(kind_of(truth))[d]);
            p.reference = to_vector(a)[d];
            p.value = to_vector(b)[d];
            p.relative_error = std::abs(p.value - p.reference) / std::abs(to_vector(truth)[d]);
            p.tolerance = 2.0 * tol[d];
            p.pass = p.relative_error <= p.tolerance;
            report.invariance.push_back(std::move(p));
        }
        if (report.primary.lkv_fit && report.secondary.lkv_fit) {
            report.lkv_spread = compare(report.primary.lkv_fit->params, report.secondary.lkv_fit->params, tol, 2.0);
        }
        auto all = [](const std::vector<ParamDelta>& v) {
            return std::all_of(v.begin(), v.end(), [](const ParamDelta& p) { return p.pass; });
        };
        report.recovery_pass = all(report.recovery);
        report.invariance_pass = all(report.invariance);
    } catch (const std::exception& e) {
        report.error = e.what();
        report.recovery_pass = false;
        report.invariance_pass = false;
    }
    return report;
}

}  // namespace nlkv
