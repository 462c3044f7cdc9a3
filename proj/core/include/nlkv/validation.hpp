#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nlkv/anticipation.hpp"
#include "nlkv/fields.hpp"
#include "nlkv/fitting.hpp"
#include "nlkv/ingest.hpp"
#include "nlkv/models.hpp"

namespace nlkv {

/// Piecewise-stationary traffic built from a known fundamental diagram.
/// Densities in veh/km, one per time block.
struct SyntheticScenario {
    FdParams truth{Smulders{86.8, 65.0, 199.9}};
    std::vector<double> densities;
    double block_duration_s{150.0};
    double road_length_m{1000.0};
    double ramp_duration_s{30.0};
    /// Spacing of polyline points while speeds ramp.
    double sample_interval_s{1.0};
    /// Draw acceleration labels from the logistic deceleration model.
    bool label_noise{false};
    double noise_scale{1.0};
    std::uint64_t seed{1};

    [[nodiscard]] double duration_s() const noexcept {
        return block_duration_s * static_cast<double>(densities.size());
    }
};

/// 18 blocks (45 min at the default block length) mixing free-flow and
/// congested states, as fractions of the truth's jam density.
[[nodiscard]] std::vector<double> default_density_profile(const FdParams& truth);

/// Equally spaced platoon per block (spacing 1000/k m) at the equilibrium
/// speed f(k); the common speed ramps linearly between blocks and the
/// platoon is swapped at the middle of each ramp. Throws ConfigError when a
/// density is negative or not below the truth's k_jam.
[[nodiscard]] TrajectorySet synthesize_stationary_trajectories(const SyntheticScenario& scenario);

/// Replace the labels of every cell with defined A, Ka and V by a Bernoulli
/// draw at logistic((V - f(Ka)) / scale), in row-major order.
void apply_label_noise(FieldBundle& bundle, const FdParams& truth, double scale, std::uint64_t seed);

/// Equal-width bin edges over [lo, hi]; `count` bins.
[[nodiscard]] std::vector<double> equal_width_edges(double lo, double hi, std::size_t count);

/// Empirical deceleration probabilities on a density x speed grid
/// (veh/km, km/h). Cells with n = 0 are empty.
struct DecelProbSurface {
    std::vector<double> k_edges;
    std::vector<double> v_edges;
    std::vector<std::size_t> n;        ///< row-major [k_bin][v_bin]
    std::vector<std::size_t> n_decel;

    [[nodiscard]] std::size_t k_bins() const { return k_edges.size() - 1; }
    [[nodiscard]] std::size_t v_bins() const { return v_edges.size() - 1; }
    [[nodiscard]] std::size_t count(std::size_t a, std::size_t b) const { return n[a * v_bins() + b]; }
    [[nodiscard]] std::optional<double> probability(std::size_t a, std::size_t b) const;
    [[nodiscard]] std::size_t total() const;
};

/// Samples outside the edges are not counted; the last bin is closed.
[[nodiscard]] DecelProbSurface empirical_decel_probabilities(std::span<const NlkvSample> samples,
                                                             std::vector<double> k_edges,
                                                             std::vector<double> v_edges);
/// Same with 20 x 20 equal-width bins over the observed range.
[[nodiscard]] DecelProbSurface empirical_decel_probabilities(std::span<const NlkvSample> samples);

/// Speed where a (speed, p) curve first crosses p = 0.5, by linear
/// interpolation between neighbours.
[[nodiscard]] std::optional<double> half_probability_speed(std::span<const std::pair<double, double>> curve);

struct CenteredCurve {
    std::size_t k_bin{0};
    double k_lo{0.0};
    double k_hi{0.0};
    double v_star{0.0};
    std::vector<std::pair<double, double>> points;  ///< (v - v*, p)
};

struct CenteredCurves {
    std::vector<CenteredCurve> curves;
    std::vector<std::size_t> omitted_bins;
};

/// Re-index each density bin's p(v) curve by v - v*, where v* is its
/// p = 0.5 crossing (speed-bin centres). Bins without a crossing are omitted.
[[nodiscard]] CenteredCurves center_speed_probabilities(const DecelProbSurface& surface);

struct CalibrationBin {
    double z_lo{0.0};
    double z_hi{0.0};
    std::size_t n{0};
    double empirical{0.0};  ///< share of y = 1
    double predicted{0.0};  ///< mean logistic(z)
};

/// Equal-count quantile bins of z = (v - f(k_a)) / scale [km/h].
[[nodiscard]] std::vector<CalibrationBin> logistic_calibration(std::span<const NlkvSample> samples,
                                                               const FdParams& truth, double scale = 1.0,
                                                               std::size_t bins = 10);

/// Build NLKV and LKV samples from every segment; labels are redrawn when
/// `noise_truth` is given.
struct SampleTables {
    std::vector<NlkvSample> nlkv;
    std::vector<LkvSample> lkv;
};

struct SampleBuildOptions {
    double zero_tol{1e-9};
    /// Largest time gap [s] bridged when splitting into contiguous segments.
    double segment_gap_s{60.0};
    std::optional<FdParams> noise_truth;
    double noise_scale{1.0};
    std::uint64_t noise_seed{1};
};

[[nodiscard]] SampleTables build_samples(const TrajectorySet& set, const GridSpec& spec,
                                         const SampleBuildOptions& options = {});

struct ParamDelta {
    std::string name;
    double reference{0.0};
    double value{0.0};
    double relative_error{0.0};
    double tolerance{0.0};
    bool pass{false};
};

struct RecoveryRun {
    std::uint64_t seed{0};
    std::size_t nlkv_count{0};
    std::size_t lkv_count{0};
    std::optional<FitResult> nlkv_fit;
    std::optional<FitResult> lkv_fit;
    double elapsed_s{0.0};  ///< wall time of synthesis, fields and fits
};

struct RecoveryOptions {
    /// Scenario template; its truth is replaced by the checked parameters
    /// and an empty density list means default_density_profile().
    SyntheticScenario scenario{};
    std::uint64_t second_seed{2};
    double zero_tol{1e-9};
    /// Relative tolerance per parameter, in parameter_names() order.
    /// Empty means 5% for all but k_jam, 10% for k_jam.
    std::vector<double> tolerances;
    bool fit_lkv_baseline{true};
};

struct RecoveryReport {
    FdParams truth;
    RecoveryRun primary;
    RecoveryRun secondary;
    std::vector<ParamDelta> recovery;    ///< primary fit vs truth
    std::vector<ParamDelta> invariance;  ///< primary vs secondary, bound 2x tolerance
    std::vector<ParamDelta> lkv_spread;  ///< informational, never gates passed()
    bool recovery_pass{false};
    bool invariance_pass{false};
    std::optional<std::string> error;

    [[nodiscard]] bool passed() const noexcept { return !error && recovery_pass && invariance_pass; }
};

/// Synthesize -> fields -> NLKV -> fit for two seeds; compares the first fit
/// to the truth and the two fits to each other. Errors are captured in the
/// report rather than thrown.
[[nodiscard]] RecoveryReport recovery_check(const FdParams& truth, const GridSpec& spec, const FitConfig& config,
                                            const RecoveryOptions& options = {});

}  // namespace nlkv
