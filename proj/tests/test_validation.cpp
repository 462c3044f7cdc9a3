#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <nlkv/error.hpp>
#include <nlkv/validation.hpp>

using namespace nlkv;

namespace {

const Smulders kTruth{86.8, 65.0, 199.9};

SyntheticScenario scenario(std::vector<double> densities) {
    SyntheticScenario s;
    s.truth = kTruth;
    s.densities = std::move(densities);
    return s;
}

NlkvSample nl(double k_kmh, double v_kmh, std::uint8_t y) {
    return NlkvSample{to_veh_per_m(k_kmh), to_mps(v_kmh), y, 0, 0, NAN};
}

}  // namespace

TEST(Synthesis, SingleBlockSpeedAndSpacing) {
    const auto set = synthesize_stationary_trajectories(scenario({30.0}));
    ASSERT_FALSE(set.empty());
    const double v = to_mps(equilibrium_speed(kTruth, 30.0));
    EXPECT_NEAR(to_kmh(v), 73.77, 0.01);
    for (const auto& veh : set.trajectories()) {
        const auto& a = veh.points.front();
        const auto& b = veh.points.back();
        EXPECT_NEAR((b.x - a.x) / (b.t - a.t), v, 1e-9);
    }
    // vehicles present at t = 75 s are spaced 1000/30 m apart
    std::vector<double> xs;
    for (const auto& veh : set.trajectories()) {
        if (veh.start_time() <= 75.0 && veh.end_time() >= 75.0) {
            xs.push_back(veh.points.front().x + v * (75.0 - veh.points.front().t));
        }
    }
    std::sort(xs.begin(), xs.end());
    ASSERT_GE(xs.size(), 20u);
    for (std::size_t n = 1; n < xs.size(); ++n) EXPECT_NEAR(xs[n] - xs[n - 1], 1000.0 / 30.0, 1e-6);
}

TEST(Synthesis, RampBetweenBlocks) {
    auto s = scenario({30.0, 120.0});
    const auto set = synthesize_stationary_trajectories(s);
    const double v_hi = to_mps(equilibrium_speed(kTruth, 30.0));
    const double v_lo = to_mps(equilibrium_speed(kTruth, 120.0));
    // a second-block vehicle present across the ramp end
    for (const auto& veh : set.trajectories()) {
        if (veh.start_time() > 150.0 || veh.end_time() < 166.0) continue;
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t n = 1; n < veh.points.size(); ++n) {
            const auto& p = veh.points[n - 1];
            const auto& q = veh.points[n];
            const double speed = (q.x - p.x) / (q.t - p.t);
            EXPECT_LE(speed, prev + 1e-9);
            EXPECT_LE(speed, v_hi + 1e-9);
            EXPECT_GE(speed, v_lo - 1e-9);
            prev = speed;
        }
    }
    for (const auto& veh : set.trajectories()) {
        EXPECT_GE(veh.start_time(), 0.0);
        EXPECT_LE(veh.end_time(), 300.0 + 1e-9);
        for (const auto& p : veh.points) {
            EXPECT_GE(p.x, 0.0);
            EXPECT_LE(p.x, 1000.0);
        }
    }
}

TEST(Synthesis, EmptyBlockEmitsNoVehicles) {
    const auto set = synthesize_stationary_trajectories(scenario({40.0, 0.0, 40.0}));
    for (const auto& veh : set.trajectories()) EXPECT_NE(veh.vehicle_id.substr(0, 5), "b0001");
    EXPECT_FALSE(set.empty());
}

TEST(Synthesis, RejectsBadScenarios) {
    EXPECT_THROW((void)synthesize_stationary_trajectories(scenario({199.9})), ConfigError);
    EXPECT_THROW((void)synthesize_stationary_trajectories(scenario({250.0})), ConfigError);
    EXPECT_THROW((void)synthesize_stationary_trajectories(scenario({-1.0})), ConfigError);
    EXPECT_THROW((void)synthesize_stationary_trajectories(scenario({})), ConfigError);
    auto ramp = scenario({30.0});
    ramp.ramp_duration_s = 200.0;
    EXPECT_THROW((void)synthesize_stationary_trajectories(ramp), ConfigError);
}

TEST(Synthesis, Deterministic) {
    auto s = scenario({30.0, 90.0});
    const auto a = synthesize_stationary_trajectories(s);
    const auto b = synthesize_stationary_trajectories(s);
    EXPECT_EQ(a.trajectories(), b.trajectories());
    s.seed = 7;
    EXPECT_NE(synthesize_stationary_trajectories(s).trajectories(), a.trajectories());
}

TEST(Synthesis, StationaryInteriorMatchesTruth) {
    for (double k_b : {30.0, 100.0}) {
        auto s = scenario({k_b});
        s.block_duration_s = 300.0;
        const auto set = synthesize_stationary_trajectories(s);
        const GridSpec spec{};
        const auto f = estimate_vk_fields(set, spec);
        const double v_true = equilibrium_speed(kTruth, k_b);
        std::size_t checked = 0;
        for (std::size_t i = 0; i < f.speed.rows(); ++i) {
            for (std::size_t j = 0; j < f.speed.cols(); ++j) {
                const auto v = f.speed.at(i, j);
                const auto k = f.density.at(i, j);
                ASSERT_TRUE(v && k);
                EXPECT_NEAR(to_kmh(*v), v_true, 0.5);
                EXPECT_NEAR(to_veh_per_km(*k), k_b, 0.02 * k_b);
                ++checked;
            }
        }
        EXPECT_GT(checked, 1000u);
    }
}

TEST(DefaultProfile, EighteenBlocksBelowJam) {
    const auto d = default_density_profile(kTruth);
    EXPECT_EQ(d.size(), 18u);
    for (double k : d) {
        EXPECT_GT(k, 0.0);
        EXPECT_LT(k, 199.9);
    }
}

TEST(Surface, CountsAndProbabilities) {
    std::vector<NlkvSample> s;
    for (int n = 0; n < 10; ++n) s.push_back(nl(15.0, 15.0, n < 7 ? 1 : 0));
    s.push_back(nl(35.0, 35.0, 0));
    s.push_back(nl(500.0, 15.0, 1));  // outside
    const auto surf = empirical_decel_probabilities(s, equal_width_edges(0, 40, 2), equal_width_edges(0, 40, 2));
    EXPECT_EQ(surf.count(0, 0), 10u);
    EXPECT_NEAR(*surf.probability(0, 0), 0.7, 1e-12);
    EXPECT_FALSE(surf.probability(0, 1).has_value());
    EXPECT_EQ(surf.count(1, 1), 1u);
    EXPECT_EQ(surf.total(), 11u);
    // the upper edge is closed
    const auto edge = empirical_decel_probabilities(std::vector{nl(40.0, 40.0, 1)}, equal_width_edges(0, 40, 2),
                                                    equal_width_edges(0, 40, 2));
    EXPECT_EQ(edge.count(1, 1), 1u);
    EXPECT_THROW((void)equal_width_edges(0, 1, 0), ConfigError);
}

TEST(Surface, DefaultBinsCoverEverySample) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<NlkvSample> s;
    for (int n = 0; n < 5000; ++n) s.push_back(nl(1 + 150 * u(rng), 100 * u(rng), u(rng) < 0.5));
    const auto surf = empirical_decel_probabilities(s);
    EXPECT_EQ(surf.k_bins(), 20u);
    EXPECT_EQ(surf.v_bins(), 20u);
    EXPECT_EQ(surf.total(), s.size());
}

TEST(Centering, HalfProbabilitySpeed) {
    const std::vector<std::pair<double, double>> rising{{50, 0.3}, {60, 0.7}};
    EXPECT_NEAR(*half_probability_speed(rising), 55.0, 1e-12);
    const std::vector<std::pair<double, double>> exact{{40, 0.2}, {50, 0.5}, {60, 0.9}};
    EXPECT_EQ(*half_probability_speed(exact), 50.0);
    const std::vector<std::pair<double, double>> never{{40, 0.6}, {50, 0.9}};
    EXPECT_FALSE(half_probability_speed(never).has_value());
}

TEST(Centering, OmitsBinsWithoutCrossing) {
    std::vector<NlkvSample> s;
    // k bin 0 crosses between v bins 0 and 1; k bin 1 is all decelerating
    for (int n = 0; n < 10; ++n) s.push_back(nl(5.0, 5.0, n < 3 ? 1 : 0));
    for (int n = 0; n < 10; ++n) s.push_back(nl(5.0, 15.0, n < 7 ? 1 : 0));
    for (int n = 0; n < 10; ++n) s.push_back(nl(15.0, 5.0, 1));
    const auto surf = empirical_decel_probabilities(s, equal_width_edges(0, 20, 2), equal_width_edges(0, 20, 2));
    const auto c = center_speed_probabilities(surf);
    ASSERT_EQ(c.curves.size(), 1u);
    EXPECT_EQ(c.curves[0].k_bin, 0u);
    EXPECT_NEAR(c.curves[0].v_star, 10.0, 1e-12);
    EXPECT_NEAR(c.curves[0].points[0].first, -5.0, 1e-12);
    EXPECT_EQ(c.omitted_bins, std::vector<std::size_t>{1});
}

TEST(Calibration, LogisticLabelsAreCalibrated) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<NlkvSample> s;
    for (int n = 0; n < 50000; ++n) {
        const double k = 5 + 150 * u(rng);
        const double v = std::max(0.0, equilibrium_speed(kTruth, k) + 16 * (u(rng) - 0.5));
        s.push_back(nl(k, v, u(rng) < logistic(v - equilibrium_speed(kTruth, k)) ? 1 : 0));
    }
    const auto bins = logistic_calibration(s, kTruth);
    ASSERT_EQ(bins.size(), 10u);
    std::size_t total = 0;
    for (const auto& b : bins) {
        EXPECT_NEAR(b.empirical, b.predicted, 0.05);
        EXPECT_LE(b.z_lo, b.z_hi);
        total += b.n;
    }
    EXPECT_EQ(total, s.size());
    EXPECT_THROW((void)logistic_calibration(std::vector{nl(10, 10, 1)}, kTruth), DataError);
}

TEST(Calibration, NoisyFieldLabelsFollowTheTruth) {
    auto s = scenario({30.0, 90.0, 50.0, 130.0});
    const auto set = synthesize_stationary_trajectories(s);
    SampleBuildOptions opts;
    opts.segment_gap_s = 150.0;
    opts.noise_truth = kTruth;
    const auto tables = build_samples(set, GridSpec{}, opts);
    ASSERT_GT(tables.nlkv.size(), 10000u);
    for (const auto& b : logistic_calibration(tables.nlkv, kTruth)) EXPECT_NEAR(b.empirical, b.predicted, 0.05);
    // same seed, same labels
    const auto again = build_samples(set, GridSpec{}, opts);
    ASSERT_EQ(again.nlkv.size(), tables.nlkv.size());
    for (std::size_t n = 0; n < again.nlkv.size(); ++n) ASSERT_EQ(again.nlkv[n].y, tables.nlkv[n].y);
}

TEST(BuildSamples, NoiselessTablesAreConsistent) {
    const auto set = synthesize_stationary_trajectories(scenario({30.0, 90.0}));
    const auto tables = build_samples(set, GridSpec{});
    EXPECT_GT(tables.lkv.size(), tables.nlkv.size());
    for (const auto& x : tables.nlkv) {
        EXPECT_GT(x.k_a, 0.0);
        EXPECT_GE(x.v, 0.0);
        EXPECT_TRUE(x.y == 0 || x.y == 1);
    }
}

TEST(Recovery, ErrorsAreReported) {
    FitConfig cfg;
    cfg.starts = 2;
    RecoveryOptions opts;
    opts.scenario.densities = {30.0, 150.0};
    // every density must lie below the jam density of the checked truth
    const auto report = recovery_check(Smulders{86.8, 65.0, 120.0}, GridSpec{}, cfg, opts);
    ASSERT_TRUE(report.error.has_value());
    EXPECT_NE(report.error->find("k_jam"), std::string::npos);
    EXPECT_FALSE(report.passed());

    opts.scenario.densities = {30.0, 90.0};
    opts.scenario.block_duration_s = 40.0;
    EXPECT_TRUE(recovery_check(kTruth, GridSpec{}, cfg, opts).error.has_value());

    opts.scenario.block_duration_s = 150.0;
    opts.tolerances = {0.05};
    EXPECT_TRUE(recovery_check(kTruth, GridSpec{}, cfg, opts).error.has_value());
}
