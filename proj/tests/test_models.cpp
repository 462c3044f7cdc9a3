#include <gtest/gtest.h>

#include <cmath>

#include <nlkv/error.hpp>
#include <nlkv/models.hpp>

using namespace nlkv;

namespace {

const Greenberg kGreenberg{46.3, 189.9};
const Smulders kSmulders{86.8, 65.0, 199.9};
const FranklinNewell kFranklin{80.2, 1000.0, 168.3};

}  // namespace

TEST(Greenberg, Examples) {
    EXPECT_EQ(equilibrium_speed(kGreenberg, 189.9), 0.0);
    EXPECT_NEAR(equilibrium_speed(kGreenberg, 189.9 / std::exp(1.0)), 46.3, 1e-12);
    EXPECT_EQ(equilibrium_speed(kGreenberg, 250.0), 0.0);
    EXPECT_THROW((void)equilibrium_speed(kGreenberg, 0.0), DomainError);
    EXPECT_THROW((void)equilibrium_speed(kGreenberg, -1.0), DomainError);
}

TEST(Smulders, Examples) {
    const double expected = 86.8 * (1.0 - 65.0 / 199.9);
    EXPECT_NEAR(equilibrium_speed(kSmulders, 65.0), expected, 1e-12);
    EXPECT_NEAR(expected, 58.58, 5e-3);
    EXPECT_EQ(equilibrium_speed(kSmulders, 199.9), 0.0);
    EXPECT_NEAR(equilibrium_speed(kSmulders, 1e-9), 86.8, 1e-6);
    EXPECT_NEAR(equilibrium_speed(kSmulders, 30.0), 73.77, 5e-3);
}

TEST(Smulders, BranchesMeetAtCriticalDensity) {
    for (double kc : {10.0, 33.3, 65.0, 120.0}) {
        const Smulders p{90.0, kc, 200.0};
        const double free_branch = p.v0 * (1.0 - kc / p.k_jam);
        const double cong_branch = p.v0 * kc * (1.0 / kc - 1.0 / p.k_jam);
        EXPECT_NEAR(free_branch, cong_branch, 1e-12 * free_branch);
        EXPECT_NEAR(equilibrium_speed(p, kc), free_branch, 1e-12 * free_branch);
        EXPECT_NEAR(equilibrium_speed(p, std::nextafter(kc, 0.0)), free_branch, 1e-12 * free_branch);
    }
}

TEST(FranklinNewell, Examples) {
    EXPECT_EQ(equilibrium_speed(kFranklin, 168.3), 0.0);
    EXPECT_NEAR(equilibrium_speed(kFranklin, 1e-6), 80.2, 1e-9);
    const double k = 84.15;
    const double hand = 80.2 * (1.0 - std::exp(-(1000.0 / 80.2) * (1.0 / k - 1.0 / 168.3)));
    EXPECT_NEAR(equilibrium_speed(kFranklin, k), hand, 1e-12);
    EXPECT_NEAR(hand, 5.7270, 1e-3);
}

TEST(Models, ZeroAtJamAndMonotone) {
    const FdParams all[] = {kGreenberg, kSmulders, kFranklin};
    for (const auto& p : all) {
        const double kj = to_vector(p).back();
        EXPECT_NEAR(equilibrium_speed(p, kj), 0.0, 1e-12);
        double prev = INFINITY;
        for (int n = 1; n <= 1000; ++n) {
            const double k = kj * n / 1000.0;
            const double v = equilibrium_speed(p, k);
            EXPECT_LE(v, prev) << model_name(kind_of(p)) << " at k=" << k;
            EXPECT_GE(v, 0.0);
            prev = v;
        }
    }
}

TEST(Models, NamesAndVectors) {
    EXPECT_EQ(parse_model("Franklin-Newell"), ModelKind::franklin_newell);
    EXPECT_EQ(parse_model("SMULDERS"), ModelKind::smulders);
    EXPECT_THROW((void)parse_model("drake"), ConfigError);
    for (auto kind : kAllModels) EXPECT_EQ(parse_model(model_name(kind)), kind);
    const FdParams p = kSmulders;
    const auto v = to_vector(p);
    EXPECT_EQ(from_vector(ModelKind::smulders, v), p);
    EXPECT_THROW((void)from_vector(ModelKind::greenberg, v), ConfigError);
    EXPECT_EQ(parameter_names(ModelKind::franklin_newell)[1], "lambda");
}

TEST(Logistic, Saturation) {
    EXPECT_EQ(logistic(0.0), 0.5);
    EXPECT_NEAR(logistic(40.0), 1.0, 1e-15);
    EXPECT_GT(logistic(-40.0), 0.0);
    EXPECT_LT(logistic(-40.0), 1e-17);
    EXPECT_GT(logistic(-700.0), 0.0);
    EXPECT_EQ(logistic(1e6), 1.0);
    for (double z : {-30.0, -3.0, -0.1, 0.7, 5.0, 25.0}) EXPECT_NEAR(logistic(z) + logistic(-z), 1.0, 1e-15);
}

TEST(DecelerationProbability, Behaviour) {
    const double f = equilibrium_speed(kSmulders, 50.0);
    EXPECT_EQ(deceleration_probability(f, 50.0, kSmulders), 0.5);
    EXPECT_NEAR(deceleration_probability(f + 40.0, 50.0, kSmulders), 1.0, 1e-15);
    EXPECT_GT(deceleration_probability(f - 40.0, 50.0, kSmulders), 0.0);
    EXPECT_LT(deceleration_probability(f - 40.0, 50.0, kSmulders), 1e-15);
    double prev = 0.0;
    for (int v = 0; v < 120; v += 5) {
        const double p = deceleration_probability(v, 50.0, kSmulders, 4.0);
        EXPECT_GT(p, prev);
        prev = p;
    }
    prev = 0.0;
    for (int k = 5; k < 199; k += 7) {
        const double p = deceleration_probability(40.0, k, kSmulders, 4.0);
        EXPECT_GE(p, prev);
        prev = p;
    }
    EXPECT_THROW((void)deceleration_probability(40.0, 0.0, kSmulders), DomainError);
}

TEST(ValidateParams, Examples) {
    EXPECT_TRUE(validate_params(kSmulders, 150.0).empty());
    const auto bad_order = validate_params(Smulders{86.8, 210.0, 199.9}, 150.0);
    ASSERT_FALSE(bad_order.empty());
    EXPECT_NE(bad_order[0].what.find("k_crit"), std::string::npos);
    const auto low_jam = validate_params(Greenberg{46.3, 100.0}, 150.0);
    ASSERT_EQ(low_jam.size(), 1u);
    EXPECT_NE(low_jam[0].what.find("k_jam"), std::string::npos);
    EXPECT_NEAR(low_jam[0].magnitude, 50.0, 1e-12);
    EXPECT_FALSE(validate_params(FranklinNewell{-1.0, 10.0, 200.0}, 10.0).empty());
}
