#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <magsq/effective.hpp>

using namespace magsq;

namespace {

LinearizedModel model(double dm, double r, double g, double G) {
    return LinearizedModel::from_couplings(dm, r, g, G);
}

// Independent evaluation of the coupling and shift formulas with hand-built hyperbolics.
double g_eff_oracle(double dm, double r, double g, double G) {
    const double c = 0.5 * (std::exp(2 * r) + std::exp(-2 * r));
    return g * G * c * (c - dm * std::exp(2 * r)) / (dm * dm - c * c);
}

double delta_oracle(double dm, double r, double g, double G) {
    const double c = 0.5 * (std::exp(2 * r) + std::exp(-2 * r));
    return (2 * G * G * dm * std::exp(2 * r) * c + g * g * (dm - 1) * c * c) / (dm * dm - c * c);
}

} // namespace

TEST(EffectiveCoupling, NoCouplingGivesZero) {
    EXPECT_EQ(g_eff_analytic(model(3, 0.2, 0, 0.1)), 0.0);
    EXPECT_EQ(g_eff_analytic(model(3, 0.2, 0.1, 0)), 0.0);
    EXPECT_EQ(delta_analytic(model(3, 0.2, 0, 0)), 0.0);
}

TEST(EffectiveCoupling, WorkedValues) {
    EXPECT_NEAR(g_eff_analytic(model(3, 0, 0.1, 0.1)), -0.0025, 1e-15);
    EXPECT_NEAR(g_eff_analytic(model(3, 0.25, 0.1, 0.1)), -5.572e-3, 1e-4 * 5.572e-3);
    EXPECT_NEAR(delta_analytic(model(3, 0, 0.1, 0.1)), 0.0100, 1e-15);
    EXPECT_NEAR(delta_analytic(model(3, 0.25, 0.1, 0.1)), 1.7724e-2, 1e-4 * 1.7724e-2);
}

TEST(EffectiveCoupling, MatchesOracleOnRandomModels) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> dm(1.5, 5), r(0, 0.5), g(0.01, 0.3);
    for (int i = 0; i < 100; ++i) {
        const double a = dm(rng), b = r(rng), c = g(rng), d = g(rng);
        const auto m = model(a, b, c, d);
        EXPECT_NEAR(g_eff_analytic(m), g_eff_oracle(a, b, c, d), 1e-12);
        EXPECT_NEAR(delta_analytic(m), delta_oracle(a, b, c, d), 1e-12);
    }
}

TEST(EffectiveCoupling, ResonantDenominatorIsSingular) {
    const double r = 0.1;
    auto m = model(std::cosh(2 * r), r, 0.1, 0.1);
    try {
        g_eff_analytic(m);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::singularity);
    }
    EXPECT_THROW(delta_analytic(m), Error);
}

TEST(EffectiveCoupling, SqueezingFavorableSign) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> dm(0.2, 6), r(0, 0.6), g(0.01, 0.3);
    int checked = 0;
    for (int i = 0; i < 500; ++i) {
        const double a = dm(rng), b = r(rng);
        const double c2 = std::cosh(2 * b);
        if (!(a > c2 && a * std::exp(2 * b) > c2)) continue;
        EXPECT_LT(g_eff_analytic(model(a, b, g(rng), g(rng))), 0.0);
        ++checked;
    }
    EXPECT_GT(checked, 100);
}

TEST(EffectiveModel, CarriesPhaseAndValidity) {
    const auto e = make_effective(model(3, 0, 0.1, 0.1));
    EXPECT_EQ(e.theta, std::numbers::pi);
    EXPECT_NEAR(e.g_eff, -0.0025, 1e-15);
    EXPECT_TRUE(e.validity.valid);
}

TEST(Perturbation, NoCouplingNoShift) {
    const auto p = perturbation_shifts(model(3, 0.2, 0, 0), -1.0, 2, 1, 3);
    EXPECT_EQ(p.epsilon1, 0.0);
    EXPECT_EQ(p.epsilon2, 0.0);
    EXPECT_EQ(std::abs(p.g_tilde), 0.0);
}

TEST(Perturbation, ShiftDifferenceIndependentOfFockState) {
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> idx(0, 20);
    const auto m = model(3, 0.25, 0.1, 0.1);
    const auto ref = perturbation_shifts(m, -0.98, 0, 0, 0);
    const double d0 = ref.epsilon1 - ref.epsilon2;
    const auto other = perturbation_shifts(m, -0.98, 3, 1, 2);
    EXPECT_NEAR(other.epsilon1 - other.epsilon2, d0, 1e-12);
    for (int i = 0; i < 50; ++i) {
        const auto p = perturbation_shifts(m, -0.98, idx(rng), idx(rng), idx(rng));
        EXPECT_NEAR(p.epsilon1 - p.epsilon2, d0, 1e-12);
    }
}

TEST(Perturbation, CouplingScalesWithOccupation) {
    const auto m = model(3, 0.25, 0.1, 0.1);
    const auto p0 = perturbation_shifts(m, -1.0, 0, 0, 0);
    const auto p1 = perturbation_shifts(m, -1.0, 1, 0, 1);
    EXPECT_NEAR(std::abs(p1.g_tilde / p0.g_tilde - 2.0), 0.0, 1e-14);
    // -sqrt((n+1)(k+1)) e^{i theta/2} g_eff
    const Complex expect = -std::sqrt(2.0 * 4.0) * std::polar(1.0, 0.5 * m.theta) * g_eff_analytic(m);
    const auto p = perturbation_shifts(m, -1.0, 1, 5, 3);
    EXPECT_NEAR(std::abs(p.g_tilde - expect), 0.0, 1e-15);
}

TEST(Perturbation, ResonanceIsSingular) {
    const auto m = model(3, 0, 0.1, 0.1);
    try {
        perturbation_shifts(m, m.delta_m_prime, 0, 0, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::singularity);
        EXPECT_NE(std::string(e.what()).find("Delta_a - Delta'_m"), std::string::npos);
    }
    EXPECT_THROW(perturbation_shifts(model(1, 0, 0.1, 0.1), -0.5, 0, 0, 0), Error);
    EXPECT_THROW(perturbation_shifts(m, -1.0, -1, 0, 0), Error);
}

TEST(DeltaConsistency, UncoupledIsZero) {
    const auto d = delta_consistency(model(3, 0.2, 0, 0));
    EXPECT_EQ(d.A, 0.0);
    EXPECT_EQ(d.B, 0.0);
    EXPECT_EQ(d.delta_self_consistent, 0.0);
}

TEST(DeltaConsistency, LeadingTermMatchesTwoTermForm) {
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> dm(1.5, 5), r(0, 0.5), g(0.01, 0.3);
    for (int i = 0; i < 50; ++i) {
        const auto m = model(dm(rng), r(rng), g(rng), g(rng));
        const auto d = delta_consistency(m);
        EXPECT_NEAR(d.A, delta_leading_closed(m), 1e-12 * std::max(1.0, std::abs(d.A)));
    }
}

TEST(DeltaConsistency, SelfConsistentGapIsSecondOrder) {
    const auto m = model(3, 0, 0.1, 0.1);
    const auto d = delta_consistency(m);
    // A reproduces the analytic shift, so the self-consistent correction is exactly B/(1-B).
    EXPECT_NEAR(d.rel_gap_A, 0.0, 1e-12);
    EXPECT_NEAR(d.rel_gap_self_consistent, std::abs(d.B / (1.0 - d.B)), 1e-12);
    EXPECT_LE(d.rel_gap_self_consistent, 1.01 * std::abs(d.B));
    EXPECT_NEAR(d.B, 0.01 / 16.0, 1e-15);
}

TEST(Validity, UncoupledRatiosVanish) {
    const auto v = validity_ratios(model(3, 0.3, 0, 0), -1.0);
    EXPECT_EQ(v.max_ratio(), 0.0);
    EXPECT_TRUE(v.valid);
}

TEST(Validity, LargeDetuningWorkedValue) {
    const auto v = validity_ratios(model(3, 0, 0.1, 0.1), -1.0);
    EXPECT_DOUBLE_EQ(v.gap, 2.0);
    EXPECT_NEAR(v.max_ratio(), 0.05, 1e-15);
    EXPECT_TRUE(v.valid);
}

TEST(Validity, SmallDetuningStrongKerrIsFlagged) {
    const auto v = validity_ratios(model(0.5, 1.0, 0.1, 0.1), -1.0);
    EXPECT_FALSE(v.valid);
    EXPECT_GT(v.max_ratio(), 0.3);
}
