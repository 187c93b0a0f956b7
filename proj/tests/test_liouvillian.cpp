#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include <magsq/effective.hpp>
#include <magsq/liouvillian.hpp>

using namespace magsq;

namespace {

LinearizedModel fig2() { return LinearizedModel::from_couplings(3.0, 0.0, 0.1, 0.1); }

std::vector<Complex> sorted(std::vector<Complex> v) {
    std::sort(v.begin(), v.end(), [](Complex a, Complex b) {
        if (std::abs(a.real() - b.real()) > 1e-7) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return v;
}

// Greedy multiset match: every value in a has a distinct partner in b within tol.
bool same_multiset(const std::vector<Complex>& a, const std::vector<Complex>& b, double tol) {
    if (a.size() != b.size()) return false;
    std::vector<bool> used(b.size(), false);
    for (const auto& x : a) {
        bool found = false;
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (!used[j] && std::abs(x - b[j]) <= tol) {
                used[j] = true;
                found = true;
                break;
            }
        }
        if (!found) return false;
    }
    return true;
}

std::vector<Complex> to_vec(const Eigen::VectorXcd& v) { return {v.data(), v.data() + v.size()}; }

} // namespace

TEST(FullGenerator, DecoupledModesRotate) {
    auto m = LinearizedModel::from_couplings(3.0, 0.3, 0.0, 0.0);
    const auto ev = to_vec(liouvillian_eigenvalues(build_full(m, -0.7)));
    const std::vector<Complex> expect = {0.7, -0.7, 1.0, -1.0, m.delta_m_prime, -m.delta_m_prime};
    EXPECT_TRUE(same_multiset(ev, expect, 1e-12));
}

TEST(FullGenerator, NoKerrCouplingSigns) {
    const auto s = build_full(fig2(), -1.0);
    EXPECT_EQ(s.dim, 6);
    EXPECT_EQ(s.provenance, Provenance::full);
    EXPECT_DOUBLE_EQ(s.R(0, 5), 0.1);
    EXPECT_DOUBLE_EQ(s.R(1, 4), -0.1);
    EXPECT_DOUBLE_EQ(s.R(3, 5), -0.2);
    EXPECT_DOUBLE_EQ(s.R(4, 2), 0.2);
}

TEST(FullGenerator, TracelessAndPatterned) {
    auto m = LinearizedModel::from_couplings(3.0, 0.25, 0.1, 0.15);
    const auto s = build_full(m, -0.9);
    EXPECT_EQ(s.R.trace(), 0.0);
    int nonzero = 0;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) nonzero += s.R(i, j) != 0.0;
    EXPECT_EQ(nonzero, 12);
    const double gp = 0.1 * (std::sinh(0.25) + std::cosh(0.25));
    const double gm = 0.1 * (std::sinh(0.25) - std::cosh(0.25));
    EXPECT_DOUBLE_EQ(s.R(0, 5), gp);
    EXPECT_DOUBLE_EQ(s.R(4, 1), gp);
    EXPECT_DOUBLE_EQ(s.R(5, 0), gm);
    EXPECT_DOUBLE_EQ(s.R(4, 2), 2 * 0.15 * std::exp(0.25));
}

TEST(FullGenerator, MatchesIndependentEigensolver) {
    const auto s = build_full(fig2(), -1.0);
    // oracle: complex Schur-based solver on L = -i R
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(Complex(0.0, -1.0) * s.R.cast<Complex>(), false);
    EXPECT_TRUE(same_multiset(to_vec(liouvillian_eigenvalues(s)), to_vec(ces.eigenvalues()), 1e-10));
}

TEST(FullGenerator, SpectrumPairsWithNegatedConjugate) {
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> dm(0.5, 5), r(0, 0.5), g(0.0, 0.3), da(-2, 0);
    for (int i = 0; i < 100; ++i) {
        auto m = LinearizedModel::from_couplings(dm(rng), r(rng), g(rng), g(rng));
        const auto ev = to_vec(liouvillian_eigenvalues(build_full(m, da(rng))));
        std::vector<Complex> mirror;
        for (auto z : ev) mirror.push_back(-std::conj(z));
        EXPECT_TRUE(same_multiset(ev, mirror, 1e-9));
    }
}

TEST(EffectiveGenerator, DegenerateFreeModes) {
    const auto e = eigenvalues_effective_analytic(0.0, -1.0);
    EXPECT_TRUE(same_multiset({e.begin(), e.end()}, {1.0, 1.0, -1.0, -1.0}, 1e-15));
}

TEST(EffectiveGenerator, SplittingAtDegeneracy) {
    const auto e = eigenvalues_effective_analytic(-0.0025, -1.0);
    EXPECT_NEAR(std::abs(e[0] - Complex(1.0, 0.0025)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(e[1] - Complex(1.0, -0.0025)), 0.0, 1e-15);
}

TEST(EffectiveGenerator, AnalyticMatchesDenseSolve) {
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> ge(-0.3, 0.3), da(-2, 0.5);
    for (int i = 0; i < 100; ++i) {
        const double g = ge(rng), d = da(rng);
        const auto a = eigenvalues_effective_analytic(g, d);
        const auto s = build_effective(g, d);
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(Complex(0.0, -1.0) * s.R.cast<Complex>(), false);
        EXPECT_TRUE(same_multiset({a.begin(), a.end()}, to_vec(ces.eigenvalues()), 1e-9)) << g << " " << d;
    }
}

TEST(Sweep, UncoupledStaysReal) {
    auto m = LinearizedModel::from_couplings(3.0, 0.2, 0.0, 0.0);
    const auto s = sweep(m, linspace(-1.2, -0.8, 101));
    for (const auto& b : s.branches)
        for (auto z : b) EXPECT_LE(std::abs(z.imag()), 1e-12);
    EXPECT_TRUE(s.pairing.empty());
}

TEST(Sweep, SingleAttractionIntervalAndMultiset) {
    const auto grid = linspace(-1.2, -0.8, 4001);
    const auto m = fig2();
    const auto s = sweep(m, grid);
    ASSERT_EQ(s.branches.size(), 6u);
    ASSERT_EQ(s.pairing.size(), 2u);
    for (std::size_t i = 0; i < grid.size(); i += 40) {
        std::vector<Complex> tracked;
        for (const auto& b : s.branches) tracked.push_back(b[i]);
        EXPECT_TRUE(same_multiset(tracked, to_vec(liouvillian_eigenvalues(build_full(m, grid[i]))), 1e-9));
    }
    int intervals = 0;
    bool inside = false;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const bool split = std::abs(s.branches[s.pairing[0]][i].imag()) > kImagThreshold;
        if (split && !inside) ++intervals;
        inside = split;
    }
    EXPECT_EQ(intervals, 1);
}

TEST(Sweep, RejectsShortOrNonMonotoneGrid) {
    EXPECT_THROW(sweep(fig2(), {-1.0, -0.9}), Error);
    EXPECT_THROW(sweep(fig2(), {-1.0, -0.9, -0.95}), Error);
    EXPECT_THROW(sweep(fig2(), {-1.0, -1.0, -0.9}), Error);
}

TEST(Extraction, MatchesAnalyticWithoutKerr) {
    const auto m = fig2();
    const auto res = extract_effective(m, linspace(-1.05, -0.95, 401));
    EXPECT_NEAR(std::abs(res.g_eff_num), 0.0025, 0.1 * 0.0025);
    EXPECT_NEAR(res.delta_num, 0.0100, 0.1 * 0.0100);
    EXPECT_LT(res.g_eff_num, 0.0);
    EXPECT_EQ(res.delta_a_star, -m.omega_b + res.delta_num);
}

TEST(Extraction, MatchesAnalyticWithKerr) {
    const auto m = LinearizedModel::from_couplings(3.0, 0.25, 0.1, 0.1);
    const auto res = extract_effective(m, linspace(-1.05, -0.95, 401));
    EXPECT_NEAR(std::abs(res.g_eff_num), 5.572e-3, 0.1 * 5.572e-3);
    EXPECT_NEAR(res.delta_num, delta_analytic(m), 0.1 * delta_analytic(m));
}

TEST(Extraction, AgreesWithAnalyticAcrossCouplings) {
    for (double r : {0.0, 0.25})
        for (double g : {0.05, 0.1, 0.2})
            for (double G : {0.05, 0.2}) {
                const auto m = LinearizedModel::from_couplings(3.0, r, g, G);
                const double ge = g_eff_analytic(m);
                const double d = delta_analytic(m);
                const double w = 10 * std::abs(ge) + 0.5 * std::abs(d) + 1e-3;
                const auto res = extract_effective(m, linspace(-1 + d - w, -1 + d + w, 201));
                EXPECT_NEAR(res.g_eff_num, ge, 0.1 * std::abs(ge)) << r << " " << g << " " << G;
            }
}

TEST(Extraction, NoPhotonMagnonPathFails) {
    const auto m = LinearizedModel::from_couplings(3.0, 0.0, 0.0, 0.1);
    try {
        extract_effective(m, linspace(-1.2, -0.8, 201));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::extraction_failure);
    }
}

TEST(Extraction, ConvergesUnderGridRefinement) {
    const auto m = fig2();
    const auto coarse = extract_effective(m, linspace(-1.05, -0.95, 201));
    const auto fine = extract_effective(m, linspace(-1.05, -0.95, 401));
    EXPECT_LT(std::abs(fine.g_eff_num - coarse.g_eff_num) / std::abs(fine.g_eff_num), 1e-4);
    EXPECT_LT(std::abs(fine.delta_a_star - coarse.delta_a_star) / std::abs(fine.delta_a_star), 1e-4);
}
