#pragma once

// Quadrature-space generators of the Heisenberg equations (u' = R u with
// R = i L) for the full three-mode and the effective two-mode Hamiltonians,
// their spectra, branch tracking across detuning sweeps, and numerical
// extraction of the effective coupling from the level attraction.
//
// Eigenvalue convention: eig(L) = -i eig(R). The "real part" of a level is
// Im(eig R) and its "imaginary part" is -Re(eig R).

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "core.hpp"
#include "effective.hpp"
#include "parallel.hpp"

namespace magsq {

enum class Provenance { full, effective };

struct SuperoperatorMatrix {
    int dim = 0;
    Eigen::MatrixXd R;
    Provenance provenance = Provenance::full;
};

/// Full 6x6 generator in the [X_a, Y_a, X_b, Y_b, X_m, Y_m] ordering (theta = pi frame).
inline SuperoperatorMatrix build_full(const LinearizedModel& m, double delta_a) {
    const double ch = std::cosh(m.r);
    const double sh = std::sinh(m.r);
    const double g_plus = m.g * sh + m.g * ch;
    const double g_minus = m.g * sh - m.g * ch;
    const double G_r = 2.0 * m.G * std::exp(m.r);
    const double wb = m.omega_b;
    const double dmp = m.delta_m_prime;

    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(6, 6);
    R(0, 1) = delta_a;
    R(0, 5) = g_plus;
    R(1, 0) = -delta_a;
    R(1, 4) = g_minus;
    R(2, 3) = wb;
    R(3, 2) = -wb;
    R(3, 5) = -G_r;
    R(4, 1) = g_plus;
    R(4, 2) = G_r;
    R(4, 5) = dmp;
    R(5, 0) = g_minus;
    R(5, 4) = -dmp;
    return {6, std::move(R), Provenance::full};
}

/// Effective 4x4 generator of Delta_a a^dag a + omega_b b^dag b + g_eff (i a^dag b^dag - i a b).
inline SuperoperatorMatrix build_effective(double g_eff, double delta_a, double omega_b = 1.0) {
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(4, 4);
    R(0, 1) = delta_a;
    R(1, 0) = -delta_a;
    R(2, 3) = omega_b;
    R(3, 2) = -omega_b;
    R(0, 2) = g_eff;
    R(2, 0) = g_eff;
    R(1, 3) = -g_eff;
    R(3, 1) = -g_eff;
    return {4, std::move(R), Provenance::effective};
}

/// Eigenvalues of L from a dense eigensolve of R.
inline Eigen::VectorXcd liouvillian_eigenvalues(const SuperoperatorMatrix& s) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(s.R, false);
    return Complex(0.0, -1.0) * es.eigenvalues();
}

/// Closed-form spectrum of the effective generator: {E+, E-, E'+, E'-} with
/// E+- = [omega_b - Delta_a +- sqrt((omega_b + Delta_a)^2 - 4 g_eff^2)] / 2 and E'+- = -E-+.
inline std::array<Complex, 4> eigenvalues_effective_analytic(double g_eff, double delta_a,
                                                              double omega_b = 1.0) {
    const double s = omega_b + delta_a;
    const Complex root = std::sqrt(Complex(s * s - 4.0 * g_eff * g_eff, 0.0));
    const Complex e_plus = 0.5 * (omega_b - delta_a + root);
    const Complex e_minus = 0.5 * (omega_b - delta_a - root);
    return {e_plus, e_minus, -e_minus, -e_plus};
}

struct SpectralSweep {
    int dim = 0;
    std::vector<double> grid;
    /// branches[k][i]: eigenvalue of L on branch k at grid point i.
    std::vector<std::vector<Complex>> branches;
    /// Photon-phonon branch pair (the attracting levels near +omega_b); empty
    /// if no branch acquires an imaginary part.
    std::vector<int> pairing;
    /// Steps where the best and runner-up assignments were nearly tied.
    int ambiguous_steps = 0;
};

namespace detail {

struct Spectrum {
    Eigen::VectorXcd values;  // eigenvalues of L
    Eigen::MatrixXcd vectors; // unit-norm columns
};

inline Spectrum spectrum_with_vectors(const SuperoperatorMatrix& s) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(s.R, true);
    Spectrum out;
    out.values = Complex(0.0, -1.0) * es.eigenvalues();
    out.vectors = es.eigenvectors();
    for (int j = 0; j < out.vectors.cols(); ++j) out.vectors.col(j).normalize();
    return out;
}

struct Assignment {
    std::vector<int> perm; // perm[branch] = column of the new spectrum
    bool ambiguous = false;
};

// Exhaustive search is fine for dim <= 6 (720 permutations).
inline Assignment best_assignment(const Eigen::MatrixXd& overlap) {
    const int n = static_cast<int>(overlap.rows());
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = -1.0;
    double runner_up = -1.0;
    std::vector<int> best_perm = perm;
    do {
        double score = 0.0;
        for (int k = 0; k < n; ++k) score += overlap(k, perm[k]);
        if (score > best) {
            runner_up = best;
            best = score;
            best_perm = perm;
        } else if (score > runner_up) {
            runner_up = score;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return {best_perm, n > 1 && best - runner_up < 1e-3};
}

} // namespace detail

inline constexpr double kImagThreshold = 1e-6;

/// Diagonalizes the full generator along a Delta_a grid and tracks branches by
/// maximal eigenvector overlap between consecutive grid points.
inline SpectralSweep sweep(const LinearizedModel& m, const std::vector<double>& grid,
                           unsigned threads = 1) {
    if (grid.size() < 3) throw Error(ErrorKind::domain, "sweep: grid needs at least 3 points");
    const bool increasing = grid[1] > grid[0];
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if ((grid[i] > grid[i - 1]) != increasing || grid[i] == grid[i - 1])
            throw Error(ErrorKind::domain, "sweep: grid must be strictly monotone");
    }

    std::vector<detail::Spectrum> spectra(grid.size());
    detail::parallel_for(grid.size(), threads, [&](std::size_t i) {
        spectra[i] = detail::spectrum_with_vectors(build_full(m, grid[i]));
    });

    SpectralSweep out;
    out.grid = grid;
    out.dim = static_cast<int>(spectra.front().values.size());
    const int n = out.dim;
    out.branches.assign(n, std::vector<Complex>(grid.size()));

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    const auto& v0 = spectra.front().values;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (v0[a].real() != v0[b].real()) return v0[a].real() < v0[b].real();
        return v0[a].imag() < v0[b].imag();
    });
    Eigen::MatrixXcd prev(n, n);
    for (int k = 0; k < n; ++k) {
        out.branches[k][0] = v0[order[k]];
        prev.col(k) = spectra.front().vectors.col(order[k]);
    }

    for (std::size_t i = 1; i < grid.size(); ++i) {
        const auto& cur = spectra[i];
        Eigen::MatrixXd overlap(n, n);
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j) overlap(k, j) = std::abs(prev.col(k).dot(cur.vectors.col(j)));
        const auto assignment = detail::best_assignment(overlap);
        if (assignment.ambiguous) ++out.ambiguous_steps;
        for (int k = 0; k < n; ++k) {
            out.branches[k][i] = cur.values[assignment.perm[k]];
            prev.col(k) = cur.vectors.col(assignment.perm[k]);
        }
    }

    struct Candidate {
        int branch;
        double mean_re;
    };
    std::vector<Candidate> candidates;
    for (int k = 0; k < n; ++k) {
        double peak = 0.0;
        double mean_re = 0.0;
        for (const Complex& e : out.branches[k]) {
            peak = std::max(peak, std::abs(e.imag()));
            mean_re += e.real();
        }
        if (peak > kImagThreshold) candidates.push_back({k, mean_re / double(grid.size())});
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) { return a.mean_re > b.mean_re; });
    if (candidates.size() >= 2) {
        out.pairing = {candidates[0].branch, candidates[1].branch};
        std::sort(out.pairing.begin(), out.pairing.end());
    }
    return out;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
    std::vector<double> xs(count);
    if (count == 1) {
        xs[0] = lo;
        return xs;
    }
    for (std::size_t i = 0; i < count; ++i)
        xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    return xs;
}

struct ExtractionResult {
    double g_eff_num = 0.0;
    double delta_num = 0.0;
    double delta_a_star = 0.0;
    double grid_resolution = 0.0;
};

namespace detail {

// Largest |Im| among the two levels whose real parts sit closest to re_ref.
inline double pair_splitting(const LinearizedModel& m, double delta_a, double re_ref) {
    const Eigen::VectorXcd ev = liouvillian_eigenvalues(build_full(m, delta_a));
    std::vector<int> idx(ev.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + 2, idx.end(), [&](int a, int b) {
        return std::abs(ev[a].real() - re_ref) < std::abs(ev[b].real() - re_ref);
    });
    return std::max(std::abs(ev[idx[0]].imag()), std::abs(ev[idx[1]].imag()));
}

} // namespace detail

/// Locates the maximal imaginary splitting of the tracked pair (grid argmax,
/// then golden-section refinement on re-diagonalized spectra). The splitting
/// height gives |g_eff|; the sign is taken from the closed-form coupling.
inline ExtractionResult extract_effective(const LinearizedModel& m, const SpectralSweep& s,
                                          double tol = 1e-6) {
    if (s.pairing.size() != 2)
        throw Error(ErrorKind::extraction_failure, "extract_effective: no level splitting in sweep");
    const auto& b1 = s.branches[s.pairing[0]];
    const auto& b2 = s.branches[s.pairing[1]];
    std::size_t best = 0;
    double best_split = -1.0;
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
        const double split = std::max(std::abs(b1[i].imag()), std::abs(b2[i].imag()));
        if (split > best_split) {
            best_split = split;
            best = i;
        }
    }
    if (best_split <= kImagThreshold)
        throw Error(ErrorKind::extraction_failure, "extract_effective: splitting below threshold");

    const double re_ref = 0.5 * (b1[best].real() + b2[best].real());
    auto objective = [&](double x) { return detail::pair_splitting(m, x, re_ref); };

    double lo = s.grid[best == 0 ? 0 : best - 1];
    double hi = s.grid[std::min(best + 1, s.grid.size() - 1)];
    if (lo > hi) std::swap(lo, hi);
    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = objective(x1);
    double f2 = objective(x2);
    while (hi - lo > tol) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1);
        }
    }
    double x_star = 0.5 * (lo + hi);
    double height = objective(x_star);
    if (best_split > height) {
        x_star = s.grid[best];
        height = best_split;
    }

    double sign = -1.0;
    try {
        if (g_eff_analytic(m) > 0.0) sign = 1.0;
    } catch (const Error&) {
    }

    ExtractionResult res;
    res.g_eff_num = sign * height;
    res.delta_num = x_star + m.omega_b;
    res.delta_a_star = -m.omega_b + res.delta_num;
    res.grid_resolution = std::abs(s.grid[1] - s.grid[0]);
    return res;
}

inline ExtractionResult extract_effective(const LinearizedModel& m, const std::vector<double>& grid,
                                          unsigned threads = 1, double tol = 1e-6) {
    return extract_effective(m, sweep(m, grid, threads), tol);
}

} // namespace magsq
