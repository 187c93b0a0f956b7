#pragma once

// Closed-form effective photon-phonon coupling and energy shift, the
// second-order perturbative shifts they derive from, and the large-detuning
// validity diagnostics.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "core.hpp"

namespace magsq {

struct ValidityDiagnostics {
    double ratio_g_cosh = 0.0; // g cosh r / gap
    double ratio_g_sinh = 0.0; // g sinh r / gap
    double ratio_G_exp = 0.0;  // G e^r / gap
    double gap = 0.0;          // min(|Delta'_m - omega_b|, |Delta'_m - Delta_a|)
    double threshold = 0.3;
    bool valid = true;

    double max_ratio() const { return std::max({ratio_g_cosh, ratio_g_sinh, ratio_G_exp}); }
};

struct EffectiveModel {
    double g_eff = 0.0;
    double delta = 0.0;
    double theta = 0.0;
    ValidityDiagnostics validity;
};

struct PerturbationResult {
    int n = 0;
    int l = 0;
    int k = 0;
    double epsilon1 = 0.0;
    double epsilon2 = 0.0;
    Complex g_tilde{};
};

struct DeltaConsistency {
    double A = 0.0;
    double B = 0.0;
    double delta_self_consistent = 0.0; // A / (1 - B)
    double delta_analytic = 0.0;
    double rel_gap_A = 0.0;             // |A - delta_analytic| / |delta_analytic|
    double rel_gap_self_consistent = 0.0;
};

namespace detail {

inline double resonant_denominator(const LinearizedModel& m) {
    const double c = std::cosh(2.0 * m.r);
    if (std::abs(std::abs(m.delta_m) - m.omega_b * c) < 1e-9)
        throw Error(ErrorKind::singularity,
                    "effective model: |Delta_m| resonant with omega_b cosh(2r)");
    return m.delta_m * m.delta_m - m.omega_b * m.omega_b * c * c;
}

inline double checked_inverse(double den, const char* resonance) {
    if (den == 0.0 || std::abs(den) < 1e-14)
        throw Error(ErrorKind::singularity, std::string("perturbation: vanishing denominator ") + resonance);
    return 1.0 / den;
}

} // namespace detail

/// Effective two-mode squeezing coupling
///   g_eff = g G cosh(2r) (omega_b cosh 2r - Delta_m e^{2r}) / (Delta_m^2 - omega_b^2 cosh^2 2r).
inline double g_eff_analytic(const LinearizedModel& m) {
    const double den = detail::resonant_denominator(m);
    const double c = std::cosh(2.0 * m.r);
    return m.g * m.G * c * (m.omega_b * c - m.delta_m * std::exp(2.0 * m.r)) / den;
}

/// Energy shift of the photon-phonon resonance, Delta_a = -omega_b + delta.
inline double delta_analytic(const LinearizedModel& m) {
    const double den = detail::resonant_denominator(m);
    const double c = std::cosh(2.0 * m.r);
    return (2.0 * m.G * m.G * m.delta_m * std::exp(2.0 * m.r) * c +
            m.g * m.g * (m.delta_m - m.omega_b) * c * c) /
           den;
}

inline ValidityDiagnostics validity_ratios(const LinearizedModel& m, double delta_a,
                                           double threshold = 0.3) {
    ValidityDiagnostics d;
    d.threshold = threshold;
    d.gap = std::min(std::abs(m.delta_m_prime - m.omega_b), std::abs(m.delta_m_prime - delta_a));
    const double scales[] = {std::abs(m.g) * std::cosh(m.r), std::abs(m.g) * std::sinh(m.r),
                             std::abs(m.G) * std::exp(m.r)};
    auto ratio = [&](double s) {
        if (s == 0.0) return 0.0;
        return d.gap > 0.0 ? s / d.gap : std::numeric_limits<double>::infinity();
    };
    d.ratio_g_cosh = ratio(scales[0]);
    d.ratio_g_sinh = ratio(scales[1]);
    d.ratio_G_exp = ratio(scales[2]);
    d.valid = d.max_ratio() <= threshold;
    return d;
}

/// Effective model at the resonance Delta_a = -omega_b + delta.
inline EffectiveModel make_effective(const LinearizedModel& m, double threshold = 0.3) {
    EffectiveModel e;
    e.g_eff = g_eff_analytic(m);
    e.delta = delta_analytic(m);
    e.theta = m.theta;
    e.validity = validity_ratios(m, -m.omega_b + e.delta, threshold);
    return e;
}

/// Second-order shifts of |n l k> and |(n+1) l (k+1)> and their effective
/// coupling, summed over the eight virtual paths through the magnon.
inline PerturbationResult perturbation_shifts(const LinearizedModel& m, double delta_a, int n, int l,
                                              int k) {
    if (n < 0 || l < 0 || k < 0) throw Error(ErrorKind::domain, "Fock indices must be non-negative");
    const double dmp = m.delta_m_prime;
    const double wb = m.omega_b;
    const double inv_am = detail::checked_inverse(delta_a - dmp, "Delta_a - Delta'_m");
    const double inv_ap = detail::checked_inverse(delta_a + dmp, "Delta_a + Delta'_m");
    const double inv_bm = detail::checked_inverse(wb - dmp, "omega_b - Delta'_m");
    const double inv_bp = detail::checked_inverse(wb + dmp, "omega_b + Delta'_m");

    const double gc2 = m.g * m.g * std::cosh(m.r) * std::cosh(m.r);
    const double gs2 = m.g * m.g * std::sinh(m.r) * std::sinh(m.r);
    const double Ge2 = m.G * m.G * std::exp(2.0 * m.r);

    PerturbationResult res;
    res.n = n;
    res.l = l;
    res.k = k;
    res.epsilon1 = (n - l) * gc2 * inv_am - (n + l + 1) * gs2 * inv_ap + (k - l) * Ge2 * inv_bm -
                   (k + l + 1) * Ge2 * inv_bp;
    res.epsilon2 = (n - l + 1) * gc2 * inv_am - (n + l + 2) * gs2 * inv_ap + (k - l + 1) * Ge2 * inv_bm -
                   (k + l + 2) * Ge2 * inv_bp;
    const double geff = (m.g == 0.0 || m.G == 0.0) ? 0.0 : g_eff_analytic(m);
    res.g_tilde = -std::sqrt(double(n + 1) * double(k + 1)) * std::polar(1.0, 0.5 * m.theta) * geff;
    return res;
}

/// Self-consistent resonance condition at Delta_a = -omega_b: delta = A + B delta.
inline DeltaConsistency delta_consistency(const LinearizedModel& m) {
    const double wb = m.omega_b;
    const PerturbationResult pr = perturbation_shifts(m, -wb, 0, 0, 0);
    const double dmp = m.delta_m_prime;
    const double gc2 = m.g * m.g * std::cosh(m.r) * std::cosh(m.r);
    const double gs2 = m.g * m.g * std::sinh(m.r) * std::sinh(m.r);

    DeltaConsistency d;
    d.A = pr.epsilon1 - pr.epsilon2;
    d.B = gc2 / ((dmp + wb) * (dmp + wb)) - gs2 / ((dmp - wb) * (dmp - wb));
    if (std::abs(1.0 - d.B) < 1e-9) throw Error(ErrorKind::singularity, "delta_consistency: |1 - B| ~ 0");
    d.delta_self_consistent = d.A / (1.0 - d.B);
    d.delta_analytic = delta_analytic(m);
    if (d.delta_analytic != 0.0) {
        d.rel_gap_A = std::abs(d.A - d.delta_analytic) / std::abs(d.delta_analytic);
        d.rel_gap_self_consistent =
            std::abs(d.delta_self_consistent - d.delta_analytic) / std::abs(d.delta_analytic);
    }
    return d;
}

/// Two-term closed form of A at Delta_a = -omega_b.
inline double delta_leading_closed(const LinearizedModel& m) {
    const double dmp = m.delta_m_prime;
    const double wb = m.omega_b;
    const double Ge2 = m.G * m.G * std::exp(2.0 * m.r);
    const double gc2 = m.g * m.g * std::cosh(m.r) * std::cosh(m.r);
    const double gs2 = m.g * m.g * std::sinh(m.r) * std::sinh(m.r);
    return (Ge2 + gc2) / (dmp + wb) + (Ge2 + gs2) / (dmp - wb);
}

} // namespace magsq
