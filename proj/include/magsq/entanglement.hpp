#pragma once

// Photon-phonon entanglement and squeezing figures of merit: logarithmic
// negativity (exact, closed-form, asymptotic) and squeezing level in dB.

#include <algorithm>
#include <cmath>
#include <limits>

#include "core.hpp"
#include "dynamics.hpp"

namespace magsq {

enum class LogNegVariant { exact, closed_form, asymptotic };

inline const char* to_string(LogNegVariant v) {
    switch (v) {
    case LogNegVariant::exact: return "exact";
    case LogNegVariant::closed_form: return "closed_form";
    case LogNegVariant::asymptotic: return "asymptotic";
    }
    return "unknown";
}

struct EntanglementReport {
    double E_N = 0.0;
    /// Value before clipping at zero.
    double E_N_raw = 0.0;
    double P_val = std::numeric_limits<double>::quiet_NaN();
    double eta = std::numeric_limits<double>::quiet_NaN();
    double delta_prime = std::numeric_limits<double>::quiet_NaN();
    /// Smallest symplectic eigenvalue of the partially transposed CM (exact variant).
    double nu_min = std::numeric_limits<double>::quiet_NaN();
    /// |E_N(determinant form) - E_N(symplectic form)| before clipping.
    double cross_check = 0.0;
    LogNegVariant variant = LogNegVariant::exact;
};

namespace detail {

inline Eigen::Matrix4d photon_phonon_block(const Eigen::MatrixXd& V) {
    if (V.rows() != V.cols() || (V.rows() != 4 && V.rows() != 6))
        throw Error(ErrorKind::unsupported_dimension, "logarithmic_negativity: CM must be 4x4 or 6x6");
    return V.topLeftCorner(4, 4);
}

/// Smallest symplectic eigenvalue of the partially transposed two-mode CM.
inline double pt_symplectic_min(const Eigen::Matrix4d& V) {
    Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
    T(3, 3) = -1.0;
    const Eigen::Matrix4d Vt = T * V * T;
    const Eigen::MatrixXd S = symplectic_form(2);
    Eigen::EigenSolver<Eigen::MatrixXd> es(S * Vt, false);
    return es.eigenvalues().cwiseAbs().minCoeff();
}

/// det V as the squared product of its two symplectic eigenvalues; a direct
/// determinant cancels catastrophically for near-pure states with large entries.
inline double det_from_symplectic(const Eigen::Matrix4d& V) {
    const Eigen::MatrixXd S = symplectic_form(2);
    Eigen::EigenSolver<Eigen::MatrixXd> es(S * V, false);
    Eigen::Vector4d nu = es.eigenvalues().cwiseAbs();
    std::sort(nu.data(), nu.data() + 4);
    const double prod = std::sqrt(nu[0] * nu[1]) * std::sqrt(nu[2] * nu[3]);
    return prod * prod;
}

} // namespace detail

inline EntanglementReport logarithmic_negativity(const Eigen::MatrixXd& V_in) {
    const Eigen::Matrix4d V = detail::photon_phonon_block(V_in);
    if (!V.allFinite()) throw Error(ErrorKind::domain, "logarithmic_negativity: CM not finite");
    if ((V - V.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, V.cwiseAbs().maxCoeff()))
        throw Error(ErrorKind::domain, "logarithmic_negativity: CM not symmetric");

    const double det_a = V.topLeftCorner<2, 2>().determinant();
    const double det_b = V.bottomRightCorner<2, 2>().determinant();
    const double det_ab = V.topRightCorner<2, 2>().determinant();
    const double det_lu = V.determinant();
    // the symplectic route is undefined for indefinite V, keep the plain determinant there
    const double det_v = det_lu > 0.0 && V.ldlt().isPositive() ? detail::det_from_symplectic(V) : det_lu;

    EntanglementReport rep;
    rep.variant = LogNegVariant::exact;
    rep.P_val = det_a + det_b - 2.0 * det_ab;
    double disc = rep.P_val * rep.P_val - 4.0 * det_v;
    const double scale = rep.P_val * rep.P_val;
    if (disc < -1e-9 * scale) throw Error(ErrorKind::unphysical, "logarithmic_negativity: P^2 < 4 det V");
    disc = std::max(disc, 0.0);
    // P - sqrt(P^2 - 4 det V) written without cancellation
    const double denom = rep.P_val + std::sqrt(disc);
    if (!(denom > 0.0) || !(det_v > 0.0))
        throw Error(ErrorKind::unphysical, "logarithmic_negativity: non-positive determinant");
    const double two_nu_sq = 2.0 * 4.0 * det_v / denom;
    const double en_det = -0.5 * std::log(two_nu_sq);

    rep.nu_min = detail::pt_symplectic_min(V);
    const double en_sym = -std::log(2.0 * rep.nu_min);
    rep.cross_check = std::abs(en_det - en_sym);
    rep.E_N_raw = en_det;
    rep.E_N = std::max(0.0, en_det);
    return rep;
}

inline EntanglementReport logarithmic_negativity(const CovarianceState& s) {
    return logarithmic_negativity(s.V());
}

/// E_N from the three independent elements of a vacuum-initial effective CM
/// (V22 = V11, V44 = V33, V24 = -V13).
inline EntanglementReport logneg_closed_form(double V11, double V33, double V13) {
    EntanglementReport rep;
    rep.variant = LogNegVariant::closed_form;
    rep.eta = V11 + V33;
    if (!(rep.eta > 0.0)) throw Error(ErrorKind::domain, "logneg_closed_form: V11 + V33 must be positive");
    rep.delta_prime = (4.0 * V13 * V13 - 4.0 * V11 * V33) / (rep.eta * rep.eta);
    if (rep.delta_prime < -1.0) throw Error(ErrorKind::unphysical, "logneg_closed_form: 1 + delta' < 0");
    // 1 - sqrt(1 + d) = -d / (1 + sqrt(1 + d))
    const double gap = -rep.delta_prime / (1.0 + std::sqrt(1.0 + rep.delta_prime));
    const double arg = rep.eta * gap;
    if (!(arg > 0.0)) throw Error(ErrorKind::unphysical, "logneg_closed_form: non-positive argument");
    rep.E_N_raw = -std::log(arg);
    rep.E_N = std::max(0.0, rep.E_N_raw);
    return rep;
}

inline EntanglementReport logneg_closed_form(const ClosedFormCM& cm) {
    return logneg_closed_form(cm.V11, cm.V33, cm.V13);
}

/// -ln(2 Delta X_phi) for a squeezed-quadrature variance.
inline EntanglementReport logneg_from_variance(double dx_phi) {
    if (!(dx_phi > 0.0)) throw Error(ErrorKind::domain, "logneg_from_variance: variance must be positive");
    EntanglementReport rep;
    rep.variant = LogNegVariant::asymptotic;
    rep.E_N_raw = -std::log(2.0 * dx_phi);
    rep.E_N = std::max(0.0, rep.E_N_raw);
    return rep;
}

/// Long-time E_N of the unstable regime: -ln(2 Delta X_phi(inf)).
inline EntanglementReport logneg_asymptotic(double g_eff, double kappa_a, double kappa_b, double N_a,
                                            double N_b) {
    if (g_eff * g_eff <= kappa_a * kappa_b)
        throw Error(ErrorKind::not_applicable,
                    "logneg_asymptotic: stable regime, use steady_state_cm and logarithmic_negativity");
    return logneg_from_variance(variance_Xphi_asymptotic(g_eff, kappa_a, kappa_b, N_a, N_b));
}

/// S = -10 log10(Delta X / 0.5); positive below the vacuum level.
inline double squeezing_level_db(double delta_x) {
    if (!(delta_x > 0.0)) throw Error(ErrorKind::domain, "squeezing_level_db: variance must be positive");
    return -10.0 * std::log10(delta_x / 0.5);
}

} // namespace magsq
