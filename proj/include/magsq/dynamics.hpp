#pragma once

// Covariance-matrix dynamics V' = A V + V A^T + D for the effective two-mode
// and full three-mode models: drift/diffusion construction, exact propagation,
// steady states, the vacuum-initial closed-form solution, squeezing variances
// and the optimal squeezing angle.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "core.hpp"
#include "liouvillian.hpp"

namespace magsq {

enum class ModelKind { effective, full };

struct DriftMatrix {
    Eigen::MatrixXd A;
    ModelKind kind = ModelKind::effective;
};

struct DiffusionMatrix {
    Eigen::MatrixXd D;
    ModelKind kind = ModelKind::effective;
};

inline DriftMatrix build_drift_effective(double g_eff, double kappa_a, double kappa_b) {
    if (kappa_a < 0.0 || kappa_b < 0.0) throw Error(ErrorKind::domain, "decay rates must be >= 0");
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4, 4);
    A(0, 0) = A(1, 1) = -kappa_a;
    A(2, 2) = A(3, 3) = -kappa_b;
    A(0, 2) = A(2, 0) = g_eff;
    A(1, 3) = A(3, 1) = -g_eff;
    return {std::move(A), ModelKind::effective};
}

/// A = R + diag(-kappa_a, -kappa_a, -kappa_b, -kappa_b, -e^{2r} kappa_m, -e^{2r} kappa_m).
inline DriftMatrix build_drift_full(const LinearizedModel& m, double delta_a) {
    Eigen::MatrixXd A = build_full(m, delta_a).R;
    const double km = std::exp(2.0 * m.r) * m.kappa_m;
    A(0, 0) -= m.kappa_a;
    A(1, 1) -= m.kappa_a;
    A(2, 2) -= m.kappa_b;
    A(3, 3) -= m.kappa_b;
    A(4, 4) -= km;
    A(5, 5) -= km;
    return {std::move(A), ModelKind::full};
}

inline DiffusionMatrix build_diffusion_effective(double kappa_a, double kappa_b, double N_a,
                                                 double N_b) {
    if (N_a < 0.0 || N_b < 0.0) throw Error(ErrorKind::domain, "occupations must be >= 0");
    Eigen::VectorXd d(4);
    d << kappa_a * (2 * N_a + 1), kappa_a * (2 * N_a + 1), kappa_b * (2 * N_b + 1),
        kappa_b * (2 * N_b + 1);
    return {d.asDiagonal(), ModelKind::effective};
}

inline DiffusionMatrix build_diffusion(ModelKind kind, const LinearizedModel& m) {
    if (kind == ModelKind::effective) return build_diffusion_effective(m.kappa_a, m.kappa_b, m.N_a, m.N_b);
    if (m.N_a < 0.0 || m.N_b < 0.0 || m.N_m < 0.0)
        throw Error(ErrorKind::domain, "occupations must be >= 0");
    const double km = std::exp(2.0 * m.r) * m.kappa_m;
    Eigen::VectorXd d(6);
    d << m.kappa_a * (2 * m.N_a + 1), m.kappa_a * (2 * m.N_a + 1), m.kappa_b * (2 * m.N_b + 1),
        m.kappa_b * (2 * m.N_b + 1), km * (2 * m.N_m + 1), km * (2 * m.N_m + 1);
    return {d.asDiagonal(), ModelKind::full};
}

inline double spectral_abscissa(const Eigen::MatrixXd& A) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    return es.eigenvalues().real().maxCoeff();
}

// ---------------------------------------------------------------------------
// Squeezing variances. Full 6x6 inputs use their photon-phonon block.

inline double variance_X(const Eigen::MatrixXd& V) {
    return 0.5 * (V(0, 0) + V(2, 2) + 2.0 * V(0, 2));
}

inline double variance_Xphi(const Eigen::MatrixXd& V, double phi) {
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    return c * c * V(0, 0) + s * s * V(2, 2) + std::sin(2.0 * phi) * V(0, 2);
}

inline double variance_X(const CovarianceState& s) { return variance_X(s.V()); }
inline double variance_Xphi(const CovarianceState& s, double phi) { return variance_Xphi(s.V(), phi); }

// ---------------------------------------------------------------------------
// Exact propagation

struct TrajectoryRecord {
    double dX = 0.0;
    double dX_phi = 0.0;
    double V11 = 0.0;
    double V33 = 0.0;
    double V13 = 0.0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<CovarianceState> states;
    std::vector<TrajectoryRecord> records;
    double phi = std::numbers::pi / 4.0;
    /// Smallest eigenvalue of V + i Sigma/2 seen along the trajectory.
    double min_uncertainty_margin = std::numeric_limits<double>::infinity();
    /// States with margin below -1e-9 (reported, not fatal).
    int unphysical_states = 0;
};

/// Discrete-time propagator of the Lyapunov equation. For a step h the pair
/// F = e^{Ah}, Q = int_0^h e^{As} D e^{A^T s} ds comes from one exponential of
/// the block matrix [[A, D], [0, -A^T]] h. Pairs are cached per step size;
/// long steps are split so the block exponential stays well scaled.
class LyapunovPropagator {
public:
    LyapunovPropagator(Eigen::MatrixXd A, Eigen::MatrixXd D) : A_(std::move(A)), D_(std::move(D)) {
        if (A_.rows() != A_.cols() || D_.rows() != A_.rows() || D_.cols() != A_.cols())
            throw Error(ErrorKind::domain, "propagator: A and D must be square and of equal size");
        if (!A_.allFinite() || !D_.allFinite()) throw Error(ErrorKind::domain, "propagator: non-finite input");
        norm_ = A_.cwiseAbs().colwise().sum().maxCoeff();
    }

    LyapunovPropagator(const DriftMatrix& A, const DiffusionMatrix& D) : LyapunovPropagator(A.A, D.D) {}

    int dim() const { return static_cast<int>(A_.rows()); }

    Eigen::MatrixXd step(const Eigen::MatrixXd& V, double h) const {
        if (h == 0.0) return V;
        const auto& fq = pair_for(h);
        Eigen::MatrixXd out = fq.F * V * fq.F.transpose() + fq.Q;
        if (!out.allFinite()) throw Error(ErrorKind::overflow, "propagator: covariance overflow");
        return 0.5 * (out + out.transpose());
    }

    CovarianceState advance(const CovarianceState& s, double t) const {
        if (t < s.t()) throw Error(ErrorKind::domain, "propagator: cannot step backwards");
        return {t, step(s.V(), t - s.t())};
    }

private:
    struct StepPair {
        double h;
        Eigen::MatrixXd F;
        Eigen::MatrixXd Q;
    };

    static constexpr double kMaxScaledNorm = 2.0;

    const StepPair& pair_for(double h) const {
        for (const auto& c : cache_) {
            if (std::abs(c.h - h) <= 1e-12 * std::abs(h)) return c;
        }
        StepPair p{h, {}, {}};
        int substeps = std::max(1, static_cast<int>(std::ceil(norm_ * h / kMaxScaledNorm)));
        for (int attempt = 0; attempt < 8; ++attempt, substeps *= 4) {
            compose(h, substeps, p.F, p.Q);
            if (p.F.allFinite() && p.Q.allFinite()) {
                if (cache_.size() >= 64) cache_.erase(cache_.begin());
                cache_.push_back(std::move(p));
                return cache_.back();
            }
        }
        throw Error(ErrorKind::overflow, "propagator: matrix exponential overflow");
    }

    void compose(double h, int substeps, Eigen::MatrixXd& F, Eigen::MatrixXd& Q) const {
        const int n = dim();
        const double hs = h / substeps;
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * n, 2 * n);
        M.topLeftCorner(n, n) = A_ * hs;
        M.topRightCorner(n, n) = D_ * hs;
        M.bottomRightCorner(n, n) = -A_.transpose() * hs;
        const Eigen::MatrixXd E = M.exp();
        const Eigen::MatrixXd Fs = E.topLeftCorner(n, n);
        Eigen::MatrixXd Qs = E.topRightCorner(n, n) * Fs.transpose();
        Qs = 0.5 * (Qs + Qs.transpose());
        F = Fs;
        Q = Qs;
        for (int k = 1; k < substeps; ++k) {
            Q = Fs * Q * Fs.transpose() + Qs;
            F = Fs * F;
        }
        Q = 0.5 * (Q + Q.transpose());
    }

    Eigen::MatrixXd A_;
    Eigen::MatrixXd D_;
    double norm_ = 0.0;
    // Not shared across threads; each worker builds its own propagator.
    mutable std::vector<StepPair> cache_;
};

inline TrajectoryRecord make_record(const Eigen::MatrixXd& V, double phi) {
    return {variance_X(V), variance_Xphi(V, phi), V(0, 0), V(2, 2), V(0, 2)};
}

/// Propagates V0 through the given times (monotone, first time >= V0.t()).
inline Trajectory propagate(const Eigen::MatrixXd& A, const Eigen::MatrixXd& D,
                            const CovarianceState& V0, const std::vector<double>& times,
                            double phi = std::numbers::pi / 4.0) {
    if (A.rows() != V0.dim()) throw Error(ErrorKind::domain, "propagate: dimension mismatch");
    if (times.empty()) throw Error(ErrorKind::domain, "propagate: empty time list");
    if (times.front() < V0.t()) throw Error(ErrorKind::domain, "propagate: times precede initial state");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) throw Error(ErrorKind::domain, "propagate: times must increase");
    }
    LyapunovPropagator prop(A, D);
    Trajectory tr;
    tr.phi = phi;
    tr.times = times;
    tr.states.reserve(times.size());
    CovarianceState cur = V0;
    for (double t : times) {
        cur = prop.advance(cur, t);
        const double margin = uncertainty_margin(cur);
        tr.min_uncertainty_margin = std::min(tr.min_uncertainty_margin, margin);
        if (margin < -1e-9) ++tr.unphysical_states;
        tr.records.push_back(make_record(cur.V(), phi));
        tr.states.push_back(cur);
    }
    return tr;
}

inline Trajectory propagate(const DriftMatrix& A, const DiffusionMatrix& D, const CovarianceState& V0,
                            const std::vector<double>& times, double phi = std::numbers::pi / 4.0) {
    return propagate(A.A, D.D, V0, times, phi);
}

/// Raw-matrix entry point starting at t = 0; V0 must already be symmetric.
inline Trajectory propagate(const Eigen::MatrixXd& A, const Eigen::MatrixXd& D, const Eigen::MatrixXd& V0,
                            const std::vector<double>& times, double phi = std::numbers::pi / 4.0) {
    if (V0.rows() != V0.cols()) throw Error(ErrorKind::domain, "propagate: V0 must be square");
    if ((V0 - V0.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, V0.cwiseAbs().maxCoeff()))
        throw Error(ErrorKind::domain, "propagate: V0 not symmetric");
    return propagate(A, D, CovarianceState(0.0, V0), times, phi);
}

/// Propagates V0 to a single final time.
inline CovarianceState propagate_to(const Eigen::MatrixXd& A, const Eigen::MatrixXd& D,
                                    const CovarianceState& V0, double t) {
    return LyapunovPropagator(A, D).advance(V0, t);
}

/// Solves A V + V A^T + D = 0 for Hurwitz A.
inline CovarianceState steady_state_cm(const Eigen::MatrixXd& A, const Eigen::MatrixXd& D) {
    const double abscissa = spectral_abscissa(A);
    if (!(abscissa < 0.0))
        throw Error(ErrorKind::instability,
                    "steady_state_cm: drift not Hurwitz (spectral abscissa " + std::to_string(abscissa) +
                        "), no invariant CM; requires g_eff^2 < kappa_a kappa_b");
    const int n = static_cast<int>(A.rows());
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd L(n * n, n * n);
    // column-major vec: vec(AV) = (I kron A) vec V, vec(V A^T) = (A kron I) vec V
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) L.block(i * n, j * n, n, n) = I(i, j) * A + A(i, j) * I;
    const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(D.data(), n * n);
    const Eigen::VectorXd v = L.partialPivLu().solve(rhs);
    Eigen::MatrixXd V = Eigen::Map<const Eigen::MatrixXd>(v.data(), n, n);
    return {std::numeric_limits<double>::infinity(), V};
}

inline CovarianceState steady_state_cm(const DriftMatrix& A, const DiffusionMatrix& D) {
    return steady_state_cm(A.A, D.D);
}

inline double lyapunov_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& D,
                                const Eigen::MatrixXd& V) {
    return (A * V + V * A.transpose() + D).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Vacuum-initial closed form of the effective model.

struct ClosedFormConstants {
    double g_eff = 0.0;
    double kappa_a = 0.0;
    double kappa_b = 0.0;
    double Omega_rate = 0.0;
    double sin_varphi = 0.0;
    double cos_varphi = 1.0;
    double C_plus = 0.0;
    double C_minus = 0.0;
    double C_zero = 0.0;
    double kappa_plus = 0.0;
    double kappa_minus = 0.0;
    double c_a = 0.0;
    double c_b = 0.0;
    double c = 0.0;
    double C_asym = 0.0; // steady value of Delta X
    double phi_opt = 0.0;

    double varphi() const { return std::atan2(sin_varphi, cos_varphi); }
    double kappa_sum() const { return kappa_a + kappa_b; }
};

/// Branch: cos(varphi) = 2 g_eff / Omega, sin(varphi) = (kappa_a - kappa_b) / Omega.
inline ClosedFormConstants closed_form_constants(double g_eff, double kappa_a, double kappa_b, double N_a,
                                                 double N_b) {
    if (kappa_a < 0.0 || kappa_b < 0.0 || N_a < 0.0 || N_b < 0.0)
        throw Error(ErrorKind::domain, "closed form: rates and occupations must be >= 0");
    const double det = kappa_a * kappa_b - g_eff * g_eff;
    if (std::abs(det) < 1e-14)
        throw Error(ErrorKind::singularity,
                    "closed form: kappa_a kappa_b ~ g_eff^2 (stability boundary), use propagate()");
    ClosedFormConstants k;
    k.g_eff = g_eff;
    k.kappa_a = kappa_a;
    k.kappa_b = kappa_b;
    const double ks = kappa_a + kappa_b;
    k.Omega_rate = std::hypot(2.0 * g_eff, kappa_a - kappa_b);
    if (k.Omega_rate > 0.0) {
        k.cos_varphi = 2.0 * g_eff / k.Omega_rate;
        k.sin_varphi = (kappa_a - kappa_b) / k.Omega_rate;
    }
    k.kappa_plus = kappa_a * (2 * N_a + 1) + kappa_b * (2 * N_b + 1);
    k.kappa_minus = kappa_a * (2 * N_a + 1) - kappa_b * (2 * N_b + 1);
    k.C_plus = (k.kappa_plus - k.sin_varphi * k.kappa_minus) / (4.0 * (k.Omega_rate - ks)) + 0.25;
    k.C_minus = -(k.kappa_plus + k.sin_varphi * k.kappa_minus) / (4.0 * (k.Omega_rate + ks)) + 0.25;
    k.C_zero = k.cos_varphi * k.kappa_minus / (2.0 * ks);
    k.c = g_eff * kappa_a * kappa_b * (N_a + N_b + 1) / (det * ks);
    k.c_a = N_a + 0.5 + g_eff / kappa_a * k.c;
    k.c_b = N_b + 0.5 + g_eff / kappa_b * k.c;
    k.C_asym = 0.5 * (N_a + N_b + 1) * kappa_a * kappa_b * (2 * g_eff + ks) / (det * ks);
    const double phi = 0.5 * (k.varphi() - 0.5 * std::numbers::pi);
    k.phi_opt = phi <= -0.5 * std::numbers::pi ? phi + std::numbers::pi : phi;
    return k;
}

struct ClosedFormCM {
    double V11 = 0.5;
    double V33 = 0.5;
    double V13 = 0.0;
    double V22 = 0.5;
    double V44 = 0.5;
    double V24 = 0.0;

    Eigen::MatrixXd matrix() const {
        Eigen::MatrixXd V = Eigen::MatrixXd::Zero(4, 4);
        V(0, 0) = V11;
        V(1, 1) = V22;
        V(2, 2) = V33;
        V(3, 3) = V44;
        V(0, 2) = V(2, 0) = V13;
        V(1, 3) = V(3, 1) = V24;
        return V;
    }
};

inline ClosedFormCM cm_closed_form(const ClosedFormConstants& k, double t) {
    const double ks = k.kappa_sum();
    const double e_plus = std::exp((k.Omega_rate - ks) * t);
    const double e_zero = std::exp(-ks * t);
    const double e_minus = std::exp(-(k.Omega_rate + ks) * t);
    const double s = k.sin_varphi;
    const double c = k.cos_varphi;
    ClosedFormCM out;
    out.V11 = k.C_plus * (1 - s) * e_plus - k.C_zero * c * e_zero + k.C_minus * (1 + s) * e_minus + k.c_a;
    out.V33 = k.C_plus * (1 + s) * e_plus + k.C_zero * c * e_zero + k.C_minus * (1 - s) * e_minus + k.c_b;
    out.V13 = k.C_plus * c * e_plus - k.C_zero * s * e_zero - k.C_minus * c * e_minus + k.c;
    out.V22 = out.V11;
    out.V44 = out.V33;
    out.V24 = -out.V13;
    return out;
}

inline ClosedFormCM cm_closed_form(double g_eff, double kappa_a, double kappa_b, double N_a, double N_b,
                                   double t) {
    return cm_closed_form(closed_form_constants(g_eff, kappa_a, kappa_b, N_a, N_b), t);
}

/// Delta X(t) in explicit exponential form.
inline double variance_X_closed(const ClosedFormConstants& k, double t) {
    const double ks = k.kappa_sum();
    return (1 + k.cos_varphi) * k.C_plus * std::exp((k.Omega_rate - ks) * t) -
           k.sin_varphi * k.C_zero * std::exp(-ks * t) +
           (1 - k.cos_varphi) * k.C_minus * std::exp(-(k.Omega_rate + ks) * t) + k.C_asym;
}

inline double variance_X_closed_rate(const ClosedFormConstants& k, double t) {
    const double ks = k.kappa_sum();
    const double grow = k.Omega_rate - ks;
    const double fast = k.Omega_rate + ks;
    return (1 + k.cos_varphi) * k.C_plus * grow * std::exp(grow * t) +
           k.sin_varphi * k.C_zero * ks * std::exp(-ks * t) -
           (1 - k.cos_varphi) * k.C_minus * fast * std::exp(-fast * t);
}

struct OptimalAngle {
    double phi = std::numbers::pi / 4.0;
    bool degenerate = false;
};

/// Quadrature angle that cancels the exponentially growing term:
/// tan(2 phi) = 2 g_eff / (kappa_b - kappa_a), phi in (-pi/2, pi/2].
inline OptimalAngle optimal_angle(double g_eff, double kappa_a, double kappa_b) {
    if (g_eff == 0.0 && kappa_a == kappa_b) return {std::numbers::pi / 4.0, true};
    const double varphi = std::atan2(kappa_a - kappa_b, 2.0 * g_eff);
    double phi = 0.5 * (varphi - 0.5 * std::numbers::pi);
    if (phi <= -0.5 * std::numbers::pi) phi += std::numbers::pi;
    return {phi, false};
}

/// Delta X_phi(t) at the optimal angle: 1/2 + 2 C_- e^{-(Omega + kappa_a + kappa_b) t} - 2 C_-.
inline double variance_Xphi_closed(double g_eff, double kappa_a, double kappa_b, double N_a, double N_b,
                                   double t) {
    const auto k = closed_form_constants(g_eff, kappa_a, kappa_b, N_a, N_b);
    return 0.5 + 2.0 * k.C_minus * std::exp(-(k.Omega_rate + k.kappa_sum()) * t) - 2.0 * k.C_minus;
}

/// Long-time limit [Omega kappa_+ + (kappa_a - kappa_b) kappa_-] / [2 Omega (Omega + kappa_a + kappa_b)].
inline double variance_Xphi_asymptotic(double g_eff, double kappa_a, double kappa_b, double N_a, double N_b) {
    const double omega = std::hypot(2.0 * g_eff, kappa_a - kappa_b);
    if (omega == 0.0) throw Error(ErrorKind::singularity, "variance_Xphi_asymptotic: Omega = 0");
    const double kp = kappa_a * (2 * N_a + 1) + kappa_b * (2 * N_b + 1);
    const double km = kappa_a * (2 * N_a + 1) - kappa_b * (2 * N_b + 1);
    return (omega * kp + (kappa_a - kappa_b) * km) / (2.0 * omega * (omega + kappa_a + kappa_b));
}

struct StableLimit {
    double C = 0.0;
    double C_min = 0.0;
    bool is_stable = false;
};

/// Steady Delta X and its minimum over g_eff. The minimum sits at
/// g_eff = -min(kappa_a, kappa_b); for kappa_a > kappa_b it is
/// (N_a + N_b + 1) kappa_a / (2 (kappa_a + kappa_b)).
inline StableLimit stable_limit(double kappa_a, double kappa_b, double N_a, double N_b, double g_eff) {
    if (!(kappa_a > 0.0) || !(kappa_b > 0.0)) throw Error(ErrorKind::domain, "stable_limit: rates must be > 0");
    StableLimit s;
    const double ks = kappa_a + kappa_b;
    const double det = kappa_a * kappa_b - g_eff * g_eff;
    s.C = 0.5 * (N_a + N_b + 1) * kappa_a * kappa_b * (2 * g_eff + ks) / (det * ks);
    s.C_min = 0.5 * (N_a + N_b + 1) * std::max(kappa_a, kappa_b) / ks;
    s.is_stable = g_eff * g_eff < kappa_a * kappa_b;
    return s;
}

struct TauResult {
    double tau = 0.0;
    double dX_min = 0.0;
    /// g_eff used for the X = (X_a + X_b)/sqrt2 quadrature (always <= 0).
    double g_eff_used = 0.0;
};

/// Time at which Delta X(t) reaches its interior minimum in the unstable
/// regime. A positive g_eff squeezes X_a - X_b instead; by the b -> -b
/// symmetry it is mapped to -|g_eff|.
inline TauResult find_tau(double g_eff, double kappa_a, double kappa_b, double N_a, double N_b) {
    if (g_eff * g_eff <= kappa_a * kappa_b)
        throw Error(ErrorKind::not_applicable, "find_tau: stable regime, Delta X has no interior minimum");
    const double g = -std::abs(g_eff);
    const auto k = closed_form_constants(g, kappa_a, kappa_b, N_a, N_b);
    const double grow = k.Omega_rate - k.kappa_sum();
    const double fast = k.Omega_rate + k.kappa_sum();
    const double t_max = 600.0 / grow;

    double t_prev = 0.0;
    double f_prev = variance_X_closed_rate(k, 0.0);
    double t = 1e-3 / fast;
    double lo = -1.0;
    double hi = -1.0;
    while (t <= t_max) {
        const double f = variance_X_closed_rate(k, t);
        if (f_prev < 0.0 && f >= 0.0) {
            lo = t_prev;
            hi = t;
            break;
        }
        t_prev = t;
        f_prev = f;
        t *= 1.05;
    }
    if (lo < 0.0) throw Error(ErrorKind::not_applicable, "find_tau: no interior minimum of Delta X");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (variance_X_closed_rate(k, mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    const double tau = std::abs(variance_X_closed_rate(k, lo)) < std::abs(variance_X_closed_rate(k, hi)) ? lo : hi;
    return {tau, variance_X_closed(k, tau), g};
}

} // namespace magsq
