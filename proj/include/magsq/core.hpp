#pragma once

// Shared conventions: units, quadrature ordering, parameter containers and
// covariance-matrix primitives. Everything downstream works in units of the
// phonon frequency (omega_b = 1) with hbar = 1.

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace magsq {

using Complex = std::complex<double>;

enum class ErrorKind {
    domain,
    unsupported_dimension,
    infeasible_drive,
    hyperbolic_domain,
    singularity,
    instability,
    not_applicable,
    extraction_failure,
    unphysical,
    overflow,
    config,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::unsupported_dimension: return "unsupported_dimension";
    case ErrorKind::infeasible_drive: return "infeasible_drive";
    case ErrorKind::hyperbolic_domain: return "hyperbolic_domain";
    case ErrorKind::singularity: return "singularity";
    case ErrorKind::instability: return "instability";
    case ErrorKind::not_applicable: return "not_applicable";
    case ErrorKind::extraction_failure: return "extraction_failure";
    case ErrorKind::unphysical: return "unphysical";
    case ErrorKind::overflow: return "overflow";
    case ErrorKind::config: return "config";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

namespace constants {
// CODATA 2018 exact values; used only for thermal occupations.
inline constexpr double hbar = 1.054571817e-34;   // J s
inline constexpr double k_boltzmann = 1.380649e-23; // J / K
} // namespace constants

/// Physical inputs of the driven photon-magnon-phonon system.
///
/// Frequencies and rates are angular. Until normalize() is applied they may be
/// absolute (rad/s); afterwards they are in units of omega_b. Decay rates are
/// half-widths. drive_rabi is the photon drive Rabi rate.
struct SystemParams {
    double omega_a = 0.0;
    double omega_m = 0.0;
    double omega_b = 1.0;
    double K_m = 0.0;
    double g_ma = 0.0;
    double g_mb = 0.0;
    double drive_rabi = 0.0;
    double omega_d = 0.0;
    double kappa_a = 0.0;
    double kappa_m = 0.0;
    double kappa_b = 0.0;
    double N_a = 0.0;
    double N_m = 0.0;
    double N_b = 0.0;
    bool normalized = false;
};

inline void validate(const SystemParams& p) {
    const double values[] = {p.omega_a, p.omega_m, p.omega_b, p.K_m,     p.g_ma,
                             p.g_mb,    p.drive_rabi, p.omega_d, p.kappa_a, p.kappa_m,
                             p.kappa_b, p.N_a,     p.N_m,     p.N_b};
    for (double v : values) {
        if (!std::isfinite(v)) throw Error(ErrorKind::domain, "system parameters must be finite");
    }
    if (p.omega_b <= 0.0) throw Error(ErrorKind::domain, "omega_b must be positive");
    if (p.kappa_a < 0.0 || p.kappa_m < 0.0 || p.kappa_b < 0.0)
        throw Error(ErrorKind::domain, "decay rates must be non-negative");
    if (p.N_a < 0.0 || p.N_m < 0.0 || p.N_b < 0.0)
        throw Error(ErrorKind::domain, "thermal occupations must be non-negative");
}

/// Mean thermal occupation 1/(exp(hbar*omega/kT) - 1) for an absolute angular
/// frequency (rad/s) and temperature (K).
inline double thermal_occupation(double omega, double temperature) {
    if (!(omega > 0.0) || !std::isfinite(omega))
        throw Error(ErrorKind::domain, "thermal_occupation: omega must be positive");
    if (temperature < 0.0 || !std::isfinite(temperature))
        throw Error(ErrorKind::domain, "thermal_occupation: temperature must be non-negative");
    if (temperature == 0.0) return 0.0;
    const double x = constants::hbar * omega / (constants::k_boltzmann * temperature);
    return 1.0 / std::expm1(x);
}

/// Rescales every frequency and rate by omega_b. Idempotent.
inline SystemParams normalize(const SystemParams& params) {
    validate(params);
    if (params.normalized) return params;
    SystemParams p = params;
    const double s = params.omega_b;
    p.omega_a /= s;
    p.omega_m /= s;
    p.omega_b = 1.0;
    p.K_m /= s;
    p.g_ma /= s;
    p.g_mb /= s;
    p.drive_rabi /= s;
    p.omega_d /= s;
    p.kappa_a /= s;
    p.kappa_m /= s;
    p.kappa_b /= s;
    p.normalized = true;
    return p;
}

/// Linearized three-mode model in the Bogoliubov frame of the Kerr magnon.
///
/// delta_m is the Kerr-shifted magnon detuning (omega_m - omega_d - 2|K|); the
/// closed-form effective coupling and shift take this value. delta_m_bare keeps
/// omega_m - omega_d for reference. delta_m_prime = delta_m / cosh(2r).
struct LinearizedModel {
    double delta_a = -1.0;
    double delta_m = 3.0;
    double delta_m_bare = 3.0;
    double delta_m_prime = 3.0;
    double omega_b = 1.0;
    double r = 0.0;
    double theta = std::numbers::pi;
    double g = 0.0;
    double G = 0.0;
    double abs_K = 0.0;
    double kappa_a = 0.0;
    double kappa_b = 0.0;
    double kappa_m = 0.0;
    double N_a = 0.0;
    double N_b = 0.0;
    double N_m = 0.0;

    /// Builds a model directly from the linearized couplings (figure-style
    /// input). |K| is back-filled so that tanh(2r) * delta_m = 2|K|.
    static LinearizedModel from_couplings(double delta_m, double r, double g, double G,
                                          double delta_a = -1.0) {
        if (r < 0.0 || !std::isfinite(r)) throw Error(ErrorKind::domain, "r must be >= 0");
        LinearizedModel m;
        m.delta_m = delta_m;
        m.r = r;
        m.delta_m_prime = delta_m / std::cosh(2.0 * r);
        m.abs_K = 0.5 * std::tanh(2.0 * r) * delta_m;
        m.delta_m_bare = delta_m + 2.0 * m.abs_K;
        m.g = g;
        m.G = G;
        m.delta_a = delta_a;
        return m;
    }

    LinearizedModel& with_rates(double ka, double kb, double km) {
        kappa_a = ka;
        kappa_b = kb;
        kappa_m = km;
        return *this;
    }

    LinearizedModel& with_occupations(double na, double nb, double nm) {
        N_a = na;
        N_b = nb;
        N_m = nm;
        return *this;
    }
};

// ---------------------------------------------------------------------------
// Quadrature ordering: [X_a, Y_a, X_b, Y_b, X_m, Y_m]. The effective model uses
// the first four entries.

enum class Mode : int { a = 0, b = 1, m = 2 };
enum class Quadrature : int { X = 0, Y = 1 };

constexpr int quadrature_index(Mode mode, Quadrature q) {
    return 2 * static_cast<int>(mode) + static_cast<int>(q);
}

constexpr std::pair<Mode, Quadrature> quadrature_at(int index) {
    if (index < 0 || index > 5) throw Error(ErrorKind::domain, "quadrature index out of range");
    return {static_cast<Mode>(index / 2), static_cast<Quadrature>(index % 2)};
}

/// Symplectic form for n modes in the interleaved ordering: [X,Y] = i.
inline Eigen::MatrixXd symplectic_form(int n_modes) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
    for (int k = 0; k < n_modes; ++k) {
        s(2 * k, 2 * k + 1) = 1.0;
        s(2 * k + 1, 2 * k) = -1.0;
    }
    return s;
}

/// Symmetric covariance matrix of a zero-mean Gaussian state with time stamp.
class CovarianceState {
public:
    CovarianceState(double t, const Eigen::MatrixXd& v) : t_(t) {
        if (v.rows() != v.cols() || (v.rows() != 4 && v.rows() != 6))
            throw Error(ErrorKind::unsupported_dimension, "covariance matrix must be 4x4 or 6x6");
        if (!v.allFinite()) throw Error(ErrorKind::overflow, "covariance matrix is not finite");
        v_ = 0.5 * (v + v.transpose());
    }

    double t() const noexcept { return t_; }
    const Eigen::MatrixXd& V() const noexcept { return v_; }
    int dim() const noexcept { return static_cast<int>(v_.rows()); }
    int n_modes() const noexcept { return dim() / 2; }
    double operator()(int i, int j) const { return v_(i, j); }

private:
    double t_;
    Eigen::MatrixXd v_;
};

inline CovarianceState vacuum_cm(int n_modes) {
    if (n_modes != 2 && n_modes != 3)
        throw Error(ErrorKind::unsupported_dimension, "vacuum_cm supports 2 or 3 modes");
    return {0.0, 0.5 * Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes)};
}

/// Smallest eigenvalue of V + i*Sigma/2; non-negative for physical states.
inline double uncertainty_margin(const Eigen::MatrixXd& v) {
    const int n = static_cast<int>(v.rows());
    Eigen::MatrixXcd h = v.cast<Complex>();
    h += Complex(0.0, 0.5) * symplectic_form(n / 2).cast<Complex>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline double uncertainty_margin(const CovarianceState& s) { return uncertainty_margin(s.V()); }

inline bool is_physical(const CovarianceState& s, double tol = 1e-9) {
    return uncertainty_margin(s) >= -tol;
}

} // namespace magsq
