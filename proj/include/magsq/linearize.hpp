#pragma once

// Steady-state amplitudes of the driven system and construction of the
// linearized (Bogoliubov-rotated) model.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "core.hpp"

namespace magsq {

struct SteadyState {
    Complex a_ss{};
    Complex b_ss{};
    std::vector<Complex> m_roots;
    std::size_t selected = 0;
    /// Two roots nearly coincide (edge of the bistable window).
    bool near_double_root = false;

    Complex m_ss() const { return m_roots.at(selected); }
};

namespace detail {

inline double horner(double a3, double a2, double a1, double a0, double x) {
    return ((a3 * x + a2) * x + a1) * x + a0;
}

inline double polish_root(double a3, double a2, double a1, double a0, double x) {
    for (int it = 0; it < 8; ++it) {
        const double f = horner(a3, a2, a1, a0, x);
        const double df = (3.0 * a3 * x + 2.0 * a2) * x + a1;
        if (df == 0.0) break;
        const double step = f / df;
        const double next = x - step;
        if (!std::isfinite(next)) break;
        if (std::abs(horner(a3, a2, a1, a0, next)) > std::abs(f)) break;
        x = next;
        if (std::abs(step) <= 1e-16 * std::abs(x)) break;
    }
    return x;
}

/// Real roots of a3 x^3 + a2 x^2 + a1 x + a0 (depressed-cubic closed form,
/// followed by Newton polishing), ascending.
inline std::vector<double> real_cubic_roots(double a3, double a2, double a1, double a0) {
    std::vector<double> roots;
    if (a3 == 0.0) {
        if (a2 == 0.0) {
            if (a1 != 0.0) roots.push_back(-a0 / a1);
            return roots;
        }
        const double disc = a1 * a1 - 4.0 * a2 * a0;
        if (disc < 0.0) return roots;
        const double q = -0.5 * (a1 + std::copysign(std::sqrt(disc), a1));
        if (q != 0.0) roots.push_back(a0 / q);
        roots.push_back(q / a2);
        std::sort(roots.begin(), roots.end());
        return roots;
    }
    const double b = a2 / a3;
    const double c = a1 / a3;
    const double d = a0 / a3;
    const double shift = b / 3.0;
    const double p = c - b * b / 3.0;
    const double q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    const double disc = q * q / 4.0 + p * p * p / 27.0;
    if (disc > 0.0) {
        const double s = std::sqrt(disc);
        const double u = std::cbrt(-q / 2.0 + s);
        const double v = std::cbrt(-q / 2.0 - s);
        roots.push_back(u + v - shift);
    } else if (p == 0.0) {
        roots.push_back(-shift);
    } else {
        const double m = 2.0 * std::sqrt(-p / 3.0);
        const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
        const double phi = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k)
            roots.push_back(m * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0) - shift);
    }
    for (double& x : roots) x = polish_root(a3, a2, a1, a0, x);
    std::sort(roots.begin(), roots.end());
    return roots;
}

struct MagnonEquation {
    Complex drive_term;  // g*Omega / (i*Delta_a + kappa_a)
    Complex linear_term; // -(i*Delta_m + kappa_m) - g^2 / (i*Delta_a + kappa_a)
    double kerr;         // K_m + g_mb^2 omega_b / (kappa_b^2 + omega_b^2)
};

inline MagnonEquation magnon_equation(const SystemParams& p) {
    const double delta_a = p.omega_a - p.omega_d;
    const double delta_m = p.omega_m - p.omega_d;
    const Complex den(p.kappa_a, delta_a);
    MagnonEquation eq;
    eq.drive_term = p.g_ma * p.drive_rabi / den;
    eq.linear_term = -Complex(p.kappa_m, delta_m) - p.g_ma * p.g_ma / den;
    eq.kerr = p.K_m + p.g_mb * p.g_mb * p.omega_b / (p.kappa_b * p.kappa_b + p.omega_b * p.omega_b);
    return eq;
}

/// Newton refinement of x = |<m>|^2 on the factored form x (P^2 + (Q + 2 k x)^2) - |c|^2,
/// in extended precision; near a double root the expanded cubic loses too many digits.
inline double polish_magnon_root(double P, double Q, double k, double c2, double x0) {
    using ld = long double;
    const ld P2 = ld(P) * ld(P);
    auto h = [&](ld y) {
        const ld w = ld(Q) + 2.0L * ld(k) * y;
        return y * (P2 + w * w) - ld(c2);
    };
    ld x = x0;
    for (int it = 0; it < 30; ++it) {
        const ld w = ld(Q) + 2.0L * ld(k) * x;
        const ld f = h(x);
        const ld df = P2 + w * w + 4.0L * ld(k) * x * w;
        if (df == 0.0L || f == 0.0L) break;
        const ld next = x - f / df;
        if (!(next > 0.0L) || std::abs(h(next)) >= std::abs(f)) break;
        x = next;
    }
    return static_cast<double>(x);
}

/// <m> = c / (P + i (Q + 2 k x)) with the cancelling imaginary part formed in extended precision.
inline Complex magnon_from_norm(Complex c, double P, double Q, double k, double x) {
    using ld = long double;
    const std::complex<ld> alpha(ld(P), ld(Q) + 2.0L * ld(k) * ld(x));
    const std::complex<ld> m = std::complex<ld>(c.real(), c.imag()) / alpha;
    return {static_cast<double>(m.real()), static_cast<double>(m.imag())};
}

/// Newton on m (L + 2 i k |m|^2) - c in the real pair (Re m, Im m), extended precision.
inline Complex refine_magnon(Complex L, double k, Complex c, Complex m0) {
    using ld = long double;
    using cld = std::complex<ld>;
    const cld Ll(L.real(), L.imag()), cl(c.real(), c.imag());
    auto F = [&](cld m) { return m * (Ll + cld(0.0L, 2.0L * ld(k) * std::norm(m))) - cl; };
    cld m(m0.real(), m0.imag());
    cld f = F(m);
    for (int it = 0; it < 8; ++it) {
        // dF/du and dF/dv for m = u + i v
        const cld base = Ll + cld(0.0L, 2.0L * ld(k) * std::norm(m));
        const cld du = base + cld(0.0L, 4.0L * ld(k) * m.real()) * m;
        const cld dv = cld(0.0L, 1.0L) * base + cld(0.0L, 4.0L * ld(k) * m.imag()) * m;
        const ld j11 = du.real(), j12 = dv.real(), j21 = du.imag(), j22 = dv.imag();
        const ld det = j11 * j22 - j12 * j21;
        if (det == 0.0L) break;
        const ld su = (f.real() * j22 - j12 * f.imag()) / det;
        const ld sv = (j11 * f.imag() - j21 * f.real()) / det;
        const cld next(m.real() - su, m.imag() - sv);
        const cld fn = F(next);
        if (!(std::abs(fn) < std::abs(f))) break;
        m = next;
        f = fn;
    }
    return {static_cast<double>(m.real()), static_cast<double>(m.imag())};
}

} // namespace detail

/// Residual of the reduced magnon steady-state equation (phonon and photon
/// amplitudes eliminated) at a candidate amplitude m.
inline Complex steady_state_residual(const SystemParams& params, Complex m) {
    const SystemParams p = normalize(params);
    const auto eq = detail::magnon_equation(p);
    const double x = std::norm(m);
    return m * (eq.linear_term + Complex(0.0, 2.0 * eq.kerr * x)) - eq.drive_term;
}

/// Solves for the steady-state amplitudes. The magnon equation is reduced to a
/// real cubic in x = |<m>|^2; every positive root is returned, and the branch
/// with the smallest |<m>| (the one connected to <m> = 0 as the drive vanishes)
/// is selected.
inline SteadyState solve_steady_state(const SystemParams& params) {
    const SystemParams p = normalize(params);
    const double delta_a = p.omega_a - p.omega_d;
    if (p.kappa_a + std::abs(delta_a) <= 0.0)
        throw Error(ErrorKind::domain, "solve_steady_state: kappa_a + |Delta_a| must be positive");

    SteadyState ss;
    const Complex den_a(p.kappa_a, delta_a);
    const Complex den_b(p.kappa_b, p.omega_b);
    if (p.drive_rabi == 0.0) {
        ss.m_roots.push_back(0.0);
        return ss;
    }

    const auto eq = detail::magnon_equation(p);
    const double P = eq.linear_term.real();
    const double Q = eq.linear_term.imag();
    const double k = eq.kerr;
    const double c2 = std::norm(eq.drive_term);
    // x * |P + i(Q + 2 k x)|^2 = |c|^2
    const double a3 = 4.0 * k * k;
    const double a2 = 4.0 * k * Q;
    const double a1 = P * P + Q * Q;
    const double a0 = -c2;

    std::vector<double> xs;
    for (double x : detail::real_cubic_roots(a3, a2, a1, a0)) {
        if (x > 0.0 && std::isfinite(x)) xs.push_back(detail::polish_magnon_root(P, Q, k, c2, x));
    }
    xs.erase(std::unique(xs.begin(), xs.end(),
                         [](double u, double v) { return std::abs(u - v) <= 1e-14 * std::max(u, v); }),
             xs.end());
    if (xs.empty())
        throw Error(ErrorKind::infeasible_drive, "solve_steady_state: no positive magnon amplitude");

    for (double x : xs) {
        ss.m_roots.push_back(detail::refine_magnon(eq.linear_term, k, eq.drive_term,
                                                   detail::magnon_from_norm(eq.drive_term, P, Q, k, x)));
        const double df = (3.0 * a3 * x + 2.0 * a2) * x + a1;
        const double scale = std::abs(a3 * x * x * x) + std::abs(a2 * x * x) + std::abs(a1 * x) + c2;
        if (std::abs(df * x) < 1e-6 * scale) ss.near_double_root = true;
    }
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (xs[i] - xs[i - 1] < 1e-6 * xs[i]) ss.near_double_root = true;
    }
    ss.selected = 0; // xs ascending

    const Complex m = ss.m_ss();
    ss.a_ss = -(Complex(0.0, p.g_ma) * m + Complex(0.0, p.drive_rabi)) / den_a;
    ss.b_ss = -Complex(0.0, p.g_mb * std::norm(m)) / den_b;
    return ss;
}

/// Weak-coupling estimate |<m>| ~ g_ma * Omega / |Delta_m * Delta_a|.
inline double approx_magnon_amplitude(const SystemParams& params) {
    const SystemParams p = normalize(params);
    const double delta_a = p.omega_a - p.omega_d;
    const double delta_m = p.omega_m - p.omega_d;
    if (delta_a == 0.0 || delta_m == 0.0)
        throw Error(ErrorKind::domain, "approx_magnon_amplitude: detunings must be nonzero");
    return std::abs(p.g_ma * p.drive_rabi / (delta_m * delta_a));
}

inline double wrap_phase(double x) {
    const double two_pi = 2.0 * std::numbers::pi;
    x = std::fmod(x, two_pi);
    if (x <= -std::numbers::pi) x += two_pi;
    if (x > std::numbers::pi) x -= two_pi;
    return x;
}

/// Linearizes about the magnon amplitude m_ss. The Kerr term is absorbed by a
/// Bogoliubov rotation with tanh(2r) = 2|K| / (Delta_m - 2|K|), K = K_m <m>^2.
inline LinearizedModel build_linearized(const SystemParams& params, Complex m_ss) {
    const SystemParams p = normalize(params);
    if (m_ss == Complex(0.0) && (p.K_m != 0.0 || p.g_mb != 0.0))
        throw Error(ErrorKind::domain, "build_linearized: zero magnon amplitude cannot enhance couplings");

    LinearizedModel model;
    model.omega_b = p.omega_b;
    model.delta_a = p.omega_a - p.omega_d;
    model.delta_m_bare = p.omega_m - p.omega_d;
    model.g = p.g_ma;
    model.G = p.g_mb * std::abs(m_ss);
    model.kappa_a = p.kappa_a;
    model.kappa_b = p.kappa_b;
    model.kappa_m = p.kappa_m;
    model.N_a = p.N_a;
    model.N_b = p.N_b;
    model.N_m = p.N_m;

    const Complex K = p.K_m * m_ss * m_ss;
    model.abs_K = std::abs(K);
    model.theta = m_ss == Complex(0.0) ? std::numbers::pi : wrap_phase(2.0 * std::arg(m_ss));
    if (model.abs_K > 0.0) {
        const double mismatch = std::abs(wrap_phase(std::arg(K) - model.theta));
        if (mismatch > 1e-8)
            throw Error(ErrorKind::domain,
                        "build_linearized: phase of K inconsistent with <m> = |<m>| exp(i theta/2)");
    }

    model.delta_m = model.delta_m_bare - 2.0 * model.abs_K;
    if (model.abs_K > 0.0) {
        if (2.0 * model.abs_K >= model.delta_m)
            throw Error(ErrorKind::hyperbolic_domain,
                        "build_linearized: 2|K| >= shifted magnon detuning, linearization invalid");
        model.r = 0.5 * std::atanh(2.0 * model.abs_K / model.delta_m);
    }
    model.delta_m_prime = model.delta_m / std::cosh(2.0 * model.r);
    return model;
}

} // namespace magsq
