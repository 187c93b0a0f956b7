// One line per acceptance criterion; nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <magsq/cli/runner.hpp>
#include <magsq/magsq.hpp>

using namespace magsq;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s | %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    if (!pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool same_multiset(std::vector<Complex> a, std::vector<Complex> b, double tol) {
    if (a.size() != b.size()) return false;
    std::vector<bool> used(b.size(), false);
    for (const auto& x : a) {
        bool hit = false;
        for (std::size_t j = 0; j < b.size() && !hit; ++j)
            if (!used[j] && std::abs(x - b[j]) <= tol) used[j] = hit = true;
        if (!hit) return false;
    }
    return true;
}

struct CurveErrors {
    double worst_g = 0.0;   // worst ratio of relative error to its allowance
    double worst_d = 0.0;   // worst relative error of the shift
    double seconds = 0.0;
    bool ok = true;
};

// Coupling curve along g or G at Delta_m = 3 with the other coupling at 0.1.
CurveErrors coupling_curve(const std::string& axis, double r) {
    CurveErrors out;
    const auto t0 = std::chrono::steady_clock::now();
    for (double v : linspace(0.02, 0.3, 15)) {
        const double g = axis == "g" ? v : 0.1;
        const double G = axis == "G" ? v : 0.1;
        const auto m = LinearizedModel::from_couplings(3.0, r, g, G);
        try {
            const auto ex = extract_effective(m, cli::extraction_grid(m));
            const double ga = g_eff_analytic(m);
            const double da = delta_analytic(m);
            const double allow = v <= 0.2 + 1e-12 ? 0.10 : 0.20;
            out.worst_g = std::max(out.worst_g, std::abs(std::abs(ex.g_eff_num) - std::abs(ga)) / std::abs(ga) / allow);
            out.worst_d = std::max(out.worst_d, std::abs(ex.delta_num - da) / std::abs(da));
        } catch (const Error&) {
            out.ok = false;
        }
    }
    out.seconds = seconds_since(t0);
    return out;
}

} // namespace

int main() {
    // 1 and 2: coupling and shift curves
    {
        double worst_g = 0, worst_d = 0, slowest = 0;
        bool ok = true;
        for (const char* axis : {"g", "G"})
            for (double r : {0.0, 0.25}) {
                const auto c = coupling_curve(axis, r);
                worst_g = std::max(worst_g, c.worst_g);
                worst_d = std::max(worst_d, c.worst_d);
                slowest = std::max(slowest, c.seconds);
                ok = ok && c.ok;
            }
        report(1, "|g_eff| extraction vs analytic (10% for <=0.2, 20% above)", ok && worst_g <= 1.0 && slowest < 30.0,
               fmt("worst error / allowance %.3f, slowest curve %.2f s", worst_g, slowest));
        report(2, "delta extraction vs analytic within 20%", ok && worst_d <= 0.20,
               fmt("worst relative error %.4f", worst_d));
    }

    // 3: level attraction location
    {
        const auto m = LinearizedModel::from_couplings(3.0, 0.0, 0.1, 0.1);
        try {
            const auto ex = extract_effective(m, linspace(-1.2, -0.8, 4001));
            const double shift = ex.delta_a_star + 1.0;
            const double height = std::abs(ex.g_eff_num);
            report(3, "maximal splitting at -1 + 0.0100 +- 0.0015, height 0.0025 +- 10%",
                   std::abs(shift - 0.0100) <= 0.0015 && std::abs(height - 0.0025) <= 0.1 * 0.0025,
                   fmt("Delta_a* + 1 = %.6f, height = %.6f", shift, height));
        } catch (const Error& e) {
            report(3, "maximal splitting location", false, e.what());
        }
    }

    // 4: asymptotic squeezing with the dynamics preset
    {
        const auto t0 = std::chrono::steady_clock::now();
        const auto setup = cli::dynamics_setup(cli::make_preset("fig4").model);
        const auto& m = setup.model;
        const double ge = setup.effective.g_eff;
        const double asym = variance_Xphi_asymptotic(ge, m.kappa_a, m.kappa_b, m.N_a, m.N_b);
        const double tau = find_tau(ge, m.kappa_a, m.kappa_b, m.N_a, m.N_b).tau;
        const auto V = propagate_to(build_drift_full(m, setup.delta_a).A, build_diffusion(ModelKind::full, m).D,
                                    vacuum_cm(3), 2.0 * tau);
        const double full = variance_Xphi(V, setup.phi);
        const double s_db = squeezing_level_db(asym);
        const double secs = seconds_since(t0);
        report(4, "dX_phi(inf) = 0.0525 +- 0.0005, full model at 2 tau within 0.01, S = 9.8 +- 0.3 dB",
               std::abs(asym - 0.0525) <= 0.0005 && std::abs(full - asym) <= 0.01 && std::abs(s_db - 9.8) <= 0.3 &&
                   secs < 10.0,
               fmt("asymptote %.6f, full %.6f, S %.3f dB, %.2f s", asym, full, s_db, secs));
    }

    // 5: stable-regime bound
    {
        const double kb = 1e-5, ka = 100 * kb;
        const double c_min = stable_limit(ka, kb, 0, 0, -kb).C_min;
        std::mt19937 rng(2024);
        std::uniform_real_distribution<double> logk(std::log(1e-5), std::log(1e-2)), u(-1.0, 1.0);
        double max_s = -1e9, max_en = 0.0;
        int count = 0;
        while (count < 100) {
            const double a = std::exp(logk(rng)), b = std::exp(logk(rng));
            const double g = u(rng) * std::sqrt(a * b);
            if (!(g * g < a * b)) continue;
            const auto V = steady_state_cm(build_drift_effective(g, a, b), build_diffusion_effective(a, b, 0, 0));
            max_s = std::max(max_s, squeezing_level_db(variance_X(V)));
            max_en = std::max(max_en, logarithmic_negativity(V).E_N);
            ++count;
        }
        report(5, "C_min = 0.4950 +- 1e-6; stable sample S <= 3.02 dB, E_N <= 0.70",
               std::abs(c_min - 0.4950) <= 1e-6 && max_s <= 3.02 && max_en <= 0.70,
               fmt("C_min %.8f, max S %.4f dB, max E_N %.4f", c_min, max_s, max_en));
    }

    // 6: entanglement sweep
    {
        double min_en = 1e9;
        for (double g : {0.2, 0.25, 0.3}) {
            auto p = cli::fig4_model();
            p.g = p.G = g;
            const auto pt = cli::evaluate_entanglement(p);
            min_en = std::isnan(pt.E_N) ? -1.0 : std::min(min_en, pt.E_N);
        }
        // trough along Delta_m = omega_b on the Kerr axis of the (Delta_m, r) plane
        double trough = 1e9;
        for (double r : linspace(0.0, 0.4, 20)) {
            auto p = cli::fig4_model();
            p.delta_m = 1.0;
            p.r = r;
            const auto pt = cli::evaluate_entanglement(p);
            if (!std::isnan(pt.E_N)) trough = std::min(trough, pt.E_N);
        }
        auto grid = cli::make_preset("fig5a");
        grid.out_dir = "unused";
        const auto t0 = std::chrono::steady_clock::now();
        const auto res = cli::run_sweep2d(grid);
        const double secs = seconds_since(t0);
        report(6, "E_N(2 tau) > 2.5 for g = G in {0.2, 0.25, 0.3}; trough E_N <= 0.5 at Delta_m = 1; 20x20 < 120 s",
               min_en > 2.5 && trough <= 0.5 && secs < 120.0 && res.tables.count("sweep2d.csv") == 1,
               fmt("min E_N %.4f, trough %.4f, 20x20 grid %.2f s", min_en, trough, secs));
    }

    // 7: oracle equivalences
    {
        std::mt19937 rng(7);
        // (a) closed form vs propagator
        double worst_a = 0.0;
        {
            std::uniform_real_distribution<double> ka(1e-4, 2e-3), kb(1e-6, 1e-4), nn(0, 10), ge(-0.006, 0.006);
            std::vector<double> times;
            for (int i = 1; i <= 600; ++i) times.push_back(i);
            int done = 0;
            while (done < 20) {
                const double a = ka(rng), b = kb(rng), na = nn(rng), nb = nn(rng), g = ge(rng);
                if (std::abs(a * b - g * g) < 1e-3 * a * b) continue;
                const auto tr = propagate(build_drift_effective(g, a, b), build_diffusion_effective(a, b, na, nb),
                                          vacuum_cm(2), times);
                const auto k = closed_form_constants(g, a, b, na, nb);
                for (std::size_t i = 0; i < times.size(); ++i) {
                    const auto c = cm_closed_form(k, times[i]);
                    worst_a = std::max({worst_a, std::abs(c.V11 - tr.records[i].V11),
                                        std::abs(c.V33 - tr.records[i].V33), std::abs(c.V13 - tr.records[i].V13)});
                }
                ++done;
            }
        }
        // (b) analytic effective eigenvalues vs dense solve
        bool ok_b = true;
        {
            std::uniform_real_distribution<double> ge(-0.3, 0.3), da(-2, 0.5);
            for (int i = 0; i < 100; ++i) {
                const double g = ge(rng), d = da(rng);
                const auto an = eigenvalues_effective_analytic(g, d);
                Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(
                    Complex(0.0, -1.0) * build_effective(g, d).R.cast<Complex>(), false);
                const Eigen::VectorXcd ev = ces.eigenvalues();
                ok_b = ok_b && same_multiset({an.begin(), an.end()}, {ev.data(), ev.data() + 4}, 1e-9);
            }
        }
        // (c) Fock independence of the shift difference
        double worst_c = 0.0;
        {
            std::uniform_int_distribution<int> idx(0, 30);
            const auto m = LinearizedModel::from_couplings(3.0, 0.25, 0.1, 0.1);
            const auto ref = perturbation_shifts(m, -0.99, 0, 0, 0);
            for (int i = 0; i < 50; ++i) {
                const auto p = perturbation_shifts(m, -0.99, idx(rng), idx(rng), idx(rng));
                worst_c = std::max(worst_c, std::abs((p.epsilon1 - p.epsilon2) - (ref.epsilon1 - ref.epsilon2)));
            }
        }
        // (d) two-mode squeezed vacuum
        double worst_d = 0.0;
        for (double s : linspace(0.0, 2.0, 41)) {
            Eigen::MatrixXd V = Eigen::MatrixXd::Zero(4, 4);
            V(0, 0) = V(1, 1) = V(2, 2) = V(3, 3) = 0.5 * std::cosh(2 * s);
            V(0, 2) = V(2, 0) = 0.5 * std::sinh(2 * s);
            V(1, 3) = V(3, 1) = -0.5 * std::sinh(2 * s);
            worst_d = std::max(worst_d, std::abs(logarithmic_negativity(V).E_N - 2 * s));
        }
        report(7, "oracles: closed form 1e-8, eigenvalues 1e-9, Fock 1e-12, squeezed vacuum 1e-9",
               worst_a <= 1e-8 && ok_b && worst_c <= 1e-12 && worst_d <= 1e-9,
               fmt("(a) %.2e (c) %.2e (d) %.2e", worst_a, worst_c, worst_d) + (ok_b ? " (b) ok" : " (b) mismatch"));
    }

    // 8: tau
    {
        const auto setup = cli::dynamics_setup(cli::make_preset("fig4").model);
        const auto& m = setup.model;
        const double tau = find_tau(setup.effective.g_eff, m.kappa_a, m.kappa_b, m.N_a, m.N_b).tau;
        report(8, "tau in [275, 305]", tau >= 275.0 && tau <= 305.0, fmt("tau = %.3f", tau));
    }

    return failures == 0 ? 0 : 1;
}
