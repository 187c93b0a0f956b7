#pragma once

// Scenario execution. Each run_* function is pure: it returns tables, SVG
// documents and a JSON summary; run() writes them and maps failures to exit codes.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "../magsq.hpp"
#include "config.hpp"
#include "output.hpp"

namespace magsq::cli {

inline constexpr const char* kArtifactName = "magsq-simulate";
inline constexpr const char* kArtifactVersion = "0.1.0";

enum ExitCode : int { exit_ok = 0, exit_other = 1, exit_config = 2, exit_numerical = 3, exit_extraction = 4 };

inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::config: return exit_config;
    case ErrorKind::extraction_failure: return exit_extraction;
    default: return exit_numerical;
    }
}

struct RunResult {
    std::map<std::string, CsvTable> tables;
    std::map<std::string, std::string> svgs;
    json summary = json::object();
};

inline LinearizedModel to_model(const ModelParams& p) {
    LinearizedModel m = LinearizedModel::from_couplings(p.delta_m, p.r, p.g, p.G);
    m.with_rates(p.kappa_a, p.kappa_b, p.kappa_m).with_occupations(p.N_a, p.N_b, p.N_m);
    return m;
}

/// Photon detuning used for the full model: explicit value, else -omega_b + delta.
inline double resolve_delta_a(const ModelParams& p, const LinearizedModel& m) {
    if (p.delta_a) return *p.delta_a;
    return -m.omega_b + delta_analytic(m);
}

// ---------------------------------------------------------------------------

inline RunResult run_spectrum(const ScenarioConfig& c) {
    const LinearizedModel m = to_model(c.model);
    const auto grid = linspace(c.delta_a_grid.min, c.delta_a_grid.max, c.delta_a_grid.count);
    const SpectralSweep s = sweep(m, grid, c.threads);

    std::vector<std::string> header{"delta_a"};
    for (int k = 1; k <= s.dim; ++k) header.push_back("re_" + std::to_string(k));
    for (int k = 1; k <= s.dim; ++k) header.push_back("im_" + std::to_string(k));
    CsvTable t(header);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::vector<double> row{grid[i]};
        for (int k = 0; k < s.dim; ++k) row.push_back(s.branches[k][i].real());
        for (int k = 0; k < s.dim; ++k) row.push_back(s.branches[k][i].imag());
        t.add_numbers(row);
    }

    RunResult r;
    r.summary["ambiguous_steps"] = s.ambiguous_steps;
    r.summary["pairing"] = s.pairing;
    if (!s.pairing.empty()) {
        const auto ex = extract_effective(m, s);
        r.summary["g_eff_num"] = ex.g_eff_num;
        r.summary["delta_num"] = ex.delta_num;
        r.summary["delta_a_star"] = ex.delta_a_star;
    }
    try {
        r.summary["g_eff_analytic"] = g_eff_analytic(m);
        r.summary["delta_analytic"] = delta_analytic(m);
    } catch (const Error&) {
    }

    std::vector<Series> re, im;
    for (int k = 0; k < s.dim; ++k) {
        Series sr{"branch " + std::to_string(k + 1), grid, {}};
        Series si = sr;
        for (const auto& e : s.branches[k]) {
            sr.y.push_back(e.real());
            si.y.push_back(e.imag());
        }
        re.push_back(std::move(sr));
        im.push_back(std::move(si));
    }
    r.svgs["spectrum_re.svg"] = svg_line_plot("Re eigenvalues", "delta_a / omega_b", "Re / omega_b", re);
    r.svgs["spectrum_im.svg"] = svg_line_plot("Im eigenvalues", "delta_a / omega_b", "Im / omega_b", im);
    r.tables.emplace("spectrum.csv", std::move(t));
    return r;
}

/// Delta_a window around the predicted resonance, narrow enough to resolve the splitting peak.
inline std::vector<double> extraction_grid(const LinearizedModel& m) {
    try {
        const double ge = std::abs(g_eff_analytic(m));
        const double d = delta_analytic(m);
        const double half = 10.0 * ge + 0.5 * std::abs(d) + 1e-3;
        return linspace(-m.omega_b + d - half, -m.omega_b + d + half, 201);
    } catch (const Error&) {
        return linspace(-m.omega_b - 0.2, -m.omega_b + 0.2, 401);
    }
}

inline RunResult run_extract(const ScenarioConfig& c) {
    std::vector<double> series = c.series ? c.series_values : std::vector<double>{std::nan("")};
    const auto values = linspace(c.extract_axis.grid.min, c.extract_axis.grid.max, c.extract_axis.grid.count);
    struct Point {
        double series, value, ga, gn, da, dn, star;
    };
    std::vector<Point> points(series.size() * values.size());
    magsq::detail::parallel_for(points.size(), c.threads, [&](std::size_t idx) {
        const double sv = series[idx / values.size()];
        const double v = values[idx % values.size()];
        ModelParams p = c.model;
        if (c.series) set_param(p, c.series->name, sv);
        set_param(p, c.extract_axis.name, v);
        const LinearizedModel m = to_model(p);
        const auto ex = extract_effective(m, extraction_grid(m), 1);
        points[idx] = {sv, v, g_eff_analytic(m), ex.g_eff_num, delta_analytic(m), ex.delta_num, ex.delta_a_star};
    });

    const std::string sname = c.series ? c.series->name : "series";
    CsvTable t({sname, c.extract_axis.name, "g_eff_analytic", "g_eff_num", "delta_analytic", "delta_num",
                "delta_a_star"});
    std::vector<Series> gplot, dplot;
    for (std::size_t s = 0; s < series.size(); ++s) {
        const std::string tag = c.series ? sname + "=" + format_number(series[s]) : std::string();
        Series ga{"analytic " + tag, {}, {}}, gn{"numeric " + tag, {}, {}};
        Series da = ga, dn = gn;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const auto& pt = points[s * values.size() + i];
            t.add_numbers({pt.series, pt.value, pt.ga, pt.gn, pt.da, pt.dn, pt.star});
            for (Series* x : {&ga, &gn, &da, &dn}) x->x.push_back(pt.value);
            ga.y.push_back(std::abs(pt.ga));
            gn.y.push_back(std::abs(pt.gn));
            da.y.push_back(pt.da);
            dn.y.push_back(pt.dn);
        }
        gplot.push_back(ga);
        gplot.push_back(gn);
        dplot.push_back(da);
        dplot.push_back(dn);
    }
    RunResult r;
    double worst_g = 0.0, worst_d = 0.0;
    for (const auto& pt : points) {
        worst_g = std::max(worst_g, std::abs(std::abs(pt.gn) - std::abs(pt.ga)) / std::abs(pt.ga));
        worst_d = std::max(worst_d, std::abs(pt.dn - pt.da) / std::abs(pt.da));
    }
    r.summary["max_rel_err_g_eff"] = worst_g;
    r.summary["max_rel_err_delta"] = worst_d;
    r.svgs["extract_g_eff.svg"] = svg_line_plot("|g_eff|", c.extract_axis.name, "|g_eff| / omega_b", gplot);
    r.svgs["extract_delta.svg"] = svg_line_plot("delta", c.extract_axis.name, "delta / omega_b", dplot);
    r.tables.emplace("extract.csv", std::move(t));
    return r;
}

// ---------------------------------------------------------------------------

struct DynamicsSetup {
    LinearizedModel model;
    EffectiveModel effective;
    double delta_a = -1.0;
    double phi = std::numbers::pi / 4.0;
};

inline DynamicsSetup dynamics_setup(const ModelParams& p) {
    DynamicsSetup s;
    s.model = to_model(p);
    s.effective = make_effective(s.model);
    s.delta_a = resolve_delta_a(p, s.model);
    s.phi = optimal_angle(s.effective.g_eff, p.kappa_a, p.kappa_b).phi;
    return s;
}

inline RunResult run_dynamics(const ScenarioConfig& c) {
    const auto setup = dynamics_setup(c.model);
    const auto& m = setup.model;
    const double ge = setup.effective.g_eff;
    const auto all_times = linspace(0.0, c.time.t_max, c.time.samples);
    const std::vector<double> times(all_times.begin() + 1, all_times.end());

    const auto A_eff = build_drift_effective(ge, m.kappa_a, m.kappa_b);
    const auto D_eff = build_diffusion(ModelKind::effective, m);
    const auto A_full = build_drift_full(m, setup.delta_a);
    const auto D_full = build_diffusion(ModelKind::full, m);
    const auto eff = propagate(A_eff, D_eff, vacuum_cm(2), times, setup.phi);
    const auto full = propagate(A_full, D_full, vacuum_cm(3), times, setup.phi);

    CsvTable cm({"t", "V11", "V33", "V13", "V11_full", "V33_full", "V13_full"});
    CsvTable ve({"t", "dX", "dX_phi", "S_db", "E_N"});
    CsvTable vf({"t", "dX", "dX_phi", "S_db", "E_N"});
    const Eigen::MatrixXd vac4 = vacuum_cm(2).V();
    const Eigen::MatrixXd vac6 = vacuum_cm(3).V();
    auto add = [](CsvTable& t, double time, const TrajectoryRecord& rec, const Eigen::MatrixXd& V) {
        t.add_numbers({time, rec.dX, rec.dX_phi, squeezing_level_db(rec.dX_phi), logarithmic_negativity(V).E_N});
    };
    cm.add_numbers({0.0, 0.5, 0.5, 0.0, 0.5, 0.5, 0.0});
    add(ve, 0.0, make_record(vac4, setup.phi), vac4);
    add(vf, 0.0, make_record(vac6, setup.phi), vac6);
    Series sx{"dX effective", {0.0}, {0.5}}, sp{"dX_phi effective", {0.0}, {0.5}};
    Series fx{"dX full", {0.0}, {0.5}}, fp{"dX_phi full", {0.0}, {0.5}};
    for (std::size_t i = 0; i < times.size(); ++i) {
        const auto& e = eff.records[i];
        const auto& f = full.records[i];
        cm.add_numbers({times[i], e.V11, e.V33, e.V13, f.V11, f.V33, f.V13});
        add(ve, times[i], e, eff.states[i].V());
        add(vf, times[i], f, full.states[i].V());
        for (Series* s : {&sx, &sp, &fx, &fp}) s->x.push_back(times[i]);
        sx.y.push_back(e.dX);
        sp.y.push_back(e.dX_phi);
        fx.y.push_back(f.dX);
        fp.y.push_back(f.dX_phi);
    }

    RunResult r;
    r.summary["g_eff"] = ge;
    r.summary["delta"] = setup.effective.delta;
    r.summary["delta_a"] = setup.delta_a;
    r.summary["phi"] = setup.phi;
    r.summary["validity_max_ratio"] = setup.effective.validity.max_ratio();
    r.summary["stable"] = ge * ge < m.kappa_a * m.kappa_b;
    r.summary["dX_phi_final"] = eff.records.back().dX_phi;
    r.summary["dX_phi_final_full"] = full.records.back().dX_phi;
    r.summary["min_uncertainty_margin_full"] = full.min_uncertainty_margin;
    if (ge * ge > m.kappa_a * m.kappa_b) {
        const double asym = variance_Xphi_asymptotic(ge, m.kappa_a, m.kappa_b, m.N_a, m.N_b);
        const auto tau = find_tau(ge, m.kappa_a, m.kappa_b, m.N_a, m.N_b);
        r.summary["dX_phi_asymptotic"] = asym;
        r.summary["S_db_asymptotic"] = squeezing_level_db(asym);
        r.summary["E_N_asymptotic"] = logneg_asymptotic(ge, m.kappa_a, m.kappa_b, m.N_a, m.N_b).E_N;
        r.summary["tau"] = tau.tau;
        r.summary["dX_tau"] = tau.dX_min;
    }
    r.svgs["variances.svg"] = svg_line_plot("Quadrature variances", "omega_b t", "variance", {sx, sp, fx, fp});
    r.tables.emplace("cm_elements.csv", std::move(cm));
    r.tables.emplace("variances.csv", std::move(ve));
    r.tables.emplace("variances_full.csv", std::move(vf));
    return r;
}

// ---------------------------------------------------------------------------

struct SweepPoint {
    double E_N = std::numeric_limits<double>::quiet_NaN();
    std::string status;
};

/// E_N of the full model for one parameter set: at t = 2 tau in the unstable
/// regime, from the steady CM in the stable one.
inline SweepPoint evaluate_entanglement(const ModelParams& p) {
    try {
        const auto setup = dynamics_setup(p);
        const auto& m = setup.model;
        const double ge = setup.effective.g_eff;
        const auto A = build_drift_full(m, setup.delta_a);
        const auto D = build_diffusion(ModelKind::full, m);
        if (ge * ge > m.kappa_a * m.kappa_b) {
            const auto tau = find_tau(ge, m.kappa_a, m.kappa_b, m.N_a, m.N_b);
            const auto V = propagate_to(A.A, D.D, vacuum_cm(3), 2.0 * tau.tau);
            return {logarithmic_negativity(V).E_N, "ok"};
        }
        return {logarithmic_negativity(steady_state_cm(A, D)).E_N, "steady"};
    } catch (const Error& e) {
        return {std::numeric_limits<double>::quiet_NaN(), to_string(e.kind())};
    }
}

inline RunResult run_sweep2d(const ScenarioConfig& c) {
    const auto xs = linspace(c.axis1.grid.min, c.axis1.grid.max, c.axis1.grid.count);
    const auto ys = linspace(c.axis2.grid.min, c.axis2.grid.max, c.axis2.grid.count);
    std::vector<SweepPoint> points(xs.size() * ys.size());
    magsq::detail::parallel_for(points.size(), c.threads, [&](std::size_t idx) {
        ModelParams p = c.model;
        set_param(p, c.axis1.name, xs[idx / ys.size()]);
        set_param(p, c.axis2.name, ys[idx % ys.size()]);
        points[idx] = evaluate_entanglement(p);
    });

    CsvTable t({"axis1", "axis2", "E_N", "status"});
    std::size_t failed = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < ys.size(); ++j) {
            const auto& pt = points[i * ys.size() + j];
            if (std::isnan(pt.E_N)) ++failed;
            t.add_row({format_number(xs[i]), format_number(ys[j]), format_number(pt.E_N), pt.status});
        }

    std::vector<Series> rows;
    for (std::size_t j : {std::size_t{0}, ys.size() / 2, ys.size() - 1}) {
        Series s{c.axis2.name + "=" + format_number(ys[j]), xs, {}};
        for (std::size_t i = 0; i < xs.size(); ++i) s.y.push_back(points[i * ys.size() + j].E_N);
        if (rows.empty() || rows.back().label != s.label) rows.push_back(std::move(s));
    }
    RunResult r;
    r.summary["axis1"] = c.axis1.name;
    r.summary["axis2"] = c.axis2.name;
    r.summary["failed_points"] = failed;
    r.svgs["sweep2d.svg"] = svg_line_plot("E_N", c.axis1.name, "E_N", rows);
    r.tables.emplace("sweep2d.csv", std::move(t));
    return r;
}

// ---------------------------------------------------------------------------

inline RunResult run_steady(const ScenarioConfig& c) {
    const auto ss = solve_steady_state(*c.system);
    CsvTable t({"root", "abs_m", "m_re", "m_im", "selected"});
    for (std::size_t i = 0; i < ss.m_roots.size(); ++i) {
        const Complex m = ss.m_roots[i];
        t.add_row({std::to_string(i), format_number(std::abs(m)), format_number(m.real()), format_number(m.imag()),
                   i == ss.selected ? "1" : "0"});
    }
    RunResult r;
    r.summary["a_ss"] = {ss.a_ss.real(), ss.a_ss.imag()};
    r.summary["b_ss"] = {ss.b_ss.real(), ss.b_ss.imag()};
    r.summary["near_double_root"] = ss.near_double_root;
    r.tables.emplace("steady.csv", std::move(t));
    return r;
}

inline RunResult run_linearize(const ScenarioConfig& c) {
    const auto ss = solve_steady_state(*c.system);
    const LinearizedModel m = build_linearized(*c.system, ss.m_ss());
    CsvTable t({"quantity", "value"});
    auto put = [&](const std::string& k, double v) { t.add_row({k, format_number(v)}); };
    put("abs_m", std::abs(ss.m_ss()));
    put("delta_a", m.delta_a);
    put("delta_m", m.delta_m);
    put("delta_m_prime", m.delta_m_prime);
    put("abs_K", m.abs_K);
    put("r", m.r);
    put("theta", m.theta);
    put("g", m.g);
    put("G", m.G);
    RunResult r;
    try {
        const auto e = make_effective(m);
        put("g_eff", e.g_eff);
        put("delta", e.delta);
        put("validity_max_ratio", e.validity.max_ratio());
        r.summary["effective_valid"] = e.validity.valid;
    } catch (const Error& e) {
        r.summary["effective_error"] = e.what();
    }
    r.tables.emplace("linearize.csv", std::move(t));
    return r;
}

inline RunResult run_scenario(const ScenarioConfig& c) {
    switch (c.kind) {
    case ScenarioKind::spectrum: return run_spectrum(c);
    case ScenarioKind::extract: return run_extract(c);
    case ScenarioKind::dynamics: return run_dynamics(c);
    case ScenarioKind::sweep2d: return run_sweep2d(c);
    case ScenarioKind::steady: return run_steady(c);
    case ScenarioKind::linearize: return run_linearize(c);
    }
    throw Error(ErrorKind::config, "unhandled scenario");
}

/// Runs and writes all artifacts. On failure nothing is left behind.
inline int run(const ScenarioConfig& c, std::string* message = nullptr) {
    try {
        const RunResult r = run_scenario(c);
        OutputSet out(c.out_dir);
        json files = json::array();
        for (const auto& [name, table] : r.tables) {
            out.write(name, table.str());
            files.push_back(name);
        }
        if (c.svg) {
            for (const auto& [name, doc] : r.svgs) {
                out.write(name, doc);
                files.push_back(name);
            }
        }
        json manifest{{"artifact", kArtifactName}, {"version", kArtifactVersion}, {"config", to_json(c)},
                      {"files", files},           {"summary", r.summary}};
        out.write("manifest.json", manifest.dump(2) + "\n");
        out.commit();
        return exit_ok;
    } catch (const Error& e) {
        if (message) *message = std::string(to_string(e.kind())) + ": " + e.what();
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        if (message) *message = e.what();
        return exit_other;
    }
}

} // namespace magsq::cli
