#pragma once

// Scenario configuration: presets, JSON ingestion and parameter resolution.

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "../core.hpp"

namespace magsq::cli {

using nlohmann::json;

enum class ScenarioKind { spectrum, extract, dynamics, sweep2d, steady, linearize };

inline const char* to_string(ScenarioKind k) {
    switch (k) {
    case ScenarioKind::spectrum: return "spectrum";
    case ScenarioKind::extract: return "extract";
    case ScenarioKind::dynamics: return "dynamics";
    case ScenarioKind::sweep2d: return "sweep2d";
    case ScenarioKind::steady: return "steady";
    case ScenarioKind::linearize: return "linearize";
    }
    return "unknown";
}

inline ScenarioKind parse_scenario(const std::string& name) {
    static const std::map<std::string, ScenarioKind> table{
        {"spectrum", ScenarioKind::spectrum}, {"extract", ScenarioKind::extract},
        {"dynamics", ScenarioKind::dynamics}, {"sweep2d", ScenarioKind::sweep2d},
        {"steady", ScenarioKind::steady},     {"linearize", ScenarioKind::linearize}};
    const auto it = table.find(name);
    if (it == table.end()) throw Error(ErrorKind::config, "unknown scenario '" + name + "'");
    return it->second;
}

struct GridSpec {
    double min = 0.0;
    double max = 0.0;
    int count = 2;
};

struct Axis {
    std::string name;
    GridSpec grid;
};

struct TimeSpec {
    double t_max = 600.0;
    int samples = 601;
};

/// Parameters of the linearized model in units of omega_b.
struct ModelParams {
    double delta_m = 3.0;
    double r = 0.0;
    double g = 0.1;
    double G = 0.1;
    std::optional<double> delta_a; // default: -omega_b + delta (resonance)
    double kappa_a = 1e-3;
    double kappa_b = 1e-5;
    double kappa_m = 1e-2;
    double N_a = 0.0;
    double N_b = 0.0;
    double N_m = 0.0;
};

struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::dynamics;
    std::string preset = "none";
    ModelParams model;
    /// Driven-system inputs; used by the steady and linearize scenarios.
    std::optional<SystemParams> system;
    /// Photon detuning grid for spectrum.
    GridSpec delta_a_grid{-1.2, -0.8, 401};
    /// Swept parameter for extract, and optional series of curves.
    Axis extract_axis{"g", {0.02, 0.3, 15}};
    std::optional<Axis> series;
    std::vector<double> series_values;
    /// Plane for sweep2d.
    Axis axis1{"g", {0.05, 0.3, 20}};
    Axis axis2{"G", {0.05, 0.3, 20}};
    TimeSpec time;
    std::string out_dir = "out";
    unsigned threads = 1;
    bool svg = false;
};

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"fig2",  "fig3a", "fig3b", "fig3c", "fig3d", "fig3e",
                                                "fig3f", "fig4",  "fig5a", "fig5b", "none"};
    return names;
}

/// Damping and thermal occupations shared by the dynamics figures.
inline ModelParams fig4_model() {
    ModelParams p;
    p.delta_m = 3.0;
    p.g = 0.1;
    p.G = 0.1;
    p.r = 0.25;
    p.kappa_b = 1e-5;
    p.kappa_a = 100.0 * p.kappa_b;
    p.kappa_m = 10.0 * p.kappa_a;
    p.N_a = 0.0;
    p.N_m = 0.0;
    p.N_b = 10.0;
    return p;
}

/// Fully resolved configuration for a preset; the scenario kind follows the figure.
inline ScenarioConfig make_preset(const std::string& name) {
    ScenarioConfig c;
    c.preset = name;
    if (name == "none") return c;
    if (name == "fig2") {
        c.kind = ScenarioKind::spectrum;
        c.model.delta_m = 3.0;
        c.model.g = 0.1;
        c.model.G = 0.1;
        c.model.r = 0.0;
        c.delta_a_grid = {-1.2, -0.8, 801};
        return c;
    }
    if (name.rfind("fig3", 0) == 0 && name.size() == 5) {
        c.kind = ScenarioKind::extract;
        c.model.delta_m = 3.0;
        c.model.g = 0.1;
        c.model.G = 0.1;
        const char panel = name[4];
        if (panel == 'a' || panel == 'b') {
            c.extract_axis = {"g", {0.02, 0.3, 15}};
            c.series = Axis{"r", {0.0, 0.25, 2}};
            c.series_values = {0.0, 0.25};
            return c;
        }
        if (panel == 'c' || panel == 'd') {
            c.extract_axis = {"G", {0.02, 0.3, 15}};
            c.series = Axis{"r", {0.0, 0.25, 2}};
            c.series_values = {0.0, 0.25};
            return c;
        }
        if (panel == 'e' || panel == 'f') {
            c.extract_axis = {"r", {0.0, 0.5, 11}};
            return c;
        }
    }
    if (name == "fig4") {
        c.kind = ScenarioKind::dynamics;
        c.model = fig4_model();
        c.time = {600.0, 601};
        return c;
    }
    if (name == "fig5a") {
        c.kind = ScenarioKind::sweep2d;
        c.model = fig4_model();
        c.axis1 = {"g", {0.05, 0.3, 20}};
        c.axis2 = {"G", {0.05, 0.3, 20}};
        return c;
    }
    if (name == "fig5b") {
        c.kind = ScenarioKind::sweep2d;
        c.model = fig4_model();
        c.axis1 = {"delta_m", {0.5, 4.0, 20}};
        c.axis2 = {"r", {0.0, 0.4, 20}};
        return c;
    }
    throw Error(ErrorKind::config, "unknown preset '" + name + "'");
}

// ---------------------------------------------------------------------------
// JSON ingestion

namespace detail {

inline double number(const json& j, const std::string& key) {
    if (!j.at(key).is_number()) throw Error(ErrorKind::config, "'" + key + "' must be a number");
    const double v = j.at(key).get<double>();
    if (!std::isfinite(v)) throw Error(ErrorKind::config, "'" + key + "' must be finite");
    return v;
}

inline void read_if(const json& j, const std::string& key, double& out) {
    if (j.contains(key)) out = number(j, key);
}

inline GridSpec read_grid(const json& j, const GridSpec& fallback) {
    if (!j.is_object()) throw Error(ErrorKind::config, "grid must be an object");
    GridSpec g = fallback;
    read_if(j, "min", g.min);
    read_if(j, "max", g.max);
    if (j.contains("count")) {
        if (!j.at("count").is_number_integer()) throw Error(ErrorKind::config, "'count' must be an integer");
        g.count = j.at("count").get<int>();
    }
    if (g.count < 1) throw Error(ErrorKind::config, "grid count must be >= 1");
    if (!(g.max >= g.min)) throw Error(ErrorKind::config, "grid max must be >= min");
    return g;
}

inline Axis read_axis(const json& j, const Axis& fallback) {
    Axis a = fallback;
    if (j.contains("name")) {
        if (!j.at("name").is_string()) throw Error(ErrorKind::config, "axis name must be a string");
        a.name = j.at("name").get<std::string>();
    }
    a.grid = read_grid(j, a.grid);
    return a;
}

inline const std::vector<std::string>& sweepable() {
    static const std::vector<std::string> names{"g",       "G",       "r",       "delta_m", "delta_a",
                                                "kappa_a", "kappa_b", "kappa_m", "N_a",     "N_b",
                                                "N_m"};
    return names;
}

inline void check_axis_name(const std::string& name) {
    for (const auto& s : sweepable())
        if (s == name) return;
    throw Error(ErrorKind::config, "axis '" + name + "' is not a sweepable parameter");
}

} // namespace detail

/// Sets a named model parameter.
inline void set_param(ModelParams& p, const std::string& name, double v) {
    if (name == "g") p.g = v;
    else if (name == "G") p.G = v;
    else if (name == "r") p.r = v;
    else if (name == "delta_m") p.delta_m = v;
    else if (name == "delta_a") p.delta_a = v;
    else if (name == "kappa_a") p.kappa_a = v;
    else if (name == "kappa_b") p.kappa_b = v;
    else if (name == "kappa_m") p.kappa_m = v;
    else if (name == "N_a") p.N_a = v;
    else if (name == "N_b") p.N_b = v;
    else if (name == "N_m") p.N_m = v;
    else throw Error(ErrorKind::config, "unknown parameter '" + name + "'");
}

inline void validate(const ScenarioConfig& c) {
    const auto& m = c.model;
    if (m.r < 0.0) throw Error(ErrorKind::config, "r must be >= 0");
    if (m.kappa_a < 0.0 || m.kappa_b < 0.0 || m.kappa_m < 0.0)
        throw Error(ErrorKind::config, "decay rates must be >= 0");
    if (m.N_a < 0.0 || m.N_b < 0.0 || m.N_m < 0.0) throw Error(ErrorKind::config, "occupations must be >= 0");
    if (c.kind == ScenarioKind::dynamics && (!(c.time.t_max > 0.0) || c.time.samples < 2))
        throw Error(ErrorKind::config, "time spec needs t_max > 0 and samples >= 2");
    if (c.kind == ScenarioKind::spectrum && c.delta_a_grid.count < 3)
        throw Error(ErrorKind::config, "spectrum grid needs at least 3 points");
    if (c.kind == ScenarioKind::extract) {
        detail::check_axis_name(c.extract_axis.name);
        if (c.series) detail::check_axis_name(c.series->name);
    }
    if (c.kind == ScenarioKind::sweep2d) {
        detail::check_axis_name(c.axis1.name);
        detail::check_axis_name(c.axis2.name);
        if (c.axis1.name == c.axis2.name) throw Error(ErrorKind::config, "sweep axes must differ");
    }
    if ((c.kind == ScenarioKind::steady || c.kind == ScenarioKind::linearize) && !c.system)
        throw Error(ErrorKind::config, "steady/linearize scenarios need driven-system params");
    if (c.threads < 1) throw Error(ErrorKind::config, "threads must be >= 1");
}

namespace detail {

inline const std::vector<std::string>& system_keys() {
    static const std::vector<std::string> keys{"omega_a", "omega_m", "K_m", "g_ma", "g_mb", "drive_rabi",
                                               "omega_d"};
    return keys;
}

// frequency-like system keys, rescaled by omega_b when absolute units are used
inline const std::vector<std::string>& system_rate_keys() {
    static const std::vector<std::string> keys{"omega_a", "omega_m", "K_m",     "g_ma",    "g_mb",
                                               "drive_rabi", "omega_d", "kappa_a", "kappa_m", "kappa_b"};
    return keys;
}

inline void read_system(const json& params, const json* absolute, ScenarioConfig& c) {
    SystemParams s;
    s.omega_b = 1.0;
    double scale = 1.0;
    std::optional<double> temperature;
    if (absolute) {
        if (!absolute->is_object()) throw Error(ErrorKind::config, "'absolute_units' must be an object");
        if (!absolute->contains("omega_b")) throw Error(ErrorKind::config, "'absolute_units' needs omega_b");
        scale = number(*absolute, "omega_b");
        if (!(scale > 0.0)) throw Error(ErrorKind::config, "absolute omega_b must be positive");
        if (absolute->contains("temperature")) temperature = number(*absolute, "temperature");
    }
    std::map<std::string, double> v;
    for (const auto& k : system_rate_keys()) {
        double x = 0.0;
        read_if(params, k, x);
        v[k] = x / scale;
    }
    s.omega_a = v["omega_a"];
    s.omega_m = v["omega_m"];
    s.K_m = v["K_m"];
    s.g_ma = v["g_ma"];
    s.g_mb = v["g_mb"];
    s.drive_rabi = v["drive_rabi"];
    s.omega_d = v["omega_d"];
    s.kappa_a = v["kappa_a"];
    s.kappa_m = v["kappa_m"];
    s.kappa_b = v["kappa_b"];
    s.N_a = c.model.N_a;
    s.N_b = c.model.N_b;
    s.N_m = c.model.N_m;
    if (temperature) {
        if (!params.contains("N_a")) s.N_a = thermal_occupation(s.omega_a * scale, *temperature);
        if (!params.contains("N_m")) s.N_m = thermal_occupation(s.omega_m * scale, *temperature);
        if (!params.contains("N_b")) s.N_b = thermal_occupation(scale, *temperature);
    }
    s.normalized = true;
    magsq::validate(s);
    c.system = s;
    c.model.kappa_a = s.kappa_a;
    c.model.kappa_b = s.kappa_b;
    c.model.kappa_m = s.kappa_m;
    c.model.N_a = s.N_a;
    c.model.N_b = s.N_b;
    c.model.N_m = s.N_m;
}

} // namespace detail

/// Builds a configuration from a JSON document. A preset named in the
/// document (or passed in preset_override) is applied first; explicit values
/// then override it.
inline ScenarioConfig parse_config(const json& doc, const std::optional<std::string>& preset_override = {}) {
    if (!doc.is_object()) throw Error(ErrorKind::config, "config root must be an object");
    const json scenario = doc.value("scenario", json::object());
    const json params = doc.value("params", json::object());
    if (!scenario.is_object()) throw Error(ErrorKind::config, "'scenario' must be an object");
    if (!params.is_object()) throw Error(ErrorKind::config, "'params' must be an object");

    std::string preset = "none";
    if (scenario.contains("preset")) {
        if (!scenario.at("preset").is_string()) throw Error(ErrorKind::config, "'preset' must be a string");
        preset = scenario.at("preset").get<std::string>();
    }
    if (preset_override) preset = *preset_override;
    ScenarioConfig c = make_preset(preset);

    if (scenario.contains("name")) {
        if (!scenario.at("name").is_string()) throw Error(ErrorKind::config, "scenario 'name' must be a string");
        c.kind = parse_scenario(scenario.at("name").get<std::string>());
    }

    for (auto it = params.begin(); it != params.end(); ++it) {
        const std::string& key = it.key();
        bool known = false;
        for (const auto& k : detail::sweepable()) known = known || k == key;
        for (const auto& k : detail::system_keys()) known = known || k == key;
        if (!known && key != "omega_b") throw Error(ErrorKind::config, "unknown parameter '" + key + "'");
        if (!it.value().is_number()) throw Error(ErrorKind::config, "'" + key + "' must be a number");
    }
    const json* absolute = doc.contains("absolute_units") ? &doc.at("absolute_units") : nullptr;
    double scale = 1.0;
    if (absolute && absolute->is_object() && absolute->contains("omega_b"))
        scale = detail::number(*absolute, "omega_b");
    if (!(scale > 0.0)) throw Error(ErrorKind::config, "absolute omega_b must be positive");
    for (const auto& k : detail::sweepable()) {
        if (!params.contains(k)) continue;
        const bool dimensionless = k == "r" || k == "N_a" || k == "N_b" || k == "N_m";
        set_param(c.model, k, detail::number(params, k) / (dimensionless ? 1.0 : scale));
    }
    bool driven = false;
    for (const auto& k : detail::system_keys()) driven = driven || params.contains(k);
    if (driven) detail::read_system(params, absolute, c);

    if (scenario.contains("delta_a_grid")) c.delta_a_grid = detail::read_grid(scenario.at("delta_a_grid"), c.delta_a_grid);
    if (scenario.contains("axis")) c.extract_axis = detail::read_axis(scenario.at("axis"), c.extract_axis);
    if (scenario.contains("series")) {
        const json& s = scenario.at("series");
        if (s.is_null()) {
            c.series.reset();
            c.series_values.clear();
        } else {
            if (!s.is_object() || !s.contains("name") || !s.contains("values") || !s.at("values").is_array())
                throw Error(ErrorKind::config, "'series' needs name and a values array");
            c.series = Axis{s.at("name").get<std::string>(), {}};
            c.series_values.clear();
            for (const auto& v : s.at("values")) {
                if (!v.is_number()) throw Error(ErrorKind::config, "series values must be numbers");
                c.series_values.push_back(v.get<double>());
            }
            if (c.series_values.empty()) throw Error(ErrorKind::config, "series needs at least one value");
        }
    }
    if (scenario.contains("axis1")) c.axis1 = detail::read_axis(scenario.at("axis1"), c.axis1);
    if (scenario.contains("axis2")) c.axis2 = detail::read_axis(scenario.at("axis2"), c.axis2);
    if (scenario.contains("time")) {
        const json& t = scenario.at("time");
        if (!t.is_object()) throw Error(ErrorKind::config, "'time' must be an object");
        detail::read_if(t, "t_max", c.time.t_max);
        if (t.contains("samples")) {
            if (!t.at("samples").is_number_integer()) throw Error(ErrorKind::config, "'samples' must be an integer");
            c.time.samples = t.at("samples").get<int>();
        }
    }
    validate(c);
    return c;
}

/// Resolved configuration as JSON (used for the run manifest).
inline json to_json(const ScenarioConfig& c) {
    json params{{"delta_m", c.model.delta_m}, {"r", c.model.r},           {"g", c.model.g},
                {"G", c.model.G},             {"kappa_a", c.model.kappa_a}, {"kappa_b", c.model.kappa_b},
                {"kappa_m", c.model.kappa_m}, {"N_a", c.model.N_a},       {"N_b", c.model.N_b},
                {"N_m", c.model.N_m}};
    params["delta_a"] = c.model.delta_a ? json(*c.model.delta_a) : json("resonance");
    json j{{"scenario", to_string(c.kind)}, {"preset", c.preset}, {"params", params}, {"threads", c.threads}};
    auto grid = [](const GridSpec& g) { return json{{"min", g.min}, {"max", g.max}, {"count", g.count}}; };
    switch (c.kind) {
    case ScenarioKind::spectrum: j["delta_a_grid"] = grid(c.delta_a_grid); break;
    case ScenarioKind::extract:
        j["axis"] = {{"name", c.extract_axis.name}, {"grid", grid(c.extract_axis.grid)}};
        if (c.series) j["series"] = {{"name", c.series->name}, {"values", c.series_values}};
        break;
    case ScenarioKind::dynamics: j["time"] = {{"t_max", c.time.t_max}, {"samples", c.time.samples}}; break;
    case ScenarioKind::sweep2d:
        j["axis1"] = {{"name", c.axis1.name}, {"grid", grid(c.axis1.grid)}};
        j["axis2"] = {{"name", c.axis2.name}, {"grid", grid(c.axis2.grid)}};
        break;
    default: break;
    }
    if (c.system) {
        const auto& s = *c.system;
        j["system"] = {{"omega_a", s.omega_a}, {"omega_m", s.omega_m}, {"omega_b", s.omega_b},
                       {"K_m", s.K_m},         {"g_ma", s.g_ma},       {"g_mb", s.g_mb},
                       {"drive_rabi", s.drive_rabi}, {"omega_d", s.omega_d}, {"kappa_a", s.kappa_a},
                       {"kappa_m", s.kappa_m}, {"kappa_b", s.kappa_b}, {"N_a", s.N_a},
                       {"N_m", s.N_m},         {"N_b", s.N_b}};
    }
    return j;
}

} // namespace magsq::cli
