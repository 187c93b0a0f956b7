#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include <magsq/cli/runner.hpp>

namespace cli = magsq::cli;

int main(int argc, char** argv) {
    CLI::App app{"Photon-phonon squeezing simulator"};
    std::string scenario;
    std::optional<std::string> preset;
    std::optional<std::string> config_path;
    std::string out_dir = "out";
    unsigned threads = 1;
    bool svg = false;

    app.add_option("scenario", scenario,
                   "spectrum | extract | dynamics | sweep2d | steady | linearize | run (use the preset's scenario)")
        ->required();
    app.add_option("--preset", preset, "fig2, fig3a-f, fig4, fig5a, fig5b or none");
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--svg", svg, "also write SVG plots");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : cli::exit_config;
    }

    cli::ScenarioConfig config;
    try {
        cli::json doc = cli::json::object();
        if (config_path) {
            std::ifstream is(*config_path);
            if (!is) throw magsq::Error(magsq::ErrorKind::config, "cannot open " + *config_path);
            try {
                doc = cli::json::parse(is);
            } catch (const cli::json::exception& e) {
                throw magsq::Error(magsq::ErrorKind::config, std::string("malformed config: ") + e.what());
            }
            if (!doc.is_object()) throw magsq::Error(magsq::ErrorKind::config, "config root must be an object");
        }
        if (scenario != "run") {
            cli::parse_scenario(scenario);
            if (!doc.contains("scenario") || !doc["scenario"].is_object()) doc["scenario"] = cli::json::object();
            doc["scenario"]["name"] = scenario;
        }
        config = cli::parse_config(doc, preset);
        config.out_dir = out_dir;
        config.threads = threads;
        config.svg = svg;
    } catch (const magsq::Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cli::exit_code_for(e.kind());
    }

    std::string message;
    const int rc = cli::run(config, &message);
    if (rc != cli::exit_ok) {
        std::cerr << "error: " << message << "\n";
        return rc;
    }
    std::cout << "wrote " << to_string(config.kind) << " results to " << out_dir << "\n";
    return 0;
}
