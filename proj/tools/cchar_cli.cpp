#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cchar/errors.hpp"
#include "cchar/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Closed characteristics on convex hypersurfaces: orbit discovery, index iteration and stability certificates"};
    app.require_subcommand(1);
    CLI::App* run = app.add_subcommand("run", "run the pipeline on a JSON config");
    std::string config_path, out_dir = ".";
    std::optional<std::uint64_t> seed;
    bool verbose = false;
    run->add_option("config", config_path, "config document")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "override the solver seed");
    run->add_option("--out", out_dir, "output directory");
    run->add_flag("-v,--verbose", verbose, "log stages to stderr");
    CLI11_PARSE(app, argc, argv);

    cchar::RunConfig config;
    try {
        std::ifstream f(config_path);
        nlohmann::json doc = nlohmann::json::parse(f);
        if (seed) doc["seed"] = *seed;
        config = cchar::config_from_json(doc);
    } catch (const std::exception& e) {
        std::cerr << "config rejected: " << e.what() << "\n";
        return 3;
    }
    config.out_dir = out_dir;

    cchar::Logger log;
    if (verbose) log = [](const std::string& s) { std::cerr << "[cchar] " << s << "\n"; };
    cchar::RunArtifacts artifacts;
    const cchar::RunReport report = cchar::run_pipeline(config, log, &artifacts);
    try {
        cchar::write_outputs(report, artifacts, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "cannot write outputs: " << e.what() << "\n";
        return 3;
    }
    if (verbose)
        for (const auto& a : report.audits)
            std::cerr << "[cchar] " << (a.pass ? "PASS " : "FAIL ") << a.name << ": " << a.detail << "\n";
    if (report.status == "FAILED")
        std::cerr << "stage " << report.failed_stage << " failed: " << report.error << "\n";
    std::cout << report.status << " " << out_dir << "\n";
    return cchar::exit_code(report);
}
