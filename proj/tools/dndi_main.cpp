// Command-line front end: validate / run / metrics over scenario files.
#include <dndi/cli.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

int main(int argc, char **argv) {
    CLI::App app{"Cooperative salvo guidance simulator"};
    app.require_subcommand(1);

    std::string scenario;
    std::string out_dir = ".";
    std::string csv;
    std::vector<std::string> overrides;
    bool quiet = false;
    bool verbose = false;
    dndi::ReportSettings settings;

    auto *validate = app.add_subcommand("validate", "Check a scenario file and echo resolved values");
    validate->add_option("--scenario", scenario, "Scenario file (JSON)")->required();
    validate->add_option("--set", overrides, "Override section.field=value (repeatable)");

    auto *run = app.add_subcommand("run", "Simulate a scenario; writes trajectory.csv and report.txt");
    run->add_option("--scenario", scenario, "Scenario file (JSON)")->required();
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();
    run->add_option("--set", overrides, "Override section.field=value (repeatable)");

    auto *metrics = app.add_subcommand("metrics", "Recompute report metrics from a trajectory CSV");
    metrics->add_option("csv", csv, "trajectory.csv from a previous run")->required();
    metrics->add_option("--intercept-radius", settings.intercept_radius, "Capture radius [m]")
        ->capture_default_str();
    metrics->add_option("--blind-zone", settings.blind_zone_radius, "Blind-zone radius [m]")
        ->capture_default_str();
    metrics->add_option("--spread-tol", settings.spread_tolerance, "Impact-time spread tolerance [s]")
        ->capture_default_str();

    for (auto *sub : {validate, run, metrics}) {
        sub->add_flag("-q,--quiet", quiet, "Only report errors");
        sub->add_flag("-v,--verbose", verbose, "Print simulation events");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : dndi::cli::kExitError;
    }

    std::ostringstream sink;
    std::ostream &out = quiet ? static_cast<std::ostream &>(sink) : std::cout;

    if (*validate) return dndi::cli::cmd_validate(scenario, overrides, out, std::cerr);
    if (*run) return dndi::cli::cmd_run(scenario, out_dir, overrides, out, std::cerr, verbose);
    return dndi::cli::cmd_metrics(csv, settings, out, std::cerr);
}
