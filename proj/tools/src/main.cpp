#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "commands.hpp"
#include "config.hpp"
#include "esparse/error.hpp"

namespace {

using namespace esparse;

// Turns leftover `--key=value` / `--key value` arguments into settings.
void apply_overrides(const std::vector<std::string>& extras, cli::Settings& settings) {
    for (std::size_t i = 0; i < extras.size(); ++i) {
        const std::string& arg = extras[i];
        if (arg.rfind("--", 0) != 0 || arg.size() == 2) {
            throw InvalidArgument("unexpected argument '" + arg + "'");
        }
        const std::string body = arg.substr(2);
        const auto eq = body.find('=');
        if (eq != std::string::npos) {
            settings[body.substr(0, eq)] = body.substr(eq + 1);
        } else if (i + 1 < extras.size()) {
            settings[body] = extras[++i];
        } else {
            throw InvalidArgument("override '" + arg + "' needs a value");
        }
    }
}

struct Options {
    std::string config;
    std::optional<std::string> seed;
    std::optional<std::string> out;
    std::optional<std::string> data;
    std::optional<std::string> snr;
    std::optional<std::string> repeats;
    std::string model;
    bool quiet = false;
};

int run(int argc, char** argv) {
    CLI::App app{"Equation discovery for forced oscillators from measured signals"};
    app.require_subcommand(1);
    app.allow_extras();
    Options o;
    app.add_option("--config", o.config, "Key-value config file")->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "Master seed; repeat r uses seed + r");
    app.add_option("--out", o.out, "Output directory");
    app.add_option("--data", o.data, "Signal CSV to ingest");
    app.add_option("--snr", o.snr, "Noise on qddot in dB (inf = none); a comma list for snr-sweep");
    app.add_option("--repeats", o.repeats, "Number of repeats");
    app.add_flag("--quiet", o.quiet, "Suppress progress lines");

    auto* simulate = app.add_subcommand("simulate", "Simulate the oscillator and write signals.csv");
    auto* identify = app.add_subcommand("identify", "Identify a model from data");
    auto* sweep = app.add_subcommand("snr-sweep", "Identification accuracy over noise levels");
    auto* benchmark = app.add_subcommand("benchmark", "Compare gp-only, sparse-only and esparse");
    auto* validate = app.add_subcommand("validate", "Re-score a model report against data");
    validate->add_option("--model", o.model, "Model report")->required()->check(CLI::ExistingFile);
    for (auto* sub : {simulate, identify, sweep, benchmark, validate}) {
        sub->allow_extras();
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    cli::Settings settings;
    if (!o.config.empty()) settings = cli::read_settings(o.config);
    std::vector<std::string> extras = app.remaining();
    apply_overrides(extras, settings);
    if (o.seed) settings["seed"] = *o.seed;
    if (o.out) settings["out"] = *o.out;
    if (o.data) settings["data"] = *o.data;
    if (o.repeats) settings["repeats"] = *o.repeats;
    if (o.quiet) settings["quiet"] = "true";
    if (o.snr) settings[sweep->parsed() ? "sweep.snr" : "noise.qddot"] = *o.snr;
    const auto config = cli::make_config(settings);

    if (simulate->parsed()) {
        cli::cmd_simulate(config, std::cout);
    } else if (identify->parsed()) {
        cli::cmd_identify(config, std::cout);
    } else if (sweep->parsed()) {
        cli::cmd_snr_sweep(config, std::cout);
    } else if (benchmark->parsed()) {
        cli::cmd_benchmark(config, std::cout);
    } else {
        (void)cli::cmd_validate(config, o.model, std::cout);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const esparse::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const esparse::IdentificationError& e) {
        std::cerr << "identification failed: " << e.what() << '\n';
        return 3;
    } catch (const esparse::Error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
