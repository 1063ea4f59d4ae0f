#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "esparse/dynamics.hpp"
#include "esparse/evolve.hpp"
#include "esparse/sparsereg.hpp"

namespace esparse::cli {

// Ordered dotted-key settings; later assignments win.
using Settings = std::map<std::string, std::string>;

enum class Scenario { Duffing, Friction, Ingest };

struct RunConfig {
    Scenario scenario = Scenario::Duffing;
    std::filesystem::path data;  // ingest only
    dynamics::DuffingParams params{};
    dynamics::TrackDesign track{16.7e3, 4.0, 1.823e-3, 0.05};
    double f0 = 2.0;
    double f1 = 20.0;
    double duration = 40.0;
    double amplitude = 0.0;  // <= 0: bifurcation sweep
    double dt = 0.488e-3;
    std::size_t split = 16000;
    dynamics::NoiseSpec noise{};
    evolve::GPConfig gp = evolve::GPConfig::numerical_duffing();
    sparsereg::RegressionConfig reg{};
    std::uint64_t seed = 1;
    int repeats = 1;
    std::filesystem::path out = "out";
    std::vector<double> snr{20.0, 19.5, 19.0, 18.5};
    std::size_t baseline_population = 250;
    int baseline_generations = 80;
    bool quiet = false;

    [[nodiscard]] dynamics::Scenario simulation() const;
    [[nodiscard]] bool simulated() const noexcept { return scenario != Scenario::Ingest; }
    void validate() const;
};

// Parses `key = value` lines; blank lines and `#` comments are skipped.
// Throws InvalidArgument on malformed lines.
[[nodiscard]] Settings parse_settings(std::istream& in, const std::string& origin = "config");
[[nodiscard]] Settings read_settings(const std::filesystem::path& path);

// Builds a config from settings. The scenario key is applied first and picks
// the matching GP preset; unknown keys throw InvalidArgument.
[[nodiscard]] RunConfig make_config(const Settings& settings);

// Every recognised key with its current value, in a form make_config reads.
[[nodiscard]] Settings to_settings(const RunConfig& config);

// "inf" (any case) or a decimal number of dB.
[[nodiscard]] double parse_snr(const std::string& text);
[[nodiscard]] std::string format_number(double value);

}  // namespace esparse::cli
