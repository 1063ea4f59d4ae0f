#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "esparse/evolve.hpp"
#include "esparse/sparsereg.hpp"

namespace esparse::cli {

// Data a run works on. `clean` and `truth` exist for simulated scenarios.
struct Dataset {
    SignalSet signals;
    std::optional<SignalSet> clean;
    std::vector<std::pair<expr::Tree, double>> truth;
    double amplitude = 0.0;
};

// Simulates (or reads) the clean record once; reuse it with `with_noise`.
[[nodiscard]] Dataset load_clean(const RunConfig& config);
// Copy of `clean` with the configured noise drawn from `noise_seed`.
[[nodiscard]] Dataset with_noise(const Dataset& clean, const dynamics::NoiseSpec& noise,
                                 std::uint64_t noise_seed);

struct RunSummary {
    std::uint64_t seed = 0;
    evolve::EsparseResult result;
    double clean_error = 0.0;  // against the clean record; equals the model error on ingest
    std::optional<sparsereg::TermMatch> match;
    std::uint64_t data_hash = 0;
};

// One identification on `data` with GP seed `seed`, streaming progress
// lines to `log` when given.
[[nodiscard]] RunSummary identify_once(const Dataset& data, const RunConfig& config,
                                       std::uint64_t seed, std::ostream* log, int run = 0);

struct IdentifySummary {
    std::vector<RunSummary> runs;
    double mean_error = 0.0;
    double std_error = 0.0;
    std::string modal_support;
    std::size_t exact = 0;  // runs matching the true structure (simulated data)
};

struct SweepRow {
    double snr = 0.0;
    double mean_accuracy = 0.0;  // 100 - clean error, averaged over repeats
    double std_accuracy = 0.0;
    double mean_extra_terms = 0.0;
    double mean_error = 0.0;  // clean error
    std::size_t modal_extra_terms = 0;
    std::vector<RunSummary> runs;
};

struct BenchmarkRow {
    std::string method;  // gp-only, sparse-only, sparse-only-nosign, esparse
    int repeat = 0;
    std::uint64_t seed = 0;
    double wall_time = 0.0;
    double percent_error = 0.0;
    // esparse only: seconds until its running best reached the gp-only error.
    std::optional<double> time_to_gp_error;
    std::size_t extra_terms = 0;
    std::size_t missing_terms = 0;
    std::string model;
    std::uint64_t data_hash = 0;
};

[[nodiscard]] IdentifySummary run_identify(const RunConfig& config, std::ostream* log);
[[nodiscard]] std::vector<SweepRow> run_snr_sweep(const RunConfig& config, std::ostream* log);
[[nodiscard]] std::vector<BenchmarkRow> run_benchmark(const RunConfig& config, std::ostream* log);

// Subcommands: write their outputs under config.out and print a summary.
void cmd_simulate(const RunConfig& config, std::ostream& out);
void cmd_identify(const RunConfig& config, std::ostream& out);
void cmd_snr_sweep(const RunConfig& config, std::ostream& out);
void cmd_benchmark(const RunConfig& config, std::ostream& out);
// Re-scores a model report on the configured data; returns the percent error.
double cmd_validate(const RunConfig& config, const std::filesystem::path& report,
                    std::ostream& out);

}  // namespace esparse::cli
