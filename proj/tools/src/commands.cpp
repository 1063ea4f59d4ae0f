#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>

#include "esparse/dynamics.hpp"
#include "esparse/error.hpp"
#include "report.hpp"

namespace esparse::cli {

namespace {

std::string quoted(const std::string& text) {
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

std::string num(double value) {
    if (std::isnan(value)) return "nan";
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.10g", value);
    return buffer;
}

void prepare(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    return out;
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
    if (values.empty()) return {0.0, 0.0};
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0))};
}

std::string truth_equation(const std::vector<std::pair<expr::Tree, double>>& truth) {
    sparsereg::SparseModel model;
    for (const auto& [tree, coefficient] : truth) {
        model.terms.push_back({tree, expr::canonical_string(tree), coefficient});
    }
    return sparsereg::render(model, 6);
}

}  // namespace

Dataset load_clean(const RunConfig& config) {
    config.validate();
    Dataset data;
    if (config.scenario == Scenario::Ingest) {
        data.signals = read_signals_csv(config.data, config.split);
        return data;
    }
    const auto scenario = config.simulation();
    data.amplitude = dynamics::resolved_amplitude(scenario);
    auto resolved = scenario;
    resolved.amplitude = data.amplitude;
    data.signals = dynamics::run_scenario(resolved);
    data.clean = data.signals;
    data.truth = dynamics::ground_truth_terms(scenario.params);
    return data;
}

Dataset with_noise(const Dataset& clean, const dynamics::NoiseSpec& noise,
                   std::uint64_t noise_seed) {
    Dataset data = clean;
    if (!noise.is_clean()) {
        Rng rng(noise_seed);
        data.signals = dynamics::add_noise(clean.signals, noise, rng);
    }
    return data;
}

RunSummary identify_once(const Dataset& data, const RunConfig& config, std::uint64_t seed,
                         std::ostream* log, int run) {
    auto gp = config.gp;
    gp.seed = seed;
    evolve::RunOptions options;
    if (log != nullptr) {
        options.on_generation = [log, run](const evolve::GenerationRecord& r) {
            *log << "progress run=" << run << " generation=" << r.generation
                 << " best_error=" << num(r.best_error) << " support=" << r.support_size
                 << " library=" << r.library_size << (r.reinitialized ? " reinitialized" : "")
                 << '\n';
        };
    }
    RunSummary summary;
    summary.seed = seed;
    summary.data_hash = content_hash(data.signals);
    summary.result = evolve::esparse_run(data.signals, gp, config.reg, options);
    const auto& model = summary.result.best;
    summary.clean_error =
        data.clean ? sparsereg::percent_error(model, *data.clean) : model.validation_error;
    if (!data.truth.empty()) {
        summary.match = sparsereg::match_terms(model, data.truth, data.clean ? *data.clean : data.signals,
                                               1e-6);
    }
    return summary;
}

IdentifySummary run_identify(const RunConfig& config, std::ostream* log) {
    const auto clean = load_clean(config);
    IdentifySummary summary;
    std::map<std::string, int> supports;
    std::vector<double> errors;
    for (int r = 0; r < config.repeats; ++r) {
        const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(r);
        const auto data = with_noise(clean, config.noise, seed);
        auto run = identify_once(data, config, seed, config.quiet ? nullptr : log, r);
        errors.push_back(run.result.best.validation_error);
        ++supports[support_key(run.result.best)];
        if (run.match && run.match->exact()) ++summary.exact;
        summary.runs.push_back(std::move(run));
    }
    std::tie(summary.mean_error, summary.std_error) = mean_std(errors);
    int best = -1;
    for (const auto& [key, count] : supports) {
        if (count > best) {
            best = count;
            summary.modal_support = key;
        }
    }
    return summary;
}

std::vector<SweepRow> run_snr_sweep(const RunConfig& config, std::ostream* log) {
    const auto clean = load_clean(config);
    std::vector<SweepRow> rows;
    for (double snr : config.snr) {
        dynamics::NoiseSpec noise = config.noise;
        noise.qddot = snr;
        SweepRow row;
        row.snr = snr;
        std::vector<double> accuracy;
        std::vector<double> extras;
        std::map<std::size_t, int> extra_counts;
        for (int r = 0; r < config.repeats; ++r) {
            // Matched draws across levels: repeat r always uses the same
            // noise seed and GP seed.
            const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(r);
            const auto data = with_noise(clean, noise, seed);
            auto run = identify_once(data, config, seed, nullptr, r);
            accuracy.push_back(100.0 - run.clean_error);
            const std::size_t extra = run.match ? run.match->extra : 0;
            extras.push_back(static_cast<double>(extra));
            ++extra_counts[extra];
            if (log != nullptr && !config.quiet) {
                *log << "sweep snr=" << num(snr) << " repeat=" << r
                     << " error=" << num(run.clean_error) << " extra_terms=" << extra << '\n';
            }
            row.runs.push_back(std::move(run));
        }
        std::tie(row.mean_accuracy, row.std_accuracy) = mean_std(accuracy);
        row.mean_error = 100.0 - row.mean_accuracy;
        row.mean_extra_terms = mean_std(extras).first;
        int best = -1;
        for (const auto& [extra, count] : extra_counts) {
            if (count > best) {
                best = count;
                row.modal_extra_terms = extra;
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<BenchmarkRow> run_benchmark(const RunConfig& config, std::ostream* log) {
    const auto clean = load_clean(config);
    std::vector<BenchmarkRow> rows;
    auto score = [&](BenchmarkRow& row, const sparsereg::SparseModel& model, const Dataset& data) {
        row.percent_error = model.validation_error;
        row.model = sparsereg::render(model, 6);
        if (!data.truth.empty()) {
            const auto match = sparsereg::match_terms(
                model, data.truth, data.clean ? *data.clean : data.signals, 1e-6);
            row.extra_terms = match.extra;
            row.missing_terms = match.missing;
        }
    };
    auto seconds_since = [](std::chrono::steady_clock::time_point start) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    for (int r = 0; r < config.repeats; ++r) {
        const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(r);
        const auto data = with_noise(clean, config.noise, seed);
        const auto hash = content_hash(data.signals);
        auto base = [&](const char* method) {
            BenchmarkRow row;
            row.method = method;
            row.repeat = r;
            row.seed = seed;
            row.data_hash = hash;
            return row;
        };

        auto gp = config.gp;
        gp.seed = seed;
        gp.population = config.baseline_population;
        gp.generations = config.baseline_generations;
        const auto gp_only = evolve::gp_only_run(data.signals, gp);
        auto gp_row = base("gp-only");
        gp_row.wall_time = gp_only.wall_time;
        score(gp_row, gp_only.best, data);

        for (bool with_sign : {true, false}) {
            auto row = base(with_sign ? "sparse-only" : "sparse-only-nosign");
            const auto started = std::chrono::steady_clock::now();
            const auto library = evolve::polynomial_library(with_sign);
            const auto model = evolve::sparse_only_run(data.signals, library, config.reg);
            row.wall_time = seconds_since(started);
            score(row, model, data);
            rows.push_back(std::move(row));
        }

        gp = config.gp;
        gp.seed = seed;
        const auto esparse = evolve::esparse_run(data.signals, gp, config.reg);
        auto es_row = base("esparse");
        es_row.wall_time = esparse.wall_time;
        es_row.time_to_gp_error = evolve::time_to_reach(esparse.history, gp_row.percent_error);
        score(es_row, esparse.best, data);

        if (log != nullptr && !config.quiet) {
            *log << "benchmark repeat=" << r << " esparse_time=" << num(es_row.wall_time)
                 << " esparse_error=" << num(es_row.percent_error)
                 << " gp_time=" << num(gp_row.wall_time)
                 << " gp_error=" << num(gp_row.percent_error) << '\n';
        }
        rows.push_back(std::move(gp_row));
        rows.push_back(std::move(es_row));
    }
    return rows;
}

void cmd_simulate(const RunConfig& config, std::ostream& out) {
    const auto clean = load_clean(config);
    if (!config.simulated()) throw InvalidArgument("simulate needs a simulated scenario");
    const auto data = with_noise(clean, config.noise, config.seed);
    prepare(config.out);
    const auto path = config.out / "signals.csv";
    write_signals_csv(data.signals, path);
    out << "wrote " << path.string() << " (" << data.signals.size() << " samples, split "
        << data.signals.split << ", hash " << format_hash(content_hash(data.signals)) << ")\n";
    out << "amplitude " << num(data.amplitude) << " m/s^2\n";
    out << "truth " << truth_equation(data.truth) << '\n';
}

void cmd_identify(const RunConfig& config, std::ostream& out) {
    const auto summary = run_identify(config, &out);
    prepare(config.out);
    auto table = open_out(config.out / "identify.csv");
    table << "run,seed,percent_error,clean_error,terms,extra_terms,missing_terms,wall_time,model\n";
    for (std::size_t r = 0; r < summary.runs.size(); ++r) {
        const auto& run = summary.runs[r];
        const auto& model = run.result.best;
        const ModelReport report{model, run.seed, run.result.best_generation, run.data_hash};
        write_report(report, config.out / ("run_" + std::to_string(r) + ".txt"));
        table << r << ',' << run.seed << ',' << num(model.validation_error) << ','
              << num(run.clean_error) << ',' << model.size() << ','
              << (run.match ? std::to_string(run.match->extra) : "") << ','
              << (run.match ? std::to_string(run.match->missing) : "") << ','
              << num(run.result.wall_time) << ',' << quoted(sparsereg::render(model, 6)) << '\n';
        out << "run " << r << " seed " << run.seed << " error " << num(model.validation_error)
            << "% : " << sparsereg::render(model, 6) << '\n';
    }
    auto text = open_out(config.out / "summary.txt");
    for (std::ostream* s : {static_cast<std::ostream*>(&text), &out}) {
        *s << "runs " << summary.runs.size() << '\n';
        *s << "mean_error " << num(summary.mean_error) << '\n';
        *s << "std_error " << num(summary.std_error) << '\n';
        *s << "modal_support " << summary.modal_support << '\n';
        if (config.simulated()) {
            *s << "exact_structure " << summary.exact << '/' << summary.runs.size() << '\n';
        }
    }
}

void cmd_snr_sweep(const RunConfig& config, std::ostream& out) {
    if (config.repeats < 2) throw InvalidArgument("snr-sweep needs at least 2 repeats");
    if (!config.simulated()) throw InvalidArgument("snr-sweep needs a simulated scenario");
    const auto rows = run_snr_sweep(config, &out);
    prepare(config.out);
    auto table = open_out(config.out / "snr_sweep.csv");
    table << "snr_db,mean,std,mean_extra_terms,mean_error,modal_extra_terms\n";
    auto runs = open_out(config.out / "snr_runs.csv");
    runs << "snr_db,repeat,seed,percent_error,clean_error,terms,extra_terms,model\n";
    for (const auto& row : rows) {
        table << num(row.snr) << ',' << num(row.mean_accuracy) << ',' << num(row.std_accuracy)
              << ',' << num(row.mean_extra_terms) << ',' << num(row.mean_error) << ','
              << row.modal_extra_terms << '\n';
        for (std::size_t r = 0; r < row.runs.size(); ++r) {
            const auto& run = row.runs[r];
            runs << num(row.snr) << ',' << r << ',' << run.seed << ','
                 << num(run.result.best.validation_error) << ',' << num(run.clean_error) << ','
                 << run.result.best.size() << ',' << (run.match ? run.match->extra : 0) << ','
                 << quoted(sparsereg::render(run.result.best, 6)) << '\n';
        }
        out << "snr " << num(row.snr) << " dB: accuracy " << num(row.mean_accuracy) << " +- "
            << num(row.std_accuracy) << ", mean extra terms " << num(row.mean_extra_terms) << '\n';
    }
}

void cmd_benchmark(const RunConfig& config, std::ostream& out) {
    const auto rows = run_benchmark(config, &out);
    prepare(config.out);
    auto table = open_out(config.out / "benchmark.csv");
    table << "method,repeat,seed,wall_time,percent_error,time_to_gp_error,extra_terms,"
             "missing_terms,data_hash,model\n";
    for (const auto& row : rows) {
        table << row.method << ',' << row.repeat << ',' << row.seed << ',' << num(row.wall_time)
              << ',' << num(row.percent_error) << ','
              << (row.time_to_gp_error ? num(*row.time_to_gp_error) : "") << ','
              << row.extra_terms << ',' << row.missing_terms << ',' << format_hash(row.data_hash)
              << ',' << quoted(row.model) << '\n';
        out << row.method << " repeat " << row.repeat << ": " << num(row.wall_time) << " s, "
            << num(row.percent_error) << "% : " << row.model << '\n';
    }
}

double cmd_validate(const RunConfig& config, const std::filesystem::path& report_path,
                    std::ostream& out) {
    const auto report = read_report(report_path);
    const auto clean = load_clean(config);
    const auto data = with_noise(clean, config.noise, config.seed);
    const double error = sparsereg::percent_error(report.model, data.signals);
    out << "percent_error " << format_coefficient(error) << '\n';
    out << "reported " << format_coefficient(report.model.validation_error) << '\n';
    out << "data_hash " << format_hash(content_hash(data.signals)) << '\n';
    return error;
}

}  // namespace esparse::cli
