#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "esparse/expr.hpp"
#include "esparse/signals.hpp"
#include "esparse/sparsereg.hpp"

namespace esparse::evolve {

struct GPConfig {
    std::size_t population = 80;
    int generations = 30;
    double crossover = 0.9;
    double mutation = 0.1;
    std::size_t tournament = 3;
    double elite_fraction = 0.05;
    int max_depth = 6;
    expr::PrimitiveSet primitives = expr::PrimitiveSet::numerical_duffing();
    std::uint64_t seed = 1;

    // Population 80, 30 generations, rates 0.9 / 0.1.
    [[nodiscard]] static GPConfig numerical_duffing();
    // Population 150, 40 generations, rates 0.8 / 0.2, divide added.
    [[nodiscard]] static GPConfig friction_duffing();

    [[nodiscard]] std::size_t elite_count() const;
    void validate() const;
};

struct GenerationRecord {
    int generation = 0;
    double best_error = 0.0;        // lowest validation error so far (percent)
    double selected_error = 0.0;    // error of the currently selected best model
    double generation_error = 0.0;  // this generation's model; NaN if none
    std::size_t support_size = 0;   // terms of the currently selected best model
    std::size_t library_size = 0;   // columns incl. bias; 0 after a reinitialization
    bool reinitialized = false;
    double elapsed = 0.0;           // seconds since the run started
};

struct EsparseResult {
    sparsereg::SparseModel best;
    int best_generation = 0;
    std::vector<GenerationRecord> history;
    double wall_time = 0.0;  // seconds
    std::uint64_t seed = 0;
    std::vector<expr::Tree> final_population;
};

struct RunOptions {
    // Replaces the random generation-0 population when set.
    std::optional<std::vector<expr::Tree>> initial_population;
    std::function<void(const GenerationRecord&)> on_generation;
};

[[nodiscard]] std::vector<expr::Tree> random_population(const GPConfig& config, Rng& rng);

// Lower is better. Individuals whose column is in the model's support get
// the model's training MSE; every other surviving or duplicated column gets
// the MSE of its own best single-column fit; non-finite columns get +inf.
[[nodiscard]] std::vector<double> assign_fitness(std::span<const expr::Tree> population,
                                                 const sparsereg::LibraryMatrix& library,
                                                 const sparsereg::Target& target,
                                                 const sparsereg::SparseModel* model);

// Elites first (stable order by fitness), then tournament-selected parents
// going through crossover, mutation or reproduction.
[[nodiscard]] std::vector<expr::Tree> next_generation(std::span<const expr::Tree> population,
                                                      std::span<const double> fitness,
                                                      const GPConfig& config, Rng& rng);

// Index of the model to report: among models whose validation error is
// within `tolerance` (relative) of the lowest, the one with the fewest
// terms, then fewest nodes, then the earliest.
[[nodiscard]] std::size_t select_best(std::span<const sparsereg::SparseModel> models,
                                      double tolerance);

// Alternates library construction from the population with sparse
// regression for `generations` rounds and returns the best model seen
// (see select_best).
// Throws EmptyLibrary if generation 0 yields no usable column and
// AllModelsEmpty if no generation produced a model.
[[nodiscard]] EsparseResult esparse_run(const SignalSet& signals, const GPConfig& gp,
                                        const sparsereg::RegressionConfig& reg,
                                        const RunOptions& options = {});

// Symbolic-regression baseline on the same operators: every individual is
// scored by the MSE of its least-squares affine fit a + b f(x) to q'' over
// the identification segment. `best` holds the fitted pair as two terms.
struct GPOnlyResult {
    sparsereg::SparseModel best;
    std::vector<double> history;  // best training MSE per generation
    std::vector<double> elapsed;  // seconds since the start, per generation
    double wall_time = 0.0;       // seconds
    std::uint64_t seed = 0;
};

[[nodiscard]] GPOnlyResult gp_only_run(const SignalSet& signals, const GPConfig& gp);

// Seconds until the history first shows a lowest error at or below
// `target`; nullopt if it never does.
[[nodiscard]] std::optional<double> time_to_reach(std::span<const GenerationRecord> history,
                                                  double target);

// Fixed library for the sparse-only baseline: monomials q^i qdot^j with
// 1 <= i + j <= 3 and z''; with `with_sign`, also sgn(qdot) times each
// monomial of degree <= 2 (including 1).
[[nodiscard]] std::vector<expr::Tree> polynomial_library(bool with_sign);

// Sparse regression alone on a fixed library.
[[nodiscard]] sparsereg::SparseModel sparse_only_run(const SignalSet& signals,
                                                     std::span<const expr::Tree> library,
                                                     const sparsereg::RegressionConfig& reg);

}  // namespace esparse::evolve
