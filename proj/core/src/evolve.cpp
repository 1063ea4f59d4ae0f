#include "esparse/evolve.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "esparse/error.hpp"

namespace esparse::evolve {

namespace {

// Validation errors (percent) closer than this are indistinguishable.
constexpr double kErrorFloor = 1e-6;

std::size_t node_count(const sparsereg::SparseModel& model) {
    std::size_t nodes = 0;
    for (const auto& term : model.terms) nodes += term.tree.size();
    return nodes;
}

// Equal fitness goes to the smaller tree, then the lower index.
std::size_t tournament(std::span<const expr::Tree> population, std::span<const double> fitness,
                       std::size_t size, Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, fitness.size() - 1);
    std::size_t best = pick(rng);
    for (std::size_t i = 1; i < size; ++i) {
        const std::size_t c = pick(rng);
        const bool better =
            fitness[c] < fitness[best] ||
            (fitness[c] == fitness[best] &&
             (population[c].size() < population[best].size() ||
              (population[c].size() == population[best].size() && c < best)));
        if (better) best = c;
    }
    return best;
}

}  // namespace

GPConfig GPConfig::numerical_duffing() {
    GPConfig config;
    config.population = 80;
    config.generations = 30;
    config.crossover = 0.9;
    config.mutation = 0.1;
    config.primitives = expr::PrimitiveSet::numerical_duffing();
    return config;
}

GPConfig GPConfig::friction_duffing() {
    GPConfig config;
    config.population = 150;
    config.generations = 40;
    config.crossover = 0.8;
    config.mutation = 0.2;
    config.primitives = expr::PrimitiveSet::friction_duffing();
    return config;
}

std::size_t GPConfig::elite_count() const {
    const double raw = std::ceil(elite_fraction * static_cast<double>(population) - 1e-12);
    return std::min(population, static_cast<std::size_t>(std::max(0.0, raw)));
}

void GPConfig::validate() const {
    if (population < 2) throw InvalidArgument("population size must be at least 2");
    if (generations < 1) throw InvalidArgument("generation count must be at least 1");
    if (!(crossover >= 0.0 && crossover <= 1.0) || !(mutation >= 0.0 && mutation <= 1.0)) {
        throw InvalidArgument("operator probabilities must lie in [0, 1]");
    }
    if (crossover + mutation > 1.0 + 1e-12) {
        throw InvalidArgument("crossover and mutation probabilities must sum to at most 1");
    }
    if (tournament < 1) throw InvalidArgument("tournament size must be at least 1");
    if (!(elite_fraction >= 0.0 && elite_fraction <= 1.0)) {
        throw InvalidArgument("elite fraction must lie in [0, 1]");
    }
    if (max_depth < 1) throw InvalidArgument("max depth must be at least 1");
    primitives.validate();
}

std::vector<expr::Tree> random_population(const GPConfig& config, Rng& rng) {
    std::vector<expr::Tree> population;
    population.reserve(config.population);
    for (std::size_t i = 0; i < config.population; ++i) {
        population.push_back(expr::random_tree(config.primitives, config.max_depth, rng));
    }
    return population;
}

std::vector<double> assign_fitness(std::span<const expr::Tree> population,
                                   const sparsereg::LibraryMatrix& library,
                                   const sparsereg::Target& target,
                                   const sparsereg::SparseModel* model) {
    constexpr double kWorst = std::numeric_limits<double>::infinity();

    // Population index -> standardized column.
    std::unordered_map<std::size_t, std::size_t> column_of;
    for (std::size_t j = 0; j < library.term_count(); ++j) column_of[library.term(j).source] = j;
    std::unordered_map<std::size_t, const sparsereg::DroppedColumn*> dropped_of;
    for (const auto& d : library.dropped) dropped_of[d.source] = &d;

    std::vector<bool> in_support(library.term_count(), false);
    if (model != nullptr) {
        for (std::size_t j : model->support) in_support[j] = true;
    }
    const double constant_mse =
        target.centred_norm * target.centred_norm / static_cast<double>(target.count);

    std::vector<double> fitness(population.size(), kWorst);
    for (std::size_t i = 0; i < population.size(); ++i) {
        if (const auto it = column_of.find(i); it != column_of.end()) {
            fitness[i] = in_support[it->second] ? model->training_mse
                                                : sparsereg::single_term_mse(library, target,
                                                                             it->second);
            continue;
        }
        // Follow duplicate links to the column that was kept.
        std::size_t source = i;
        for (int hops = 0; hops < 4; ++hops) {
            const auto d = dropped_of.find(source);
            if (d == dropped_of.end()) break;
            if (d->second->reason == sparsereg::DropReason::Constant) {
                fitness[i] = constant_mse;
                break;
            }
            if (d->second->reason != sparsereg::DropReason::Duplicate) break;
            source = d->second->duplicate_of;
            if (const auto kept = column_of.find(source); kept != column_of.end()) {
                fitness[i] = sparsereg::single_term_mse(library, target, kept->second);
                break;
            }
        }
    }
    return fitness;
}

std::vector<expr::Tree> next_generation(std::span<const expr::Tree> population,
                                        std::span<const double> fitness, const GPConfig& config,
                                        Rng& rng) {
    if (population.size() != fitness.size()) {
        throw InvalidArgument("population and fitness sizes differ");
    }
    const std::size_t size = population.size();
    std::vector<std::size_t> order(size);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fitness[a] < fitness[b]; });

    GPConfig sized = config;
    sized.population = size;
    std::vector<expr::Tree> next;
    next.reserve(size);
    for (std::size_t i = 0; i < sized.elite_count(); ++i) next.push_back(population[order[i]]);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (next.size() < size) {
        const auto& parent = population[tournament(population, fitness, config.tournament, rng)];
        const double draw = unit(rng);
        if (draw < config.crossover) {
            const auto& other = population[tournament(population, fitness, config.tournament, rng)];
            auto [first, second] =
                expr::crossover(parent, other, config.primitives, config.max_depth, rng);
            next.push_back(std::move(first));
            if (next.size() < size) next.push_back(std::move(second));
        } else if (draw < config.crossover + config.mutation) {
            next.push_back(expr::mutate(parent, config.primitives, config.max_depth, rng));
        } else {
            next.push_back(parent);
        }
    }
    return next;
}

std::size_t select_best(std::span<const sparsereg::SparseModel> models, double tolerance) {
    if (models.empty()) throw InvalidArgument("no models to select from");
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& m : models) lowest = std::min(lowest, m.validation_error);
    const double band = lowest * (1.0 + tolerance) + kErrorFloor;
    std::size_t chosen = models.size();
    for (std::size_t i = 0; i < models.size(); ++i) {
        if (models[i].validation_error > band) continue;
        if (chosen == models.size()) {
            chosen = i;
            continue;
        }
        const auto& a = models[i];
        const auto& b = models[chosen];
        if (a.size() < b.size() || (a.size() == b.size() && node_count(a) < node_count(b))) {
            chosen = i;
        }
    }
    return chosen;
}

EsparseResult esparse_run(const SignalSet& signals, const GPConfig& gp,
                          const sparsereg::RegressionConfig& reg, const RunOptions& options) {
    gp.validate();
    reg.validate();
    signals.validate();
    const auto started = std::chrono::steady_clock::now();

    Rng rng(gp.seed);
    std::vector<expr::Tree> population = options.initial_population
                                             ? *options.initial_population
                                             : random_population(gp, rng);
    if (population.size() < 2) throw InvalidArgument("initial population needs >= 2 trees");

    EsparseResult result;
    result.seed = gp.seed;
    std::vector<sparsereg::SparseModel> models;
    std::vector<int> model_generation;
    double lowest = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    sparsereg::ColumnCache cache;

    for (int generation = 0; generation < gp.generations; ++generation) {
        GenerationRecord record;
        record.generation = generation;
        record.generation_error = std::numeric_limits<double>::quiet_NaN();

        std::optional<sparsereg::LibraryMatrix> library;
        try {
            library.emplace(sparsereg::build_library(population, signals, &cache));
        } catch (const EmptyLibrary&) {
            if (generation == 0) throw;
        }
        cache.retain_recent();

        if (!library) {
            population = random_population(gp, rng);
            record.reinitialized = true;
        } else {
            record.library_size = library->size();
            const auto target = sparsereg::make_target(*library, signals);
            std::optional<sparsereg::SparseModel> model;
            try {
                model = sparsereg::sweep_and_select(*library, signals, reg);
            } catch (const AllModelsEmpty&) {
            }
            if (model) {
                record.generation_error = model->validation_error;
                lowest = std::min(lowest, model->validation_error);
                models.push_back(*model);
                model_generation.push_back(generation);
                best = select_best(models, reg.selection_tolerance);
            }
            if (generation + 1 < gp.generations) {
                const auto fitness =
                    assign_fitness(population, *library, target, model ? &*model : nullptr);
                population = next_generation(population, fitness, gp, rng);
            }
        }
        record.best_error = lowest;
        if (!models.empty()) {
            record.selected_error = models[best].validation_error;
            record.support_size = models[best].size();
        } else {
            record.selected_error = std::numeric_limits<double>::infinity();
        }
        record.elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        result.history.push_back(record);
        if (options.on_generation) options.on_generation(record);
    }
    if (models.empty()) throw AllModelsEmpty();

    result.best = sparsereg::simplify(models[best], signals, reg);
    result.best_generation = model_generation[best];
    result.final_population = std::move(population);
    result.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

GPOnlyResult gp_only_run(const SignalSet& signals, const GPConfig& gp) {
    gp.validate();
    signals.validate();
    const auto started = std::chrono::steady_clock::now();
    const auto inputs = expr::signal_inputs(signals);
    const std::size_t split = signals.split;
    const auto y = identification_part(signals.qddot, split);
    const double n = static_cast<double>(y.size());
    const double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double syy = 0.0;
    for (double v : y) syy += (v - y_mean) * (v - y_mean);

    struct Fit {
        double mse = std::numeric_limits<double>::infinity();
        double a = 0.0;
        double b = 0.0;
    };
    auto fit = [&](const expr::Column& f) {
        double f_mean = 0.0;
        for (std::size_t i = split; i < f.size(); ++i) f_mean += f[i];
        f_mean /= n;
        double sff = 0.0;
        double sfy = 0.0;
        for (std::size_t i = split; i < f.size(); ++i) {
            const double d = f[i] - f_mean;
            sff += d * d;
            sfy += d * (y[i - split] - y_mean);
        }
        Fit r;
        r.b = sff > 0.0 ? sfy / sff : 0.0;
        r.a = y_mean - r.b * f_mean;
        r.mse = std::max(0.0, syy - r.b * sfy) / n;
        return r;
    };

    Rng rng(gp.seed);
    auto population = random_population(gp, rng);
    sparsereg::ColumnCache cache;
    GPOnlyResult result;
    result.seed = gp.seed;
    std::optional<std::pair<expr::Tree, Fit>> best;
    for (int generation = 0; generation < gp.generations; ++generation) {
        std::vector<double> fitness(population.size());
        for (std::size_t i = 0; i < population.size(); ++i) {
            const auto entry =
                cache.get_or_evaluate(population[i], expr::canonical_string(population[i]), inputs);
            Fit f;
            if (entry->has_value()) f = fit(**entry);
            fitness[i] = f.mse;
            const bool better =
                !best || f.mse < best->second.mse ||
                (f.mse == best->second.mse && population[i].size() < best->first.size());
            if (std::isfinite(f.mse) && better) best.emplace(population[i], f);
        }
        cache.retain_recent();
        result.history.push_back(best ? best->second.mse : std::numeric_limits<double>::infinity());
        result.elapsed.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
        if (generation + 1 < gp.generations) population = next_generation(population, fitness, gp, rng);
    }
    if (!best) throw AllModelsEmpty();

    auto& model = result.best;
    model.terms.push_back({expr::Tree::constant(1.0), "1", best->second.a});
    model.terms.push_back({best->first, expr::canonical_string(best->first), best->second.b});
    model.training_mse = best->second.mse;
    model.validation_error = sparsereg::percent_error(model, signals);
    result.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

std::optional<double> time_to_reach(std::span<const GenerationRecord> history, double target) {
    for (const auto& record : history) {
        if (record.best_error <= target) return record.elapsed;
    }
    return std::nullopt;
}

std::vector<expr::Tree> polynomial_library(bool with_sign) {
    using expr::Op;
    using expr::Tree;
    auto monomial = [](int i, int j) {
        std::optional<Tree> out;
        auto times = [&out](const Tree& f) {
            out = out ? Tree::binary(Op::Times, *out, f) : f;
        };
        for (int k = 0; k < i; ++k) times(Tree::variable(0));
        for (int k = 0; k < j; ++k) times(Tree::variable(1));
        return out;
    };
    std::vector<Tree> library;
    for (int degree = 1; degree <= 3; ++degree) {
        for (int i = degree; i >= 0; --i) library.push_back(*monomial(i, degree - i));
    }
    library.push_back(Tree::variable(2));
    if (with_sign) {
        const Tree sign = Tree::unary(Op::Sgn, Tree::variable(1));
        library.push_back(sign);
        for (int degree = 1; degree <= 2; ++degree) {
            for (int i = degree; i >= 0; --i) {
                library.push_back(Tree::binary(Op::Times, *monomial(i, degree - i), sign));
            }
        }
    }
    return library;
}

sparsereg::SparseModel sparse_only_run(const SignalSet& signals,
                                       std::span<const expr::Tree> library,
                                       const sparsereg::RegressionConfig& reg) {
    const auto matrix = sparsereg::build_library(library, signals);
    return sparsereg::sweep_and_select(matrix, signals, reg);
}

}  // namespace esparse::evolve
