#include <benchmark/benchmark.h>

#include <numeric>

#include "esparse/dynamics.hpp"
#include "esparse/evolve.hpp"
#include "esparse/expr.hpp"
#include "esparse/sparsereg.hpp"

using namespace esparse;

namespace {

const SignalSet& record() {
    static const SignalSet s = [] {
        dynamics::Scenario sc;
        sc.amplitude = 2.83;
        return dynamics::run_scenario(sc);
    }();
    return s;
}

std::vector<expr::Tree> population(std::size_t n) {
    Rng rng(1);
    return evolve::random_population([&] {
        auto gp = evolve::GPConfig::numerical_duffing();
        gp.population = n;
        return gp;
    }(), rng);
}

}  // namespace

static void BM_Simulate(benchmark::State& state) {
    dynamics::Scenario sc;
    sc.amplitude = 2.83;
    for (auto _ : state) benchmark::DoNotOptimize(dynamics::run_scenario(sc));
}
BENCHMARK(BM_Simulate)->Unit(benchmark::kMillisecond);

static void BM_Evaluate(benchmark::State& state) {
    const auto trees = population(80);
    const auto inputs = expr::signal_inputs(record());
    for (auto _ : state) {
        for (const auto& t : trees) benchmark::DoNotOptimize(expr::try_evaluate(t, inputs));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(trees.size()));
}
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMillisecond);

static void BM_BuildLibrary(benchmark::State& state) {
    const auto trees = population(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(sparsereg::build_library(trees, record()));
}
BENCHMARK(BM_BuildLibrary)->Arg(80)->Arg(150)->Unit(benchmark::kMillisecond);

static void BM_SweepAndSelect(benchmark::State& state) {
    const auto trees = population(80);
    const auto library = sparsereg::build_library(trees, record());
    const sparsereg::RegressionConfig config;
    for (auto _ : state) benchmark::DoNotOptimize(sparsereg::sweep_and_select(library, record(), config));
}
BENCHMARK(BM_SweepAndSelect)->Unit(benchmark::kMillisecond);

static void BM_ElasticNetGram(benchmark::State& state) {
    const auto m = state.range(0);
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(500, m);
    Eigen::VectorXd y = Eigen::VectorXd::Random(500);
    const Eigen::MatrixXd g = a.transpose() * a;
    const Eigen::VectorXd aty = a.transpose() * y;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sparsereg::elastic_net_gram(g, aty, y.squaredNorm(), 1.0, 0.01));
    }
}
BENCHMARK(BM_ElasticNetGram)->Arg(20)->Arg(80)->Arg(150);

static void BM_EsparseGeneration(benchmark::State& state) {
    const auto gp = evolve::GPConfig::numerical_duffing();
    const sparsereg::RegressionConfig reg;
    Rng rng(gp.seed);
    const auto population = evolve::random_population(gp, rng);
    for (auto _ : state) {
        const auto library = sparsereg::build_library(population, record());
        const auto target = sparsereg::make_target(library, record());
        const auto model = sparsereg::sweep_and_select(library, record(), reg);
        const auto fitness = evolve::assign_fitness(population, library, target, &model);
        benchmark::DoNotOptimize(evolve::next_generation(population, fitness, gp, rng));
    }
}
BENCHMARK(BM_EsparseGeneration)->Unit(benchmark::kMillisecond);

static void BM_Simplify(benchmark::State& state) {
    const sparsereg::RegressionConfig reg;
    const std::vector<expr::Tree> pool{
        expr::parse("X0"), expr::parse("X1"), expr::parse("X2"),
        expr::parse("(((X0 * X0) + -0.43487530416442816) * X0)"),
        expr::parse("((X0 * abs(X0)) + X1)"), expr::parse("(X0 * abs(X1))")};
    const auto library = sparsereg::build_library(pool, record());
    const auto target = sparsereg::make_target(library, record());
    std::vector<std::size_t> support(library.term_count());
    std::iota(support.begin(), support.end(), std::size_t{0});
    const auto model = sparsereg::refit(library, target, support);
    for (auto _ : state) benchmark::DoNotOptimize(sparsereg::simplify(model, record(), reg));
}
BENCHMARK(BM_Simplify)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
