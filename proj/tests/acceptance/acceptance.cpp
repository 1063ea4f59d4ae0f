// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "config.hpp"
#include "esparse/dynamics.hpp"
#include "esparse/sparsereg.hpp"
#include "instances.hpp"
#include "oracles.hpp"

using namespace esparse;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, double a) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), format, a);
    return buffer;
}

bool within(double value, double reference, double relative) {
    return std::abs(value - reference) <= relative * std::abs(reference);
}

// Structure and coefficient check of identification runs against the truth.
Outcome recovery(const cli::RunConfig& config, double tolerance, int required) {
    const auto summary = cli::run_identify(config, nullptr);
    const auto truth = cli::load_clean(config).truth;
    int passed = 0;
    double worst = 0.0;
    for (const auto& run : summary.runs) {
        if (!run.match || !run.match->exact()) continue;
        bool ok = true;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const double dev = std::abs(run.match->coefficients[i] / truth[i].second - 1.0);
            worst = std::max(worst, dev);
            ok = ok && dev <= tolerance;
        }
        passed += ok ? 1 : 0;
    }
    std::ostringstream d;
    d << passed << "/" << summary.runs.size() << " seeds exact (need " << required
      << "), worst coefficient deviation among exact runs " << fmt("%.2e", worst);
    return {passed >= required, d.str()};
}

Outcome criterion1() {
    auto config = cli::make_config({{"repeats", "20"}, {"seed", "1"}});
    return recovery(config, 0.01, 18);
}

std::vector<cli::SweepRow> g_sweep;

Outcome criterion2() {
    auto config = cli::make_config({{"repeats", "20"}, {"seed", "1"}, {"sweep.snr", "20,19.5,19,18.5"}});
    g_sweep = cli::run_snr_sweep(config, nullptr);
    bool monotone = true;
    std::ostringstream d;
    d << "mean error";
    for (std::size_t i = 0; i < g_sweep.size(); ++i) {
        d << ' ' << g_sweep[i].snr << "dB=" << fmt("%.3f%%", g_sweep[i].mean_error);
        if (i > 0) monotone = monotone && g_sweep[i].mean_error >= g_sweep[i - 1].mean_error;
    }
    const bool bands = g_sweep.front().mean_error <= 3.0 && g_sweep.back().mean_error <= 20.0;
    d << (monotone ? ", non-decreasing" : ", NOT monotone") << (bands ? ", within bands" : ", outside bands");
    return {monotone && bands, d.str()};
}

Outcome criterion3() {
    auto config = cli::make_config({{"repeats", "20"}, {"seed", "1"}, {"sweep.snr", "18,15"}});
    auto rows = cli::run_snr_sweep(config, nullptr);
    rows.insert(rows.begin(), g_sweep.begin(), g_sweep.end());
    bool pass = true;
    std::ostringstream d;
    d << "modal/mean extra terms";
    for (const auto& row : rows) {
        d << ' ' << row.snr << "dB=" << row.modal_extra_terms << '/' << fmt("%.2f", row.mean_extra_terms);
        if (row.snr >= 18.0) pass = pass && row.modal_extra_terms == 0;
        if (row.snr <= 15.0) pass = pass && row.mean_extra_terms > 0.0;
    }
    return {pass, d.str()};
}

Outcome criterion4() {
    auto config = cli::make_config({{"scenario", "friction"}, {"repeats", "20"}, {"seed", "1"}});
    const auto p = config.simulation().params;
    std::ostringstream d;
    d << "mu1/m=" << fmt("%.3f", p.mu1 / p.m) << " mu2/m=" << fmt("%.4g", p.mu2 / p.m) << "; ";
    auto outcome = recovery(config, 0.05, 15);
    outcome.detail = d.str() + outcome.detail;
    return outcome;
}

Outcome criterion5() {
    const sparsereg::ElasticNetOptions tight{1e-13, 200000, false};
    double worst_objective = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto r = instances::random_regression(1000 + seed);
        const auto ours = sparsereg::elastic_net(r.ae, r.ye, r.l1, r.l2, tight);
        const auto best = oracle::brute_force_elastic_net(r.a, r.y, r.l1, r.l2);
        const double a = oracle::objective(r.a, r.y, instances::to_vec(ours.coefficients), r.l1, r.l2);
        const double b = oracle::objective(r.a, r.y, best, r.l1, r.l2);
        worst_objective = std::max(worst_objective, std::abs(a - b) / std::abs(b));
    }
    double worst_ridge = 0.0;
    double worst_lasso = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto r = instances::random_regression(2000 + seed);
        const std::size_t m = r.a.cols;
        const double l2 = 0.7;
        oracle::Mat g(m, m);
        oracle::Vec aty(m);
        for (std::size_t i = 0; i < m; ++i) {
            aty[i] = oracle::dot(oracle::column(r.a, i), r.y);
            for (std::size_t j = 0; j < m; ++j) {
                g(i, j) = oracle::dot(oracle::column(r.a, i), oracle::column(r.a, j)) + (i == j ? l2 : 0.0);
            }
        }
        const auto ridge = *oracle::solve(g, aty);
        const auto ours = sparsereg::elastic_net(r.ae, r.ye, 0.0, l2, tight);
        for (std::size_t j = 0; j < m; ++j) {
            worst_ridge = std::max(worst_ridge, std::abs(ours.coefficients(static_cast<Eigen::Index>(j)) - ridge[j]) /
                                                    std::max(1.0, std::abs(ridge[j])));
        }
        const auto q = oracle::orthonormalize(r.a);
        Eigen::MatrixXd qe(q.rows, q.cols);
        for (std::size_t i = 0; i < q.rows; ++i) {
            for (std::size_t j = 0; j < q.cols; ++j) qe(i, j) = q(i, j);
        }
        const double l1 = 1.5;
        const auto lasso = sparsereg::elastic_net(qe, r.ye, l1, 0.0, tight);
        for (std::size_t j = 0; j < m; ++j) {
            const double expected = oracle::soft_threshold(oracle::dot(oracle::column(q, j), r.y), l1 / 2.0);
            worst_lasso = std::max(worst_lasso,
                                   std::abs(lasso.coefficients(static_cast<Eigen::Index>(j)) - expected) /
                                       std::max(1.0, std::abs(expected)));
        }
    }
    std::ostringstream d;
    d << "objective rel. gap " << fmt("%.1e", worst_objective) << " (<=1e-6), ridge "
      << fmt("%.1e", worst_ridge) << ", lasso " << fmt("%.1e", worst_lasso) << " (<=1e-7)";
    return {worst_objective <= 1e-6 && worst_ridge <= 1e-7 && worst_lasso <= 1e-7, d.str()};
}

Outcome criterion6() {
    auto config = cli::make_config({{"scenario", "friction"}, {"repeats", "3"}, {"seed", "1"}});
    const auto rows = cli::run_benchmark(config, nullptr);
    bool pass = true;
    std::ostringstream d;
    for (int r = 0; r < config.repeats; ++r) {
        const cli::BenchmarkRow* gp = nullptr;
        const cli::BenchmarkRow* es = nullptr;
        const cli::BenchmarkRow* sign = nullptr;
        const cli::BenchmarkRow* nosign = nullptr;
        for (const auto& row : rows) {
            if (row.repeat != r) continue;
            if (row.method == "gp-only") gp = &row;
            if (row.method == "esparse") es = &row;
            if (row.method == "sparse-only") sign = &row;
            if (row.method == "sparse-only-nosign") nosign = &row;
        }
        const bool shared = gp->data_hash == es->data_hash && sign->data_hash == es->data_hash &&
                            nosign->data_hash == es->data_hash;
        const double reach = es->time_to_gp_error.value_or(INFINITY);
        const bool ok = shared && es->percent_error <= gp->percent_error &&
                        reach < 0.25 * gp->wall_time && nosign->missing_terms > 0 &&
                        sign->extra_terms == 0 && sign->missing_terms == 0;
        pass = pass && ok;
        d << (r ? "; " : "") << "repeat " << r << ": gp-only " << fmt("%.1fs", gp->wall_time) << '/'
          << fmt("%.3g%%", gp->percent_error) << ", esparse reaches it at " << fmt("%.2fs", reach) << " ("
          << fmt("%.1f%%", 100.0 * reach / gp->wall_time) << " of gp time; full run "
          << fmt("%.1fs", es->wall_time) << '/' << fmt("%.2g%%", es->percent_error) << "), nosign missing "
          << nosign->missing_terms << ", sign exact " << (sign->extra_terms + sign->missing_terms == 0 ? "yes" : "no");
    }
    return {pass, d.str()};
}

Outcome criterion7() {
    using namespace dynamics;
    const DuffingParams p{};
    auto response = [&](double dt, double duration) {
        const auto n = static_cast<std::size_t>(std::llround(duration / dt)) + 1;
        std::vector<double> zero(n, 0.0);
        SimulationOptions o;
        o.dt = dt;
        o.initial = {0.01, 0.0};
        o.split = n / 2;
        return simulate(p, zero, o);
    };
    const auto reference = response(0.5e-3 / 64, 0.5);
    std::vector<double> errors;
    for (double dt : {0.5e-3, 0.25e-3, 0.125e-3}) {
        errors.push_back(std::abs(response(dt, 0.5).q.back() - reference.q.back()));
    }
    const double order = std::min(std::log2(errors[0] / errors[1]), std::log2(errors[1] / errors[2]));

    const auto free = response(0.488e-3, 3.0);
    bool monotone = true;
    double e0 = oracle::duffing_energy(p.m, p.k, p.k3, free.q[0], free.qdot[0]);
    double previous = e0;
    for (std::size_t i = 1; i < free.size(); ++i) {
        const double e = oracle::duffing_energy(p.m, p.k, p.k3, free.q[i], free.qdot[i]);
        monotone = monotone && e <= previous + 1e-12 * e0;
        previous = e;
    }
    const double k3 = stiffness_from_track({16.7e3, 4.0, 1.823e-3, 0.0}).k3;
    const bool k3_ok = k3 == 4.0 * 16.7e3 * 4.0 * 4.0 && std::round(k3 / 1e4) * 1e4 == 1.07e6;
    std::ostringstream d;
    d << "RK4 order " << fmt("%.2f", order) << " (>=3.5), energy " << (monotone ? "monotone" : "NOT monotone")
      << ", k3 from track " << fmt("%.0f", k3) << " (1.07e6 to 3 digits)";
    return {order >= 3.5 && monotone && k3_ok, d.str()};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"noiseless structure recovery", criterion1},
        {"noise robustness ordering", criterion2},
        {"robustness knee", criterion3},
        {"friction discovery", criterion4},
        {"elastic-net oracle equivalence", criterion5},
        {"benchmark ordering", criterion6},
        {"numerical hygiene", criterion7},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criteria[i].second();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failed += outcome.pass ? 0 : 1;
        std::cout << "criterion " << i + 1 << ' ' << (outcome.pass ? "PASS" : "FAIL") << ": "
                  << criteria[i].first << " - " << outcome.detail << " [" << fmt("%.0f", seconds)
                  << " s]" << std::endl;
    }
    std::cout << (criteria.size() - failed) << '/' << criteria.size() << " criteria passed" << std::endl;
    return failed;
}
