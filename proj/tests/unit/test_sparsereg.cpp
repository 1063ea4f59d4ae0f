#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "esparse/error.hpp"
#include "esparse/sparsereg.hpp"
#include "instances.hpp"
#include "oracles.hpp"

using namespace esparse;
using namespace esparse::sparsereg;
using expr::Op;
using expr::Tree;

namespace {

const ElasticNetOptions kTight{1e-13, 200000, false};

Tree x(int i) { return Tree::variable(i); }
Tree mul(const Tree& a, const Tree& b) { return Tree::binary(Op::Times, a, b); }

double relative(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// q'' = 2 q - 3 qdot |q| + 0.5 z'' + 0.25
SignalSet exact_record() {
    return instances::synthetic_signals(600, 200, [](double q, double qd, double z) {
        return 2.0 * q - 3.0 * qd * std::abs(q) + 0.5 * z + 0.25;
    });
}

std::vector<Tree> candidate_pool() {
    return {x(0),
            mul(x(1), Tree::unary(Op::Abs, x(0))),
            x(2),
            x(1),
            mul(x(0), x(0)),
            mul(x(0), x(1)),
            Tree::unary(Op::Sgn, x(1)),
            mul(x(2), x(2))};
}

}  // namespace

TEST(ElasticNet, MatchesBruteForceOracle) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto r = instances::random_regression(seed);
        const auto result = elastic_net(r.ae, r.ye, r.l1, r.l2, kTight);
        const auto reference = oracle::brute_force_elastic_net(r.a, r.y, r.l1, r.l2);
        const double ours = oracle::objective(r.a, r.y, instances::to_vec(result.coefficients), r.l1, r.l2);
        const double best = oracle::objective(r.a, r.y, reference, r.l1, r.l2);
        EXPECT_LE(relative(ours, best), 1e-6) << "seed " << seed;
        EXPECT_TRUE(result.converged);
        EXPECT_NEAR(result.objective, ours, 1e-9 * std::abs(ours));
        const double kkt = oracle::kkt_violation(r.a, r.y, instances::to_vec(result.coefficients),
                                                 r.l1, r.l2);
        EXPECT_LE(kkt, 1e-6 * std::max(1.0, r.l1)) << "seed " << seed;
    }
}

TEST(ElasticNet, MatchesProjectedGradientOracle) {
    for (std::uint64_t seed = 101; seed <= 105; ++seed) {
        const auto r = instances::random_regression(seed);
        const auto result = elastic_net(r.ae, r.ye, r.l1, r.l2, kTight);
        const auto pg = oracle::projected_gradient_elastic_net(r.a, r.y, r.l1, r.l2);
        const double ours = oracle::objective(r.a, r.y, instances::to_vec(result.coefficients), r.l1, r.l2);
        const double theirs = oracle::objective(r.a, r.y, pg, r.l1, r.l2);
        // The first-order oracle can only be worse than the optimum.
        EXPECT_LE(ours, theirs * (1.0 + 1e-9)) << "seed " << seed;
        EXPECT_LE(relative(ours, theirs), 1e-6) << "seed " << seed;
    }
}

TEST(ElasticNet, RidgeLimitMatchesClosedForm) {
    for (std::uint64_t seed = 201; seed <= 210; ++seed) {
        auto r = instances::random_regression(seed);
        const double l2 = 0.5;
        oracle::Mat g(r.a.cols, r.a.cols);
        oracle::Vec aty(r.a.cols);
        for (std::size_t i = 0; i < r.a.cols; ++i) {
            aty[i] = oracle::dot(oracle::column(r.a, i), r.y);
            for (std::size_t j = 0; j < r.a.cols; ++j) {
                g(i, j) = oracle::dot(oracle::column(r.a, i), oracle::column(r.a, j)) + (i == j ? l2 : 0.0);
            }
        }
        const auto expected = *oracle::solve(g, aty);
        const auto result = elastic_net(r.ae, r.ye, 0.0, l2, kTight);
        for (std::size_t j = 0; j < expected.size(); ++j) {
            EXPECT_NEAR(result.coefficients(static_cast<Eigen::Index>(j)), expected[j],
                        1e-7 * std::max(1.0, std::abs(expected[j])));
        }
    }
}

TEST(ElasticNet, LassoLimitMatchesSoftThreshold) {
    for (std::uint64_t seed = 301; seed <= 310; ++seed) {
        auto r = instances::random_regression(seed);
        const auto q = oracle::orthonormalize(r.a);
        Eigen::MatrixXd qe(q.rows, q.cols);
        for (std::size_t i = 0; i < q.rows; ++i) {
            for (std::size_t j = 0; j < q.cols; ++j) qe(i, j) = q(i, j);
        }
        for (double l2 : {0.0, 0.3}) {
            const double l1 = 2.0;
            const auto result = elastic_net(qe, r.ye, l1, l2, kTight);
            for (std::size_t j = 0; j < q.cols; ++j) {
                const double expected =
                    oracle::soft_threshold(oracle::dot(oracle::column(q, j), r.y), l1 / 2.0) / (1.0 + l2);
                EXPECT_NEAR(result.coefficients(static_cast<Eigen::Index>(j)), expected, 1e-7);
            }
        }
    }
}

TEST(ElasticNet, UnregularizedSquareSystemIsLeastSquares) {
    Eigen::MatrixXd a(3, 3);
    a << 4, 1, 0, 1, 3, 1, 0, 1, 2;
    Eigen::VectorXd y(3);
    y << 1, 2, 3;
    const auto result = elastic_net(a, y, 0.0, 0.0, kTight);
    const Eigen::VectorXd expected = a.colPivHouseholderQr().solve(y);
    EXPECT_LT((result.coefficients - expected).norm(), 1e-8);
}

TEST(ElasticNet, LargePenaltyZeroesEverything) {
    const auto r = instances::random_regression(7);
    const double max_corr = (2.0 * r.ae.transpose() * r.ye).cwiseAbs().maxCoeff();
    const auto result = elastic_net(r.ae, r.ye, max_corr * 1.01, 0.1);
    EXPECT_EQ(result.coefficients.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ElasticNet, GramFormAgreesAndObjectiveDecreases) {
    const auto r = instances::random_regression(11);
    ElasticNetOptions o = kTight;
    o.record_objective = true;
    const auto direct = elastic_net(r.ae, r.ye, r.l1, r.l2, o);
    const Eigen::MatrixXd g = r.ae.transpose() * r.ae;
    const Eigen::VectorXd aty = r.ae.transpose() * r.ye;
    const auto gram = elastic_net_gram(g, aty, r.ye.squaredNorm(), r.l1, r.l2, o);
    EXPECT_LT((direct.coefficients - gram.coefficients).norm(), 1e-9);
    for (std::size_t i = 1; i < direct.objective_trace.size(); ++i) {
        EXPECT_LE(direct.objective_trace[i], direct.objective_trace[i - 1] * (1.0 + 1e-12));
    }
    EXPECT_NEAR(elastic_net_objective(r.ae, r.ye, direct.coefficients, r.l1, r.l2),
                direct.objective, 1e-9 * direct.objective);
}

TEST(ElasticNet, NonConvergenceIsFlagged) {
    Eigen::MatrixXd a(50, 2);
    for (int i = 0; i < 50; ++i) {
        a(i, 0) = std::sin(0.1 * i);
        a(i, 1) = a(i, 0) + 1e-4 * std::cos(0.3 * i);
    }
    Eigen::VectorXd y = a.col(0) + 2.0 * a.col(1);
    const auto result = elastic_net(a, y, 0.0, 0.0, {1e-14, 2, false});
    EXPECT_FALSE(result.converged);
    EXPECT_EQ(result.sweeps, 2);
    EXPECT_TRUE(result.coefficients.allFinite());
}

TEST(Library, DropsConstantNonFiniteAndDuplicateColumns) {
    const auto s = exact_record();
    const std::vector<Tree> population{
        x(0),
        Tree::constant(3.0),
        Tree::binary(Op::Divide, x(0), Tree::binary(Op::Minus, x(1), x(1))),
        Tree::binary(Op::Plus, x(0), x(1)),
        Tree::binary(Op::Plus, x(1), x(0)),
        mul(Tree::constant(2.0), x(0)),
        x(2)};
    const auto lib = build_library(population, s);
    ASSERT_EQ(lib.size(), 4u);  // bias, X0, X0+X1, X2
    EXPECT_EQ(lib.columns[0].name, "1");
    EXPECT_EQ(lib.term(0).source, 0u);
    EXPECT_EQ(lib.term(1).source, 3u);
    EXPECT_EQ(lib.term(2).source, 6u);
    ASSERT_EQ(lib.dropped.size(), 4u);
    std::map<std::size_t, DropReason> reasons;
    for (const auto& d : lib.dropped) reasons[d.source] = d.reason;
    EXPECT_EQ(reasons[1], DropReason::Constant);
    EXPECT_EQ(reasons[2], DropReason::NonFinite);
    EXPECT_EQ(reasons[4], DropReason::Duplicate);
    EXPECT_EQ(reasons[5], DropReason::Duplicate);
    // Standardized columns: zero mean and unit norm on the identification tail.
    for (Eigen::Index j = 0; j < lib.standardized.cols(); ++j) {
        EXPECT_NEAR(lib.standardized.col(j).sum(), 0.0, 1e-10);
        EXPECT_NEAR(lib.standardized.col(j).norm(), 1.0, 1e-12);
    }
    EXPECT_EQ(lib.standardized.rows(), static_cast<Eigen::Index>(s.identification_size()));
    EXPECT_EQ(lib.validation.rows(), static_cast<Eigen::Index>(s.validation_size()));
    EXPECT_LT((lib.gram - lib.standardized.transpose() * lib.standardized).norm(), 1e-12);
}

TEST(Library, OnlyConstantsIsEmpty) {
    const auto s = exact_record();
    const std::vector<Tree> population{Tree::constant(1.0), Tree::constant(2.0)};
    EXPECT_THROW((void)build_library(population, s), EmptyLibrary);
}

TEST(Library, CacheReusesColumns) {
    const auto s = exact_record();
    ColumnCache cache;
    const auto pool = candidate_pool();
    (void)build_library(pool, s, &cache);
    const auto misses = cache.misses();
    (void)build_library(pool, s, &cache);
    EXPECT_EQ(cache.misses(), misses);
    EXPECT_GE(cache.hits(), pool.size());
}

TEST(Refit, RecoversExactCoefficients) {
    const auto s = exact_record();
    const auto lib = build_library(candidate_pool(), s);
    const auto target = make_target(lib, s);
    const std::vector<std::size_t> support{0, 1, 2};
    const auto model = refit(lib, target, support);
    ASSERT_EQ(model.size(), 4u);
    std::map<std::string, double> c;
    for (const auto& t : model.terms) c[t.name] = t.coefficient;
    EXPECT_NEAR(c["X0"], 2.0, 1e-9);
    EXPECT_NEAR(c[lib.term(1).name], -3.0, 1e-9);
    EXPECT_NEAR(c["X2"], 0.5, 1e-9);
    EXPECT_NEAR(c["1"], 0.25, 1e-9);
    EXPECT_LT(model.validation_error, 1e-8);
}

TEST(Refit, InterceptBelowThresholdIsDropped) {
    const auto s = instances::synthetic_signals(400, 100, [](double q, double, double z) {
        return 2.0 * q + z;
    });
    const auto lib = build_library(candidate_pool(), s);
    const auto target = make_target(lib, s);
    const std::vector<std::size_t> support{0, 2};
    const auto model = refit(lib, target, support, 1e-6);
    EXPECT_EQ(model.size(), 2u);
    for (const auto& t : model.terms) EXPECT_NE(t.name, "1");
}

TEST(Sweep, SelectsTheTrueSparseSupport) {
    const auto s = exact_record();
    const auto lib = build_library(candidate_pool(), s);
    SweepDiagnostics diag;
    const auto model = sweep_and_select(lib, s, RegressionConfig{}, &diag);
    EXPECT_EQ(diag.grid_points, 36u);
    std::set<std::string> names;
    for (const auto& t : model.terms) names.insert(t.name);
    EXPECT_EQ(names, (std::set<std::string>{"1", "X0", "X2", lib.term(1).name}));
    EXPECT_LT(model.validation_error, 1e-6);
}

TEST(Sweep, ConfigValidation) {
    RegressionConfig c;
    c.lambda1.clear();
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.lambda2 = {-1.0};
    EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Metrics, PercentErrorAndPredict) {
    const auto s = exact_record();
    SparseModel m;
    m.terms.push_back({x(0), "X0", 1.5});
    m.terms.push_back({Tree::constant(1.0), "1", -0.5});
    const auto pred = predict(m, s);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        ASSERT_NEAR(pred[i], 1.5 * s.q[i] - 0.5, 1e-14);
        if (i < s.split) {
            num += std::pow(pred[i] - s.qddot[i], 2);
            den += s.qddot[i] * s.qddot[i];
        }
    }
    EXPECT_NEAR(percent_error(m, s), 100.0 * std::sqrt(num / den), 1e-10);
    auto flat = s;
    std::fill(flat.qddot.begin(), flat.qddot.end(), 0.0);
    EXPECT_THROW((void)percent_error(m, flat), ZeroSignalNorm);
}

TEST(Metrics, MatchTermsUsesProportionalColumns) {
    const auto s = exact_record();
    SparseModel m;
    m.terms.push_back({mul(Tree::constant(2.0), x(0)), "(2 * X0)", 3.0});
    m.terms.push_back({x(2), "X2", -1.0});
    m.terms.push_back({x(1), "X1", 0.1});
    const std::vector<std::pair<Tree, double>> ref{{x(0), 6.0}, {x(2), -1.0}, {mul(x(0), x(0)), 1.0}};
    const auto match = match_terms(m, ref, s, 1e-9);
    EXPECT_TRUE(match.found[0]);
    EXPECT_NEAR(match.coefficients[0], 6.0, 1e-12);
    EXPECT_TRUE(match.found[1]);
    EXPECT_FALSE(match.found[2]);
    EXPECT_EQ(match.extra, 1u);
    EXPECT_EQ(match.missing, 1u);
    EXPECT_FALSE(match.exact());
}

TEST(Simplify, KeepsErrorWithinBandAndNeverGrows) {
    const auto s = exact_record();
    // Redundant parametrisation of the true model: (X0 + X2) carries X0 and X2 jointly.
    const std::vector<Tree> pool{Tree::binary(Op::Plus, x(0), x(2)),
                                 mul(x(1), Tree::unary(Op::Abs, x(0))), x(2)};
    const auto lib = build_library(pool, s);
    const auto target = make_target(lib, s);
    const std::vector<std::size_t> support{0, 1, 2};
    const auto model = refit(lib, target, support);
    RegressionConfig config;
    const auto simple = simplify(model, s, config);
    EXPECT_LE(simple.size(), model.size());
    EXPECT_LE(simple.validation_error,
              model.validation_error * (1.0 + config.selection_tolerance) + 1e-9);
    std::size_t nodes_before = 0;
    std::size_t nodes_after = 0;
    for (const auto& t : model.terms) nodes_before += t.tree.size();
    for (const auto& t : simple.terms) nodes_after += t.tree.size();
    EXPECT_LT(nodes_after, nodes_before);
}

TEST(Simplify, ReachesFixedPointThroughNestedOffsets) {
    const auto s = instances::synthetic_signals(600, 200, [](double q, double, double z) {
        return 2.0 * q - 3.0 * q * q * q + 0.5 * z;
    });
    const auto c = Tree::constant(-0.4);
    const auto shifted = mul(Tree::binary(Op::Plus, c, x(0)), x(0));
    // ((((c + q) q) + c) q) + q spans q^3 only together with q^2 and q.
    const auto nested = Tree::binary(
        Op::Plus, mul(Tree::binary(Op::Plus, shifted, c), x(0)), x(0));
    const std::vector<Tree> pool{x(0), x(2), shifted, nested};
    const auto lib = build_library(pool, s);
    const auto target = make_target(lib, s);
    const std::vector<std::size_t> support{0, 1, 2, 3};
    const auto model = refit(lib, target, support);
    ASSERT_LT(model.validation_error, 1e-6);
    const auto simple = simplify(model, s, RegressionConfig{});
    ASSERT_EQ(simple.size(), 3u) << render(simple);
    std::set<std::string> names;
    for (const auto& t : simple.terms) names.insert(t.name);
    EXPECT_EQ(names, (std::set<std::string>{"X0", "X2", "((X0 * X0) * X0)"})) << render(simple);
    EXPECT_EQ(render(simplify(simple, s, RegressionConfig{}), 17), render(simple, 17));
}

TEST(Render, ShowsEveryTerm) {
    SparseModel m;
    m.terms.push_back({x(1), "X1", -3.5});
    m.terms.push_back({x(0), "X0", 2.0});
    const auto text = render(m, 4);
    EXPECT_NE(text.find("q''"), std::string::npos);
    EXPECT_NE(text.find("X1"), std::string::npos);
    EXPECT_NE(text.find("X0"), std::string::npos);
}
