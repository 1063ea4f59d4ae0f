#include "esparse/sparsereg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <numeric>

#include "esparse/error.hpp"

namespace esparse::sparsereg {

namespace {

// Two standardized columns with |cos| above this are the same term up to an
// affine transform.
constexpr double kCollinear = 1.0 - 1e-9;

double soft_threshold(double value, double threshold) {
    if (value > threshold) return value - threshold;
    if (value < -threshold) return value + threshold;
    return 0.0;
}

Eigen::MatrixXd select(const Eigen::MatrixXd& m, std::span<const std::size_t> rows,
                       std::span<const std::size_t> cols) {
    Eigen::MatrixXd out(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                m(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
        }
    }
    return out;
}

Eigen::VectorXd solve_normal(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs) {
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        Eigen::VectorXd x = ldlt.solve(rhs);
        if (x.allFinite()) return x;
    }
    return gram.completeOrthogonalDecomposition().solve(rhs);
}

struct Candidate {
    SparseModel model;
    std::size_t nodes = 0;
};

// Strict weak order used after the error band is applied.
bool simpler(const Candidate& a, const Candidate& b) {
    if (a.model.size() != b.model.size()) return a.model.size() < b.model.size();
    if (a.nodes != b.nodes) return a.nodes < b.nodes;
    if (a.model.lambda1 != b.model.lambda1) return a.model.lambda1 > b.model.lambda1;
    if (a.model.lambda2 != b.model.lambda2) return a.model.lambda2 < b.model.lambda2;
    return a.model.validation_error < b.model.validation_error;
}

}  // namespace

void RegressionConfig::validate() const {
    if (lambda1.empty() || lambda2.empty()) {
        throw InvalidArgument("regularization grids must be non-empty");
    }
    for (double l : lambda1) {
        if (!(l >= 0.0)) throw InvalidArgument("lambda1 values must be non-negative");
    }
    for (double l : lambda2) {
        if (!(l >= 0.0)) throw InvalidArgument("lambda2 values must be non-negative");
    }
    if (!(zero_threshold > 0.0)) throw InvalidArgument("zero threshold must be positive");
    if (!(tolerance > 0.0)) throw InvalidArgument("solver tolerance must be positive");
    if (max_iterations < 1) throw InvalidArgument("max iterations must be at least 1");
    if (!(selection_tolerance >= 0.0)) {
        throw InvalidArgument("selection tolerance must be non-negative");
    }
}

ColumnCache::Entry ColumnCache::get_or_evaluate(const expr::Tree& tree, const std::string& key,
                                                std::span<const std::span<const double>> inputs) {
    auto it = entries_.find(key);
    if (it != entries_.end()) {
        ++hits_;
        it->second.touched = true;
        return it->second.value;
    }
    ++misses_;
    auto value = std::make_shared<const std::optional<expr::Column>>(
        expr::try_evaluate(tree, inputs));
    entries_.emplace(key, Slot{value, true});
    return value;
}

void ColumnCache::retain_recent() {
    for (auto it = entries_.begin(); it != entries_.end();) {
        if (!it->second.touched) {
            it = entries_.erase(it);
        } else {
            it->second.touched = false;
            ++it;
        }
    }
}

LibraryMatrix build_library(std::span<const expr::Tree> population, const SignalSet& signals,
                            ColumnCache* cache) {
    if (population.empty()) throw InvalidArgument("population must not be empty");
    signals.validate();
    const auto inputs = expr::signal_inputs(signals);
    const std::size_t split = signals.split;
    const std::size_t n_id = signals.identification_size();

    LibraryMatrix library;
    library.split = split;
    library.columns.push_back({expr::Tree::constant(1.0), "1", LibraryMatrix::kBias, 1.0, 0.0});

    struct Pending {
        std::size_t source;
        std::string name;
        ColumnCache::Entry column;
        double mean;
        double scale;
    };
    std::vector<Pending> pending;
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < population.size(); ++i) {
        std::string name = expr::canonical_string(population[i]);
        if (const auto it = seen.find(name); it != seen.end()) {
            library.dropped.push_back({i, std::move(name), DropReason::Duplicate, it->second});
            continue;
        }
        seen.emplace(name, i);
        ColumnCache::Entry column =
            cache != nullptr
                ? cache->get_or_evaluate(population[i], name, inputs)
                : std::make_shared<const std::optional<expr::Column>>(
                      expr::try_evaluate(population[i], inputs));
        if (!column->has_value()) {
            library.dropped.push_back({i, std::move(name), DropReason::NonFinite});
            continue;
        }
        const auto tail = identification_part(**column, split);
        const double mean = std::accumulate(tail.begin(), tail.end(), 0.0) / n_id;
        double sum_sq = 0.0;
        for (double v : tail) sum_sq += (v - mean) * (v - mean);
        const double scale = std::sqrt(sum_sq);
        if (!std::isfinite(scale) || !std::isfinite(mean)) {
            library.dropped.push_back({i, std::move(name), DropReason::NonFinite});
            continue;
        }
        if (scale == 0.0 || scale <= 1e-10 * std::abs(mean) * std::sqrt(double(n_id))) {
            library.dropped.push_back({i, std::move(name), DropReason::Constant});
            continue;
        }
        pending.push_back({i, std::move(name), std::move(column), mean, scale});
    }
    if (pending.empty()) {
        throw EmptyLibrary(std::to_string(population.size()) +
                           " candidate(s), all non-finite, constant or duplicate");
    }

    const auto k = static_cast<Eigen::Index>(pending.size());
    Eigen::MatrixXd z(static_cast<Eigen::Index>(n_id), k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const auto& p = pending[static_cast<std::size_t>(j)];
        const auto tail = identification_part(**p.column, split);
        const double inv = 1.0 / p.scale;
        for (std::size_t i = 0; i < n_id; ++i) {
            z(static_cast<Eigen::Index>(i), j) = (tail[i] - p.mean) * inv;
        }
    }
    Eigen::MatrixXd gram(k, k);
    gram.setZero();
    gram.selfadjointView<Eigen::Lower>().rankUpdate(z.transpose());
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();

    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < pending.size(); ++j) {
        std::optional<std::size_t> original;
        for (std::size_t i : kept) {
            if (std::abs(gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) >=
                kCollinear) {
                original = i;
                break;
            }
        }
        if (original) {
            library.dropped.push_back({pending[j].source, pending[j].name, DropReason::Duplicate,
                                       pending[*original].source});
        } else {
            kept.push_back(j);
        }
    }

    if (kept.size() == pending.size()) {
        library.standardized = std::move(z);
        library.gram = std::move(gram);
    } else {
        library.standardized.resize(z.rows(), static_cast<Eigen::Index>(kept.size()));
        for (std::size_t j = 0; j < kept.size(); ++j) {
            library.standardized.col(static_cast<Eigen::Index>(j)) =
                z.col(static_cast<Eigen::Index>(kept[j]));
        }
        library.gram = select(gram, kept, kept);
    }

    library.validation.resize(static_cast<Eigen::Index>(split),
                              static_cast<Eigen::Index>(kept.size()));
    for (std::size_t j = 0; j < kept.size(); ++j) {
        auto& p = pending[kept[j]];
        const auto head = validation_part(**p.column, split);
        for (std::size_t i = 0; i < split; ++i) {
            library.validation(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                head[i];
        }
        library.columns.push_back(
            {population[p.source], std::move(p.name), p.source, p.mean, p.scale});
    }
    return library;
}

double elastic_net_objective(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& x, double l1, double l2) {
    return (a * x - y).squaredNorm() + l1 * x.lpNorm<1>() + l2 * x.squaredNorm();
}

ElasticNetResult elastic_net(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, double l1,
                             double l2, const ElasticNetOptions& options,
                             const Eigen::VectorXd* warm_start) {
    if (a.rows() != y.size()) throw InvalidArgument("design matrix and target sizes differ");
    const Eigen::MatrixXd gram = a.transpose() * a;
    const Eigen::VectorXd aty = a.transpose() * y;
    return elastic_net_gram(gram, aty, y.squaredNorm(), l1, l2, options, warm_start);
}

ElasticNetResult elastic_net_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& aty,
                                  double yty, double l1, double l2,
                                  const ElasticNetOptions& options,
                                  const Eigen::VectorXd* warm_start) {
    const Eigen::Index m = gram.rows();
    if (gram.cols() != m || aty.size() != m) throw InvalidArgument("gram/aty size mismatch");
    if (!(l1 >= 0.0) || !(l2 >= 0.0)) throw InvalidArgument("penalties must be non-negative");

    ElasticNetResult result;
    result.coefficients = warm_start != nullptr && warm_start->size() == m
                              ? *warm_start
                              : Eigen::VectorXd::Zero(m);
    Eigen::VectorXd& x = result.coefficients;
    // Correlation of each column with the current residual.
    Eigen::VectorXd g = aty - gram * x;
    const double half_l1 = 0.5 * l1;

    auto objective = [&] {
        return yty - 2.0 * x.dot(aty) + x.dot(gram * x) + l1 * x.lpNorm<1>() +
               l2 * x.squaredNorm();
    };
    auto update = [&](Eigen::Index j) {
        const double denom = gram(j, j) + l2;
        double next = 0.0;
        if (denom > 0.0) next = soft_threshold(g(j) + gram(j, j) * x(j), half_l1) / denom;
        const double delta = next - x(j);
        if (delta != 0.0) {
            g.noalias() -= gram.col(j) * delta;
            x(j) = next;
        }
        return std::abs(delta);
    };

    std::vector<Eigen::Index> active;
    while (result.sweeps < options.max_iterations) {
        double max_delta = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) max_delta = std::max(max_delta, update(j));
        ++result.sweeps;
        if (options.record_objective) result.objective_trace.push_back(objective());
        if (max_delta < options.tolerance) {
            result.converged = true;
            break;
        }
        // Iterate on the current active set before the next full sweep.
        active.clear();
        for (Eigen::Index j = 0; j < m; ++j) {
            if (x(j) != 0.0) active.push_back(j);
        }
        while (result.sweeps < options.max_iterations) {
            double active_delta = 0.0;
            for (Eigen::Index j : active) active_delta = std::max(active_delta, update(j));
            ++result.sweeps;
            if (options.record_objective) result.objective_trace.push_back(objective());
            if (active_delta < options.tolerance) break;
        }
    }
    result.objective = objective();
    return result;
}

Target make_target(const LibraryMatrix& library, const SignalSet& signals) {
    const std::size_t split = library.split;
    if (signals.split != split || signals.identification_size() !=
                                      static_cast<std::size_t>(library.standardized.rows())) {
        throw InvalidArgument("signals do not match the library's split");
    }
    const auto tail = identification_part(signals.qddot, split);
    Target target;
    target.count = tail.size();
    target.mean = std::accumulate(tail.begin(), tail.end(), 0.0) / target.count;
    Eigen::VectorXd centred(static_cast<Eigen::Index>(tail.size()));
    for (std::size_t i = 0; i < tail.size(); ++i) {
        centred(static_cast<Eigen::Index>(i)) = tail[i] - target.mean;
    }
    target.centred_norm = centred.norm();
    if (!(target.centred_norm > 0.0)) throw ZeroSignalNorm();
    target.standardized_aty = library.standardized.transpose() * (centred / target.centred_norm);
    const auto head = validation_part(signals.qddot, split);
    target.validation.assign(head.begin(), head.end());
    return target;
}

SparseModel refit(const LibraryMatrix& library, const Target& target,
                  std::span<const std::size_t> support, std::optional<double> intercept_threshold) {
    const auto k = static_cast<Eigen::Index>(support.size());
    const double n = static_cast<double>(target.count);
    const Eigen::MatrixXd g = select(library.gram, support, support);
    Eigen::VectorXd a(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        a(j) = target.standardized_aty(static_cast<Eigen::Index>(support[static_cast<std::size_t>(j)]));
    }

    // Work in units of the centred target norm: y = ys + t u with u the unit
    // constant direction, orthogonal to every standardized column.
    Eigen::VectorXd gamma = k > 0 ? solve_normal(g, a) : Eigen::VectorXd();
    double rss = 1.0 - 2.0 * gamma.dot(a) + gamma.dot(g * gamma);

    std::vector<double> beta(support.size());
    double intercept = target.mean;
    for (std::size_t j = 0; j < support.size(); ++j) {
        const auto& column = library.term(support[j]);
        beta[j] = gamma(static_cast<Eigen::Index>(j)) * target.centred_norm / column.scale;
        intercept -= beta[j] * column.mean;
    }
    bool with_intercept = true;
    if (intercept_threshold &&
        std::abs(intercept) * std::sqrt(n) / target.centred_norm < *intercept_threshold && k > 0) {
        // Refit through the origin: raw column j is scale_j (z_j + c_j u).
        with_intercept = false;
        Eigen::VectorXd c(k);
        for (Eigen::Index j = 0; j < k; ++j) {
            const auto& column = library.term(support[static_cast<std::size_t>(j)]);
            c(j) = column.mean * std::sqrt(n) / column.scale;
        }
        const double t = target.mean * std::sqrt(n) / target.centred_norm;
        const Eigen::MatrixXd gw = g + c * c.transpose();
        const Eigen::VectorXd aw = a + c * t;
        const Eigen::VectorXd delta = solve_normal(gw, aw);
        const Eigen::VectorXd zpart = delta;
        const double offset = t - delta.dot(c);
        rss = 1.0 - 2.0 * zpart.dot(a) + zpart.dot(g * zpart) + offset * offset;
        for (std::size_t j = 0; j < support.size(); ++j) {
            beta[j] = delta(static_cast<Eigen::Index>(j)) * target.centred_norm /
                      library.term(support[j]).scale;
        }
        intercept = 0.0;
    }

    SparseModel model;
    if (with_intercept && intercept != 0.0) {
        model.terms.push_back({expr::Tree::constant(1.0), "1", intercept});
    }
    for (std::size_t j = 0; j < support.size(); ++j) {
        if (beta[j] == 0.0) continue;
        const auto& column = library.term(support[j]);
        model.terms.push_back({column.tree, column.name, beta[j]});
        model.support.push_back(support[j]);
    }
    model.training_mse = std::max(0.0, rss) * target.centred_norm * target.centred_norm / n;

    // Validation error on the held-out head.
    const std::size_t n_val = target.validation.size();
    double err = 0.0;
    double ref = 0.0;
    for (std::size_t i = 0; i < n_val; ++i) {
        double pred = with_intercept ? intercept : 0.0;
        for (std::size_t j = 0; j < support.size(); ++j) {
            pred += beta[j] * library.validation(static_cast<Eigen::Index>(i),
                                                 static_cast<Eigen::Index>(support[j]));
        }
        const double diff = pred - target.validation[i];
        err += diff * diff;
        ref += target.validation[i] * target.validation[i];
    }
    if (!(ref > 0.0)) throw ZeroSignalNorm();
    model.validation_error = 100.0 * std::sqrt(err / ref);
    return model;
}

double penalized_training_mse(const LibraryMatrix& library, const Target& target,
                              const Eigen::VectorXd& standardized_coefficients) {
    const Eigen::VectorXd& x = standardized_coefficients;
    const double rss =
        1.0 - 2.0 * x.dot(target.standardized_aty) + x.dot(library.gram * x);
    return std::max(0.0, rss) * target.centred_norm * target.centred_norm /
           static_cast<double>(target.count);
}

double single_term_mse(const LibraryMatrix& library, const Target& target, std::size_t j) {
    if (j >= library.term_count()) throw InvalidArgument("column index out of range");
    const double a = target.standardized_aty(static_cast<Eigen::Index>(j));
    const double rss = std::max(0.0, 1.0 - a * a);
    return rss * target.centred_norm * target.centred_norm / static_cast<double>(target.count);
}

SparseModel pruned_refit(const LibraryMatrix& library, const Target& target,
                         std::span<const std::size_t> support, double threshold) {
    std::vector<std::size_t> current(support.begin(), support.end());
    for (;;) {
        SparseModel model = refit(library, target, current, threshold);
        std::vector<std::size_t> kept;
        for (std::size_t k = 0, t = 0; k < model.terms.size(); ++k) {
            if (model.terms[k].name == "1") continue;
            const std::size_t j = model.support[t++];
            const double standardized =
                model.terms[k].coefficient * library.term(j).scale / target.centred_norm;
            if (std::abs(standardized) > threshold) kept.push_back(j);
        }
        if (kept.size() == current.size() || kept.empty()) return model;
        current = std::move(kept);
    }
}

SparseModel sweep_and_select(const LibraryMatrix& library, const SignalSet& signals,
                             const RegressionConfig& config, SweepDiagnostics* diagnostics) {
    config.validate();
    const Target target = make_target(library, signals);
    const Eigen::Index m = library.gram.rows();

    std::vector<double> lambda1 = config.lambda1;
    std::sort(lambda1.begin(), lambda1.end(), std::greater<>());
    const ElasticNetOptions options{config.tolerance, config.max_iterations, false};

    SweepDiagnostics local;
    std::map<std::vector<std::size_t>, SparseModel> refits;
    std::vector<Candidate> candidates;
    for (double l2 : config.lambda2) {
        Eigen::VectorXd warm = Eigen::VectorXd::Zero(m);
        for (double l1 : lambda1) {
            ++local.grid_points;
            auto result = elastic_net_gram(library.gram, target.standardized_aty, 1.0, l1, l2,
                                           options, &warm);
            warm = result.coefficients;
            if (!result.converged) ++local.unconverged;
            std::vector<std::size_t> support;
            for (Eigen::Index j = 0; j < m; ++j) {
                if (std::abs(result.coefficients(j)) > config.zero_threshold) {
                    support.push_back(static_cast<std::size_t>(j));
                }
            }
            if (support.empty()) {
                ++local.empty_supports;
                continue;
            }
            auto it = refits.find(support);
            if (it == refits.end()) {
                it = refits.emplace(support, pruned_refit(library, target, support,
                                                          config.zero_threshold))
                         .first;
            }
            Candidate candidate{it->second, 0};
            candidate.model.lambda1 = l1;
            candidate.model.lambda2 = l2;
            for (const auto& term : candidate.model.terms) candidate.nodes += term.tree.size();
            if (candidate.model.terms.empty()) {
                ++local.empty_supports;
                continue;
            }
            candidates.push_back(std::move(candidate));
        }
    }
    if (diagnostics != nullptr) *diagnostics = local;
    if (candidates.empty()) throw AllModelsEmpty();

    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) best = std::min(best, c.model.validation_error);
    const double band = best * (1.0 + config.selection_tolerance) + 1e-9;
    const Candidate* chosen = nullptr;
    for (const auto& c : candidates) {
        if (c.model.validation_error > band) continue;
        if (chosen == nullptr || simpler(c, *chosen)) chosen = &c;
    }
    return chosen->model;
}

namespace {

SparseModel simplify_once(const SparseModel& model, const SignalSet& signals,
                          const RegressionConfig& config, double band) {
    // Terms, plus variants with one sum or difference replaced by either
    // operand, and all their non-constant subtrees.
    std::vector<expr::Tree> roots;
    for (const auto& term : model.terms) {
        if (term.name == "1") continue;
        roots.push_back(term.tree);
        const auto nodes = term.tree.nodes();
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (nodes[i].op != expr::Op::Plus && nodes[i].op != expr::Op::Minus) continue;
            const std::size_t left = i + 1;
            const std::size_t right = term.tree.subtree_end(left);
            roots.push_back(term.tree.replace_subtree(i, term.tree.subtree(left)));
            roots.push_back(term.tree.replace_subtree(i, term.tree.subtree(right)));
        }
    }
    std::vector<expr::Tree> pool;
    std::set<std::string> seen;
    for (const auto& root : roots) {
        for (std::size_t i = 0; i < root.size(); ++i) {
            auto sub = root.subtree(i);
            if (sub.max_variable() < 0) continue;
            if (seen.insert(expr::canonical_string(sub)).second) pool.push_back(std::move(sub));
        }
    }
    if (pool.empty()) return model;
    // Smaller trees first so collinear duplicates resolve to the simpler form.
    std::stable_sort(pool.begin(), pool.end(),
                     [](const expr::Tree& a, const expr::Tree& b) { return a.size() < b.size(); });

    LibraryMatrix library;
    try {
        library = build_library(pool, signals);
    } catch (const EmptyLibrary&) {
        return model;
    }
    const Target target = make_target(library, signals);

    std::map<std::size_t, std::size_t> column_of;  // pool index -> standardized index
    for (std::size_t j = 0; j < library.term_count(); ++j) column_of[library.term(j).source] = j;
    std::map<std::size_t, std::size_t> redirect;
    for (const auto& d : library.dropped) {
        if (d.reason == DropReason::Duplicate) redirect[d.source] = d.duplicate_of;
    }
    auto column_for = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (expr::canonical_string(pool[i]) != name) continue;
            std::size_t source = i;
            for (int hops = 0; hops < 4 && !column_of.count(source); ++hops) {
                const auto r = redirect.find(source);
                if (r == redirect.end()) break;
                source = r->second;
            }
            const auto it = column_of.find(source);
            if (it == column_of.end()) return std::nullopt;
            return it->second;
        }
        return std::nullopt;
    };

    std::vector<std::size_t> support;
    for (const auto& term : model.terms) {
        if (term.name == "1") continue;
        const auto j = column_for(term.name);
        if (!j) return model;
        if (std::find(support.begin(), support.end(), *j) == support.end()) support.push_back(*j);
    }
    std::sort(support.begin(), support.end());

    auto nodes_of = [](const SparseModel& m) {
        std::size_t nodes = 0;
        for (const auto& term : m.terms) nodes += term.tree.size();
        return nodes;
    };
    auto score = [&](std::vector<std::size_t> s) -> std::optional<Candidate> {
        std::sort(s.begin(), s.end());
        if (s.empty()) return std::nullopt;
        Candidate c{pruned_refit(library, target, s, config.zero_threshold), 0};
        if (c.model.terms.empty() || !(c.model.validation_error <= band)) return std::nullopt;
        c.nodes = nodes_of(c.model);
        return c;
    };

    auto polish = [&](Candidate current) {
        for (;;) {
            std::optional<Candidate> step;
            const auto& s = current.model.support;
            auto consider = [&](std::vector<std::size_t> trial) {
                auto c = score(std::move(trial));
                if (c && simpler(*c, current) && (!step || simpler(*c, *step))) step = std::move(c);
            };
            for (std::size_t k = 0; k < s.size(); ++k) {
                std::vector<std::size_t> trial = s;
                trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(k));
                consider(trial);
                for (std::size_t j = 0; j < library.term_count(); ++j) {
                    if (std::find(s.begin(), s.end(), j) != s.end()) continue;
                    std::vector<std::size_t> swapped = s;
                    swapped[k] = j;
                    consider(swapped);
                }
            }
            if (!step) return current;
            current = std::move(*step);
        }
    };

    // Backward elimination over the whole pool, largest trees first.
    auto eliminate = [&]() -> std::optional<Candidate> {
        std::vector<std::size_t> all(library.term_count());
        std::iota(all.begin(), all.end(), std::size_t{0});
        auto current = score(all);
        if (!current) return std::nullopt;
        std::vector<std::size_t> order = all;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            return library.term(x).tree.size() > library.term(y).tree.size();
        });
        for (bool changed = true; changed;) {
            changed = false;
            for (std::size_t k : order) {
                auto& s = current->model.support;
                const auto at = std::find(s.begin(), s.end(), k);
                if (at == s.end() || s.size() == 1) continue;
                std::vector<std::size_t> trial = s;
                trial.erase(trial.begin() + (at - s.begin()));
                if (auto c = score(trial)) {
                    current = std::move(c);
                    changed = true;
                }
            }
        }
        return current;
    };

    Candidate best{model, nodes_of(model)};
    for (auto start : {score(support), eliminate()}) {
        if (!start) continue;
        auto polished = polish(std::move(*start));
        polished.model.lambda1 = model.lambda1;
        polished.model.lambda2 = model.lambda2;
        if (simpler(polished, best)) best = std::move(polished);
    }
    return best.model;
}

std::size_t total_nodes(const SparseModel& model) {
    std::size_t nodes = 0;
    for (const auto& term : model.terms) nodes += term.tree.size();
    return nodes;
}

}  // namespace

SparseModel simplify(const SparseModel& model, const SignalSet& signals,
                     const RegressionConfig& config) {
    config.validate();
    const double band = model.validation_error * (1.0 + config.selection_tolerance) + 1e-9;
    Candidate current{model, total_nodes(model)};
    for (;;) {
        auto next = simplify_once(current.model, signals, config, band);
        Candidate candidate{next, total_nodes(next)};
        if (!simpler(candidate, current)) return current.model;
        current = std::move(candidate);
    }
}

TermMatch match_terms(const SparseModel& model,
                      std::span<const std::pair<expr::Tree, double>> reference,
                      const SignalSet& signals, double tolerance) {
    const auto inputs = expr::signal_inputs(signals);
    std::vector<expr::Column> truth;
    for (const auto& [tree, coefficient] : reference) truth.push_back(expr::evaluate(tree, inputs));
    TermMatch match;
    match.coefficients.assign(reference.size(), 0.0);
    match.found.assign(reference.size(), false);
    for (const auto& term : model.terms) {
        const auto column = expr::evaluate(term.tree, inputs);
        bool matched = false;
        for (std::size_t r = 0; r < truth.size() && !matched; ++r) {
            double xy = 0.0, xx = 0.0, yy = 0.0;
            for (std::size_t i = 0; i < column.size(); ++i) {
                xy += column[i] * truth[r][i];
                xx += column[i] * column[i];
                yy += truth[r][i] * truth[r][i];
            }
            if (!(xx > 0.0 && yy > 0.0)) continue;
            if (std::abs(xy) / std::sqrt(xx * yy) < 1.0 - tolerance) continue;
            match.coefficients[r] += term.coefficient * xy / yy;
            match.found[r] = true;
            matched = true;
        }
        if (!matched) ++match.extra;
    }
    for (bool f : match.found) match.missing += f ? 0 : 1;
    return match;
}

expr::Column predict(const SparseModel& model, std::span<const std::span<const double>> inputs) {
    if (inputs.empty()) throw InvalidArgument("prediction needs input columns");
    expr::Column out(inputs.front().size(), 0.0);
    for (const auto& term : model.terms) {
        const auto column = expr::evaluate(term.tree, inputs);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += term.coefficient * column[i];
    }
    return out;
}

expr::Column predict(const SparseModel& model, const SignalSet& signals) {
    const auto inputs = expr::signal_inputs(signals);
    return predict(model, inputs);
}

double percent_error(const SparseModel& model, const SignalSet& signals) {
    if (model.terms.empty()) throw InvalidArgument("model has no terms");
    if (signals.split == 0 || signals.split > signals.size()) {
        throw InvalidArgument("signals have no validation segment");
    }
    const auto pred = predict(model, signals);
    double err = 0.0;
    double ref = 0.0;
    for (std::size_t i = 0; i < signals.split; ++i) {
        const double diff = pred[i] - signals.qddot[i];
        err += diff * diff;
        ref += signals.qddot[i] * signals.qddot[i];
    }
    if (!(ref > 0.0)) throw ZeroSignalNorm();
    return 100.0 * std::sqrt(err / ref);
}

std::string render(const SparseModel& model, int precision) {
    std::string out = "q'' =";
    bool first = true;
    char buffer[64];
    for (const auto& term : model.terms) {
        const double c = term.coefficient;
        std::snprintf(buffer, sizeof(buffer), "%.*g", precision, std::abs(c));
        out += first ? (c < 0 ? " -" : " ") : (c < 0 ? " - " : " + ");
        out += buffer;
        if (term.name != "1") out += " * " + term.name;
        first = false;
    }
    if (first) out += " 0";
    return out;
}

}  // namespace esparse::sparsereg
