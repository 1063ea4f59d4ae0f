#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "esparse/expr.hpp"
#include "esparse/signals.hpp"

namespace esparse::sparsereg {

struct RegressionConfig {
    std::vector<double> lambda1{1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2};
    std::vector<double> lambda2{0.0, 1e-4, 1e-2, 1.0};
    // |coefficient| threshold in standardized units (unit-norm columns and target).
    double zero_threshold = 1e-3;
    double tolerance = 1e-9;
    int max_iterations = 1000;
    // Candidates whose validation error is within this relative band of the
    // best count as tied and are resolved towards smaller supports.
    double selection_tolerance = 0.002;

    void validate() const;
};

// Column-evaluation memo keyed by canonical string. Entries not touched
// since the last `retain_recent` call are evicted there.
class ColumnCache {
public:
    using Entry = std::shared_ptr<const std::optional<expr::Column>>;

    Entry get_or_evaluate(const expr::Tree& tree, const std::string& key,
                          std::span<const std::span<const double>> inputs);
    void retain_recent();
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] std::size_t hits() const noexcept { return hits_; }
    [[nodiscard]] std::size_t misses() const noexcept { return misses_; }

private:
    struct Slot {
        Entry value;
        bool touched = false;
    };
    std::unordered_map<std::string, Slot> entries_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

enum class DropReason { NonFinite, Constant, Duplicate };

struct DroppedColumn {
    std::size_t source;  // index into the population
    std::string term;
    DropReason reason;
    // For duplicates: population index of the individual whose column was kept.
    std::size_t duplicate_of = std::numeric_limits<std::size_t>::max();
};

struct LibraryColumn {
    expr::Tree tree;
    std::string name;
    std::size_t source;  // population index; npos for the bias column
    double mean;         // identification-segment mean
    double scale;        // l2 norm of the centred identification column
};

// Candidate library. Column 0 is the constant bias; it is exempt from
// standardization and is handled as an intercept. `standardized` holds the
// remaining columns, centred and scaled to unit l2 norm over the
// identification segment.
struct LibraryMatrix {
    static constexpr std::size_t kBias = std::numeric_limits<std::size_t>::max();

    std::vector<LibraryColumn> columns;
    Eigen::MatrixXd standardized;  // n_id x (m - 1)
    Eigen::MatrixXd gram;          // standardized^T standardized
    Eigen::MatrixXd validation;    // n_val x (m - 1), raw values
    std::size_t split = 0;
    std::vector<DroppedColumn> dropped;

    [[nodiscard]] std::size_t size() const noexcept { return columns.size(); }
    [[nodiscard]] std::size_t term_count() const noexcept { return columns.size() - 1; }
    // Library column for standardized index j.
    [[nodiscard]] const LibraryColumn& term(std::size_t j) const { return columns[j + 1]; }
};

// Evaluates every tree on the record, drops non-finite, constant and
// duplicate columns (by canonical string, then by exact collinearity after
// standardization; the first occurrence wins) and prepends the bias.
// Throws EmptyLibrary when nothing but the bias survives.
[[nodiscard]] LibraryMatrix build_library(std::span<const expr::Tree> population,
                                          const SignalSet& signals, ColumnCache* cache = nullptr);

struct ElasticNetOptions {
    double tolerance = 1e-9;
    int max_iterations = 1000;
    bool record_objective = false;
};

struct ElasticNetResult {
    Eigen::VectorXd coefficients;
    int sweeps = 0;
    bool converged = false;
    double objective = 0.0;
    std::vector<double> objective_trace;  // after every full sweep, if requested
};

// Objective ||A x - y||^2 + l1 ||x||_1 + l2 ||x||^2.
[[nodiscard]] double elastic_net_objective(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                                           const Eigen::VectorXd& x, double l1, double l2);

// Cyclic coordinate descent with soft thresholding. Stops when the largest
// coefficient change in a full sweep is below the tolerance; `converged`
// is false if max_iterations sweeps were used up first.
[[nodiscard]] ElasticNetResult elastic_net(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                                           double l1, double l2,
                                           const ElasticNetOptions& options = {},
                                           const Eigen::VectorXd* warm_start = nullptr);

// Same solver on precomputed normal-equation data: gram = A^T A,
// aty = A^T y, yty = y^T y.
[[nodiscard]] ElasticNetResult elastic_net_gram(const Eigen::MatrixXd& gram,
                                                const Eigen::VectorXd& aty, double yty, double l1,
                                                double l2, const ElasticNetOptions& options = {},
                                                const Eigen::VectorXd* warm_start = nullptr);

struct Term {
    expr::Tree tree;
    std::string name;
    double coefficient;
};

struct SparseModel {
    std::vector<Term> terms;  // a constant-1 term carries the intercept
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double training_mse = 0.0;
    double validation_error = 0.0;  // percent
    // Standardized indices of the selected library columns.
    std::vector<std::size_t> support;

    [[nodiscard]] std::size_t size() const noexcept { return terms.size(); }
};

// Target statistics of the identification segment.
struct Target {
    Eigen::VectorXd standardized_aty;  // Z^T y_s with y_s the unit-norm centred target
    double mean = 0.0;
    double centred_norm = 0.0;
    std::size_t count = 0;
    std::vector<double> validation;  // raw validation-segment target
};

[[nodiscard]] Target make_target(const LibraryMatrix& library, const SignalSet& signals);

// Unpenalized least squares on a support (standardized indices), with an
// intercept. With `intercept_threshold` set, an intercept whose standardized
// magnitude falls below it is dropped and the fit repeated without it.
[[nodiscard]] SparseModel refit(const LibraryMatrix& library, const Target& target,
                                std::span<const std::size_t> support,
                                std::optional<double> intercept_threshold = std::nullopt);

// refit, repeated after dropping terms whose refitted standardized
// coefficient is not above `threshold`, until the support is stable.
[[nodiscard]] SparseModel pruned_refit(const LibraryMatrix& library, const Target& target,
                                       std::span<const std::size_t> support, double threshold);

// Training MSE of the intercept model with penalized standardized
// coefficients (same support semantics as refit).
[[nodiscard]] double penalized_training_mse(const LibraryMatrix& library, const Target& target,
                                            const Eigen::VectorXd& standardized_coefficients);

// MSE of the best single-column (plus intercept) fit of column j.
[[nodiscard]] double single_term_mse(const LibraryMatrix& library, const Target& target,
                                     std::size_t j);

struct SweepDiagnostics {
    std::size_t grid_points = 0;
    std::size_t empty_supports = 0;
    std::size_t unconverged = 0;
};

// Solves the elastic net over the (lambda1, lambda2) grid, thresholds the
// support, refits and keeps the model with the lowest validation error.
// Ties (within selection_tolerance) go to the smaller support, then fewer
// tree nodes, then the larger lambda1. Throws AllModelsEmpty.
[[nodiscard]] SparseModel sweep_and_select(const LibraryMatrix& library, const SignalSet& signals,
                                           const RegressionConfig& config,
                                           SweepDiagnostics* diagnostics = nullptr);

// Greedy simplification of a selected model. Candidate columns are the
// model's terms and all their non-constant subtrees; a move removes a term
// or swaps it for a candidate. The simplest move (terms, then nodes) whose
// refitted validation error stays within selection_tolerance of the input
// model's error is applied until none is left.
[[nodiscard]] SparseModel simplify(const SparseModel& model, const SignalSet& signals,
                                   const RegressionConfig& config);

// Comparison of a model against reference terms. A model term matches a
// reference term when their columns over the whole record are proportional
// (|cos| >= 1 - tolerance); its coefficient is carried over in reference
// units. Unmatched model terms, including an intercept, are extra.
struct TermMatch {
    std::vector<double> coefficients;  // per reference term; 0 if missing
    std::vector<bool> found;           // per reference term
    std::size_t extra = 0;
    std::size_t missing = 0;

    [[nodiscard]] bool exact() const noexcept { return extra == 0 && missing == 0; }
};

[[nodiscard]] TermMatch match_terms(const SparseModel& model,
                                    std::span<const std::pair<expr::Tree, double>> reference,
                                    const SignalSet& signals, double tolerance = 1e-9);

[[nodiscard]] expr::Column predict(const SparseModel& model,
                                   std::span<const std::span<const double>> inputs);
[[nodiscard]] expr::Column predict(const SparseModel& model, const SignalSet& signals);

// 100 ||pred - qddot|| / ||qddot|| over the validation head.
[[nodiscard]] double percent_error(const SparseModel& model, const SignalSet& signals);

// "q'' = -3.67 * X1 + ..." style rendering.
[[nodiscard]] std::string render(const SparseModel& model, int precision = 6);

}  // namespace esparse::sparsereg
