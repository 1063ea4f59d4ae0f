#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "esparse/signals.hpp"

namespace esparse {

using Rng = std::mt19937_64;

namespace expr {

enum class Op : std::uint8_t { Variable, Constant, Abs, Sgn, Plus, Minus, Times, Divide };

[[nodiscard]] constexpr int arity(Op op) noexcept {
    switch (op) {
    case Op::Variable:
    case Op::Constant: return 0;
    case Op::Abs:
    case Op::Sgn: return 1;
    default: return 2;
    }
}

[[nodiscard]] constexpr bool is_commutative(Op op) noexcept {
    return op == Op::Plus || op == Op::Times;
}

[[nodiscard]] std::string_view op_name(Op op);
// Inverse of op_name for the function ops ("plus", "abs", ...).
[[nodiscard]] std::optional<Op> op_from_name(std::string_view name);

struct Node {
    Op op = Op::Constant;
    std::uint8_t variable = 0;
    double value = 0.0;

    friend bool operator==(const Node&, const Node&) = default;
};

// Immutable expression tree stored in prefix order, so every subtree is a
// contiguous node range. Depth counts levels: a lone leaf has depth 1.
class Tree {
public:
    // Validates arity; throws InvalidArgument on a malformed sequence.
    explicit Tree(std::vector<Node> prefix);

    static Tree variable(int index);
    static Tree constant(double value);
    static Tree unary(Op op, const Tree& child);
    static Tree binary(Op op, const Tree& lhs, const Tree& rhs);

    [[nodiscard]] std::span<const Node> nodes() const noexcept { return nodes_; }
    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
    [[nodiscard]] int depth() const noexcept { return depth_; }
    [[nodiscard]] const Node& root() const noexcept { return nodes_.front(); }

    // One past the last node of the subtree rooted at `index`.
    [[nodiscard]] std::size_t subtree_end(std::size_t index) const;
    [[nodiscard]] Tree subtree(std::size_t index) const;
    // 1-based level of every node (root = 1).
    [[nodiscard]] std::vector<int> levels() const;
    [[nodiscard]] Tree replace_subtree(std::size_t index, const Tree& replacement) const;
    // Child subtrees of the root, in order.
    [[nodiscard]] std::vector<Tree> children() const;

    [[nodiscard]] int max_variable() const noexcept;

    friend bool operator==(const Tree&, const Tree&) = default;

private:
    std::vector<Node> nodes_;
    int depth_ = 1;
};

struct PrimitiveSet {
    std::vector<Op> unary;
    std::vector<Op> binary;
    int variables = 3;
    // Probability that a generated leaf is a constant rather than a variable.
    double constant_probability = 0.25;
    // Constants are drawn log-uniform in magnitude with a random sign.
    double constant_min = 1e-2;
    double constant_max = 1e2;

    // plus, minus, times, abs, sgn
    [[nodiscard]] static PrimitiveSet numerical_duffing();
    // plus, minus, divide, times, abs, sgn
    [[nodiscard]] static PrimitiveSet friction_duffing();
    // Comma separated op names, e.g. "plus,times,sgn".
    [[nodiscard]] static PrimitiveSet from_names(std::string_view list);

    [[nodiscard]] bool contains(Op op) const noexcept;
    void validate() const;
    [[nodiscard]] std::string names() const;
};

[[nodiscard]] Tree random_leaf(const PrimitiveSet& primitives, Rng& rng);

// Grow construction: a node at level L (1-based) becomes a leaf with
// probability L / max_depth, and always at L == max_depth.
[[nodiscard]] Tree random_tree(const PrimitiveSet& primitives, int max_depth, Rng& rng);

// Swaps the subtree of `a` rooted at `point_a` with the subtree of `b`
// rooted at `point_b`. Offspring deeper than max_depth get every operator
// sitting at level max_depth replaced by a random leaf.
[[nodiscard]] std::pair<Tree, Tree> crossover_at(const Tree& a, std::size_t point_a, const Tree& b,
                                                 std::size_t point_b, const PrimitiveSet& primitives,
                                                 int max_depth, Rng& rng);
[[nodiscard]] std::pair<Tree, Tree> crossover(const Tree& a, const Tree& b,
                                              const PrimitiveSet& primitives, int max_depth,
                                              Rng& rng);

// Replaces the subtree at `point` by `replacement`, or by a fresh random
// tree that fits the remaining depth budget.
[[nodiscard]] Tree mutate_with(const Tree& a, std::size_t point, const Tree& replacement);
[[nodiscard]] Tree mutate_at(const Tree& a, std::size_t point, const PrimitiveSet& primitives,
                             int max_depth, Rng& rng);
[[nodiscard]] Tree mutate(const Tree& a, const PrimitiveSet& primitives, int max_depth, Rng& rng);

// Truncates any part of the tree below max_depth (see crossover_at).
[[nodiscard]] Tree enforce_depth(const Tree& tree, const PrimitiveSet& primitives, int max_depth,
                                 Rng& rng);

// Variables X0, X1, X2 map to q, qdot, zddot.
using Column = std::vector<double>;
[[nodiscard]] std::vector<std::span<const double>> signal_inputs(const SignalSet& signals);

// Elementwise evaluation; throws NonFiniteColumn when any entry is NaN/Inf.
[[nodiscard]] Column evaluate(const Tree& tree, std::span<const std::span<const double>> inputs);
[[nodiscard]] Column evaluate(const Tree& tree, const SignalSet& signals);
// Same, but reports non-finite output as nullopt.
[[nodiscard]] std::optional<Column> try_evaluate(const Tree& tree,
                                                 std::span<const std::span<const double>> inputs);

// Deterministic infix rendering: binary ops as "(a op b)", unary as
// "abs(a)" / "sgn(a)", variables "X0".., constants in shortest round-trip
// form. Operands of + and * are ordered lexicographically.
[[nodiscard]] std::string canonical_string(const Tree& tree);

// Parses the canonical grammar back into a tree (any operand order).
[[nodiscard]] Tree parse(std::string_view text);

}  // namespace expr
}  // namespace esparse
