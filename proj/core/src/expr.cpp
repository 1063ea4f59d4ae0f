#include "esparse/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "esparse/error.hpp"

namespace esparse::expr {

namespace {

constexpr std::string_view kOpNames[] = {"var", "const", "abs", "sgn",
                                         "plus", "minus", "times", "divide"};

int compute_depth(std::span<const Node> nodes) {
    // Walk the prefix sequence keeping the pending-children count per level.
    std::vector<int> pending;
    int depth = 0;
    for (const Node& node : nodes) {
        const int level = static_cast<int>(pending.size()) + 1;
        depth = std::max(depth, level);
        if (!pending.empty()) {
            --pending.back();
        }
        if (arity(node.op) > 0) {
            pending.push_back(arity(node.op));
        }
        while (!pending.empty() && pending.back() == 0) {
            pending.pop_back();
        }
    }
    return depth;
}

double signum(double x) {
    if (x > 0.0) return 1.0;
    if (x < 0.0) return -1.0;
    return x;  // keeps 0 and NaN
}

double draw_constant(const PrimitiveSet& primitives, Rng& rng) {
    std::uniform_real_distribution<double> exponent(std::log(primitives.constant_min),
                                                    std::log(primitives.constant_max));
    std::bernoulli_distribution negative(0.5);
    const double magnitude = std::exp(exponent(rng));
    return negative(rng) ? -magnitude : magnitude;
}

void grow(std::vector<Node>& out, const PrimitiveSet& primitives, int level, int max_depth,
          Rng& rng) {
    const std::size_t op_count = primitives.unary.size() + primitives.binary.size();
    std::bernoulli_distribution leaf(static_cast<double>(level) / max_depth);
    if (level >= max_depth || op_count == 0 || leaf(rng)) {
        const auto node = random_leaf(primitives, rng).root();
        out.push_back(node);
        return;
    }
    std::uniform_int_distribution<std::size_t> pick(0, op_count - 1);
    const std::size_t choice = pick(rng);
    if (choice < primitives.unary.size()) {
        out.push_back({primitives.unary[choice], 0, 0.0});
        grow(out, primitives, level + 1, max_depth, rng);
    } else {
        out.push_back({primitives.binary[choice - primitives.unary.size()], 0, 0.0});
        grow(out, primitives, level + 1, max_depth, rng);
        grow(out, primitives, level + 1, max_depth, rng);
    }
}

std::string format_constant(double value) {
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
}

std::string render(std::span<const Node> nodes, std::size_t& pos) {
    const Node& node = nodes[pos++];
    switch (node.op) {
    case Op::Variable: return "X" + std::to_string(node.variable);
    case Op::Constant: return format_constant(node.value);
    case Op::Abs:
    case Op::Sgn: {
        std::string inner = render(nodes, pos);
        return std::string(op_name(node.op)) + "(" + inner + ")";
    }
    default: break;
    }
    std::string lhs = render(nodes, pos);
    std::string rhs = render(nodes, pos);
    if (is_commutative(node.op) && rhs < lhs) {
        std::swap(lhs, rhs);
    }
    const char* symbol = node.op == Op::Plus    ? " + "
                         : node.op == Op::Minus ? " - "
                         : node.op == Op::Times ? " * "
                                                : " / ";
    return "(" + lhs + symbol + rhs + ")";
}

class Evaluator {
public:
    Evaluator(std::span<const Node> nodes, std::span<const std::span<const double>> inputs)
        : nodes_(nodes),
          inputs_(inputs),
          n_(inputs.empty() ? 0 : inputs.front().size()),
          scratch_(nodes.size()) {}

    Column run() {
        std::size_t pos = 0;
        Column out(n_);
        eval(pos, out, 0);
        return out;
    }

private:
    template <typename F>
    void combine(std::span<double> out, std::size_t& pos, std::size_t level, F op) {
        // Leaf operands are read in place; deeper ones use a per-level buffer.
        const Node& rhs = nodes_[pos];
        if (rhs.op == Op::Variable) {
            ++pos;
            const auto& column = inputs_[rhs.variable];
            for (std::size_t i = 0; i < n_; ++i) out[i] = op(out[i], column[i]);
            return;
        }
        if (rhs.op == Op::Constant) {
            ++pos;
            const double c = rhs.value;
            for (std::size_t i = 0; i < n_; ++i) out[i] = op(out[i], c);
            return;
        }
        Column& buffer = scratch_[level];
        buffer.resize(n_);
        eval(pos, buffer, level + 1);
        for (std::size_t i = 0; i < n_; ++i) out[i] = op(out[i], buffer[i]);
    }

    void eval(std::size_t& pos, std::span<double> out, std::size_t level) {
        const Node& node = nodes_[pos++];
        switch (node.op) {
        case Op::Variable: {
            const auto& column = inputs_[node.variable];
            std::copy(column.begin(), column.end(), out.begin());
            return;
        }
        case Op::Constant: std::fill(out.begin(), out.end(), node.value); return;
        case Op::Abs:
            eval(pos, out, level);
            for (double& v : out) v = std::abs(v);
            return;
        case Op::Sgn:
            eval(pos, out, level);
            for (double& v : out) v = signum(v);
            return;
        default: break;
        }
        eval(pos, out, level);
        switch (node.op) {
        case Op::Plus: combine(out, pos, level, [](double a, double b) { return a + b; }); break;
        case Op::Minus: combine(out, pos, level, [](double a, double b) { return a - b; }); break;
        case Op::Times: combine(out, pos, level, [](double a, double b) { return a * b; }); break;
        default: combine(out, pos, level, [](double a, double b) { return a / b; }); break;
        }
    }

    std::span<const Node> nodes_;
    std::span<const std::span<const double>> inputs_;
    std::size_t n_;
    std::vector<Column> scratch_;
};

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    Tree parse_all() {
        std::vector<Node> out;
        parse_expr(out);
        skip_space();
        if (pos_ != text_.size()) {
            fail("trailing characters");
        }
        return Tree(std::move(out));
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw InvalidArgument("cannot parse expression '" + std::string(text_) + "' at offset " +
                              std::to_string(pos_) + ": " + what);
    }

    void skip_space() {
        while (pos_ < text_.size() && text_[pos_] == ' ') ++pos_;
    }

    void expect(char c) {
        skip_space();
        if (pos_ >= text_.size() || text_[pos_] != c) {
            fail(std::string("expected '") + c + "'");
        }
        ++pos_;
    }

    void parse_expr(std::vector<Node>& out) {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            // Operator node is emitted before its operands in prefix order.
            const std::size_t slot = out.size();
            out.push_back({});
            parse_expr(out);
            skip_space();
            if (pos_ >= text_.size()) fail("missing operator");
            Op op;
            switch (text_[pos_]) {
            case '+': op = Op::Plus; break;
            case '-': op = Op::Minus; break;
            case '*': op = Op::Times; break;
            case '/': op = Op::Divide; break;
            default: fail("unknown operator");
            }
            ++pos_;
            out[slot] = {op, 0, 0.0};
            parse_expr(out);
            expect(')');
            return;
        }
        if (c == 'X') {
            ++pos_;
            const std::size_t start = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
            }
            if (start == pos_) fail("variable index missing");
            int index = 0;
            std::from_chars(text_.data() + start, text_.data() + pos_, index);
            if (index > 255) fail("variable index out of range");
            out.push_back({Op::Variable, static_cast<std::uint8_t>(index), 0.0});
            return;
        }
        if (text_.substr(pos_, 4) == "abs(" || text_.substr(pos_, 4) == "sgn(") {
            out.push_back({text_[pos_] == 'a' ? Op::Abs : Op::Sgn, 0, 0.0});
            pos_ += 4;
            parse_expr(out);
            expect(')');
            return;
        }
        double value = 0.0;
        const auto result = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
        if (result.ec != std::errc()) fail("expected a term");
        pos_ = static_cast<std::size_t>(result.ptr - text_.data());
        out.push_back({Op::Constant, 0, value});
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string_view op_name(Op op) { return kOpNames[static_cast<int>(op)]; }

std::optional<Op> op_from_name(std::string_view name) {
    for (int i = 2; i < 8; ++i) {
        if (kOpNames[i] == name) return static_cast<Op>(i);
    }
    return std::nullopt;
}

Tree::Tree(std::vector<Node> prefix) : nodes_(std::move(prefix)) {
    if (nodes_.empty()) {
        throw InvalidArgument("expression tree must have at least one node");
    }
    long need = 1;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (need == 0) {
            throw InvalidArgument("expression tree has trailing nodes");
        }
        need += arity(nodes_[i].op) - 1;
    }
    if (need != 0) {
        throw InvalidArgument("expression tree is missing operands");
    }
    depth_ = compute_depth(nodes_);
}

Tree Tree::variable(int index) {
    if (index < 0 || index > 255) throw InvalidArgument("variable index out of range");
    return Tree({{Op::Variable, static_cast<std::uint8_t>(index), 0.0}});
}

Tree Tree::constant(double value) { return Tree({{Op::Constant, 0, value}}); }

Tree Tree::unary(Op op, const Tree& child) {
    if (arity(op) != 1) throw InvalidArgument("not a unary op");
    std::vector<Node> nodes{{op, 0, 0.0}};
    nodes.insert(nodes.end(), child.nodes_.begin(), child.nodes_.end());
    return Tree(std::move(nodes));
}

Tree Tree::binary(Op op, const Tree& lhs, const Tree& rhs) {
    if (arity(op) != 2) throw InvalidArgument("not a binary op");
    std::vector<Node> nodes{{op, 0, 0.0}};
    nodes.insert(nodes.end(), lhs.nodes_.begin(), lhs.nodes_.end());
    nodes.insert(nodes.end(), rhs.nodes_.begin(), rhs.nodes_.end());
    return Tree(std::move(nodes));
}

std::size_t Tree::subtree_end(std::size_t index) const {
    long need = 1;
    std::size_t j = index;
    while (need > 0) {
        need += arity(nodes_[j].op) - 1;
        ++j;
    }
    return j;
}

Tree Tree::subtree(std::size_t index) const {
    return Tree(std::vector<Node>(nodes_.begin() + static_cast<long>(index),
                                  nodes_.begin() + static_cast<long>(subtree_end(index))));
}

std::vector<int> Tree::levels() const {
    std::vector<int> out(nodes_.size());
    std::vector<int> pending;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        out[i] = static_cast<int>(pending.size()) + 1;
        if (!pending.empty()) --pending.back();
        if (arity(nodes_[i].op) > 0) pending.push_back(arity(nodes_[i].op));
        while (!pending.empty() && pending.back() == 0) pending.pop_back();
    }
    return out;
}

Tree Tree::replace_subtree(std::size_t index, const Tree& replacement) const {
    std::vector<Node> nodes;
    nodes.reserve(nodes_.size() + replacement.size());
    nodes.insert(nodes.end(), nodes_.begin(), nodes_.begin() + static_cast<long>(index));
    nodes.insert(nodes.end(), replacement.nodes_.begin(), replacement.nodes_.end());
    nodes.insert(nodes.end(), nodes_.begin() + static_cast<long>(subtree_end(index)), nodes_.end());
    return Tree(std::move(nodes));
}

std::vector<Tree> Tree::children() const {
    std::vector<Tree> out;
    std::size_t pos = 1;
    for (int i = 0; i < arity(root().op); ++i) {
        out.push_back(subtree(pos));
        pos = subtree_end(pos);
    }
    return out;
}

int Tree::max_variable() const noexcept {
    int result = -1;
    for (const Node& node : nodes_) {
        if (node.op == Op::Variable) result = std::max(result, static_cast<int>(node.variable));
    }
    return result;
}

PrimitiveSet PrimitiveSet::numerical_duffing() {
    return from_names("plus,minus,times,abs,sgn");
}

PrimitiveSet PrimitiveSet::friction_duffing() {
    return from_names("plus,minus,divide,times,abs,sgn");
}

PrimitiveSet PrimitiveSet::from_names(std::string_view list) {
    PrimitiveSet set;
    std::size_t start = 0;
    while (start <= list.size()) {
        std::size_t end = list.find(',', start);
        if (end == std::string_view::npos) end = list.size();
        std::string_view name = list.substr(start, end - start);
        while (!name.empty() && name.front() == ' ') name.remove_prefix(1);
        while (!name.empty() && name.back() == ' ') name.remove_suffix(1);
        if (!name.empty()) {
            const auto op = op_from_name(name);
            if (!op) throw InvalidArgument("unknown primitive '" + std::string(name) + "'");
            auto& bucket = arity(*op) == 1 ? set.unary : set.binary;
            if (std::find(bucket.begin(), bucket.end(), *op) == bucket.end()) bucket.push_back(*op);
        }
        start = end + 1;
    }
    set.validate();
    return set;
}

bool PrimitiveSet::contains(Op op) const noexcept {
    if (op == Op::Variable || op == Op::Constant) return true;
    const auto& bucket = arity(op) == 1 ? unary : binary;
    return std::find(bucket.begin(), bucket.end(), op) != bucket.end();
}

void PrimitiveSet::validate() const {
    if (unary.empty() && binary.empty()) throw InvalidArgument("primitive set has no operators");
    if (variables < 1) throw InvalidArgument("primitive set needs at least one variable");
    if (constant_probability < 0.0 || constant_probability > 1.0) {
        throw InvalidArgument("constant probability must lie in [0, 1]");
    }
    if (!(constant_min > 0.0) || !(constant_max >= constant_min)) {
        throw InvalidArgument("constant magnitude range must satisfy 0 < min <= max");
    }
}

std::string PrimitiveSet::names() const {
    std::string out;
    for (Op op : binary) out += std::string(op_name(op)) + ",";
    for (Op op : unary) out += std::string(op_name(op)) + ",";
    if (!out.empty()) out.pop_back();
    return out;
}

Tree random_leaf(const PrimitiveSet& primitives, Rng& rng) {
    std::bernoulli_distribution constant(primitives.constant_probability);
    if (constant(rng)) {
        return Tree::constant(draw_constant(primitives, rng));
    }
    std::uniform_int_distribution<int> pick(0, primitives.variables - 1);
    return Tree::variable(pick(rng));
}

Tree random_tree(const PrimitiveSet& primitives, int max_depth, Rng& rng) {
    if (max_depth < 1) throw InvalidArgument("max_depth must be at least 1");
    std::vector<Node> nodes;
    grow(nodes, primitives, 1, max_depth, rng);
    return Tree(std::move(nodes));
}

Tree enforce_depth(const Tree& tree, const PrimitiveSet& primitives, int max_depth, Rng& rng) {
    if (tree.depth() <= max_depth) return tree;
    Tree current = tree;
    // Replace the first operator found at the limit level until none remain.
    for (;;) {
        const auto levels = current.levels();
        const auto nodes = current.nodes();
        std::size_t hit = nodes.size();
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (levels[i] == max_depth && arity(nodes[i].op) > 0) {
                hit = i;
                break;
            }
        }
        if (hit == nodes.size()) return current;
        current = current.replace_subtree(hit, random_leaf(primitives, rng));
    }
}

std::pair<Tree, Tree> crossover_at(const Tree& a, std::size_t point_a, const Tree& b,
                                   std::size_t point_b, const PrimitiveSet& primitives,
                                   int max_depth, Rng& rng) {
    const Tree branch_a = a.subtree(point_a);
    const Tree branch_b = b.subtree(point_b);
    Tree first = a.replace_subtree(point_a, branch_b);
    Tree second = b.replace_subtree(point_b, branch_a);
    return {enforce_depth(first, primitives, max_depth, rng),
            enforce_depth(second, primitives, max_depth, rng)};
}

std::pair<Tree, Tree> crossover(const Tree& a, const Tree& b, const PrimitiveSet& primitives,
                                int max_depth, Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick_a(0, a.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_b(0, b.size() - 1);
    const std::size_t point_a = pick_a(rng);
    const std::size_t point_b = pick_b(rng);
    return crossover_at(a, point_a, b, point_b, primitives, max_depth, rng);
}

Tree mutate_with(const Tree& a, std::size_t point, const Tree& replacement) {
    return a.replace_subtree(point, replacement);
}

Tree mutate_at(const Tree& a, std::size_t point, const PrimitiveSet& primitives, int max_depth,
               Rng& rng) {
    const int level = a.levels()[point];
    const int budget = std::max(1, max_depth - level + 1);
    return mutate_with(a, point, random_tree(primitives, budget, rng));
}

Tree mutate(const Tree& a, const PrimitiveSet& primitives, int max_depth, Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, a.size() - 1);
    const std::size_t point = pick(rng);
    return mutate_at(a, point, primitives, max_depth, rng);
}

std::vector<std::span<const double>> signal_inputs(const SignalSet& signals) {
    return {signals.q, signals.qdot, signals.zddot};
}

std::optional<Column> try_evaluate(const Tree& tree,
                                   std::span<const std::span<const double>> inputs) {
    if (tree.max_variable() >= static_cast<int>(inputs.size())) {
        throw InvalidArgument("tree references X" + std::to_string(tree.max_variable()) +
                              " but only " + std::to_string(inputs.size()) + " inputs exist");
    }
    if (inputs.empty()) {
        throw InvalidArgument("evaluation needs at least one input column");
    }
    Column out = Evaluator(tree.nodes(), inputs).run();
    for (double v : out) {
        if (!std::isfinite(v)) return std::nullopt;
    }
    return out;
}

Column evaluate(const Tree& tree, std::span<const std::span<const double>> inputs) {
    auto column = try_evaluate(tree, inputs);
    if (!column) throw NonFiniteColumn(canonical_string(tree));
    return std::move(*column);
}

Column evaluate(const Tree& tree, const SignalSet& signals) {
    const auto inputs = signal_inputs(signals);
    return evaluate(tree, inputs);
}

std::string canonical_string(const Tree& tree) {
    std::size_t pos = 0;
    return render(tree.nodes(), pos);
}

Tree parse(std::string_view text) { return Parser(text).parse_all(); }

}  // namespace esparse::expr
