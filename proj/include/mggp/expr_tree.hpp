#pragma once

#include <algorithm>
#include <cctype>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mggp/dataset.hpp"
#include "mggp/errors.hpp"
#include "mggp/rng.hpp"

namespace mggp {

/// Function set for symbolic regression: the three binary operators.
enum class OpKind : std::uint8_t { Add, Sub, Mul };

inline char op_symbol(OpKind op) noexcept {
  switch (op) {
    case OpKind::Add: return '+';
    case OpKind::Sub: return '-';
    case OpKind::Mul: return '*';
  }
  return '?';
}

/// A node is either a binary operator with two children or a terminal holding
/// a 0-based predictor index. Terminals have var_index >= 0 and no children.
struct TreeNode {
  OpKind op = OpKind::Add;
  int var_index = -1;
  std::unique_ptr<TreeNode> left;
  std::unique_ptr<TreeNode> right;

  bool is_terminal() const noexcept { return var_index >= 0; }
};

namespace detail {

inline std::unique_ptr<TreeNode> make_terminal_node(int var_index) {
  auto node = std::make_unique<TreeNode>();
  node->var_index = var_index;
  return node;
}

inline std::unique_ptr<TreeNode> make_operator_node(OpKind op,
                                                    std::unique_ptr<TreeNode> l,
                                                    std::unique_ptr<TreeNode> r) {
  auto node = std::make_unique<TreeNode>();
  node->op = op;
  node->left = std::move(l);
  node->right = std::move(r);
  return node;
}

inline std::unique_ptr<TreeNode> clone_node(const TreeNode& node) {
  if (node.is_terminal()) return make_terminal_node(node.var_index);
  return make_operator_node(node.op, clone_node(*node.left), clone_node(*node.right));
}

inline int count_nodes(const TreeNode& node) noexcept {
  if (node.is_terminal()) return 1;
  return 1 + count_nodes(*node.left) + count_nodes(*node.right);
}

inline int node_depth(const TreeNode& node) noexcept {
  if (node.is_terminal()) return 0;
  return 1 + std::max(node_depth(*node.left), node_depth(*node.right));
}

inline int max_var_index(const TreeNode& node) noexcept {
  if (node.is_terminal()) return node.var_index;
  return std::max(max_var_index(*node.left), max_var_index(*node.right));
}

inline double eval_node(const TreeNode& node, std::span<const double> row) noexcept {
  if (node.is_terminal()) return row[static_cast<std::size_t>(node.var_index)];
  const double l = eval_node(*node.left, row);
  const double r = eval_node(*node.right, row);
  switch (node.op) {
    case OpKind::Add: return l + r;
    case OpKind::Sub: return l - r;
    case OpKind::Mul: return l * r;
  }
  return 0.0;
}

}  // namespace detail

/// A single gene: an immutable operator/terminal tree over inputs x1..xN.
/// Copies are deep; node_count, depth and the largest referenced variable are
/// cached at construction and never go stale.
class ExpressionTree {
 public:
  static ExpressionTree terminal(int var_index) {
    if (var_index < 0) throw DataError("terminal variable index must be non-negative");
    return ExpressionTree(detail::make_terminal_node(var_index));
  }

  static ExpressionTree branch(OpKind op, const ExpressionTree& left,
                               const ExpressionTree& right) {
    return ExpressionTree(detail::make_operator_node(
        op, detail::clone_node(left.root()), detail::clone_node(right.root())));
  }

  /// Takes ownership of a fully built node structure.
  static ExpressionTree adopt(std::unique_ptr<TreeNode> root) {
    if (!root) throw DataError("expression tree root must not be null");
    return ExpressionTree(std::move(root));
  }

  ExpressionTree(const ExpressionTree& other)
      : root_(detail::clone_node(other.root())),
        node_count_(other.node_count_),
        depth_(other.depth_),
        max_var_index_(other.max_var_index_) {}

  ExpressionTree& operator=(const ExpressionTree& other) {
    if (this != &other) {
      root_ = detail::clone_node(other.root());
      node_count_ = other.node_count_;
      depth_ = other.depth_;
      max_var_index_ = other.max_var_index_;
    }
    return *this;
  }

  ExpressionTree(ExpressionTree&&) noexcept = default;
  ExpressionTree& operator=(ExpressionTree&&) noexcept = default;

  const TreeNode& root() const noexcept { return *root_; }
  int node_count() const noexcept { return node_count_; }
  int depth() const noexcept { return depth_; }
  int max_var_index() const noexcept { return max_var_index_; }

  /// Recursive arithmetic over one observation. The row must cover every
  /// variable the tree references.
  double evaluate(std::span<const double> row) const {
    if (max_var_index_ >= static_cast<int>(row.size()))
      throw DataError("tree references variable index " +
                      std::to_string(max_var_index_) + " but row has only " +
                      std::to_string(row.size()) + " values");
    return detail::eval_node(*root_, row);
  }

 private:
  explicit ExpressionTree(std::unique_ptr<TreeNode> root)
      : root_(std::move(root)),
        node_count_(detail::count_nodes(*root_)),
        depth_(detail::node_depth(*root_)),
        max_var_index_(detail::max_var_index(*root_)) {}

  std::unique_ptr<TreeNode> root_;
  int node_count_;
  int depth_;
  int max_var_index_;
};

/// (node_count, depth). Lone terminal measures (1, 0).
inline std::pair<int, int> measure(const ExpressionTree& tree) noexcept {
  return {tree.node_count(), tree.depth()};
}

/// Tree evaluated over every dataset row, in row order.
inline std::vector<double> evaluate_column(const ExpressionTree& tree,
                                           const Dataset& data) {
  if (tree.max_var_index() >= data.num_vars())
    throw DataError("tree references variable index " +
                    std::to_string(tree.max_var_index()) +
                    " but dataset has only " + std::to_string(data.num_vars()) +
                    " predictors");
  std::vector<double> out;
  out.reserve(data.rows.size());
  for (const auto& row : data.rows) out.push_back(detail::eval_node(tree.root(), row));
  return out;
}

inline bool structurally_equal(const TreeNode& a, const TreeNode& b) noexcept {
  if (a.is_terminal() != b.is_terminal()) return false;
  if (a.is_terminal()) return a.var_index == b.var_index;
  return a.op == b.op && structurally_equal(*a.left, *b.left) &&
         structurally_equal(*a.right, *b.right);
}

inline bool structurally_equal(const ExpressionTree& a, const ExpressionTree& b) noexcept {
  if (a.node_count() != b.node_count() || a.depth() != b.depth()) return false;
  return structurally_equal(a.root(), b.root());
}

/// Sorted distinct variable indices referenced by the tree.
inline std::vector<int> variables_used(const ExpressionTree& tree) {
  std::vector<int> out;
  const auto walk = [&out](const TreeNode& node, const auto& self) -> void {
    if (node.is_terminal()) {
      out.push_back(node.var_index);
      return;
    }
    self(*node.left, self);
    self(*node.right, self);
  };
  walk(tree.root(), walk);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Node addressing (preorder index) for the variation operators.

struct NodeLocation {
  int index = 0;
  int depth = 0;
  bool is_operator = false;
};

inline std::vector<NodeLocation> list_nodes(const ExpressionTree& tree) {
  std::vector<NodeLocation> out;
  out.reserve(static_cast<std::size_t>(tree.node_count()));
  const auto walk = [&out](const TreeNode& node, int depth, const auto& self) -> void {
    out.push_back({static_cast<int>(out.size()), depth, !node.is_terminal()});
    if (!node.is_terminal()) {
      self(*node.left, depth + 1, self);
      self(*node.right, depth + 1, self);
    }
  };
  walk(tree.root(), 0, walk);
  return out;
}

namespace detail {

inline const TreeNode* find_preorder(const TreeNode& node, int& countdown) noexcept {
  if (countdown == 0) return &node;
  --countdown;
  if (node.is_terminal()) return nullptr;
  if (const TreeNode* hit = find_preorder(*node.left, countdown)) return hit;
  return find_preorder(*node.right, countdown);
}

inline bool replace_preorder(std::unique_ptr<TreeNode>& slot, int& countdown,
                             std::unique_ptr<TreeNode>& replacement) {
  if (countdown == 0) {
    slot = std::move(replacement);
    return true;
  }
  --countdown;
  if (slot->is_terminal()) return false;
  if (replace_preorder(slot->left, countdown, replacement)) return true;
  return replace_preorder(slot->right, countdown, replacement);
}

}  // namespace detail

/// Deep copy of the subtree rooted at the given preorder index.
inline ExpressionTree subtree_copy(const ExpressionTree& tree, int index) {
  int countdown = index;
  const TreeNode* node = detail::find_preorder(tree.root(), countdown);
  if (!node) throw DataError("subtree index out of range");
  return ExpressionTree::adopt(detail::clone_node(*node));
}

/// New tree with the subtree at the given preorder index replaced.
inline ExpressionTree replace_subtree(const ExpressionTree& tree, int index,
                                      const ExpressionTree& replacement) {
  auto root = detail::clone_node(tree.root());
  auto repl = detail::clone_node(replacement.root());
  int countdown = index;
  if (!detail::replace_preorder(root, countdown, repl))
    throw DataError("subtree index out of range");
  return ExpressionTree::adopt(std::move(root));
}

// ---------------------------------------------------------------------------
// Random construction.

enum class BuildMethod { Grow, Full };

/// Probability that a grow-mode interior decision point stops at a terminal.
inline constexpr double kGrowTerminalProb = 0.3;

namespace detail {

template <RandomSource R>
std::unique_ptr<TreeNode> random_node(int depth_left, BuildMethod method,
                                      int num_vars, R& rng) {
  const bool make_terminal =
      depth_left == 0 ||
      (method == BuildMethod::Grow && rng.bernoulli(kGrowTerminalProb));
  if (make_terminal) return make_terminal_node(rng.uniform_int(num_vars));
  const auto op = static_cast<OpKind>(rng.uniform_int(3));
  auto left = random_node(depth_left - 1, method, num_vars, rng);
  auto right = random_node(depth_left - 1, method, num_vars, rng);
  return make_operator_node(op, std::move(left), std::move(right));
}

}  // namespace detail

/// Random tree within the depth budget. Full mode branches until every path
/// reaches exactly max_depth; grow mode may stop early at terminals.
template <RandomSource R>
ExpressionTree random_tree(int max_depth, BuildMethod method, int num_vars, R& rng) {
  if (max_depth < 0) throw DataError("max_depth must be non-negative");
  if (num_vars < 1) throw DataError("num_vars must be positive");
  return ExpressionTree::adopt(detail::random_node(max_depth, method, num_vars, rng));
}

// ---------------------------------------------------------------------------
// Printing and parsing. The printed form is fully parenthesized so the parser
// never needs precedence rules and round trips are structurally exact.

namespace detail {

inline void print_node(const TreeNode& node, std::span<const std::string> var_names,
                       std::string& out) {
  if (node.is_terminal()) {
    out += var_names[static_cast<std::size_t>(node.var_index)];
    return;
  }
  out += '(';
  print_node(*node.left, var_names, out);
  out += ' ';
  out += op_symbol(node.op);
  out += ' ';
  print_node(*node.right, var_names, out);
  out += ')';
}

}  // namespace detail

inline std::string to_infix(const ExpressionTree& tree,
                            std::span<const std::string> var_names) {
  if (tree.max_var_index() >= static_cast<int>(var_names.size()))
    throw DataError("tree references variable index " +
                    std::to_string(tree.max_var_index()) + " but only " +
                    std::to_string(var_names.size()) + " names were given");
  std::string out;
  detail::print_node(tree.root(), var_names, out);
  return out;
}

namespace detail {

/// Recursive-descent parser for the fully parenthesized infix form.
class InfixParser {
 public:
  InfixParser(std::string_view text, std::span<const std::string> var_names)
      : text_(text), var_names_(var_names) {}

  std::unique_ptr<TreeNode> parse() {
    auto node = parse_expr();
    skip_spaces();
    if (pos_ != text_.size())
      throw ParseError("unexpected trailing input at position " + std::to_string(pos_),
                       pos_);
    return node;
  }

 private:
  std::unique_ptr<TreeNode> parse_expr() {
    skip_spaces();
    if (pos_ >= text_.size())
      throw ParseError("unexpected end of expression", pos_);
    if (text_[pos_] == '(') {
      const std::size_t open_pos = pos_;
      ++pos_;
      auto left = parse_expr();
      const OpKind op = parse_operator();
      auto right = parse_expr();
      skip_spaces();
      if (pos_ >= text_.size() || text_[pos_] != ')')
        throw ParseError("missing ')' for '(' at position " + std::to_string(open_pos),
                         pos_);
      ++pos_;
      return make_operator_node(op, std::move(left), std::move(right));
    }
    return parse_variable();
  }

  OpKind parse_operator() {
    skip_spaces();
    if (pos_ >= text_.size())
      throw ParseError("expected operator, got end of input", pos_);
    const char c = text_[pos_];
    ++pos_;
    switch (c) {
      case '+': return OpKind::Add;
      case '-': return OpKind::Sub;
      case '*': return OpKind::Mul;
      default:
        throw ParseError(std::string("expected one of '+', '-', '*' at position ") +
                             std::to_string(pos_ - 1) + ", got '" + c + "'",
                         pos_ - 1);
    }
  }

  std::unique_ptr<TreeNode> parse_variable() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_name_char(text_[pos_])) ++pos_;
    if (pos_ == start) {
      const std::string got = start < text_.size()
                                  ? std::string("'") + text_[start] + "'"
                                  : std::string("end of input");
      throw ParseError("expected variable name at position " +
                           std::to_string(start) + ", got " + got,
                       start);
    }
    const std::string_view name = text_.substr(start, pos_ - start);
    for (std::size_t i = 0; i < var_names_.size(); ++i)
      if (var_names_[i] == name) return make_terminal_node(static_cast<int>(i));
    throw ParseError("unknown variable '" + std::string(name) + "' at position " +
                         std::to_string(start),
                     start);
  }

  static bool is_name_char(char c) noexcept {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '.';
  }

  void skip_spaces() noexcept {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])) != 0)
      ++pos_;
  }

  std::string_view text_;
  std::span<const std::string> var_names_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Inverse of to_infix: parse_infix(to_infix(t)) is structurally equal to t.
inline ExpressionTree parse_infix(std::string_view text,
                                  std::span<const std::string> var_names) {
  detail::InfixParser parser(text, var_names);
  return ExpressionTree::adopt(parser.parse());
}

// ---------------------------------------------------------------------------
// Simplification. Structural rules only: a subtree of the form (t - t) is an
// exact zero, so additive parents drop it and multiplicative parents collapse
// to it. No reassociation happens, which keeps evaluation identical on every
// row (the subtraction itself yields +0.0 for finite operands).

namespace detail {

inline bool is_zero_subtree(const TreeNode& node) noexcept {
  return !node.is_terminal() && node.op == OpKind::Sub &&
         structurally_equal(*node.left, *node.right);
}

inline std::unique_ptr<TreeNode> simplify_node(const TreeNode& node) {
  if (node.is_terminal()) return make_terminal_node(node.var_index);
  auto left = simplify_node(*node.left);
  auto right = simplify_node(*node.right);
  switch (node.op) {
    case OpKind::Add:
      if (is_zero_subtree(*left)) return right;
      if (is_zero_subtree(*right)) return left;
      break;
    case OpKind::Sub:
      if (is_zero_subtree(*right)) return left;
      break;
    case OpKind::Mul:
      // Zero absorbs the product; keep the (t - t) form as the zero marker
      // since the terminal set has no constants.
      if (is_zero_subtree(*left)) return left;
      if (is_zero_subtree(*right)) return right;
      break;
  }
  return make_operator_node(node.op, std::move(left), std::move(right));
}

}  // namespace detail

/// Bottom-up zero elimination to fixpoint. The result evaluates identically
/// to the input on every row; a tree that is itself an irreducible zero, such
/// as (x1 - x1), is returned unchanged because zeros are only representable
/// in that form.
inline ExpressionTree simplify(const ExpressionTree& tree) {
  return ExpressionTree::adopt(detail::simplify_node(tree.root()));
}

}  // namespace mggp
