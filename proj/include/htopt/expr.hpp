#ifndef HTOPT_EXPR_HPP
#define HTOPT_EXPR_HPP

#include <Eigen/Core>

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace htopt::expr {

/// Parse error carrying a 1-based character offset into the input text.
/// The offset may be length+1 when input ends prematurely.
class ParseFailure : public std::runtime_error {
 public:
  ParseFailure(std::size_t position, const std::string& message);
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

enum class UnaryFn { Neg, Exp, Log, Sin, Cos, Sqrt, Abs };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  enum class Kind { Constant, Variable, Unary, Binary };
  Kind kind = Kind::Constant;
  double constant = 0.0;
  int variable = 0;  // 1-based index, Kind::Variable only
  UnaryFn fn = UnaryFn::Neg;
  BinaryOp op = BinaryOp::Add;
  NodePtr lhs;  // Unary argument or Binary left operand
  NodePtr rhs;
};

/// Immutable scalar expression over variables x1..xn.
///
/// Evaluation is IEEE-754: division by zero, log of nonpositive values
/// and similar produce non-finite results which propagate to the caller.
class ExpressionTree {
 public:
  explicit ExpressionTree(NodePtr root);

  /// Throws std::out_of_range if a variable index exceeds x.size().
  double evaluate(const Eigen::VectorXd& x) const;

  /// Largest variable index referenced (0 if the tree has no variables).
  int max_variable_index() const noexcept { return max_index_; }

  /// Canonical fully parenthesized form; parse(print()) reproduces the tree.
  std::string print() const;

  const NodePtr& root() const noexcept { return root_; }

 private:
  NodePtr root_;
  int max_index_ = 0;
};

/// Recursive-descent parser. Grammar (whitespace-insensitive):
///   expr   := term (('+'|'-') term)*
///   term   := unary (('*'|'/') unary)*
///   unary  := '-' unary | power
///   power  := atom ('^' unary)?          (right-associative)
///   atom   := number | 'x'<digits> | fn '(' expr ')' | '(' expr ')'
///   fn     := neg | exp | log | sin | cos | sqrt | abs
/// '^' binds tighter than unary minus: -x1^2 is -(x1^2).
ExpressionTree parse(std::string_view text);

}  // namespace htopt::expr

#endif
