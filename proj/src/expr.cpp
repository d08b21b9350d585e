#include "htopt/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <utility>

namespace htopt::expr {

ParseFailure::ParseFailure(std::size_t position, const std::string& message)
    : std::runtime_error("parse error at offset " + std::to_string(position) +
                         ": " + message),
      position_(position) {}

namespace {

int collect_max_index(const NodePtr& node) {
  if (!node) return 0;
  switch (node->kind) {
    case Node::Kind::Variable:
      return node->variable;
    case Node::Kind::Unary:
      return collect_max_index(node->lhs);
    case Node::Kind::Binary:
      return std::max(collect_max_index(node->lhs), collect_max_index(node->rhs));
    default:
      return 0;
  }
}

double eval_node(const Node& node, const Eigen::VectorXd& x) {
  switch (node.kind) {
    case Node::Kind::Constant:
      return node.constant;
    case Node::Kind::Variable:
      if (node.variable > x.size()) {
        throw std::out_of_range("variable x" + std::to_string(node.variable) +
                                " exceeds vector dimension " +
                                std::to_string(x.size()));
      }
      return x(node.variable - 1);
    case Node::Kind::Unary: {
      const double a = eval_node(*node.lhs, x);
      switch (node.fn) {
        case UnaryFn::Neg:  return -a;
        case UnaryFn::Exp:  return std::exp(a);
        case UnaryFn::Log:  return std::log(a);
        case UnaryFn::Sin:  return std::sin(a);
        case UnaryFn::Cos:  return std::cos(a);
        case UnaryFn::Sqrt: return std::sqrt(a);
        case UnaryFn::Abs:  return std::abs(a);
      }
      return 0.0;
    }
    case Node::Kind::Binary: {
      const double a = eval_node(*node.lhs, x);
      const double b = eval_node(*node.rhs, x);
      switch (node.op) {
        case BinaryOp::Add: return a + b;
        case BinaryOp::Sub: return a - b;
        case BinaryOp::Mul: return a * b;
        case BinaryOp::Div: return a / b;
        case BinaryOp::Pow: return std::pow(a, b);
      }
      return 0.0;
    }
  }
  return 0.0;
}

void print_node(const Node& node, std::string& out) {
  switch (node.kind) {
    case Node::Kind::Constant: {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", node.constant);
      out += buf;
      return;
    }
    case Node::Kind::Variable:
      out += 'x';
      out += std::to_string(node.variable);
      return;
    case Node::Kind::Unary:
      if (node.fn == UnaryFn::Neg) {
        out += "(-";
        print_node(*node.lhs, out);
        out += ')';
        return;
      }
      switch (node.fn) {
        case UnaryFn::Exp:  out += "exp";  break;
        case UnaryFn::Log:  out += "log";  break;
        case UnaryFn::Sin:  out += "sin";  break;
        case UnaryFn::Cos:  out += "cos";  break;
        case UnaryFn::Sqrt: out += "sqrt"; break;
        case UnaryFn::Abs:  out += "abs";  break;
        default: break;
      }
      out += '(';
      print_node(*node.lhs, out);
      out += ')';
      return;
    case Node::Kind::Binary: {
      out += '(';
      print_node(*node.lhs, out);
      switch (node.op) {
        case BinaryOp::Add: out += " + "; break;
        case BinaryOp::Sub: out += " - "; break;
        case BinaryOp::Mul: out += " * "; break;
        case BinaryOp::Div: out += " / "; break;
        case BinaryOp::Pow: out += "^";   break;
      }
      print_node(*node.rhs, out);
      out += ')';
      return;
    }
  }
}

NodePtr make_constant(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Constant;
  n->constant = v;
  return n;
}

NodePtr make_variable(int index) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Variable;
  n->variable = index;
  return n;
}

NodePtr make_unary(UnaryFn fn, NodePtr arg) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Unary;
  n->fn = fn;
  n->lhs = std::move(arg);
  return n;
}

NodePtr make_binary(BinaryOp op, NodePtr lhs, NodePtr rhs) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Binary;
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr run() {
    NodePtr root = parse_expr();
    skip_ws();
    if (pos_ < text_.size()) {
      fail("unexpected trailing input");
    }
    return root;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseFailure(pos_ + 1, message);
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  bool peek_is(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  bool consume(char c) {
    if (peek_is(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (consume('+')) {
        lhs = make_binary(BinaryOp::Add, lhs, parse_term());
      } else if (consume('-')) {
        lhs = make_binary(BinaryOp::Sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (consume('*')) {
        lhs = make_binary(BinaryOp::Mul, lhs, parse_unary());
      } else if (consume('/')) {
        lhs = make_binary(BinaryOp::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (consume('-')) {
      return make_unary(UnaryFn::Neg, parse_unary());
    }
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_atom();
    if (consume('^')) {
      // exponent may itself carry a unary minus: x1^-2
      return make_binary(BinaryOp::Pow, base, parse_unary());
    }
    return base;
  }

  NodePtr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) {
      fail("expected operand");
    }
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_expr();
      skip_ws();
      if (!consume(')')) {
        fail("expected ')'");
      }
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      return parse_number();
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      return parse_identifier();
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
      }
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
        ++pos_;
      }
      if (pos_ < text_.size() &&
          std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        while (pos_ < text_.size() &&
               std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          ++pos_;
        }
      } else {
        pos_ = mark;  // 'e' was not an exponent
      }
    }
    const std::string token(text_.substr(start, pos_ - start));
    return make_constant(std::stod(token));
  }

  NodePtr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])))) {
      ++pos_;
    }
    const std::string_view name = text_.substr(start, pos_ - start);
    if (name.size() >= 2 && name[0] == 'x') {
      bool digits = true;
      for (std::size_t i = 1; i < name.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) {
          digits = false;
          break;
        }
      }
      if (digits) {
        const int index = std::stoi(std::string(name.substr(1)));
        if (index < 1) {
          pos_ = start;
          fail("variable index must be at least 1");
        }
        return make_variable(index);
      }
    }
    UnaryFn fn;
    if (name == "neg") fn = UnaryFn::Neg;
    else if (name == "exp") fn = UnaryFn::Exp;
    else if (name == "log") fn = UnaryFn::Log;
    else if (name == "sin") fn = UnaryFn::Sin;
    else if (name == "cos") fn = UnaryFn::Cos;
    else if (name == "sqrt") fn = UnaryFn::Sqrt;
    else if (name == "abs") fn = UnaryFn::Abs;
    else {
      pos_ = start;
      fail("unknown identifier '" + std::string(name) + "'");
    }
    skip_ws();
    if (!consume('(')) {
      fail("expected '(' after function name");
    }
    NodePtr arg = parse_expr();
    skip_ws();
    if (!consume(')')) {
      fail("expected ')'");
    }
    return make_unary(fn, arg);
  }
};

}  // namespace

ExpressionTree::ExpressionTree(NodePtr root) : root_(std::move(root)) {
  if (!root_) {
    throw std::invalid_argument("expression tree requires a root node");
  }
  max_index_ = collect_max_index(root_);
}

double ExpressionTree::evaluate(const Eigen::VectorXd& x) const {
  return eval_node(*root_, x);
}

std::string ExpressionTree::print() const {
  std::string out;
  print_node(*root_, out);
  return out;
}

ExpressionTree parse(std::string_view text) {
  return ExpressionTree(Parser(text).run());
}

}  // namespace htopt::expr
