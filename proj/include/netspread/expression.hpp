#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace netspread {

/// Raised by parse_expression; carries the byte offset of the offending token.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset);
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Raised when an expression cannot be evaluated to a finite real.
class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Immutable arithmetic expression over the variables `m` and `z`.
///
/// Grammar (highest precedence first): `^` (right-associative), unary `-`,
/// `*` `/`, `+` `-` (left-associative). Nodes are shared, so copies are cheap.
class Expression {
 public:
  enum class Kind { Literal, VarM, VarZ, Negate, Add, Sub, Mul, Div, Pow };

  struct Node {
    Kind kind;
    double value = 0.0;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
  };

  Expression();  // literal 0
  explicit Expression(std::shared_ptr<const Node> root);

  static Expression literal(double v);
  static Expression var_m();
  static Expression var_z();
  static Expression negate(Expression operand);
  static Expression binary(Kind op, Expression lhs, Expression rhs);

  double evaluate(double m, double z) const;

  /// Fully parenthesized text that parses back to a structurally equal tree.
  std::string to_string() const;

  const Node& root() const { return *root_; }

  friend bool operator==(const Expression& a, const Expression& b);

 private:
  std::shared_ptr<const Node> root_;
};

Expression parse_expression(std::string_view text);

}  // namespace netspread
