#include "netspread/expression.hpp"

#include "format.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <utility>

namespace netspread {

ParseError::ParseError(const std::string& what, std::size_t offset)
    : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}

namespace {

using Node = Expression::Node;
using Kind = Expression::Kind;

std::shared_ptr<const Node> make_node(Kind kind, double value = 0.0,
                                      std::shared_ptr<const Node> lhs = nullptr,
                                      std::shared_ptr<const Node> rhs = nullptr) {
  return std::make_shared<const Node>(Node{kind, value, std::move(lhs), std::move(rhs)});
}

double eval_node(const Node& node, double m, double z) {
  switch (node.kind) {
    case Kind::Literal:
      return node.value;
    case Kind::VarM:
      return m;
    case Kind::VarZ:
      return z;
    case Kind::Negate:
      return -eval_node(*node.lhs, m, z);
    default:
      break;
  }
  const double a = eval_node(*node.lhs, m, z);
  const double b = eval_node(*node.rhs, m, z);
  double r = 0.0;
  switch (node.kind) {
    case Kind::Add:
      r = a + b;
      break;
    case Kind::Sub:
      r = a - b;
      break;
    case Kind::Mul:
      r = a * b;
      break;
    case Kind::Div:
      if (b == 0.0) throw EvalError("division by zero");
      r = a / b;
      break;
    case Kind::Pow:
      r = std::pow(a, b);
      break;
    default:
      break;
  }
  if (!std::isfinite(r)) throw EvalError("non-finite intermediate result");
  return r;
}

void print_node(const Node& node, std::string& out) {
  switch (node.kind) {
    case Kind::Literal:
      out += detail::format_number(node.value);
      return;
    case Kind::VarM:
      out += 'm';
      return;
    case Kind::VarZ:
      out += 'z';
      return;
    case Kind::Negate:
      out += "(-";
      print_node(*node.lhs, out);
      out += ')';
      return;
    default:
      break;
  }
  char op = '?';
  switch (node.kind) {
    case Kind::Add: op = '+'; break;
    case Kind::Sub: op = '-'; break;
    case Kind::Mul: op = '*'; break;
    case Kind::Div: op = '/'; break;
    case Kind::Pow: op = '^'; break;
    default: break;
  }
  out += '(';
  print_node(*node.lhs, out);
  out += ' ';
  out += op;
  out += ' ';
  print_node(*node.rhs, out);
  out += ')';
}

bool nodes_equal(const Node& a, const Node& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Kind::Literal:
      return a.value == b.value;
    case Kind::VarM:
    case Kind::VarZ:
      return true;
    case Kind::Negate:
      return nodes_equal(*a.lhs, *b.lhs);
    default:
      return nodes_equal(*a.lhs, *b.lhs) && nodes_equal(*a.rhs, *b.rhs);
  }
}

// Recursive descent:
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?
class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  std::shared_ptr<const Node> parse() {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError("empty expression", pos_);
    auto node = parse_sum();
    skip_space();
    if (pos_ != text_.size()) throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
    return node;
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::shared_ptr<const Node> parse_sum() {
    auto lhs = parse_product();
    for (;;) {
      if (accept('+')) {
        lhs = make_node(Kind::Add, 0.0, lhs, parse_product());
      } else if (accept('-')) {
        lhs = make_node(Kind::Sub, 0.0, lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  std::shared_ptr<const Node> parse_product() {
    auto lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = make_node(Kind::Mul, 0.0, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = make_node(Kind::Div, 0.0, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  std::shared_ptr<const Node> parse_unary() {
    if (accept('-')) return make_node(Kind::Negate, 0.0, parse_unary());
    return parse_power();
  }

  std::shared_ptr<const Node> parse_power() {
    auto base = parse_primary();
    if (accept('^')) return make_node(Kind::Pow, 0.0, base, parse_unary());
    return base;
  }

  std::shared_ptr<const Node> parse_primary() {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      auto inner = parse_sum();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0.0;
      const char* first = text_.data() + pos_;
      auto [ptr, ec] = std::from_chars(first, text_.data() + text_.size(), v);
      if (ec != std::errc{}) throw ParseError("malformed number", pos_);
      pos_ += static_cast<std::size_t>(ptr - first);
      return make_node(Kind::Literal, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        ++pos_;
      }
      const std::string_view ident = text_.substr(start, pos_ - start);
      if (ident == "m") return make_node(Kind::VarM);
      if (ident == "z") return make_node(Kind::VarZ);
      throw ParseError("unknown identifier '" + std::string(ident) + "'", start);
    }
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression() : root_(make_node(Kind::Literal, 0.0)) {}

Expression::Expression(std::shared_ptr<const Node> root) : root_(std::move(root)) {}

Expression Expression::literal(double v) { return Expression(make_node(Kind::Literal, v)); }
Expression Expression::var_m() { return Expression(make_node(Kind::VarM)); }
Expression Expression::var_z() { return Expression(make_node(Kind::VarZ)); }

Expression Expression::negate(Expression operand) {
  return Expression(make_node(Kind::Negate, 0.0, operand.root_));
}

Expression Expression::binary(Kind op, Expression lhs, Expression rhs) {
  return Expression(make_node(op, 0.0, lhs.root_, rhs.root_));
}

double Expression::evaluate(double m, double z) const {
  if (!std::isfinite(m) || !std::isfinite(z)) throw EvalError("non-finite input");
  return eval_node(*root_, m, z);
}

std::string Expression::to_string() const {
  std::string out;
  print_node(*root_, out);
  return out;
}

bool operator==(const Expression& a, const Expression& b) { return nodes_equal(*a.root_, *b.root_); }

Expression parse_expression(std::string_view text) { return Expression(Parser(text).parse()); }

}  // namespace netspread
