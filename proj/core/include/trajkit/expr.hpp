#pragma once

// A small closed expression language for scalar fields of coordinates and
// time. Expressions are immutable trees with value semantics (copies share
// nodes). Grammar, precedence and error conventions are documented in
// docs/grammar.md.

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trajkit/error.hpp"

namespace trajkit::expr {

enum class UnaryOp { Neg, Sin, Cos, Sinh, Cosh, Tanh, Exp, Log, Sqrt, Abs, Sign };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

std::string_view name_of(UnaryOp op);
char symbol_of(BinaryOp op);

// Names accepted as function calls by the parser.
const std::vector<std::string>& function_names();

class Expression {
 public:
  enum class Kind { Constant, Variable, Unary, Binary };

  struct Node {
    Kind kind = Kind::Constant;
    double value = 0.0;
    std::string name;
    UnaryOp unary_op = UnaryOp::Neg;
    BinaryOp binary_op = BinaryOp::Add;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
  };

  // The zero constant.
  Expression();

  static Expression constant(double value);
  static Expression variable(std::string name);
  static Expression unary(UnaryOp op, Expression arg);
  static Expression binary(BinaryOp op, Expression lhs, Expression rhs);

  Kind kind() const { return node_->kind; }
  double value() const { return node_->value; }
  const std::string& name() const { return node_->name; }
  UnaryOp unary_op() const { return node_->unary_op; }
  BinaryOp binary_op() const { return node_->binary_op; }
  Expression arg() const { return Expression(node_->lhs); }
  Expression lhs() const { return Expression(node_->lhs); }
  Expression rhs() const { return Expression(node_->rhs); }

  bool is_constant(double v) const { return kind() == Kind::Constant && value() == v; }

  std::set<std::string> free_variables() const;
  bool mentions(std::string_view variable) const;
  // True when the tree contains no variables at all.
  bool is_closed() const;
  // True when abs or sign occurs (the derivative is only piecewise valid).
  bool has_nonsmooth() const;

  // Fully parseable rendering; parse(to_string()) evaluates identically.
  std::string to_string() const;

  // Replace every occurrence of a variable by another expression.
  Expression substitute(std::string_view variable, const Expression& replacement) const;

  double evaluate(const std::map<std::string, double, std::less<>>& bindings) const;

  const Node* node() const { return node_.get(); }

 private:
  explicit Expression(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

Expression operator+(const Expression& a, const Expression& b);
Expression operator-(const Expression& a, const Expression& b);
Expression operator*(const Expression& a, const Expression& b);
Expression operator/(const Expression& a, const Expression& b);
Expression operator-(const Expression& a);

// Structural equality (same tree shape, constants compared exactly).
bool same_tree(const Expression& a, const Expression& b);

struct ParseOptions {
  // When set, only these identifiers are accepted as variables.
  std::optional<std::vector<std::string>> variables;
  // Named numeric parameters, replaced by constants while parsing.
  std::map<std::string, double, std::less<>> parameters;
};

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, std::string expected, std::string found);
  std::size_t position() const { return position_; }
  const std::string& expected() const { return expected_; }

 private:
  std::size_t position_;
  std::string expected_;
};

class UnknownIdentifierError : public Error {
 public:
  UnknownIdentifierError(std::size_t position, std::string identifier,
                         std::vector<std::string> allowed);
  std::size_t position() const { return position_; }
  const std::string& identifier() const { return identifier_; }
  const std::vector<std::string>& allowed() const { return allowed_; }

 private:
  std::size_t position_;
  std::string identifier_;
  std::vector<std::string> allowed_;
};

enum class DomainKind { LogOfNonPositive, SqrtOfNegative, DivisionByZero, PowOfNonPositiveBase };
std::string_view name_of(DomainKind kind);

class DomainError : public Error {
 public:
  DomainError(DomainKind kind, std::string subexpression);
  DomainKind kind() const { return kind_; }
  const std::string& subexpression() const { return subexpression_; }

 private:
  DomainKind kind_;
  std::string subexpression_;
};

class MissingBindingError : public Error {
 public:
  explicit MissingBindingError(std::string variable);
  const std::string& variable() const { return variable_; }

 private:
  std::string variable_;
};

// Byte offsets are 0-based into the UTF-8 source.
Expression parse(std::string_view source, const ParseOptions& options = {});

// Exact partial derivative. d|f| is sign(f) f', with sign(0) = 0.
Expression differentiate(const Expression& e, std::string_view variable);

// Flattened postfix form of an expression with variables resolved to slots.
// Evaluation is allocation-free for trees of moderate depth and reentrant.
class Program {
 public:
  Program() = default;
  // Throws MissingBindingError if a free variable is not among `slots`.
  Program(const Expression& e, std::span<const std::string> slots);

  double operator()(std::span<const double> values) const;
  bool constant() const { return constant_; }

 private:
  enum class Op : unsigned char {
    Const, Load, Neg, Sin, Cos, Sinh, Cosh, Tanh, Exp, Log, Sqrt, Abs, Sign,
    Add, Sub, Mul, Div, PowInt, PowReal
  };
  struct Instr {
    Op op;
    int slot = 0;
    double value = 0.0;
    const Expression::Node* origin = nullptr;
  };
  void emit(const Expression& e, std::span<const std::string> slots, int& depth);
  [[noreturn]] void fail(DomainKind kind, const Instr& in) const;

  std::vector<Instr> code_;
  std::size_t max_depth_ = 0;
  bool constant_ = true;
  // Keeps the origin nodes alive for error messages.
  Expression source_;
};

}  // namespace trajkit::expr
