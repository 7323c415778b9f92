#include "trajkit/expr.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

namespace trajkit::expr {

std::string_view name_of(UnaryOp op) {
  switch (op) {
    case UnaryOp::Neg: return "neg";
    case UnaryOp::Sin: return "sin";
    case UnaryOp::Cos: return "cos";
    case UnaryOp::Sinh: return "sinh";
    case UnaryOp::Cosh: return "cosh";
    case UnaryOp::Tanh: return "tanh";
    case UnaryOp::Exp: return "exp";
    case UnaryOp::Log: return "log";
    case UnaryOp::Sqrt: return "sqrt";
    case UnaryOp::Abs: return "abs";
    case UnaryOp::Sign: return "sign";
  }
  return "?";
}

char symbol_of(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return '+';
    case BinaryOp::Sub: return '-';
    case BinaryOp::Mul: return '*';
    case BinaryOp::Div: return '/';
    case BinaryOp::Pow: return '^';
  }
  return '?';
}

const std::vector<std::string>& function_names() {
  static const std::vector<std::string> names = {"sin",  "cos", "sinh", "cosh", "tanh", "exp",
                                                 "log",  "sqrt", "abs", "sign"};
  return names;
}

std::string_view name_of(DomainKind kind) {
  switch (kind) {
    case DomainKind::LogOfNonPositive: return "log of non-positive value";
    case DomainKind::SqrtOfNegative: return "sqrt of negative value";
    case DomainKind::DivisionByZero: return "division by zero";
    case DomainKind::PowOfNonPositiveBase: return "non-integer power of non-positive base";
  }
  return "?";
}

namespace {

std::string describe_found(const std::string& found) {
  return found.empty() ? std::string("end of input") : "'" + found + "'";
}

std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ", ";
    out += names[i];
  }
  return out;
}

}  // namespace

SyntaxError::SyntaxError(std::size_t position, std::string expected, std::string found)
    : Error("syntax error at position " + std::to_string(position) + ": expected " + expected +
            ", found " + describe_found(found)),
      position_(position),
      expected_(std::move(expected)) {}

UnknownIdentifierError::UnknownIdentifierError(std::size_t position, std::string identifier,
                                               std::vector<std::string> allowed)
    : Error("unknown identifier '" + identifier + "' at position " + std::to_string(position) +
            "; allowed names: " + join(allowed)),
      position_(position),
      identifier_(std::move(identifier)),
      allowed_(std::move(allowed)) {}

DomainError::DomainError(DomainKind kind, std::string subexpression)
    : Error(std::string(name_of(kind)) + " in " + subexpression),
      kind_(kind),
      subexpression_(std::move(subexpression)) {}

MissingBindingError::MissingBindingError(std::string variable)
    : Error("no binding for variable '" + variable + "'"), variable_(std::move(variable)) {}

// ---------------------------------------------------------------------------

Expression::Expression() : Expression(constant(0.0)) {}

Expression Expression::constant(double value) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Constant;
  n->value = value;
  return Expression(std::move(n));
}

Expression Expression::variable(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Variable;
  n->name = std::move(name);
  return Expression(std::move(n));
}

Expression Expression::unary(UnaryOp op, Expression arg) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Unary;
  n->unary_op = op;
  n->lhs = std::move(arg.node_);
  return Expression(std::move(n));
}

Expression Expression::binary(BinaryOp op, Expression lhs, Expression rhs) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Binary;
  n->binary_op = op;
  n->lhs = std::move(lhs.node_);
  n->rhs = std::move(rhs.node_);
  return Expression(std::move(n));
}

namespace {

template <typename Fn>
void visit(const Expression::Node* n, Fn&& fn) {
  fn(*n);
  if (n->lhs) visit(n->lhs.get(), fn);
  if (n->rhs) visit(n->rhs.get(), fn);
}

}  // namespace

std::set<std::string> Expression::free_variables() const {
  std::set<std::string> out;
  visit(node_.get(), [&](const Node& n) {
    if (n.kind == Kind::Variable) out.insert(n.name);
  });
  return out;
}

bool Expression::mentions(std::string_view variable) const {
  bool found = false;
  visit(node_.get(), [&](const Node& n) {
    if (n.kind == Kind::Variable && n.name == variable) found = true;
  });
  return found;
}

bool Expression::is_closed() const {
  bool closed = true;
  visit(node_.get(), [&](const Node& n) {
    if (n.kind == Kind::Variable) closed = false;
  });
  return closed;
}

bool Expression::has_nonsmooth() const {
  bool found = false;
  visit(node_.get(), [&](const Node& n) {
    if (n.kind == Kind::Unary && (n.unary_op == UnaryOp::Abs || n.unary_op == UnaryOp::Sign))
      found = true;
  });
  return found;
}

// Printing -----------------------------------------------------------------

namespace {

int precedence(const Expression::Node& n) {
  switch (n.kind) {
    case Expression::Kind::Constant:
    case Expression::Kind::Variable:
      return 5;
    case Expression::Kind::Unary:
      return n.unary_op == UnaryOp::Neg ? 3 : 5;
    case Expression::Kind::Binary:
      switch (n.binary_op) {
        case BinaryOp::Add:
        case BinaryOp::Sub:
          return 1;
        case BinaryOp::Mul:
        case BinaryOp::Div:
          return 2;
        case BinaryOp::Pow:
          return 4;
      }
  }
  return 0;
}

void print_number(std::ostream& os, double v) {
  if (std::isinf(v)) {
    os << (v < 0 ? "(-1e999)" : "1e999");
    return;
  }
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", std::abs(v));
  if (std::signbit(v))
    os << "(-" << buf.data() << ")";
  else
    os << buf.data();
}

void print(std::ostream& os, const Expression::Node& n);

void print_child(std::ostream& os, const Expression::Node& child, bool parens) {
  if (parens) os << '(';
  print(os, child);
  if (parens) os << ')';
}

void print(std::ostream& os, const Expression::Node& n) {
  switch (n.kind) {
    case Expression::Kind::Constant:
      print_number(os, n.value);
      return;
    case Expression::Kind::Variable:
      os << n.name;
      return;
    case Expression::Kind::Unary:
      if (n.unary_op == UnaryOp::Neg) {
        os << '-';
        print_child(os, *n.lhs, precedence(*n.lhs) < 3);
      } else {
        os << name_of(n.unary_op) << '(';
        print(os, *n.lhs);
        os << ')';
      }
      return;
    case Expression::Kind::Binary: {
      const int p = precedence(n);
      const int pl = precedence(*n.lhs);
      const int pr = precedence(*n.rhs);
      if (n.binary_op == BinaryOp::Pow) {
        print_child(os, *n.lhs, pl <= 4);
        os << '^';
        print_child(os, *n.rhs, pr < 3);
      } else {
        print_child(os, *n.lhs, pl < p);
        os << symbol_of(n.binary_op);
        print_child(os, *n.rhs, pr <= p);
      }
      return;
    }
  }
}

}  // namespace

std::string Expression::to_string() const {
  std::ostringstream os;
  print(os, *node_);
  return os.str();
}

Expression Expression::substitute(std::string_view variable,
                                  const Expression& replacement) const {
  switch (kind()) {
    case Kind::Constant:
      return *this;
    case Kind::Variable:
      return name() == variable ? replacement : *this;
    case Kind::Unary:
      return unary(unary_op(), arg().substitute(variable, replacement));
    case Kind::Binary:
      return binary(binary_op(), lhs().substitute(variable, replacement),
                    rhs().substitute(variable, replacement));
  }
  return *this;
}

double Expression::evaluate(const std::map<std::string, double, std::less<>>& bindings) const {
  std::vector<std::string> slots;
  std::vector<double> values;
  for (const auto& v : free_variables()) {
    auto it = bindings.find(v);
    if (it == bindings.end()) throw MissingBindingError(v);
    slots.push_back(v);
    values.push_back(it->second);
  }
  return Program(*this, slots)(values);
}

Expression operator+(const Expression& a, const Expression& b) {
  return Expression::binary(BinaryOp::Add, a, b);
}
Expression operator-(const Expression& a, const Expression& b) {
  return Expression::binary(BinaryOp::Sub, a, b);
}
Expression operator*(const Expression& a, const Expression& b) {
  return Expression::binary(BinaryOp::Mul, a, b);
}
Expression operator/(const Expression& a, const Expression& b) {
  return Expression::binary(BinaryOp::Div, a, b);
}
Expression operator-(const Expression& a) { return Expression::unary(UnaryOp::Neg, a); }

bool same_tree(const Expression& a, const Expression& b) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Expression::Kind::Constant:
      return a.value() == b.value() && std::signbit(a.value()) == std::signbit(b.value());
    case Expression::Kind::Variable:
      return a.name() == b.name();
    case Expression::Kind::Unary:
      return a.unary_op() == b.unary_op() && same_tree(a.arg(), b.arg());
    case Expression::Kind::Binary:
      return a.binary_op() == b.binary_op() && same_tree(a.lhs(), b.lhs()) &&
             same_tree(a.rhs(), b.rhs());
  }
  return false;
}

// Program ------------------------------------------------------------------

Program::Program(const Expression& e, std::span<const std::string> slots) : source_(e) {
  int depth = 0;
  emit(e, slots, depth);
}

void Program::emit(const Expression& e, std::span<const std::string> slots, int& depth) {
  const auto* origin = e.node();
  auto push = [&](Instr in) {
    code_.push_back(in);
  };
  auto grow = [&] {
    ++depth;
    max_depth_ = std::max<std::size_t>(max_depth_, static_cast<std::size_t>(depth));
  };
  switch (e.kind()) {
    case Expression::Kind::Constant:
      push({Op::Const, 0, e.value(), origin});
      grow();
      return;
    case Expression::Kind::Variable: {
      auto it = std::find(slots.begin(), slots.end(), e.name());
      if (it == slots.end()) throw MissingBindingError(e.name());
      push({Op::Load, static_cast<int>(it - slots.begin()), 0.0, origin});
      constant_ = false;
      grow();
      return;
    }
    case Expression::Kind::Unary: {
      emit(e.arg(), slots, depth);
      Op op = Op::Neg;
      switch (e.unary_op()) {
        case UnaryOp::Neg: op = Op::Neg; break;
        case UnaryOp::Sin: op = Op::Sin; break;
        case UnaryOp::Cos: op = Op::Cos; break;
        case UnaryOp::Sinh: op = Op::Sinh; break;
        case UnaryOp::Cosh: op = Op::Cosh; break;
        case UnaryOp::Tanh: op = Op::Tanh; break;
        case UnaryOp::Exp: op = Op::Exp; break;
        case UnaryOp::Log: op = Op::Log; break;
        case UnaryOp::Sqrt: op = Op::Sqrt; break;
        case UnaryOp::Abs: op = Op::Abs; break;
        case UnaryOp::Sign: op = Op::Sign; break;
      }
      push({op, 0, 0.0, origin});
      return;
    }
    case Expression::Kind::Binary: {
      emit(e.lhs(), slots, depth);
      if (e.binary_op() == BinaryOp::Pow && e.rhs().is_closed()) {
        // Exponents without variables are resolved now; integral ones admit
        // any base.
        const double c = Program(e.rhs(), {})(std::span<const double>{});
        if (std::isfinite(c) && c == std::nearbyint(c) && std::abs(c) < 2147483648.0) {
          push({Op::PowInt, 0, c, origin});
        } else {
          push({Op::Const, 0, c, origin});
          grow();
          push({Op::PowReal, 0, 0.0, origin});
          --depth;
        }
        return;
      }
      emit(e.rhs(), slots, depth);
      Op op = Op::Add;
      switch (e.binary_op()) {
        case BinaryOp::Add: op = Op::Add; break;
        case BinaryOp::Sub: op = Op::Sub; break;
        case BinaryOp::Mul: op = Op::Mul; break;
        case BinaryOp::Div: op = Op::Div; break;
        case BinaryOp::Pow: op = Op::PowReal; break;
      }
      push({op, 0, 0.0, origin});
      --depth;
      return;
    }
  }
}

void Program::fail(DomainKind kind, const Instr& in) const {
  std::string sub = "?";
  if (in.origin) {
    std::ostringstream os;
    print(os, *in.origin);
    sub = os.str();
  }
  throw DomainError(kind, sub);
}

double Program::operator()(std::span<const double> values) const {
  constexpr std::size_t kInline = 64;
  if (code_.empty()) return 0.0;
  std::array<double, kInline> inline_stack{};
  std::vector<double> heap_stack;
  double* st = inline_stack.data();
  if (max_depth_ > kInline) {
    heap_stack.resize(max_depth_);
    st = heap_stack.data();
  }
  std::size_t sp = 0;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::Const: st[sp++] = in.value; break;
      case Op::Load: st[sp++] = values[static_cast<std::size_t>(in.slot)]; break;
      case Op::Neg: st[sp - 1] = -st[sp - 1]; break;
      case Op::Sin: st[sp - 1] = std::sin(st[sp - 1]); break;
      case Op::Cos: st[sp - 1] = std::cos(st[sp - 1]); break;
      case Op::Sinh: st[sp - 1] = std::sinh(st[sp - 1]); break;
      case Op::Cosh: st[sp - 1] = std::cosh(st[sp - 1]); break;
      case Op::Tanh: st[sp - 1] = std::tanh(st[sp - 1]); break;
      case Op::Exp: st[sp - 1] = std::exp(st[sp - 1]); break;
      case Op::Log:
        if (!(st[sp - 1] > 0.0)) fail(DomainKind::LogOfNonPositive, in);
        st[sp - 1] = std::log(st[sp - 1]);
        break;
      case Op::Sqrt:
        if (st[sp - 1] < 0.0) fail(DomainKind::SqrtOfNegative, in);
        st[sp - 1] = std::sqrt(st[sp - 1]);
        break;
      case Op::Abs: st[sp - 1] = std::abs(st[sp - 1]); break;
      case Op::Sign: {
        const double x = st[sp - 1];
        st[sp - 1] = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
        break;
      }
      case Op::Add: --sp; st[sp - 1] += st[sp]; break;
      case Op::Sub: --sp; st[sp - 1] -= st[sp]; break;
      case Op::Mul: --sp; st[sp - 1] *= st[sp]; break;
      case Op::Div:
        --sp;
        if (st[sp] == 0.0) fail(DomainKind::DivisionByZero, in);
        st[sp - 1] /= st[sp];
        break;
      case Op::PowInt: {
        const double base = st[sp - 1];
        if (base == 0.0 && in.value < 0.0) fail(DomainKind::DivisionByZero, in);
        st[sp - 1] = in.value == 2.0 ? base * base : std::pow(base, in.value);
        break;
      }
      case Op::PowReal:
        --sp;
        if (!(st[sp - 1] > 0.0 || (st[sp - 1] == 0.0 && st[sp] > 0.0)))
          fail(DomainKind::PowOfNonPositiveBase, in);
        st[sp - 1] = std::pow(st[sp - 1], st[sp]);
        break;
    }
  }
  return st[0];
}

}  // namespace trajkit::expr
