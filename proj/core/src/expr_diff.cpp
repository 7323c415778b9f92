#include <cmath>

#include "trajkit/expr.hpp"

namespace trajkit::expr {

namespace {

using E = Expression;

bool is_const(const E& e) { return e.kind() == E::Kind::Constant; }

// Constructors with the handful of identities that keep derivative trees
// small. No other rewriting takes place.
E add(const E& a, const E& b) {
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  if (is_const(a) && is_const(b)) return E::constant(a.value() + b.value());
  return a + b;
}

E neg(const E& a) {
  if (is_const(a)) return E::constant(-a.value());
  if (a.kind() == E::Kind::Unary && a.unary_op() == UnaryOp::Neg) return a.arg();
  return -a;
}

E sub(const E& a, const E& b) {
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return neg(b);
  if (is_const(a) && is_const(b)) return E::constant(a.value() - b.value());
  return a - b;
}

E mul(const E& a, const E& b) {
  if (a.is_constant(0.0) || b.is_constant(0.0)) return E::constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  if (a.is_constant(-1.0)) return neg(b);
  if (b.is_constant(-1.0)) return neg(a);
  if (is_const(a) && is_const(b)) return E::constant(a.value() * b.value());
  return a * b;
}

E div(const E& a, const E& b) {
  if (a.is_constant(0.0)) return E::constant(0.0);
  if (b.is_constant(1.0)) return a;
  return a / b;
}

E pow(const E& base, const E& exponent) {
  if (exponent.is_constant(1.0)) return base;
  if (exponent.is_constant(0.0)) return E::constant(1.0);
  return E::binary(BinaryOp::Pow, base, exponent);
}

E fn(UnaryOp op, const E& a) { return E::unary(op, a); }

E derive(const E& e, std::string_view x);

E derive_unary(const E& e, std::string_view x) {
  const E f = e.arg();
  const E df = derive(f, x);
  if (df.is_constant(0.0)) return E::constant(0.0);
  switch (e.unary_op()) {
    case UnaryOp::Neg: return neg(df);
    case UnaryOp::Sin: return mul(fn(UnaryOp::Cos, f), df);
    case UnaryOp::Cos: return mul(neg(fn(UnaryOp::Sin, f)), df);
    case UnaryOp::Sinh: return mul(fn(UnaryOp::Cosh, f), df);
    case UnaryOp::Cosh: return mul(fn(UnaryOp::Sinh, f), df);
    case UnaryOp::Tanh:
      return mul(sub(E::constant(1.0), pow(fn(UnaryOp::Tanh, f), E::constant(2.0))), df);
    case UnaryOp::Exp: return mul(e, df);
    case UnaryOp::Log: return div(df, f);
    case UnaryOp::Sqrt: return div(df, mul(E::constant(2.0), e));
    case UnaryOp::Abs: return mul(fn(UnaryOp::Sign, f), df);
    case UnaryOp::Sign: return E::constant(0.0);
  }
  return E::constant(0.0);
}

E derive_binary(const E& e, std::string_view x) {
  const E a = e.lhs();
  const E b = e.rhs();
  switch (e.binary_op()) {
    case BinaryOp::Add: return add(derive(a, x), derive(b, x));
    case BinaryOp::Sub: return sub(derive(a, x), derive(b, x));
    case BinaryOp::Mul: return add(mul(derive(a, x), b), mul(a, derive(b, x)));
    case BinaryOp::Div: {
      const E da = derive(a, x);
      const E db = derive(b, x);
      if (db.is_constant(0.0)) return div(da, b);
      return div(sub(mul(da, b), mul(a, db)), pow(b, E::constant(2.0)));
    }
    case BinaryOp::Pow: {
      const E da = derive(a, x);
      if (!b.mentions(x)) {
        if (da.is_constant(0.0)) return E::constant(0.0);
        // d(f^c) = c f^(c-1) f'; closed exponents are folded so integer
        // powers stay integer.
        E lowered = b.is_closed() ? E::constant(b.evaluate({}) - 1.0) : sub(b, E::constant(1.0));
        E coef = b.is_closed() ? E::constant(b.evaluate({})) : b;
        return mul(mul(coef, pow(a, lowered)), da);
      }
      // d(f^g) = f^g (g' log f + g f'/f)
      const E db = derive(b, x);
      E inner = add(mul(db, fn(UnaryOp::Log, a)), div(mul(b, da), a));
      return mul(e, inner);
    }
  }
  return E::constant(0.0);
}

E derive(const E& e, std::string_view x) {
  switch (e.kind()) {
    case E::Kind::Constant: return E::constant(0.0);
    case E::Kind::Variable: return E::constant(e.name() == x ? 1.0 : 0.0);
    case E::Kind::Unary: return derive_unary(e, x);
    case E::Kind::Binary: return derive_binary(e, x);
  }
  return E::constant(0.0);
}

}  // namespace

Expression differentiate(const Expression& e, std::string_view variable) {
  return derive(e, variable);
}

}  // namespace trajkit::expr
