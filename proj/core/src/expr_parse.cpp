// Recursive-descent parser.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?
//   primary := number | identifier | function '(' expr ')' | '(' expr ')'

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <string>

#include "trajkit/expr.hpp"

namespace trajkit::expr {

namespace {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End, Bad };

struct Token {
  Tok kind = Tok::End;
  std::size_t pos = 0;
  std::string text;
  double number = 0.0;
};

class Parser {
 public:
  Parser(std::string_view src, const ParseOptions& opts) : src_(src), opts_(opts) { advance(); }

  Expression parse_all() {
    Expression e = parse_expr();
    if (tok_.kind != Tok::End) fail("operator or end of input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& expected) const {
    throw SyntaxError(tok_.pos, expected, tok_.text);
  }

  static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  void advance() {
    while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
    tok_ = Token{};
    tok_.pos = i_;
    if (i_ >= src_.size()) {
      tok_.kind = Tok::End;
      return;
    }
    const char c = src_[i_];
    auto single = [&](Tok k) {
      tok_.kind = k;
      tok_.text = std::string(1, c);
      ++i_;
    };
    switch (c) {
      case '+': single(Tok::Plus); return;
      case '-': single(Tok::Minus); return;
      case '*': single(Tok::Star); return;
      case '/': single(Tok::Slash); return;
      case '^': single(Tok::Caret); return;
      case '(': single(Tok::LParen); return;
      case ')': single(Tok::RParen); return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t j = i_;
      while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
      if (j < src_.size() && src_[j] == '.') {
        ++j;
        while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
      }
      if (j < src_.size() && (src_[j] == 'e' || src_[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
        if (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) {
          while (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) ++k;
          j = k;
        }
      }
      tok_.text = std::string(src_.substr(i_, j - i_));
      if (tok_.text == ".") {
        tok_.kind = Tok::Bad;
        return;
      }
      tok_.kind = Tok::Number;
      tok_.number = std::strtod(tok_.text.c_str(), nullptr);
      i_ = j;
      return;
    }
    if (ident_start(c)) {
      std::size_t j = i_;
      while (j < src_.size() && ident_char(src_[j])) ++j;
      tok_.kind = Tok::Ident;
      tok_.text = std::string(src_.substr(i_, j - i_));
      i_ = j;
      return;
    }
    tok_.kind = Tok::Bad;
    tok_.text = std::string(1, c);
  }

  Expression parse_expr() {
    Expression lhs = parse_term();
    while (tok_.kind == Tok::Plus || tok_.kind == Tok::Minus) {
      const BinaryOp op = tok_.kind == Tok::Plus ? BinaryOp::Add : BinaryOp::Sub;
      advance();
      lhs = Expression::binary(op, lhs, parse_term());
    }
    return lhs;
  }

  Expression parse_term() {
    Expression lhs = parse_unary();
    while (tok_.kind == Tok::Star || tok_.kind == Tok::Slash) {
      const BinaryOp op = tok_.kind == Tok::Star ? BinaryOp::Mul : BinaryOp::Div;
      advance();
      lhs = Expression::binary(op, lhs, parse_unary());
    }
    return lhs;
  }

  Expression parse_unary() {
    if (tok_.kind == Tok::Minus) {
      advance();
      return Expression::unary(UnaryOp::Neg, parse_unary());
    }
    if (tok_.kind == Tok::Plus) {
      advance();
      return parse_unary();
    }
    return parse_power();
  }

  Expression parse_power() {
    Expression base = parse_primary();
    if (tok_.kind == Tok::Caret) {
      advance();
      return Expression::binary(BinaryOp::Pow, base, parse_unary());
    }
    return base;
  }

  std::vector<std::string> allowed_names() const {
    std::vector<std::string> out;
    if (opts_.variables) out = *opts_.variables;
    for (const auto& [name, value] : opts_.parameters) out.push_back(name);
    for (const auto& f : function_names()) out.push_back(f);
    return out;
  }

  static std::optional<UnaryOp> function_op(std::string_view name) {
    static const std::pair<std::string_view, UnaryOp> table[] = {
        {"sin", UnaryOp::Sin},   {"cos", UnaryOp::Cos},   {"sinh", UnaryOp::Sinh},
        {"cosh", UnaryOp::Cosh}, {"tanh", UnaryOp::Tanh}, {"exp", UnaryOp::Exp},
        {"log", UnaryOp::Log},   {"sqrt", UnaryOp::Sqrt}, {"abs", UnaryOp::Abs},
        {"sign", UnaryOp::Sign}};
    for (const auto& [n, op] : table)
      if (n == name) return op;
    return std::nullopt;
  }

  Expression parse_primary() {
    switch (tok_.kind) {
      case Tok::Number: {
        const double v = tok_.number;
        advance();
        return Expression::constant(v);
      }
      case Tok::LParen: {
        advance();
        Expression inner = parse_expr();
        if (tok_.kind != Tok::RParen) fail("')'");
        advance();
        return inner;
      }
      case Tok::Ident: {
        const std::string name = tok_.text;
        const std::size_t pos = tok_.pos;
        if (auto op = function_op(name)) {
          advance();
          if (tok_.kind != Tok::LParen) fail("'(' after function name '" + name + "'");
          advance();
          Expression arg = parse_expr();
          if (tok_.kind != Tok::RParen) fail("')'");
          advance();
          return Expression::unary(*op, arg);
        }
        if (auto it = opts_.parameters.find(name); it != opts_.parameters.end()) {
          advance();
          return Expression::constant(it->second);
        }
        if (opts_.variables &&
            std::find(opts_.variables->begin(), opts_.variables->end(), name) ==
                opts_.variables->end()) {
          throw UnknownIdentifierError(pos, name, allowed_names());
        }
        advance();
        return Expression::variable(name);
      }
      default:
        fail("number, identifier or '('");
    }
  }

  std::string_view src_;
  const ParseOptions& opts_;
  std::size_t i_ = 0;
  Token tok_;
};

}  // namespace

Expression parse(std::string_view source, const ParseOptions& options) {
  return Parser(source, options).parse_all();
}

}  // namespace trajkit::expr
