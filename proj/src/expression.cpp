#include "varidyn/expression.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <utility>

namespace varidyn {

namespace {

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Precedence of a printed subexpression: additive 1, multiplicative 2,
// unary minus (and negative literals) 3, power 4, primaries 5.
constexpr int kPrecAdd = 1;
constexpr int kPrecMul = 2;
constexpr int kPrecNeg = 3;
constexpr int kPrecPow = 4;
constexpr int kPrecPrimary = 5;

struct Parser {
  std::string_view s;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < s.size() &&
           (s[pos] == ' ' || s[pos] == '\t' || s[pos] == '\n' ||
            s[pos] == '\r'))
      ++pos;
  }

  bool accept(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c))
      throw ParseError(std::string("expected '") + c + "'", pos);
  }

  Expr parse_expr() {
    Expr e = parse_term();
    for (;;) {
      if (accept('+'))
        e = e + parse_term();
      else if (accept('-'))
        e = e - parse_term();
      else
        return e;
    }
  }

  Expr parse_term() {
    Expr e = parse_factor();
    for (;;) {
      if (accept('*'))
        e = e * parse_factor();
      else if (accept('/'))
        e = e / parse_factor();
      else
        return e;
    }
  }

  Expr parse_factor() {
    if (accept('-')) return -parse_factor();
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (accept('^')) return pow(base, parse_factor());
    return base;
  }

  Expr parse_primary() {
    skip_ws();
    if (pos >= s.size()) throw ParseError("unexpected end of input", pos);
    char c = s[pos];
    if (accept('(')) {
      Expr e = parse_expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
      return parse_ident();
    throw ParseError(std::string("unexpected character '") + c + "'", pos);
  }

  Expr parse_number() {
    double v = 0.0;
    const char* first = s.data() + pos;
    const char* last = s.data() + s.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{})
      throw ParseError("invalid numeric literal", pos);
    pos += static_cast<std::size_t>(res.ptr - first);
    return Expr::constant(v);
  }

  Expr parse_ident() {
    std::size_t start = pos;
    while (pos < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[pos])) ||
            s[pos] == '_'))
      ++pos;
    std::string_view name = s.substr(start, pos - start);

    if (name.size() >= 2 && name[0] == 'q' &&
        std::all_of(name.begin() + 1, name.end(), [](char ch) {
          return std::isdigit(static_cast<unsigned char>(ch));
        })) {
      unsigned long idx = 0;
      std::from_chars(name.data() + 1, name.data() + name.size(), idx);
      if (idx == 0)
        throw ParseError("coordinate indices start at q1", start);
      if (idx > 1024)
        throw ParseError("coordinate index too large", start);
      return Expr::coordinate(idx - 1);
    }

    ExprOp fn;
    if (name == "sqrt")
      fn = ExprOp::Sqrt;
    else if (name == "sin")
      fn = ExprOp::Sin;
    else if (name == "cos")
      fn = ExprOp::Cos;
    else if (name == "exp")
      fn = ExprOp::Exp;
    else if (name == "log")
      fn = ExprOp::Log;
    else if (name == "abs")
      fn = ExprOp::Abs;
    else
      throw ParseError("unknown identifier '" + std::string(name) + "'",
                       start);
    expect('(');
    Expr arg = parse_expr();
    expect(')');
    switch (fn) {
      case ExprOp::Sqrt:
        return sqrt(arg);
      case ExprOp::Sin:
        return sin(arg);
      case ExprOp::Cos:
        return cos(arg);
      case ExprOp::Exp:
        return exp(arg);
      case ExprOp::Log:
        return log(arg);
      default:
        return abs(arg);
    }
  }
};

}  // namespace

Expr Expr::parse(std::string_view text) {
  Parser p{text};
  Expr e = p.parse_expr();
  p.skip_ws();
  if (p.pos != text.size())
    throw ParseError("unexpected trailing input", p.pos);
  return e;
}

Expr Expr::constant(double value) {
  if (!std::isfinite(value))
    throw PreconditionError("non-finite constant in an expression");
  Expr e;
  e.nodes_.push_back({ExprOp::Const, value, 0});
  e.min_arity_ = 0;
  e.max_stack_ = 1;
  return e;
}

Expr Expr::coordinate(std::size_t index) {
  Expr e;
  e.nodes_.push_back({ExprOp::Coord, 0.0, static_cast<std::uint32_t>(index)});
  e.min_arity_ = index + 1;
  e.max_stack_ = 1;
  return e;
}

std::optional<double> Expr::constant_value() const {
  if (nodes_.size() == 1 && nodes_[0].op == ExprOp::Const)
    return nodes_[0].value;
  return std::nullopt;
}

Expr Expr::binary(ExprOp op, const Expr& a, const Expr& b) {
  if (!a.valid() || !b.valid())
    throw PreconditionError("operation on an empty expression");
  auto ca = a.constant_value();
  auto cb = b.constant_value();
  // Light folding keeps machine-composed definitions readable. Only folds
  // that cannot change the evaluation domain are applied.
  if (ca && cb) {
    switch (op) {
      case ExprOp::Add:
        return constant(*ca + *cb);
      case ExprOp::Sub:
        return constant(*ca - *cb);
      case ExprOp::Mul:
        return constant(*ca * *cb);
      case ExprOp::Div:
        if (*cb != 0.0) return constant(*ca / *cb);
        break;
      default:
        break;
    }
  }
  if (op == ExprOp::Add && ca && *ca == 0.0) return b;
  if (op == ExprOp::Add && cb && *cb == 0.0) return a;
  if (op == ExprOp::Sub && cb && *cb == 0.0) return a;
  if (op == ExprOp::Mul && ca && *ca == 1.0) return b;
  if (op == ExprOp::Mul && cb && *cb == 1.0) return a;
  if (op == ExprOp::Div && cb && *cb == 1.0) return a;

  Expr e;
  e.nodes_.reserve(a.nodes_.size() + b.nodes_.size() + 1);
  e.nodes_.insert(e.nodes_.end(), a.nodes_.begin(), a.nodes_.end());
  e.nodes_.insert(e.nodes_.end(), b.nodes_.begin(), b.nodes_.end());
  e.nodes_.push_back({op, 0.0, 0});
  e.min_arity_ = std::max(a.min_arity_, b.min_arity_);
  e.max_stack_ = std::max(a.max_stack_, 1 + b.max_stack_);
  return e;
}

Expr Expr::unary(ExprOp op, const Expr& a) {
  if (!a.valid())
    throw PreconditionError("operation on an empty expression");
  if (op == ExprOp::Neg) {
    if (auto c = a.constant_value()) return constant(-*c);
    // --x -> x
    if (a.nodes_.back().op == ExprOp::Neg) {
      Expr e = a;
      e.nodes_.pop_back();
      return e;
    }
  }
  Expr e = a;
  e.nodes_.push_back({op, 0.0, 0});
  return e;
}

Expr Expr::power(const Expr& base, const Expr& exponent) {
  if (!base.valid() || !exponent.valid())
    throw PreconditionError("operation on an empty expression");
  if (auto c = exponent.constant_value()) {
    if (*c == 1.0) return base;
    Expr e = base;
    e.nodes_.push_back({ExprOp::PowConst, *c, 0});
    return e;
  }
  return binary(ExprOp::Pow, base, exponent);
}

Expr operator+(const Expr& a, const Expr& b) {
  return Expr::binary(ExprOp::Add, a, b);
}
Expr operator-(const Expr& a, const Expr& b) {
  return Expr::binary(ExprOp::Sub, a, b);
}
Expr operator*(const Expr& a, const Expr& b) {
  return Expr::binary(ExprOp::Mul, a, b);
}
Expr operator/(const Expr& a, const Expr& b) {
  return Expr::binary(ExprOp::Div, a, b);
}
Expr operator-(const Expr& a) { return Expr::unary(ExprOp::Neg, a); }
Expr pow(const Expr& base, double exponent) {
  return Expr::power(base, Expr::constant(exponent));
}
Expr pow(const Expr& base, const Expr& exponent) {
  return Expr::power(base, exponent);
}
Expr sqrt(const Expr& a) { return Expr::unary(ExprOp::Sqrt, a); }
Expr sin(const Expr& a) { return Expr::unary(ExprOp::Sin, a); }
Expr cos(const Expr& a) { return Expr::unary(ExprOp::Cos, a); }
Expr exp(const Expr& a) { return Expr::unary(ExprOp::Exp, a); }
Expr log(const Expr& a) { return Expr::unary(ExprOp::Log, a); }
Expr abs(const Expr& a) { return Expr::unary(ExprOp::Abs, a); }

std::string Expr::str() const {
  if (nodes_.empty()) return "<empty>";

  struct Piece {
    std::string text;
    int prec;
  };
  std::vector<Piece> st;

  auto wrap = [](const Piece& p, int min_prec) {
    return p.prec < min_prec ? "(" + p.text + ")" : p.text;
  };
  // Right operands parenthesize on equal precedence so the printed string
  // reparses to the structurally identical tree.
  auto wrap_right = [](const Piece& p, int op_prec) {
    return p.prec <= op_prec ? "(" + p.text + ")" : p.text;
  };

  auto binary_text = [&](const char* sym, int prec) {
    Piece rhs = std::move(st.back());
    st.pop_back();
    Piece lhs = std::move(st.back());
    st.pop_back();
    st.push_back(
        {wrap(lhs, prec) + " " + sym + " " + wrap_right(rhs, prec), prec});
  };
  auto func_text = [&](const char* name) {
    Piece arg = std::move(st.back());
    st.pop_back();
    st.push_back({std::string(name) + "(" + arg.text + ")", kPrecPrimary});
  };

  for (const ExprNode& n : nodes_) {
    switch (n.op) {
      case ExprOp::Const:
        st.push_back({format_double(n.value),
                      n.value < 0.0 ? kPrecNeg : kPrecPrimary});
        break;
      case ExprOp::Coord:
        st.push_back({"q" + std::to_string(n.index + 1), kPrecPrimary});
        break;
      case ExprOp::Add:
        binary_text("+", kPrecAdd);
        break;
      case ExprOp::Sub:
        binary_text("-", kPrecAdd);
        break;
      case ExprOp::Mul:
        binary_text("*", kPrecMul);
        break;
      case ExprOp::Div:
        binary_text("/", kPrecMul);
        break;
      case ExprOp::Neg: {
        Piece arg = std::move(st.back());
        st.pop_back();
        st.push_back({"-" + wrap(arg, kPrecPow), kPrecNeg});
        break;
      }
      case ExprOp::Pow: {
        Piece ex = std::move(st.back());
        st.pop_back();
        Piece base = std::move(st.back());
        st.pop_back();
        st.push_back({wrap(base, kPrecPrimary) + "^" + wrap(ex, kPrecNeg),
                      kPrecPow});
        break;
      }
      case ExprOp::PowConst: {
        Piece base = std::move(st.back());
        st.pop_back();
        st.push_back(
            {wrap(base, kPrecPrimary) + "^" + format_double(n.value),
             kPrecPow});
        break;
      }
      case ExprOp::Sqrt:
        func_text("sqrt");
        break;
      case ExprOp::Sin:
        func_text("sin");
        break;
      case ExprOp::Cos:
        func_text("cos");
        break;
      case ExprOp::Exp:
        func_text("exp");
        break;
      case ExprOp::Log:
        func_text("log");
        break;
      case ExprOp::Abs:
        func_text("abs");
        break;
    }
  }
  return st.back().text;
}

}  // namespace varidyn
