#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "varidyn/dual.hpp"
#include "varidyn/errors.hpp"

namespace varidyn {

enum class ExprOp : std::uint8_t {
  Const,
  Coord,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Pow,       ///< general base^exponent, both subexpressions
  PowConst,  ///< base^value with a literal exponent (integer fast path)
  Sqrt,
  Sin,
  Cos,
  Exp,
  Log,
  Abs,
};

struct ExprNode {
  ExprOp op;
  double value = 0.0;       ///< Const payload / PowConst exponent
  std::uint32_t index = 0;  ///< Coord payload (0-based)
};

/// Arithmetic expression over coordinates q1, q2, ... stored in evaluation
/// (postorder) form and run by a stack machine templated over the scalar, so
/// one definition yields plain values and dual-number derivatives alike.
/// Supports + - * / ^ (right-associative, binding tighter than unary minus),
/// parentheses, and sqrt/sin/cos/exp/log/abs.
class Expr {
 public:
  Expr() = default;

  /// Parse a textual definition; throws ParseError with a byte offset.
  static Expr parse(std::string_view text);

  static Expr constant(double value);
  static Expr coordinate(std::size_t index);  ///< 0-based; prints as q{i+1}

  bool valid() const { return !nodes_.empty(); }

  /// Smallest coordinate-vector length this expression can be evaluated on.
  std::size_t min_arity() const { return min_arity_; }

  /// Present iff the whole expression is a single literal.
  std::optional<double> constant_value() const;

  /// Unambiguous textual form; parse(str()) rebuilds the identical tree.
  std::string str() const;

  const std::vector<ExprNode>& nodes() const { return nodes_; }

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  friend Expr pow(const Expr& base, double exponent);
  friend Expr pow(const Expr& base, const Expr& exponent);
  friend Expr sqrt(const Expr& a);
  friend Expr sin(const Expr& a);
  friend Expr cos(const Expr& a);
  friend Expr exp(const Expr& a);
  friend Expr log(const Expr& a);
  friend Expr abs(const Expr& a);

  template <typename T>
  T eval(std::span<const T> coords) const;

  template <typename T>
  T eval(const std::vector<T>& coords) const {
    return eval(std::span<const T>(coords.data(), coords.size()));
  }

 private:
  static Expr binary(ExprOp op, const Expr& a, const Expr& b);
  static Expr unary(ExprOp op, const Expr& a);
  static Expr power(const Expr& base, const Expr& exponent);

  std::vector<ExprNode> nodes_;
  std::size_t min_arity_ = 0;
  std::size_t max_stack_ = 0;

  static constexpr std::size_t kInlineStack = 64;
};

template <typename T>
T Expr::eval(std::span<const T> coords) const {
  if (nodes_.empty()) throw PreconditionError("evaluating an empty expression");
  if (coords.size() < min_arity_)
    throw DimensionError("expression refers to coordinates beyond the input");

  T inline_stack[kInlineStack];
  std::vector<T> heap_stack;
  T* st = inline_stack;
  if (max_stack_ > kInlineStack) {
    heap_stack.resize(max_stack_);
    st = heap_stack.data();
  }

  std::size_t top = 0;
  for (const ExprNode& n : nodes_) {
    switch (n.op) {
      case ExprOp::Const:
        st[top++] = T{n.value};
        break;
      case ExprOp::Coord:
        st[top++] = coords[n.index];
        break;
      case ExprOp::Add:
        --top;
        st[top - 1] = st[top - 1] + st[top];
        break;
      case ExprOp::Sub:
        --top;
        st[top - 1] = st[top - 1] - st[top];
        break;
      case ExprOp::Mul:
        --top;
        st[top - 1] = st[top - 1] * st[top];
        break;
      case ExprOp::Div:
        --top;
        if (primal(st[top]) == 0.0) throw DomainError("division by zero");
        st[top - 1] = st[top - 1] / st[top];
        break;
      case ExprOp::Neg:
        st[top - 1] = -st[top - 1];
        break;
      case ExprOp::Pow:
        --top;
        st[top - 1] = pow(st[top - 1], st[top]);
        break;
      case ExprOp::PowConst:
        st[top - 1] = pow(st[top - 1], n.value);
        break;
      case ExprOp::Sqrt:
        st[top - 1] = sqrt(st[top - 1]);
        break;
      case ExprOp::Sin:
        st[top - 1] = sin(st[top - 1]);
        break;
      case ExprOp::Cos:
        st[top - 1] = cos(st[top - 1]);
        break;
      case ExprOp::Exp:
        st[top - 1] = exp(st[top - 1]);
        break;
      case ExprOp::Log:
        st[top - 1] = log(st[top - 1]);
        break;
      case ExprOp::Abs:
        st[top - 1] = abs(st[top - 1]);
        break;
    }
  }
  return st[0];
}

}  // namespace varidyn
