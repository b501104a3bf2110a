#pragma once

// Immutable symbolic scalar expressions over named chart coordinates.
//
// Expressions are shared DAGs; every constructor returns a new node and
// never mutates an existing one. Besides the usual arithmetic and
// elementary functions the engine has three flat primitives:
//
//   psi_n(u)      = exp(-1/u) / u^n          for u > 0, else 0
//   bump_n(r)     = B(r) / q(r)^n             with q = 1 - ((r - r0)/w)^2,
//                   B = exp(1 - 1/q)          for q > 0, else 0
//   smoothstep(u) = psi(u) / (psi(u) + psi(1 - u))
//
// The order n makes differentiation closed over the family:
// psi_n' = psi_{n+2} - n psi_{n+1}, bump_n' = q' (bump_{n+2} - n bump_{n+1}).

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "contactlab/chart.hpp"

namespace contactlab::expr {

enum class Op : std::uint8_t {
  constant,
  variable,
  parameter,
  add,
  sub,
  mul,
  div,
  neg,
  pow,
  sin,
  cos,
  atan,
  atan2,
  exp,
  log,
  sqrt,
  psi,
  bump,
  smoothstep,
};

class EvalError : public std::runtime_error {
 public:
  enum class Kind { division_by_zero, domain, unbound, outside_domain, unknown_coordinate };
  EvalError(Kind k, const std::string& what) : std::runtime_error(what), kind_(k) {}
  [[nodiscard]] Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct Node;

class Expr {
 public:
  Expr();
  Expr(double c);  // NOLINT(google-explicit-constructor): literals read naturally in formulas
  Expr(int c) : Expr(static_cast<double>(c)) {}  // NOLINT(google-explicit-constructor)
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  [[nodiscard]] const Node& node() const { return *node_; }
  [[nodiscard]] const Node* get() const { return node_.get(); }
  [[nodiscard]] Op op() const;
  [[nodiscard]] std::size_t hash() const;
  [[nodiscard]] bool is_constant() const { return op() == Op::constant; }
  [[nodiscard]] double value() const;
  [[nodiscard]] bool is_zero() const { return is_constant() && value() == 0.0; }
  [[nodiscard]] bool is_one() const { return is_constant() && value() == 1.0; }

 private:
  std::shared_ptr<const Node> node_;
};

struct Node {
  Op op = Op::constant;
  double value = 0.0;   // constant
  std::string name;     // variable / parameter
  int order = 0;        // psi, bump
  double center = 0.0;  // bump
  double width = 1.0;   // bump
  Expr a{std::shared_ptr<const Node>{}};  // null for leaves
  Expr b{std::shared_ptr<const Node>{}};
  std::size_t hash = 0;
};

namespace detail {

inline std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

inline std::size_t hash_double(double d) {
  if (d == 0.0) d = 0.0;  // fold -0
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  return std::hash<std::uint64_t>{}(bits);
}

inline bool is_unary(Op op) {
  switch (op) {
    case Op::neg:
    case Op::sin:
    case Op::cos:
    case Op::atan:
    case Op::exp:
    case Op::log:
    case Op::sqrt:
    case Op::psi:
    case Op::bump:
    case Op::smoothstep:
      return true;
    default:
      return false;
  }
}

inline bool is_binary(Op op) {
  switch (op) {
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div:
    case Op::pow:
    case Op::atan2:
      return true;
    default:
      return false;
  }
}

inline Expr make_node(Node n) {
  std::size_t h = std::hash<int>{}(static_cast<int>(n.op));
  switch (n.op) {
    case Op::constant:
      h = mix(h, hash_double(n.value));
      break;
    case Op::variable:
    case Op::parameter:
      h = mix(h, std::hash<std::string>{}(n.name));
      break;
    default:
      break;
  }
  if (n.op == Op::psi || n.op == Op::bump) h = mix(h, std::hash<int>{}(n.order));
  if (n.op == Op::bump) h = mix(mix(h, hash_double(n.center)), hash_double(n.width));
  if (is_unary(n.op) || is_binary(n.op)) h = mix(h, n.a.hash());
  if (is_binary(n.op)) h = mix(h, n.b.hash());
  n.hash = h;
  return Expr(std::make_shared<const Node>(std::move(n)));
}

inline const Expr& zero_constant() {
  static const Expr z = [] {
    Node n;
    n.op = Op::constant;
    n.value = 0.0;
    n.hash = mix(std::hash<int>{}(0), hash_double(0.0));
    return Expr(std::make_shared<const Node>(std::move(n)));
  }();
  return z;
}

}  // namespace detail

inline Expr::Expr() : node_(detail::zero_constant().node_) {}

inline Expr::Expr(double c) {
  if (c == 0.0) {
    node_ = detail::zero_constant().node_;
    return;
  }
  Node n;
  n.op = Op::constant;
  n.value = c;
  *this = detail::make_node(std::move(n));
}

inline Op Expr::op() const { return node_->op; }
inline std::size_t Expr::hash() const { return node_->hash; }
inline double Expr::value() const { return node_->value; }

/// Structural equality (pointer fast path, hash filter, deep compare).
inline bool same(const Expr& x, const Expr& y) {
  if (x.get() == y.get()) return true;
  if (x.hash() != y.hash()) return false;
  const Node& a = x.node();
  const Node& b = y.node();
  if (a.op != b.op) return false;
  switch (a.op) {
    case Op::constant:
      return a.value == b.value;
    case Op::variable:
    case Op::parameter:
      return a.name == b.name;
    default:
      break;
  }
  if (a.order != b.order || a.center != b.center || a.width != b.width) return false;
  if (detail::is_unary(a.op)) return same(a.a, b.a);
  return same(a.a, b.a) && same(a.b, b.b);
}

// ---------------------------------------------------------------------------
// Construction with best-effort simplification.

inline Expr constant(double c) { return Expr(c); }

inline Expr var(std::string name) {
  Node n;
  n.op = Op::variable;
  n.name = std::move(name);
  return detail::make_node(std::move(n));
}

inline Expr param(std::string name) {
  Node n;
  n.op = Op::parameter;
  n.name = std::move(name);
  return detail::make_node(std::move(n));
}

namespace detail {

inline Expr unary(Op op, const Expr& a) {
  Node n;
  n.op = op;
  n.a = a;
  return make_node(std::move(n));
}

inline Expr binary(Op op, const Expr& a, const Expr& b) {
  Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  return make_node(std::move(n));
}

inline double psi_value(int order, double u) {
  if (!(u > 0.0)) return 0.0;
  return std::exp(-1.0 / u - order * std::log(u));
}

inline double bump_value(int order, double center, double width, double r) {
  const double v = (r - center) / width;
  const double q = 1.0 - v * v;
  if (!(q > 0.0)) return 0.0;
  if (order == 0) return std::exp(1.0 - 1.0 / q);
  return std::exp(1.0 - 1.0 / q - order * std::log(q));
}

inline double smoothstep_value(double u) {
  if (!(u > 0.0)) return 0.0;
  if (u >= 1.0) return 1.0;
  const double p = psi_value(0, u);
  const double q = psi_value(0, 1.0 - u);
  return p / (p + q);
}

inline bool is_square_of(const Expr& e, Op fn, Expr* arg) {
  if (e.op() != Op::pow) return false;
  const auto& n = e.node();
  if (!n.b.is_constant() || n.b.value() != 2.0 || n.a.op() != fn) return false;
  *arg = n.a.node().a;
  return true;
}

}  // namespace detail

Expr pow(const Expr& a, const Expr& b);

inline Expr operator-(const Expr& a) {
  if (a.is_constant()) return Expr(-a.value());
  if (a.op() == Op::neg) return a.node().a;
  if (a.op() == Op::mul && a.node().a.is_constant()) {
    const double c = -a.node().a.value();
    if (c == 1.0) return a.node().b;
    return detail::binary(Op::mul, Expr(c), a.node().b);
  }
  return detail::unary(Op::neg, a);
}

inline Expr operator-(const Expr& a, const Expr& b);

inline Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr(a.value() + b.value());
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (b.op() == Op::neg) return a - b.node().a;
  if (a.op() == Op::neg) return b - a.node().a;
  Expr u, v;
  if ((detail::is_square_of(a, Op::sin, &u) && detail::is_square_of(b, Op::cos, &v) && same(u, v)) ||
      (detail::is_square_of(a, Op::cos, &u) && detail::is_square_of(b, Op::sin, &v) && same(u, v)))
    return Expr(1.0);
  return detail::binary(Op::add, a, b);
}

inline Expr operator-(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr(a.value() - b.value());
  if (b.is_zero()) return a;
  if (a.is_zero()) return -b;
  if (same(a, b)) return Expr(0.0);
  if (b.op() == Op::neg) return a + b.node().a;
  if (a.op() == Op::neg) return -(a.node().a + b);
  return detail::binary(Op::sub, a, b);
}

inline Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr(a.value() * b.value());
  if (a.is_zero() || b.is_zero()) return Expr(0.0);
  if (a.is_one()) return b;
  if (b.is_one()) return a;
  if (b.is_constant()) return b * a;
  if (a.is_constant()) {
    if (a.value() == -1.0) return -b;
    if (b.op() == Op::mul && b.node().a.is_constant()) return Expr(a.value() * b.node().a.value()) * b.node().b;
    if (b.op() == Op::neg) return Expr(-a.value()) * b.node().a;
  }
  if (a.op() == Op::neg) return -(a.node().a * b);
  if (b.op() == Op::neg) return -(a * b.node().a);
  if (same(a, b)) return pow(a, Expr(2.0));
  // Canonical operand order, so that a b - b a folds to zero.
  if (b.hash() < a.hash()) return detail::binary(Op::mul, b, a);
  return detail::binary(Op::mul, a, b);
}

inline Expr operator/(const Expr& a, const Expr& b) {
  if (a.is_zero()) return Expr(0.0);
  if (a.is_constant() && b.is_constant() && b.value() != 0.0) return Expr(a.value() / b.value());
  if (b.is_one()) return a;
  if (b.is_constant() && b.value() == -1.0) return -a;
  return detail::binary(Op::div, a, b);
}

inline Expr& operator+=(Expr& a, const Expr& b) { return a = a + b; }
inline Expr& operator-=(Expr& a, const Expr& b) { return a = a - b; }
inline Expr& operator*=(Expr& a, const Expr& b) { return a = a * b; }

inline Expr pow(const Expr& a, const Expr& b) {
  if (b.is_zero()) return Expr(1.0);
  if (b.is_one()) return a;
  if (a.is_constant() && b.is_constant()) {
    const double v = std::pow(a.value(), b.value());
    if (std::isfinite(v)) return Expr(v);
  }
  if (a.is_zero() && b.is_constant() && b.value() > 0.0) return Expr(0.0);
  if (a.is_one()) return Expr(1.0);
  return detail::binary(Op::pow, a, b);
}

#define CONTACTLAB_EXPR_UNARY(fn, OPNAME, STDFN)              \
  inline Expr fn(const Expr& a) {                             \
    if (a.is_constant()) {                                    \
      const double v = STDFN(a.value());                      \
      if (std::isfinite(v)) return Expr(v);                   \
    }                                                         \
    return detail::unary(Op::OPNAME, a);                      \
  }

CONTACTLAB_EXPR_UNARY(sin, sin, std::sin)
CONTACTLAB_EXPR_UNARY(cos, cos, std::cos)
CONTACTLAB_EXPR_UNARY(atan, atan, std::atan)
CONTACTLAB_EXPR_UNARY(exp, exp, std::exp)
#undef CONTACTLAB_EXPR_UNARY

inline Expr log(const Expr& a) {
  if (a.is_constant() && a.value() > 0.0) return Expr(std::log(a.value()));
  return detail::unary(Op::log, a);
}

inline Expr sqrt(const Expr& a) {
  if (a.is_constant() && a.value() >= 0.0) return Expr(std::sqrt(a.value()));
  return detail::unary(Op::sqrt, a);
}

inline Expr atan2(const Expr& y, const Expr& x) {
  if (y.is_constant() && x.is_constant()) return Expr(std::atan2(y.value(), x.value()));
  return detail::binary(Op::atan2, y, x);
}

/// psi_n(u) = exp(-1/u) u^{-n} for u > 0, zero otherwise.
inline Expr psi(const Expr& u, int order = 0) {
  if (order < 0) throw std::invalid_argument("psi: negative order");
  if (u.is_constant()) return Expr(detail::psi_value(order, u.value()));
  Node n;
  n.op = Op::psi;
  n.order = order;
  n.a = u;
  return detail::make_node(std::move(n));
}

/// B_{center,width}(r) q^{-n}; B(center) = 1, support exactly [center - width, center + width].
inline Expr bump(const Expr& r, double center, double width, int order = 0) {
  if (!(width > 0.0)) throw std::invalid_argument("bump: width must be positive");
  if (order < 0) throw std::invalid_argument("bump: negative order");
  if (r.is_constant()) return Expr(detail::bump_value(order, center, width, r.value()));
  Node n;
  n.op = Op::bump;
  n.order = order;
  n.center = center;
  n.width = width;
  n.a = r;
  return detail::make_node(std::move(n));
}

/// Flat smoothstep: 0 for u <= 0, 1 for u >= 1, C-infinity.
inline Expr smoothstep(const Expr& u) {
  if (u.is_constant()) return Expr(detail::smoothstep_value(u.value()));
  return detail::unary(Op::smoothstep, u);
}

// ---------------------------------------------------------------------------
// Traversals

namespace detail {

template <class F>
Expr rebuild(const Expr& e, std::unordered_map<const Node*, Expr>& memo, F&& leaf);

inline Expr rebuild_with(const Node& n, const Expr& a, const Expr& b) {
  switch (n.op) {
    case Op::add:
      return a + b;
    case Op::sub:
      return a - b;
    case Op::mul:
      return a * b;
    case Op::div:
      return a / b;
    case Op::pow:
      return pow(a, b);
    case Op::atan2:
      return atan2(a, b);
    case Op::neg:
      return -a;
    case Op::sin:
      return sin(a);
    case Op::cos:
      return cos(a);
    case Op::atan:
      return atan(a);
    case Op::exp:
      return exp(a);
    case Op::log:
      return log(a);
    case Op::sqrt:
      return sqrt(a);
    case Op::psi:
      return psi(a, n.order);
    case Op::bump:
      return bump(a, n.center, n.width, n.order);
    case Op::smoothstep:
      return smoothstep(a);
    default:
      throw std::logic_error("rebuild_with: leaf node");
  }
}

template <class F>
Expr rebuild(const Expr& e, std::unordered_map<const Node*, Expr>& memo, F&& leaf) {
  if (auto it = memo.find(e.get()); it != memo.end()) return it->second;
  const Node& n = e.node();
  Expr out;
  if (n.op == Op::constant || n.op == Op::variable || n.op == Op::parameter) {
    out = leaf(e);
  } else {
    const Expr a = rebuild(n.a, memo, leaf);
    const Expr b = is_binary(n.op) ? rebuild(n.b, memo, leaf) : Expr();
    if (a.get() == n.a.get() && (!is_binary(n.op) || b.get() == n.b.get()))
      out = e;
    else
      out = rebuild_with(n, a, b);
  }
  memo.emplace(e.get(), out);
  return out;
}

}  // namespace detail

/// Simultaneous substitution of variables by expressions.
inline Expr substitute(const Expr& e, const std::map<std::string, Expr, std::less<>>& repl) {
  std::unordered_map<const Node*, Expr> memo;
  return detail::rebuild(e, memo, [&](const Expr& leaf) {
    if (leaf.op() == Op::variable)
      if (auto it = repl.find(leaf.node().name); it != repl.end()) return it->second;
    return leaf;
  });
}

/// Replaces parameters by constants.
inline Expr bind(const Expr& e, const std::map<std::string, double, std::less<>>& values) {
  std::unordered_map<const Node*, Expr> memo;
  return detail::rebuild(e, memo, [&](const Expr& leaf) {
    if (leaf.op() == Op::parameter)
      if (auto it = values.find(leaf.node().name); it != values.end()) return Expr(it->second);
    return leaf;
  });
}

inline void collect_symbols(const Expr& e, std::set<std::string>& vars, std::set<std::string>& params) {
  std::unordered_map<const Node*, bool> seen;
  std::function<void(const Expr&)> walk = [&](const Expr& x) {
    if (!seen.emplace(x.get(), true).second) return;
    const Node& n = x.node();
    if (n.op == Op::variable) vars.insert(n.name);
    if (n.op == Op::parameter) params.insert(n.name);
    if (detail::is_unary(n.op) || detail::is_binary(n.op)) walk(n.a);
    if (detail::is_binary(n.op)) walk(n.b);
  };
  walk(e);
}

inline std::size_t node_count(const Expr& e) {
  std::unordered_map<const Node*, bool> seen;
  std::function<void(const Expr&)> walk = [&](const Expr& x) {
    if (!seen.emplace(x.get(), true).second) return;
    const Node& n = x.node();
    if (detail::is_unary(n.op) || detail::is_binary(n.op)) walk(n.a);
    if (detail::is_binary(n.op)) walk(n.b);
  };
  walk(e);
  return seen.size();
}

// ---------------------------------------------------------------------------
// Differentiation

namespace detail {

inline Expr diff_impl(const Expr& e, const std::string& v, std::unordered_map<const Node*, Expr>& memo) {
  if (auto it = memo.find(e.get()); it != memo.end()) return it->second;
  const Node& n = e.node();
  auto D = [&](const Expr& x) { return diff_impl(x, v, memo); };
  Expr out;
  switch (n.op) {
    case Op::constant:
    case Op::parameter:
      out = Expr(0.0);
      break;
    case Op::variable:
      out = Expr(n.name == v ? 1.0 : 0.0);
      break;
    case Op::add:
      out = D(n.a) + D(n.b);
      break;
    case Op::sub:
      out = D(n.a) - D(n.b);
      break;
    case Op::neg:
      out = -D(n.a);
      break;
    case Op::mul:
      out = D(n.a) * n.b + n.a * D(n.b);
      break;
    case Op::div: {
      const Expr da = D(n.a);
      const Expr db = D(n.b);
      out = da / n.b - (n.a * db) / (n.b * n.b);
      break;
    }
    case Op::pow: {
      const Expr da = D(n.a);
      if (n.b.is_constant()) {
        out = n.b * pow(n.a, Expr(n.b.value() - 1.0)) * da;
      } else {
        const Expr db = D(n.b);
        out = e * (db * log(n.a) + n.b * da / n.a);
      }
      break;
    }
    case Op::sin:
      out = cos(n.a) * D(n.a);
      break;
    case Op::cos:
      out = -(sin(n.a) * D(n.a));
      break;
    case Op::atan:
      out = D(n.a) / (Expr(1.0) + n.a * n.a);
      break;
    case Op::atan2: {
      // d atan2(y, x) = (x dy - y dx) / (x^2 + y^2)
      const Expr& y = n.a;
      const Expr& x = n.b;
      out = (x * D(y) - y * D(x)) / (x * x + y * y);
      break;
    }
    case Op::exp:
      out = e * D(n.a);
      break;
    case Op::log:
      out = D(n.a) / n.a;
      break;
    case Op::sqrt:
      out = D(n.a) / (Expr(2.0) * e);
      break;
    case Op::psi: {
      const Expr inner = psi(n.a, n.order + 2) - Expr(static_cast<double>(n.order)) * psi(n.a, n.order + 1);
      out = inner * D(n.a);
      break;
    }
    case Op::bump: {
      // q = 1 - ((r - c)/w)^2, q' = -2 (r - c) / w^2 * r'
      const Expr dq = Expr(-2.0 / (n.width * n.width)) * (n.a - Expr(n.center)) * D(n.a);
      const Expr inner = bump(n.a, n.center, n.width, n.order + 2) -
                         Expr(static_cast<double>(n.order)) * bump(n.a, n.center, n.width, n.order + 1);
      out = dq * inner;
      break;
    }
    case Op::smoothstep: {
      const Expr& u = n.a;
      const Expr w = Expr(1.0) - u;
      const Expr p = psi(u);
      const Expr q = psi(w);
      const Expr den = p + q;
      out = (psi(u, 2) * q + p * psi(w, 2)) / (den * den) * D(u);
      break;
    }
  }
  memo.emplace(e.get(), out);
  return out;
}

}  // namespace detail

/// Exact partial derivative with respect to the variable named `v`.
inline Expr diff(const Expr& e, const std::string& v) {
  std::unordered_map<const Node*, Expr> memo;
  return detail::diff_impl(e, v, memo);
}

/// Checked variant: `v` must be a coordinate of `chart`.
inline Expr diff(const Expr& e, const Chart& chart, const std::string& v) {
  if (!chart.index_of(v))
    throw EvalError(EvalError::Kind::unknown_coordinate, "diff: '" + v + "' is not a coordinate of chart '" +
                                                             chart.name() + "'");
  return diff(e, v);
}

// ---------------------------------------------------------------------------
// Printing

inline std::string to_string(const Expr& e) {
  const Node& n = e.node();
  std::ostringstream os;
  os.precision(17);
  auto s = [](const Expr& x) { return to_string(x); };
  switch (n.op) {
    case Op::constant:
      os << n.value;
      break;
    case Op::variable:
    case Op::parameter:
      os << n.name;
      break;
    case Op::add:
      os << "(" << s(n.a) << " + " << s(n.b) << ")";
      break;
    case Op::sub:
      os << "(" << s(n.a) << " - " << s(n.b) << ")";
      break;
    case Op::mul:
      os << s(n.a) << "*" << s(n.b);
      break;
    case Op::div:
      os << "(" << s(n.a) << ")/(" << s(n.b) << ")";
      break;
    case Op::neg:
      os << "-(" << s(n.a) << ")";
      break;
    case Op::pow:
      os << "(" << s(n.a) << ")^" << s(n.b);
      break;
    case Op::atan2:
      os << "atan2(" << s(n.a) << ", " << s(n.b) << ")";
      break;
    case Op::psi:
      os << "psi" << n.order << "(" << s(n.a) << ")";
      break;
    case Op::bump:
      os << "bump" << n.order << "[" << n.center << "," << n.width << "](" << s(n.a) << ")";
      break;
    default: {
      static const std::map<Op, const char*> names{{Op::sin, "sin"},   {Op::cos, "cos"},   {Op::atan, "atan"},
                                                   {Op::exp, "exp"},   {Op::log, "log"},   {Op::sqrt, "sqrt"},
                                                   {Op::smoothstep, "smoothstep"}};
      os << names.at(n.op) << "(" << s(n.a) << ")";
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Compiled evaluation

/// A straight-line program evaluating several expressions at once with
/// common subexpressions shared (value numbering over structure).
class Program {
 public:
  Program() = default;

  Program(std::span<const Expr> outputs, std::vector<std::string> vars, std::vector<std::string> params = {})
      : vars_(std::move(vars)), params_(std::move(params)) {
    std::unordered_map<const Node*, std::int32_t> slot_of;
    std::unordered_map<Key, std::int32_t, KeyHash> numbering;
    for (const auto& e : outputs) outputs_.push_back(emit(e, slot_of, numbering));
  }

  Program(const Expr& e, std::vector<std::string> vars, std::vector<std::string> params = {})
      : Program(std::span<const Expr>(&e, 1), std::move(vars), std::move(params)) {}

  [[nodiscard]] std::size_t size() const { return code_.size(); }
  [[nodiscard]] std::size_t outputs() const { return outputs_.size(); }

  /// Evaluates all outputs. `vars` follows the variable order given at
  /// construction; throws EvalError on division by zero or domain errors.
  void run(std::span<const double> vars, std::span<const double> params, std::span<double> out) const {
    thread_local std::vector<double> reg;
    if (reg.size() < code_.size()) reg.resize(code_.size());
    for (std::size_t k = 0; k < code_.size(); ++k) {
      const Instr& in = code_[k];
      const double x = in.a >= 0 ? reg[static_cast<std::size_t>(in.a)] : 0.0;
      const double y = in.b >= 0 ? reg[static_cast<std::size_t>(in.b)] : 0.0;
      double v = 0.0;
      switch (in.op) {
        case Op::constant:
          v = in.value;
          break;
        case Op::variable:
          v = vars[static_cast<std::size_t>(in.index)];
          break;
        case Op::parameter:
          v = params[static_cast<std::size_t>(in.index)];
          break;
        case Op::add:
          v = x + y;
          break;
        case Op::sub:
          v = x - y;
          break;
        case Op::neg:
          v = -x;
          break;
        case Op::mul:
          v = (x == 0.0 || y == 0.0) ? 0.0 : x * y;
          break;
        case Op::div:
          if (x == 0.0)
            v = 0.0;
          else if (y == 0.0)
            throw EvalError(EvalError::Kind::division_by_zero, "division by zero");
          else
            v = x / y;
          break;
        case Op::pow:
          v = power(x, y);
          break;
        case Op::sin:
          v = std::sin(x);
          break;
        case Op::cos:
          v = std::cos(x);
          break;
        case Op::atan:
          v = std::atan(x);
          break;
        case Op::atan2:
          v = std::atan2(x, y);
          break;
        case Op::exp:
          v = std::exp(x);
          break;
        case Op::log:
          if (!(x > 0.0)) throw EvalError(EvalError::Kind::domain, "log of non-positive value");
          v = std::log(x);
          break;
        case Op::sqrt:
          if (x < 0.0) throw EvalError(EvalError::Kind::domain, "sqrt of negative value");
          v = std::sqrt(x);
          break;
        case Op::psi:
          v = detail::psi_value(in.order, x);
          break;
        case Op::bump:
          v = detail::bump_value(in.order, in.center, in.width, x);
          break;
        case Op::smoothstep:
          v = detail::smoothstep_value(x);
          break;
      }
      reg[k] = v;
    }
    for (std::size_t i = 0; i < outputs_.size(); ++i) {
      const double v = reg[static_cast<std::size_t>(outputs_[i])];
      if (!std::isfinite(v)) throw EvalError(EvalError::Kind::domain, "non-finite result");
      out[i] = v;
    }
  }

  [[nodiscard]] double operator()(std::span<const double> vars, std::span<const double> params = {}) const {
    double v = 0.0;
    run(vars, params, std::span<double>(&v, 1));
    return v;
  }

 private:
  struct Instr {
    Op op = Op::constant;
    std::int32_t a = -1;
    std::int32_t b = -1;
    std::int32_t index = -1;
    int order = 0;
    double value = 0.0;
    double center = 0.0;
    double width = 1.0;
  };

  struct Key {
    Op op;
    std::int32_t a, b, index, order;
    double value, center, width;
    bool operator==(const Key& o) const {
      return op == o.op && a == o.a && b == o.b && index == o.index && order == o.order &&
             std::memcmp(&value, &o.value, sizeof value) == 0 && center == o.center && width == o.width;
    }
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::size_t h = std::hash<int>{}(static_cast<int>(k.op));
      h = detail::mix(h, std::hash<std::int32_t>{}(k.a));
      h = detail::mix(h, std::hash<std::int32_t>{}(k.b));
      h = detail::mix(h, std::hash<std::int32_t>{}(k.index));
      h = detail::mix(h, std::hash<int>{}(k.order));
      h = detail::mix(h, detail::hash_double(k.value));
      h = detail::mix(h, detail::hash_double(k.center));
      return detail::mix(h, detail::hash_double(k.width));
    }
  };

  static double power(double x, double y) {
    if (y == 2.0) return x * x;
    if (y == 1.0) return x;
    if (x == 0.0 && y < 0.0) throw EvalError(EvalError::Kind::division_by_zero, "zero raised to a negative power");
    if (x < 0.0 && std::floor(y) != y)
      throw EvalError(EvalError::Kind::domain, "negative base with non-integer exponent");
    return std::pow(x, y);
  }

  std::int32_t emit(const Expr& e, std::unordered_map<const Node*, std::int32_t>& slot_of,
                    std::unordered_map<Key, std::int32_t, KeyHash>& numbering) {
    if (auto it = slot_of.find(e.get()); it != slot_of.end()) return it->second;
    const Node& n = e.node();
    Instr in;
    in.op = n.op;
    switch (n.op) {
      case Op::constant:
        in.value = n.value;
        break;
      case Op::variable:
        in.index = lookup(vars_, n.name, "variable");
        break;
      case Op::parameter:
        in.index = lookup(params_, n.name, "parameter");
        break;
      default:
        in.a = emit(n.a, slot_of, numbering);
        if (detail::is_binary(n.op)) in.b = emit(n.b, slot_of, numbering);
        in.order = n.order;
        in.center = n.center;
        in.width = n.width;
    }
    const Key key{in.op, in.a, in.b, in.index, in.order, in.value, in.center, in.width};
    std::int32_t slot;
    if (auto it = numbering.find(key); it != numbering.end()) {
      slot = it->second;
    } else {
      slot = static_cast<std::int32_t>(code_.size());
      code_.push_back(in);
      numbering.emplace(key, slot);
    }
    slot_of.emplace(e.get(), slot);
    return slot;
  }

  static std::int32_t lookup(const std::vector<std::string>& names, const std::string& n, const char* what) {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == n) return static_cast<std::int32_t>(i);
    throw EvalError(what[0] == 'v' ? EvalError::Kind::unknown_coordinate : EvalError::Kind::unbound,
                    std::string("unbound ") + what + " '" + n + "'");
  }

  std::vector<std::string> vars_;
  std::vector<std::string> params_;
  std::vector<Instr> code_;
  std::vector<std::int32_t> outputs_;
};

using Params = std::map<std::string, double, std::less<>>;

/// Evaluates `e` at a chart point: periodic coordinates are reduced, the
/// point must lie in the chart domain and every parameter must be bound.
inline double eval(const Expr& e, const Chart& chart, std::span<const double> p, const Params& params = {}) {
  if (auto why = chart.domain_violation(p))
    throw EvalError(EvalError::Kind::outside_domain, "point outside domain of chart '" + chart.name() + "': " + *why);
  const Point q = chart.reduce(p);
  std::vector<std::string> pnames;
  std::vector<double> pvals;
  for (const auto& [k, v] : params) {
    pnames.push_back(k);
    pvals.push_back(v);
  }
  const Program prog(e, chart.names(), pnames);
  return prog(q, pvals);
}

inline double eval(const Expr& e, const Chart& chart, std::initializer_list<double> p, const Params& params = {}) {
  return eval(e, chart, std::span<const double>(p.begin(), p.size()), params);
}

}  // namespace contactlab::expr
