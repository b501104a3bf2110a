#pragma once

// Exterior calculus on a single chart: differential forms with symbolic
// coefficients, vector fields, coordinate maps and pullbacks.

#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "contactlab/chart.hpp"
#include "contactlab/expr.hpp"

namespace contactlab {

using expr::Expr;

/// Bit i set <=> coordinate i is in the (strictly increasing) multi-index.
using Mask = std::uint32_t;

inline int degree_of(Mask m) { return std::popcount(m); }

/// All masks with k bits among the first n, in lexicographic order of
/// their index tuples (dx0^dx1 < dx0^dx2 < ... ).
inline std::vector<Mask> basis_masks(std::size_t n, int k) {
  std::vector<Mask> out;
  std::vector<int> idx(static_cast<std::size_t>(k));
  std::function<void(int, int)> rec = [&](int pos, int start) {
    if (pos == k) {
      Mask m = 0;
      for (int i : idx) m |= Mask{1} << i;
      out.push_back(m);
      return;
    }
    for (int i = start; i < static_cast<int>(n); ++i) {
      idx[static_cast<std::size_t>(pos)] = i;
      rec(pos + 1, i + 1);
    }
  };
  rec(0, 0);
  return out;
}

/// Sign of dx_A ^ dx_B relative to dx_{A|B}; zero when A and B overlap.
inline int wedge_sign(Mask a, Mask b) {
  if (a & b) return 0;
  int swaps = 0;
  for (Mask rest = b; rest; rest &= rest - 1) {
    const int j = std::countr_zero(rest);
    swaps += std::popcount(a >> (j + 1));
  }
  return (swaps % 2) ? -1 : 1;
}

inline void require_same_chart(const ChartPtr& a, const ChartPtr& b, const char* where) {
  if (!same_chart(a, b))
    throw std::invalid_argument(std::string(where) + ": chart mismatch ('" + (a ? a->name() : "?") + "' vs '" +
                                (b ? b->name() : "?") + "')");
}

class Form {
 public:
  Form(ChartPtr chart, int degree) : chart_(std::move(chart)), degree_(degree) {
    if (!chart_) throw std::invalid_argument("form without chart");
    if (degree_ < 0 || degree_ > static_cast<int>(chart_->dim()))
      throw std::invalid_argument("form degree " + std::to_string(degree_) + " exceeds chart dimension " +
                                  std::to_string(chart_->dim()));
  }

  static Form scalar(ChartPtr chart, Expr f) {
    Form out(std::move(chart), 0);
    out.add_term(0, std::move(f));
    return out;
  }

  /// Builds a form from (coordinate names, coefficient) pairs; names may be
  /// unordered, the sign of the reordering is absorbed.
  static Form from(ChartPtr chart, std::initializer_list<std::pair<std::vector<std::string>, Expr>> terms) {
    std::optional<Form> out;
    for (const auto& [names, coef] : terms) {
      Form t = scalar(chart, coef);
      for (const auto& n : names) t = t.wedge_differential(n);
      out = out ? *out + t : t;
    }
    if (!out) throw std::invalid_argument("Form::from needs at least one term");
    return *out;
  }

  /// The coordinate 1-form d(name).
  static Form d_coordinate(ChartPtr chart, const std::string& name) {
    const auto i = chart->index_of(name);
    if (!i) throw std::invalid_argument("unknown coordinate '" + name + "' in chart '" + chart->name() + "'");
    Form out(std::move(chart), 1);
    out.add_term(Mask{1} << *i, Expr(1.0));
    return out;
  }

  [[nodiscard]] const ChartPtr& chart() const { return chart_; }
  [[nodiscard]] int degree() const { return degree_; }
  [[nodiscard]] const std::map<Mask, Expr>& terms() const { return terms_; }

  [[nodiscard]] Expr coeff(Mask m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? Expr(0.0) : it->second;
  }

  /// Coefficient of dx_{names...} (names in any order, sign applied).
  [[nodiscard]] Expr coeff(const std::vector<std::string>& names) const {
    Mask m = 0;
    int sign = 1;
    for (const auto& n : names) {
      const auto i = chart_->index_of(n);
      if (!i) throw std::invalid_argument("unknown coordinate '" + n + "'");
      const Mask bit = Mask{1} << *i;
      sign *= wedge_sign(m, bit);
      if (sign == 0) return Expr(0.0);
      m |= bit;
    }
    return sign > 0 ? coeff(m) : -coeff(m);
  }

  /// Coefficients in basis_masks order.
  [[nodiscard]] std::vector<Expr> coefficient_vector() const {
    std::vector<Expr> out;
    for (Mask m : basis_masks(chart_->dim(), degree_)) out.push_back(coeff(m));
    return out;
  }

  [[nodiscard]] bool structurally_zero() const {
    for (const auto& [m, c] : terms_)
      if (!c.is_zero()) return false;
    return true;
  }

  void add_term(Mask m, const Expr& c) {
    if (degree_of(m) != degree_) throw std::invalid_argument("term degree mismatch");
    if (c.is_zero()) return;
    auto [it, fresh] = terms_.emplace(m, c);
    if (!fresh) {
      it->second = it->second + c;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  friend Form operator+(const Form& a, const Form& b) {
    require_same_chart(a.chart_, b.chart_, "form sum");
    if (a.degree_ != b.degree_) throw std::invalid_argument("form sum: degree mismatch");
    Form out = a;
    for (const auto& [m, c] : b.terms_) out.add_term(m, c);
    return out;
  }

  friend Form operator-(const Form& a) {
    Form out(a.chart_, a.degree_);
    for (const auto& [m, c] : a.terms_) out.add_term(m, -c);
    return out;
  }

  friend Form operator-(const Form& a, const Form& b) { return a + (-b); }

  friend Form operator*(const Expr& f, const Form& a) {
    Form out(a.chart_, a.degree_);
    for (const auto& [m, c] : a.terms_) out.add_term(m, f * c);
    return out;
  }

 private:
  Form wedge_differential(const std::string& name) const {
    const auto i = chart_->index_of(name);
    if (!i) throw std::invalid_argument("unknown coordinate '" + name + "'");
    const Mask bit = Mask{1} << *i;
    Form out(chart_, degree_ + 1);
    for (const auto& [m, c] : terms_) {
      const int s = wedge_sign(m, bit);
      if (s != 0) out.add_term(m | bit, s > 0 ? c : -c);
    }
    return out;
  }

  ChartPtr chart_;
  int degree_;
  std::map<Mask, Expr> terms_;
};

class VectorField {
 public:
  VectorField(ChartPtr chart, std::vector<Expr> comps) : chart_(std::move(chart)), comps_(std::move(comps)) {
    if (!chart_ || comps_.size() != chart_->dim())
      throw std::invalid_argument("vector field needs one component per coordinate");
  }

  /// Coordinate field d/d(name).
  static VectorField coordinate(ChartPtr chart, const std::string& name) {
    const auto i = chart->index_of(name);
    if (!i) throw std::invalid_argument("unknown coordinate '" + name + "'");
    std::vector<Expr> c(chart->dim(), Expr(0.0));
    c[*i] = Expr(1.0);
    return VectorField(std::move(chart), std::move(c));
  }

  [[nodiscard]] const ChartPtr& chart() const { return chart_; }
  [[nodiscard]] const std::vector<Expr>& components() const { return comps_; }
  [[nodiscard]] const Expr& operator[](std::size_t i) const { return comps_.at(i); }

  friend VectorField operator+(const VectorField& a, const VectorField& b) {
    require_same_chart(a.chart_, b.chart_, "vector field sum");
    std::vector<Expr> c(a.comps_.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.comps_[i] + b.comps_[i];
    return VectorField(a.chart_, std::move(c));
  }
  friend VectorField operator-(const VectorField& a, const VectorField& b) {
    require_same_chart(a.chart_, b.chart_, "vector field difference");
    std::vector<Expr> c(a.comps_.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.comps_[i] - b.comps_[i];
    return VectorField(a.chart_, std::move(c));
  }
  friend VectorField operator*(const Expr& f, const VectorField& a) {
    std::vector<Expr> c(a.comps_.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = f * a.comps_[i];
    return VectorField(a.chart_, std::move(c));
  }

 private:
  ChartPtr chart_;
  std::vector<Expr> comps_;
};

/// A line field is represented by any nowhere-zero spanning vector field.
using LineField = VectorField;

/// A smooth map between charts, given by target-coordinate expressions in
/// the source coordinates.
class CoordinateMap {
 public:
  CoordinateMap(ChartPtr source, ChartPtr target, std::vector<Expr> comps)
      : source_(std::move(source)), target_(std::move(target)), comps_(std::move(comps)) {
    if (!source_ || !target_ || comps_.size() != target_->dim())
      throw std::invalid_argument("coordinate map needs one component per target coordinate");
  }

  static CoordinateMap identity(const ChartPtr& chart) {
    std::vector<Expr> c;
    for (const auto& n : chart->names()) c.push_back(expr::var(n));
    return CoordinateMap(chart, chart, std::move(c));
  }

  [[nodiscard]] const ChartPtr& source() const { return source_; }
  [[nodiscard]] const ChartPtr& target() const { return target_; }
  [[nodiscard]] const std::vector<Expr>& components() const { return comps_; }

  /// Rewrites an expression in target coordinates as one in source coordinates.
  [[nodiscard]] Expr substitute_into(const Expr& e) const {
    std::map<std::string, Expr, std::less<>> repl;
    for (std::size_t i = 0; i < comps_.size(); ++i) repl.emplace(target_->coord(i).name, comps_[i]);
    return expr::substitute(e, repl);
  }

  /// (this o inner): inner maps into this map's source.
  [[nodiscard]] CoordinateMap after(const CoordinateMap& inner) const {
    require_same_chart(inner.target_, source_, "map composition");
    std::vector<Expr> c;
    for (const auto& e : comps_) c.push_back(inner.substitute_into(e));
    return CoordinateMap(inner.source_, target_, std::move(c));
  }

  [[nodiscard]] Point apply(std::span<const double> p) const {
    const expr::Program prog(comps_, source_->names());
    Point out(comps_.size());
    prog.run(source_->reduce(p), {}, out);
    return out;
  }

 private:
  ChartPtr source_;
  ChartPtr target_;
  std::vector<Expr> comps_;
};

/// Raised when a map sends a sample point outside its target chart.
class DomainError : public std::runtime_error {
 public:
  DomainError(const std::string& what, Point witness) : std::runtime_error(what), witness_(std::move(witness)) {}
  [[nodiscard]] const Point& witness() const { return witness_; }

 private:
  Point witness_;
};

// ---------------------------------------------------------------------------
// Operations

/// Exterior derivative.
inline Form exterior_d(const Form& w) {
  const auto& chart = w.chart();
  if (w.degree() >= static_cast<int>(chart->dim()))
    throw std::invalid_argument("exterior_d: top-degree form on chart '" + chart->name() + "'");
  Form out(chart, w.degree() + 1);
  for (const auto& [m, c] : w.terms()) {
    for (std::size_t j = 0; j < chart->dim(); ++j) {
      const Mask bit = Mask{1} << j;
      if (m & bit) continue;
      const Expr dc = expr::diff(c, chart->coord(j).name);
      if (dc.is_zero()) continue;
      const int s = wedge_sign(bit, m);
      out.add_term(m | bit, s > 0 ? dc : -dc);
    }
  }
  return out;
}

inline Form wedge(const Form& a, const Form& b) {
  require_same_chart(a.chart(), b.chart(), "wedge");
  if (a.degree() + b.degree() > static_cast<int>(a.chart()->dim()))
    throw std::invalid_argument("wedge: degree exceeds chart dimension");
  Form out(a.chart(), a.degree() + b.degree());
  for (const auto& [ma, ca] : a.terms())
    for (const auto& [mb, cb] : b.terms()) {
      const int s = wedge_sign(ma, mb);
      if (s == 0) continue;
      const Expr p = ca * cb;
      out.add_term(ma | mb, s > 0 ? p : -p);
    }
  return out;
}

/// Contraction in the first slot.
inline Form interior(const VectorField& v, const Form& w) {
  require_same_chart(v.chart(), w.chart(), "interior");
  if (w.degree() < 1) throw std::invalid_argument("interior: 0-form has no slot");
  Form out(w.chart(), w.degree() - 1);
  for (const auto& [m, c] : w.terms()) {
    int pos = 0;
    for (Mask rest = m; rest; rest &= rest - 1, ++pos) {
      const int i = std::countr_zero(rest);
      const Expr& vi = v[static_cast<std::size_t>(i)];
      if (vi.is_zero()) continue;
      const Expr t = vi * c;
      out.add_term(m & ~(Mask{1} << i), (pos % 2) ? -t : t);
    }
  }
  return out;
}

/// v(f) for a scalar f.
inline Expr directional(const VectorField& v, const Expr& f) {
  Expr out(0.0);
  const auto& chart = v.chart();
  for (std::size_t i = 0; i < chart->dim(); ++i) {
    if (v[i].is_zero()) continue;
    out = out + v[i] * expr::diff(f, chart->coord(i).name);
  }
  return out;
}

/// Cartan: L_v w = i_v dw + d(i_v w); dw of a top-degree form is zero.
inline Form lie_derivative(const VectorField& v, const Form& w) {
  require_same_chart(v.chart(), w.chart(), "lie_derivative");
  const int n = static_cast<int>(w.chart()->dim());
  Form out(w.chart(), w.degree());
  if (w.degree() < n) out = out + interior(v, exterior_d(w));
  if (w.degree() >= 1) out = out + exterior_d(interior(v, w));
  else out = Form::scalar(w.chart(), directional(v, w.coeff(0)));
  return out;
}

inline VectorField lie_bracket(const VectorField& v, const VectorField& w) {
  require_same_chart(v.chart(), w.chart(), "lie_bracket");
  std::vector<Expr> c(v.components().size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = directional(v, w[i]) - directional(w, v[i]);
  return VectorField(v.chart(), std::move(c));
}

/// Symbolic pullback of a form on the target chart to the source chart.
inline Form pullback(const CoordinateMap& m, const Form& w) {
  require_same_chart(m.target(), w.chart(), "pullback");
  const auto& src = m.source();
  std::vector<Form> dm;
  for (const auto& comp : m.components()) {
    Form d(src, 1);
    for (std::size_t j = 0; j < src->dim(); ++j) d.add_term(Mask{1} << j, expr::diff(comp, src->coord(j).name));
    dm.push_back(std::move(d));
  }
  Form out(src, w.degree());
  for (const auto& [mask, c] : w.terms()) {
    Form t = Form::scalar(src, m.substitute_into(c));
    for (Mask rest = mask; rest; rest &= rest - 1) t = wedge(t, dm[static_cast<std::size_t>(std::countr_zero(rest))]);
    out = out + t;
  }
  return out;
}

/// Throws DomainError with the first sample whose image leaves the target.
inline void check_image(const CoordinateMap& m, const std::vector<Point>& samples) {
  const expr::Program prog(m.components(), m.source()->names());
  Point img(m.components().size());
  for (const auto& p : samples) {
    prog.run(m.source()->reduce(p), {}, img);
    if (auto why = m.target()->domain_violation(img))
      throw DomainError("image leaves chart '" + m.target()->name() + "': " + *why, p);
  }
}

/// Pullback with a domain check on `samples` random source points.
inline Form pullback_checked(const CoordinateMap& m, const Form& w, std::size_t samples = 256,
                             std::uint64_t seed = 7) {
  check_image(m, random_points(*m.source(), samples, seed));
  return pullback(m, w);
}

// ---------------------------------------------------------------------------
// Numeric evaluation

/// A form (or several) compiled for repeated pointwise evaluation.
class CompiledForm {
 public:
  explicit CompiledForm(const Form& w)
      : chart_(w.chart()), degree_(w.degree()), masks_(basis_masks(w.chart()->dim(), w.degree())) {
    const auto coeffs = w.coefficient_vector();
    prog_ = expr::Program(coeffs, chart_->names());
  }

  [[nodiscard]] const std::vector<Mask>& masks() const { return masks_; }
  [[nodiscard]] int degree() const { return degree_; }

  /// Coefficients in basis_masks order at an (unreduced) chart point.
  void eval(std::span<const double> p, std::span<double> out) const { prog_.run(chart_->reduce(p), {}, out); }

  [[nodiscard]] std::vector<double> eval(std::span<const double> p) const {
    std::vector<double> out(masks_.size());
    eval(p, out);
    return out;
  }

 private:
  ChartPtr chart_;
  int degree_;
  std::vector<Mask> masks_;
  expr::Program prog_;
};

/// Evaluates a k-form with numeric coefficients on k vectors:
/// sum over multi-indices of coefficient times the k x k minor.
inline double apply_form(std::span<const Mask> masks, std::span<const double> coeffs,
                         const std::vector<std::vector<double>>& vectors) {
  const std::size_t k = vectors.size();
  double total = 0.0;
  std::vector<double> m(k * k);
  for (std::size_t t = 0; t < masks.size(); ++t) {
    if (coeffs[t] == 0.0) continue;
    std::size_t col = 0;
    for (Mask rest = masks[t]; rest; rest &= rest - 1, ++col) {
      const auto i = static_cast<std::size_t>(std::countr_zero(rest));
      for (std::size_t r = 0; r < k; ++r) m[r * k + col] = vectors[r][i];
    }
    // Determinant by Gaussian elimination with partial pivoting.
    double det = 1.0;
    std::vector<double> a = m;
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t piv = c;
      for (std::size_t r = c + 1; r < k; ++r)
        if (std::abs(a[r * k + c]) > std::abs(a[piv * k + c])) piv = r;
      if (a[piv * k + c] == 0.0) {
        det = 0.0;
        break;
      }
      if (piv != c) {
        for (std::size_t j = 0; j < k; ++j) std::swap(a[c * k + j], a[piv * k + j]);
        det = -det;
      }
      det *= a[c * k + c];
      for (std::size_t r = c + 1; r < k; ++r) {
        const double f = a[r * k + c] / a[c * k + c];
        for (std::size_t j = c; j < k; ++j) a[r * k + j] -= f * a[c * k + j];
      }
    }
    total += coeffs[t] * det;
  }
  return total;
}

/// Outcome of an identity test: symbolic zero, or randomized evaluation.
struct ZeroTest {
  bool zero = false;
  bool symbolic = false;
  double max_residual = 0.0;
  Point witness;
};

/// Symbolic zero, else max |coefficient| over `n` random domain points
/// compared against `tol`.
inline ZeroTest test_zero(const Form& w, std::size_t n = 1000, double tol = 1e-10, std::uint64_t seed = 1,
                          double eps0 = 1.0 / 32.0) {
  ZeroTest out;
  if (w.structurally_zero()) {
    out.zero = true;
    out.symbolic = true;
    return out;
  }
  const CompiledForm cf(w);
  Rng rng(seed);
  std::vector<double> v(cf.masks().size());
  for (std::size_t k = 0; k < n; ++k) {
    const Point p = random_point(*w.chart(), rng, eps0);
    cf.eval(p, v);
    for (double c : v)
      if (out.witness.empty() || std::abs(c) > out.max_residual) {
        out.max_residual = std::abs(c);
        out.witness = p;
      }
  }
  out.zero = out.max_residual < tol;
  return out;
}

inline ZeroTest test_zero(const Expr& e, const ChartPtr& chart, std::size_t n = 1000, double tol = 1e-10,
                          std::uint64_t seed = 1, double eps0 = 1.0 / 32.0) {
  return test_zero(Form::scalar(chart, e), n, tol, seed, eps0);
}

}  // namespace contactlab
