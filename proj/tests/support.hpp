#pragma once

// Test-side helpers: random forms and fields, and numeric oracles that do
// not go through the library's own operators.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "contactlab/forms.hpp"

namespace testkit {

using contactlab::ChartPtr;
using contactlab::Form;
using contactlab::Mask;
using contactlab::Point;
using contactlab::Rng;
using contactlab::VectorField;
using contactlab::expr::Expr;

/// Random coefficient: a short sum of products of one factor per
/// coordinate (power or exponential on intervals, sin/cos on circles).
inline Expr random_coefficient(const ChartPtr& chart, Rng& rng) {
  using namespace contactlab::expr;
  Expr out(0.0);
  const int terms = 1 + static_cast<int>(rng.uniform() * 3);
  for (int k = 0; k < terms; ++k) {
    Expr t(std::round(rng.uniform(-3, 3) * 4) / 4 + 0.5);
    for (std::size_t i = 0; i < chart->dim(); ++i) {
      const auto& c = chart->coord(i);
      const Expr v = var(c.name);
      const int pick = static_cast<int>(rng.uniform() * 4);
      if (c.periodic) {
        const double freq = 1 + static_cast<int>(rng.uniform() * 3);
        if (pick == 1) t = t * sin(freq * v);
        if (pick == 2) t = t * cos(freq * v);
      } else {
        if (pick == 1) t = t * v;
        if (pick == 2) t = t * v * v;
        if (pick == 3) t = t * exp(0.5 * v);
      }
    }
    out = out + t;
  }
  return out;
}

inline Form random_form(const ChartPtr& chart, int degree, Rng& rng) {
  Form w(chart, degree);
  for (Mask m : contactlab::basis_masks(chart->dim(), degree))
    if (rng.uniform() < 0.75) w.add_term(m, random_coefficient(chart, rng));
  return w;
}

inline VectorField random_field(const ChartPtr& chart, Rng& rng) {
  std::vector<Expr> c;
  for (std::size_t i = 0; i < chart->dim(); ++i) c.push_back(random_coefficient(chart, rng));
  return VectorField(chart, c);
}

/// Sign of the permutation sorting `idx`, 0 on a repeated index.
inline int permutation_sign(std::vector<int> idx) {
  int s = 1;
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = i + 1; j < idx.size(); ++j) {
      if (idx[i] == idx[j]) return 0;
      if (idx[i] > idx[j]) s = -s;
    }
  return s;
}

inline Mask mask_of(const std::vector<int>& idx) {
  Mask m = 0;
  for (int i : idx) m |= Mask{1} << i;
  return m;
}

inline std::vector<int> indices_of(Mask m) {
  std::vector<int> out;
  for (int i = 0; m; ++i, m >>= 1)
    if (m & 1) out.push_back(i);
  return out;
}

/// Numeric coefficient table of a form at a point: value for each basis mask.
struct FormValues {
  std::vector<Mask> masks;
  std::vector<double> values;
  [[nodiscard]] double at(Mask m) const {
    for (std::size_t i = 0; i < masks.size(); ++i)
      if (masks[i] == m) return values[i];
    return 0.0;
  }
  /// omega(e_{i_1}, ..., e_{i_k}) for an arbitrary index list.
  [[nodiscard]] double on(const std::vector<int>& idx) const {
    const int s = permutation_sign(idx);
    return s == 0 ? 0.0 : s * at(mask_of(idx));
  }
};

inline FormValues values_at(const Form& w, const Point& p) {
  const contactlab::CompiledForm cf(w);
  FormValues out{cf.masks(), cf.eval(p)};
  return out;
}

inline double eval_at(const Expr& e, const ChartPtr& chart, const Point& p) {
  const contactlab::expr::Program prog(e, chart->names());
  return prog(p);
}

/// Coordinate formula for the Lie derivative, from partial derivatives:
/// (L_v w)_I = v^j d_j w_I + sum_m w(I with i_m -> j) d_{i_m} v^j.
class LieOracle {
 public:
  LieOracle(const VectorField& v, const Form& w)
      : chart_(w.chart()), n_(chart_->dim()), masks_(contactlab::basis_masks(n_, w.degree())) {
    const auto names = chart_->names();
    std::vector<Expr> outs;
    for (std::size_t j = 0; j < n_; ++j) outs.push_back(v[j]);
    for (std::size_t j = 0; j < n_; ++j)
      for (std::size_t i = 0; i < n_; ++i) outs.push_back(contactlab::expr::diff(v[j], names[i]));
    for (Mask m : masks_) outs.push_back(w.coeff(m));
    for (Mask m : masks_)
      for (std::size_t j = 0; j < n_; ++j) outs.push_back(contactlab::expr::diff(w.coeff(m), names[j]));
    prog_ = contactlab::expr::Program(outs, names);
    buf_.resize(outs.size());
  }

  FormValues operator()(const Point& p) {
    prog_.run(chart_->reduce(p), {}, buf_);
    const double* vv = buf_.data();
    const double* dv = vv + n_;               // dv[j * n + i] = d_i v^j
    const double* wc = dv + n_ * n_;          // coefficients
    const double* dw = wc + masks_.size();    // dw[k * n + j] = d_j w_k
    FormValues wv{masks_, std::vector<double>(wc, wc + masks_.size())};
    FormValues out;
    out.masks = masks_;
    for (std::size_t k = 0; k < masks_.size(); ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < n_; ++j) s += vv[j] * dw[k * n_ + j];
      const auto idx = indices_of(masks_[k]);
      for (std::size_t m = 0; m < idx.size(); ++m)
        for (std::size_t j = 0; j < n_; ++j) {
          auto rep = idx;
          rep[m] = static_cast<int>(j);
          s += wv.on(rep) * dv[j * n_ + static_cast<std::size_t>(idx[m])];
        }
      out.values.push_back(s);
    }
    return out;
  }

 private:
  ChartPtr chart_;
  std::size_t n_;
  std::vector<Mask> masks_;
  contactlab::expr::Program prog_;
  std::vector<double> buf_;
};

inline double max_abs_difference(const FormValues& a, const FormValues& b) {
  double worst = 0.0;
  for (Mask m : a.masks) worst = std::max(worst, std::abs(a.at(m) - b.at(m)));
  for (Mask m : b.masks) worst = std::max(worst, std::abs(a.at(m) - b.at(m)));
  return worst;
}

/// Worst residuals of d o d = 0, Cartan (against LieOracle) and Leibniz.
struct LawResiduals {
  double dd = 0.0;
  double cartan = 0.0;
  double leibniz = 0.0;
  std::size_t forms = 0;
  std::size_t points = 0;
};

inline LawResiduals calculus_laws(std::size_t n_forms, std::size_t n_points, std::uint64_t seed) {
  LawResiduals out;
  Rng rng(seed);
  const ChartPtr charts[] = {contactlab::charts::m_leg(), contactlab::charts::solid_torus()};
  for (std::size_t f = 0; f < n_forms; ++f) {
    const ChartPtr& chart = charts[f % 2];
    const int n = static_cast<int>(chart->dim());
    // Degrees 1 and 2 on M_leg, 1 on the solid torus; deg w + deg eta < dim.
    const int k = n == 4 ? 1 + static_cast<int>(f / 2 % 2) : 1;
    const Form w = random_form(chart, k, rng);
    const Form eta = random_form(chart, n - k - 1 >= 2 && f % 3 == 0 ? 2 : 1, rng);
    const VectorField v = random_field(chart, rng);

    const Form dd = contactlab::exterior_d(contactlab::exterior_d(w));
    const Form lhs = contactlab::exterior_d(contactlab::wedge(w, eta));
    const Form sign = (k % 2 ? -1.0 : 1.0) * contactlab::wedge(w, contactlab::exterior_d(eta));
    const Form rhs = contactlab::wedge(contactlab::exterior_d(w), eta) + sign;
    const contactlab::CompiledForm cdd(dd);
    const contactlab::CompiledForm cl(lhs);
    const contactlab::CompiledForm cr(rhs);
    const contactlab::CompiledForm lie(contactlab::lie_derivative(v, w));
    LieOracle oracle(v, w);
    for (const auto& p : contactlab::random_points(*chart, n_points, seed + 1000 * f)) {
      for (double c : cdd.eval(p)) out.dd = std::max(out.dd, std::abs(c));
      const auto a = cl.eval(p);
      const auto b = cr.eval(p);
      for (std::size_t i = 0; i < a.size(); ++i) out.leibniz = std::max(out.leibniz, std::abs(a[i] - b[i]));
      const FormValues got{lie.masks(), lie.eval(p)};
      out.cartan = std::max(out.cartan, max_abs_difference(got, oracle(p)));
    }
    ++out.forms;
  }
  out.points = n_points;
  return out;
}

/// Classical RK4 with a fixed step; the integrator used by test oracles.
template <std::size_t N>
std::array<double, N> rk4(const std::function<std::array<double, N>(const std::array<double, N>&)>& f,
                          std::array<double, N> x, double T, std::size_t steps) {
  const double h = T / static_cast<double>(steps);
  auto axpy = [](const std::array<double, N>& a, double s, const std::array<double, N>& b) {
    std::array<double, N> r{};
    for (std::size_t i = 0; i < N; ++i) r[i] = a[i] + s * b[i];
    return r;
  };
  for (std::size_t k = 0; k < steps; ++k) {
    const auto k1 = f(x);
    const auto k2 = f(axpy(x, h / 2, k1));
    const auto k3 = f(axpy(x, h / 2, k2));
    const auto k4 = f(axpy(x, h, k3));
    for (std::size_t i = 0; i < N; ++i) x[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  return x;
}

}  // namespace testkit
