#pragma once

// Grid certificates for contact, even-contact and foliation conditions.
//
// Every certificate reduces a pointwise quantity over a GridSpec by
// min or max and reports the extremal value with the point attaining it.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <span>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "contactlab/chart.hpp"
#include "contactlab/expr.hpp"
#include "contactlab/forms.hpp"

namespace contactlab {

struct Tolerances {
  double contact = 1e-3;
  double even = 1e-3;
  double transversality = 1e-4;
  double leafwise = 1e-3;
  double rank = 1e-8;
  double integrability = 1e-10;
  double tangency = 1e-9;
  double legendrian = 1e-10;
  double frame_overlap = 1e-8;
};

struct GridSpec {
  std::vector<std::size_t> counts;
  double polar_exclusion = 1.0 / 32.0;
  std::uint64_t seed = 20240601;
  std::size_t random_points = 1000;
  Tolerances tol;
  std::vector<std::vector<double>> extra;

  /// 48 per coordinate on 3-dim charts, 24 on 4-dim charts, 96 on surfaces.
  static GridSpec defaults_for(const Chart& chart) {
    GridSpec g;
    const std::size_t n = chart.dim() <= 2 ? 96 : chart.dim() == 3 ? 48 : 24;
    g.counts.assign(chart.dim(), n);
    return g;
  }

  [[nodiscard]] Sampling sampling() const { return Sampling{counts, polar_exclusion, extra}; }

  [[nodiscard]] std::string describe() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < counts.size(); ++i) os << (i ? "x" : "") << counts[i];
    os << " eps0=" << polar_exclusion;
    return os.str();
  }
};

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  /// How `value` is compared against `tolerance`: ">", "<", "<=" or "==".
  std::string relation = ">";
  double tolerance = 0.0;
  std::vector<std::pair<std::string, double>> witness;
  std::string grid;
  std::string detail;
  double wall_ms = 0.0;

  static bool holds(double value, const std::string& rel, double tol) {
    if (rel == ">") return value > tol;
    if (rel == "<") return value < tol;
    if (rel == "<=") return value <= tol;
    if (rel == "==") return value == tol;
    throw std::invalid_argument("unknown relation '" + rel + "'");
  }

  static CheckResult make(std::string name, double value, std::string rel, double tol) {
    CheckResult r;
    r.name = std::move(name);
    r.value = value;
    r.relation = std::move(rel);
    r.tolerance = tol;
    r.pass = std::isfinite(value) && holds(value, r.relation, tol);
    return r;
  }

  /// A boolean outcome reported as value 1 (holds) or 0.
  static CheckResult flag(std::string name, bool ok, std::string detail = {}) {
    CheckResult r = make(std::move(name), ok ? 1.0 : 0.0, "==", 1.0);
    r.detail = std::move(detail);
    return r;
  }

  CheckResult& at(const Chart& chart, const Point& p) {
    witness.clear();
    for (std::size_t i = 0; i < p.size() && i < chart.dim(); ++i) witness.emplace_back(chart.coord(i).name, p[i]);
    return *this;
  }
};

/// Wall-clock timer filling CheckResult::wall_ms.
template <class F>
CheckResult timed(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r = f();
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// Sample densities by chart dimension; turned into a GridSpec per chart.
struct GridConfig {
  std::size_t n2 = 96;
  std::size_t n3 = 48;
  std::size_t n4 = 24;
  double polar_exclusion = 1.0 / 32.0;
  std::uint64_t seed = 20240601;
  std::size_t random_points = 1000;
  Tolerances tol;

  [[nodiscard]] GridSpec spec_for(const Chart& chart) const {
    GridSpec g;
    const std::size_t n = chart.dim() <= 2 ? n2 : chart.dim() == 3 ? n3 : n4;
    g.counts.assign(chart.dim(), n);
    g.polar_exclusion = polar_exclusion;
    g.seed = seed;
    g.random_points = random_points;
    g.tol = tol;
    return g;
  }
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckResult> checks;

  [[nodiscard]] bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
  }
  [[nodiscard]] const CheckResult* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

struct ContactModel {
  Form alpha;
  [[nodiscard]] const ChartPtr& chart() const { return alpha.chart(); }
};

struct EvenContactModel {
  Form beta;
  std::optional<VectorField> kernel;
  [[nodiscard]] const ChartPtr& chart() const { return beta.chart(); }
};

struct FoliationForm {
  Form lambda;
  [[nodiscard]] const ChartPtr& chart() const { return lambda.chart(); }
};

/// Extremum tracker over grid points.
class Extremum {
 public:
  explicit Extremum(bool minimize) : minimize_(minimize) {}
  void offer(double v, const Point& p) {
    if (!seen_ || (minimize_ ? v < value_ : v > value_)) {
      value_ = v;
      where_ = p;
      seen_ = true;
    }
  }
  [[nodiscard]] double value() const { return seen_ ? value_ : std::numeric_limits<double>::quiet_NaN(); }
  [[nodiscard]] const Point& where() const { return where_; }
  [[nodiscard]] bool seen() const { return seen_; }

 private:
  bool minimize_;
  bool seen_ = false;
  double value_ = 0.0;
  Point where_;
};

inline double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Contact and even-contact

/// Grid minimum of the coefficient norm of a 1-form (nowhere-vanishing check).
inline CheckResult nonvanishing_certificate(const Form& w, const GridSpec& g, double tol = 1e-12) {
  const CompiledForm cf(w);
  Extremum ex(true);
  std::vector<double> v(cf.masks().size());
  for_each_grid_point(*w.chart(), g.sampling(), [&](const Point& p) {
    cf.eval(p, v);
    ex.offer(norm(v), p);
  });
  auto r = CheckResult::make("nonvanishing", ex.value(), ">", tol);
  r.grid = g.describe();
  return r.at(*w.chart(), ex.where());
}

/// min over the grid of |(alpha ^ d alpha) / vol| on a 3-dimensional chart.
inline CheckResult contact3_certificate(const ContactModel& m, const GridSpec& g) {
  const auto& chart = m.chart();
  if (chart->dim() != 3) throw std::invalid_argument("contact3_certificate: chart must be 3-dimensional");
  const Form top = wedge(m.alpha, exterior_d(m.alpha));
  const expr::Program prog(top.coeff(Mask{0b111}), chart->names());
  Extremum ex(true);
  for_each_grid_point(*chart, g.sampling(), [&](const Point& p) { ex.offer(std::abs(prog(chart->reduce(p))), p); });
  auto r = CheckResult::make("contact3", ex.value(), ">", g.tol.contact);
  r.grid = g.describe();
  return r.at(*chart, ex.where());
}

/// min over the grid of the Euclidean norm of the four coefficients of
/// the 3-form beta ^ d beta on a 4-dimensional chart.
inline CheckResult evencontact4_certificate(const EvenContactModel& m, const GridSpec& g) {
  const auto& chart = m.chart();
  if (chart->dim() != 4) throw std::invalid_argument("evencontact4_certificate: chart must be 4-dimensional");
  const CompiledForm cf(wedge(m.beta, exterior_d(m.beta)));
  Extremum ex(true);
  std::vector<double> v(cf.masks().size());
  for_each_grid_point(*chart, g.sampling(), [&](const Point& p) {
    cf.eval(p, v);
    ex.offer(norm(v), p);
  });
  auto r = CheckResult::make("evencontact4", ex.value(), ">", g.tol.even);
  r.grid = g.describe();
  return r.at(*chart, ex.where());
}

class KernelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KernelDirection {
  std::vector<double> direction;  // unit, chart coordinates
  double second_singular = 0.0;    // of dbeta restricted to ker beta
};

/// Pointwise characteristic kernel of an even-contact form: the null
/// direction of d(beta) restricted to ker(beta).
class KernelSolver {
 public:
  explicit KernelSolver(const EvenContactModel& m, double tol_rank = 1e-8)
      : chart_(m.chart()), beta_(m.beta), dbeta_(exterior_d(m.beta)), tol_rank_(tol_rank) {
    if (chart_->dim() != 4) throw std::invalid_argument("characteristic kernel needs a 4-dimensional chart");
  }

  [[nodiscard]] KernelDirection at(const Point& p) const {
    const auto b = beta_.eval(p);
    const auto db = dbeta_.eval(p);
    Eigen::Matrix<double, 1, 4> row;
    for (int i = 0; i < 4; ++i) row(i) = b[static_cast<std::size_t>(i)];
    if (row.norm() == 0.0) throw KernelError("beta vanishes at the point");
    Eigen::JacobiSVD<Eigen::Matrix<double, 1, 4>> svd(row, Eigen::ComputeFullV);
    const Eigen::Matrix<double, 4, 3> E = svd.matrixV().rightCols<3>();

    Eigen::Matrix4d omega = Eigen::Matrix4d::Zero();
    const auto& masks = dbeta_.masks();
    for (std::size_t t = 0; t < masks.size(); ++t) {
      const int i = std::countr_zero(masks[t]);
      const int j = std::countr_zero(masks[t] & (masks[t] - 1));
      omega(i, j) = db[t];
      omega(j, i) = -db[t];
    }
    const Eigen::Matrix3d M = E.transpose() * omega * E;
    Eigen::JacobiSVD<Eigen::Matrix3d> s2(M, Eigen::ComputeFullV);
    const auto sv = s2.singularValues();
    KernelDirection out;
    out.second_singular = sv(1);
    if (!(sv(1) > tol_rank_))
      throw KernelError("d(beta) restricted to ker(beta) has rank < 2 (not an even-contact point)");
    const Eigen::Vector4d w = (E * s2.matrixV().col(2)).normalized();
    out.direction = {w(0), w(1), w(2), w(3)};
    return out;
  }

 private:
  ChartPtr chart_;
  CompiledForm beta_;
  CompiledForm dbeta_;
  double tol_rank_;
};

inline KernelDirection characteristic_kernel(const EvenContactModel& m, const Point& p, double tol_rank = 1e-8) {
  return KernelSolver(m, tol_rank).at(p);
}

/// |sin| of the angle between two nonzero vectors, via the residual of
/// projecting a/|a| onto the line of b (accurate for nearly parallel input).
inline double sin_angle(std::span<const double> a, std::span<const double> b) {
  const double na = norm(a);
  const double nb = norm(b);
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += (a[i] / na) * (b[i] / nb);
  double res = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] / na - dot * b[i] / nb;
    res += d * d;
  }
  return std::min(1.0, std::sqrt(res));
}

// ---------------------------------------------------------------------------
// Foliations

/// lambda ^ d lambda must vanish: symbolic zero or randomized evaluation.
inline CheckResult integrability_certificate(const FoliationForm& f, const GridSpec& g) {
  const Form top = wedge(f.lambda, exterior_d(f.lambda));
  const ZeroTest z = test_zero(top, g.random_points, g.tol.integrability, g.seed, g.polar_exclusion);
  auto r = CheckResult::make("integrability", z.max_residual, "<", g.tol.integrability);
  r.grid = z.symbolic ? "symbolic" : std::to_string(g.random_points) + " random points";
  if (!z.symbolic) r.at(*f.chart(), z.witness);
  return r;
}

/// min over the grid of |det(F, L)| / (|F| |L|) for two line fields on a surface.
inline CheckResult transversality_certificate(const LineField& F, const LineField& L, const GridSpec& g) {
  require_same_chart(F.chart(), L.chart(), "transversality_certificate");
  const auto& chart = F.chart();
  if (chart->dim() != 2) throw std::invalid_argument("transversality_certificate: chart must be 2-dimensional");
  std::vector<Expr> comps{F[0], F[1], L[0], L[1]};
  const expr::Program prog(comps, chart->names());
  Extremum ex(true);
  std::array<double, 4> v{};
  for_each_grid_point(*chart, g.sampling(), [&](const Point& p) {
    prog.run(chart->reduce(p), {}, v);
    const double nf = std::hypot(v[0], v[1]);
    const double nl = std::hypot(v[2], v[3]);
    if (nf == 0.0 || nl == 0.0) throw std::domain_error("transversality_certificate: zero vector at a grid point");
    ex.offer(std::abs(v[0] * v[3] - v[1] * v[2]) / (nf * nl), p);
  });
  auto r = CheckResult::make("transversality", ex.value(), ">", g.tol.transversality);
  r.grid = g.describe();
  return r.at(*chart, ex.where());
}

class ImprintError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Orthonormal basis of ker beta(p) and ker lambda(p).
inline std::array<std::vector<double>, 2> imprint_plane(const EvenContactModel& m, const FoliationForm& f,
                                                        const Point& p) {
  require_same_chart(m.chart(), f.chart(), "imprint_plane");
  const std::size_t n = m.chart()->dim();
  if (n != 4) throw std::invalid_argument("imprint_plane needs a 4-dimensional chart");
  const auto b = CompiledForm(m.beta).eval(p);
  const auto l = CompiledForm(f.lambda).eval(p);
  Eigen::Matrix<double, 2, 4> A;
  for (int i = 0; i < 4; ++i) {
    A(0, i) = b[static_cast<std::size_t>(i)];
    A(1, i) = l[static_cast<std::size_t>(i)];
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 2, 4>> svd(A, Eigen::ComputeFullV);
  const auto sv = svd.singularValues();
  if (!(sv(0) > 0.0)) throw ImprintError("both forms vanish at the point");
  if (!(sv(1) > 1e-12 * sv(0)))
    throw ImprintError("coincident kernels: ker beta = ker lambda, the kernel of E is tangent to the foliation");
  const auto V = svd.matrixV();
  std::array<std::vector<double>, 2> out;
  for (int c = 0; c < 2; ++c) out[static_cast<std::size_t>(c)] = {V(0, 2 + c), V(1, 2 + c), V(2, 2 + c), V(3, 2 + c)};
  return out;
}

/// Orthonormal frame of ker(lambda) obtained from an orthonormal ambient
/// basis: the basis vector most aligned with lambda is dropped, the other
/// ones are projected onto ker(lambda) and orthonormalised in order.
inline std::vector<std::vector<double>> kernel_frame(std::span<const double> lambda,
                                                     const std::vector<std::vector<double>>& basis) {
  const std::size_t n = lambda.size();
  const double ln = norm(lambda);
  if (ln == 0.0) throw std::domain_error("kernel_frame: lambda vanishes");
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = lambda[i] / ln;
  std::size_t drop = 0;
  double best = -1.0;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += basis[k][i] * u[i];
    if (std::abs(c) > best) {
      best = std::abs(c);
      drop = k;
    }
  }
  std::vector<std::vector<double>> frame;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    if (k == drop) continue;
    std::vector<double> v = basis[k];
    for (int pass = 0; pass < 2; ++pass) {
      double c = 0.0;
      for (std::size_t i = 0; i < n; ++i) c += v[i] * u[i];
      for (std::size_t i = 0; i < n; ++i) v[i] -= c * u[i];
      for (const auto& e : frame) {
        double d = 0.0;
        for (std::size_t i = 0; i < n; ++i) d += v[i] * e[i];
        for (std::size_t i = 0; i < n; ++i) v[i] -= d * e[i];
      }
    }
    const double vn = norm(v);
    if (vn == 0.0) throw std::domain_error("kernel_frame: degenerate frame");
    for (double& x : v) x /= vn;
    frame.push_back(std::move(v));
  }
  return frame;
}

/// The grid minimum of |(beta ^ d beta)(e1, e2, e3)| over orthonormal
/// frames of ker(lambda): the leafwise contact condition for the
/// structure imprinted by ker(beta) on the foliation ker(lambda).
///
/// On charts with a disc constraint the frame is built from the Cartesian
/// basis for r < 1/4 and from the polar-adapted basis (e_r, e_theta, ...)
/// for r > 1/8; on the overlap both certificates must agree.
inline CheckResult leafwise_contact_certificate(const EvenContactModel& m, const FoliationForm& f,
                                                const GridSpec& g) {
  require_same_chart(m.chart(), f.chart(), "leafwise_contact_certificate");
  const auto& chart = m.chart();
  const std::size_t n = chart->dim();
  if (n != 4) throw std::invalid_argument("leafwise_contact_certificate: chart must be 4-dimensional");
  const CompiledForm top(wedge(m.beta, exterior_d(m.beta)));
  const CompiledForm beta(m.beta);
  const CompiledForm lambda(f.lambda);
  const auto& disc = chart->disc();

  std::vector<std::vector<double>> cartesian(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) cartesian[i][i] = 1.0;

  Extremum ex(true);
  Extremum even(true);
  Extremum transverse(true);
  double overlap_gap = 0.0;
  Point overlap_where;
  std::vector<double> tv(top.masks().size()), bv(n), lv(n);
  for_each_grid_point(*chart, g.sampling(), [&](const Point& p) {
    top.eval(p, tv);
    beta.eval(p, bv);
    lambda.eval(p, lv);
    even.offer(norm(tv), p);
    // Kernels are transverse iff beta and lambda are not parallel.
    const double nb = norm(bv);
    const double nl = norm(lv);
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += bv[i] * lv[i];
    transverse.offer(nb * nl == 0.0 ? 0.0 : std::sqrt(std::max(0.0, 1.0 - (dot / (nb * nl)) * (dot / (nb * nl)))), p);

    double value = 0.0;
    if (disc) {
      const double x = p[disc->first];
      const double y = p[disc->second];
      const double r = std::hypot(x, y) / disc->radius;
      std::optional<double> vc;
      std::optional<double> vp;
      if (r < 0.25) vc = std::abs(apply_form(top.masks(), tv, kernel_frame(lv, cartesian)));
      if (r > 0.125) {
        const double c = x / std::hypot(x, y);
        const double s = y / std::hypot(x, y);
        auto polar = cartesian;
        polar[disc->first] = std::vector<double>(n, 0.0);
        polar[disc->second] = std::vector<double>(n, 0.0);
        polar[disc->first][disc->first] = c;
        polar[disc->first][disc->second] = s;
        polar[disc->second][disc->first] = -s;
        polar[disc->second][disc->second] = c;
        vp = std::abs(apply_form(top.masks(), tv, kernel_frame(lv, polar)));
      }
      if (vc && vp && std::abs(*vc - *vp) > overlap_gap) {
        overlap_gap = std::abs(*vc - *vp);
        overlap_where = p;
      }
      value = vc ? *vc : *vp;
    } else {
      value = std::abs(apply_form(top.masks(), tv, kernel_frame(lv, cartesian)));
    }
    ex.offer(value, p);
  });

  if (!(even.value() > g.tol.even)) {
    auto r = CheckResult::make("leafwise_contact", even.value(), ">", g.tol.even);
    r.pass = false;
    r.detail = "upstream failure: beta is not even-contact on the grid (evencontact4)";
    r.grid = g.describe();
    return r.at(*chart, even.where());
  }
  if (!(transverse.value() > 1e-12)) {
    auto r = CheckResult::make("leafwise_contact", 0.0, ">", g.tol.leafwise);
    r.pass = false;
    r.detail = "upstream failure: ker beta coincides with the tangent space of the foliation";
    r.grid = g.describe();
    return r.at(*chart, transverse.where());
  }
  auto r = CheckResult::make("leafwise_contact", ex.value(), ">", g.tol.leafwise);
  r.grid = g.describe();
  if (disc) {
    std::ostringstream os;
    os.precision(3);
    os << "frame overlap gap " << overlap_gap;
    r.detail = os.str();
    if (!(overlap_gap < g.tol.frame_overlap)) {
      r.pass = false;
      r.detail += " exceeds tolerance";
      return r.at(*chart, overlap_where);
    }
  }
  return r.at(*chart, ex.where());
}

}  // namespace contactlab
