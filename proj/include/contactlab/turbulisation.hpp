#pragma once

// The legendrian neighbourhood model, the compression profile and its
// contact lift, the even-contact structure on M_leg, the line-field
// homotopy on the annulus, and the certification suite tying them together.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "contactlab/chart.hpp"
#include "contactlab/expr.hpp"
#include "contactlab/forms.hpp"
#include "contactlab/ode.hpp"
#include "contactlab/structures.hpp"

namespace contactlab::turbulisation {

using expr::Expr;
using std::numbers::pi;

struct ProfileParams {
  double amplitude = 1.0;
  double support_lo = 0.5;
  double support_hi = 2.0 / 3.0;
  double r_star = 7.0 / 12.0;
};

/// h = -c B(r) supported on [lo, hi], and the tabulated time-1 flow f.
class CompressionProfile {
 public:
  static constexpr std::size_t kTableSize = 2048;

  explicit CompressionProfile(ProfileParams p = {}) : p_(validated(p)) {
    const ode::RadialFlow& flow = flow_;
    r_.resize(kTableSize);
    d_.resize(kTableSize);
    f_.resize(kTableSize);
    for (std::size_t i = 0; i < kTableSize; ++i) {
      r_[i] = static_cast<double>(i) / static_cast<double>(kTableSize - 1);
      d_[i] = in_open_support(r_[i]) ? flow(r_[i]).D : 0.0;
      f_[i] = r_[i] + d_[i];
    }
  }

  [[nodiscard]] const ProfileParams& params() const { return p_; }
  [[nodiscard]] double amplitude() const { return p_.amplitude; }
  [[nodiscard]] double lo() const { return p_.support_lo; }
  [[nodiscard]] double hi() const { return p_.support_hi; }
  [[nodiscard]] double r_star() const { return p_.r_star; }
  [[nodiscard]] double midpoint() const { return 0.5 * (p_.support_lo + p_.support_hi); }
  [[nodiscard]] double half_width() const { return 0.5 * (p_.support_hi - p_.support_lo); }
  [[nodiscard]] bool in_open_support(double r) const { return r > p_.support_lo && r < p_.support_hi; }

  /// h as an expression of the radius expression `r`.
  [[nodiscard]] Expr h(const Expr& r) const { return -p_.amplitude * expr::bump(r, midpoint(), half_width()); }
  [[nodiscard]] Expr h() const { return h(expr::var("r")); }
  [[nodiscard]] double h_value(double r) const {
    return -p_.amplitude * expr::bump(Expr(r), midpoint(), half_width()).value();
  }

  /// The angle profile a_s = (1 - s)(pi/2) B_{r_*, w}(r), and cos, sin of it.
  /// cos a_s is written sin((pi/2)(1 - (1 - s)B)) so it is exactly 0 where a_0 = pi/2.
  [[nodiscard]] Expr angle(double s, const Expr& r) const {
    return (1.0 - s) * (pi / 2) * expr::bump(r, p_.r_star, half_width());
  }
  [[nodiscard]] Expr cos_angle(double s, const Expr& r) const {
    return expr::sin((pi / 2) * (1.0 - (1.0 - s) * expr::bump(r, p_.r_star, half_width())));
  }
  [[nodiscard]] Expr sin_angle(double s, const Expr& r) const { return expr::sin(angle(s, r)); }

  [[nodiscard]] const std::vector<double>& table_r() const { return r_; }
  [[nodiscard]] const std::vector<double>& table_f() const { return f_; }
  /// f - r at the table radii, integrated directly.
  [[nodiscard]] const std::vector<double>& table_displacement() const { return d_; }

  /// f(r) - r; exactly 0 off the open support. Off the table this integrates
  /// the flow: near the outer edge of the support the displacement rises within
  /// one table cell (dR/dr0 reaches ~200 at c = 1) and no interpolant of the
  /// 2048 values resolves it.
  [[nodiscard]] double displacement(double r) const { return in_open_support(r) ? flow_(r).D : 0.0; }
  [[nodiscard]] double f(double r) const { return r + displacement(r); }

  /// Time-T flow of h d/dr by direct integration.
  [[nodiscard]] ode::RadialFlow::Result flow(double r, double time = 1.0) const { return flow_(r, time); }

 private:
  static ProfileParams validated(const ProfileParams& p) {
    if (!(p.amplitude > 0.0)) throw std::invalid_argument("compression profile: amplitude must be positive");
    if (!(p.support_lo > 0.0) || !(p.support_hi < 1.0))
      throw std::invalid_argument("compression profile: support must lie strictly inside (0, 1)");
    if (!(p.support_lo < p.support_hi)) throw std::invalid_argument("compression profile: empty support");
    if (!(p.r_star > 0.0 && p.r_star < 1.0)) throw std::invalid_argument("compression profile: r_star outside (0, 1)");
    return p;
  }

  ProfileParams p_;
  ode::RadialFlow flow_{h()};
  std::vector<double> r_, d_, f_;
};

inline CompressionProfile compression_profile(double c = 1.0, std::pair<double, double> support = {0.5, 2.0 / 3.0}) {
  ProfileParams p;
  p.amplitude = c;
  p.support_lo = support.first;
  p.support_hi = support.second;
  p.r_star = 0.5 * (support.first + support.second);
  return CompressionProfile(p);
}

// ---------------------------------------------------------------------------
// Legendrian model and contact elements

namespace detail {
inline Expr X() { return expr::var("x"); }
inline Expr Y() { return expr::var("y"); }
inline Expr Z() { return expr::var("z"); }
inline Expr R() { return expr::sqrt(X() * X() + Y() * Y()); }
}  // namespace detail

/// cos z dx + sin z dy on a chart with coordinates x, y, z.
inline Form alpha_leg(const ChartPtr& chart) {
  using namespace detail;
  return Form::from(chart, {{{"x"}, expr::cos(Z())}, {{"y"}, expr::sin(Z())}});
}

inline ContactModel model_contact_form() { return ContactModel{alpha_leg(charts::solid_torus())}; }

/// C(phi) for a disc map phi = (phi_x, phi_y) in the variables x, y:
/// (x, y, z) -> (phi(x, y), z') with (cos z', sin z') the direction of
/// (Dphi)^{-T}(cos z, sin z).
inline CoordinateMap contact_element_action(const Expr& phi_x, const Expr& phi_y, std::size_t samples = 256,
                                            std::uint64_t seed = 11) {
  using namespace detail;
  const auto chart = charts::solid_torus();
  const Expr a = expr::diff(phi_x, "x");
  const Expr b = expr::diff(phi_x, "y");
  const Expr c = expr::diff(phi_y, "x");
  const Expr d = expr::diff(phi_y, "y");
  const Expr det = a * d - b * c;
  const expr::Program det_prog(det, chart->names());
  for (const auto& p : random_points(*chart, samples, seed)) {
    const double v = det_prog(p);
    if (!(v > 0.0)) {
      std::ostringstream os;
      os << "contact_element_action: Dphi singular or orientation reversing at (" << p[0] << ", " << p[1] << ")";
      throw std::domain_error(os.str());
    }
  }
  const Expr zz = expr::atan2(-b * expr::cos(Z()) + a * expr::sin(Z()), d * expr::cos(Z()) - c * expr::sin(Z()));
  return CoordinateMap(chart, chart, {phi_x, phi_y, zz});
}

/// Rotation of the disc by psi, as an expression pair.
inline std::pair<Expr, Expr> rotation(double psi) {
  using namespace detail;
  return {std::cos(psi) * X() - std::sin(psi) * Y(), std::sin(psi) * X() + std::cos(psi) * Y()};
}

/// C(phi) for phi the numeric time-T flow of h d/dr.
class NumericContactElementAction {
 public:
  explicit NumericContactElementAction(const CompressionProfile& p, double time = 1.0) : flow_(p.h()), time_(time) {
    const std::array<Expr, 2> outs{p.h(), expr::diff(p.h(), "r")};
    lift_ = expr::Program(outs, {"r"});
  }

  /// Row-major Jacobian of the disc map, from the variational equation:
  /// Dphi = J e_r e_r^T + (R/r) e_theta e_theta^T.
  [[nodiscard]] std::array<double, 4> jacobian(double x, double y) const {
    const double r = std::hypot(x, y);
    const auto res = flow_(r, time_);
    const double tang = r > 0.0 ? res.R / r : res.J;
    const double c = r > 0.0 ? x / r : 1.0;
    const double s = r > 0.0 ? y / r : 0.0;
    const double b = (res.J - tang) * c * s;
    return {res.J * c * c + tang * s * s, b, b, res.J * s * s + tang * c * c};
  }

  /// (x', y', z') with (cos z', sin z') along (Dphi)^{-T}(cos z, sin z).
  [[nodiscard]] Point operator()(double x, double y, double z) const {
    const double r = std::hypot(x, y);
    const auto res = flow_(r, time_);
    const double tang = r > 0.0 ? res.R / r : res.J;
    const auto [a, b, c, d] = jacobian(x, y);
    return {tang * x, tang * y, std::atan2(-b * std::cos(z) + a * std::sin(z), d * std::cos(z) - c * std::sin(z))};
  }

  /// z' obtained instead by integrating the contact lift
  /// r' = h, (z - theta)' = (1/2)(h' - h/r) sin(2(z - theta)); theta is constant.
  [[nodiscard]] double lift_angle(double x, double y, double z) const {
    const double r0 = std::hypot(x, y);
    const double th = std::atan2(y, x);
    using State = std::array<double, 2>;
    State st{0.0, z - th};
    auto rhs = [&](const State& q, State& dq, double) {
      const double r = r0 + q[0];
      std::array<double, 2> v{};
      lift_.run(std::array<double, 1>{r}, {}, v);
      dq[0] = v[0];
      dq[1] = v[0] == 0.0 && v[1] == 0.0 ? 0.0 : 0.5 * (v[1] - v[0] / r) * std::sin(2.0 * q[1]);
    };
    ode::odeint::integrate_adaptive(
        ode::odeint::make_controlled<ode::odeint::runge_kutta_dopri5<State>>(ode::kAbsTol, ode::kRelTol), rhs, st,
        0.0, time_, 1e-3);
    return th + st[1];
  }

 private:
  ode::RadialFlow flow_;
  double time_;
  expr::Program lift_;
};

/// |C(phi)^* alpha ^ alpha| / |C(phi)^* alpha| at (x, y, z). The image
/// angle comes from the flow of the contact lift and the pullback from the
/// variational Jacobian, so the two constructions are checked against
/// each other.
inline double contact_element_residual(const NumericContactElementAction& act, double x, double y, double z) {
  const auto [a, b, c, d] = act.jacobian(x, y);
  const double zz = act.lift_angle(x, y, z);
  const double p1 = a * std::cos(zz) + c * std::sin(zz);
  const double p2 = b * std::cos(zz) + d * std::sin(zz);
  return std::abs(p1 * std::sin(z) - p2 * std::cos(z)) / std::hypot(p1, p2);
}

// ---------------------------------------------------------------------------
// Contact lift and even-contact structure

struct ContactLift {
  VectorField cartesian;  // on solid_torus
  VectorField polar;      // on solid_torus_polar
};

/// X = h d/dr + (1/2)(h' - h/r) sin(2(z - theta)) d/dz.
inline ContactLift contact_lift(const CompressionProfile& p) {
  using namespace detail;
  const Expr r = R();
  const Expr h = p.h(r);
  const Expr hp = expr::substitute(expr::diff(p.h(), "r"), {{"r", r}});
  const Expr sin_u = (X() * expr::sin(Z()) - Y() * expr::cos(Z())) / r;  // sin(z - theta)
  const Expr cos_u = (X() * expr::cos(Z()) + Y() * expr::sin(Z())) / r;  // cos(z - theta)
  const Expr k = hp - h / r;
  VectorField cart(charts::solid_torus(), {h * X() / r, h * Y() / r, k * sin_u * cos_u});

  const Expr pr = expr::var("r");
  const Expr u = expr::var("z") - expr::var("theta");
  const Expr ph = p.h();
  VectorField pol(charts::solid_torus_polar(),
                  {ph, Expr(0.0), 0.5 * (expr::diff(ph, "r") - ph / pr) * expr::sin(2.0 * u)});
  return ContactLift{std::move(cart), std::move(pol)};
}

/// Closed-form z-velocity of the lift at polar (r, u = z - theta).
inline double lift_angular_velocity(const CompressionProfile& p, double r, double u) {
  const Expr hp = expr::diff(p.h(), "r");
  const double hpv = expr::Program(hp, {"r"})(std::array<double, 1>{r});
  const double h = p.h_value(r);
  return 0.5 * (hpv - h / r) * std::sin(2.0 * u);
}

/// Finite-difference angular velocity of the conormal (cos u, sin u) under
/// the linearized time-(+-eps) flow, central differences.
inline double lift_angular_velocity_fd(const CompressionProfile& p, double r, double u, double eps = 1e-5) {
  const ode::RadialFlow flow(p.h());
  auto turn = [&](double time) {
    const auto res = flow(r, time);
    const double cross = std::sin(u) * std::cos(u) * (res.j / res.J - res.D / res.R);
    const double dot = std::cos(u) * std::cos(u) / res.J + std::sin(u) * std::sin(u) * r / res.R;
    return std::atan2(cross, dot);
  };
  return (turn(eps) - turn(-eps)) / (2.0 * eps);
}

/// Extends a form on solid_torus to M_leg (t-independent).
inline Form to_m_leg(const Form& w) {
  const auto src = charts::solid_torus();
  require_same_chart(w.chart(), src, "to_m_leg");
  Form out(charts::m_leg(), w.degree());
  for (const auto& [m, c] : w.terms()) out.add_term(m, c);  // x, y, z keep their indices
  return out;
}

inline VectorField to_m_leg(const VectorField& v) {
  require_same_chart(v.chart(), charts::solid_torus(), "to_m_leg");
  return VectorField(charts::m_leg(), {v[0], v[1], v[2], Expr(0.0)});
}

/// beta_leg = alpha_leg - alpha_leg(X) dt on M_leg, with kernel d/dt + X.
inline EvenContactModel even_contact_form(const CompressionProfile& p) {
  using namespace detail;
  const auto chart = charts::m_leg();
  const Expr r = R();
  const Expr a_of_x = p.h(r) * (X() * expr::cos(Z()) + Y() * expr::sin(Z())) / r;
  const Form beta = alpha_leg(chart) - a_of_x * Form::d_coordinate(chart, "t");
  const VectorField w = VectorField::coordinate(chart, "t") + to_m_leg(contact_lift(p).cartesian);
  return EvenContactModel{beta, w};
}

/// lambda_s = cos a_s dt - sin a_s dr on M_leg, dr = (x dx + y dy)/r.
inline FoliationForm foliation_family(double s, const CompressionProfile& p) {
  using namespace detail;
  if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("foliation_family: s outside [0, 1]");
  const auto chart = charts::m_leg();
  const Expr r = R();
  const Expr sa = p.sin_angle(s, r);
  const Form dr = Form::from(chart, {{{"x"}, X() / r}, {{"y"}, Y() / r}});
  return FoliationForm{p.cos_angle(s, r) * Form::d_coordinate(chart, "t") - sa * dr};
}

/// F_s = cos a_s d/dr + sin a_s d/dt and L = d/dt + h d/dr on the annulus.
inline std::pair<LineField, LineField> base_line_fields(double s, const CompressionProfile& p) {
  if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("base_line_fields: s outside [0, 1]");
  const auto chart = charts::annulus();
  const Expr r = expr::var("r");
  LineField F(chart, {p.cos_angle(s, r), p.sin_angle(s, r)});
  LineField L(chart, {p.h(r), Expr(1.0)});
  return {std::move(F), std::move(L)};
}

// ---------------------------------------------------------------------------
// Orbits of F_0

struct ReebOrbit {
  std::vector<double> tau;
  std::vector<double> r;
  std::vector<double> t;
  bool exited = false;     // reached r = 1 (or r = 0)
  double exit_time = 0.0;
  bool strictly_increasing = false;
  bool constant = false;

  [[nodiscard]] double final_r() const { return r.back(); }
};

/// Integrates (r', t') = (cos a_0(r), sin a_0(r)) from (r0, 0) up to time T.
inline ReebOrbit reeb_orbit_asymptotics(double r0, double T, const CompressionProfile& p, double sample_dt = 0.05) {
  if (!(r0 >= 0.0 && r0 <= 1.0)) throw std::invalid_argument("reeb_orbit_asymptotics: r0 outside [0, 1]");
  if (!(T > 0.0)) throw std::invalid_argument("reeb_orbit_asymptotics: T must be positive");
  const Expr r = expr::var("r");
  const std::array<Expr, 2> rhs{p.cos_angle(0.0, r), p.sin_angle(0.0, r)};
  const expr::Program prog(rhs, {"r"});
  auto F = [&](const std::array<double, 2>& x, std::array<double, 2>& dx) {
    const std::array<double, 1> rr{std::clamp(x[0], 0.0, 1.0)};
    prog.run(rr, {}, dx);
  };
  auto stop = [](const std::array<double, 2>& x) { return std::max(x[0] - 1.0, -x[0]); };
  const auto traj = ode::integrate_planar(F, {r0, 0.0}, T, sample_dt, stop);
  ReebOrbit out;
  out.tau = traj.tau;
  for (const auto& s : traj.state) {
    out.r.push_back(s[0]);
    out.t.push_back(s[1]);
  }
  out.exited = traj.stopped;
  out.exit_time = traj.stop_time;
  out.strictly_increasing = true;
  out.constant = true;
  for (std::size_t i = 1; i < out.r.size(); ++i) {
    if (!(out.r[i] > out.r[i - 1])) out.strictly_increasing = false;
    if (out.r[i] != out.r[0]) out.constant = false;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Suite

struct SuiteConfig {
  ProfileParams profile;
  std::vector<double> s_values = default_s_values();
  GridConfig grid;

  static std::vector<double> default_s_values() {
    std::vector<double> s;
    for (int k = 0; k <= 10; ++k) s.push_back(k / 10.0);
    return s;
  }
};

inline std::string s_label(double s) {
  std::ostringstream os;
  os << "[s=" << s << "]";
  return os.str();
}

namespace detail {

inline CheckResult max_check(std::string name, double value, double tol, std::string grid) {
  auto r = CheckResult::make(std::move(name), value, "<", tol);
  r.grid = std::move(grid);
  return r;
}

/// Random points of the solid torus with r uniform on [lo, hi].
inline std::vector<Point> annular_points(double lo, double hi, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Point> out;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = rng.uniform(lo, hi);
    const double th = rng.uniform(0.0, 2 * pi);
    const double z = rng.uniform(0.0, 2 * pi);
    out.push_back({r * std::cos(th), r * std::sin(th), z});
  }
  return out;
}

}  // namespace detail

inline std::vector<CheckResult> compression_checks(const CompressionProfile& p) {
  std::vector<CheckResult> out;
  const auto& r = p.table_r();
  const auto& f = p.table_f();
  const auto& d = p.table_displacement();
  const std::string grid = std::to_string(r.size()) + " radii";

  double off = 0.0, inside = -std::numeric_limits<double>::infinity(), step = std::numeric_limits<double>::infinity();
  std::size_t off_at = 0, in_at = 0, step_at = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!p.in_open_support(r[i])) {
      if (std::abs(f[i] - r[i]) >= off) {
        off = std::abs(f[i] - r[i]);
        off_at = i;
      }
    } else if (d[i] > inside) {
      inside = d[i];
      in_at = i;
    }
    if (i + 1 < r.size() && f[i + 1] - f[i] < step) {
      step = f[i + 1] - f[i];
      step_at = i;
    }
  }
  auto c1 = detail::max_check("compression.identity_outside", off, 1e-10, grid);
  c1.relation = "<";
  c1.witness = {{"r", r[off_at]}};
  auto c2 = CheckResult::make("compression.strict_inside", inside, "<", 0.0);
  c2.grid = grid;
  c2.witness = {{"r", r[in_at]}};
  c2.detail = "max of f(r) - r over the open support";
  auto c3 = CheckResult::make("compression.monotone", step, ">", 0.0);
  c3.grid = grid;
  c3.witness = {{"r", r[step_at]}};
  c3.detail = "min of f(r_{i+1}) - f(r_i)";
  out.push_back(c1);
  out.push_back(c2);
  out.push_back(c3);

  // Tabulated f against the backward flow: phi_{-1}(f(r)) = r.
  const ode::RadialFlow flow(p.h());
  double worst = 0.0;
  double where = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!p.in_open_support(r[i])) continue;
    const double e = std::abs(flow(f[i], -1.0).R - r[i]);
    if (e >= worst) {
      worst = e;
      where = r[i];
    }
  }
  auto c4 = detail::max_check("compression.flow_consistency", worst, 1e-8, grid);
  c4.witness = {{"r", where}};
  c4.detail = "max |phi_{-1}(f(r)) - r| over the table";
  out.push_back(c4);
  return out;
}

inline std::vector<CheckResult> lift_checks(const CompressionProfile& p, const GridConfig& g) {
  using namespace detail;
  std::vector<CheckResult> out;
  const auto chart = charts::solid_torus();
  const auto lift = contact_lift(p);
  const auto& X = lift.cartesian;

  // (i) projection onto the disc is h d/dr, compared structurally.
  {
    const Expr r = R();
    const bool same = expr::same(X[0], p.h(r) * detail::X() / r) && expr::same(X[1], p.h(r) * detail::Y() / r);
    auto c = CheckResult::flag("lift.projection", same, "x, y components of X equal h x/r, h y/r symbolically");
    c.witness = {{"c", p.amplitude()}};  // symbolic: no sample point
    out.push_back(c);
  }
  // (ii) L_X alpha ^ alpha = 0.
  {
    const Form alpha = alpha_leg(chart);
    const ZeroTest z = test_zero(wedge(lie_derivative(X, alpha), alpha), g.random_points, 1e-9, g.seed,
                                 g.polar_exclusion);
    auto c = max_check("lift.contact_vector_field", z.max_residual, 1e-9,
                       z.symbolic ? "symbolic" : std::to_string(g.random_points) + " random points");
    if (!z.symbolic) c.at(*chart, z.witness);
    out.push_back(c);
  }
  // (iii) X vanishes where h does.
  {
    const expr::Program prog(X.components(), chart->names());
    double worst = 0.0;
    Point where{0, 0, 0};
    Rng rng(g.seed + 1);
    std::array<double, 3> v{};
    for (std::size_t k = 0; k < g.random_points; ++k) {
      const bool inner = k % 2 == 0;
      const double r = inner ? rng.uniform(0.0, p.lo()) : rng.uniform(p.hi(), 1.0);
      const double th = rng.uniform(0.0, 2 * pi);
      const Point q{r * std::cos(th), r * std::sin(th), rng.uniform(0.0, 2 * pi)};
      prog.run(q, {}, v);
      const double m = std::max({std::abs(v[0]), std::abs(v[1]), std::abs(v[2])});
      if (m > worst) {
        worst = m;
        where = q;
      }
    }
    auto c = CheckResult::make("lift.vanishes_off_support", worst, "==", 0.0);
    c.grid = std::to_string(g.random_points) + " random points off supp h";
    out.push_back(c.at(*chart, where));
  }
  // Closed-form angular component against the finite-difference oracle.
  {
    Rng rng(g.seed + 2);
    double worst = 0.0;
    std::vector<std::pair<std::string, double>> where;
    const Expr hp = expr::diff(p.h(), "r");
    const expr::Program hp_prog(hp, {"r"});
    for (std::size_t k = 0; k < g.random_points; ++k) {
      const double r = rng.uniform(p.lo(), p.hi());
      const double u = rng.uniform(0.0, 2 * pi);
      const double closed = 0.5 * (hp_prog(std::array<double, 1>{r}) - p.h_value(r) / r) * std::sin(2 * u);
      const double e = std::abs(closed - lift_angular_velocity_fd(p, r, u));
      if (e >= worst) {
        worst = e;
        where = {{"r", r}, {"z-theta", u}};
      }
    }
    auto c = max_check("lift.angular_fd_oracle", worst, 1e-6, std::to_string(g.random_points) + " random points, eps=1e-5");
    c.witness = where;
    out.push_back(c);
  }
  return out;
}

inline std::vector<CheckResult> contact_element_checks(const CompressionProfile& p, const GridConfig& g) {
  std::vector<CheckResult> out;
  const auto chart = charts::solid_torus();
  // Rotation: C(rot_psi) = (r, theta + psi, z + psi).
  {
    const double psi = 0.7;
    const auto [px, py] = rotation(psi);
    const auto m = contact_element_action(px, py);
    const expr::Program prog(m.components(), chart->names());
    double worst = 0.0;
    Point where;
    std::array<double, 3> v{};
    for (const auto& q : random_points(*chart, g.random_points, g.seed + 3, g.polar_exclusion)) {
      prog.run(q, {}, v);
      const double r = std::hypot(q[0], q[1]);
      const double th = std::atan2(q[1], q[0]) + psi;
      double dz = std::remainder(v[2] - (q[2] + psi), 2 * pi);
      const double e = std::max({std::abs(v[0] - r * std::cos(th)), std::abs(v[1] - r * std::sin(th)), std::abs(dz)});
      if (e >= worst) {
        worst = e;
        where = q;
      }
    }
    auto c = detail::max_check("contact_element.rotation", worst, 1e-9, std::to_string(g.random_points) + " random points");
    out.push_back(c.at(*chart, where));
  }
  // Numeric time-1 flow of h d/dr preserves the kernel.
  {
    const NumericContactElementAction act(p);
    double worst = 0.0;
    Point where;
    for (const auto& q : random_points(*chart, g.random_points, g.seed + 4, g.polar_exclusion)) {
      const double e = contact_element_residual(act, q[0], q[1], q[2]);
      if (e >= worst) {
        worst = e;
        where = q;
      }
    }
    auto c = detail::max_check("contact_element.flow", worst, 1e-6, std::to_string(g.random_points) + " random points");
    out.push_back(c.at(*chart, where));
  }
  return out;
}

inline CheckResult kernel_alignment_check(const CompressionProfile& p, const GridConfig& g) {
  const auto m = even_contact_form(p);
  const auto chart = m.chart();
  const KernelSolver solver(m, g.tol.rank);
  const expr::Program w(m.kernel->components(), chart->names());
  double worst = 0.0;
  Point where;
  std::array<double, 4> wv{};
  // Half the points uniform on the disc, half with r in the support of h.
  auto pts = random_points(*chart, g.random_points / 2, g.seed + 5, g.polar_exclusion);
  Rng rng(g.seed + 6);
  while (pts.size() < g.random_points) {
    const double r = rng.uniform(p.lo(), p.hi());
    const double th = rng.uniform(0.0, 2 * pi);
    pts.push_back({r * std::cos(th), r * std::sin(th), rng.uniform(0.0, 2 * pi), rng.uniform(0.0, 2 * pi)});
  }
  for (const auto& q : pts) {
    const auto k = solver.at(q);
    w.run(q, {}, wv);
    const double e = sin_angle(k.direction, wv);
    if (e >= worst) {
      worst = e;
      where = q;
    }
  }
  auto c = detail::max_check("kernel_alignment", worst, 1e-6, std::to_string(pts.size()) + " random points");
  c.detail = "sin(angle) between the null direction of dbeta|ker beta and d/dt + X";
  return c.at(*chart, where);
}

inline std::vector<CheckResult> reeb_checks(const CompressionProfile& p) {
  std::vector<CheckResult> out;
  const double rs = p.r_star();
  {
    const double r0 = 0.52;
    const auto o = reeb_orbit_asymptotics(r0, 200.0, p);
    auto c = CheckResult::make("reeb.converge", std::abs(o.final_r() - rs), "<", 1e-3);
    c.witness = {{"r0", r0}, {"T", 200.0}, {"r(T)", o.final_r()}};
    c.detail = o.strictly_increasing ? "strictly increasing" : "not monotone";
    if (!o.strictly_increasing || o.exited) c.pass = false;
    out.push_back(c);
  }
  {
    const auto o = reeb_orbit_asymptotics(rs, 200.0, p);
    double dev = 0.0;
    for (double r : o.r) dev = std::max(dev, std::abs(r - rs));
    auto c = CheckResult::make("reeb.fixed", dev, "<", 1e-12);
    c.witness = {{"r0", rs}, {"T", 200.0}};
    out.push_back(c);
  }
  {
    // Outside supp a_0 the orbit is a straight radial segment.
    const double edge = rs + p.half_width();
    const double r0 = edge <= 0.7 ? 0.7 : 0.5 * (edge + 1.0);
    const auto o = reeb_orbit_asymptotics(r0, 200.0, p);
    auto c = CheckResult::make("reeb.radial", o.exited ? std::abs(o.exit_time - (1.0 - r0)) : 1.0, "<", 1e-9);
    c.witness = {{"r0", r0}, {"exit_time", o.exit_time}};
    c.detail = "orbit reaches r = 1 at time 1 - r0";
    out.push_back(c);
  }
  {
    // Between r_* and the outer edge the orbit moves away from r_*.
    const double r0 = rs + 0.5 * p.half_width();
    const auto o = reeb_orbit_asymptotics(r0, 200.0, p);
    const bool ok = o.strictly_increasing && o.exited;
    auto c = CheckResult::flag("reeb.repel", ok, "orbit from r_* + w/2 increases and leaves through r = 1");
    c.witness = {{"r0", r0}, {"exit_time", o.exit_time}};
    out.push_back(c);
  }
  return out;
}

/// Profile sanity: r_* inside the support of h, and a_0 = pi/2 only where h < 0.
inline std::vector<CheckResult> profile_checks(const CompressionProfile& p) {
  std::vector<CheckResult> out;
  const double rs = p.r_star();
  auto c1 = CheckResult::flag("profile.r_star_interior", p.in_open_support(rs),
                              "r_* must lie strictly inside the support of h");
  c1.witness = {{"r_star", rs}};
  out.push_back(c1);
  auto c2 = CheckResult::make("profile.support_containment", p.h_value(rs), "<", 0.0);
  c2.detail = "h(r_*) where a_0(r_*) = pi/2";
  c2.witness = {{"r", rs}};
  out.push_back(c2);
  return out;
}

inline SuiteReport turbulisation_suite(const SuiteConfig& cfg) {
  const CompressionProfile p(cfg.profile);
  const auto& g = cfg.grid;
  SuiteReport rep;
  rep.suite = "turbulisation";
  auto add = [&](CheckResult c) { rep.checks.push_back(std::move(c)); };
  auto add_all = [&](std::vector<CheckResult> cs) {
    for (auto& c : cs) add(std::move(c));
  };

  add(timed([&] { return contact3_certificate(model_contact_form(), g.spec_for(*charts::solid_torus())); }));
  const auto ec = even_contact_form(p);
  add(timed([&] { return evencontact4_certificate(ec, g.spec_for(*charts::m_leg())); }));
  add(timed([&] { return kernel_alignment_check(p, g); }));
  add_all(lift_checks(p, g));
  add_all(contact_element_checks(p, g));
  add_all(compression_checks(p));
  add_all(reeb_checks(p));
  add_all(profile_checks(p));

  GridSpec gs = g.spec_for(*charts::annulus());
  gs.extra = {{p.r_star(), p.lo(), p.hi(), p.r_star() - p.half_width(), p.r_star() + p.half_width()}, {}};
  const GridSpec g4 = g.spec_for(*charts::m_leg());
  for (double s : cfg.s_values) {
    const std::string tag = s_label(s);
    const auto lam = foliation_family(s, p);
    add(timed([&] {
      auto c = integrability_certificate(lam, g4);
      c.name += tag;
      c.witness.emplace_back("s", s);
      return c;
    }));
    const auto [F, L] = base_line_fields(s, p);
    add(timed([&] {
      auto c = transversality_certificate(F, L, gs);
      c.name += tag;
      c.witness.emplace_back("s", s);
      return c;
    }));
    add(timed([&] {
      auto c = leafwise_contact_certificate(ec, lam, g4);
      c.name += tag;
      c.witness.emplace_back("s", s);
      return c;
    }));
  }
  return rep;
}

}  // namespace contactlab::turbulisation
