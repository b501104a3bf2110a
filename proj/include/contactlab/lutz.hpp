#pragma once

// The Lutz tube ker(f(r) dz + g(r) dtheta), curves and discs in it, and
// the overtwisted-disc witness.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "contactlab/chart.hpp"
#include "contactlab/expr.hpp"
#include "contactlab/forms.hpp"
#include "contactlab/structures.hpp"

namespace contactlab::lutz {

using expr::Expr;
using std::numbers::pi;

/// The profile (f, g) = (cos Theta, sin Theta) with Theta = 2 pi q(r),
/// glued by flat smoothsteps to (1, r^2) near 0 and (1, (r - 1 + delta)^2)
/// near 1 (the second glue starts at 1 - 3 delta/4).
///
/// cos and sin of 2 pi q are written as products of sines vanishing at
/// the prescribed radii, so the zeros of f and g are exact in floating
/// point and not merely within rounding.
class LutzProfile {
 public:
  explicit LutzProfile(double delta = 0.125) : delta_(delta) {
    if (!(delta > 0.0 && delta <= 0.125)) throw std::invalid_argument("lutz profile: delta must lie in (0, 1/8]");
    re_ = 1.0 - delta_;
    b_ = (0.25 - delta_) / 2.0;
    rs_ = re_ + delta_ / 4.0;
    dr_ = (1.0 - delta_ / 2.0) - rs_;
    slow_ = delta_ / (16.0 * pi);
  }

  [[nodiscard]] double delta() const { return delta_; }
  /// 1 - delta, where g returns to zero.
  [[nodiscard]] double outer_zero() const { return re_; }

  /// Radii where a blend switches on or off.
  [[nodiscard]] std::vector<double> joints() const {
    return {delta_, delta_ + b_, 0.5, 0.75, re_, rs_, 1.0 - delta_ / 2.0};
  }

  /// Distinguished radii {delta, 1/4, 1/2, 3/4, 1 - delta}.
  [[nodiscard]] std::vector<double> marks() const { return {delta_, 0.25, 0.5, 0.75, re_}; }

  /// Theta / (2 pi). Equal to r up to 3/4; reaches 1 at 1 - delta, where
  /// its speed has dropped to `slow_`, and grows at that speed afterwards
  /// so the angle stays below that of the end form (1, (r - 1 + delta)^2).
  [[nodiscard]] Expr q(const Expr& r) const { return 1.0 + q_minus_one(r); }

  /// q - 1 = (r - r_e) k(r) + delta (sigma - 1), exactly 0 at r_e = 1 - delta.
  [[nodiscard]] Expr q_minus_one(const Expr& r) const {
    const Expr sq = expr::smoothstep((r - 0.75) / (re_ - 0.75));
    const Expr k = 1.0 - (1.0 - slow_) * sq;
    return (r - re_) * k + delta_ * (sq - 1.0);
  }

  [[nodiscard]] Expr f(const Expr& r) const {
    const Expr sl = left(r);
    const Expr sr = right(r);
    return (1.0 - sr) * ((1.0 - sl) + sl * mf(r)) + sr;
  }

  [[nodiscard]] Expr g(const Expr& r) const {
    const Expr sl = left(r);
    const Expr sr = right(r);
    const Expr er = r - re_;
    return (1.0 - sr) * ((1.0 - sl) * (r * r) + sl * mg(r)) + sr * (er * er);
  }

  /// g / r^2 written so it is defined at r = 0 (value 1); `r2` is r^2.
  [[nodiscard]] Expr g_over_r2(const Expr& r, const Expr& r2) const {
    const Expr sl = left(r);
    const Expr sr = right(r);
    const Expr er = r - re_;
    return (1.0 - sr) * ((1.0 - sl) + (sl * mg(r)) / r2) + (sr * (er * er)) / r2;
  }

  [[nodiscard]] Expr f() const { return f(expr::var("r")); }
  [[nodiscard]] Expr g() const { return g(expr::var("r")); }

  /// f g' - g f' as an expression in r.
  [[nodiscard]] Expr contact_density() const {
    const Expr F = f();
    const Expr G = g();
    return F * expr::diff(G, "r") - G * expr::diff(F, "r");
  }

  /// f dz + g dtheta on the polar chart (r, theta, z).
  [[nodiscard]] ContactModel polar_model() const {
    const auto chart = charts::solid_torus_polar();
    return ContactModel{Form::from(chart, {{{"z"}, f()}, {{"theta"}, g()}})};
  }

  /// f dz + (g/r^2)(x dy - y dx) on the Cartesian chart (x, y, z), smooth at the core.
  [[nodiscard]] ContactModel cartesian_model() const {
    const auto chart = charts::solid_torus();
    const Expr x = expr::var("x");
    const Expr y = expr::var("y");
    const Expr r2 = x * x + y * y;
    const Expr r = expr::sqrt(r2);
    const Expr G = g_over_r2(r, r2);
    return ContactModel{Form::from(chart, {{{"z"}, f(r)}, {{"y"}, G * x}, {{"x"}, -(G * y)}})};
  }

 private:
  [[nodiscard]] Expr left(const Expr& r) const { return expr::smoothstep((r - delta_) / b_); }
  [[nodiscard]] Expr right(const Expr& r) const { return expr::smoothstep((r - rs_) / dr_); }

  /// q written as r + corrections, so q = r exactly wherever sigma = 0.
  [[nodiscard]] Expr q_near(const Expr& r) const {
    const Expr sq = expr::smoothstep((r - 0.75) / (re_ - 0.75));
    return r + (delta_ * sq - (r - re_) * ((1.0 - slow_) * sq));
  }

  [[nodiscard]] Expr mf(const Expr& r) const {
    const Expr qq = q_near(r);
    return 2.0 * expr::sin(pi * (qq - 0.25)) * expr::sin(pi * (qq - 0.75));
  }

  [[nodiscard]] Expr mg(const Expr& r) const {
    const Expr qq = q_near(r);
    const Expr e = q_minus_one(r);
    const Expr tau = expr::smoothstep((r - 0.5) / 0.25);
    const Expr half = expr::sin(pi * (qq - 0.5));
    return (1.0 - tau) * (-2.0 * expr::sin(pi * qq) * half) + tau * (2.0 * expr::sin(pi * e) * half);
  }

  double delta_;
  double re_;
  double b_;
  double rs_;
  double dr_;
  double slow_;
};

inline LutzProfile lutz_profile(double delta = 0.125) { return LutzProfile(delta); }

/// Evaluates expressions in r on many radii.
class RadialEvaluator {
 public:
  explicit RadialEvaluator(std::vector<Expr> outs) : n_(outs.size()), prog_(outs, {"r"}) {}
  [[nodiscard]] std::vector<double> operator()(double r) const {
    std::vector<double> out(n_);
    prog_.run(std::array<double, 1>{r}, {}, out);
    return out;
  }

 private:
  std::size_t n_;
  expr::Program prog_;
};

/// Radii lo..hi, n uniform samples plus `extra` inside the interval.
inline std::vector<double> radius_grid(double lo, double hi, std::size_t n, const std::vector<double>& extra = {}) {
  if (n < 2) throw std::invalid_argument("radius_grid: need at least 2 samples");
  std::vector<double> r;
  for (std::size_t i = 0; i < n; ++i) r.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  for (double e : extra)
    if (e >= lo && e <= hi) r.push_back(e);
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
  return r;
}

/// min over r in [eps0, 1] of f g' - g f'; the Cartesian rewrite is
/// certified on the solid-torus grid (covering the core) as well.
inline CheckResult lutz_contact_certificate(const LutzProfile& p, const GridSpec& g, std::size_t radial = 4096) {
  const RadialEvaluator ev({p.contact_density()});
  Extremum ex(true);
  for (double r : radius_grid(g.polar_exclusion, 1.0, radial, p.joints())) ex.offer(ev(r)[0], {r});
  auto res = CheckResult::make("lutz_contact", ex.value(), ">", g.tol.contact);
  res.grid = std::to_string(radial) + " radii on [eps0, 1]";
  res.witness = {{"r", ex.where().empty() ? 0.0 : ex.where()[0]}};

  GridSpec g3 = g;
  g3.counts.assign(3, g.counts.empty() ? 48 : g.counts.front());
  const auto core = contact3_certificate(p.cartesian_model(), g3);
  std::ostringstream os;
  os << "Cartesian rewrite: min |alpha ^ d alpha| = " << core.value << " on " << core.grid;
  res.detail = os.str();
  if (!core.pass) {
    res.pass = false;
    res.witness = core.witness;
  }
  return res;
}

/// Total turning of (f, g) over [ra, rb]: integral of (f g' - g f')/(f^2 + g^2).
inline double winding(const LutzProfile& p, double ra, double rb) {
  if (!(ra >= 0.0 && ra < rb && rb <= 1.0)) throw std::invalid_argument("winding: need 0 <= r_a < r_b <= 1");
  const Expr F = p.f();
  const Expr G = p.g();
  const RadialEvaluator ev({p.contact_density(), F * F + G * G});
  auto integrand = [&](double r) {
    const auto v = ev(r);
    if (v[1] == 0.0) throw std::domain_error("winding: (f, g) = (0, 0)");
    return v[0] / v[1];
  };
  // Split at the glue points so each panel is smooth.
  std::vector<double> cuts{ra};
  for (double j : p.joints())
    if (j > ra && j < rb) cuts.push_back(j);
  cuts.push_back(rb);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, cuts[i], cuts[i + 1], 15, 1e-12);
  return total;
}

// ---------------------------------------------------------------------------
// Curves and discs

/// A closed curve: chart coordinates as expressions in the parameter `s`
/// over [0, period).
struct ParamCurve {
  ChartPtr chart;
  std::vector<Expr> coords;
  double period = 2 * pi;
  std::string param = "s";

  [[nodiscard]] std::vector<Expr> tangent() const {
    std::vector<Expr> t;
    for (const auto& c : coords) t.push_back(expr::diff(c, param));
    return t;
  }
};

/// max over the parameter grid of |alpha(k')| / (|alpha| |k'|).
inline CheckResult legendrian_check(const ContactModel& m, const ParamCurve& k, std::size_t samples = 512,
                                    double tol = 1e-10) {
  require_same_chart(m.chart(), k.chart, "legendrian_check");
  const auto& chart = *m.chart();
  const std::size_t n = chart.dim();
  std::vector<Expr> outs = k.coords;
  for (const auto& t : k.tangent()) outs.push_back(t);
  const expr::Program curve(outs, {k.param});
  const CompiledForm alpha(m.alpha);
  Extremum ex(false);
  std::vector<double> v(2 * n), a(n);
  for (std::size_t i = 0; i < samples; ++i) {
    const double s = k.period * static_cast<double>(i) / static_cast<double>(samples);
    curve.run(std::array<double, 1>{s}, {}, v);
    const Point p(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n));
    if (auto why = chart.domain_violation(p)) throw std::domain_error("legendrian_check: curve leaves chart: " + *why);
    alpha.eval(p, a);
    const std::span<const double> t(v.data() + n, n);
    const double nt = norm(t);
    if (nt == 0.0) throw std::domain_error("legendrian_check: zero tangent");
    double pair = 0.0;
    for (std::size_t j = 0; j < n; ++j) pair += a[j] * t[j];
    const double na = norm(a);
    ex.offer(na == 0.0 ? 0.0 : std::abs(pair) / (na * nt), p);
  }
  auto r = CheckResult::make("legendrian", ex.value(), "<", tol);
  r.grid = std::to_string(samples) + " parameter samples";
  return r.at(chart, ex.where());
}

/// A disc (u, v) -> chart, |(u, v)| <= radius; sampled on polar rings.
struct ParamDisc {
  ChartPtr chart;
  std::vector<Expr> coords;  // in variables "u", "v"
  double radius = 0.5;

  [[nodiscard]] ParamCurve boundary() const {
    const Expr s = expr::var("s");
    std::map<std::string, Expr, std::less<>> sub{{"u", radius * expr::cos(s)}, {"v", radius * expr::sin(s)}};
    ParamCurve c{chart, {}, 2 * pi, "s"};
    for (const auto& e : coords) c.coords.push_back(expr::substitute(e, sub));
    return c;
  }
};

/// The flat disc {z = z0, r <= radius} in a Cartesian (x, y, z) chart,
/// parametrised with the angular phase `phase`.
inline ParamDisc flat_disc(const ChartPtr& chart, double radius, double z0, double phase = 0.0) {
  const Expr u = expr::var("u");
  const Expr v = expr::var("v");
  const double c = std::cos(phase);
  const double s = std::sin(phase);
  return ParamDisc{chart, {c * u - s * v, s * u + c * v, Expr(z0)}, radius};
}

struct DiscSample {
  double rho = 0.0;
  double phi = 0.0;
  double u = 0.0;
  double v = 0.0;
  double pair_u = 0.0;  // alpha(d/du)
  double pair_v = 0.0;  // alpha(d/dv)
  bool tangency = false;
  double dir_u = 0.0;   // unit characteristic direction in (u, v)
  double dir_v = 0.0;
};

struct DiscFoliation {
  std::vector<DiscSample> samples;
  std::vector<std::size_t> tangencies;
};

/// xi cap T(disc) on rings rho = k R / n_rho (k = 1..n_rho), n_phi angles
/// each, plus the centre; `extra_rings` are added to the ring radii.
inline DiscFoliation char_foliation_on_disc(const ContactModel& m, const ParamDisc& d, std::size_t n_rho = 48,
                                            std::size_t n_phi = 48, double tol_tan = 1e-9,
                                            const std::vector<double>& extra_rings = {}) {
  require_same_chart(m.chart(), d.chart, "char_foliation_on_disc");
  const auto& chart = *m.chart();
  const std::size_t n = chart.dim();
  std::vector<Expr> outs = d.coords;
  for (const auto& c : d.coords) outs.push_back(expr::diff(c, "u"));
  for (const auto& c : d.coords) outs.push_back(expr::diff(c, "v"));
  const expr::Program prog(outs, {"u", "v"});
  const CompiledForm alpha(m.alpha);

  std::vector<double> rings{0.0};
  for (std::size_t k = 1; k <= n_rho; ++k) rings.push_back(d.radius * static_cast<double>(k) / static_cast<double>(n_rho));
  for (double e : extra_rings)
    if (e > 0.0 && e <= d.radius) rings.push_back(e);
  std::sort(rings.begin(), rings.end());
  rings.erase(std::unique(rings.begin(), rings.end()), rings.end());

  DiscFoliation out;
  std::vector<double> v(3 * n), a(n);
  for (double rho : rings) {
    const std::size_t count = rho == 0.0 ? 1 : n_phi;
    for (std::size_t j = 0; j < count; ++j) {
      DiscSample smp;
      smp.rho = rho;
      smp.phi = 2 * pi * static_cast<double>(j) / static_cast<double>(n_phi);
      smp.u = rho * std::cos(smp.phi);
      smp.v = rho * std::sin(smp.phi);
      prog.run(std::array<double, 2>{smp.u, smp.v}, {}, v);
      const Point p(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n));
      if (auto why = chart.domain_violation(p)) throw std::domain_error("disc leaves chart: " + *why);
      alpha.eval(p, a);
      const std::span<const double> tu(v.data() + n, n);
      const std::span<const double> tv(v.data() + 2 * n, n);
      // Frame degenerate iff |tu x tv| vanishes.
      double g11 = 0, g22 = 0, g12 = 0;
      for (std::size_t i = 0; i < n; ++i) {
        g11 += tu[i] * tu[i];
        g22 += tv[i] * tv[i];
        g12 += tu[i] * tv[i];
      }
      if (!(g11 * g22 - g12 * g12 > 1e-24)) throw std::domain_error("char_foliation_on_disc: degenerate disc frame");
      for (std::size_t i = 0; i < n; ++i) {
        smp.pair_u += a[i] * tu[i];
        smp.pair_v += a[i] * tv[i];
      }
      smp.tangency = std::abs(smp.pair_u) < tol_tan && std::abs(smp.pair_v) < tol_tan;
      if (!smp.tangency) {
        const double du = smp.pair_v;
        const double dv = -smp.pair_u;
        const double nn = std::hypot(du, dv);
        smp.dir_u = du / nn;
        smp.dir_v = dv / nn;
        // Orient outwards for readability.
        if (smp.dir_u * smp.u + smp.dir_v * smp.v < 0) {
          smp.dir_u = -smp.dir_u;
          smp.dir_v = -smp.dir_v;
        }
      } else {
        out.tangencies.push_back(out.samples.size());
      }
      out.samples.push_back(smp);
    }
  }
  return out;
}

struct WitnessReport {
  double boundary_residual = 0.0;    // (i) legendrian residual of the boundary
  bool boundary_legendrian = false;
  double boundary_max_pairing = 0.0; // (ii) max pairing on boundary samples
  bool boundary_tangent = false;
  std::size_t interior_tangencies = 0;  // (iii)
  bool center_tangent = false;
  double census_deviation = 0.0;     // max |sin| between direction and d/drho on the census ring
  bool census_radial = false;
  bool pass = false;
  std::string failed;                // "i", "ii", "iii" or empty
  std::string summary;
};

/// Overtwisted-disc criteria: (i) legendrian boundary, (ii) the whole
/// boundary is a tangency circle, (iii) one interior tangency, at the
/// centre, with radial characteristic directions on the ring rho = 2 eps0.
inline WitnessReport ot_witness(const ContactModel& m, const ParamDisc& d, double eps0 = 1.0 / 32.0,
                                std::size_t n_rho = 48, std::size_t n_phi = 48) {
  WitnessReport w;
  const auto leg = legendrian_check(m, d.boundary());
  w.boundary_residual = leg.value;
  w.boundary_legendrian = leg.pass;

  const double ring = 2 * eps0;
  const auto fol = char_foliation_on_disc(m, d, n_rho, n_phi, 1e-9, {ring});
  bool all_boundary = true;
  for (const auto& s : fol.samples) {
    if (s.rho == d.radius) {
      w.boundary_max_pairing = std::max({w.boundary_max_pairing, std::abs(s.pair_u), std::abs(s.pair_v)});
      all_boundary = all_boundary && s.tangency;
    } else if (s.tangency) {
      ++w.interior_tangencies;
      if (s.rho == 0.0) w.center_tangent = true;
    }
    if (s.rho == ring) {
      const double dev = s.tangency ? 1.0 : std::abs(s.dir_u * std::sin(s.phi) - s.dir_v * std::cos(s.phi));
      w.census_deviation = std::max(w.census_deviation, dev);
    }
  }
  w.boundary_tangent = all_boundary;
  w.census_radial = w.census_deviation < 1e-6;
  const bool iii = w.interior_tangencies == 1 && w.center_tangent && w.census_radial;
  if (!w.boundary_legendrian) w.failed = "i";
  else if (!w.boundary_tangent) w.failed = "ii";
  else if (!iii) w.failed = "iii";
  w.pass = w.failed.empty();
  std::ostringstream os;
  os << "boundary residual " << w.boundary_residual << ", boundary tangency " << (w.boundary_tangent ? "yes" : "no")
     << ", interior tangencies " << w.interior_tangencies << (w.center_tangent ? " (centre)" : "")
     << ", census deviation " << w.census_deviation;
  w.summary = os.str();
  return w;
}

// ---------------------------------------------------------------------------
// Suite

struct SuiteConfig {
  double delta = 0.125;
  double z0 = 1.0;
  GridConfig grid;
};

inline std::vector<CheckResult> boundary_checks(const LutzProfile& p) {
  std::vector<CheckResult> out;
  const RadialEvaluator ev({p.f(), p.g()});
  const double d = p.delta();
  const double re = 1.0 - d;
  std::size_t bad = 0;
  double worst = -1.0;
  std::vector<std::pair<std::string, double>> first;
  // The witness is the first violation, or else the largest deviation (ties: last).
  auto expect = [&](double dev, double r) {
    if (dev != 0.0 && bad++ == 0) first = {{"r", r}};
    if (bad == 0 && dev >= worst) {
      worst = dev;
      first = {{"r", r}};
    }
  };
  for (double r : radius_grid(0.0, d, 257)) {
    const auto v = ev(r);
    expect(std::max(std::abs(v[0] - 1.0), std::abs(v[1] - r * r)), r);
  }
  for (double r : radius_grid(1.0 - d / 2, 1.0, 257)) {
    const auto v = ev(r);
    const double e = r - (1.0 - d);
    expect(std::max(std::abs(v[0] - 1.0), std::abs(v[1] - e * e)), r);
  }
  for (double r : {0.25, 0.75}) expect(std::abs(ev(r)[0]), r);
  for (double r : {0.0, 0.5, re}) expect(std::abs(ev(r)[1]), r);
  auto c = CheckResult::make("lutz.boundary_equalities", static_cast<double>(bad), "==", 0.0);
  c.detail = "exact equalities on [0, delta], [1 - delta/2, 1] and at the zeros of f, g";
  c.witness = first;
  out.push_back(c);
  return out;
}

inline CheckResult sign_ladder_check(const LutzProfile& p, std::size_t n = 4096) {
  const RadialEvaluator ev({p.f(), p.g()});
  const double re = p.outer_zero();
  std::size_t bad = 0;
  double where = 0.0;
  double tightest = std::numeric_limits<double>::infinity();
  double tight_r = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = static_cast<double>(i) / static_cast<double>(n - 1);
    const auto v = ev(r);
    bool ok = true;
    if (r < 0.25) ok = ok && v[0] > 0;
    if (r > 0.25 && r < 0.75) ok = ok && v[0] < 0;
    if (r > 0.75) ok = ok && v[0] > 0;
    if (r > 0.0 && r < 0.5) ok = ok && v[1] > 0;
    if (r > 0.5 && r < re) ok = ok && v[1] < 0;
    if (r >= re) ok = ok && v[1] >= 0;
    if (!ok && bad++ == 0) where = r;
    // Smallest |f| or |g| where a strict sign is required.
    const bool strict_f = r != 0.25 && r != 0.75;
    const bool strict_g = r > 0.0 && r < re && r != 0.5;
    const double m = std::min(strict_f ? std::abs(v[0]) : tightest, strict_g ? std::abs(v[1]) : tightest);
    if (m < tightest) {
      tightest = m;
      tight_r = r;
    }
  }
  auto c = CheckResult::make("lutz.sign_ladder", static_cast<double>(bad), "==", 0.0);
  c.grid = std::to_string(n) + " radii";
  c.witness = {{"r", bad ? where : tight_r}};
  if (!bad) {
    std::ostringstream os;
    os << "smallest strict-sign margin " << tightest << " at the witness";
    c.detail = os.str();
  }
  return c;
}

/// f, g and two derivatives are continuous across the glue radii:
/// |F(j + h) - F(j - h) - 2h F'(j)| < 1e-9 with h = 1e-6.
inline CheckResult joint_check(const LutzProfile& p, double h = 1e-6) {
  std::vector<Expr> fs{p.f(), p.g()};
  for (int k = 0; k < 2; ++k) {
    fs.push_back(expr::diff(fs[fs.size() - 2], "r"));
    fs.push_back(expr::diff(fs[fs.size() - 2], "r"));
  }
  // fs = f, g, f', g', f'', g''; one more derivative for the linear term.
  std::vector<Expr> outs = fs;
  outs.push_back(expr::diff(fs[4], "r"));
  outs.push_back(expr::diff(fs[5], "r"));
  const RadialEvaluator ev(outs);
  double worst = 0.0;
  double where = 0.0;
  for (double j : p.joints()) {
    const auto a = ev(j - h);
    const auto b = ev(j + h);
    const auto c = ev(j);
    for (std::size_t i = 0; i < 6; ++i) {
      const double e = std::abs(b[i] - a[i] - 2 * h * c[i + 2]);
      if (e > worst) {
        worst = e;
        where = j;
      }
    }
  }
  auto c = CheckResult::make("lutz.joints", worst, "<", 1e-9);
  c.witness = {{"r", where}};
  c.detail = "f, g, f', g', f'', g'' across the blend joints at +-1e-6";
  return c;
}

inline CheckResult witness_check(std::string name, const WitnessReport& w, const std::string& expect_failure,
                                 const std::vector<std::pair<std::string, double>>& where) {
  const bool ok = expect_failure.empty() ? w.pass : (!w.pass && w.failed == expect_failure);
  auto c = CheckResult::flag(std::move(name), ok, w.summary);
  if (!expect_failure.empty()) c.detail = "expected failure at (" + expect_failure + "), got (" + w.failed + "); " + w.summary;
  c.witness = where;
  return c;
}

inline SuiteReport lutz_suite(const SuiteConfig& cfg) {
  const LutzProfile p(cfg.delta);
  const auto& g = cfg.grid;
  SuiteReport rep;
  rep.suite = "lutz";
  auto add = [&](CheckResult c) { rep.checks.push_back(std::move(c)); };

  for (auto& c : boundary_checks(p)) add(timed([&] { return c; }));
  add(timed([&] {
    auto c = lutz_contact_certificate(p, g.spec_for(*charts::solid_torus()));
    c.name = "lutz.contact";
    return c;
  }));
  add(timed([&] {
    const RadialEvaluator ev({p.contact_density()});
    Extremum ex(true);
    for (double r : radius_grid(1e-3, 1.0, 4096, p.joints())) ex.offer(ev(r)[0], {r});
    auto c = CheckResult::make("lutz.positivity", ex.value(), ">", 0.0);
    c.grid = "4096 radii on [1e-3, 1]";
    c.witness = {{"r", ex.where()[0]}};
    return c;
  }));
  add(timed([&] {
    const double w = winding(p, 0.0, p.outer_zero());
    auto c = CheckResult::make("lutz.winding", std::abs(w - 2 * pi), "<", 1e-6);
    c.detail = "winding over [0, 1 - delta] minus 2 pi";
    c.witness = {{"ra", 0.0}, {"rb", p.outer_zero()}};
    return c;
  }));
  add(timed([&] {
    const double d = p.delta();
    const double e1 = std::abs(winding(p, 0.0, d) - std::atan(d * d));
    const double e2 = std::abs(winding(p, 1.0 - d / 2, 1.0) - (std::atan(d * d) - std::atan(d * d / 4)));
    auto c = CheckResult::make("lutz.winding_ends", std::max(e1, e2), "<", 1e-9);
    if (e1 >= e2)
      c.witness = {{"ra", 0.0}, {"rb", d}};
    else
      c.witness = {{"ra", 1.0 - d / 2}, {"rb", 1.0}};
    c.detail = "end intervals [0, delta] and [1 - delta/2, 1]";
    return c;
  }));
  add(timed([&] {
    double worst = -1.0;
    double where = 0.0;
    for (int k = 1; k <= 3; ++k) {
      const double e = std::abs(winding(p, 0.0, 0.25 * k) - k * pi / 2);
      if (e > worst) {
        worst = e;
        where = 0.25 * k;
      }
    }
    auto c = CheckResult::make("lutz.quarter_turns", worst, "<", 1e-6);
    c.witness = {{"r", where}};
    c.detail = "Theta(1/4), Theta(1/2), Theta(3/4) = pi/2, pi, 3 pi/2";
    return c;
  }));
  add(timed([&] { return sign_ladder_check(p); }));
  add(timed([&] { return joint_check(p); }));

  const auto polar = p.polar_model();
  const auto cart = p.cartesian_model();
  add(timed([&] {
    const auto pc = charts::solid_torus_polar();
    ParamCurve k{pc, {Expr(0.25), Expr(0.0), expr::var("s")}, 2 * pi, "s"};
    auto c = legendrian_check(polar, k);
    c.name = "lutz.legendrian_K";
    c.relation = "==";
    c.tolerance = 0.0;
    c.pass = c.value == 0.0;
    c.detail = "K'(z) = (1/4, 0, z)";
    return c;
  }));
  const auto st = charts::solid_torus();
  add(timed([&] {
    return witness_check("lutz.ot_witness", ot_witness(cart, flat_disc(st, 0.5, cfg.z0), g.polar_exclusion), "",
                         {{"z0", cfg.z0}, {"R", 0.5}});
  }));
  add(timed([&] {
    bool stable = true;
    std::string fails;
    double margin = -1.0;
    std::vector<std::pair<std::string, double>> where;
    // Witness: the first failing disc, or else the one with the largest census deviation.
    for (double phase : {0.3, 1.7})
      for (double z0 : {0.0, 2.5, 5.9}) {
        const auto w = ot_witness(cart, flat_disc(st, 0.5, z0, phase), g.polar_exclusion);
        if (!w.pass && stable) {
          stable = false;
          fails = w.summary;
          where = {{"phase", phase}, {"z0", z0}};
        }
        if (stable && w.census_deviation >= margin) {
          margin = w.census_deviation;
          where = {{"phase", phase}, {"z0", z0}};
        }
      }
    auto c = CheckResult::flag("lutz.ot_witness_stability", stable,
                               stable ? "passes for phases {0.3, 1.7} and z0 in {0, 2.5, 5.9}" : fails);
    c.witness = where;
    return c;
  }));
  add(timed([&] {
    return witness_check("lutz.control_quarter_disc", ot_witness(cart, flat_disc(st, 0.25, cfg.z0), g.polar_exclusion),
                         "i", {{"z0", cfg.z0}, {"R", 0.25}});
  }));
  add(timed([&] {
    const ContactModel leg{Form::from(st, {{{"x"}, expr::cos(expr::var("z"))}, {{"y"}, expr::sin(expr::var("z"))}})};
    return witness_check("lutz.control_leg_disc", ot_witness(leg, flat_disc(st, 0.5, 0.0), g.polar_exclusion), "i",
                         {{"z0", 0.0}, {"R", 0.5}});
  }));
  return rep;
}

}  // namespace contactlab::lutz
