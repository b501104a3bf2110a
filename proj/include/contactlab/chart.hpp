#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace contactlab {

using Point = std::vector<double>;

/// One coordinate of a chart. Periodic coordinates live on [lo, hi) with
/// period hi - lo; a polar radius is an interval coordinate whose grids
/// skip the singular core r < eps0.
struct Coordinate {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  bool periodic = false;
  bool polar_radius = false;

  [[nodiscard]] double period() const { return hi - lo; }

  static Coordinate interval(std::string n, double lo, double hi) { return {std::move(n), lo, hi, false, false}; }
  static Coordinate circle(std::string n, double period = 2.0 * std::numbers::pi) {
    return {std::move(n), 0.0, period, true, false};
  }
  static Coordinate radius(std::string n, double hi = 1.0) { return {std::move(n), 0.0, hi, false, true}; }
};

/// (coords[first], coords[second]) constrained to the disc of given radius.
struct DiscConstraint {
  std::size_t first = 0;
  std::size_t second = 1;
  double radius = 1.0;
};

class Chart {
 public:
  Chart(std::string name, std::vector<Coordinate> coords, std::optional<DiscConstraint> disc = std::nullopt)
      : name_(std::move(name)), coords_(std::move(coords)), disc_(disc) {
    if (coords_.empty()) throw std::invalid_argument("chart '" + name_ + "' has no coordinates");
    if (coords_.size() > 16) throw std::invalid_argument("chart '" + name_ + "' has too many coordinates");
    for (std::size_t i = 0; i < coords_.size(); ++i) {
      const auto& c = coords_[i];
      if (c.name.empty()) throw std::invalid_argument("chart '" + name_ + "': empty coordinate name");
      for (std::size_t j = 0; j < i; ++j)
        if (coords_[j].name == c.name)
          throw std::invalid_argument("chart '" + name_ + "': duplicate coordinate '" + c.name + "'");
      if (c.periodic && !(c.period() > 0.0))
        throw std::invalid_argument("chart '" + name_ + "': period of '" + c.name + "' must be positive");
      if (!c.periodic && !(c.lo <= c.hi))
        throw std::invalid_argument("chart '" + name_ + "': empty interval for '" + c.name + "'");
    }
    if (disc_) {
      if (disc_->first >= coords_.size() || disc_->second >= coords_.size() || disc_->first == disc_->second)
        throw std::invalid_argument("chart '" + name_ + "': bad disc constraint indices");
      if (!(disc_->radius > 0.0)) throw std::invalid_argument("chart '" + name_ + "': disc radius must be positive");
    }
  }

  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] std::size_t dim() const { return coords_.size(); }
  [[nodiscard]] const Coordinate& coord(std::size_t i) const { return coords_.at(i); }
  [[nodiscard]] const std::vector<Coordinate>& coords() const { return coords_; }
  [[nodiscard]] const std::optional<DiscConstraint>& disc() const { return disc_; }

  [[nodiscard]] std::optional<std::size_t> index_of(std::string_view n) const {
    for (std::size_t i = 0; i < coords_.size(); ++i)
      if (coords_[i].name == n) return i;
    return std::nullopt;
  }

  [[nodiscard]] std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(coords_.size());
    for (const auto& c : coords_) out.push_back(c.name);
    return out;
  }

  /// Periodic coordinates reduced into [lo, hi).
  [[nodiscard]] Point reduce(std::span<const double> p) const {
    Point out(p.begin(), p.end());
    for (std::size_t i = 0; i < coords_.size(); ++i) {
      const auto& c = coords_[i];
      if (!c.periodic) continue;
      double v = std::fmod(out[i] - c.lo, c.period());
      if (v < 0.0) v += c.period();
      if (v >= c.period()) v = 0.0;
      out[i] = c.lo + v;
    }
    return out;
  }

  /// Description of the first violated domain constraint, if any.
  [[nodiscard]] std::optional<std::string> domain_violation(std::span<const double> p, double slack = 1e-12) const {
    if (p.size() != coords_.size()) return "point has " + std::to_string(p.size()) + " components, chart '" + name_ +
                                           "' has " + std::to_string(coords_.size());
    for (std::size_t i = 0; i < coords_.size(); ++i) {
      const auto& c = coords_[i];
      if (!std::isfinite(p[i])) return "coordinate '" + c.name + "' is not finite";
      if (c.periodic) continue;
      if (p[i] < c.lo - slack || p[i] > c.hi + slack) {
        std::ostringstream os;
        os << "coordinate '" << c.name << "' = " << p[i] << " outside [" << c.lo << ", " << c.hi << "]";
        return os.str();
      }
    }
    if (disc_) {
      const double a = p[disc_->first];
      const double b = p[disc_->second];
      const double R = disc_->radius;
      if (a * a + b * b > R * R * (1.0 + slack) + slack) {
        std::ostringstream os;
        os << coords_[disc_->first].name << "^2 + " << coords_[disc_->second].name << "^2 = " << a * a + b * b
           << " exceeds " << R * R;
        return os.str();
      }
    }
    return std::nullopt;
  }

  friend bool operator==(const Chart& a, const Chart& b) {
    if (a.name_ != b.name_ || a.coords_.size() != b.coords_.size()) return false;
    for (std::size_t i = 0; i < a.coords_.size(); ++i)
      if (a.coords_[i].name != b.coords_[i].name) return false;
    return true;
  }

 private:
  std::string name_;
  std::vector<Coordinate> coords_;
  std::optional<DiscConstraint> disc_;
};

using ChartPtr = std::shared_ptr<const Chart>;

inline bool same_chart(const ChartPtr& a, const ChartPtr& b) { return a == b || (a && b && *a == *b); }

/// The model spaces used throughout the lab.
namespace charts {

/// Solid torus D^2 x S^1 in Cartesian disc coordinates (x, y, z).
inline ChartPtr solid_torus() {
  static const auto c = std::make_shared<const Chart>(
      "solid_torus",
      std::vector<Coordinate>{Coordinate::interval("x", -1, 1), Coordinate::interval("y", -1, 1),
                              Coordinate::circle("z")},
      DiscConstraint{0, 1, 1.0});
  return c;
}

/// Solid torus in polar coordinates (r, theta, z).
inline ChartPtr solid_torus_polar() {
  static const auto c = std::make_shared<const Chart>(
      "solid_torus_polar",
      std::vector<Coordinate>{Coordinate::radius("r"), Coordinate::circle("theta"), Coordinate::circle("z")});
  return c;
}

/// M_leg = D^2 x S^1 x S^1 with coordinates (x, y, z, t).
inline ChartPtr m_leg() {
  static const auto c = std::make_shared<const Chart>(
      "m_leg",
      std::vector<Coordinate>{Coordinate::interval("x", -1, 1), Coordinate::interval("y", -1, 1),
                              Coordinate::circle("z"), Coordinate::circle("t")},
      DiscConstraint{0, 1, 1.0});
  return c;
}

inline ChartPtr m_leg_polar() {
  static const auto c = std::make_shared<const Chart>(
      "m_leg_polar", std::vector<Coordinate>{Coordinate::radius("r"), Coordinate::circle("theta"),
                                             Coordinate::circle("z"), Coordinate::circle("t")});
  return c;
}

/// The annulus S = [0,1] x S^1 with coordinates (r, t).
inline ChartPtr annulus() {
  static const auto c = std::make_shared<const Chart>(
      "annulus", std::vector<Coordinate>{Coordinate::interval("r", 0, 1), Coordinate::circle("t")});
  return c;
}

/// The closed unit disc (x, y).
inline ChartPtr disc() {
  static const auto c = std::make_shared<const Chart>(
      "disc", std::vector<Coordinate>{Coordinate::interval("x", -1, 1), Coordinate::interval("y", -1, 1)},
      DiscConstraint{0, 1, 1.0});
  return c;
}

}  // namespace charts

// ---------------------------------------------------------------------------
// Sampling

/// splitmix64-seeded xoshiro256**; platform independent, unlike the
/// standard distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0x5eedULL) {
    std::uint64_t x = seed;
    for (auto& s : state_) {
      x += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      s = z ^ (z >> 31);
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4]{};
};

/// Sample counts per coordinate plus the polar exclusion radius.
struct Sampling {
  std::vector<std::size_t> counts;
  double polar_exclusion = 1.0 / 32.0;
  /// Optional distinguished values merged into non-disc axes (per coordinate).
  std::vector<std::vector<double>> extra;
};

namespace detail {

inline std::vector<double> axis_samples(const Coordinate& c, std::size_t n, double eps0) {
  std::vector<double> v(n);
  if (c.periodic) {
    for (std::size_t k = 0; k < n; ++k) v[k] = c.lo + c.period() * static_cast<double>(k) / static_cast<double>(n);
    return v;
  }
  const double lo = c.polar_radius ? std::max(c.lo, eps0) : c.lo;
  for (std::size_t k = 0; k < n; ++k)
    v[k] = n == 1 ? lo : lo + (c.hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  return v;
}

}  // namespace detail

/// Visits every point of the tensor grid described by `s` over `chart`.
/// Disc-constrained coordinate pairs are sampled on polar rings
/// r in [eps0, R] (counts of the pair give radii x angles) plus a small
/// Cartesian patch covering the core r < eps0.
inline void for_each_grid_point(const Chart& chart, const Sampling& s, const std::function<void(const Point&)>& fn) {
  const std::size_t n = chart.dim();
  if (s.counts.size() != n)
    throw std::invalid_argument("grid has " + std::to_string(s.counts.size()) + " counts for a " +
                                std::to_string(n) + "-dimensional chart");
  for (auto c : s.counts)
    if (c < 2) throw std::invalid_argument("degenerate grid: every coordinate needs at least 2 samples");
  if (!(s.polar_exclusion > 0.0)) throw std::invalid_argument("degenerate grid: polar exclusion must be positive");

  // Each "axis" is a list of partial assignments.
  struct Axis {
    std::vector<std::size_t> slots;
    std::vector<std::vector<double>> values;
  };
  std::vector<Axis> axes;
  const auto& disc = chart.disc();
  for (std::size_t i = 0; i < n; ++i) {
    if (disc && i == disc->second) continue;
    if (disc && i == disc->first) {
      Axis ax;
      ax.slots = {disc->first, disc->second};
      const double R = disc->radius;
      const double e0 = s.polar_exclusion * R;
      const std::size_t nr = s.counts[disc->first];
      const std::size_t na = s.counts[disc->second];
      for (std::size_t k = 0; k < nr; ++k) {
        const double r = e0 + (R - e0) * static_cast<double>(k) / static_cast<double>(nr - 1);
        for (std::size_t j = 0; j < na; ++j) {
          const double a = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(na);
          ax.values.push_back({r * std::cos(a), r * std::sin(a)});
        }
      }
      for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b) ax.values.push_back({0.5 * e0 * a, 0.5 * e0 * b});
      axes.push_back(std::move(ax));
      continue;
    }
    Axis ax;
    ax.slots = {i};
    auto vals = detail::axis_samples(chart.coord(i), s.counts[i], s.polar_exclusion);
    if (i < s.extra.size()) {
      const auto& c = chart.coord(i);
      for (double v : s.extra[i])
        if (c.periodic || (v >= c.lo && v <= c.hi)) vals.push_back(v);
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    }
    for (double v : vals) ax.values.push_back({v});
    axes.push_back(std::move(ax));
  }

  Point p(n, 0.0);
  std::vector<std::size_t> idx(axes.size(), 0);
  while (true) {
    for (std::size_t a = 0; a < axes.size(); ++a)
      for (std::size_t k = 0; k < axes[a].slots.size(); ++k) p[axes[a].slots[k]] = axes[a].values[idx[a]][k];
    fn(p);
    std::size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++idx[a] < axes[a].values.size()) break;
      idx[a] = 0;
      if (a == 0) return;
    }
    if (axes.empty()) return;
  }
}

/// Uniform random point in the chart domain (area-uniform on discs,
/// polar radii drawn from [eps0, hi]).
inline Point random_point(const Chart& chart, Rng& rng, double eps0 = 1.0 / 32.0) {
  Point p(chart.dim());
  for (std::size_t i = 0; i < chart.dim(); ++i) {
    const auto& c = chart.coord(i);
    if (c.periodic)
      p[i] = rng.uniform(c.lo, c.hi);
    else if (c.polar_radius)
      p[i] = rng.uniform(std::max(c.lo, eps0), c.hi);
    else
      p[i] = rng.uniform(c.lo, c.hi);
  }
  if (const auto& d = chart.disc()) {
    const double r = d->radius * std::sqrt(rng.uniform());
    const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
    p[d->first] = r * std::cos(a);
    p[d->second] = r * std::sin(a);
  }
  return p;
}

inline std::vector<Point> random_points(const Chart& chart, std::size_t n, std::uint64_t seed,
                                        double eps0 = 1.0 / 32.0) {
  Rng rng(seed);
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(random_point(chart, rng, eps0));
  return out;
}

}  // namespace contactlab
