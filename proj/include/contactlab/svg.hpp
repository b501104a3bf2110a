#pragma once

// Standalone SVG figures with their numeric series as CSV.

#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "contactlab/lutz.hpp"
#include "contactlab/report.hpp"
#include "contactlab/turbulisation.hpp"

namespace contactlab::plot {

using std::numbers::pi;

inline const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids{"fig1-compression", "fig2-linefields", "lutz-profile", "ot-disc"};
  return ids;
}

struct Figure {
  std::string id;
  std::string svg;
  std::string csv;
};

/// Panel parameters of the line-field figure.
inline const std::array<double, 4>& linefield_panels() {
  static const std::array<double, 4> s{1.0, 0.66, 0.33, 0.0};
  return s;
}

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Maps a data box onto a pixel box, y pointing up.
struct Frame {
  double x0, x1, y0, y1;       // data
  double px, py, pw, ph;       // pixels: left, top, width, height
  [[nodiscard]] double X(double x) const { return px + (x - x0) / (x1 - x0) * pw; }
  [[nodiscard]] double Y(double y) const { return py + ph - (y - y0) / (y1 - y0) * ph; }
};

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

class Svg {
 public:
  Svg(double w, double h) {
    os_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(h)
        << "\" viewBox=\"0 0 " << num(w) << ' ' << num(h) << "\">\n"
        << "<defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"9\" refY=\"5\" markerWidth=\"6\" "
           "markerHeight=\"6\" orient=\"auto\"><path d=\"M0,0 L10,5 L0,10 z\" fill=\"#1f4e9c\"/></marker></defs>\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }

  void polyline(const Frame& f, const std::vector<std::array<double, 2>>& pts, const std::string& style) {
    os_ << "<polyline fill=\"none\" " << style << " points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) os_ << (i ? " " : "") << num(f.X(pts[i][0])) << ',' << num(f.Y(pts[i][1]));
    os_ << "\"/>\n";
  }

  void line(double x1, double y1, double x2, double y2, const std::string& style) {
    os_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\"" << num(y2) << "\" "
        << style << "/>\n";
  }

  void circle(double cx, double cy, double r, const std::string& style) {
    os_ << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(r) << "\" " << style << "/>\n";
  }

  void text(double x, double y, const std::string& s, const std::string& extra = {}) {
    os_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-family=\"sans-serif\" font-size=\"12\" " << extra
        << '>' << escape(s) << "</text>\n";
  }

  void box(const Frame& f) {
    os_ << "<rect x=\"" << num(f.px) << "\" y=\"" << num(f.py) << "\" width=\"" << num(f.pw) << "\" height=\""
        << num(f.ph) << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
  }

  void raw(const std::string& s) { os_ << s; }

  [[nodiscard]] std::string str() const { return os_.str() + "</svg>\n"; }

 private:
  std::ostringstream os_;
};

// Segment of pixel length `len` centred at (cx, cy) along the pixel direction (dx, dy).
inline std::array<double, 4> stroke(double cx, double cy, double dx, double dy, double len) {
  const double n = std::hypot(dx, dy);
  if (n == 0.0) return {cx, cy, cx, cy};
  dx *= 0.5 * len / n;
  dy *= 0.5 * len / n;
  return {cx - dx, cy - dy, cx + dx, cy + dy};
}

}  // namespace detail

/// Graph of f on [0, 1] with the diagonal; data straight from the table.
inline Figure fig1_compression(const LabConfig& cfg) {
  const turbulisation::CompressionProfile p(cfg.profile);
  const detail::Frame fr{0, 1, 0, 1, 60, 30, 420, 420};
  detail::Svg svg(520, 510);
  svg.box(fr);
  svg.polyline(fr, {{0, 0}, {1, 1}}, "stroke=\"#999\" stroke-dasharray=\"4 4\" stroke-width=\"1\"");
  std::vector<std::array<double, 2>> pts;
  std::ostringstream csv;
  csv << "r,f\n";
  for (std::size_t i = 0; i < p.table_r().size(); ++i) {
    pts.push_back({p.table_r()[i], p.table_f()[i]});
    csv << detail::exact(p.table_r()[i]) << ',' << detail::exact(p.table_f()[i]) << '\n';
  }
  svg.polyline(fr, pts, "stroke=\"black\" stroke-width=\"1.5\"");
  for (double r : {p.lo(), p.hi()})
    svg.line(fr.X(r), fr.Y(0), fr.X(r), fr.Y(0) + 6, "stroke=\"#444\"");
  svg.text(fr.X(p.lo()) - 10, fr.Y(0) + 20, "1/2");
  svg.text(fr.X(p.hi()) - 10, fr.Y(0) + 20, "2/3");
  svg.text(fr.X(1) - 8, fr.Y(0) + 20, "r");
  svg.text(fr.px - 25, fr.Y(1) + 4, "f");
  return {"fig1-compression", svg.str(), csv.str()};
}

/// Four panels s = 1, 0.66, 0.33, 0 over the annulus, t across and r up.
/// F_s: solid strokes; L: dashed strokes with arrowheads.
inline Figure fig2_linefields(const LabConfig& cfg) {
  const turbulisation::CompressionProfile p(cfg.profile);
  constexpr int kCols = 12;
  constexpr int kRows = 12;
  detail::Svg svg(4 * 260 + 40, 330);
  std::ostringstream csv;
  csv << "s,t,r,F_r,F_t,L_r,L_t\n";
  std::vector<double> rows;
  for (int j = 0; j < kRows; ++j) rows.push_back((j + 0.5) / kRows);
  rows.push_back(p.r_star());
  int panel = 0;
  for (double s : linefield_panels()) {
    const auto [F, L] = turbulisation::base_line_fields(s, p);
    const std::array<expr::Expr, 4> outs{F[0], F[1], L[0], L[1]};
    const expr::Program prog(outs, {"r", "t"});
    const detail::Frame fr{0, 2 * pi, 0, 1, 40.0 + 260.0 * panel, 30, 230, 250};
    svg.box(fr);
    svg.text(fr.px + 90, 20, "s = " + detail::num(s).substr(0, 4));
    for (double r : rows) {
      for (int i = 0; i < kCols; ++i) {
        const double t = 2 * pi * (i + 0.5) / kCols;
        std::array<double, 4> v{};
        prog.run(std::array<double, 2>{r, t}, {}, v);
        csv << detail::exact(s) << ',' << detail::exact(t) << ',' << detail::exact(r) << ',' << detail::exact(v[0])
            << ',' << detail::exact(v[1]) << ',' << detail::exact(v[2]) << ',' << detail::exact(v[3]) << '\n';
        const double cx = fr.X(t);
        const double cy = fr.Y(r);
        // Pixel direction of a r-d/dr + b d/dt.
        auto pix = [&](double ar, double at) {
          return std::array<double, 2>{at * fr.pw / (2 * pi), -ar * fr.ph};
        };
        const auto df = pix(v[0], v[1]);
        const auto sf = detail::stroke(cx, cy, df[0], df[1], 14);
        svg.line(sf[0], sf[1], sf[2], sf[3], "stroke=\"black\" stroke-width=\"1.4\"");
        const auto dl = pix(v[2], v[3]);
        const auto sl = detail::stroke(cx, cy, dl[0], dl[1], 12);
        svg.line(sl[0], sl[1], sl[2], sl[3],
                 "stroke=\"#1f4e9c\" stroke-width=\"1\" stroke-dasharray=\"2 2\" marker-end=\"url(#arrow)\"");
      }
    }
    svg.text(fr.X(2 * pi) - 8, fr.Y(0) + 16, "t");
    svg.text(fr.px - 14, fr.Y(1) + 10, "r");
    ++panel;
  }
  return {"fig2-linefields", svg.str(), csv.str()};
}

/// The plane curve r -> (f(r), g(r)) with the distinguished radii marked.
inline Figure lutz_profile_figure(const LabConfig& cfg) {
  const lutz::LutzProfile p(cfg.delta);
  const lutz::RadialEvaluator ev({p.f(), p.g()});
  auto radii = lutz::radius_grid(0.0, 1.0, 2001, p.joints());
  for (double m : p.marks()) radii.push_back(m);
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());

  std::vector<std::array<double, 2>> pts;
  double lo_f = 0, hi_f = 0, lo_g = 0, hi_g = 0;
  std::ostringstream csv;
  csv << "r,f,g\n";
  for (double r : radii) {
    const auto v = ev(r);
    pts.push_back({v[0], v[1]});
    lo_f = std::min(lo_f, v[0]);
    hi_f = std::max(hi_f, v[0]);
    lo_g = std::min(lo_g, v[1]);
    hi_g = std::max(hi_g, v[1]);
    csv << detail::exact(r) << ',' << detail::exact(v[0]) << ',' << detail::exact(v[1]) << '\n';
  }
  const double m = 0.1 * std::max(hi_f - lo_f, hi_g - lo_g);
  const double span = std::max(hi_f - lo_f, hi_g - lo_g) + 2 * m;
  const double cf = 0.5 * (lo_f + hi_f);
  const double cg = 0.5 * (lo_g + hi_g);
  const detail::Frame fr{cf - span / 2, cf + span / 2, cg - span / 2, cg + span / 2, 40, 30, 440, 440};
  detail::Svg svg(520, 510);
  svg.box(fr);
  svg.line(fr.X(fr.x0), fr.Y(0), fr.X(fr.x1), fr.Y(0), "stroke=\"#999\"");
  svg.line(fr.X(0), fr.Y(fr.y0), fr.X(0), fr.Y(fr.y1), "stroke=\"#999\"");
  svg.polyline(fr, pts, "stroke=\"black\" stroke-width=\"1.5\"");
  const char* labels[] = {"delta", "1/4", "1/2", "3/4", "1-delta"};
  const auto marks = p.marks();
  for (std::size_t i = 0; i < marks.size(); ++i) {
    const auto v = ev(marks[i]);
    svg.circle(fr.X(v[0]), fr.Y(v[1]), 3.5, "fill=\"#c0392b\"");
    svg.text(fr.X(v[0]) + 6, fr.Y(v[1]) + (i + 1 == marks.size() ? 16 : -6), labels[i], "fill=\"#c0392b\"");
  }
  svg.text(fr.X(fr.x1) - 12, fr.Y(0) - 6, "f");
  svg.text(fr.X(0) + 6, fr.Y(fr.y1) + 14, "g");
  return {"lutz-profile", svg.str(), csv.str()};
}

/// Characteristic directions on {z = z0, r <= 1/2}; tangency points in red.
inline Figure ot_disc_figure(const LabConfig& cfg) {
  const lutz::LutzProfile p(cfg.delta);
  const auto m = p.cartesian_model();
  const auto d = lutz::flat_disc(m.chart(), 0.5, cfg.z0);
  const auto fol = lutz::char_foliation_on_disc(m, d, 16, 48);
  const detail::Frame fr{-0.55, 0.55, -0.55, 0.55, 30, 30, 440, 440};
  detail::Svg svg(500, 500);
  svg.circle(fr.X(0), fr.Y(0), fr.X(0.5) - fr.X(0), "fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2.5\"");
  std::ostringstream csv;
  csv << "rho,phi,u,v,dir_u,dir_v,tangency\n";
  for (const auto& s : fol.samples) {
    csv << detail::exact(s.rho) << ',' << detail::exact(s.phi) << ',' << detail::exact(s.u) << ','
        << detail::exact(s.v) << ',' << detail::exact(s.dir_u) << ',' << detail::exact(s.dir_v) << ','
        << (s.tangency ? 1 : 0) << '\n';
    if (s.tangency) {
      svg.circle(fr.X(s.u), fr.Y(s.v), 2.5, "fill=\"#c0392b\"");
    } else {
      const auto st = detail::stroke(fr.X(s.u), fr.Y(s.v), s.dir_u, -s.dir_v, 9);
      svg.line(st[0], st[1], st[2], st[3], "stroke=\"black\" stroke-width=\"1\"");
    }
  }
  svg.text(10, 20, "z = " + detail::num(cfg.z0) + ", r <= 1/2; red: tangency locus");
  return {"ot-disc", svg.str(), csv.str()};
}

inline Figure render(const std::string& id, const LabConfig& cfg) {
  if (id == "fig1-compression") return fig1_compression(cfg);
  if (id == "fig2-linefields") return fig2_linefields(cfg);
  if (id == "lutz-profile") return lutz_profile_figure(cfg);
  if (id == "ot-disc") return ot_disc_figure(cfg);
  std::string known;
  for (const auto& k : figure_ids()) known += (known.empty() ? "" : ", ") + k;
  throw std::invalid_argument("unknown figure id '" + id + "' (known: " + known + ")");
}

}  // namespace contactlab::plot
