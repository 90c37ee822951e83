#ifndef VTUBE_SVG_HPP
#define VTUBE_SVG_HPP

#include "vtube/io.hpp"
#include "vtube/sim.hpp"
#include "vtube/tube.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

namespace vtube {

/// World-to-image mapping: sx = margin + (x - x0) * scale, sy = margin + (y0 - y) * scale.
struct SvgTransform {
  double scale = 1.0;
  double x0 = 0.0;
  double y0 = 0.0;
  double margin = 20.0;

  Vec2 to_svg(const Vec2& p) const { return {margin + (p.x() - x0) * scale, margin + (y0 - p.y()) * scale}; }
  Vec2 to_world(const Vec2& s) const { return {x0 + (s.x() - margin) / scale, y0 - (s.y() - margin) / scale}; }
};

struct Bounds {
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -std::numeric_limits<double>::infinity();
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();

  void add(const Vec2& p, double pad = 0.0) {
    xmin = std::min(xmin, p.x() - pad);
    xmax = std::max(xmax, p.x() + pad);
    ymin = std::min(ymin, p.y() - pad);
    ymax = std::max(ymax, p.y() + pad);
  }
  bool empty() const { return !(xmin <= xmax); }
};

inline std::vector<Vec2> boundary_polyline(const VirtualTube& tube, double sign, int samples = 400) {
  std::vector<Vec2> out;
  const int n = tube.closed() ? samples : samples + 1;
  for (int k = 0; k < n; ++k) {
    const double l = tube.length() * k / samples;
    const auto [p_d, p_u] = tube.cross_section_endpoints(l);
    out.push_back(sign > 0 ? p_u : p_d);
  }
  return out;
}

inline Bounds log_bounds(const SimulationLog& log, const VirtualTube* tube) {
  Bounds b;
  for (const auto& rec : log.records) {
    for (const auto& r : rec.robots) b.add(r.position, log.r_s);
  }
  if (tube != nullptr) {
    for (double s : {-1.0, 1.0}) {
      for (const auto& p : boundary_polyline(*tube, s)) b.add(p);
    }
  }
  if (b.empty()) b.add(Vec2::Zero(), 1.0);
  return b;
}

inline SvgTransform fit_transform(const Bounds& b, double width_px = 800.0, double margin = 20.0) {
  SvgTransform t;
  const double span = std::max({b.xmax - b.xmin, b.ymax - b.ymin, 1e-9});
  t.scale = (width_px - 2.0 * margin) / span;
  t.x0 = b.xmin;
  t.y0 = b.ymax;
  t.margin = margin;
  return t;
}

namespace detail {

inline std::string fmt(double v) { return format_double(v); }

inline std::string points_attr(const std::vector<Vec2>& pts, const SvgTransform& t) {
  std::string s;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const Vec2 q = t.to_svg(pts[k]);
    if (k) s += ' ';
    s += fmt(q.x()) + "," + fmt(q.y());
  }
  return s;
}

}  // namespace detail

/// One frame: tube outline, robot discs of radius r_s, velocity arrows.
inline std::string render_snapshot(const SimulationLog& log, std::size_t record, const VirtualTube* tube,
                                   const SvgTransform& t, const Bounds& b) {
  using detail::fmt;
  const StepRecord& rec = log.records.at(record);
  const double w = 2.0 * t.margin + (b.xmax - b.xmin) * t.scale;
  const double h = 2.0 * t.margin + (b.ymax - b.ymin) * t.scale;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w) << "\" height=\"" << fmt(h)
     << "\" data-scale=\"" << fmt(t.scale) << "\" data-x0=\"" << fmt(t.x0) << "\" data-y0=\"" << fmt(t.y0)
     << "\" data-margin=\"" << fmt(t.margin) << "\" data-t=\"" << fmt(rec.time) << "\">\n";
  os << "<defs><marker id=\"arrow\" markerWidth=\"6\" markerHeight=\"6\" refX=\"5\" refY=\"3\" orient=\"auto\">"
        "<path d=\"M0,0 L6,3 L0,6 z\" fill=\"#1f5fbf\"/></marker></defs>\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (tube != nullptr) {
    const char* tag = tube->closed() ? "polygon" : "polyline";
    for (double s : {-1.0, 1.0}) {
      os << '<' << tag << " class=\"boundary\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\""
         << detail::points_attr(boundary_polyline(*tube, s), t) << "\"/>\n";
    }
    if (!tube->closed()) {
      for (double l : {0.0, tube->length()}) {
        const auto [p_d, p_u] = tube->cross_section_endpoints(l);
        const Vec2 a = t.to_svg(p_d);
        const Vec2 c = t.to_svg(p_u);
        os << "<line class=\"terminal\" x1=\"" << fmt(a.x()) << "\" y1=\"" << fmt(a.y()) << "\" x2=\"" << fmt(c.x())
           << "\" y2=\"" << fmt(c.y()) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
      }
    }
  }
  for (std::size_t k = 0; k < rec.robots.size(); ++k) {
    const RobotRecord& r = rec.robots[k];
    if (!r.active) continue;
    const int id = k < log.robot_ids.size() ? log.robot_ids[k] : static_cast<int>(k);
    const Vec2 c = t.to_svg(r.position);
    os << "<circle class=\"robot\" data-id=\"" << id << "\" cx=\"" << fmt(c.x()) << "\" cy=\"" << fmt(c.y())
       << "\" r=\"" << fmt(log.r_s * t.scale) << "\" fill=\"#f2b134\" fill-opacity=\"0.6\" stroke=\"#8a5a00\"/>\n";
    if (r.velocity.norm() > 0.0) {
      const Vec2 e = t.to_svg(r.position + r.velocity);
      os << "<line class=\"velocity\" x1=\"" << fmt(c.x()) << "\" y1=\"" << fmt(c.y()) << "\" x2=\"" << fmt(e.x())
         << "\" y2=\"" << fmt(e.y()) << "\" stroke=\"#1f5fbf\" marker-end=\"url(#arrow)\"/>\n";
    }
  }
  char label[64];
  std::snprintf(label, sizeof label, "t = %.2f s", rec.time);
  os << "<text x=\"" << fmt(t.margin) << "\" y=\"" << fmt(t.margin * 0.8) << "\" font-size=\"14\">" << label
     << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

struct DiscCenter {
  int id = 0;
  Vec2 center = Vec2::Zero();
};

/// Parses robot discs back out of a snapshot and maps them to world
/// coordinates using the transform stored on the root element.
inline std::vector<DiscCenter> parse_snapshot_discs(const std::string& svg) {
  auto attr = [&](const std::string& name) {
    const std::regex re(" " + name + "=\"([^\"]*)\"");
    std::smatch m;
    if (!std::regex_search(svg, m, re)) throw ParseError("svg: missing attribute " + name);
    return parse_double(m[1].str(), "svg:" + name);
  };
  SvgTransform t;
  t.scale = attr("data-scale");
  t.x0 = attr("data-x0");
  t.y0 = attr("data-y0");
  t.margin = attr("data-margin");
  std::vector<DiscCenter> out;
  const std::regex disc("<circle class=\"robot\" data-id=\"(-?[0-9]+)\" cx=\"([^\"]*)\" cy=\"([^\"]*)\"");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), disc); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    DiscCenter d;
    d.id = std::stoi(m[1].str());
    d.center = t.to_world({parse_double(m[2].str(), "svg:cx"), parse_double(m[3].str(), "svg:cy")});
    out.push_back(d);
  }
  return out;
}

struct Series {
  std::string name;
  std::string color;
  std::vector<double> t;
  std::vector<double> y;
  bool dashed = false;
};

/// Simple line chart. Non-finite samples break the line.
inline std::string render_series(const std::string& title, const std::string& y_label,
                                 const std::vector<Series>& series) {
  using detail::fmt;
  const double W = 720.0, H = 400.0, left = 70.0, right = 160.0, top = 40.0, bottom = 50.0;
  double t0 = INFINITY, t1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (std::size_t k = 0; k < s.t.size(); ++k) {
      if (!std::isfinite(s.y[k])) continue;
      t0 = std::min(t0, s.t[k]);
      t1 = std::max(t1, s.t[k]);
      y0 = std::min(y0, s.y[k]);
      y1 = std::max(y1, s.y[k]);
    }
  }
  if (!(t0 <= t1)) t0 = 0.0, t1 = 1.0, y0 = 0.0, y1 = 1.0;
  if (t1 - t0 < 1e-12) t1 = t0 + 1.0;
  y0 = std::min(y0, 0.0);
  if (y1 - y0 < 1e-12) y1 = y0 + 1.0;
  y1 += 0.05 * (y1 - y0);
  auto X = [&](double t) { return left + (t - t0) / (t1 - t0) * (W - left - right); };
  auto Y = [&](double y) { return H - bottom - (y - y0) / (y1 - y0) * (H - top - bottom); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left << "\" y=\"24\" font-size=\"16\">" << title << "</text>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\"" << H - bottom
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << H - bottom
     << "\" stroke=\"black\"/>\n";
  char buf[64];
  for (int k = 0; k <= 4; ++k) {
    const double tv = t0 + (t1 - t0) * k / 4.0;
    const double yv = y0 + (y1 - y0) * k / 4.0;
    std::snprintf(buf, sizeof buf, "%.3g", tv);
    os << "<text x=\"" << fmt(X(tv)) << "\" y=\"" << H - bottom + 18 << "\" font-size=\"11\" text-anchor=\"middle\">"
       << buf << "</text>\n";
    std::snprintf(buf, sizeof buf, "%.3g", yv);
    os << "<text x=\"" << left - 6 << "\" y=\"" << fmt(Y(yv) + 4) << "\" font-size=\"11\" text-anchor=\"end\">" << buf
       << "</text>\n";
  }
  os << "<text x=\"" << fmt((left + W - right) / 2) << "\" y=\"" << H - 12
     << "\" font-size=\"12\" text-anchor=\"middle\">t (s)</text>\n";
  os << "<text x=\"16\" y=\"" << fmt((top + H - bottom) / 2) << "\" font-size=\"12\" transform=\"rotate(-90 16 "
     << fmt((top + H - bottom) / 2) << ")\" text-anchor=\"middle\">" << y_label << "</text>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const Series& s = series[si];
    std::string pts;
    auto flush = [&]() {
      if (pts.empty()) return;
      os << "<polyline class=\"series\" data-name=\"" << s.name << "\" fill=\"none\" stroke=\"" << s.color
         << "\" stroke-width=\"1.5\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"" << pts
         << "\"/>\n";
      pts.clear();
    };
    for (std::size_t k = 0; k < s.t.size(); ++k) {
      if (!std::isfinite(s.y[k])) {
        flush();
        continue;
      }
      if (!pts.empty()) pts += ' ';
      pts += fmt(X(s.t[k])) + "," + fmt(Y(s.y[k]));
    }
    flush();
    const double ly = top + 16.0 * static_cast<double>(si);
    os << "<line x1=\"" << W - right + 10 << "\" y1=\"" << fmt(ly) << "\" x2=\"" << W - right + 30 << "\" y2=\""
       << fmt(ly) << "\" stroke=\"" << s.color << "\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
    os << "<text x=\"" << W - right + 36 << "\" y=\"" << fmt(ly + 4) << "\" font-size=\"11\">" << s.name
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

/// Indices of the records drawn as snapshots: up to `count`, evenly spaced,
/// always including the first and the last.
inline std::vector<std::size_t> snapshot_indices(std::size_t records, std::size_t count = 6) {
  std::vector<std::size_t> out;
  if (records == 0) return out;
  if (records == 1 || count <= 1) return {0};
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t idx = static_cast<std::size_t>(
        std::llround(static_cast<double>(k) * static_cast<double>(records - 1) / static_cast<double>(count - 1)));
    if (out.empty() || out.back() != idx) out.push_back(idx);
  }
  return out;
}

inline std::string snapshot_name(double time) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "snapshot_t%07.2f.svg", time);
  return buf;
}

namespace detail {

inline Series metric_series(const SimulationLog& log, const std::string& name, const std::string& color,
                            double MetricsRecord::*field) {
  Series s{name, color, {}, {}};
  for (const auto& rec : log.records) {
    s.t.push_back(rec.time);
    s.y.push_back(rec.metrics.*field);
  }
  return s;
}

inline Series constant_series(const SimulationLog& log, const std::string& name, double value) {
  Series s{name, "#888888", {}, {}, true};
  if (log.records.empty()) return s;
  s.t = {log.records.front().time, log.records.back().time};
  s.y = {value, value};
  return s;
}

}  // namespace detail

/// Writes snapshot and series plots for a run. When `paired` is given it is
/// the baseline arm of a comparison and amd.svg is also written.
inline std::vector<std::filesystem::path> render_plots(const SimulationLog& log, const std::filesystem::path& dir,
                                                       const VirtualTube* tube,
                                                       const SimulationLog* paired = nullptr,
                                                       bool series_plots = true) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const Bounds b = log_bounds(log, tube);
  const SvgTransform t = fit_transform(b);
  for (std::size_t idx : snapshot_indices(log.records.size())) {
    const auto path = dir / snapshot_name(log.records[idx].time);
    write_text_file(path, render_snapshot(log, idx, tube, t, b));
    written.push_back(path);
  }
  if (!series_plots) return written;
  {
    std::vector<Series> s{detail::metric_series(log, "min pairwise", "#c0392b", &MetricsRecord::min_pairwise_distance),
                          detail::metric_series(log, "min boundary", "#2471a3", &MetricsRecord::min_boundary_distance),
                          detail::constant_series(log, "2 r_s", 2.0 * log.r_s),
                          detail::constant_series(log, "r_s", log.r_s)};
    const auto path = dir / "distances.svg";
    write_text_file(path, render_series("Minimum distances", "distance (m)", s));
    written.push_back(path);
  }
  {
    std::vector<Series> s{detail::metric_series(log, to_string(log.mode), "#7d3c98", &MetricsRecord::density_error_l2)};
    if (paired != nullptr) {
      s.push_back(detail::metric_series(*paired, to_string(paired->mode), "#229954", &MetricsRecord::density_error_l2));
    }
    const auto path = dir / "density_error.svg";
    write_text_file(path, render_series("Density tracking error (L2)", "error (1/m)", s));
    written.push_back(path);
  }
  if (paired != nullptr) {
    std::vector<Series> s{detail::metric_series(log, to_string(log.mode), "#c0392b", &MetricsRecord::amd),
                          detail::metric_series(*paired, to_string(paired->mode), "#2471a3", &MetricsRecord::amd)};
    const auto path = dir / "amd.svg";
    write_text_file(path, render_series("Average minimum distance", "AMD (m)", s));
    written.push_back(path);
  }
  return written;
}

}  // namespace vtube

#endif  // VTUBE_SVG_HPP
