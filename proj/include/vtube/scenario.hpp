#ifndef VTUBE_SCENARIO_HPP
#define VTUBE_SCENARIO_HPP

#include "vtube/common.hpp"
#include "vtube/controller.hpp"
#include "vtube/curve.hpp"
#include "vtube/density.hpp"
#include "vtube/sim.hpp"
#include "vtube/tube.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace vtube {

using Json = nlohmann::json;

/// A fully validated run description. `resolved` echoes every field with
/// defaults filled in; the fingerprint is a digest of it.
struct Scenario {
  std::string name;
  std::shared_ptr<const VirtualTube> tube;
  SwarmState initial;
  ControllerParams params;
  double dt = 0.01;
  double t_end = 30.0;
  std::string mode = "full";  // full | baseline | compare
  DensityGrid grid;
  bool density_metrics = true;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  Json resolved;
  std::string fingerprint;

  SimulationSettings settings(ControlMode control) const {
    return SimulationSettings{control, dt, t_end, grid, density_metrics};
  }
};

/// 64-bit FNV-1a digest, hex encoded.
inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

inline const Json& require(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(path + "/" + key + ": missing field");
  return j.at(key);
}

inline double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError(path + ": expected a number");
  return j.get<double>();
}

inline double number_or(const Json& j, const std::string& key, double fallback, const std::string& path) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return number(j.at(key), path + "/" + key);
}

inline Vec2 point(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw ParseError(path + ": expected [x, y]");
  return {number(j[0], path + "/0"), number(j[1], path + "/1")};
}

inline Json point_json(const Vec2& p) { return Json::array({p.x(), p.y()}); }

inline std::string string_or(const Json& j, const std::string& key, const std::string& fallback,
                             const std::string& path) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) throw ParseError(path + "/" + key + ": expected a string");
  return j.at(key).get<std::string>();
}

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double unit_uniform(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

}  // namespace detail

struct ParsedTube {
  std::shared_ptr<const VirtualTube> tube;
  Json resolved;
  std::optional<double> regularity_spacing;
};

/// Builds the tube from the "tube" object of a scenario. Checks shape and
/// closure only; regularity is checked by the caller.
inline ParsedTube parse_tube(const Json& j, const std::string& path = "/tube") {
  using namespace detail;
  ParsedTube out;
  Json resolved;
  const Vec2 start = j.contains("start_m") ? point(j.at("start_m"), path + "/start_m") : Vec2::Zero();
  const double heading = number_or(j, "heading_rad", 0.0, path);
  resolved["start_m"] = point_json(start);
  resolved["heading_rad"] = heading;

  const Json& segs = require(j, "segments", path);
  if (!segs.is_array() || segs.empty()) throw ParseError(path + "/segments: expected a non-empty array");
  std::vector<SegmentSpec> specs;
  Json rsegs = Json::array();
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const std::string sp = path + "/segments/" + std::to_string(k);
    const Json& s = segs[k];
    const std::string kind = string_or(s, "kind", "", sp);
    if (kind == "line") {
      const double len = number(require(s, "length_m", sp), sp + "/length_m");
      specs.emplace_back(LineSpec{len});
      rsegs.push_back({{"kind", "line"}, {"length_m", len}});
    } else if (kind == "arc") {
      const double radius = number(require(s, "radius_m", sp), sp + "/radius_m");
      const double sweep = number(require(s, "sweep_rad", sp), sp + "/sweep_rad");
      specs.emplace_back(ArcSpec{radius, sweep});
      rsegs.push_back({{"kind", "arc"}, {"radius_m", radius}, {"sweep_rad", sweep}});
    } else if (kind == "spline") {
      const Json& pts = require(s, "points_m", sp);
      if (!pts.is_array() || pts.empty()) throw ParseError(sp + "/points_m: expected a non-empty array");
      SplineSpec spline;
      Json rpts = Json::array();
      for (std::size_t i = 0; i < pts.size(); ++i) {
        spline.points.push_back(point(pts[i], sp + "/points_m/" + std::to_string(i)));
        rpts.push_back(point_json(spline.points.back()));
      }
      specs.emplace_back(std::move(spline));
      rsegs.push_back({{"kind", "spline"}, {"points_m", rpts}});
    } else {
      throw ParseError(sp + "/kind: expected \"line\", \"arc\" or \"spline\"");
    }
  }
  resolved["segments"] = rsegs;

  const Json& ws = require(j, "widths", path);
  if (!ws.is_array() || ws.empty()) throw ParseError(path + "/widths: expected a non-empty array");
  std::vector<WidthKnot> knots;
  Json rws = Json::array();
  for (std::size_t k = 0; k < ws.size(); ++k) {
    const std::string wp = path + "/widths/" + std::to_string(k);
    WidthKnot knot{number(require(ws[k], "l_m", wp), wp + "/l_m"), number(require(ws[k], "r_d_m", wp), wp + "/r_d_m"),
                   number(require(ws[k], "r_u_m", wp), wp + "/r_u_m")};
    knots.push_back(knot);
    rws.push_back({{"l_m", knot.l}, {"r_d_m", knot.r_d}, {"r_u_m", knot.r_u}});
  }
  resolved["widths"] = rws;

  const std::string topo = string_or(j, "topology", "open", path);
  if (topo != "open" && topo != "closed") throw ParseError(path + "/topology: expected \"open\" or \"closed\"");
  resolved["topology"] = topo;

  std::optional<double> extension;
  if (j.contains("extension_length_m") && !j.at("extension_length_m").is_null()) {
    extension = number(j.at("extension_length_m"), path + "/extension_length_m");
  }
  if (j.contains("regularity_spacing_m") && !j.at("regularity_spacing_m").is_null()) {
    out.regularity_spacing = number(j.at("regularity_spacing_m"), path + "/regularity_spacing_m");
    resolved["regularity_spacing_m"] = *out.regularity_spacing;
  }

  try {
    GeneratingCurve curve(start, heading, specs);
    WidthProfile widths(knots);
    out.tube = std::make_shared<const VirtualTube>(std::move(curve), std::move(widths),
                                                   topo == "closed" ? Topology::closed : Topology::open, extension);
  } catch (const DomainError& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (extension) resolved["extension_length_m"] = *extension;
  out.resolved = std::move(resolved);
  return out;
}

inline ControllerParams parse_params(const Json& j, const std::string& path, Json& resolved) {
  using namespace detail;
  ControllerParams p;
  p.k1 = number_or(j, "k1_mps", p.k1, path);
  p.k2 = number_or(j, "k2", p.k2, path);
  p.k3 = number_or(j, "k3", p.k3, path);
  p.v_max = number_or(j, "v_max_mps", p.v_max, path);
  p.r_s = number_or(j, "r_s_m", p.r_s, path);
  p.r_a = number_or(j, "r_a_m", p.r_a, path);
  p.r_t = number_or(j, "r_t_m", p.r_a - p.r_s, path);
  p.eta_min = number_or(j, "eta_min_per_s", p.eta_min, path);
  p.eta_max = number_or(j, "eta_max_per_s", p.eta_max, path);
  p.alpha0 = number_or(j, "alpha0_m2ps", p.alpha0, path);
  if (j.contains("bandwidth_m") && !j.at("bandwidth_m").is_null()) {
    p.bandwidth = number(j.at("bandwidth_m"), path + "/bandwidth_m");
  }
  p.rho_floor = number_or(j, "rho_floor_per_m2", p.rho_floor, path);
  const std::string la = string_or(j, "line_approach", "modified", path);
  if (la != "modified" && la != "original") throw ParseError(path + "/line_approach: expected modified|original");
  p.line_approach = la == "original" ? LineApproachMode::original : LineApproachMode::modified;

  resolved = {{"k1_mps", p.k1},           {"k2", p.k2},
              {"k3", p.k3},               {"v_max_mps", p.v_max},
              {"r_s_m", p.r_s},           {"r_a_m", p.r_a},
              {"r_t_m", p.r_t},           {"eta_min_per_s", p.eta_min},
              {"eta_max_per_s", p.eta_max}, {"alpha0_m2ps", p.alpha0},
              {"rho_floor_per_m2", p.rho_floor}, {"line_approach", la}};
  resolved["bandwidth_m"] = p.bandwidth ? Json(*p.bandwidth) : Json(nullptr);
  return p;
}

/// Places robots either from explicit positions or as a rows x cols block
/// aligned with the tube frame at the block centre, with optional seeded
/// uniform jitter.
inline SwarmState parse_robots(const Json& j, const VirtualTube& tube, std::uint64_t seed, Json& resolved,
                               const std::string& path = "/robots") {
  using namespace detail;
  SwarmState swarm;
  if (j.contains("positions_m")) {
    const Json& pts = j.at("positions_m");
    if (!pts.is_array() || pts.empty()) throw ParseError(path + "/positions_m: expected a non-empty array");
    Json rp = Json::array();
    for (std::size_t k = 0; k < pts.size(); ++k) {
      RobotState r;
      r.id = static_cast<int>(k);
      r.position = point(pts[k], path + "/positions_m/" + std::to_string(k));
      swarm.robots.push_back(r);
      rp.push_back(point_json(r.position));
    }
    resolved = {{"positions_m", rp}};
    return swarm;
  }
  const Json& g = require(j, "grid", path);
  const std::string gp = path + "/grid";
  const Json& rows_j = require(g, "rows", gp);
  const Json& cols_j = require(g, "cols", gp);
  if (!rows_j.is_number_integer() || !cols_j.is_number_integer()) throw ParseError(gp + ": rows/cols must be integers");
  const int rows = rows_j.get<int>();
  const int cols = cols_j.get<int>();
  if (rows <= 0 || cols <= 0) throw ParseError(gp + ": rows/cols must be positive");
  const double spacing = number(require(g, "spacing_m", gp), gp + "/spacing_m");
  const Vec2 center = point(require(g, "center_m", gp), gp + "/center_m");
  const double jitter = number_or(g, "jitter_m", 0.0, gp);
  resolved = {{"grid",
               {{"rows", rows}, {"cols", cols}, {"spacing_m", spacing}, {"center_m", point_json(center)},
                {"jitter_m", jitter}}}};

  const Projection proj = tube.project(center);
  if (!proj.inside) throw ValidationError("initial-collision", "grid centre lies outside the tube");
  const CurveFrame f = tube.curve().frame(proj.l);
  std::mt19937_64 gen(seed);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      RobotState robot;
      robot.id = r * cols + c;
      robot.position = center + (c - 0.5 * (cols - 1)) * spacing * f.tangent +
                       (r - 0.5 * (rows - 1)) * spacing * f.normal;
      if (jitter > 0.0) {
        const double jx = (2.0 * unit_uniform(gen) - 1.0) * jitter;
        const double jy = (2.0 * unit_uniform(gen) - 1.0) * jitter;
        robot.position += Vec2(jx, jy);
      }
      swarm.robots.push_back(robot);
    }
  }
  return swarm;
}

/// Parses and validates a scenario document. Throws ParseError for
/// malformed input and ValidationError for rule violations.
inline Scenario parse_scenario(const Json& doc) {
  using namespace detail;
  if (!doc.is_object()) throw ParseError("/: expected a JSON object");
  Scenario sc;
  Json resolved;
  sc.name = string_or(doc, "name", "scenario", "");
  resolved["name"] = sc.name;

  ParsedTube parsed = parse_tube(require(doc, "tube", ""));
  sc.tube = parsed.tube;

  Json rparams;
  sc.params = parse_params(doc.contains("params") ? doc.at("params") : Json::object(), "/params", rparams);
  if (!sc.tube->closed()) {
    const double min_ext = sc.tube->length() + sc.params.k1 / sc.params.eta_min;
    if (!parsed.resolved.contains("extension_length_m")) {
      sc.tube = std::make_shared<const VirtualTube>(sc.tube->curve(), sc.tube->widths(), Topology::open, min_ext);
      parsed.resolved["extension_length_m"] = min_ext;
    }
  }
  resolved["tube"] = parsed.resolved;
  resolved["params"] = rparams;

  sc.dt = number_or(doc, "dt_s", sc.dt, "");
  sc.t_end = number_or(doc, "t_end_s", sc.t_end, "");
  sc.mode = string_or(doc, "mode", "full", "");
  if (sc.mode != "full" && sc.mode != "baseline" && sc.mode != "compare") {
    throw ParseError("/mode: expected full|baseline|compare");
  }
  if (doc.contains("density_grid")) {
    const Json& g = doc.at("density_grid");
    sc.grid.along = static_cast<int>(number_or(g, "along", sc.grid.along, "/density_grid"));
    sc.grid.across = static_cast<int>(number_or(g, "across", sc.grid.across, "/density_grid"));
  }
  if (doc.contains("density_metrics")) {
    if (!doc.at("density_metrics").is_boolean()) throw ParseError("/density_metrics: expected a boolean");
    sc.density_metrics = doc.at("density_metrics").get<bool>();
  }
  sc.output_dir = string_or(doc, "output_dir", sc.output_dir, "");
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_integer() || doc.at("seed").get<std::int64_t>() < 0) throw ParseError("/seed: expected a nonnegative integer");
    sc.seed = doc.at("seed").get<std::uint64_t>();
  }
  resolved["dt_s"] = sc.dt;
  resolved["t_end_s"] = sc.t_end;
  resolved["mode"] = sc.mode;
  resolved["density_grid"] = {{"along", sc.grid.along}, {"across", sc.grid.across}};
  resolved["density_metrics"] = sc.density_metrics;
  resolved["seed"] = sc.seed;

  if (!(sc.dt > 0.0)) throw ValidationError("param-bound", "dt_s must be positive");
  if (!(sc.t_end >= 0.0)) throw ValidationError("param-bound", "t_end_s must be nonnegative");
  if (sc.grid.along <= 0 || sc.grid.across <= 0) throw ValidationError("param-bound", "density grid must be positive");

  const RegularityReport reg = sc.tube->check_regularity(parsed.regularity_spacing);
  if (!reg.ok()) {
    std::ostringstream os;
    os << reg.intersecting.size() << " intersecting cross-section pairs, first at l=" << reg.intersecting[0].l1
       << " and l=" << reg.intersecting[0].l2;
    throw ValidationError("regularity", os.str());
  }
  sc.params.validate_against(*sc.tube);

  Json rrobots;
  sc.initial = parse_robots(require(doc, "robots", ""), *sc.tube, sc.seed, rrobots);
  resolved["robots"] = rrobots;
  const auto violations = validate_initial(sc.initial, *sc.tube, sc.params);
  if (!violations.empty()) throw ValidationError("initial-collision", violations.front());

  sc.fingerprint = fnv1a_hex(resolved.dump());
  resolved["output_dir"] = sc.output_dir;
  sc.resolved = std::move(resolved);
  return sc;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline Scenario load_scenario(const std::string& path) {
  try {
    return parse_scenario(read_json_file(path));
  } catch (const ParseError& e) {
    const std::string what = e.what();
    if (what.rfind(path, 0) == 0) throw;
    throw ParseError(path + ": " + what);
  }
}

/// Re-derives the fingerprint after in-memory overrides to the resolved
/// document (output_dir is not part of the digest).
inline std::string fingerprint_of(const Json& resolved) {
  Json copy = resolved;
  copy.erase("output_dir");
  return fnv1a_hex(copy.dump());
}

}  // namespace vtube

#endif  // VTUBE_SCENARIO_HPP
