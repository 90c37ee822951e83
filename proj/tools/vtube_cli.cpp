#include "vtube/analysis.hpp"
#include "vtube/io.hpp"
#include "vtube/scenario.hpp"
#include "vtube/sim.hpp"
#include "vtube/svg.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace vtube;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitFault = 2;
constexpr int kExitIrregular = 3;

struct Overrides {
  std::optional<double> dt;
  std::optional<double> t_end;
  std::optional<std::string> mode;
};

Scenario load_with_overrides(const std::string& path, const Overrides& o) {
  Json doc = read_json_file(path);
  if (!doc.is_object()) throw ParseError(path + ": expected a JSON object");
  if (o.dt) doc["dt_s"] = *o.dt;
  if (o.t_end) doc["t_end_s"] = *o.t_end;
  if (o.mode) doc["mode"] = *o.mode;
  try {
    return parse_scenario(doc);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

SimulationLog run_arm(const Scenario& sc, ControlMode mode) {
  Simulator sim(*sc.tube, sc.params, sc.settings(mode));
  return sim.run(sc.initial, sc.fingerprint);
}

void print_run(const std::string& label, const SimulationLog& log) {
  const Json s = summary_json(log);
  std::cout << label << ": termination=" << s["termination"].get<std::string>() << " records=" << log.records.size()
            << " min_pair=" << s["min_pairwise_distance_m"].dump() << " min_bound=" << s["min_boundary_distance_m"].dump();
  if (!log.records.empty()) std::cout << " exited=" << log.records.back().metrics.exited_count;
  std::cout << '\n';
  if (!log.fault.empty()) std::cout << "  fault: " << log.fault << '\n';
}

int cmd_simulate(const std::string& path, const std::optional<std::string>& out, const Overrides& o) {
  Overrides ov = o;
  Json probe = read_json_file(path);
  if (!ov.mode && probe.is_object() && probe.value("mode", std::string("full")) == "compare") ov.mode = "full";
  const Scenario sc = load_with_overrides(path, ov);
  const fs::path dir = out ? fs::path(*out) : fs::path(sc.output_dir);
  const ControlMode mode = sc.mode == "baseline" ? ControlMode::baseline : ControlMode::full;
  const SimulationLog log = run_arm(sc, mode);
  write_run_files(dir, log, sc.resolved);
  render_plots(log, dir, sc.tube.get());
  print_run(to_string(mode), log);
  std::cout << "fingerprint " << sc.fingerprint << "\nwrote " << dir.string() << '\n';
  return log.termination == Termination::fault ? kExitFault : kExitOk;
}

int cmd_compare(const std::string& path, const std::optional<std::string>& out) {
  const Scenario sc = load_with_overrides(path, Overrides{});
  const fs::path dir = out ? fs::path(*out) : fs::path(sc.output_dir);
  auto full_future = std::async(std::launch::async, [&sc] { return run_arm(sc, ControlMode::full); });
  const SimulationLog baseline = run_arm(sc, ControlMode::baseline);
  const SimulationLog full = full_future.get();

  write_run_files(dir / "full", full, sc.resolved);
  write_run_files(dir / "baseline", baseline, sc.resolved);
  render_plots(full, dir / "full", sc.tube.get(), nullptr);
  render_plots(baseline, dir / "baseline", sc.tube.get(), nullptr);
  render_plots(full, dir, sc.tube.get(), &baseline);

  Json cmp;
  cmp["fingerprint"] = sc.fingerprint;
  const double t_last = std::min(full.records.back().time, baseline.records.back().time);
  cmp["t_s"] = t_last;
  cmp["throughput"] = {{"full", throughput(full, t_last)}, {"baseline", throughput(baseline, t_last)}};
  const double t_from = 2.0 * sc.t_end / 3.0;
  try {
    cmp["amd_final_third_mean_m"] = {{"full", time_average(full, &MetricsRecord::amd, t_from, sc.t_end)},
                                     {"baseline", time_average(baseline, &MetricsRecord::amd, t_from, sc.t_end)}};
  } catch (const DomainError&) {
    cmp["amd_final_third_mean_m"] = nullptr;
  }
  cmp["termination"] = {{"full", to_string(full.termination)}, {"baseline", to_string(baseline.termination)}};
  cmp["condition23_violations"] = audit_condition23(full).violations.size();
  write_text_file(dir / "compare.json", cmp.dump(2) + "\n");

  print_run("full", full);
  print_run("baseline", baseline);
  std::cout << "throughput at t=" << t_last << ": full=" << cmp["throughput"]["full"].get<int>()
            << " baseline=" << cmp["throughput"]["baseline"].get<int>() << '\n';
  if (!cmp["amd_final_third_mean_m"].is_null()) {
    std::cout << "mean AMD over final third: full=" << cmp["amd_final_third_mean_m"]["full"].get<double>()
              << " baseline=" << cmp["amd_final_third_mean_m"]["baseline"].get<double>() << '\n';
  }
  std::cout << "wrote " << dir.string() << '\n';
  const bool fault = full.termination == Termination::fault || baseline.termination == Termination::fault;
  return fault ? kExitFault : kExitOk;
}

int cmd_check_tube(const std::string& path) {
  const Json doc = read_json_file(path);
  if (!doc.is_object() || !doc.contains("tube")) throw ParseError(path + ": missing field /tube");
  ParsedTube parsed;
  try {
    parsed = parse_tube(doc.at("tube"));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
  const VirtualTube& tube = *parsed.tube;
  double r_s = ControllerParams{}.r_s;
  if (doc.contains("params") && doc["params"].contains("r_s_m")) r_s = doc["params"]["r_s_m"].get<double>();

  const RegularityReport reg = tube.check_regularity(parsed.regularity_spacing);
  std::printf("topology: %s\n", tube.closed() ? "closed" : "open");
  std::printf("length: %.6f m\n", tube.length());
  std::printf("area: %.6f m^2\n", tube.area());
  std::printf("regularity: %s (sampling spacing %.4f m, %zu intersecting pairs)\n", reg.ok() ? "regular" : "IRREGULAR",
              reg.spacing, reg.intersecting.size());
  for (std::size_t k = 0; k < reg.intersecting.size() && k < 20; ++k) {
    std::printf("  sections at l=%.4f and l=%.4f intersect\n", reg.intersecting[k].l1, reg.intersecting[k].l2);
  }
  std::printf("flow capacity profile (r_s = %.4f m):\n", r_s);
  const int rows = 20;
  for (int k = 0; k <= rows; ++k) {
    const double l = tube.length() * k / rows;
    std::printf("  l=%9.4f  sigma=%.6f%s\n", l, tube.flow_capacity(l), tube.is_narrow(l, r_s) ? "  narrow" : "");
  }
  const int n = 4000;
  std::optional<double> start;
  int intervals = 0;
  std::printf("narrow intervals (r_s < sigma <= 2 r_s):\n");
  for (int k = 0; k <= n; ++k) {
    const double l = tube.length() * k / n;
    const bool narrow = tube.is_narrow(l, r_s);
    if (narrow && !start) start = l;
    if ((!narrow || k == n) && start) {
      std::printf("  [%.4f, %.4f]\n", *start, narrow ? l : tube.length() * (k - 1) / n);
      start.reset();
      ++intervals;
    }
  }
  if (intervals == 0) std::printf("  none\n");
  return reg.ok() ? kExitOk : kExitIrregular;
}

int cmd_plot(const std::string& trace_path, const std::optional<std::string>& out) {
  const fs::path trace(trace_path);
  std::ifstream in(trace);
  if (!in) throw ParseError(trace_path + ": cannot open file");
  SimulationLog log = read_trace_csv(in, trace_path);
  if (log.records.empty()) throw ParseError(trace_path + ": no records");
  const fs::path dir = out ? fs::path(*out) : trace.parent_path();

  std::shared_ptr<const VirtualTube> tube;
  log.r_s = ControllerParams{}.r_s;
  const fs::path summary = trace.parent_path() / "summary.json";
  if (fs::exists(summary)) {
    const Json s = read_json_file(summary.string());
    if (s.contains("scenario")) {
      tube = parse_tube(s["scenario"]["tube"]).tube;
      log.r_s = s["scenario"]["params"]["r_s_m"].get<double>();
    }
    if (s.contains("mode")) log.mode = s["mode"] == "baseline" ? ControlMode::baseline : ControlMode::full;
  }
  bool have_metrics = false;
  const fs::path metrics = trace.parent_path() / "metrics.csv";
  if (fs::exists(metrics)) {
    std::ifstream min(metrics);
    const auto rows = read_metrics_csv(min, metrics.string());
    if (rows.size() == log.records.size()) {
      for (std::size_t k = 0; k < rows.size(); ++k) log.records[k].metrics = rows[k];
      have_metrics = true;
    }
  }
  const auto files = render_plots(log, dir, tube.get(), nullptr, have_metrics);
  for (const auto& f : files) std::cout << "wrote " << f.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Swarm navigation in virtual tubes: simulation and analysis"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::optional<std::string> out_dir;
  Overrides overrides;
  auto* sim = app.add_subcommand("simulate", "Run one simulation and write trace, metrics and plots");
  sim->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  sim->add_option("--out", out_dir, "Output directory");
  sim->add_option("--dt", overrides.dt, "Time step (s)");
  sim->add_option("--t-end", overrides.t_end, "Final time (s)");
  sim->add_option("--mode", overrides.mode, "Controller mode")->check(CLI::IsMember({"full", "baseline"}));

  auto* cmp = app.add_subcommand("compare", "Run the full and baseline controllers from the same initial state");
  cmp->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  cmp->add_option("--out", out_dir, "Output directory");

  auto* chk = app.add_subcommand("check-tube", "Report regularity, area and narrow sections of a tube");
  chk->add_option("scenario", scenario_path, "Scenario JSON file")->required();

  std::string trace_path;
  auto* plt = app.add_subcommand("plot", "Render SVG plots from a trace.csv");
  plt->add_option("trace", trace_path, "trace.csv file")->required();
  plt->add_option("--out", out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(scenario_path, out_dir, overrides);
    if (cmp->parsed()) return cmd_compare(scenario_path, out_dir);
    if (chk->parsed()) return cmd_check_tube(scenario_path);
    if (plt->parsed()) return cmd_plot(trace_path, out_dir);
  } catch (const ValidationError& e) {
    std::cerr << "validation error [" << e.rule() << "]: " << e.what() << '\n';
    return kExitError;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
