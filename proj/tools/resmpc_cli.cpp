/*
 * Copyright 2026 The resmpc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end: racing runs, scaling benchmark, GP fitting and
// report regeneration.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "resmpc/gp.hpp"
#include "resmpc/racing.hpp"
#include "resmpc/report.hpp"
#include "resmpc/scaling_bench.hpp"
#include "resmpc/sim.hpp"

namespace fs = std::filesystem;
using namespace resmpc;

namespace {

int workers_from_env(int fallback) {
  const char* v = std::getenv("RESMPC_WORKERS");
  if (!v || !*v) return fallback;
  const int w = std::atoi(v);
  if (w < 1) throw std::invalid_argument("RESMPC_WORKERS must be a positive integer");
  return w;
}

std::string render(const std::function<void(std::ostream&)>& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

void write_stats_jsonl(std::ostream& os, const RunLog& log) {
  for (const auto& r : log.steps) {
    nlohmann::json j{{"step", r.step},           {"iter", r.sqp_iterations},
                     {"t_prep_ns", r.prep_ns},   {"t_fdbk_ns", r.fdbk_ns},
                     {"status", r.status},       {"zone", static_cast<int>(r.zone)}};
    j["kkt"] = r.kkt < 0.0 ? nlohmann::json(nullptr) : nlohmann::json(r.kkt);
    os << j.dump() << '\n';
  }
}

int run_racing(const std::string& scenario_path, std::uint64_t seed, bool seed_set, bool strict,
               bool full, const std::string& out_dir) {
  Scenario sc = Scenario::load(scenario_path);
  if (seed_set) sc.seed = seed;
  if (full) sc.n_sim = sc.n_sim_full;
  sc.controller.solver.workers = workers_from_env(sc.controller.solver.workers);
  const GpDataset data = scenario_dataset(sc);
  const RunLog log = run_closed_loop(sc, &data);
  for (const auto& r : log.steps)
    if (r.held) std::cerr << "step " << r.step << ": input held (" << r.message << ")\n";
  const nlohmann::json summary = summary_json(log);
  std::cout << summary.dump(2) << '\n';
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const fs::path d(out_dir);
    write_text_file((d / "log.csv").string(), render([&](std::ostream& o) { write_log_csv(o, log); }));
    write_text_file((d / "summary.json").string(), summary.dump(2) + "\n");
    write_text_file((d / "stats.jsonl").string(),
                    render([&](std::ostream& o) { write_stats_jsonl(o, log); }));
    const TrackModel track = TrackModel::builtin(sc.racing.track.layout, sc.racing.track.half_width,
                                                 sc.racing.track.margin);
    std::ostringstream zones, traj;
    if (write_zone_svg(zones, log)) write_text_file((d / "zones.svg").string(), zones.str());
    if (write_trajectory_svg(traj, log, track))
      write_text_file((d / "trajectory.svg").string(), traj.str());
  }
  if (strict && log.summary().red_entries > 0) {
    std::cerr << "strict: " << log.summary().red_entries << " red-zone entries\n";
    return 2;
  }
  return 0;
}

int run_benchmark(const std::string& grid_path, const std::string& out_dir) {
  const ScalingGrid grid = ScalingGrid::load(grid_path);
  const auto cells = run_scaling_benchmark(grid);
  write_scaling_csv(std::cout, cells);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const fs::path d(out_dir);
    write_text_file((d / "scaling.csv").string(),
                    render([&](std::ostream& o) { write_scaling_csv(o, cells); }));
    std::ostringstream svg;
    if (write_scaling_svg(svg, cells)) write_text_file((d / "scaling.svg").string(), svg.str());
  }
  for (const auto& c : cells)
    if (c.max_input_deviation > 1e-12) {
      std::cerr << "zero model changed the inputs: N=" << c.horizon << " layers=" << c.layers
                << " mode=" << c.mode << " deviation=" << c.max_input_deviation << '\n';
      return 3;
    }
  return 0;
}

int fit_gp(const std::string& data_path, const std::string& out_path,
           const std::string& kernel_path, int inducing) {
  GpDataset data = load_dataset_csv(data_path);
  KernelConfig kernel;
  if (kernel_path.empty()) {
    kernel = racing_kernel();
  } else {
    const nlohmann::json doc = Table::parse_file(kernel_path);
    Table t(doc, kernel_path);
    kernel = racing_kernel(&t);
    t.finish();
  }
  GpModel model;
  if (inducing > 0) {
    std::vector<Vec> rows;
    for (Eigen::Index i = 0; i < data.Z.rows(); ++i) rows.push_back(data.Z.row(i).transpose());
    model = fit_sor(data, kernel, spread_along(rows, inducing));
  } else {
    model = fit_exact(data, kernel);
  }
  save_gp_snapshot(out_path, model);
  std::cout << "fitted " << data.size() << " points into " << out_path << '\n';
  return 0;
}

int report(const std::string& log_path, const std::string& format, const std::string& out,
           const std::string& scenario_path) {
  const RunLog log = read_log_csv_file(log_path);
  std::ostringstream os;
  if (format == "csv") {
    write_log_csv(os, log);
  } else if (format == "json") {
    os << summary_json(log).dump(2) << '\n';
  } else if (format == "svg") {
    bool wrote;
    if (!scenario_path.empty()) {
      const Scenario sc = Scenario::load(scenario_path);
      const TrackModel track = TrackModel::builtin(
          sc.racing.track.layout, sc.racing.track.half_width, sc.racing.track.margin);
      wrote = write_trajectory_svg(os, log, track);
    } else {
      wrote = write_zone_svg(os, log);
    }
    if (!wrote) {
      std::cerr << "empty log: no plot written\n";
      return 0;
    }
  } else {
    throw std::invalid_argument("unknown format " + format);
  }
  if (out.empty())
    std::cout << os.str();
  else
    write_text_file(out, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residual-model MPC toolkit"};
  app.require_subcommand(1);

  auto* racing = app.add_subcommand("run-racing", "Closed-loop racing simulation");
  std::string scenario, out_dir;
  std::uint64_t seed = 0;
  bool strict = false, full = false;
  racing->add_option("--scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  auto* seed_opt = racing->add_option("--seed", seed, "Noise seed (overrides the scenario)");
  racing->add_flag("--strict", strict, "Exit nonzero on any red-zone entry");
  racing->add_flag("--full", full, "Run the long horizon (n_sim_full steps)");
  racing->add_option("--out-dir", out_dir, "Directory for log, summary and plots");

  auto* bench = app.add_subcommand("run-benchmark", "Zero-weight MLP scaling benchmark");
  std::string grid, bench_out;
  bench->add_option("--grid", grid, "Grid JSON")->required()->check(CLI::ExistingFile);
  bench->add_option("--out-dir", bench_out, "Directory for CSV and SVG");

  auto* fit = app.add_subcommand("fit-gp", "Fit a GP from a dataset CSV");
  std::string data, model_out, kernel;
  int inducing = 0;
  fit->add_option("--data", data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--out", model_out, "Snapshot file")->required();
  fit->add_option("--kernel", kernel, "Kernel JSON")->check(CLI::ExistingFile);
  fit->add_option("--inducing", inducing, "Inducing points (0 = exact)")->check(CLI::NonNegativeNumber);

  auto* rep = app.add_subcommand("report", "Regenerate outputs from a stored log");
  std::string log_path, format, rep_out, rep_scenario;
  rep->add_option("--log", log_path, "Log CSV")->required()->check(CLI::ExistingFile);
  rep->add_option("--format", format, "Output format")
      ->required()
      ->check(CLI::IsMember({"csv", "json", "svg"}));
  rep->add_option("--out", rep_out, "Output file (default stdout)");
  rep->add_option("--scenario", rep_scenario, "With svg: plot the trajectory on this track");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*racing) return run_racing(scenario, seed, seed_opt->count() > 0, strict, full, out_dir);
    if (*bench) return run_benchmark(grid, bench_out);
    if (*fit) return fit_gp(data, model_out, kernel, inducing);
    if (*rep) return report(log_path, format, rep_out, rep_scenario);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
