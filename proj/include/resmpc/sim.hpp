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

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "resmpc/gp.hpp"
#include "resmpc/racing.hpp"
#include "resmpc/sqp.hpp"

namespace resmpc {

enum class Optimizer { Rti, Sqp };
enum class ControllerModel { Nominal, Exact };
enum class GpKind { None, Exact, Inducing, Online };

struct ControllerConfig {
  std::string name = "controller";
  Optimizer optimizer = Optimizer::Rti;
  ControllerModel model = ControllerModel::Nominal;
  GpKind gp = GpKind::None;
  int data_points = 0;       // D
  int inducing_points = 10;  // m for the inducing variant
  int online_capacity = 100;
  KernelConfig kernel;
  SolverOptions solver;
  // Training data: a CSV file, or (when empty) the transitions of a prior
  // D = 0 run of the same seed.
  std::string data_file;
};

/// A closed-loop racing experiment.
struct Scenario {
  RacingConfig racing;
  ControllerConfig controller;
  std::uint64_t seed = 0;
  int n_sim = 600;
  int n_sim_full = 3000;
  int plant_substeps = 10;
  double v0 = 1.0;
  double torque0 = 0.25;

  /// JSON scenario; unknown keys throw ScenarioError.
  static Scenario load(const std::string& path);
  void validate() const;
};

enum class Zone { Green = 0, Yellow = 1, Red = 2 };

struct StepRecord {
  int step = 0;
  Vec x;  // measured plant state at the start of the step
  Vec u;  // applied input
  double cost = 0.0;
  double distance = 0.0;  // signed distance to the centerline
  Zone zone = Zone::Green;
  std::int64_t prep_ns = 0;
  std::int64_t fdbk_ns = 0;
  int sqp_iterations = 0;
  double kkt = -1.0;  // final KKT residual of a full solve; < 0 when not computed (RTI)
  std::string status;
  bool held = false;  // solver failed, previous input applied
  std::string message;  // failure reason when held; not serialized
};

struct RunSummary {
  double cost = 0.0;  // mean stage cost over the run
  double laps = 0.0;
  int red_entries = 0;
  int red_steps = 0;
  int yellow_steps = 0;
  int held = 0;
  bool crashed = false;
  double mean_abs_distance = 0.0;
  double prep_ms_mean = 0.0, prep_ms_std = 0.0;
  double fdbk_ms_mean = 0.0, fdbk_ms_std = 0.0;
  double total_ms_mean = 0.0, total_ms_std = 0.0;
};

struct RunLog {
  std::string controller;
  std::uint64_t seed = 0;
  double dt = 0.0;
  double half_width = 0.0;
  double soft_width = 0.0;
  double track_length = 0.0;
  std::vector<StepRecord> steps;
  Vec final_state;

  /// Recomputes every aggregate from the records.
  RunSummary summary() const;
};

Zone classify_zone(double distance, double soft_width, double half_width);

/// Random subset of D transitions of the log as GP training data, targets
/// Bd^+ (x_{t+1} - f(x_t, u_t)) under the controller's nominal model.
GpDataset dataset_from_log(const RunLog& log, const OcpSpec& spec, int D, std::uint64_t seed);

/// Training data for the scenario's GP (empty dataset when D == 0).
GpDataset scenario_dataset(const Scenario& scenario);

/// Runs the experiment. GP controllers with D > 0 need `data`.
RunLog run_closed_loop(const Scenario& scenario, const GpDataset* data = nullptr);

}  // namespace resmpc
