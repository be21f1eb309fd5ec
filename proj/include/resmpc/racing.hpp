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

#include <memory>
#include <string>

#include "resmpc/gp.hpp"
#include "resmpc/ocp.hpp"
#include "resmpc/scenario_file.hpp"
#include "resmpc/track.hpp"
#include "resmpc/vector_fields.hpp"

namespace resmpc {

/// State indices of the racing car.
namespace car {
inline constexpr int X = 0, Y = 1, PSI = 2, VX = 3, VY = 4, OMEGA = 5, T = 6, DELTA = 7, THETA = 8;
inline constexpr int NX = 9, NU = 3, NG = 3;
}  // namespace car

struct TrackConfig {
  std::string layout = "desk";
  double half_width = 0.23;
  double margin = 0.06;
};

/// Contouring-control OCP on the track.
struct RacingConfig {
  TrackConfig track;
  int N = 20;
  double dt = 1.0 / 30.0;
  int rk4_steps = 4;

  // Regressor weights: e^c, e^l, dT, ddelta and the progress term
  // q_progress (dtheta - v_ref)^2, folded in through the constant entry.
  double q_contour = 2.0;
  double q_lag = 200.0;
  double r_torque_rate = 0.05;
  double r_steer_rate = 0.2;
  double q_progress = 1.0;
  double v_ref = 4.0;

  double torque_min = -0.2, torque_max = 1.0;
  double steer_max = 0.35;
  double torque_rate_max = 12.0;
  double steer_rate_max = 8.0;
  double progress_rate_max = 5.0;
  double vx_min = 0.3;

  double track_slack_linear = 50.0;
  double track_slack_quadratic = 2000.0;
  double bound_slack_linear = 100.0;
  double bound_slack_quadratic = 1000.0;

  // Chance level of the track constraints (used only when tightening).
  double probability = 0.95;
  // Process noise standard deviations on (vx, vy, omega) per sample.
  Vec noise_std = (Vec(3) << 0.01, 0.01, 0.1).finished();

  BicycleParams plant;    // ground truth
  BicycleParams nominal;  // controller model

  static RacingConfig defaults();
  /// Reads the [track], [ocp], [cost], [bounds], [noise], [plant] and
  /// [nominal] tables; unknown keys throw.
  void load(Table& root);
};

/// Exact parameters with the drive split moved to the rear axle and both
/// tires' peak forces raised by `grip_factor`.
BicycleParams perturbed_params(const BicycleParams& exact, double grip_factor = 1.15);

Mat racing_bd();
Mat racing_noise_cov(const Vec& noise_std);
/// GP input features (vx, vy, omega, T, delta).
std::vector<int> racing_features();

/// Builds the OCP for the given controller model.
OcpSpec build_racing_spec(const RacingConfig& cfg, std::shared_ptr<const TrackModel> track,
                          const BicycleParams& model_params);

/// Stage state on the centerline at progress theta with speed v.
Vec centerline_state(const TrackModel& track, double theta, double v, double torque);

/// Default hyperparameters for the velocity-residual GP.
KernelConfig racing_kernel(Table* table = nullptr);

}  // namespace resmpc
