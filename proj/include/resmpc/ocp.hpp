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

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "resmpc/integrator.hpp"

namespace resmpc {

/// Nonlinear-least-squares cost 0.5 * y(x,u)^T W y(x,u).
///
/// The terminal cost uses the same type and receives an empty input.
struct NlsCost {
  using Residual =
      std::function<void(const Vec& x, const Vec& u, Vec& y, Mat* jac_x, Mat* jac_u)>;

  int ny = 0;
  Residual residual;
  Mat weight;

  bool empty() const { return ny == 0; }
  double value(const Vec& x, const Vec& u) const;
};

/// Scalar inequality h(x,u) <= 0.
struct Constraint {
  /// Returns h and, when requested, its gradients (sizes nx and nu).
  using Function = std::function<double(const Vec& x, const Vec& u, Vec* grad_x, Vec* grad_u)>;

  std::string name;
  Function fn;
  bool soft = false;
  double slack_linear = 0.0;
  double slack_quadratic = 0.0;
  // Satisfaction probability of the tightened constraint; 0 = not tightened.
  double probability = 0.0;
  // Whether the row is imposed at stage 0, where x is fixed by the measurement.
  bool initial_stage = true;

  bool tightened() const { return probability != 0.0; }
};

/// Full problem description.
struct OcpSpec {
  int N = 0;
  int nx = 0;
  int nu = 0;
  int ng = 0;
  Mat Bd;  // nx x ng residual injection
  VectorFieldPtr dynamics;
  DiscretizationConfig disc;
  NlsCost stage_cost;
  NlsCost terminal_cost;
  std::vector<Constraint> constraints;           // stages 0..N-1
  std::vector<Constraint> terminal_constraints;  // stage N
  Mat noise_cov;                                 // process noise, nx x nx

  /// Componentwise input box, one row per finite bound. Hard, all stages.
  void add_input_bounds(const Vec& lower, const Vec& upper);
  /// Componentwise state box on stages 1..N-1 (and N when terminal is set).
  void add_state_bounds(const Vec& lower, const Vec& upper, bool soft = false,
                        double slack_linear = 0.0, double slack_quadratic = 0.0,
                        bool terminal = true, double probability = 0.0);

  /// Constraints imposed at stage k (0..N), in row order.
  std::vector<const Constraint*> stage_rows(int k) const;
  int rows_at(int k) const { return static_cast<int>(stage_rows(k).size()); }
};

/// Current linearization point plus multipliers.
struct Iterate {
  Trajectory x;           // N+1 states
  Trajectory u;           // N inputs
  Trajectory pi;          // N dynamics multipliers (row k couples x_k and x_{k+1})
  Trajectory mu;          // N+1 inequality multipliers, per stage rows
  Trajectory slack;       // N+1 soft-constraint slacks (0 on hard rows)
  Trajectory slack_mult;  // N+1 multipliers of slack >= 0

  /// States repeated from x0, zero inputs and zero multipliers.
  static Iterate cold_start(const OcpSpec& spec, const Vec& x0);
  /// Sizes every dual block to the spec, zero-filled, keeping x and u.
  void resize_duals(const OcpSpec& spec);
};

/// Shifts the trajectory one stage ahead, duplicating the last stage.
Iterate shift_iterate(const Iterate& it);

struct Violation {
  std::string code;
  std::string detail;
};

/// Numerical rank with the relative tolerance on singular values.
int numerical_rank(const Mat& m, double rel_tol = 1e-10);

/// Checks every structural invariant of the problem; empty means valid.
std::vector<Violation> validate_spec(const OcpSpec& spec);

/// Moore-Penrose pseudo-inverse of a full-column-rank matrix.
Mat pseudo_inverse(const Mat& Bd);

/// Residual target Bd^+ (x_next - f_val).
Vec project_measurement(const Vec& x_next, const Vec& f_val, const Mat& Bd);

/// Covariance of Bd^+ w for w ~ N(0, noise_cov).
Mat residual_noise_covariance(const Mat& noise_cov, const Mat& Bd);

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace resmpc
