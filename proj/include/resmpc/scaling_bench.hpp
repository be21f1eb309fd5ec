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

#include <iosfwd>
#include <string>
#include <vector>

#include "resmpc/ocp.hpp"

namespace resmpc {

/// Residual evaluation mode of one benchmark column.
struct ParallelMode {
  std::string name;  // "serial" or "omp-<workers>"
  int workers = 1;
  bool serial = true;

  static ParallelMode parse(const std::string& name);
};

struct ScalingGrid {
  std::vector<int> horizons{10, 20, 40};
  std::vector<int> layers{1, 5, 20};
  std::vector<std::string> modes{"serial", "omp-8"};
  int width = 512;
  int steps = 100;  // closed-loop RTI steps per cell
  int kick_every = 25;
  std::uint64_t seed = 1;

  static ScalingGrid load(const std::string& path);
  void validate() const;
};

struct ScalingCell {
  int horizon = 0;
  int layers = 0;
  std::string mode;
  int workers = 1;
  int steps = 0;
  double prep_median_ms = 0.0, prep_iqr_ms = 0.0;
  double fdbk_median_ms = 0.0, fdbk_iqr_ms = 0.0;
  // Largest |u - u_ref| against the controller without a residual model.
  double max_input_deviation = 0.0;
  std::vector<double> inputs;  // applied inputs, one per step
};

/// Double integrator with u in [-1, 1] and residual injection Bd = I.
OcpSpec scaling_spec(int N);

/// Closed-loop RTI run of one cell; `reference_inputs` may be empty.
ScalingCell run_scaling_cell(const ScalingGrid& grid, int horizon, int layers,
                             const ParallelMode& mode, const std::vector<double>& reference_inputs);

/// Inputs of the same loop without a residual model.
std::vector<double> scaling_reference_inputs(const ScalingGrid& grid, int horizon);

std::vector<ScalingCell> run_scaling_benchmark(const ScalingGrid& grid);

void write_scaling_csv(std::ostream& os, const std::vector<ScalingCell>& cells);
/// Median preparation time against N, one curve per (layers, mode).
bool write_scaling_svg(std::ostream& os, const std::vector<ScalingCell>& cells);

/// Least-squares line y = a + b x; returns R^2 (1 for an exact fit).
double linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y);

/// Linear-interpolated quantile, q in [0, 1].
double quantile(std::vector<double> v, double q);

}  // namespace resmpc
