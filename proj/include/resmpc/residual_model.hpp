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

#include <vector>

#include "resmpc/integrator.hpp"
#include "resmpc/ocp.hpp"

namespace resmpc {

/// Linearization points of stages 0..N-1.
struct LinearizationBatch {
  Trajectory x;
  Trajectory u;

  size_t size() const { return x.size(); }
  static LinearizationBatch from_iterate(const Iterate& it);
};

/// Residual value and sensitivities at one stage.
struct StageResidual {
  Vec value;  // ng
  Mat jac_x;  // ng x nx
  Mat jac_u;  // ng x nu
  Mat cov;    // ng x ng, empty when the model provides none
};

struct ResidualEvaluation {
  std::vector<StageResidual> stages;
  bool has_covariance = false;

  size_t size() const { return stages.size(); }
};

/// External residual model g(x, u).
///
/// Implementations must be safe for concurrent const calls. Models that
/// mutate (online updates) are swapped by the caller between solver
/// iterations.
class ResidualModel {
 public:
  virtual ~ResidualModel() = default;

  virtual int state_dim() const = 0;
  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;

  /// When false the bridge fills Jacobians by central differences.
  virtual bool provides_jacobians() const { return true; }
  virtual bool provides_covariance() const { return false; }

  /// Fills value, and jac_x/jac_u (and cov) when provided.
  virtual void evaluate_point(const Vec& x, const Vec& u, StageResidual& out) const = 0;

  /// Evaluates stages [begin, end) of the batch into out[begin..end).
  /// Override to exploit batching; results must equal evaluate_point.
  virtual void evaluate_block(const LinearizationBatch& batch, size_t begin, size_t end,
                              std::vector<StageResidual>& out) const;
};

class ResidualEvaluationError : public std::runtime_error {
 public:
  ResidualEvaluationError(const std::string& what, int stage)
      : std::runtime_error(what), stage_(stage) {}
  int stage() const { return stage_; }

 private:
  int stage_;
};

/// Reference implementation: one evaluate_point call per stage, in order.
ResidualEvaluation evaluate_batch_serial(const ResidualModel& model,
                                         const LinearizationBatch& batch);

/// Static partition of the stages into `workers` contiguous blocks, one
/// OpenMP thread per block. Stage k depends only on (x_k, u_k).
ResidualEvaluation evaluate_batch(const ResidualModel& model, const LinearizationBatch& batch,
                                  int workers);

/// Central-difference Jacobians, step 1e-6 * (1 + |z_i|).
void finite_difference_jacobians(const ResidualModel& model, const Vec& x, const Vec& u,
                                 StageResidual& out);

/// Parameters of x_{k+1} = A x_k + B u_k + c of the affine OCP.
struct AffineStageDynamics {
  Mat A;
  Mat B;
  Vec c;
};

/// A = A_f + Bd g_x, B = B_f + Bd g_u, c = f + Bd g - A x - B u.
std::vector<AffineStageDynamics> assemble_affine(const OcpSpec& spec,
                                                 const std::vector<StageSensitivity>& nominal,
                                                 const ResidualEvaluation& residual,
                                                 const LinearizationBatch& batch);

/// Nominal discrete sensitivities at every linearization point.
std::vector<StageSensitivity> nominal_sensitivities(const OcpSpec& spec,
                                                    const LinearizationBatch& batch);

/// g = 0.
class ZeroResidual final : public ResidualModel {
 public:
  ZeroResidual(int nx, int nu, int ng) : nx_(nx), nu_(nu), ng_(ng) {}
  int state_dim() const override { return nx_; }
  int input_dim() const override { return nu_; }
  int output_dim() const override { return ng_; }
  void evaluate_point(const Vec& x, const Vec& u, StageResidual& out) const override;

 private:
  int nx_, nu_, ng_;
};

/// g = G x + H u + offset.
class LinearResidual final : public ResidualModel {
 public:
  LinearResidual(Mat G, Mat H, Vec offset);
  int state_dim() const override { return static_cast<int>(G_.cols()); }
  int input_dim() const override { return static_cast<int>(H_.cols()); }
  int output_dim() const override { return static_cast<int>(G_.rows()); }
  void evaluate_point(const Vec& x, const Vec& u, StageResidual& out) const override;

 private:
  Mat G_, H_;
  Vec offset_;
};

}  // namespace resmpc
