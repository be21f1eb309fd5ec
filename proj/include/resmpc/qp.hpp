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

#include "resmpc/types.hpp"

namespace resmpc {

/// One stage of the stage-sparse QP in the increments (dx_k, du_k).
///
///   min  0.5 [dx;du]^T [Q S^T; S R] [dx;du] + q^T dx + r^T du
///        + sum_i (0.5 rho2_i s_i^2 + rho1_i s_i)          (soft rows only)
///   s.t. dx_{k+1} = A dx + B du + b
///        C dx + D du + e <= s,  s >= 0   (s == 0 on hard rows)
///
/// The terminal stage has nu = 0 and no dynamics block.
struct QpStage {
  Mat Q, S, R;
  Vec q, r;
  Mat A, B;
  Vec b;
  Mat C, D;
  Vec e;
  std::vector<bool> soft;
  Vec rho1, rho2;

  int nx() const { return static_cast<int>(Q.rows()); }
  int nu() const { return static_cast<int>(R.rows()); }
  int rows() const { return static_cast<int>(e.size()); }
};

struct QpSubproblem {
  std::vector<QpStage> stages;  // N+1
  Vec dx0;                      // fixed initial increment

  int horizon() const { return static_cast<int>(stages.size()) - 1; }
  /// Throws DimensionError naming the stage and block.
  void check() const;
};

struct QpOptions {
  double tol = 1e-10;         // target on every KKT residual group
  double accept_tol = 1e-8;   // accepted at max_iter
  int max_iter = 100;
  double step_fraction = 0.995;
};

struct QpSolution {
  Trajectory dx;          // N+1
  Trajectory du;          // N
  Trajectory pi;          // N, pi[k] multiplies dx_{k+1} = A dx_k + ...
  Trajectory lam;         // N+1 inequality multipliers
  Trajectory slack;       // N+1, zero on hard rows
  Trajectory slack_mult;  // N+1, multipliers of s >= 0 (zero on hard rows)
  int iterations = 0;
  double residual = 0.0;  // largest KKT residual group at return
};

class QpError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Primal-dual interior point (Mehrotra predictor-corrector) with a Riccati
/// factorization of the stage-wise Newton system.
QpSolution solve_qp(const QpSubproblem& qp, const QpOptions& opts = {});

/// Largest of the stationarity, feasibility and complementarity residuals.
double qp_kkt_residual(const QpSubproblem& qp, const QpSolution& sol);

}  // namespace resmpc
