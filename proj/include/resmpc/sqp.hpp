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
#include <string>
#include <vector>

#include "resmpc/ocp.hpp"
#include "resmpc/qp.hpp"
#include "resmpc/residual_model.hpp"
#include "resmpc/zoro.hpp"

namespace resmpc {

/// How constraint tightenings are obtained.
///   Nominal:   no tightening.
///   ZeroOrder: recomputed from the current iterate before every QP.
///   Fixed:     computed once per solve (RTI: carried over from the previous
///              sample, shifted) and never refreshed.
enum class CovarianceMode { Nominal, ZeroOrder, Fixed };

struct SolverOptions {
  double tol = 1e-4;
  int max_iter = 30;
  double reg_epsilon = 1e-8;
  double reg_threshold = 1e-10;
  CovarianceMode covariance = CovarianceMode::Nominal;
  int workers = 1;
  // Evaluate residuals with the point-wise reference path instead of the
  // blocked worker partition.
  bool serial_residuals = false;
  // Backtrack each full-SQP step on an l1 exact-penalty merit. Off means
  // plain full steps. RTI feedback never backtracks.
  bool line_search = false;
  int max_backtracks = 8;
  QpOptions qp;

  void validate() const;
};

enum class SolveStatus { Converged, MaxIter, QpFailure, Prepared };
std::string to_string(SolveStatus s);

/// Infinity norms of the four KKT residual groups.
struct KktResiduals {
  double stationarity = 0.0;
  double equality = 0.0;
  double inequality = 0.0;
  double complementarity = 0.0;

  double max() const;
};

struct SolveStats {
  int iterations = 0;                     // QP solves
  std::vector<KktResiduals> kkt_history;  // after every QP solve
  std::int64_t prep_ns = 0;
  std::int64_t fdbk_ns = 0;
  std::vector<int> qp_iterations;
  std::vector<double> step_sizes;  // accepted primal step per QP solve
  SolveStatus status = SolveStatus::MaxIter;
  std::string message;
};

/// Gauss-Newton QP around the iterate. The defect uses the affine
/// parameters, b_k = A_k x_k + B_k u_k + c_k - x_{k+1}; beta shifts each
/// constraint row (empty = no tightening). dx0 is left at zero.
QpSubproblem build_qp(const OcpSpec& spec, const Iterate& iterate,
                      const std::vector<AffineStageDynamics>& affine, const Trajectory& beta,
                      const SolverOptions& opts = {});

/// Everything computed at one linearization point before the QP solve.
struct Linearization {
  Iterate iterate;
  LinearizationBatch batch;
  ResidualEvaluation residual;
  std::vector<AffineStageDynamics> affine;
  CovarianceSchedule schedule;
  QpSubproblem qp;
  std::int64_t prep_ns = 0;
};

/// Preparation: nominal sensitivities, batched residual evaluation and
/// affine assembly, tightening, QP build. `frozen` replaces the tightening
/// in Fixed mode.
Linearization linearize(const OcpSpec& spec, const ResidualModel& model, const Iterate& iterate,
                        const SolverOptions& opts, const CovarianceSchedule* frozen = nullptr);

/// KKT residuals of the tightened OCP at the linearization point; `x0`
/// adds the initial-state row when given.
KktResiduals kkt_residuals(const Linearization& lin, const Vec* x0 = nullptr);
KktResiduals kkt_residuals(const OcpSpec& spec, const ResidualModel& model, const Iterate& iterate,
                           const Trajectory& beta, const Vec* x0 = nullptr);

/// Full-step update of primal and dual variables from a QP solution.
Iterate apply_step(const Iterate& iterate, const QpSolution& sol);

struct SqpResult {
  Iterate iterate;
  CovarianceSchedule schedule;
  SolveStats stats;
};

SqpResult sqp_solve(const OcpSpec& spec, const ResidualModel& model, const Vec& x0,
                    const Iterate& guess, const SolverOptions& opts);

/// Prepared-but-unsolved RTI context.
struct PreparedQp {
  Linearization lin;
  bool ready = false;
};

/// Shifts the previous solution one stage and linearizes. In Fixed mode the
/// previous schedule (shifted) is reused as the tightening.
PreparedQp rti_prepare(const OcpSpec& spec, const ResidualModel& model, const Iterate& previous,
                       const SolverOptions& opts, const CovarianceSchedule* previous_schedule = nullptr);
/// Same as rti_prepare without the shift (first sample).
PreparedQp rti_prepare_at(const OcpSpec& spec, const ResidualModel& model, const Iterate& iterate,
                          const SolverOptions& opts, const CovarianceSchedule* frozen = nullptr);

struct FeedbackResult {
  Vec u0;
  Iterate iterate;
  SolveStats stats;
};

/// Injects dx0 = x0 - x_0 into the prepared QP and solves it. Throws QpError.
FeedbackResult rti_feedback(const PreparedQp& prepared, const Vec& x0, const SolverOptions& opts);

/// One JSON line {iter, kkt, t_prep_ns, t_fdbk_ns, status}.
std::string stats_json(const SolveStats& stats);

}  // namespace resmpc
