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
#include <utility>
#include <vector>

#include "resmpc/ocp.hpp"
#include "resmpc/residual_model.hpp"

namespace resmpc {

/// Standard normal CDF.
double normal_cdf(double x);

/// Inverse of normal_cdf, |Phi(gamma) - p| <= 1e-12. Throws for p outside (0, 1).
double gamma_from_prob(double p);

/// Propagated covariances and the tightenings built from them.
struct CovarianceSchedule {
  std::vector<Mat> sigma;  // N+1 state covariances, sigma[0] == 0
  Trajectory beta;         // N+1, one entry per stage row (0 on untightened rows)
  int clamped = 0;         // negative radicands clamped to zero

  bool empty() const { return sigma.empty(); }
  /// Zero schedule for the spec's row layout.
  static CovarianceSchedule zeros(const OcpSpec& spec);
  /// One stage ahead, last stage duplicated; stage 0 keeps beta == 0.
  CovarianceSchedule shifted(const OcpSpec& spec) const;
};

/// Sigma_{k+1} = A_k Sigma_k A_k^T + Bd Sigma^g_k Bd^T + Sigma_w from Sigma_0 = 0.
/// `gp_cov` may be empty (no residual covariance).
std::vector<Mat> propagate(const OcpSpec& spec, const std::vector<Mat>& A,
                           const std::vector<Mat>& gp_cov);

/// beta_j = gamma_j sqrt(max(C_j Sigma C_j^T, 0)) per row of C.
Vec tighten(const Mat& C, const Mat& sigma, const Vec& gamma, int* clamped = nullptr);

/// State-constraint Jacobian rows of stage k at (x, u) for the tightened rows
/// (zero rows elsewhere), together with their gammas.
void tightening_rows(const OcpSpec& spec, int k, const Vec& x, const Vec& u, Mat& C, Vec& gamma);

/// Covariance propagation along the iterate with A_k from the affine
/// parameters and Sigma^g from the residual evaluation, then tightening.
CovarianceSchedule zoro_step(const OcpSpec& spec, const Iterate& iterate,
                             const std::vector<AffineStageDynamics>& affine,
                             const ResidualEvaluation& residual);

struct FeasibilityIssue {
  std::string kind;  // "dynamics", "constraint" or "tightening"
  int stage = 0;
  std::string row;
  double value = 0.0;
};

struct FeasibilityReport {
  std::vector<FeasibilityIssue> issues;
  double max_defect = 0.0;
  double max_violation = 0.0;
  double max_beta_change = 0.0;

  bool ok() const { return issues.empty(); }
};

/// Recomputes the schedule at the iterate and checks dynamics defects,
/// tightened constraints h + beta <= slack and the drift of beta against
/// `schedule`, each against `tol`.
FeasibilityReport verify_feasibility(const OcpSpec& spec, const ResidualModel& model,
                                     const Iterate& iterate, const CovarianceSchedule& schedule,
                                     double tol = 1e-4, int workers = 1);

/// JSON with the 2x2 projection of every sigma_k onto each state pair.
void write_schedule_json(std::ostream& os, const CovarianceSchedule& schedule,
                         const std::vector<std::pair<int, int>>& pairs);

}  // namespace resmpc
