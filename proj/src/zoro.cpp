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

#include "resmpc/zoro.hpp"

#include "json.hpp"

#include <cmath>
#include <ostream>

namespace resmpc {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double gamma_from_prob(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("gamma_from_prob: p must lie in (0, 1)");
  double lo = -40.0, hi = 40.0;
  double g = 0.0;
  // Newton on Phi(g) - p, falling back to bisection whenever it leaves the
  // bracket.
  for (int it = 0; it < 200; ++it) {
    const double f = normal_cdf(g) - p;
    if (f == 0.0) break;
    if (f > 0.0) hi = g; else lo = g;
    const double pdf = std::exp(-0.5 * g * g) / std::sqrt(2.0 * M_PI);
    double next = pdf > 0.0 ? g - f / pdf : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - g) <= 1e-15 * std::max(1.0, std::abs(g))) {
      g = next;
      break;
    }
    g = next;
  }
  return g;
}

CovarianceSchedule CovarianceSchedule::zeros(const OcpSpec& spec) {
  CovarianceSchedule s;
  s.sigma.assign(spec.N + 1, Mat::Zero(spec.nx, spec.nx));
  s.beta.resize(spec.N + 1);
  for (int k = 0; k <= spec.N; ++k) s.beta[k] = Vec::Zero(spec.rows_at(k));
  return s;
}

CovarianceSchedule CovarianceSchedule::shifted(const OcpSpec& spec) const {
  CovarianceSchedule s = zeros(spec);
  if (empty()) return s;
  const int N = spec.N;
  for (int k = 1; k < N; ++k) {
    s.sigma[k] = sigma[k + 1];
    if (k + 1 < N) {
      s.beta[k] = beta[k + 1];
      continue;
    }
    // Stage N has its own row layout: match rows by name.
    const auto to = spec.stage_rows(k), from = spec.stage_rows(k + 1);
    for (size_t i = 0; i < to.size(); ++i)
      for (size_t j = 0; j < from.size(); ++j)
        if (from[j]->name == to[i]->name && static_cast<Eigen::Index>(j) < beta[k + 1].size()) {
          s.beta[k](static_cast<Eigen::Index>(i)) = beta[k + 1](static_cast<Eigen::Index>(j));
          break;
        }
  }
  s.sigma[N] = sigma[N];
  s.beta[N] = beta[N];
  s.clamped = clamped;
  return s;
}

std::vector<Mat> propagate(const OcpSpec& spec, const std::vector<Mat>& A,
                           const std::vector<Mat>& gp_cov) {
  const int N = spec.N, nx = spec.nx;
  require_dims(static_cast<int>(A.size()) == N, "propagate: need N Jacobians");
  require_dims(gp_cov.empty() || static_cast<int>(gp_cov.size()) == N,
               "propagate: need N residual covariances");
  const Mat W = spec.noise_cov.size() ? spec.noise_cov : Mat::Zero(nx, nx);
  std::vector<Mat> sigma(N + 1);
  sigma[0] = Mat::Zero(nx, nx);
  for (int k = 0; k < N; ++k) {
    require_dims(A[k].rows() == nx && A[k].cols() == nx, "propagate: A_k shape");
    Mat next = A[k] * sigma[k] * A[k].transpose() + W;
    if (!gp_cov.empty() && gp_cov[k].size() > 0) {
      require_dims(gp_cov[k].rows() == spec.ng && gp_cov[k].cols() == spec.ng,
                   "propagate: residual covariance shape");
      next += spec.Bd * gp_cov[k] * spec.Bd.transpose();
    }
    sigma[k + 1] = 0.5 * (next + next.transpose());
    if (!sigma[k + 1].allFinite())
      throw NumericalError("propagate: non-finite covariance at stage " + std::to_string(k + 1));
  }
  return sigma;
}

Vec tighten(const Mat& C, const Mat& sigma, const Vec& gamma, int* clamped) {
  require_dims(C.rows() == gamma.size() && C.cols() == sigma.rows(), "tighten: shapes");
  Vec beta = Vec::Zero(C.rows());
  for (Eigen::Index j = 0; j < C.rows(); ++j) {
    if (gamma(j) == 0.0) continue;
    const double v = C.row(j) * sigma * C.row(j).transpose();
    if (v < 0.0 && clamped) ++*clamped;
    beta(j) = gamma(j) * std::sqrt(std::max(v, 0.0));
  }
  return beta;
}

void tightening_rows(const OcpSpec& spec, int k, const Vec& x, const Vec& u, Mat& C, Vec& gamma) {
  const auto rows = spec.stage_rows(k);
  C = Mat::Zero(static_cast<Eigen::Index>(rows.size()), spec.nx);
  gamma = Vec::Zero(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i]->tightened()) continue;
    Vec gx, gu;
    rows[i]->fn(x, u, &gx, &gu);
    C.row(static_cast<Eigen::Index>(i)) = gx.transpose();
    gamma(static_cast<Eigen::Index>(i)) = gamma_from_prob(rows[i]->probability);
  }
}

CovarianceSchedule zoro_step(const OcpSpec& spec, const Iterate& iterate,
                             const std::vector<AffineStageDynamics>& affine,
                             const ResidualEvaluation& residual) {
  const int N = spec.N;
  require_dims(static_cast<int>(affine.size()) == N, "zoro_step: affine stages");
  std::vector<Mat> A(N), cov;
  for (int k = 0; k < N; ++k) A[k] = affine[k].A;
  if (residual.has_covariance) {
    require_dims(static_cast<int>(residual.size()) == N, "zoro_step: residual stages");
    cov.resize(N);
    for (int k = 0; k < N; ++k) cov[k] = residual.stages[k].cov;
  }
  CovarianceSchedule s;
  s.sigma = propagate(spec, A, cov);
  s.beta.resize(N + 1);
  const Vec no_input(0);
  for (int k = 0; k <= N; ++k) {
    Mat C;
    Vec gamma;
    tightening_rows(spec, k, iterate.x[k], k < N ? iterate.u[k] : no_input, C, gamma);
    s.beta[k] = tighten(C, s.sigma[k], gamma, &s.clamped);
  }
  return s;
}

FeasibilityReport verify_feasibility(const OcpSpec& spec, const ResidualModel& model,
                                     const Iterate& iterate, const CovarianceSchedule& schedule,
                                     double tol, int workers) {
  FeasibilityReport rep;
  const int N = spec.N;
  const LinearizationBatch batch = LinearizationBatch::from_iterate(iterate);
  const ResidualEvaluation eval = evaluate_batch(model, batch, workers);
  const auto nominal = nominal_sensitivities(spec, batch);
  const auto affine = assemble_affine(spec, nominal, eval, batch);
  const CovarianceSchedule fresh = zoro_step(spec, iterate, affine, eval);
  for (int k = 0; k < N; ++k) {
    const Vec next = nominal[k].x_next + spec.Bd * eval.stages[k].value;
    const double d = (next - iterate.x[k + 1]).cwiseAbs().maxCoeff();
    rep.max_defect = std::max(rep.max_defect, d);
    if (d > tol) rep.issues.push_back({"dynamics", k, "", d});
  }
  const Vec no_input(0);
  for (int k = 0; k <= N; ++k) {
    const auto rows = spec.stage_rows(k);
    const Vec& u = k < N ? iterate.u[k] : no_input;
    for (size_t i = 0; i < rows.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double slack =
          rows[i]->soft && iterate.slack[k].size() > ii ? std::max(iterate.slack[k](ii), 0.0) : 0.0;
      const double v = rows[i]->fn(iterate.x[k], u, nullptr, nullptr) + fresh.beta[k](ii) - slack;
      rep.max_violation = std::max(rep.max_violation, v);
      if (v > tol) rep.issues.push_back({"constraint", k, rows[i]->name, v});
      if (!schedule.empty() && schedule.beta[k].size() == fresh.beta[k].size()) {
        const double db = std::abs(schedule.beta[k](ii) - fresh.beta[k](ii));
        rep.max_beta_change = std::max(rep.max_beta_change, db);
        if (db > tol) rep.issues.push_back({"tightening", k, rows[i]->name, db});
      }
    }
  }
  return rep;
}

void write_schedule_json(std::ostream& os, const CovarianceSchedule& schedule,
                         const std::vector<std::pair<int, int>>& pairs) {
  nlohmann::json j;
  j["clamped"] = schedule.clamped;
  j["stages"] = nlohmann::json::array();
  for (size_t k = 0; k < schedule.sigma.size(); ++k) {
    nlohmann::json st;
    st["k"] = k;
    st["beta"] = std::vector<double>(schedule.beta[k].data(),
                                     schedule.beta[k].data() + schedule.beta[k].size());
    st["projections"] = nlohmann::json::array();
    const Mat& S = schedule.sigma[k];
    for (const auto& [a, b] : pairs) {
      require_dims(a >= 0 && b >= 0 && a < S.rows() && b < S.rows(), "schedule dump: state pair");
      st["projections"].push_back(
          {{"pair", {a, b}}, {"cov", {{S(a, a), S(a, b)}, {S(b, a), S(b, b)}}}});
    }
    j["stages"].push_back(st);
  }
  os << j.dump(2) << "\n";
}

}  // namespace resmpc
