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

#include "resmpc/residual_model.hpp"

#include <omp.h>

#include <algorithm>
#include <exception>

namespace resmpc {

LinearizationBatch LinearizationBatch::from_iterate(const Iterate& it) {
  LinearizationBatch b;
  b.u = it.u;
  b.x.assign(it.x.begin(), it.x.begin() + static_cast<long>(it.u.size()));
  return b;
}

void ResidualModel::evaluate_block(const LinearizationBatch& batch, size_t begin, size_t end,
                                   std::vector<StageResidual>& out) const {
  for (size_t k = begin; k < end; ++k) evaluate_point(batch.x[k], batch.u[k], out[k]);
}

void finite_difference_jacobians(const ResidualModel& model, const Vec& x, const Vec& u,
                                 StageResidual& out) {
  const int ng = model.output_dim();
  out.jac_x.resize(ng, x.size());
  out.jac_u.resize(ng, u.size());
  StageResidual plus, minus;
  Vec xp = x, up = u;
  for (int i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * (1.0 + std::abs(x(i)));
    xp(i) = x(i) + h;
    model.evaluate_point(xp, u, plus);
    xp(i) = x(i) - h;
    model.evaluate_point(xp, u, minus);
    xp(i) = x(i);
    out.jac_x.col(i) = (plus.value - minus.value) / (2.0 * h);
  }
  for (int i = 0; i < u.size(); ++i) {
    const double h = 1e-6 * (1.0 + std::abs(u(i)));
    up(i) = u(i) + h;
    model.evaluate_point(x, up, plus);
    up(i) = u(i) - h;
    model.evaluate_point(x, up, minus);
    up(i) = u(i);
    out.jac_u.col(i) = (plus.value - minus.value) / (2.0 * h);
  }
}

namespace {

void check_batch(const ResidualModel& model, const LinearizationBatch& batch) {
  require_dims(batch.x.size() == batch.u.size(), "evaluate_batch: state/input count differ");
  for (size_t k = 0; k < batch.size(); ++k) {
    if (batch.x[k].size() != model.state_dim() || batch.u[k].size() != model.input_dim())
      throw DimensionError("evaluate_batch: stage " + std::to_string(k) +
                           " dimensions do not match the residual model");
  }
}

void finish_stage(const ResidualModel& model, const LinearizationBatch& batch, size_t k,
                  StageResidual& r) {
  const int ng = model.output_dim();
  if (!model.provides_jacobians()) finite_difference_jacobians(model, batch.x[k], batch.u[k], r);
  if (r.value.size() != ng || r.jac_x.rows() != ng || r.jac_x.cols() != model.state_dim() ||
      r.jac_u.rows() != ng || r.jac_u.cols() != model.input_dim())
    throw ResidualEvaluationError("residual model returned wrong shapes at stage " +
                                      std::to_string(k), static_cast<int>(k));
  if (!r.value.allFinite() || !r.jac_x.allFinite() || !r.jac_u.allFinite())
    throw ResidualEvaluationError("residual model returned non-finite values at stage " +
                                      std::to_string(k), static_cast<int>(k));
  if (model.provides_covariance()) {
    if (r.cov.rows() != ng || r.cov.cols() != ng || !r.cov.allFinite())
      throw ResidualEvaluationError("residual covariance invalid at stage " + std::to_string(k),
                                    static_cast<int>(k));
  }
}

// Re-runs a failed block point by point so the error names its stage.
[[noreturn]] void locate_failure(const ResidualModel& model, const LinearizationBatch& batch,
                                 size_t begin, size_t end, std::exception_ptr original) {
  StageResidual r;
  for (size_t k = begin; k < end; ++k) {
    try {
      model.evaluate_point(batch.x[k], batch.u[k], r);
      finish_stage(model, batch, k, r);
    } catch (const ResidualEvaluationError&) {
      throw;
    } catch (const std::exception& e) {
      throw ResidualEvaluationError("residual model failed at stage " + std::to_string(k) +
                                        ": " + e.what(), static_cast<int>(k));
    }
  }
  std::rethrow_exception(original);
}

}  // namespace

ResidualEvaluation evaluate_batch_serial(const ResidualModel& model,
                                         const LinearizationBatch& batch) {
  check_batch(model, batch);
  ResidualEvaluation res;
  res.has_covariance = model.provides_covariance();
  res.stages.resize(batch.size());
  for (size_t k = 0; k < batch.size(); ++k) {
    try {
      model.evaluate_point(batch.x[k], batch.u[k], res.stages[k]);
    } catch (const std::exception& e) {
      throw ResidualEvaluationError("residual model failed at stage " + std::to_string(k) +
                                        ": " + e.what(), static_cast<int>(k));
    }
    finish_stage(model, batch, k, res.stages[k]);
  }
  return res;
}

ResidualEvaluation evaluate_batch(const ResidualModel& model, const LinearizationBatch& batch,
                                  int workers) {
  if (workers < 1) throw std::invalid_argument("evaluate_batch: workers must be >= 1");
  check_batch(model, batch);
  ResidualEvaluation res;
  res.has_covariance = model.provides_covariance();
  const size_t n = batch.size();
  res.stages.resize(n);
  if (n == 0) return res;

  const int p = static_cast<int>(std::min<size_t>(static_cast<size_t>(workers), n));
  std::vector<std::exception_ptr> errors(p);
#pragma omp parallel for num_threads(p) schedule(static, 1)
  for (int w = 0; w < p; ++w) {
    const size_t begin = n * static_cast<size_t>(w) / static_cast<size_t>(p);
    const size_t end = n * static_cast<size_t>(w + 1) / static_cast<size_t>(p);
    try {
      model.evaluate_block(batch, begin, end, res.stages);
      for (size_t k = begin; k < end; ++k) finish_stage(model, batch, k, res.stages[k]);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  }
  // lowest failing block wins, so the reported stage is deterministic
  for (int w = 0; w < p; ++w) {
    if (!errors[w]) continue;
    const size_t begin = n * static_cast<size_t>(w) / static_cast<size_t>(p);
    const size_t end = n * static_cast<size_t>(w + 1) / static_cast<size_t>(p);
    locate_failure(model, batch, begin, end, errors[w]);
  }
  return res;
}

std::vector<StageSensitivity> nominal_sensitivities(const OcpSpec& spec,
                                                    const LinearizationBatch& batch) {
  std::vector<StageSensitivity> out;
  out.reserve(batch.size());
  for (size_t k = 0; k < batch.size(); ++k)
    out.push_back(rk4_with_sensitivities(*spec.dynamics, batch.x[k], batch.u[k], spec.disc));
  return out;
}

std::vector<AffineStageDynamics> assemble_affine(const OcpSpec& spec,
                                                 const std::vector<StageSensitivity>& nominal,
                                                 const ResidualEvaluation& residual,
                                                 const LinearizationBatch& batch) {
  const size_t n = batch.size();
  require_dims(nominal.size() == n && residual.size() == n,
               "assemble_affine: inputs cover different stage counts");
  std::vector<AffineStageDynamics> out(n);
  for (size_t k = 0; k < n; ++k) {
    const StageSensitivity& s = nominal[k];
    const StageResidual& r = residual.stages[k];
    require_dims(s.A.rows() == spec.nx && s.A.cols() == spec.nx && s.B.cols() == spec.nu &&
                     r.value.size() == spec.ng && r.jac_x.cols() == spec.nx &&
                     r.jac_u.cols() == spec.nu && spec.Bd.cols() == spec.ng,
                 "assemble_affine: shape mismatch at stage " + std::to_string(k));
    AffineStageDynamics& a = out[k];
    a.A = s.A + spec.Bd * r.jac_x;
    a.B = s.B + spec.Bd * r.jac_u;
    a.c = s.x_next + spec.Bd * r.value - a.A * batch.x[k] - a.B * batch.u[k];
  }
  return out;
}

void ZeroResidual::evaluate_point(const Vec&, const Vec&, StageResidual& out) const {
  out.value = Vec::Zero(ng_);
  out.jac_x = Mat::Zero(ng_, nx_);
  out.jac_u = Mat::Zero(ng_, nu_);
  out.cov.resize(0, 0);
}

LinearResidual::LinearResidual(Mat G, Mat H, Vec offset)
    : G_(std::move(G)), H_(std::move(H)), offset_(std::move(offset)) {
  require_dims(G_.rows() == H_.rows() && offset_.size() == G_.rows(),
               "LinearResidual: G, H and offset must share the output dimension");
}

void LinearResidual::evaluate_point(const Vec& x, const Vec& u, StageResidual& out) const {
  out.value = G_ * x + H_ * u + offset_;
  out.jac_x = G_;
  out.jac_u = H_;
  out.cov.resize(0, 0);
}

}  // namespace resmpc
