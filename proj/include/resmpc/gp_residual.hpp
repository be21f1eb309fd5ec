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

#include "resmpc/gp.hpp"
#include "resmpc/residual_model.hpp"

namespace resmpc {

/// Residual-model adapter around a GP: value = posterior mean, cov =
/// diag(posterior variance), Jacobians scattered through the feature list.
class GpResidual final : public ResidualModel {
 public:
  GpResidual(std::shared_ptr<const GpModel> model, int nx, int nu);

  int state_dim() const override { return nx_; }
  int input_dim() const override { return nu_; }
  int output_dim() const override { return model_->output_dim(); }
  bool provides_covariance() const override { return true; }

  void evaluate_point(const Vec& x, const Vec& u, StageResidual& out) const override;

  const GpModel& model() const { return *model_; }
  const std::vector<int>& features() const { return features_; }

 private:
  std::shared_ptr<const GpModel> model_;
  int nx_, nu_;
  std::vector<int> features_;
};

}  // namespace resmpc
