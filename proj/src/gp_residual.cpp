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

#include "resmpc/gp_residual.hpp"

namespace resmpc {

GpResidual::GpResidual(std::shared_ptr<const GpModel> model, int nx, int nu)
    : model_(std::move(model)), nx_(nx), nu_(nu) {
  if (!model_) throw std::invalid_argument("GpResidual: null model");
  features_ = model_->data.features;
  if (features_.empty())
    for (int i = 0; i < nx; ++i) features_.push_back(i);
  require_dims(static_cast<int>(features_.size()) == model_->feature_dim(),
               "GpResidual: feature list size != model feature dimension");
  for (int f : features_)
    if (f < 0 || f >= nx + nu) throw DimensionError("GpResidual: feature index out of range");
}

void GpResidual::evaluate_point(const Vec& x, const Vec& u, StageResidual& out) const {
  require_dims(x.size() == nx_ && u.size() == nu_, "GpResidual: (x, u) dimensions");
  const GpPrediction p = predict(*model_, select_features(x, u, features_));
  const int ng = output_dim();
  out.value = p.mean;
  out.jac_x = Mat::Zero(ng, nx_);
  out.jac_u = Mat::Zero(ng, nu_);
  for (size_t i = 0; i < features_.size(); ++i) {
    const int f = features_[i];
    const auto col = p.mean_jac.col(static_cast<Eigen::Index>(i));
    if (f < nx_) out.jac_x.col(f) += col;
    else out.jac_u.col(f - nx_) += col;
  }
  out.cov = p.variance.asDiagonal();
}

}  // namespace resmpc
