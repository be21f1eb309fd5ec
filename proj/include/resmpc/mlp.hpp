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

#include <string>
#include <vector>

#include "resmpc/residual_model.hpp"

namespace resmpc {

enum class Activation { Identity = 0, Tanh = 1 };

/// Dense layer a_out = act(W a_in + b), W stored row-major (out x in).
struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> weight;
  std::vector<double> bias;
  Activation activation = Activation::Identity;
};

/// Multi-layer perceptron residual on selected (x, u) features.
///
/// The Jacobian is formed by reverse accumulation through the layers. Block
/// evaluation streams each weight row once per block instead of once per
/// stage; per-stage arithmetic is the same as for a single point, so blocked
/// and point-wise results agree bit for bit.
class MlpResidual final : public ResidualModel {
 public:
  /// `features` index the concatenation (x, u); empty selects all of x.
  MlpResidual(std::vector<DenseLayer> layers, int nx, int nu, std::vector<int> features = {});

  /// `hidden_layers` tanh layers of `width` neurons plus a linear output, all
  /// weights and biases zero, so g == 0 identically.
  static MlpResidual zero_weights(int nx, int nu, int ng, int width, int hidden_layers);

  int state_dim() const override { return nx_; }
  int input_dim() const override { return nu_; }
  int output_dim() const override { return layers_.back().out; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  const std::vector<int>& features() const { return features_; }

  void evaluate_point(const Vec& x, const Vec& u, StageResidual& out) const override;
  void evaluate_block(const LinearizationBatch& batch, size_t begin, size_t end,
                      std::vector<StageResidual>& out) const override;

 private:
  // inputs: n_feat x cols, column c contiguous across rows with stride cols.
  void run(const std::vector<double>& inputs, int cols, std::vector<double>& values,
           std::vector<double>& jac) const;

  std::vector<DenseLayer> layers_;
  int nx_, nu_;
  std::vector<int> features_;
};

/// Little-endian binary weights: magic "RESMLP01", u64 layer count, per layer
/// u64 (in, out, activation), then per layer W row-major and b as f64.
void save_mlp_weights(const std::string& path, const std::vector<DenseLayer>& layers);
std::vector<DenseLayer> load_mlp_weights(const std::string& path);

}  // namespace resmpc
