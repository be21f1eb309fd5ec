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
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "resmpc/types.hpp"

namespace resmpc {

/// Squared-exponential ARD kernel of one output dimension.
struct OutputKernel {
  double signal_var = 1.0;
  Vec lengthscales;
  double noise_var = 1e-2;

  double operator()(const Vec& a, const Vec& b) const;
};

/// One independent GP per output, so the posterior covariance is diagonal.
struct KernelConfig {
  std::vector<OutputKernel> outputs;

  int output_dim() const { return static_cast<int>(outputs.size()); }
  void validate(int n_features) const;
};

struct GpDataset {
  Mat Z;  // D x n_feat
  Mat Y;  // D x ng
  size_t capacity = std::numeric_limits<size_t>::max();
  std::vector<int> features;  // indices into the concatenation (x, u)

  size_t size() const { return static_cast<size_t>(Z.rows()); }
  int feature_dim() const { return static_cast<int>(Z.cols()); }
  void validate() const;
};

enum class GpVariant { Exact = 0, Inducing = 1, Online = 2 };

/// Factors for a single output dimension.
///
/// Exact: L L^T = K + (noise + jitter) I and alpha = (L L^T)^{-1} y.
/// Inducing: inducing_chol L_m L_m^T = K_mm + jitter I, and L L^T =
/// noise I + V V^T with V = L_m^{-1} K_mn; alpha are the inducing weights.
struct GpOutputFactor {
  Mat L;
  Vec alpha;
  Mat inducing_chol;
  double jitter = 0.0;
};

struct GpModel {
  GpVariant variant = GpVariant::Exact;
  GpDataset data;
  KernelConfig kernel;
  Mat inducing;  // m x n_feat (inducing variant)
  std::vector<GpOutputFactor> factors;
  std::uint64_t seed = 0;
  std::mt19937_64 rng;
  size_t replaced = 0;         // online replacements so far
  size_t refactorizations = 0; // online fallbacks to a full factorization

  int output_dim() const { return kernel.output_dim(); }
  int feature_dim() const { return data.feature_dim(); }
};

struct GpPrediction {
  Vec mean;      // ng
  Vec variance;  // ng, clamped at 0
  Mat mean_jac;  // ng x n_feat
};

/// Cholesky of K + diag I, escalating jitter 1e-10, 1e-9, ..., 1e-4.
/// Returns the jitter that was needed.
double cholesky_with_jitter(const Mat& K, double diag, Mat& L);

GpModel fit_exact(const GpDataset& data, const KernelConfig& kernel, std::uint64_t seed = 0);
GpPrediction predict(const GpModel& model, const Vec& z);
std::vector<GpPrediction> predict_batch(const GpModel& model, const std::vector<Vec>& zs);

/// Subset-of-regressors approximation through the rows of `inducing`.
GpModel fit_sor(const GpDataset& data, const KernelConfig& kernel, const Mat& inducing);

/// Picks inducing points evenly along a feature trajectory and refits.
Mat spread_along(const std::vector<Vec>& trajectory, int m);
GpModel redistribute_inducing(const GpModel& model, const std::vector<Vec>& trajectory);

/// Rank-one extension of every factor with a new data point.
GpModel add_point(const GpModel& model, const Vec& z, const Vec& y);
/// Removes data point `index` by updating the trailing factor block.
GpModel remove_point(const GpModel& model, size_t index);
/// Adds (z, y); at capacity a uniformly random old point is dropped first.
GpModel update_online(const GpModel& model, const Vec& z, const Vec& y);

/// In-place rank-one update L L^T + v v^T.
void cholesky_rank_one_update(Mat& L, Vec v);

/// Gathers the listed entries of (x, u).
Vec select_features(const Vec& x, const Vec& u, const std::vector<int>& indices);

/// CSV with a header row: feat_<i> columns then target_<j> columns.
void save_dataset_csv(const std::string& path, const GpDataset& data);
GpDataset load_dataset_csv(const std::string& path);

/// Versioned binary snapshot of shapes, data and factors.
void save_gp_snapshot(const std::string& path, const GpModel& model);
GpModel load_gp_snapshot(const std::string& path);

}  // namespace resmpc
