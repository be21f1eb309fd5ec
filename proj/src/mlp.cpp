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

#include "resmpc/mlp.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace resmpc {

MlpResidual::MlpResidual(std::vector<DenseLayer> layers, int nx, int nu, std::vector<int> features)
    : layers_(std::move(layers)), nx_(nx), nu_(nu), features_(std::move(features)) {
  if (layers_.empty()) throw DimensionError("MlpResidual: at least one layer required");
  if (features_.empty())
    for (int i = 0; i < nx_; ++i) features_.push_back(i);
  for (int f : features_)
    if (f < 0 || f >= nx_ + nu_) throw DimensionError("MlpResidual: feature index out of range");
  int width = static_cast<int>(features_.size());
  for (size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& L = layers_[l];
    if (L.in != width || L.weight.size() != static_cast<size_t>(L.in) * L.out ||
        L.bias.size() != static_cast<size_t>(L.out))
      throw DimensionError("MlpResidual: inconsistent shape in layer " + std::to_string(l));
    width = L.out;
  }
}

MlpResidual MlpResidual::zero_weights(int nx, int nu, int ng, int width, int hidden_layers) {
  std::vector<DenseLayer> layers;
  int in = nx;
  for (int l = 0; l < hidden_layers; ++l) {
    layers.push_back({in, width, std::vector<double>(static_cast<size_t>(in) * width, 0.0),
                      std::vector<double>(width, 0.0), Activation::Tanh});
    in = width;
  }
  layers.push_back({in, ng, std::vector<double>(static_cast<size_t>(in) * ng, 0.0),
                    std::vector<double>(ng, 0.0), Activation::Identity});
  return MlpResidual(std::move(layers), nx, nu);
}

void MlpResidual::run(const std::vector<double>& inputs, int cols, std::vector<double>& values,
                      std::vector<double>& jac) const {
  const size_t C = static_cast<size_t>(cols);
  const size_t n_layers = layers_.size();
  // acts[0] = inputs, acts[l+1] = output of layer l; derivs[l] = act'(z_l)
  std::vector<std::vector<double>> acts(n_layers + 1);
  std::vector<std::vector<double>> derivs(n_layers);
  acts[0] = inputs;
  std::vector<double> acc(C);
  for (size_t l = 0; l < n_layers; ++l) {
    const DenseLayer& L = layers_[l];
    const std::vector<double>& a = acts[l];
    std::vector<double>& next = acts[l + 1];
    std::vector<double>& d = derivs[l];
    next.assign(static_cast<size_t>(L.out) * C, 0.0);
    d.assign(static_cast<size_t>(L.out) * C, 1.0);
    for (int i = 0; i < L.out; ++i) {
      const double* w = &L.weight[static_cast<size_t>(i) * L.in];
      for (size_t c = 0; c < C; ++c) acc[c] = L.bias[i];
      for (int j = 0; j < L.in; ++j) {
        const double wij = w[j];
        const double* aj = &a[static_cast<size_t>(j) * C];
        for (size_t c = 0; c < C; ++c) acc[c] += wij * aj[c];
      }
      double* out = &next[static_cast<size_t>(i) * C];
      if (L.activation == Activation::Tanh) {
        double* di = &d[static_cast<size_t>(i) * C];
        for (size_t c = 0; c < C; ++c) {
          const double t = std::tanh(acc[c]);
          out[c] = t;
          di[c] = 1.0 - t * t;
        }
      } else {
        for (size_t c = 0; c < C; ++c) out[c] = acc[c];
      }
    }
  }
  const int ng = layers_.back().out;
  values = acts[n_layers];

  // Reverse pass. adj[(r * width + j) * C + c] = d out_r / d a_j for column c.
  std::vector<double> adj(static_cast<size_t>(ng) * ng * C, 0.0);
  for (int r = 0; r < ng; ++r)
    for (size_t c = 0; c < C; ++c) adj[(static_cast<size_t>(r) * ng + r) * C + c] = 1.0;
  std::vector<double> prev;
  for (size_t l = n_layers; l-- > 0;) {
    const DenseLayer& L = layers_[l];
    const std::vector<double>& d = derivs[l];
    if (L.activation != Activation::Identity) {
      for (int r = 0; r < ng; ++r)
        for (int i = 0; i < L.out; ++i) {
          double* ai = &adj[(static_cast<size_t>(r) * L.out + i) * C];
          const double* di = &d[static_cast<size_t>(i) * C];
          for (size_t c = 0; c < C; ++c) ai[c] *= di[c];
        }
    }
    prev.assign(static_cast<size_t>(ng) * L.in * C, 0.0);
    for (int i = 0; i < L.out; ++i) {
      const double* w = &L.weight[static_cast<size_t>(i) * L.in];
      for (int j = 0; j < L.in; ++j) {
        const double wij = w[j];
        for (int r = 0; r < ng; ++r) {
          const double* ai = &adj[(static_cast<size_t>(r) * L.out + i) * C];
          double* pj = &prev[(static_cast<size_t>(r) * L.in + j) * C];
          for (size_t c = 0; c < C; ++c) pj[c] += ai[c] * wij;
        }
      }
    }
    adj.swap(prev);
  }
  jac = std::move(adj);  // ng x n_feat x C
}

void MlpResidual::evaluate_point(const Vec& x, const Vec& u, StageResidual& out) const {
  LinearizationBatch b;
  b.x = {x};
  b.u = {u};
  std::vector<StageResidual> tmp(1);
  evaluate_block(b, 0, 1, tmp);
  out = std::move(tmp[0]);
}

void MlpResidual::evaluate_block(const LinearizationBatch& batch, size_t begin, size_t end,
                                 std::vector<StageResidual>& out) const {
  if (end <= begin) return;
  const int cols = static_cast<int>(end - begin);
  const size_t C = static_cast<size_t>(cols);
  const int nf = static_cast<int>(features_.size());
  std::vector<double> inputs(static_cast<size_t>(nf) * C);
  for (size_t c = 0; c < C; ++c) {
    const Vec& x = batch.x[begin + c];
    const Vec& u = batch.u[begin + c];
    require_dims(x.size() == nx_ && u.size() == nu_, "MlpResidual: input dimension mismatch");
    for (int f = 0; f < nf; ++f) {
      const int idx = features_[f];
      inputs[static_cast<size_t>(f) * C + c] = idx < nx_ ? x(idx) : u(idx - nx_);
    }
  }
  std::vector<double> values, jac;
  run(inputs, cols, values, jac);
  const int ng = output_dim();
  for (size_t c = 0; c < C; ++c) {
    StageResidual& r = out[begin + c];
    r.value.resize(ng);
    r.jac_x = Mat::Zero(ng, nx_);
    r.jac_u = Mat::Zero(ng, nu_);
    r.cov.resize(0, 0);
    for (int o = 0; o < ng; ++o) {
      r.value(o) = values[static_cast<size_t>(o) * C + c];
      for (int f = 0; f < nf; ++f) {
        const double v = jac[(static_cast<size_t>(o) * nf + f) * C + c];
        const int idx = features_[f];
        if (idx < nx_)
          r.jac_x(o, idx) += v;
        else
          r.jac_u(o, idx - nx_) += v;
      }
    }
  }
}

namespace {

constexpr char kMagic[8] = {'R', 'E', 'S', 'M', 'L', 'P', '0', '1'};

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

template <typename T>
void put(std::ostream& os, T v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("load_mlp_weights: truncated file");
  return to_little(v);
}

}  // namespace

void save_mlp_weights(const std::string& path, const std::vector<DenseLayer>& layers) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_mlp_weights: cannot open " + path);
  os.write(kMagic, sizeof(kMagic));
  put<std::uint64_t>(os, layers.size());
  for (const auto& L : layers) {
    put<std::uint64_t>(os, static_cast<std::uint64_t>(L.in));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(L.out));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(L.activation));
  }
  for (const auto& L : layers) {
    for (double w : L.weight) put<double>(os, w);
    for (double b : L.bias) put<double>(os, b);
  }
  if (!os) throw std::runtime_error("save_mlp_weights: write failed for " + path);
}

std::vector<DenseLayer> load_mlp_weights(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_mlp_weights: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("load_mlp_weights: bad magic in " + path);
  const auto n = get<std::uint64_t>(is);
  if (n == 0 || n > 10000) throw std::runtime_error("load_mlp_weights: bad layer count");
  std::vector<DenseLayer> layers(n);
  for (auto& L : layers) {
    L.in = static_cast<int>(get<std::uint64_t>(is));
    L.out = static_cast<int>(get<std::uint64_t>(is));
    const auto act = get<std::uint64_t>(is);
    if (act > 1) throw std::runtime_error("load_mlp_weights: unknown activation code");
    L.activation = static_cast<Activation>(act);
    if (L.in <= 0 || L.out <= 0) throw std::runtime_error("load_mlp_weights: bad layer shape");
  }
  for (auto& L : layers) {
    L.weight.resize(static_cast<size_t>(L.in) * L.out);
    L.bias.resize(L.out);
    for (double& w : L.weight) w = get<double>(is);
    for (double& b : L.bias) b = get<double>(is);
  }
  return layers;
}

}  // namespace resmpc
