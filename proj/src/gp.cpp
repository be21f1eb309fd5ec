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

#include "resmpc/gp.hpp"

#include <Eigen/Cholesky>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace resmpc {

double OutputKernel::operator()(const Vec& a, const Vec& b) const {
  double r2 = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double d = (a(i) - b(i)) / lengthscales(i);
    r2 += d * d;
  }
  return signal_var * std::exp(-0.5 * r2);
}

void KernelConfig::validate(int n_features) const {
  if (outputs.empty()) throw std::invalid_argument("kernel: no output dimensions");
  for (const auto& k : outputs) {
    if (!(k.signal_var > 0.0) || !(k.noise_var > 0.0))
      throw std::invalid_argument("kernel: variances must be strictly positive");
    if (k.lengthscales.size() != n_features)
      throw DimensionError("kernel: lengthscale count != feature count");
    if (!(k.lengthscales.minCoeff() > 0.0))
      throw std::invalid_argument("kernel: lengthscales must be strictly positive");
  }
}

void GpDataset::validate() const {
  require_dims(Z.rows() == Y.rows(), "GpDataset: Z and Y row counts differ");
  require_dims(features.empty() || static_cast<int>(features.size()) == Z.cols(),
               "GpDataset: feature list size != Z columns");
  if (size() > capacity) throw std::invalid_argument("GpDataset: size exceeds capacity");
}

double cholesky_with_jitter(const Mat& K, double diag, Mat& L) {
  const Eigen::Index n = K.rows();
  if (n == 0) {
    L.resize(0, 0);
    return 0.0;
  }
  const double scale = std::max(K.diagonal().cwiseAbs().maxCoeff() + diag, 1e-300);
  double jitter = 0.0;
  for (;;) {
    Mat A = K;
    A.diagonal().array() += diag + jitter;
    Eigen::LLT<Mat> llt(A);
    if (llt.info() == Eigen::Success) {
      L = llt.matrixL();
      const double min_piv = L.diagonal().minCoeff();
      if (L.allFinite() && min_piv > 0.0 && min_piv * min_piv > 1e-14 * scale) return jitter;
    }
    jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0;
    if (jitter > 1e-4 * (1.0 + 1e-9))
      throw NumericalError("GP: kernel matrix not positive definite despite jitter 1e-4");
  }
}

namespace {

Mat kernel_matrix(const OutputKernel& k, const Mat& A, const Mat& B) {
  Mat K(A.rows(), B.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < B.rows(); ++j) K(i, j) = k(A.row(i).transpose(), B.row(j).transpose());
  return K;
}

Vec kernel_vector(const OutputKernel& k, const Mat& A, const Vec& z) {
  Vec v(A.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i) v(i) = k(A.row(i).transpose(), z);
  return v;
}

Vec solve_llt(const Mat& L, const Vec& b) {
  Vec y = L.triangularView<Eigen::Lower>().solve(b);
  return L.transpose().triangularView<Eigen::Upper>().solve(y);
}

void factor_exact_output(const GpModel& m, int j, GpOutputFactor& f) {
  const OutputKernel& k = m.kernel.outputs[j];
  const Mat K = kernel_matrix(k, m.data.Z, m.data.Z);
  f.jitter = cholesky_with_jitter(K, k.noise_var, f.L);
  f.alpha = m.data.size() ? solve_llt(f.L, m.data.Y.col(j)) : Vec();
  f.inducing_chol.resize(0, 0);
}

}  // namespace

GpModel fit_exact(const GpDataset& data, const KernelConfig& kernel, std::uint64_t seed) {
  data.validate();
  kernel.validate(data.feature_dim());
  require_dims(data.Y.cols() == kernel.output_dim() || data.size() == 0,
               "fit_exact: target columns != kernel outputs");
  GpModel m;
  m.variant = GpVariant::Exact;
  m.data = data;
  if (m.data.Y.cols() != kernel.output_dim()) m.data.Y.resize(0, kernel.output_dim());
  m.kernel = kernel;
  m.seed = seed;
  m.rng.seed(seed);
  m.factors.resize(kernel.output_dim());
  for (int j = 0; j < kernel.output_dim(); ++j) factor_exact_output(m, j, m.factors[j]);
  return m;
}

GpPrediction predict(const GpModel& model, const Vec& z) {
  require_dims(z.size() == model.feature_dim(), "GP predict: feature dimension mismatch");
  const int ng = model.output_dim();
  const int nf = model.feature_dim();
  GpPrediction p;
  p.mean = Vec::Zero(ng);
  p.variance = Vec::Zero(ng);
  p.mean_jac = Mat::Zero(ng, nf);
  const bool sor = model.variant == GpVariant::Inducing;
  const Mat& X = sor ? model.inducing : model.data.Z;
  for (int j = 0; j < ng; ++j) {
    const OutputKernel& k = model.kernel.outputs[j];
    const GpOutputFactor& f = model.factors[j];
    if (X.rows() == 0 || (!sor && model.data.size() == 0)) {
      p.variance(j) = k.signal_var;
      continue;
    }
    const Vec ks = kernel_vector(k, X, z);
    p.mean(j) = ks.dot(f.alpha);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const double w = f.alpha(i) * ks(i);
      for (int d = 0; d < nf; ++d) {
        const double l = k.lengthscales(d);
        p.mean_jac(j, d) -= w * (z(d) - X(i, d)) / (l * l);
      }
    }
    double var;
    if (sor) {
      const Vec a = f.inducing_chol.triangularView<Eigen::Lower>().solve(ks);
      const Vec b = f.L.triangularView<Eigen::Lower>().solve(a);
      var = k.noise_var * b.squaredNorm();
    } else {
      const Vec v = f.L.triangularView<Eigen::Lower>().solve(ks);
      var = k.signal_var - v.squaredNorm();
    }
    p.variance(j) = std::max(var, 0.0);
  }
  return p;
}

std::vector<GpPrediction> predict_batch(const GpModel& model, const std::vector<Vec>& zs) {
  std::vector<GpPrediction> out;
  out.reserve(zs.size());
  for (const auto& z : zs) out.push_back(predict(model, z));
  return out;
}

GpModel fit_sor(const GpDataset& data, const KernelConfig& kernel, const Mat& inducing) {
  data.validate();
  kernel.validate(data.feature_dim());
  if (inducing.rows() < 1) throw std::invalid_argument("fit_sor: at least one inducing point");
  require_dims(inducing.cols() == data.feature_dim(), "fit_sor: inducing feature dimension");
  GpModel m;
  m.variant = GpVariant::Inducing;
  m.data = data;
  if (m.data.Y.cols() != kernel.output_dim()) m.data.Y.resize(0, kernel.output_dim());
  m.kernel = kernel;
  m.inducing = inducing;
  m.factors.resize(kernel.output_dim());
  const Eigen::Index mm = inducing.rows();
  for (int j = 0; j < kernel.output_dim(); ++j) {
    const OutputKernel& k = kernel.outputs[j];
    GpOutputFactor& f = m.factors[j];
    const Mat Kmm = kernel_matrix(k, inducing, inducing);
    f.jitter = cholesky_with_jitter(Kmm, 0.0, f.inducing_chol);
    const Mat Kmn = kernel_matrix(k, inducing, data.Z);
    const Mat V = f.inducing_chol.triangularView<Eigen::Lower>().solve(Kmn);
    Mat A = V * V.transpose();
    A.diagonal().array() += k.noise_var;
    Eigen::LLT<Mat> llt(A);
    if (llt.info() != Eigen::Success) throw NumericalError("fit_sor: reduced system not PD");
    f.L = llt.matrixL();
    const Vec rhs = data.size() ? Vec(V * data.Y.col(j)) : Vec(Vec::Zero(mm));
    const Vec t = solve_llt(f.L, rhs);
    f.alpha = f.inducing_chol.transpose().triangularView<Eigen::Upper>().solve(t);
  }
  return m;
}

Mat spread_along(const std::vector<Vec>& trajectory, int m) {
  if (m < 1) throw std::invalid_argument("spread_along: m must be >= 1");
  const int T = static_cast<int>(trajectory.size());
  if (T < m) throw std::invalid_argument("spread_along: trajectory shorter than m");
  Mat U(m, trajectory.front().size());
  for (int i = 0; i < m; ++i) {
    const int idx = m == 1 ? 0 : static_cast<int>(std::lround(static_cast<double>(i) * (T - 1) / (m - 1)));
    U.row(i) = trajectory[idx].transpose();
  }
  return U;
}

GpModel redistribute_inducing(const GpModel& model, const std::vector<Vec>& trajectory) {
  const int m = model.inducing.rows() > 0 ? static_cast<int>(model.inducing.rows()) : 1;
  GpModel out = fit_sor(model.data, model.kernel, spread_along(trajectory, m));
  out.seed = model.seed;
  out.rng = model.rng;
  return out;
}

void cholesky_rank_one_update(Mat& L, Vec v) {
  const Eigen::Index n = L.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double lkk = L(k, k);
    const double r = std::hypot(lkk, v(k));
    const double c = r / lkk;
    const double s = v(k) / lkk;
    L(k, k) = r;
    if (k + 1 < n) {
      const Eigen::Index rest = n - k - 1;
      L.col(k).tail(rest) = (L.col(k).tail(rest) + s * v.tail(rest)) / c;
      v.tail(rest) = c * v.tail(rest) - s * L.col(k).tail(rest);
    }
  }
}

namespace {

void require_exact_like(const GpModel& m, const char* what) {
  if (m.variant == GpVariant::Inducing)
    throw std::invalid_argument(std::string(what) + ": requires an exact or online model");
}

}  // namespace

GpModel add_point(const GpModel& model, const Vec& z, const Vec& y) {
  require_exact_like(model, "add_point");
  require_dims(z.size() == model.feature_dim() && y.size() == model.output_dim(),
               "add_point: point dimensions");
  GpModel m = model;
  const Eigen::Index D = static_cast<Eigen::Index>(model.data.size());
  m.data.Z.conservativeResize(D + 1, model.feature_dim());
  m.data.Y.conservativeResize(D + 1, model.output_dim());
  m.data.Z.row(D) = z.transpose();
  m.data.Y.row(D) = y.transpose();
  for (int j = 0; j < m.output_dim(); ++j) {
    const OutputKernel& k = m.kernel.outputs[j];
    GpOutputFactor& f = m.factors[j];
    const Vec kn = kernel_vector(k, model.data.Z, z);
    const Vec l = D ? Vec(f.L.triangularView<Eigen::Lower>().solve(kn)) : Vec();
    const double d2 = k(z, z) + k.noise_var + f.jitter - l.squaredNorm();
    if (!(d2 > 0.0) || !std::isfinite(d2)) {
      ++m.refactorizations;
      factor_exact_output(m, j, f);
      continue;
    }
    Mat L = Mat::Zero(D + 1, D + 1);
    L.topLeftCorner(D, D) = f.L;
    L.block(D, 0, 1, D) = l.transpose();
    L(D, D) = std::sqrt(d2);
    f.L = std::move(L);
    f.alpha = solve_llt(f.L, m.data.Y.col(j));
  }
  return m;
}

GpModel remove_point(const GpModel& model, size_t index) {
  require_exact_like(model, "remove_point");
  const Eigen::Index D = static_cast<Eigen::Index>(model.data.size());
  const Eigen::Index i = static_cast<Eigen::Index>(index);
  if (i >= D) throw std::out_of_range("remove_point: index out of range");
  GpModel m = model;
  const Eigen::Index tail = D - i - 1;
  auto drop_row = [&](const Mat& A) {
    Mat B(A.rows() - 1, A.cols());
    B.topRows(i) = A.topRows(i);
    B.bottomRows(tail) = A.bottomRows(tail);
    return B;
  };
  m.data.Z = drop_row(model.data.Z);
  m.data.Y = drop_row(model.data.Y);
  for (int j = 0; j < m.output_dim(); ++j) {
    const Mat& L = model.factors[j].L;
    GpOutputFactor& f = m.factors[j];
    Mat L33 = L.bottomRightCorner(tail, tail);
    cholesky_rank_one_update(L33, L.col(i).tail(tail));
    Mat Ln = Mat::Zero(D - 1, D - 1);
    Ln.topLeftCorner(i, i) = L.topLeftCorner(i, i);
    Ln.bottomLeftCorner(tail, i) = L.bottomLeftCorner(tail, i);
    Ln.bottomRightCorner(tail, tail) = L33;
    if (!Ln.allFinite() || (D > 1 && !(Ln.diagonal().minCoeff() > 0.0))) {
      ++m.refactorizations;
      factor_exact_output(m, j, f);
      continue;
    }
    f.L = std::move(Ln);
    f.alpha = D > 1 ? solve_llt(f.L, m.data.Y.col(j)) : Vec();
  }
  return m;
}

GpModel update_online(const GpModel& model, const Vec& z, const Vec& y) {
  require_exact_like(model, "update_online");
  if (model.data.size() < model.data.capacity) return add_point(model, z, y);
  if (model.data.capacity == 0) return model;
  GpModel m = model;
  std::uniform_int_distribution<size_t> pick(0, model.data.size() - 1);
  const size_t victim = pick(m.rng);
  GpModel reduced = remove_point(m, victim);
  reduced.rng = m.rng;
  reduced.replaced = m.replaced + 1;
  return add_point(reduced, z, y);
}

Vec select_features(const Vec& x, const Vec& u, const std::vector<int>& indices) {
  Vec z(static_cast<Eigen::Index>(indices.size()));
  for (size_t i = 0; i < indices.size(); ++i) {
    const int idx = indices[i];
    if (idx < 0 || idx >= x.size() + u.size())
      throw std::out_of_range("select_features: index " + std::to_string(idx) + " out of range");
    z(static_cast<Eigen::Index>(i)) = idx < x.size() ? x(idx) : u(idx - x.size());
  }
  return z;
}

void save_dataset_csv(const std::string& path, const GpDataset& data) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_dataset_csv: cannot open " + path);
  const int nf = data.feature_dim();
  std::vector<int> names = data.features;
  if (names.empty())
    for (int i = 0; i < nf; ++i) names.push_back(i);
  for (int i = 0; i < nf; ++i) os << (i ? "," : "") << "feat_" << names[i];
  for (int j = 0; j < data.Y.cols(); ++j) os << (nf + j ? "," : "") << "target_" << j;
  os << "\n";
  os.precision(17);
  for (size_t r = 0; r < data.size(); ++r) {
    for (int i = 0; i < nf; ++i) os << (i ? "," : "") << data.Z(r, i);
    for (int j = 0; j < data.Y.cols(); ++j) os << (nf + j ? "," : "") << data.Y(r, j);
    os << "\n";
  }
  if (!os) throw std::runtime_error("save_dataset_csv: write failed");
}

GpDataset load_dataset_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_dataset_csv: cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("load_dataset_csv: missing header");
  GpDataset data;
  int nf = 0, ng = 0;
  {
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) {
      if (col.rfind("feat_", 0) == 0) {
        if (ng) throw std::runtime_error("load_dataset_csv: feature column after target column");
        data.features.push_back(std::stoi(col.substr(5)));
        ++nf;
      } else if (col.rfind("target_", 0) == 0) {
        ++ng;
      } else {
        throw std::runtime_error("load_dataset_csv: unknown column '" + col + "'");
      }
    }
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<int>(row.size()) != nf + ng)
      throw std::runtime_error("load_dataset_csv: row width differs from header");
    rows.push_back(std::move(row));
  }
  data.Z.resize(static_cast<Eigen::Index>(rows.size()), nf);
  data.Y.resize(static_cast<Eigen::Index>(rows.size()), ng);
  for (size_t r = 0; r < rows.size(); ++r) {
    for (int i = 0; i < nf; ++i) data.Z(r, i) = rows[r][i];
    for (int j = 0; j < ng; ++j) data.Y(r, j) = rows[r][nf + j];
  }
  return data;
}

namespace {

constexpr char kSnapMagic[8] = {'R', 'E', 'S', 'G', 'P', 'S', 'N', 'P'};
constexpr std::uint64_t kSnapVersion = 1;

template <typename T>
T little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

struct Writer {
  std::ostream& os;
  void u64(std::uint64_t v) {
    v = little(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  void f64(double v) {
    v = little(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  void mat(const Mat& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) f64(m(i, j));
  }
  void vec(const Vec& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v(i));
  }
};

struct Reader {
  std::istream& is;
  std::uint64_t u64() {
    std::uint64_t v;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!is) throw std::runtime_error("GP snapshot truncated");
    return little(v);
  }
  double f64() {
    double v;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!is) throw std::runtime_error("GP snapshot truncated");
    return little(v);
  }
  Mat mat() {
    const auto r = u64(), c = u64();
    if (r > (1u << 20) || c > (1u << 20)) throw std::runtime_error("GP snapshot: bad shape");
    Mat m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = f64();
    return m;
  }
  Vec vec() {
    const auto n = u64();
    if (n > (1u << 24)) throw std::runtime_error("GP snapshot: bad length");
    Vec v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = f64();
    return v;
  }
};

}  // namespace

void save_gp_snapshot(const std::string& path, const GpModel& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_gp_snapshot: cannot open " + path);
  os.write(kSnapMagic, sizeof(kSnapMagic));
  Writer w{os};
  w.u64(kSnapVersion);
  w.u64(static_cast<std::uint64_t>(model.variant));
  w.u64(model.seed);
  w.u64(model.data.capacity == std::numeric_limits<size_t>::max() ? 0 : model.data.capacity + 1);
  w.u64(model.data.features.size());
  for (int f : model.data.features) w.u64(static_cast<std::uint64_t>(f));
  w.mat(model.data.Z);
  w.mat(model.data.Y);
  w.mat(model.inducing);
  w.u64(model.kernel.outputs.size());
  for (const auto& k : model.kernel.outputs) {
    w.f64(k.signal_var);
    w.f64(k.noise_var);
    w.vec(k.lengthscales);
  }
  for (const auto& f : model.factors) {
    w.f64(f.jitter);
    w.mat(f.L);
    w.vec(f.alpha);
    w.mat(f.inducing_chol);
  }
  if (!os) throw std::runtime_error("save_gp_snapshot: write failed");
}

GpModel load_gp_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_gp_snapshot: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kSnapMagic, sizeof(kSnapMagic)) != 0)
    throw std::runtime_error("load_gp_snapshot: not a GP snapshot");
  Reader r{is};
  if (r.u64() != kSnapVersion) throw std::runtime_error("load_gp_snapshot: unsupported version");
  GpModel m;
  const auto variant = r.u64();
  if (variant > 2) throw std::runtime_error("load_gp_snapshot: unknown variant");
  m.variant = static_cast<GpVariant>(variant);
  m.seed = r.u64();
  m.rng.seed(m.seed);
  const auto cap = r.u64();
  m.data.capacity = cap == 0 ? std::numeric_limits<size_t>::max() : cap - 1;
  const auto nfeat = r.u64();
  for (std::uint64_t i = 0; i < nfeat; ++i) m.data.features.push_back(static_cast<int>(r.u64()));
  m.data.Z = r.mat();
  m.data.Y = r.mat();
  m.inducing = r.mat();
  const auto ng = r.u64();
  for (std::uint64_t j = 0; j < ng; ++j) {
    OutputKernel k;
    k.signal_var = r.f64();
    k.noise_var = r.f64();
    k.lengthscales = r.vec();
    m.kernel.outputs.push_back(k);
  }
  for (std::uint64_t j = 0; j < ng; ++j) {
    GpOutputFactor f;
    f.jitter = r.f64();
    f.L = r.mat();
    f.alpha = r.vec();
    f.inducing_chol = r.mat();
    m.factors.push_back(std::move(f));
  }
  return m;
}

}  // namespace resmpc
