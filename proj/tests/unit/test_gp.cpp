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


#include "doctest.h"

#include <Eigen/Dense>

#include <cstdio>
#include <filesystem>

#include "resmpc/gp.hpp"
#include "resmpc/gp_residual.hpp"
#include "resmpc/racing.hpp"
#include "support.hpp"

using namespace resmpc;

namespace {

KernelConfig iso_kernel(int ng, int nf, double sf2, double ell, double sn2) {
  KernelConfig k;
  for (int j = 0; j < ng; ++j) k.outputs.push_back({sf2, Vec::Constant(nf, ell), sn2});
  return k;
}

GpDataset gp_data(std::mt19937_64& rng, int D, int nf, int ng) {
  GpDataset d;
  d.Z = test::random_mat(rng, D, nf, 2.0);
  d.Y.resize(D, ng);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < ng; ++j) d.Y(i, j) = std::sin(d.Z(i, 0) + j) + 0.3 * d.Z(i, nf - 1);
  for (int f = 0; f < nf; ++f) d.features.push_back(f);
  return d;
}

Mat fresh_factor(const GpModel& m, int j) {
  const OutputKernel& k = m.kernel.outputs[j];
  const Eigen::Index D = m.data.Z.rows();
  Mat K(D, D);
  for (Eigen::Index a = 0; a < D; ++a)
    for (Eigen::Index b = 0; b < D; ++b) K(a, b) = k(m.data.Z.row(a).transpose(), m.data.Z.row(b).transpose());
  K.diagonal().array() += k.noise_var + m.factors[j].jitter;
  return K.llt().matrixL();
}

// Feature trajectory resembling one lap: (vx, vy, omega, T, delta).
Vec lap_features(double s) {
  const double w = 2.0 * M_PI * s;
  Vec z(5);
  z << 1.5 + 0.8 * std::sin(w), 0.1 * std::sin(2 * w), 2.0 * std::sin(w + 1.0),
      0.4 + 0.3 * std::cos(w), 0.25 * std::sin(w + 1.0);
  return z;
}

// Projected one-step velocity error of the nominal against the plant.
Vec racing_residual(const Vec& z) {
  const RacingConfig cfg = RacingConfig::defaults();
  const BicyclePacejka plant(cfg.plant), nominal(cfg.nominal);
  Vec x = Vec::Zero(9);
  x.segment(3, 5) = z;
  const Vec u = (Vec(3) << 0.0, 0.0, 1.0).finished();
  const DiscretizationConfig disc{cfg.dt, cfg.rk4_steps};
  return project_measurement(rk4_step(plant, x, u, disc), rk4_step(nominal, x, u, disc), racing_bd());
}

}  // namespace

TEST_CASE("prior-only model predicts the prior") {
  GpDataset d;
  d.Z.resize(0, 3);
  d.Y.resize(0, 2);
  const GpModel m = fit_exact(d, iso_kernel(2, 3, 0.7, 1.0, 0.01));
  const GpPrediction p = predict(m, Vec::Constant(3, 0.4));
  CHECK(p.mean == Vec::Zero(2));
  CHECK(p.variance(0) == doctest::Approx(0.7));
  CHECK(p.mean_jac == Mat::Zero(2, 3));
}

TEST_CASE("single noise-free point is interpolated") {
  GpDataset d;
  d.Z = (Mat(1, 2) << 0.3, -0.1).finished();
  d.Y = (Mat(1, 1) << 1.7).finished();
  d.features = {0, 1};
  const GpModel m = fit_exact(d, iso_kernel(1, 2, 1.0, 0.5, 1e-12));
  const GpPrediction p = predict(m, d.Z.row(0).transpose());
  CHECK(std::abs(p.mean(0) - 1.7) < 1e-9);
  CHECK(p.variance(0) < 1e-9);
}

TEST_CASE("posterior mean equals a dense linear solve") {
  std::mt19937_64 rng(1);
  const GpDataset d = gp_data(rng, 50, 3, 2);
  const KernelConfig k = iso_kernel(2, 3, 0.8, 1.1, 0.05);
  const GpModel m = fit_exact(d, k);
  for (int t = 0; t < 5; ++t) {
    const Vec z = test::random_vec(rng, 3, 2.0);
    const GpPrediction p = predict(m, z);
    for (int j = 0; j < 2; ++j) {
      Mat K(50, 50);
      Vec ks(50);
      for (int a = 0; a < 50; ++a) {
        ks(a) = k.outputs[j](d.Z.row(a).transpose(), z);
        for (int b = 0; b < 50; ++b) K(a, b) = k.outputs[j](d.Z.row(a).transpose(), d.Z.row(b).transpose());
      }
      K.diagonal().array() += k.outputs[j].noise_var;
      const Eigen::PartialPivLU<Mat> lu(K);
      const double mean = ks.dot(lu.solve(Vec(d.Y.col(j))));
      const double var = k.outputs[j].signal_var - ks.dot(lu.solve(ks));
      CHECK(std::abs(p.mean(j) - mean) < 1e-10);
      CHECK(std::abs(p.variance(j) - var) < 1e-10);
    }
  }
}

TEST_CASE("far-field prediction decays to the prior") {
  std::mt19937_64 rng(2);
  const GpModel m = fit_exact(gp_data(rng, 20, 2, 1), iso_kernel(1, 2, 0.9, 0.5, 0.01));
  const GpPrediction p = predict(m, Vec::Constant(2, 100.0));
  CHECK(std::abs(p.mean(0)) < 1e-12);
  CHECK(p.variance(0) == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("mean Jacobian matches finite differences at random points") {
  std::mt19937_64 rng(3);
  KernelConfig k;
  Vec ls(4);
  ls << 0.7, 1.3, 0.9, 2.0;
  k.outputs = {{0.6, ls, 0.02}, {1.2, ls.reverse(), 0.01}};
  const GpModel m = fit_exact(gp_data(rng, 60, 4, 2), k);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Vec z = test::random_vec(rng, 4, 2.0);
    const Mat fd = test::fd_jacobian([&](const Vec& q) { return predict(m, q).mean; }, z);
    worst = std::max(worst, test::tol_ratio(predict(m, z).mean_jac, fd));
  }
  CHECK(worst <= 1.0);
}

TEST_CASE("batch prediction equals single predictions") {
  std::mt19937_64 rng(4);
  const GpModel m = fit_exact(gp_data(rng, 30, 3, 2), iso_kernel(2, 3, 1.0, 1.0, 0.01));
  std::vector<Vec> zs;
  for (int i = 0; i < 7; ++i) zs.push_back(test::random_vec(rng, 3));
  const auto batch = predict_batch(m, zs);
  for (int i = 0; i < 7; ++i) {
    const GpPrediction p = predict(m, zs[i]);
    CHECK(batch[i].mean == p.mean);
    CHECK(batch[i].variance == p.variance);
    CHECK(batch[i].mean_jac == p.mean_jac);
  }
}

TEST_CASE("posterior variance stays nonnegative and shrinks with data") {
  std::mt19937_64 rng(5);
  GpDataset d = gp_data(rng, 40, 2, 1);
  const KernelConfig k = iso_kernel(1, 2, 1.0, 0.8, 1e-6);
  GpModel m = fit_exact(d, k);
  std::vector<Vec> tests;
  for (int i = 0; i < 50; ++i) tests.push_back(test::random_vec(rng, 2, 2.5));
  for (const auto& z : d.Z.rowwise()) tests.push_back(z.transpose());
  std::vector<double> before;
  for (const auto& z : tests) {
    const double v = predict(m, z).variance(0);
    CHECK(v >= 0.0);
    before.push_back(v);
  }
  m = add_point(m, test::random_vec(rng, 2), Vec::Constant(1, 0.3));
  for (size_t i = 0; i < tests.size(); ++i) CHECK(predict(m, tests[i]).variance(0) <= before[i] + 1e-10);
}

TEST_CASE("mean interpolates targets as the noise vanishes") {
  std::mt19937_64 rng(6);
  const GpDataset d = gp_data(rng, 25, 2, 1);
  const GpModel m = fit_exact(d, iso_kernel(1, 2, 1.0, 0.6, 1e-10));
  for (Eigen::Index i = 0; i < d.Z.rows(); ++i)
    CHECK(std::abs(predict(m, d.Z.row(i).transpose()).mean(0) - d.Y(i, 0)) <= 1e-4);
}

TEST_CASE("factor satisfies the regularized kernel identity") {
  std::mt19937_64 rng(7);
  const GpModel m = fit_exact(gp_data(rng, 35, 3, 2), iso_kernel(2, 3, 1.0, 1.0, 0.01));
  for (int j = 0; j < 2; ++j) {
    const Mat& L = m.factors[j].L;
    const Mat ref = fresh_factor(m, j);
    const Mat K = ref * ref.transpose();
    CHECK(test::max_abs(L * L.transpose() - K) <= 1e-8 * test::max_abs(K));
    CHECK(L.diagonal().minCoeff() > 0.0);
    CHECK(test::max_abs(Mat(L.triangularView<Eigen::StrictlyUpper>())) == 0.0);
  }
}

TEST_CASE("cross-output covariance is exactly zero") {
  std::mt19937_64 rng(8);
  auto m = std::make_shared<const GpModel>(fit_exact(gp_data(rng, 20, 3, 3), iso_kernel(3, 3, 1.0, 1.0, 0.01)));
  GpResidual gp(m, 2, 1);
  StageResidual r;
  gp.evaluate_point(test::random_vec(rng, 2), test::random_vec(rng, 1), r);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      if (a != b) CHECK(r.cov(a, b) == 0.0);
}

TEST_CASE("subset of regressors with the full inducing set matches the exact mean") {
  std::mt19937_64 rng(9);
  const GpDataset d = gp_data(rng, 40, 3, 2);
  const KernelConfig k = iso_kernel(2, 3, 1.0, 1.2, 0.05);
  const GpModel exact = fit_exact(d, k);
  const GpModel sor = fit_sor(d, k, d.Z);
  for (int t = 0; t < 10; ++t) {
    const Vec z = test::random_vec(rng, 3, 2.0);
    CHECK(test::max_abs(predict(sor, z).mean - predict(exact, z).mean) <= 1e-8);
  }
}

TEST_CASE("subset of regressors with one inducing point has the closed form") {
  std::mt19937_64 rng(10);
  const GpDataset d = gp_data(rng, 30, 2, 1);
  const KernelConfig k = iso_kernel(1, 2, 0.8, 1.0, 0.1);
  const Vec u = test::random_vec(rng, 2);
  const GpModel sor = fit_sor(d, k, u.transpose());
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < d.Z.rows(); ++i) {
    const double ki = k.outputs[0](u, d.Z.row(i).transpose());
    num += ki * d.Y(i, 0);
    den += ki * ki;
  }
  const double kuu = k.outputs[0](u, u);
  const double mean = kuu * num / (k.outputs[0].noise_var * kuu + den);
  CHECK(std::abs(predict(sor, u).mean(0) - mean) < 1e-12);
}

TEST_CASE("ten inducing points on lap data stay within twice the exact error") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> s01(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto sample = [&](int n, bool sorted) {
    std::vector<double> s(n);
    for (auto& v : s) v = s01(rng);
    if (sorted) std::sort(s.begin(), s.end());
    GpDataset d;
    d.Z.resize(n, 5);
    d.Y.resize(n, 3);
    d.features = racing_features();
    for (int i = 0; i < n; ++i) {
      d.Z.row(i) = lap_features(s[i]).transpose();
      const Vec y = racing_residual(d.Z.row(i).transpose());
      d.Y.row(i) = y.transpose();
    }
    return d;
  };
  GpDataset train = sample(400, true);
  const KernelConfig k = racing_kernel();
  for (Eigen::Index i = 0; i < train.Z.rows(); ++i)
    for (int j = 0; j < 3; ++j) train.Y(i, j) += std::sqrt(k.outputs[j].noise_var) * noise(rng);
  const GpDataset held = sample(100, false);
  std::vector<Vec> traj;
  for (Eigen::Index i = 0; i < train.Z.rows(); ++i) traj.push_back(train.Z.row(i).transpose());
  const GpModel exact = fit_exact(train, k);
  const GpModel sor = fit_sor(train, k, spread_along(traj, 10));
  Vec se_exact = Vec::Zero(3), se_sor = Vec::Zero(3);
  for (Eigen::Index i = 0; i < held.Z.rows(); ++i) {
    const Vec z = held.Z.row(i).transpose();
    se_exact += (predict(exact, z).mean - held.Y.row(i).transpose()).array().square().matrix();
    se_sor += (predict(sor, z).mean - held.Y.row(i).transpose()).array().square().matrix();
  }
  for (int j = 0; j < 3; ++j) {
    INFO("output " << j << " rmse exact " << std::sqrt(se_exact(j) / 100) << " sor " << std::sqrt(se_sor(j) / 100));
    CHECK(std::sqrt(se_sor(j)) <= 2.0 * std::sqrt(se_exact(j)));
  }
}

TEST_CASE("redistribution along a trajectory") {
  std::mt19937_64 rng(12);
  const GpDataset d = gp_data(rng, 30, 2, 1);
  const KernelConfig k = iso_kernel(1, 2, 1.0, 1.0, 0.01);
  const GpModel base = fit_sor(d, k, test::random_mat(rng, 4, 2));

  SUBCASE("constant trajectory keeps predictions finite") {
    const std::vector<Vec> traj(10, Vec::Constant(2, 0.5));
    const GpModel m = redistribute_inducing(base, traj);
    CHECK(m.inducing.rows() == 4);
    const GpPrediction p = predict(m, Vec::Constant(2, 0.1));
    CHECK(p.mean.allFinite());
    CHECK(p.variance.allFinite());
  }
  SUBCASE("m equal to the trajectory length uses the whole trajectory") {
    std::vector<Vec> traj;
    for (int i = 0; i < 4; ++i) traj.push_back(test::random_vec(rng, 2));
    const GpModel m = redistribute_inducing(base, traj);
    for (int i = 0; i < 4; ++i) CHECK(Vec(m.inducing.row(i).transpose()) == traj[i]);
  }
  SUBCASE("refit equals a direct fit on the selected points") {
    std::vector<Vec> traj;
    for (int i = 0; i < 17; ++i) traj.push_back(test::random_vec(rng, 2));
    const GpModel m = redistribute_inducing(base, traj);
    const GpModel direct = fit_sor(d, k, spread_along(traj, 4));
    CHECK(m.inducing == direct.inducing);
    CHECK(m.factors[0].L == direct.factors[0].L);
    CHECK(m.factors[0].alpha == direct.factors[0].alpha);
  }
}

TEST_CASE("adding then removing a point restores the factor") {
  std::mt19937_64 rng(13);
  const GpModel m = fit_exact(gp_data(rng, 30, 3, 2), iso_kernel(2, 3, 1.0, 1.0, 0.01));
  const GpModel back = remove_point(add_point(m, test::random_vec(rng, 3), test::random_vec(rng, 2)), 30);
  for (int j = 0; j < 2; ++j) CHECK(test::max_abs(back.factors[j].L - m.factors[j].L) <= 1e-8);
  const GpModel mid = remove_point(add_point(m, test::random_vec(rng, 3), test::random_vec(rng, 2)), 7);
  for (int j = 0; j < 2; ++j) CHECK(test::max_abs(mid.factors[j].L - fresh_factor(mid, j)) <= 1e-8);
}

TEST_CASE("online updates match a fresh factorization") {
  std::mt19937_64 rng(14);
  GpDataset d = gp_data(rng, 50, 3, 2);
  d.capacity = 80;
  GpModel m = fit_exact(d, iso_kernel(2, 3, 1.0, 1.0, 0.01), 99);
  for (int t = 0; t < 100; ++t) m = update_online(m, test::random_vec(rng, 3, 2.0), test::random_vec(rng, 2));
  CHECK(m.data.size() == 80);
  CHECK(m.replaced == 70);
  for (int j = 0; j < 2; ++j) CHECK(test::max_abs(m.factors[j].L - fresh_factor(m, j)) <= 1e-7);
  const GpModel fresh = fit_exact(m.data, m.kernel);
  const Vec z = test::random_vec(rng, 3);
  CHECK(test::max_abs(predict(m, z).mean - predict(fresh, z).mean) <= 1e-7);
}

TEST_CASE("online capacity is enforced") {
  std::mt19937_64 rng(15);
  GpDataset d;
  d.Z.resize(0, 2);
  d.Y.resize(0, 1);
  d.capacity = 100;
  d.features = {0, 1};
  GpModel m = fit_exact(d, iso_kernel(1, 2, 1.0, 1.0, 0.01), 5);
  for (int t = 0; t < 150; ++t) m = update_online(m, test::random_vec(rng, 2), test::random_vec(rng, 1));
  CHECK(m.data.size() == 100);
  CHECK(m.replaced == 50);
}

TEST_CASE("online replacement is reproducible from the seed") {
  auto run = [](std::uint64_t seed) {
    std::mt19937_64 rng(16);
    GpDataset d = gp_data(rng, 10, 2, 1);
    d.capacity = 10;
    GpModel m = fit_exact(d, iso_kernel(1, 2, 1.0, 1.0, 0.01), seed);
    for (int t = 0; t < 20; ++t) m = update_online(m, test::random_vec(rng, 2), test::random_vec(rng, 1));
    return m.data.Z;
  };
  CHECK(run(3) == run(3));
  CHECK_FALSE(run(3) == run(4));
}

TEST_CASE("feature selection scatters Jacobians back") {
  std::mt19937_64 rng(17);
  SUBCASE("state-only features give a zero input Jacobian") {
    GpDataset d = gp_data(rng, 20, 2, 1);
    d.features = {0, 1};
    auto m = std::make_shared<const GpModel>(fit_exact(d, iso_kernel(1, 2, 1.0, 1.0, 0.01)));
    GpResidual gp(m, 2, 1);
    StageResidual r;
    gp.evaluate_point(test::random_vec(rng, 2), test::random_vec(rng, 1), r);
    CHECK(r.jac_u == Mat::Zero(1, 1));
  }
  SUBCASE("racing selection leaves pose and progress columns empty") {
    GpDataset d = gp_data(rng, 20, 5, 3);
    d.features = racing_features();
    auto m = std::make_shared<const GpModel>(fit_exact(d, racing_kernel()));
    GpResidual gp(m, 9, 3);
    const Vec x = test::random_vec(rng, 9), u = test::random_vec(rng, 3);
    StageResidual r;
    gp.evaluate_point(x, u, r);
    for (int c : {0, 1, 2, 8}) CHECK(r.jac_x.col(c) == Vec::Zero(3));
    CHECK(r.jac_u == Mat::Zero(3, 3));
    auto fx = [&](const Vec& z) { StageResidual o; gp.evaluate_point(z, u, o); return o.value; };
    CHECK(test::tol_ratio(r.jac_x, test::fd_jacobian(fx, x)) <= 1.0);
  }
  SUBCASE("mixed state and input features") {
    GpDataset d = gp_data(rng, 25, 3, 1);
    d.features = {1, 2, 3};
    auto m = std::make_shared<const GpModel>(fit_exact(d, iso_kernel(1, 3, 1.0, 0.9, 0.01)));
    GpResidual gp(m, 3, 1);
    const Vec x = test::random_vec(rng, 3), u = test::random_vec(rng, 1);
    StageResidual r;
    gp.evaluate_point(x, u, r);
    auto fx = [&](const Vec& z) { StageResidual o; gp.evaluate_point(z, u, o); return o.value; };
    auto fu = [&](const Vec& z) { StageResidual o; gp.evaluate_point(x, z, o); return o.value; };
    CHECK(test::tol_ratio(r.jac_x, test::fd_jacobian(fx, x)) <= 1.0);
    CHECK(test::tol_ratio(r.jac_u, test::fd_jacobian(fu, u)) <= 1.0);
    CHECK(r.jac_x.col(0) == Vec::Zero(1));
  }
  CHECK_THROWS(select_features(Vec::Zero(2), Vec::Zero(1), {3}));
}

TEST_CASE("dataset and snapshot files round-trip") {
  std::mt19937_64 rng(18);
  GpDataset d = gp_data(rng, 12, 3, 2);
  d.features = {0, 2, 4};
  const auto dir = std::filesystem::temp_directory_path();
  const std::string csv = (dir / "resmpc_gp_data.csv").string();
  const std::string bin = (dir / "resmpc_gp_model.bin").string();
  save_dataset_csv(csv, d);
  const GpDataset back = load_dataset_csv(csv);
  CHECK(test::max_abs(back.Z - d.Z) == 0.0);
  CHECK(test::max_abs(back.Y - d.Y) == 0.0);
  const GpModel m = fit_exact(d, iso_kernel(2, 3, 1.0, 1.0, 0.01));
  save_gp_snapshot(bin, m);
  const GpModel mb = load_gp_snapshot(bin);
  std::remove(csv.c_str());
  std::remove(bin.c_str());
  const Vec z = test::random_vec(rng, 3);
  CHECK(predict(mb, z).mean == predict(m, z).mean);
  CHECK(mb.data.features == d.features);
}

TEST_CASE("kernel configuration is validated") {
  KernelConfig k = iso_kernel(1, 2, 1.0, 1.0, 0.01);
  CHECK_NOTHROW(k.validate(2));
  CHECK_THROWS(k.validate(3));
  k.outputs[0].noise_var = 0.0;
  CHECK_THROWS(k.validate(2));
}
