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

#include "resmpc/racing.hpp"
#include "support.hpp"

using namespace resmpc;
using test::random_mat;
using test::random_vec;

namespace {

OcpSpec small_spec(Mat Bd) {
  OcpSpec s = test::quadratic_spec(std::make_shared<DoubleIntegrator>(), 5, 0.1);
  s.ng = static_cast<int>(Bd.cols());
  s.Bd = std::move(Bd);
  return s;
}

bool has_code(const std::vector<Violation>& v, const std::string& code) {
  for (const auto& x : v)
    if (x.code == code) return true;
  return false;
}

}  // namespace

TEST_CASE("validate_spec accepts identity residual injection") {
  const auto v = validate_spec(small_spec(Mat::Identity(2, 2)));
  CHECK(v.empty());
}

TEST_CASE("validate_spec flags equal injection columns") {
  Mat Bd(2, 2);
  Bd << 1, 1, 0.5, 0.5;
  const auto v = validate_spec(small_spec(Bd));
  REQUIRE(has_code(v, "B_d_rank_deficient"));
  bool message = false;
  for (const auto& x : v) message = message || x.detail == "B_d rank-deficient";
  CHECK(message);
}

TEST_CASE("validate_spec accepts the racing velocity injection") {
  RacingConfig cfg = RacingConfig::defaults();
  auto track = std::make_shared<TrackModel>(TrackModel::builtin("desk", 0.23, 0.06));
  const OcpSpec spec = build_racing_spec(cfg, track, cfg.nominal);
  CHECK(spec.Bd.rows() == 9);
  CHECK(spec.Bd.cols() == 3);
  Mat expected = Mat::Zero(9, 3);
  expected.block(3, 0, 3, 3).setIdentity();
  CHECK(spec.Bd == expected);
  CHECK(validate_spec(spec).empty());
}

TEST_CASE("validate_spec flags bad probabilities and noise") {
  OcpSpec s = small_spec(Mat::Identity(2, 2));
  s.add_state_bounds(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0), true, 1.0, 1.0, true, 1.5);
  s.noise_cov = -Mat::Identity(2, 2);
  const auto v = validate_spec(s);
  CHECK(has_code(v, "probability_out_of_range"));
  CHECK(has_code(v, "noise_not_psd"));
}

TEST_CASE("validate_spec is side-effect free") {
  OcpSpec s = small_spec(Mat::Identity(2, 2));
  s.add_input_bounds(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0));
  const auto a = validate_spec(s);
  const auto b = validate_spec(s);
  CHECK(a.size() == b.size());
  CHECK(s.constraints.size() == 2);
}

TEST_CASE("project_measurement with identity injection") {
  Vec diff(2);
  diff << 1, -2;
  const Vec y = project_measurement(diff, Vec::Zero(2), Mat::Identity(2, 2));
  CHECK(y(0) == doctest::Approx(1.0));
  CHECK(y(1) == doctest::Approx(-2.0));
}

TEST_CASE("project_measurement with a column selector") {
  Mat Bd = Mat::Zero(4, 2);
  Bd(1, 0) = 1.0;
  Bd(2, 1) = 1.0;
  Vec xn(4), f(4);
  xn << 5, 6, 7, 8;
  f << 1, 1, 1, 1;
  const Vec y = project_measurement(xn, f, Bd);
  CHECK(y(0) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(y(1) == doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("project_measurement equals the normal-equations solution") {
  std::mt19937_64 rng(11);
  const Mat Bd = random_mat(rng, 4, 2);
  const Vec diff = random_vec(rng, 4);
  const Vec y = project_measurement(diff, Vec::Zero(4), Bd);
  const Vec oracle = (Bd.transpose() * Bd).ldlt().solve(Bd.transpose() * diff);
  CHECK((y - oracle).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("project_measurement recovers the residual exactly") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat Bd = random_mat(rng, 5, 3);
    const Vec f = random_vec(rng, 5, 3.0);
    const Vec g0 = random_vec(rng, 3, 2.0);
    const Vec y = project_measurement(f + Bd * g0, f, Bd);
    CHECK((y - g0).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("project_measurement rejects mismatched sizes") {
  CHECK_THROWS_AS(project_measurement(Vec::Zero(3), Vec::Zero(2), Mat::Identity(2, 2)),
                  DimensionError);
}

TEST_CASE("residual_noise_covariance of identity injection") {
  const Mat c = residual_noise_covariance(Mat::Identity(3, 3), Mat::Identity(3, 3));
  CHECK((c - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("residual_noise_covariance with a selector is the diagonal sub-block") {
  Vec d(4);
  d << 0.1, 0.2, 0.3, 0.4;
  Mat Bd = Mat::Zero(4, 2);
  Bd(1, 0) = 1.0;
  Bd(3, 1) = 1.0;
  const Mat c = residual_noise_covariance(d.asDiagonal(), Bd);
  CHECK(c(0, 0) == doctest::Approx(0.2));
  CHECK(c(1, 1) == doctest::Approx(0.4));
  CHECK(c(0, 1) == 0.0);
}

TEST_CASE("residual_noise_covariance matches Monte Carlo sampling") {
  std::mt19937_64 rng(13);
  const Mat Bd = random_mat(rng, 4, 2);
  const Mat Sw = test::random_psd(rng, 4, 0.1);
  const Mat c = residual_noise_covariance(Sw, Bd);
  const Mat P = (Bd.transpose() * Bd).inverse() * Bd.transpose();
  const Mat L = Sw.llt().matrixL();
  std::normal_distribution<double> n01;
  const int samples = 200000;
  Mat acc = Mat::Zero(2, 2);
  for (int s = 0; s < samples; ++s) {
    Vec z(4);
    for (int i = 0; i < 4; ++i) z(i) = n01(rng);
    const Vec v = P * (L * z);
    acc += v * v.transpose();
  }
  acc /= samples;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double se = std::sqrt((c(i, i) * c(j, j) + c(i, j) * c(i, j)) / samples);
      CHECK(std::abs(acc(i, j) - c(i, j)) <= 3.0 * se);
    }
  Eigen::SelfAdjointEigenSolver<Mat> es(c);
  CHECK(es.eigenvalues().minCoeff() >= 0.0);
  CHECK((c - c.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cold start and shift") {
  OcpSpec s = small_spec(Mat::Identity(2, 2));
  s.add_input_bounds(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0));
  Vec x0(2);
  x0 << 1, 2;
  Iterate it = Iterate::cold_start(s, x0);
  CHECK(it.x.size() == 6);
  CHECK(it.u.size() == 5);
  CHECK(it.mu[0].size() == 2);
  for (int k = 0; k <= 5; ++k) it.x[k] = Vec::Constant(2, k);
  const Iterate sh = shift_iterate(it);
  CHECK(sh.x[0](0) == 1.0);
  CHECK(sh.x[4](0) == 5.0);
  CHECK(sh.x[5](0) == 5.0);
}
