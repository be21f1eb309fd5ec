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

#include "resmpc/integrator.hpp"
#include "resmpc/vector_fields.hpp"
#include "support.hpp"

using namespace resmpc;

namespace {

class ZeroField final : public VectorField {
 public:
  std::string name() const override { return "zero"; }
  int state_dim() const override { return 3; }
  int input_dim() const override { return 1; }
  Vec eval(const Vec&, const Vec&) const override { return Vec::Zero(3); }
  void jacobians(const Vec&, const Vec&, Mat& dfdx, Mat& dfdu) const override {
    dfdx = Mat::Zero(3, 3);
    dfdu = Mat::Zero(3, 1);
  }
};

class NanField final : public VectorField {
 public:
  std::string name() const override { return "nan"; }
  int state_dim() const override { return 1; }
  int input_dim() const override { return 0; }
  Vec eval(const Vec& x, const Vec&) const override {
    return Vec::Constant(1, x(0) > 0.12 ? std::nan("") : 1.0);
  }
  void jacobians(const Vec&, const Vec&, Mat& dfdx, Mat& dfdu) const override {
    dfdx = Mat::Zero(1, 1);
    dfdu = Mat::Zero(1, 0);
  }
};

Mat bounded_point(std::mt19937_64& rng, const Vec& lo, const Vec& hi) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  Vec z(lo.size());
  for (int i = 0; i < lo.size(); ++i) z(i) = lo(i) + d(rng) * (hi(i) - lo(i));
  return z;
}

}  // namespace

TEST_CASE("stationary field leaves the state unchanged") {
  ZeroField f;
  Vec x(3);
  x << 1.5, -2, 3;
  CHECK(rk4_step(f, x, Vec::Ones(1), {0.1, 3}) == x);
  const StageSensitivity s = rk4_with_sensitivities(f, x, Vec::Ones(1), {0.1, 3});
  CHECK(s.A == Mat::Identity(3, 3));
  CHECK(s.B == Mat::Zero(3, 1));
}

TEST_CASE("velocity channel of the double integrator") {
  DoubleIntegrator f;
  const Vec x = rk4_step(f, Vec::Zero(2), Vec::Ones(1), {0.1, 1});
  CHECK(x(1) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(x(0) == doctest::Approx(0.005).epsilon(1e-15));
}

TEST_CASE("linear decay matches the degree-four Taylor polynomial") {
  LinearField f(-Mat::Identity(1, 1), Mat::Zero(1, 0));
  const double h = 0.1;
  const double expected = 1 - h + h * h / 2 - h * h * h / 6 + h * h * h * h / 24;
  const Vec x = rk4_step(f, Vec::Ones(1), Vec(0), {h, 1});
  CHECK(std::abs(x(0) - expected) <= 1e-14);
  CHECK(std::abs(x(0) - 0.9048375) < 1e-7);
}

TEST_CASE("linear field sensitivity equals the matrix polynomial") {
  std::mt19937_64 rng(3);
  const Mat M = test::random_mat(rng, 3, 3);
  const Mat L = test::random_mat(rng, 3, 2);
  LinearField f(M, L);
  const int n = 3;
  const double h = 0.2 / n;
  const Mat hM = h * M;
  const Mat I = Mat::Identity(3, 3);
  const Mat P = I + hM + hM * hM / 2.0 + hM * hM * hM / 6.0 + hM * hM * hM * hM / 24.0;
  // B per sub-step: h (I + hM/2 + (hM)^2/6 + (hM)^3/24) L.
  const Mat Q = h * (I + hM / 2.0 + hM * hM / 6.0 + hM * hM * hM / 24.0) * L;
  Mat A = I, B = Mat::Zero(3, 2);
  for (int s = 0; s < n; ++s) {
    A = P * A;
    B = P * B + Q;
  }
  const StageSensitivity s = rk4_with_sensitivities(f, test::random_vec(rng, 3), test::random_vec(rng, 2), {0.2, n});
  CHECK(test::max_abs(s.A - A) < 1e-13);
  CHECK(test::max_abs(s.B - B) < 1e-13);
}

TEST_CASE("sensitivities of every catalog field match finite differences") {
  std::mt19937_64 rng(4);
  struct Box {
    std::string name;
    Vec xlo, xhi, ulo, uhi;
  };
  Vec bxlo(9), bxhi(9);
  bxlo << -1, -1, -3, 0.5, -0.3, -3, -0.2, -0.35, 0;
  bxhi << 1, 1, 3, 3.5, 0.3, 3, 1.0, 0.35, 10;
  const std::vector<Box> boxes = {
      {"double_integrator", Vec::Constant(2, -2), Vec::Constant(2, 2), Vec::Constant(1, -1), Vec::Constant(1, 1)},
      {"scalar_quadratic", Vec::Constant(1, -1), Vec::Constant(1, 1), Vec::Constant(1, -1), Vec::Constant(1, 1)},
      {"pendulum", Vec::Constant(2, -3), Vec::Constant(2, 3), Vec::Constant(1, -2), Vec::Constant(1, 2)},
      {"bicycle_pacejka", bxlo, bxhi, Vec::Constant(3, -1), Vec::Constant(3, 1)},
  };
  CHECK(vector_field_names().size() >= boxes.size());
  for (const auto& box : boxes) {
    const auto f = make_vector_field(box.name);
    const DiscretizationConfig cfg{box.name == "bicycle_pacejka" ? 1.0 / 30.0 : 0.1, 2};
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const Vec x = bounded_point(rng, box.xlo, box.xhi);
      const Vec u = bounded_point(rng, box.ulo, box.uhi);
      const StageSensitivity s = rk4_with_sensitivities(*f, x, u, cfg);
      const Mat A = test::fd_jacobian([&](const Vec& z) { return rk4_step(*f, z, u, cfg); }, x);
      const Mat B = test::fd_jacobian([&](const Vec& z) { return rk4_step(*f, x, z, cfg); }, u);
      worst = std::max({worst, test::tol_ratio(s.A, A), test::tol_ratio(s.B, B)});
      CHECK(s.x_next == rk4_step(*f, x, u, cfg));
    }
    INFO(box.name);
    CHECK(worst <= 1.0);
  }
}

TEST_CASE("sub-step composition is exact") {
  BicyclePacejka f{BicycleParams{}};
  Vec x = Vec::Zero(9);
  x(3) = 1.2;
  x(5) = 0.4;
  x(6) = 0.3;
  x(7) = 0.1;
  Vec u(3);
  u << 0.2, -0.1, 1.0;
  for (int k : {1, 2, 5}) {
    const Vec once = rk4_step(f, x, u, {0.1, 2 * k});
    const Vec twice = rk4_step(f, rk4_step(f, x, u, {0.05, k}), u, {0.05, k});
    CHECK(once == twice);
  }
}

TEST_CASE("integration is deterministic") {
  Pendulum f;
  Vec x(2);
  x << 0.3, -0.2;
  const auto a = rk4_with_sensitivities(f, x, Vec::Ones(1), {0.1, 4});
  const auto b = rk4_with_sensitivities(f, x, Vec::Ones(1), {0.1, 4});
  CHECK(a.x_next == b.x_next);
  CHECK(a.A == b.A);
  CHECK(a.B == b.B);
}

TEST_CASE("non-finite intermediate values name the sub-step") {
  NanField f;
  try {
    rk4_step(f, Vec::Zero(1), Vec(0), {0.4, 4});
    FAIL("expected IntegrationError");
  } catch (const IntegrationError& e) {
    CHECK(e.substep() == 1);
  }
}

TEST_CASE("invalid discretization is rejected") {
  DoubleIntegrator f;
  CHECK_THROWS_AS(rk4_step(f, Vec::Zero(2), Vec::Zero(1), {0.0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(rk4_step(f, Vec::Zero(2), Vec::Zero(1), {0.1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(rk4_step(f, Vec::Zero(3), Vec::Zero(1), {0.1, 1}), DimensionError);
  CHECK_THROWS_AS(make_vector_field("no_such_field"), std::invalid_argument);
}
