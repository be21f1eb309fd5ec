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

#include <Eigen/LU>

#include "resmpc/qp.hpp"
#include "support.hpp"

using namespace resmpc;

namespace {

QpStage plain_stage(int nx, int nu, int nx_next) {
  QpStage s;
  s.Q = Mat::Zero(nx, nx);
  s.S = Mat::Zero(nu, nx);
  s.R = Mat::Zero(nu, nu);
  s.q = Vec::Zero(nx);
  s.r = Vec::Zero(nu);
  s.A = Mat::Zero(nx_next, nx);
  s.B = Mat::Zero(nx_next, nu);
  s.b = Vec::Zero(nx_next);
  s.C = Mat(0, nx);
  s.D = Mat(0, nu);
  s.e = Vec(0);
  s.rho1 = Vec(0);
  s.rho2 = Vec(0);
  return s;
}

QpSubproblem random_lq(std::mt19937_64& rng, int N, int nx, int nu, bool affine_terms) {
  QpSubproblem qp;
  for (int k = 0; k <= N; ++k) {
    const bool term = k == N;
    QpStage s = plain_stage(nx, term ? 0 : nu, term ? 0 : nx);
    s.Q = test::random_psd(rng, nx, 0.5);
    if (!term) {
      s.R = test::random_psd(rng, nu, 0.5);
      s.A = Mat::Identity(nx, nx) + test::random_mat(rng, nx, nx, 0.3);
      s.B = test::random_mat(rng, nx, nu);
      if (affine_terms) {
        s.S = test::random_mat(rng, nu, nx, 0.1);
        s.r = test::random_vec(rng, nu);
        s.b = test::random_vec(rng, nx, 0.2);
      }
    }
    if (affine_terms) s.q = test::random_vec(rng, nx);
    qp.stages.push_back(s);
  }
  qp.dx0 = test::random_vec(rng, nx);
  return qp;
}

}  // namespace

TEST_CASE("unconstrained LQ matches a Riccati recursion") {
  std::mt19937_64 rng(11);
  const int N = 10, nx = 3, nu = 2;
  const QpSubproblem qp = random_lq(rng, N, nx, nu, false);
  std::vector<Mat> K(N);
  Mat P = qp.stages[N].Q;
  for (int k = N - 1; k >= 0; --k) {
    const QpStage& s = qp.stages[k];
    const Mat G = s.R + s.B.transpose() * P * s.B;
    K[k] = -G.ldlt().solve(s.B.transpose() * P * s.A);
    P = s.Q + s.A.transpose() * P * s.A + s.A.transpose() * P * s.B * K[k];
    P = 0.5 * (P + P.transpose()).eval();
  }
  const QpSolution sol = solve_qp(qp);
  Vec x = qp.dx0;
  for (int k = 0; k < N; ++k) {
    const Vec u = K[k] * x;
    CHECK(test::max_abs(sol.du[k] - u) < 1e-9);
    CHECK(test::max_abs(sol.dx[k] - x) < 1e-9);
    x = qp.stages[k].A * x + qp.stages[k].B * u;
  }
  CHECK(test::max_abs(sol.dx[N] - x) < 1e-9);
  CHECK(qp_kkt_residual(qp, sol) < 1e-9);
}

TEST_CASE("equality-constrained LQ matches a dense KKT solve") {
  std::mt19937_64 rng(12);
  const int N = 6, nx = 2, nu = 2;
  const QpSubproblem qp = random_lq(rng, N, nx, nu, true);
  const int nz = (N + 1) * nx + N * nu, ne = (N + 1) * nx;
  auto xi = [&](int k) { return k * nx; };
  auto ui = [&](int k) { return (N + 1) * nx + k * nu; };
  Mat H = Mat::Zero(nz, nz), E = Mat::Zero(ne, nz);
  Vec g = Vec::Zero(nz), f = Vec::Zero(ne);
  for (int k = 0; k <= N; ++k) {
    const QpStage& s = qp.stages[k];
    H.block(xi(k), xi(k), nx, nx) = s.Q;
    g.segment(xi(k), nx) = s.q;
    if (k == N) continue;
    H.block(ui(k), ui(k), nu, nu) = s.R;
    H.block(ui(k), xi(k), nu, nx) = s.S;
    H.block(xi(k), ui(k), nx, nu) = s.S.transpose();
    g.segment(ui(k), nu) = s.r;
    // dx_{k+1} - A dx_k - B du_k = b
    E.block(nx * (k + 1), xi(k + 1), nx, nx) = Mat::Identity(nx, nx);
    E.block(nx * (k + 1), xi(k), nx, nx) = -s.A;
    E.block(nx * (k + 1), ui(k), nx, nu) = -s.B;
    f.segment(nx * (k + 1), nx) = s.b;
  }
  E.block(0, 0, nx, nx) = Mat::Identity(nx, nx);
  f.head(nx) = qp.dx0;
  Mat K = Mat::Zero(nz + ne, nz + ne);
  K.topLeftCorner(nz, nz) = H;
  K.topRightCorner(nz, ne) = E.transpose();
  K.bottomLeftCorner(ne, nz) = E;
  Vec rhs(nz + ne);
  rhs << -g, f;
  const Vec z = K.partialPivLu().solve(rhs);
  const QpSolution sol = solve_qp(qp);
  for (int k = 0; k <= N; ++k) CHECK(test::max_abs(sol.dx[k] - z.segment(xi(k), nx)) < 1e-8);
  for (int k = 0; k < N; ++k) CHECK(test::max_abs(sol.du[k] - z.segment(ui(k), nu)) < 1e-8);
  CHECK(qp_kkt_residual(qp, sol) < 1e-8);
}

TEST_CASE("active hard bound carries a positive multiplier") {
  // min 0.5 u^2 - u subject to u <= 0: u = 0 with multiplier 1.
  QpSubproblem qp;
  QpStage s0 = plain_stage(1, 1, 1);
  s0.R(0, 0) = 1.0;
  s0.r(0) = -1.0;
  s0.A(0, 0) = 1.0;
  s0.C = Mat::Zero(1, 1);
  s0.D = Mat::Ones(1, 1);
  s0.e = Vec::Zero(1);
  s0.soft = {false};
  s0.rho1 = Vec::Zero(1);
  s0.rho2 = Vec::Zero(1);
  qp.stages = {s0, plain_stage(1, 0, 0)};
  qp.dx0 = Vec::Zero(1);
  const QpSolution sol = solve_qp(qp);
  CHECK(std::abs(sol.du[0](0)) < 1e-8);
  CHECK(sol.lam[0](0) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(qp_kkt_residual(qp, sol) < 1e-8);
}

TEST_CASE("soft bound trades violation against its penalty") {
  // min 0.5 u^2 - u + 0.5 s + 0.5 s^2 subject to u <= s, s >= 0: u = s = 0.25.
  QpSubproblem qp;
  QpStage s0 = plain_stage(1, 1, 1);
  s0.R(0, 0) = 1.0;
  s0.r(0) = -1.0;
  s0.A(0, 0) = 1.0;
  s0.C = Mat::Zero(1, 1);
  s0.D = Mat::Ones(1, 1);
  s0.e = Vec::Zero(1);
  s0.soft = {true};
  s0.rho1 = Vec::Constant(1, 0.5);
  s0.rho2 = Vec::Constant(1, 1.0);
  qp.stages = {s0, plain_stage(1, 0, 0)};
  qp.dx0 = Vec::Zero(1);
  const QpSolution sol = solve_qp(qp);
  CHECK(sol.du[0](0) == doctest::Approx(0.25).epsilon(1e-7));
  CHECK(sol.slack[0](0) == doctest::Approx(0.25).epsilon(1e-7));
  CHECK(qp_kkt_residual(qp, sol) < 1e-8);
}

TEST_CASE("inactive bound leaves the unconstrained optimum") {
  std::mt19937_64 rng(13);
  QpSubproblem qp = random_lq(rng, 5, 2, 1, true);
  const QpSolution free_sol = solve_qp(qp);
  for (int k = 0; k < 5; ++k) {
    QpStage& s = qp.stages[k];
    s.C = Mat::Zero(1, 2);
    s.D = Mat::Ones(1, 1);
    s.e = Vec::Constant(1, -(std::abs(free_sol.du[k](0)) + 10.0));
    s.soft = {false};
    s.rho1 = Vec::Zero(1);
    s.rho2 = Vec::Zero(1);
  }
  const QpSolution sol = solve_qp(qp);
  for (int k = 0; k < 5; ++k) CHECK(test::max_abs(sol.du[k] - free_sol.du[k]) < 1e-8);
}

TEST_CASE("malformed stage is rejected") {
  std::mt19937_64 rng(14);
  QpSubproblem qp = random_lq(rng, 3, 2, 1, false);
  qp.stages[1].B = Mat::Zero(3, 1);
  CHECK_THROWS_AS(solve_qp(qp), DimensionError);
}
