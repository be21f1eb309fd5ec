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

#include <Eigen/Cholesky>

#include <cmath>
#include <functional>
#include <algorithm>
#include <memory>
#include <random>

#include "resmpc/integrator.hpp"
#include "resmpc/ocp.hpp"
#include "resmpc/qp.hpp"
#include "resmpc/sqp.hpp"
#include "resmpc/residual_model.hpp"
#include "resmpc/vector_fields.hpp"

namespace resmpc::test {

inline Mat random_mat(std::mt19937_64& rng, int r, int c, double scale = 1.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = d(rng);
  return m;
}

inline Vec random_vec(std::mt19937_64& rng, int n, double scale = 1.0) {
  return random_mat(rng, n, 1, scale);
}

inline Mat random_psd(std::mt19937_64& rng, int n, double floor = 0.0) {
  const Mat a = random_mat(rng, n, n);
  return a * a.transpose() + floor * Mat::Identity(n, n);
}

inline double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

/// Largest |a - b| / (rtol |b| + atol) over all entries; <= 1 passes.
inline double tol_ratio(const Mat& a, const Mat& b, double rtol = 1e-5, double atol = 1e-8) {
  double e = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      e = std::max(e, std::abs(a(i, j) - b(i, j)) / (rtol * std::abs(b(i, j)) + atol));
  return e;
}

/// Central differences of a vector function, step h (1 + |z_i|).
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& z, double h = 1e-6) {
  const Vec f0 = f(z);
  Mat J(f0.size(), z.size());
  for (int i = 0; i < z.size(); ++i) {
    const double step = h * (1.0 + std::abs(z(i)));
    Vec zp = z, zm = z;
    zp(i) += step;
    zm(i) -= step;
    J.col(i) = (f(zp) - f(zm)) / (2.0 * step);
  }
  return J;
}

/// Identity regressor y = (x, u) with diagonal weights.
inline NlsCost identity_cost(int nx, int nu, const Vec& w) {
  NlsCost c;
  c.ny = nx + nu;
  c.weight = w.asDiagonal();
  c.residual = [nx, nu](const Vec& x, const Vec& u, Vec& y, Mat* jx, Mat* ju) {
    y.resize(nx + nu);
    y.head(nx) = x;
    if (nu > 0) y.tail(nu) = u;
    if (jx) {
      *jx = Mat::Zero(nx + nu, nx);
      jx->topRows(nx).setIdentity();
    }
    if (ju) {
      *ju = Mat::Zero(nx + nu, nu);
      ju->bottomRows(nu).setIdentity();
    }
  };
  return c;
}

/// Quadratic OCP on `field` with identity regressors, Bd = I and no noise.
inline OcpSpec quadratic_spec(VectorFieldPtr field, int N, double dt, double q = 1.0,
                              double r = 0.1, double qN = 1.0) {
  OcpSpec s;
  s.N = N;
  s.nx = field->state_dim();
  s.nu = field->input_dim();
  s.ng = s.nx;
  s.Bd = Mat::Identity(s.nx, s.nx);
  s.dynamics = std::move(field);
  s.disc = {dt, 1};
  Vec w(s.nx + s.nu);
  w.head(s.nx).setConstant(q);
  w.tail(s.nu).setConstant(r);
  s.stage_cost = identity_cost(s.nx, s.nu, w);
  s.terminal_cost = identity_cost(s.nx, 0, Vec::Constant(s.nx, qN));
  s.noise_cov = Mat::Zero(s.nx, s.nx);
  return s;
}

/// Smooth nonlinear residual g(x, u) = a sin(G x) + b u0^2, analytic Jacobians.
class SmoothResidual final : public ResidualModel {
 public:
  SmoothResidual(Mat G, double a, double b, int nu) : G_(std::move(G)), a_(a), b_(b), nu_(nu) {}
  int state_dim() const override { return static_cast<int>(G_.cols()); }
  int input_dim() const override { return nu_; }
  int output_dim() const override { return static_cast<int>(G_.rows()); }
  void evaluate_point(const Vec& x, const Vec& u, StageResidual& out) const override {
    const Vec gx = G_ * x;
    out.value = a_ * gx.array().sin().matrix();
    out.value.array() += b_ * u(0) * u(0);
    out.jac_x = a_ * gx.array().cos().matrix().asDiagonal() * G_;
    out.jac_u = Mat::Zero(G_.rows(), nu_);
    out.jac_u.col(0).setConstant(2.0 * b_ * u(0));
    out.cov.resize(0, 0);
  }

 private:
  Mat G_;
  double a_, b_;
  int nu_;
};

inline double iterate_gap(const Iterate& a, const Iterate& b) {
  double m = 0.0;
  for (size_t k = 0; k < a.x.size(); ++k) m = std::max(m, max_abs(a.x[k] - b.x[k]));
  for (size_t k = 0; k < a.u.size(); ++k) m = std::max(m, max_abs(a.u[k] - b.u[k]));
  return m;
}

// One Gauss-Newton iteration that differentiates x+ = F(x, u) + Bd g(x, u)
// directly, without the affine parametrization.
inline Iterate direct_iteration(const OcpSpec& spec, const ResidualModel& model, const Iterate& it,
                         const Vec& x0) {
  QpSubproblem qp;
  const Vec none(0);
  for (int k = 0; k <= spec.N; ++k) {
    const bool term = k == spec.N;
    const int nu = term ? 0 : spec.nu;
    const Vec& u = term ? none : it.u[k];
    const NlsCost& cost = term ? spec.terminal_cost : spec.stage_cost;
    Vec y;
    Mat Jx, Ju;
    cost.residual(it.x[k], u, y, &Jx, term ? nullptr : &Ju);
    if (term) Ju = Mat(cost.ny, 0);
    QpStage s;
    s.Q = Jx.transpose() * cost.weight * Jx;
    s.S = Ju.transpose() * cost.weight * Jx;
    s.R = Ju.transpose() * cost.weight * Ju;
    s.q = Jx.transpose() * cost.weight * y;
    s.r = Ju.transpose() * cost.weight * y;
    if (!term) {
      const StageSensitivity f = rk4_with_sensitivities(*spec.dynamics, it.x[k], u, spec.disc);
      StageResidual g;
      model.evaluate_point(it.x[k], u, g);
      s.A = f.A + spec.Bd * g.jac_x;
      s.B = f.B + spec.Bd * g.jac_u;
      s.b = f.x_next + spec.Bd * g.value - it.x[k + 1];
    } else {
      s.A = Mat(0, spec.nx);
      s.B = Mat(0, 0);
      s.b = Vec(0);
    }
    s.C = Mat(0, spec.nx);
    s.D = Mat(0, nu);
    s.e = Vec(0);
    s.rho1 = Vec(0);
    s.rho2 = Vec(0);
    qp.stages.push_back(s);
  }
  qp.dx0 = x0 - it.x[0];
  return apply_step(it, solve_qp(qp));
}

}  // namespace resmpc::test
