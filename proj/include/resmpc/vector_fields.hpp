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

#include <map>
#include <string>
#include <vector>

#include "resmpc/integrator.hpp"

namespace resmpc {

using ParamMap = std::map<std::string, double>;

/// xdot = M x + L u.
class LinearField final : public VectorField {
 public:
  LinearField(Mat M, Mat L);
  std::string name() const override { return "linear"; }
  int state_dim() const override { return static_cast<int>(M_.rows()); }
  int input_dim() const override { return static_cast<int>(L_.cols()); }
  Vec eval(const Vec& x, const Vec& u) const override;
  void jacobians(const Vec& x, const Vec& u, Mat& dfdx, Mat& dfdu) const override;

 private:
  Mat M_, L_;
};

/// Position/velocity double integrator, xdot = (v, u).
class DoubleIntegrator final : public VectorField {
 public:
  std::string name() const override { return "double_integrator"; }
  int state_dim() const override { return 2; }
  int input_dim() const override { return 1; }
  Vec eval(const Vec& x, const Vec& u) const override;
  void jacobians(const Vec& x, const Vec& u, Mat& dfdx, Mat& dfdu) const override;
};

/// xdot = a x^2 + u (scalar).
class ScalarQuadratic final : public VectorField {
 public:
  explicit ScalarQuadratic(double a = 1.0) : a_(a) {}
  std::string name() const override { return "scalar_quadratic"; }
  int state_dim() const override { return 1; }
  int input_dim() const override { return 1; }
  Vec eval(const Vec& x, const Vec& u) const override;
  void jacobians(const Vec& x, const Vec& u, Mat& dfdx, Mat& dfdu) const override;

 private:
  double a_;
};

/// Damped pendulum, x = (angle, rate).
class Pendulum final : public VectorField {
 public:
  Pendulum(double stiffness = 1.0, double damping = 0.1)
      : stiffness_(stiffness), damping_(damping) {}
  std::string name() const override { return "pendulum"; }
  int state_dim() const override { return 2; }
  int input_dim() const override { return 1; }
  Vec eval(const Vec& x, const Vec& u) const override;
  void jacobians(const Vec& x, const Vec& u, Mat& dfdx, Mat& dfdu) const override;

 private:
  double stiffness_, damping_;
};

/// Single-track car with simplified Pacejka tires, first-order actuator
/// integrators and a progress integrator.
///
/// State (x, y, psi, vx, vy, omega, T, delta, theta), input
/// (dT, ddelta, dtheta).
struct BicycleParams {
  double mass = 0.041;
  double inertia = 27.8e-6;
  double l_front = 0.029;
  double l_rear = 0.033;
  double cm1 = 0.287;
  double cm2 = 0.0545;
  double roll_res = 0.0518;
  double drag = 0.00035;
  double b_front = 2.579, c_front = 1.2, d_front = 0.192;
  double b_rear = 3.3852, c_rear = 1.2691, d_rear = 0.1737;
  double front_drive_share = 0.5;  // 0 = rear-wheel drive

  static BicycleParams from_map(const ParamMap& params);
};

class BicyclePacejka final : public VectorField {
 public:
  explicit BicyclePacejka(BicycleParams p) : p_(p) {}
  std::string name() const override { return "bicycle_pacejka"; }
  int state_dim() const override { return 9; }
  int input_dim() const override { return 3; }
  Vec eval(const Vec& x, const Vec& u) const override;
  void jacobians(const Vec& x, const Vec& u, Mat& dfdx, Mat& dfdu) const override;
  const BicycleParams& params() const { return p_; }

 private:
  BicycleParams p_;
};

/// Names accepted by make_vector_field.
std::vector<std::string> vector_field_names();

/// Builds a catalog field by name. Unknown names or parameters throw.
VectorFieldPtr make_vector_field(const std::string& name, const ParamMap& params = {});

}  // namespace resmpc
