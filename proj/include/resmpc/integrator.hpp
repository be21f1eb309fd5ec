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

#include <memory>
#include <string>

#include "resmpc/types.hpp"

namespace resmpc {

/// Continuous-time vector field xdot = F(x, u) with analytic Jacobians.
class VectorField {
 public:
  virtual ~VectorField() = default;
  virtual std::string name() const = 0;
  virtual int state_dim() const = 0;
  virtual int input_dim() const = 0;
  virtual Vec eval(const Vec& x, const Vec& u) const = 0;
  /// dfdx is nx x nx, dfdu is nx x nu; both are resized by the callee.
  virtual void jacobians(const Vec& x, const Vec& u, Mat& dfdx, Mat& dfdu) const = 0;
};

using VectorFieldPtr = std::shared_ptr<const VectorField>;

struct DiscretizationConfig {
  double dt = 0.1;  // seconds per stage
  int n_steps = 1;  // RK4 sub-steps per stage
};

/// Discrete stage map and its exact derivatives.
struct StageSensitivity {
  Vec x_next;
  Mat A;  // d x_next / d x
  Mat B;  // d x_next / d u
};

class IntegrationError : public NumericalError {
 public:
  IntegrationError(const std::string& what, int substep)
      : NumericalError(what), substep_(substep) {}
  int substep() const { return substep_; }

 private:
  int substep_;
};

void check_discretization(const DiscretizationConfig& cfg);

/// Classical RK4 over cfg.n_steps sub-steps, input held constant.
Vec rk4_step(const VectorField& field, const Vec& x, const Vec& u,
             const DiscretizationConfig& cfg);

/// RK4 together with the variational equations pushed through the same
/// stages, so A and B are the derivatives of the discrete map itself.
StageSensitivity rk4_with_sensitivities(const VectorField& field, const Vec& x,
                                        const Vec& u,
                                        const DiscretizationConfig& cfg);

}  // namespace resmpc
