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

#include "resmpc/integrator.hpp"

#include <sstream>

namespace resmpc {

void check_discretization(const DiscretizationConfig& cfg) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt))
    throw std::invalid_argument("discretization: dt must be positive");
  if (cfg.n_steps < 1)
    throw std::invalid_argument("discretization: n_steps must be >= 1");
}

namespace {

void check_finite(const Vec& v, int substep, const char* stage) {
  if (!v.allFinite()) {
    std::ostringstream os;
    os << "rk4: non-finite value in " << stage << " of sub-step " << substep;
    throw IntegrationError(os.str(), substep);
  }
}

}  // namespace

Vec rk4_step(const VectorField& field, const Vec& x, const Vec& u,
             const DiscretizationConfig& cfg) {
  check_discretization(cfg);
  require_dims(x.size() == field.state_dim() && u.size() == field.input_dim(),
               "rk4_step: state/input size does not match vector field");
  const double h = cfg.dt / cfg.n_steps;
  Vec xs = x;
  for (int s = 0; s < cfg.n_steps; ++s) {
    const Vec k1 = field.eval(xs, u);
    check_finite(k1, s, "k1");
    const Vec k2 = field.eval(xs + 0.5 * h * k1, u);
    check_finite(k2, s, "k2");
    const Vec k3 = field.eval(xs + 0.5 * h * k2, u);
    check_finite(k3, s, "k3");
    const Vec k4 = field.eval(xs + h * k3, u);
    check_finite(k4, s, "k4");
    xs = xs + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    check_finite(xs, s, "update");
  }
  return xs;
}

StageSensitivity rk4_with_sensitivities(const VectorField& field, const Vec& x,
                                        const Vec& u,
                                        const DiscretizationConfig& cfg) {
  check_discretization(cfg);
  const int nx = field.state_dim();
  const int nu = field.input_dim();
  require_dims(x.size() == nx && u.size() == nu,
               "rk4_with_sensitivities: state/input size does not match vector field");
  const double h = cfg.dt / cfg.n_steps;

  Vec xs = x;
  Mat Sx = Mat::Identity(nx, nx);  // d xs / d x0
  Mat Su = Mat::Zero(nx, nu);      // d xs / d u
  Mat Fx, Fu;

  for (int s = 0; s < cfg.n_steps; ++s) {
    // stage 1
    const Vec k1 = field.eval(xs, u);
    check_finite(k1, s, "k1");
    field.jacobians(xs, u, Fx, Fu);
    const Mat dk1x = Fx * Sx;
    const Mat dk1u = Fx * Su + Fu;
    // stage 2
    const Vec x2 = xs + 0.5 * h * k1;
    const Vec k2 = field.eval(x2, u);
    check_finite(k2, s, "k2");
    field.jacobians(x2, u, Fx, Fu);
    const Mat dk2x = Fx * (Sx + 0.5 * h * dk1x);
    const Mat dk2u = Fx * (Su + 0.5 * h * dk1u) + Fu;
    // stage 3
    const Vec x3 = xs + 0.5 * h * k2;
    const Vec k3 = field.eval(x3, u);
    check_finite(k3, s, "k3");
    field.jacobians(x3, u, Fx, Fu);
    const Mat dk3x = Fx * (Sx + 0.5 * h * dk2x);
    const Mat dk3u = Fx * (Su + 0.5 * h * dk2u) + Fu;
    // stage 4
    const Vec x4 = xs + h * k3;
    const Vec k4 = field.eval(x4, u);
    check_finite(k4, s, "k4");
    field.jacobians(x4, u, Fx, Fu);
    const Mat dk4x = Fx * (Sx + h * dk3x);
    const Mat dk4u = Fx * (Su + h * dk3u) + Fu;

    xs = xs + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    Sx = Sx + (h / 6.0) * (dk1x + 2.0 * dk2x + 2.0 * dk3x + dk4x);
    Su = Su + (h / 6.0) * (dk1u + 2.0 * dk2u + 2.0 * dk3u + dk4u);
    check_finite(xs, s, "update");
    if (!Sx.allFinite() || !Su.allFinite())
      throw IntegrationError("rk4: non-finite sensitivity in sub-step " + std::to_string(s), s);
  }
  return StageSensitivity{xs, Sx, Su};
}

}  // namespace resmpc
