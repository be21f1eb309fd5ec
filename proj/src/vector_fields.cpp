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

#include "resmpc/vector_fields.hpp"

#include <set>

namespace resmpc {

LinearField::LinearField(Mat M, Mat L) : M_(std::move(M)), L_(std::move(L)) {
  require_dims(M_.rows() == M_.cols() && L_.rows() == M_.rows(),
               "LinearField: M must be square and L must have matching rows");
}

Vec LinearField::eval(const Vec& x, const Vec& u) const { return M_ * x + L_ * u; }

void LinearField::jacobians(const Vec&, const Vec&, Mat& dfdx, Mat& dfdu) const {
  dfdx = M_;
  dfdu = L_;
}

Vec DoubleIntegrator::eval(const Vec& x, const Vec& u) const {
  Vec f(2);
  f << x(1), u(0);
  return f;
}

void DoubleIntegrator::jacobians(const Vec&, const Vec&, Mat& dfdx, Mat& dfdu) const {
  dfdx = Mat::Zero(2, 2);
  dfdx(0, 1) = 1.0;
  dfdu = Mat::Zero(2, 1);
  dfdu(1, 0) = 1.0;
}

Vec ScalarQuadratic::eval(const Vec& x, const Vec& u) const {
  Vec f(1);
  f(0) = a_ * x(0) * x(0) + u(0);
  return f;
}

void ScalarQuadratic::jacobians(const Vec& x, const Vec&, Mat& dfdx, Mat& dfdu) const {
  dfdx = Mat::Constant(1, 1, 2.0 * a_ * x(0));
  dfdu = Mat::Constant(1, 1, 1.0);
}

Vec Pendulum::eval(const Vec& x, const Vec& u) const {
  Vec f(2);
  f << x(1), -stiffness_ * std::sin(x(0)) - damping_ * x(1) + u(0);
  return f;
}

void Pendulum::jacobians(const Vec& x, const Vec&, Mat& dfdx, Mat& dfdu) const {
  dfdx.resize(2, 2);
  dfdx << 0.0, 1.0, -stiffness_ * std::cos(x(0)), -damping_;
  dfdu = Mat::Zero(2, 1);
  dfdu(1, 0) = 1.0;
}

BicycleParams BicycleParams::from_map(const ParamMap& params) {
  BicycleParams p;
  const std::map<std::string, double*> slots = {
      {"mass", &p.mass},         {"inertia", &p.inertia},
      {"l_front", &p.l_front},   {"l_rear", &p.l_rear},
      {"cm1", &p.cm1},           {"cm2", &p.cm2},
      {"roll_res", &p.roll_res}, {"drag", &p.drag},
      {"b_front", &p.b_front},   {"c_front", &p.c_front},
      {"d_front", &p.d_front},   {"b_rear", &p.b_rear},
      {"c_rear", &p.c_rear},     {"d_rear", &p.d_rear},
      {"front_drive_share", &p.front_drive_share},
  };
  for (const auto& [key, value] : params) {
    auto it = slots.find(key);
    if (it == slots.end())
      throw std::invalid_argument("bicycle_pacejka: unknown parameter '" + key + "'");
    *it->second = value;
  }
  return p;
}

namespace {

struct Tire {
  double force;
  double slope;  // dF / dalpha
};

Tire pacejka(double b, double c, double d, double alpha) {
  const double ba = b * alpha;
  const double inner = c * std::atan(ba);
  return {d * std::sin(inner), d * std::cos(inner) * c * b / (1.0 + ba * ba)};
}

}  // namespace

Vec BicyclePacejka::eval(const Vec& s, const Vec& u) const {
  const double psi = s(2), vx = s(3), vy = s(4), om = s(5), T = s(6), de = s(7);
  const double af = de - std::atan2(vy + p_.l_front * om, vx);
  const double ar = -std::atan2(vy - p_.l_rear * om, vx);
  const double ffy = pacejka(p_.b_front, p_.c_front, p_.d_front, af).force;
  const double fry = pacejka(p_.b_rear, p_.c_rear, p_.d_rear, ar).force;
  const double fm = (p_.cm1 - p_.cm2 * vx) * T;
  const double ffx = p_.front_drive_share * fm;
  const double frx = (1.0 - p_.front_drive_share) * fm;
  const double fres = p_.roll_res + p_.drag * vx * vx;
  const double cd = std::cos(de), sd = std::sin(de);
  const double cp = std::cos(psi), sp = std::sin(psi);

  Vec f(9);
  f(0) = vx * cp - vy * sp;
  f(1) = vx * sp + vy * cp;
  f(2) = om;
  f(3) = (frx + ffx * cd - ffy * sd - fres + p_.mass * vy * om) / p_.mass;
  f(4) = (fry + ffx * sd + ffy * cd - p_.mass * vx * om) / p_.mass;
  f(5) = ((ffy * cd + ffx * sd) * p_.l_front - fry * p_.l_rear) / p_.inertia;
  f(6) = u(0);
  f(7) = u(1);
  f(8) = u(2);
  return f;
}

void BicyclePacejka::jacobians(const Vec& s, const Vec&, Mat& J, Mat& Ju) const {
  const double psi = s(2), vx = s(3), vy = s(4), om = s(5), T = s(6), de = s(7);
  const double m = p_.mass, lf = p_.l_front, lr = p_.l_rear, sh = p_.front_drive_share;

  const double pf = vy + lf * om, qf = vx, rf = pf * pf + qf * qf;
  const double pr = vy - lr * om, qr = vx, rr = pr * pr + qr * qr;
  const double af = de - std::atan2(pf, qf);
  const double ar = -std::atan2(pr, qr);
  const double af_vx = pf / rf, af_vy = -qf / rf, af_om = -lf * qf / rf;
  const double ar_vx = pr / rr, ar_vy = -qr / rr, ar_om = lr * qr / rr;

  const Tire tf = pacejka(p_.b_front, p_.c_front, p_.d_front, af);
  const Tire tr = pacejka(p_.b_rear, p_.c_rear, p_.d_rear, ar);
  const double ffy = tf.force, dpf = tf.slope, dpr = tr.slope;

  const double fm = (p_.cm1 - p_.cm2 * vx) * T;
  const double fm_vx = -p_.cm2 * T, fm_T = p_.cm1 - p_.cm2 * vx;
  const double cd = std::cos(de), sd = std::sin(de);
  const double cp = std::cos(psi), sp = std::sin(psi);

  J = Mat::Zero(9, 9);
  J(0, 2) = -vx * sp - vy * cp;
  J(0, 3) = cp;
  J(0, 4) = -sp;
  J(1, 2) = vx * cp - vy * sp;
  J(1, 3) = sp;
  J(1, 4) = cp;
  J(2, 5) = 1.0;

  J(3, 3) = ((1.0 - sh) * fm_vx + sh * fm_vx * cd - sd * dpf * af_vx - 2.0 * p_.drag * vx) / m;
  J(3, 4) = (-sd * dpf * af_vy + m * om) / m;
  J(3, 5) = (-sd * dpf * af_om + m * vy) / m;
  J(3, 6) = ((1.0 - sh) * fm_T + sh * fm_T * cd) / m;
  J(3, 7) = (-sh * fm * sd - dpf * sd - ffy * cd) / m;

  J(4, 3) = (dpr * ar_vx + sh * fm_vx * sd + cd * dpf * af_vx - m * om) / m;
  J(4, 4) = (dpr * ar_vy + cd * dpf * af_vy) / m;
  J(4, 5) = (dpr * ar_om + cd * dpf * af_om - m * vx) / m;
  J(4, 6) = (sh * fm_T * sd) / m;
  J(4, 7) = (sh * fm * cd + cd * dpf - ffy * sd) / m;

  J(5, 3) = (lf * (cd * dpf * af_vx + sh * fm_vx * sd) - lr * dpr * ar_vx) / p_.inertia;
  J(5, 4) = (lf * cd * dpf * af_vy - lr * dpr * ar_vy) / p_.inertia;
  J(5, 5) = (lf * cd * dpf * af_om - lr * dpr * ar_om) / p_.inertia;
  J(5, 6) = (lf * sh * fm_T * sd) / p_.inertia;
  J(5, 7) = (lf * (cd * dpf - ffy * sd + sh * fm * cd)) / p_.inertia;

  Ju = Mat::Zero(9, 3);
  Ju(6, 0) = 1.0;
  Ju(7, 1) = 1.0;
  Ju(8, 2) = 1.0;
}

std::vector<std::string> vector_field_names() {
  return {"double_integrator", "scalar_quadratic", "pendulum", "bicycle_pacejka"};
}

namespace {

double take(const ParamMap& params, const std::string& key, double fallback,
            std::set<std::string>& used) {
  used.insert(key);
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void reject_unused(const std::string& field, const ParamMap& params,
                   const std::set<std::string>& used) {
  for (const auto& [key, value] : params) {
    (void)value;
    if (!used.count(key))
      throw std::invalid_argument(field + ": unknown parameter '" + key + "'");
  }
}

}  // namespace

VectorFieldPtr make_vector_field(const std::string& name, const ParamMap& params) {
  std::set<std::string> used;
  if (name == "double_integrator") {
    reject_unused(name, params, used);
    return std::make_shared<DoubleIntegrator>();
  }
  if (name == "scalar_quadratic") {
    const double a = take(params, "a", 1.0, used);
    reject_unused(name, params, used);
    return std::make_shared<ScalarQuadratic>(a);
  }
  if (name == "pendulum") {
    const double k = take(params, "stiffness", 1.0, used);
    const double c = take(params, "damping", 0.1, used);
    reject_unused(name, params, used);
    return std::make_shared<Pendulum>(k, c);
  }
  if (name == "bicycle_pacejka") {
    return std::make_shared<BicyclePacejka>(BicycleParams::from_map(params));
  }
  throw std::invalid_argument("unknown vector field '" + name + "'");
}

}  // namespace resmpc
