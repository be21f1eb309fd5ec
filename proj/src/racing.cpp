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

#include "resmpc/racing.hpp"

#include <map>

namespace resmpc {

RacingConfig RacingConfig::defaults() { return RacingConfig{}; }

namespace {

BicycleParams load_params(Table t, BicycleParams base) {
  static const std::map<std::string, double BicycleParams::*> fields = {
      {"mass", &BicycleParams::mass},         {"inertia", &BicycleParams::inertia},
      {"l_front", &BicycleParams::l_front},   {"l_rear", &BicycleParams::l_rear},
      {"cm1", &BicycleParams::cm1},           {"cm2", &BicycleParams::cm2},
      {"roll_res", &BicycleParams::roll_res}, {"drag", &BicycleParams::drag},
      {"b_front", &BicycleParams::b_front},   {"c_front", &BicycleParams::c_front},
      {"d_front", &BicycleParams::d_front},   {"b_rear", &BicycleParams::b_rear},
      {"c_rear", &BicycleParams::c_rear},     {"d_rear", &BicycleParams::d_rear},
      {"front_drive_share", &BicycleParams::front_drive_share}};
  const std::string model = t.string("model", "bicycle_pacejka");
  if (model != "bicycle_pacejka")
    throw ScenarioError(t.path() + ".model: only bicycle_pacejka is supported for racing");
  for (const auto& [k, v] : t.number_map("params")) {
    const auto it = fields.find(k);
    if (it == fields.end()) throw ScenarioError(t.path() + ".params: unknown parameter '" + k + "'");
    base.*(it->second) = v;
  }
  t.finish();
  return base;
}

}  // namespace

void RacingConfig::load(Table& root) {
  {
    Table t = root.table("track");
    track.layout = t.string("layout", track.layout);
    track.half_width = t.number("half_width", track.half_width);
    track.margin = t.number("margin", track.margin);
    t.finish();
  }
  {
    Table t = root.table("ocp");
    N = t.integer("N", N);
    dt = t.number("dt", dt);
    rk4_steps = t.integer("rk4_steps", rk4_steps);
    probability = t.number("probability", probability);
    t.finish();
  }
  {
    Table t = root.table("cost");
    q_contour = t.number("contour", q_contour);
    q_lag = t.number("lag", q_lag);
    r_torque_rate = t.number("torque_rate", r_torque_rate);
    r_steer_rate = t.number("steer_rate", r_steer_rate);
    q_progress = t.number("progress", q_progress);
    v_ref = t.number("v_ref", v_ref);
    track_slack_linear = t.number("track_slack_linear", track_slack_linear);
    track_slack_quadratic = t.number("track_slack_quadratic", track_slack_quadratic);
    bound_slack_linear = t.number("bound_slack_linear", bound_slack_linear);
    bound_slack_quadratic = t.number("bound_slack_quadratic", bound_slack_quadratic);
    t.finish();
  }
  {
    Table t = root.table("bounds");
    torque_min = t.number("torque_min", torque_min);
    torque_max = t.number("torque_max", torque_max);
    steer_max = t.number("steer_max", steer_max);
    torque_rate_max = t.number("torque_rate_max", torque_rate_max);
    steer_rate_max = t.number("steer_rate_max", steer_rate_max);
    progress_rate_max = t.number("progress_rate_max", progress_rate_max);
    vx_min = t.number("vx_min", vx_min);
    t.finish();
  }
  {
    Table t = root.table("noise");
    noise_std = t.vector("std", noise_std);
    if (noise_std.size() != 3) throw ScenarioError(t.path() + ".std: expected 3 entries");
    t.finish();
  }
  plant = load_params(root.table("plant"), plant);
  if (root.has("nominal")) {
    Table t = root.table("nominal");
    const double grip = t.number("grip_factor", 0.0);
    if (grip > 0.0) {
      nominal = perturbed_params(plant, grip);
      t.finish();
    } else {
      nominal = load_params(t, plant);
    }
  } else {
    nominal = perturbed_params(plant);
  }
}

BicycleParams perturbed_params(const BicycleParams& exact, double grip_factor) {
  BicycleParams p = exact;
  p.front_drive_share = 0.0;
  p.d_front *= grip_factor;
  p.d_rear *= grip_factor;
  return p;
}

Mat racing_bd() {
  Mat Bd = Mat::Zero(car::NX, car::NG);
  Bd(car::VX, 0) = Bd(car::VY, 1) = Bd(car::OMEGA, 2) = 1.0;
  return Bd;
}

Mat racing_noise_cov(const Vec& noise_std) {
  Mat S = Mat::Zero(car::NX, car::NX);
  S(car::VX, car::VX) = noise_std(0) * noise_std(0);
  S(car::VY, car::VY) = noise_std(1) * noise_std(1);
  S(car::OMEGA, car::OMEGA) = noise_std(2) * noise_std(2);
  return S;
}

std::vector<int> racing_features() { return {car::VX, car::VY, car::OMEGA, car::T, car::DELTA}; }

OcpSpec build_racing_spec(const RacingConfig& cfg, std::shared_ptr<const TrackModel> track,
                          const BicycleParams& model_params) {
  using namespace car;
  OcpSpec spec;
  spec.N = cfg.N;
  spec.nx = NX;
  spec.nu = NU;
  spec.ng = NG;
  spec.Bd = racing_bd();
  spec.dynamics = std::make_shared<BicyclePacejka>(model_params);
  spec.disc = {cfg.dt, cfg.rk4_steps};
  spec.noise_cov = racing_noise_cov(cfg.noise_std);

  NlsCost& c = spec.stage_cost;
  c.ny = 6;
  c.residual = [track](const Vec& x, const Vec& u, Vec& y, Mat* Jx, Mat* Ju) {
    const ContouringErrors e = track->errors(x(X), x(Y), x(THETA));
    y.resize(6);
    y << e.ec, e.el, u(0), u(1), u(2), 1.0;
    if (Jx) {
      *Jx = Mat::Zero(6, NX);
      (*Jx)(0, X) = e.dec(0);
      (*Jx)(0, Y) = e.dec(1);
      (*Jx)(0, THETA) = e.dec(2);
      (*Jx)(1, X) = e.del(0);
      (*Jx)(1, Y) = e.del(1);
      (*Jx)(1, THETA) = e.del(2);
    }
    if (Ju) {
      *Ju = Mat::Zero(6, NU);
      (*Ju)(2, 0) = (*Ju)(3, 1) = (*Ju)(4, 2) = 1.0;
    }
  };
  c.weight = Mat::Zero(6, 6);
  c.weight(0, 0) = cfg.q_contour;
  c.weight(1, 1) = cfg.q_lag;
  c.weight(2, 2) = cfg.r_torque_rate;
  c.weight(3, 3) = cfg.r_steer_rate;
  c.weight(4, 4) = cfg.q_progress;
  c.weight(4, 5) = c.weight(5, 4) = -cfg.q_progress * cfg.v_ref;
  c.weight(5, 5) = cfg.q_progress * cfg.v_ref * cfg.v_ref;

  Vec ulo(NU), uhi(NU);
  ulo << -cfg.torque_rate_max, -cfg.steer_rate_max, 0.0;
  uhi << cfg.torque_rate_max, cfg.steer_rate_max, cfg.progress_rate_max;
  spec.add_input_bounds(ulo, uhi);

  Vec xlo = Vec::Constant(NX, -kInf), xhi = Vec::Constant(NX, kInf);
  xlo(VX) = cfg.vx_min;
  xlo(T) = cfg.torque_min;
  xhi(T) = cfg.torque_max;
  xlo(DELTA) = -cfg.steer_max;
  xhi(DELTA) = cfg.steer_max;
  spec.add_state_bounds(xlo, xhi, true, cfg.bound_slack_linear, cfg.bound_slack_quadratic, true);

  const double w = track->soft_width();
  for (int side = 0; side < 2; ++side) {
    const double sign = side == 0 ? 1.0 : -1.0;
    Constraint k;
    k.name = side == 0 ? "track_left" : "track_right";
    k.soft = true;
    k.slack_linear = cfg.track_slack_linear;
    k.slack_quadratic = cfg.track_slack_quadratic;
    k.probability = cfg.probability;
    k.initial_stage = false;
    k.fn = [track, sign, w](const Vec& x, const Vec& u, Vec* gx, Vec* gu) {
      const ContouringErrors e = track->errors(x(X), x(Y), x(THETA));
      if (gx) {
        *gx = Vec::Zero(NX);
        (*gx)(X) = sign * e.dec(0);
        (*gx)(Y) = sign * e.dec(1);
        (*gx)(THETA) = sign * e.dec(2);
      }
      if (gu) *gu = Vec::Zero(u.size());
      return sign * e.ec - w;
    };
    spec.constraints.push_back(k);
    spec.terminal_constraints.push_back(k);
  }
  return spec;
}

Vec centerline_state(const TrackModel& track, double theta, double v, double torque) {
  using namespace car;
  Vec x = Vec::Zero(NX);
  const Eigen::Vector2d p = track.position(theta);
  x(X) = p.x();
  x(Y) = p.y();
  x(PSI) = track.heading(theta);
  x(VX) = v;
  x(T) = torque;
  x(THETA) = theta;
  return x;
}

KernelConfig racing_kernel(Table* table) {
  KernelConfig k;
  Vec signal = (Vec(3) << 0.02 * 0.02, 0.02 * 0.02, 0.6 * 0.6).finished();
  Vec noise = (Vec(3) << 1e-4, 1e-4, 1e-2).finished();
  Vec ls = (Vec(5) << 1.6, 0.6, 4.0, 0.6, 0.3).finished();
  if (table) {
    signal = table->vector("signal_var", signal);
    noise = table->vector("noise_var", noise);
    ls = table->vector("lengthscales", ls);
    table->finish();
  }
  require_dims(signal.size() == 3 && noise.size() == 3 && ls.size() == 5,
               "racing kernel: expected 3 signal/noise variances and 5 lengthscales");
  for (int j = 0; j < 3; ++j) k.outputs.push_back({signal(j), ls, noise(j)});
  return k;
}

}  // namespace resmpc
