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

#include "resmpc/sim.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "resmpc/gp_residual.hpp"

namespace resmpc {

namespace {

Optimizer parse_optimizer(const std::string& s, const std::string& where) {
  if (s == "rti") return Optimizer::Rti;
  if (s == "sqp") return Optimizer::Sqp;
  throw ScenarioError(where + ": optimizer must be 'rti' or 'sqp'");
}

ControllerModel parse_model(const std::string& s, const std::string& where) {
  if (s == "nominal") return ControllerModel::Nominal;
  if (s == "exact") return ControllerModel::Exact;
  throw ScenarioError(where + ": model must be 'nominal' or 'exact'");
}

CovarianceMode parse_covariance(const std::string& s, const std::string& where) {
  if (s == "nominal") return CovarianceMode::Nominal;
  if (s == "zero_order") return CovarianceMode::ZeroOrder;
  if (s == "fixed") return CovarianceMode::Fixed;
  throw ScenarioError(where + ": covariance must be 'nominal', 'zero_order' or 'fixed'");
}

GpKind parse_gp(const std::string& s, const std::string& where) {
  if (s == "none") return GpKind::None;
  if (s == "exact") return GpKind::Exact;
  if (s == "inducing") return GpKind::Inducing;
  if (s == "online") return GpKind::Online;
  throw ScenarioError(where + ": gp variant must be none, exact, inducing or online");
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

Scenario Scenario::load(const std::string& path) {
  const nlohmann::json doc = Table::parse_file(path);
  Table root(doc, path);
  root.string("_license", "");
  Scenario s;
  s.racing = RacingConfig::defaults();
  s.racing.load(root);
  s.seed = static_cast<std::uint64_t>(root.integer("seed", 0));
  {
    Table t = root.table("sim");
    s.n_sim = t.integer("n_sim", s.n_sim);
    s.n_sim_full = t.integer("n_sim_full", s.n_sim_full);
    s.plant_substeps = t.integer("plant_substeps", s.plant_substeps);
    s.v0 = t.number("v0", s.v0);
    s.torque0 = t.number("torque0", s.torque0);
    t.finish();
  }
  {
    Table c = root.table("controller");
    ControllerConfig& cc = s.controller;
    cc.name = c.string("name", cc.name);
    cc.optimizer = parse_optimizer(c.string("optimizer", "rti"), c.path());
    cc.model = parse_model(c.string("model", "nominal"), c.path());
    cc.solver.covariance = parse_covariance(c.string("covariance", "nominal"), c.path());
    Table g = c.table("gp");
    cc.gp = parse_gp(g.string("variant", "none"), g.path());
    cc.data_points = g.integer("D", 0);
    cc.inducing_points = g.integer("inducing_points", cc.inducing_points);
    cc.online_capacity = g.integer("capacity", cc.online_capacity);
    cc.data_file = g.string("data", "");
    Table k = g.table("kernel");
    cc.kernel = racing_kernel(&k);
    g.finish();
    Table sv = c.table("solver");
    cc.solver.tol = sv.number("tol", cc.solver.tol);
    cc.solver.max_iter = sv.integer("max_iter", cc.solver.max_iter);
    cc.solver.workers = sv.integer("workers", cc.solver.workers);
    cc.solver.line_search = sv.boolean("line_search", cc.solver.line_search);
    sv.finish();
    c.finish();
  }
  root.finish();
  s.validate();
  return s;
}

void Scenario::validate() const {
  if (n_sim < 1) throw std::invalid_argument("scenario: n_sim must be >= 1");
  if (plant_substeps < 1) throw std::invalid_argument("scenario: plant_substeps must be >= 1");
  if (controller.gp != GpKind::None && controller.data_points < 0)
    throw std::invalid_argument("scenario: D must be >= 0");
  if (controller.gp == GpKind::Inducing && controller.inducing_points > racing.N)
    throw std::invalid_argument("scenario: inducing points must not exceed the horizon");
  if (controller.gp == GpKind::None && controller.solver.covariance != CovarianceMode::Nominal)
    throw std::invalid_argument("scenario: tightening needs a GP residual model");
  controller.solver.validate();
}

Zone classify_zone(double distance, double soft_width, double half_width) {
  const double d = std::abs(distance);
  if (d <= soft_width) return Zone::Green;
  if (d <= half_width) return Zone::Yellow;
  return Zone::Red;
}

RunSummary RunLog::summary() const {
  RunSummary s;
  if (steps.empty()) return s;
  std::vector<double> prep, fdbk, total;
  Zone prev = Zone::Green;
  double cost = 0.0, dist = 0.0;
  for (const auto& r : steps) {
    cost += r.cost;
    dist += std::abs(r.distance);
    if (r.zone == Zone::Red) {
      ++s.red_steps;
      if (prev != Zone::Red) ++s.red_entries;
    }
    if (r.zone == Zone::Yellow) ++s.yellow_steps;
    if (r.held) ++s.held;
    prev = r.zone;
    prep.push_back(r.prep_ns * 1e-6);
    fdbk.push_back(r.fdbk_ns * 1e-6);
    total.push_back((r.prep_ns + r.fdbk_ns) * 1e-6);
  }
  const double n = static_cast<double>(steps.size());
  s.cost = cost / n;
  s.mean_abs_distance = dist / n;
  const double th0 = steps.front().x(car::THETA);
  const double th1 = final_state.size() ? final_state(car::THETA) : steps.back().x(car::THETA);
  s.laps = track_length > 0.0 ? (th1 - th0) / track_length : 0.0;
  s.crashed = s.red_entries > 0;
  s.prep_ms_mean = mean_of(prep);
  s.prep_ms_std = std_of(prep);
  s.fdbk_ms_mean = mean_of(fdbk);
  s.fdbk_ms_std = std_of(fdbk);
  s.total_ms_mean = mean_of(total);
  s.total_ms_std = std_of(total);
  return s;
}

GpDataset dataset_from_log(const RunLog& log, const OcpSpec& spec, int D, std::uint64_t seed) {
  const std::vector<int> feats = racing_features();
  GpDataset data;
  data.features = feats;
  const int T = static_cast<int>(log.steps.size());
  std::vector<int> idx(T);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(idx.begin(), idx.end(), rng);
  const int n = std::min(D, T);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  data.Z.resize(n, static_cast<Eigen::Index>(feats.size()));
  data.Y.resize(n, spec.ng);
  for (int i = 0; i < n; ++i) {
    const StepRecord& r = log.steps[idx[i]];
    const Vec& next = idx[i] + 1 < T ? log.steps[idx[i] + 1].x : log.final_state;
    const Vec f = rk4_step(*spec.dynamics, r.x, r.u, spec.disc);
    data.Z.row(i) = select_features(r.x, r.u, feats).transpose();
    data.Y.row(i) = project_measurement(next, f, spec.Bd).transpose();
  }
  return data;
}

GpDataset scenario_dataset(const Scenario& sc) {
  const ControllerConfig& cc = sc.controller;
  GpDataset empty;
  empty.features = racing_features();
  empty.Z.resize(0, 5);
  empty.Y.resize(0, car::NG);
  if (cc.gp == GpKind::None || cc.data_points == 0) return empty;
  if (!cc.data_file.empty()) {
    GpDataset d = load_dataset_csv(cc.data_file);
    if (static_cast<int>(d.size()) > cc.data_points) {
      d.Z.conservativeResize(cc.data_points, d.Z.cols());
      d.Y.conservativeResize(cc.data_points, d.Y.cols());
    }
    return d;
  }
  Scenario prior = sc;
  prior.controller.name = "prior";
  prior.controller.optimizer = Optimizer::Rti;
  prior.controller.gp = GpKind::Exact;
  prior.controller.data_points = 0;
  prior.controller.solver.covariance = CovarianceMode::ZeroOrder;
  const RunLog log = run_closed_loop(prior, nullptr);
  auto track = std::make_shared<const TrackModel>(
      TrackModel::builtin(sc.racing.track.layout, sc.racing.track.half_width, sc.racing.track.margin));
  const BicycleParams& p = cc.model == ControllerModel::Exact ? sc.racing.plant : sc.racing.nominal;
  const OcpSpec spec = build_racing_spec(sc.racing, track, p);
  return dataset_from_log(log, spec, cc.data_points, sc.seed);
}

namespace {

class ClosedLoop {
 public:
  ClosedLoop(const Scenario& sc, const GpDataset* data) : sc_(sc), cc_(sc.controller) {
    sc.validate();
    const RacingConfig& rc = sc.racing;
    track_ = std::make_shared<const TrackModel>(
        TrackModel::builtin(rc.track.layout, rc.track.half_width, rc.track.margin));
    const BicycleParams& p = cc_.model == ControllerModel::Exact ? rc.plant : rc.nominal;
    spec_ = build_racing_spec(rc, track_, p);
    const auto violations = validate_spec(spec_);
    if (!violations.empty())
      throw std::invalid_argument("racing spec invalid: " + violations.front().code + " " +
                                  violations.front().detail);
    plant_ = std::make_shared<BicyclePacejka>(rc.plant);
    plant_disc_ = {rc.dt, sc.plant_substeps};
    noise_chol_ = rc.noise_std;
    rng_.seed(sc.seed);
    opts_ = cc_.solver;
    if (cc_.gp == GpKind::None) {
      model_ = std::make_shared<ZeroResidual>(car::NX, car::NU, car::NG);
    } else {
      GpDataset d;
      if (data) {
        d = *data;
      } else {
        if (cc_.data_points > 0)
          throw std::invalid_argument("run_closed_loop: GP with D > 0 needs training data");
        d.Z.resize(0, 5);
        d.Y.resize(0, car::NG);
      }
      d.features = racing_features();
      if (cc_.gp == GpKind::Online) d.capacity = static_cast<size_t>(cc_.online_capacity);
      if (d.size() > d.capacity) {
        d.Z.conservativeResize(static_cast<Eigen::Index>(d.capacity), d.Z.cols());
        d.Y.conservativeResize(static_cast<Eigen::Index>(d.capacity), d.Y.cols());
      }
      if (cc_.gp == GpKind::Inducing) {
        Trajectory init;
        for (int k = 0; k < rc.N; ++k) init.push_back(select_features(
            centerline_state(*track_, 0.0, sc.v0, sc.torque0), Vec::Zero(car::NU), d.features));
        gp_ = std::make_shared<GpModel>(fit_sor(d, cc_.kernel, spread_along(init, cc_.inducing_points)));
      } else {
        gp_ = std::make_shared<GpModel>(fit_exact(d, cc_.kernel, sc.seed));
        if (cc_.gp == GpKind::Online) gp_->variant = GpVariant::Online;
      }
      model_ = std::make_shared<GpResidual>(gp_, car::NX, car::NU);
    }
  }

  RunLog run() {
    const RacingConfig& rc = sc_.racing;
    RunLog log;
    log.controller = cc_.name;
    log.seed = sc_.seed;
    log.dt = rc.dt;
    log.half_width = track_->half_width();
    log.soft_width = track_->soft_width();
    log.track_length = track_->length();
    Vec x = centerline_state(*track_, 0.0, sc_.v0, sc_.torque0);
    Iterate it = initial_guess(x);
    // Warm start: a full solve at the initial state, not part of the log.
    {
      SolverOptions o = opts_;
      o.max_iter = std::max(o.max_iter, 30);
      try {
        const SqpResult r = sqp_solve(spec_, *model_, x, it, o);
        if (r.stats.status != SolveStatus::QpFailure) {
          it = r.iterate;
          schedule_ = r.schedule;
        }
      } catch (const std::exception&) {
      }
    }
    PreparedQp prepared;
    if (cc_.optimizer == Optimizer::Rti) prepared = prepare_at(it, x, nullptr);
    Vec u_prev = Vec::Zero(car::NU);
    for (int t = 0; t < sc_.n_sim; ++t) {
      StepRecord rec;
      rec.step = t;
      rec.x = x;
      Vec u;
      if (cc_.optimizer == Optimizer::Rti) {
        rec.prep_ns = prepared.lin.prep_ns;
        try {
          if (!prepared.ready) throw QpError("no prepared QP");
          const FeedbackResult fb = rti_feedback(prepared, x, opts_);
          if (!fb.iterate.x[1].allFinite()) throw NumericalError("non-finite QP step");
          rec.fdbk_ns = fb.stats.fdbk_ns;
          rec.sqp_iterations = 1;
          rec.status = to_string(fb.stats.status);
          it = fb.iterate;
          u = fb.u0;
          schedule_ = prepared.lin.schedule;
        } catch (const std::exception& e) {
          rec.message = e.what();
          rec.status = "held";
          rec.held = true;
          u = u_prev;
          it = shift_iterate(prepared.ready ? prepared.lin.iterate : it);
        }
      } else {
        try {
          const Iterate guess = t == 0 ? it : shift_iterate(it);
          const SqpResult r = sqp_solve(spec_, *model_, x, guess, opts_);
          rec.prep_ns = r.stats.prep_ns;
          rec.fdbk_ns = r.stats.fdbk_ns;
          rec.sqp_iterations = r.stats.iterations;
          if (!r.stats.kkt_history.empty()) rec.kkt = r.stats.kkt_history.back().max();
          rec.status = to_string(r.stats.status);
          if (r.stats.status == SolveStatus::QpFailure || !r.iterate.u[0].allFinite())
            throw QpError(r.stats.message);
          it = r.iterate;
          schedule_ = r.schedule;
          u = it.u[0];
        } catch (const std::exception& e) {
          rec.message = e.what();
          rec.status = "held";
          rec.held = true;
          u = u_prev;
          it = shift_iterate(it);
        }
      }
      rec.u = u;
      rec.cost = spec_.stage_cost.value(x, u);
      rec.distance = track_->errors(x(car::X), x(car::Y), x(car::THETA)).ec;
      rec.zone = classify_zone(rec.distance, track_->soft_width(), track_->half_width());
      log.steps.push_back(rec);

      const Vec x_next = plant_step(x, u);
      if (cc_.gp == GpKind::Online) online_update(x, u, x_next);
      x = x_next;
      u_prev = u;
      if (cc_.gp == GpKind::Inducing) redistribute(it);
      if (cc_.optimizer == Optimizer::Rti) prepared = prepare_next(it, x);
    }
    log.final_state = x;
    return log;
  }

 private:
  Iterate initial_guess(const Vec& x0) const {
    const RacingConfig& rc = sc_.racing;
    Iterate it = Iterate::cold_start(spec_, x0);
    for (int k = 0; k <= rc.N; ++k)
      it.x[k] = centerline_state(*track_, x0(car::THETA) + sc_.v0 * rc.dt * k, sc_.v0, sc_.torque0);
    it.x[0] = x0;
    for (int k = 0; k < rc.N; ++k) it.u[k] = (Vec(3) << 0.0, 0.0, sc_.v0).finished();
    return it;
  }

  PreparedQp prepare_at(const Iterate& it, const Vec&, const CovarianceSchedule* frozen) {
    try {
      return rti_prepare_at(spec_, *model_, it, opts_, frozen);
    } catch (const std::exception&) {
      return {};
    }
  }

  PreparedQp prepare_next(const Iterate& it, const Vec& x) {
    try {
      return rti_prepare(spec_, *model_, it, opts_, &schedule_);
    } catch (const std::exception&) {
      // Linearization failed on the shifted guess; restart from the state.
      return prepare_at(initial_guess(x), x, nullptr);
    }
  }

  Vec plant_step(const Vec& x, const Vec& u) {
    Vec next = rk4_step(*plant_, x, u, plant_disc_);
    std::normal_distribution<double> n01(0.0, 1.0);
    next(car::VX) += noise_chol_(0) * n01(rng_);
    next(car::VY) += noise_chol_(1) * n01(rng_);
    next(car::OMEGA) += noise_chol_(2) * n01(rng_);
    // The progress state is virtual: re-anchor it at the closest point.
    const double guess = x(car::THETA) + std::max(x(car::VX), 0.0) * sc_.racing.dt;
    next(car::THETA) = track_->project(next(car::X), next(car::Y), guess, 0.5);
    return next;
  }

  void online_update(const Vec& x, const Vec& u, const Vec& x_next) {
    const Vec f = rk4_step(*spec_.dynamics, x, u, spec_.disc);
    const Vec y = project_measurement(x_next, f, spec_.Bd);
    gp_ = std::make_shared<GpModel>(update_online(*gp_, select_features(x, u, gp_->data.features), y));
    model_ = std::make_shared<GpResidual>(gp_, car::NX, car::NU);
  }

  void redistribute(const Iterate& it) {
    Trajectory feats;
    for (int k = 1; k <= sc_.racing.N; ++k) {
      const Vec& u = it.u[std::min(k, sc_.racing.N - 1)];
      feats.push_back(select_features(it.x[k], u, gp_->data.features));
    }
    gp_ = std::make_shared<GpModel>(redistribute_inducing(*gp_, feats));
    model_ = std::make_shared<GpResidual>(gp_, car::NX, car::NU);
  }

  const Scenario& sc_;
  const ControllerConfig& cc_;
  std::shared_ptr<const TrackModel> track_;
  OcpSpec spec_;
  std::shared_ptr<const VectorField> plant_;
  DiscretizationConfig plant_disc_;
  Vec noise_chol_;
  std::mt19937_64 rng_;
  SolverOptions opts_;
  std::shared_ptr<GpModel> gp_;
  std::shared_ptr<const ResidualModel> model_;
  CovarianceSchedule schedule_;
};

}  // namespace

RunLog run_closed_loop(const Scenario& scenario, const GpDataset* data) {
  ClosedLoop loop(scenario, data);
  return loop.run();
}

}  // namespace resmpc
