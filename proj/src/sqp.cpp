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

#include "resmpc/sqp.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>

#include "json.hpp"

namespace resmpc {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ns(Clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
}

void regularize(Mat& Q, Mat& S, Mat& R, const SolverOptions& opts) {
  const int nx = static_cast<int>(Q.rows()), nu = static_cast<int>(R.rows());
  Mat H(nx + nu, nx + nu);
  H.topLeftCorner(nx, nx) = Q;
  if (nu > 0) {
    H.topRightCorner(nx, nu) = S.transpose();
    H.bottomLeftCorner(nu, nx) = S;
    H.bottomRightCorner(nu, nu) = R;
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(H, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < opts.reg_threshold) {
    Q.diagonal().array() += opts.reg_epsilon;
    if (nu > 0) R.diagonal().array() += opts.reg_epsilon;
  }
}

}  // namespace

void SolverOptions::validate() const {
  if (!(tol > 0.0)) throw std::invalid_argument("SolverOptions: tol must be positive");
  if (max_iter < 1) throw std::invalid_argument("SolverOptions: max_iter must be >= 1");
  if (workers < 1) throw std::invalid_argument("SolverOptions: workers must be >= 1");
  if (reg_epsilon < 0.0) throw std::invalid_argument("SolverOptions: reg_epsilon must be >= 0");
  if (max_backtracks < 0) throw std::invalid_argument("SolverOptions: max_backtracks must be >= 0");
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::QpFailure: return "qp_failure";
    case SolveStatus::Prepared: return "rti";
  }
  return "unknown";
}

double KktResiduals::max() const {
  return std::max({stationarity, equality, inequality, complementarity});
}

QpSubproblem build_qp(const OcpSpec& spec, const Iterate& it,
                      const std::vector<AffineStageDynamics>& affine, const Trajectory& beta,
                      const SolverOptions& opts) {
  const int N = spec.N, nx = spec.nx, nu = spec.nu;
  require_dims(static_cast<int>(it.x.size()) == N + 1 && static_cast<int>(it.u.size()) == N,
               "build_qp: iterate horizon");
  require_dims(static_cast<int>(affine.size()) == N, "build_qp: affine stages");
  require_dims(beta.empty() || static_cast<int>(beta.size()) == N + 1, "build_qp: beta stages");
  QpSubproblem qp;
  qp.stages.resize(N + 1);
  qp.dx0 = Vec::Zero(nx);
  const Vec no_input(0);
  for (int k = 0; k <= N; ++k) {
    QpStage& s = qp.stages[k];
    const bool term = k == N;
    const Vec& x = it.x[k];
    const Vec& u = term ? no_input : it.u[k];
    const int m_u = term ? 0 : nu;
    const NlsCost& cost = term ? spec.terminal_cost : spec.stage_cost;
    if (!cost.empty()) {
      Vec y;
      Mat Jx, Ju;
      cost.residual(x, u, y, &Jx, term ? nullptr : &Ju);
      if (term) Ju = Mat(cost.ny, 0);
      require_dims(y.size() == cost.ny && Jx.rows() == cost.ny && Jx.cols() == nx &&
                       Ju.rows() == cost.ny && Ju.cols() == m_u,
                   "build_qp: cost residual shapes at stage " + std::to_string(k));
      const Mat WJx = cost.weight * Jx;
      const Mat WJu = cost.weight * Ju;
      const Vec Wy = cost.weight * y;
      s.Q = Jx.transpose() * WJx;
      s.S = Ju.transpose() * WJx;
      s.R = Ju.transpose() * WJu;
      s.q = Jx.transpose() * Wy;
      s.r = Ju.transpose() * Wy;
    } else {
      s.Q = Mat::Zero(nx, nx);
      s.S = Mat::Zero(m_u, nx);
      s.R = Mat::Zero(m_u, m_u);
      s.q = Vec::Zero(nx);
      s.r = Vec::Zero(m_u);
    }
    regularize(s.Q, s.S, s.R, opts);
    if (!term) {
      const AffineStageDynamics& a = affine[k];
      s.A = a.A;
      s.B = a.B;
      s.b = a.A * x + a.B * u + a.c - it.x[k + 1];
    } else {
      s.A = Mat(0, nx);
      s.B = Mat(0, 0);
      s.b = Vec(0);
    }
    const auto rows = spec.stage_rows(k);
    const int m = static_cast<int>(rows.size());
    require_dims(beta.empty() || beta[k].size() == m, "build_qp: beta rows at stage " + std::to_string(k));
    s.C = Mat::Zero(m, nx);
    s.D = Mat::Zero(m, m_u);
    s.e = Vec::Zero(m);
    s.soft.assign(m, false);
    s.rho1 = Vec::Zero(m);
    s.rho2 = Vec::Zero(m);
    for (int i = 0; i < m; ++i) {
      Vec gx, gu;
      const double h = rows[i]->fn(x, u, &gx, term ? nullptr : &gu);
      s.C.row(i) = gx.transpose();
      if (!term) s.D.row(i) = gu.transpose();
      s.e(i) = h + (beta.empty() ? 0.0 : beta[k](i));
      s.soft[i] = rows[i]->soft;
      s.rho1(i) = rows[i]->slack_linear;
      s.rho2(i) = rows[i]->slack_quadratic;
    }
  }
  qp.check();
  return qp;
}

Linearization linearize(const OcpSpec& spec, const ResidualModel& model, const Iterate& iterate,
                        const SolverOptions& opts, const CovarianceSchedule* frozen) {
  const auto t0 = Clock::now();
  Linearization lin;
  lin.iterate = iterate;
  if (lin.iterate.mu.size() != static_cast<size_t>(spec.N + 1)) {
    Iterate fixed = lin.iterate;
    fixed.resize_duals(spec);
    lin.iterate = fixed;
  }
  const Iterate& it = lin.iterate;
  for (const auto& v : it.x)
    if (!v.allFinite()) throw NumericalError("linearize: non-finite state in iterate");
  for (const auto& v : it.u)
    if (!v.allFinite()) throw NumericalError("linearize: non-finite input in iterate");
  lin.batch = LinearizationBatch::from_iterate(it);
  const auto nominal = nominal_sensitivities(spec, lin.batch);
  lin.residual = opts.serial_residuals ? evaluate_batch_serial(model, lin.batch)
                                       : evaluate_batch(model, lin.batch, opts.workers);
  lin.affine = assemble_affine(spec, nominal, lin.residual, lin.batch);
  switch (opts.covariance) {
    case CovarianceMode::Nominal:
      lin.schedule = CovarianceSchedule::zeros(spec);
      break;
    case CovarianceMode::ZeroOrder:
      lin.schedule = zoro_step(spec, it, lin.affine, lin.residual);
      break;
    case CovarianceMode::Fixed:
      lin.schedule = frozen && !frozen->empty() ? *frozen
                                                : zoro_step(spec, it, lin.affine, lin.residual);
      break;
  }
  lin.qp = build_qp(spec, it, lin.affine, lin.schedule.beta, opts);
  lin.prep_ns = elapsed_ns(t0);
  return lin;
}

KktResiduals kkt_residuals(const Linearization& lin, const Vec* x0) {
  const QpSubproblem& qp = lin.qp;
  const Iterate& it = lin.iterate;
  const int N = qp.horizon();
  KktResiduals r;
  auto upd = [](double& acc, const Vec& v) {
    if (v.size()) acc = std::max(acc, v.cwiseAbs().maxCoeff());
  };
  if (x0) upd(r.equality, it.x[0] - *x0);
  for (int k = 0; k <= N; ++k) {
    const QpStage& s = qp.stages[k];
    const Vec& mu = it.mu[k];
    if (k > 0) {
      Vec g = s.q + s.C.transpose() * mu - it.pi[k - 1];
      if (k < N) g += s.A.transpose() * it.pi[k];
      upd(r.stationarity, g);
    }
    if (k < N) {
      Vec g = s.r + s.B.transpose() * it.pi[k];
      if (s.rows() > 0) g += s.D.transpose() * mu;
      upd(r.stationarity, g);
      upd(r.equality, s.b);
    }
    for (int i = 0; i < s.rows(); ++i) {
      const double sl = s.soft[i] ? it.slack[k](i) : 0.0;
      const double c = s.e(i) - sl;
      r.inequality = std::max({r.inequality, c, -mu(i)});
      r.complementarity = std::max(r.complementarity, std::abs(mu(i) * c));
      if (s.soft[i]) {
        const double nu = it.slack_mult[k](i);
        r.stationarity = std::max(r.stationarity, std::abs(s.rho2(i) * sl + s.rho1(i) - mu(i) - nu));
        r.inequality = std::max({r.inequality, -sl, -nu});
        r.complementarity = std::max(r.complementarity, std::abs(nu * sl));
      }
    }
  }
  return r;
}

KktResiduals kkt_residuals(const OcpSpec& spec, const ResidualModel& model, const Iterate& iterate,
                           const Trajectory& beta, const Vec* x0) {
  SolverOptions opts;
  Linearization lin;
  lin.iterate = iterate;
  lin.batch = LinearizationBatch::from_iterate(iterate);
  lin.residual = evaluate_batch_serial(model, lin.batch);
  lin.affine = assemble_affine(spec, nominal_sensitivities(spec, lin.batch), lin.residual, lin.batch);
  lin.qp = build_qp(spec, iterate, lin.affine, beta, opts);
  return kkt_residuals(lin, x0);
}

Iterate apply_step(const Iterate& it, const QpSolution& sol) {
  Iterate next = it;
  for (size_t k = 0; k < next.x.size(); ++k) next.x[k] += sol.dx[k];
  for (size_t k = 0; k < next.u.size(); ++k) next.u[k] += sol.du[k];
  next.pi = sol.pi;
  next.mu = sol.lam;
  next.slack = sol.slack;
  next.slack_mult = sol.slack_mult;
  return next;
}

namespace {

// Blend of the iterate with the QP step: primal and dual parts move by the
// same fraction, alpha = 1 reproduces apply_step.
Iterate damped_step(const Iterate& it, const QpSolution& sol, double alpha) {
  if (alpha == 1.0) return apply_step(it, sol);
  Iterate next = it;
  for (size_t k = 0; k < next.x.size(); ++k) next.x[k] += alpha * sol.dx[k];
  for (size_t k = 0; k < next.u.size(); ++k) next.u[k] += alpha * sol.du[k];
  for (size_t k = 0; k < next.pi.size(); ++k) next.pi[k] += alpha * (sol.pi[k] - it.pi[k]);
  for (size_t k = 0; k < next.mu.size(); ++k) {
    next.mu[k] += alpha * (sol.lam[k] - it.mu[k]);
    next.slack[k] += alpha * (sol.slack[k] - it.slack[k]);
    next.slack_mult[k] += alpha * (sol.slack_mult[k] - it.slack_mult[k]);
  }
  return next;
}

double dual_max(const QpSolution& sol) {
  double m = 0.0;
  for (const auto& v : sol.pi)
    if (v.size()) m = std::max(m, v.cwiseAbs().maxCoeff());
  for (const auto& v : sol.lam)
    if (v.size()) m = std::max(m, v.cwiseAbs().maxCoeff());
  return m;
}

// Cost plus soft-row penalties plus rho times the l1 norm of the defects,
// the initial-state gap and hard-row violations. Reads the constraint and
// defect values already stored in the linearization's QP.
double l1_merit(const OcpSpec& spec, const Linearization& lin, const Vec& x0, double rho) {
  const Iterate& it = lin.iterate;
  double phi = rho * (it.x[0] - x0).lpNorm<1>();
  const Vec no_input(0);
  for (int k = 0; k <= spec.N; ++k) {
    const bool term = k == spec.N;
    const NlsCost& cost = term ? spec.terminal_cost : spec.stage_cost;
    if (!cost.empty()) phi += cost.value(it.x[k], term ? no_input : it.u[k]);
    const QpStage& s = lin.qp.stages[k];
    if (!term) phi += rho * s.b.lpNorm<1>();
    for (int i = 0; i < s.e.size(); ++i) {
      const double h = std::max(0.0, s.e(i));
      phi += s.soft[i] ? s.rho1(i) * h + 0.5 * s.rho2(i) * h * h : rho * h;
    }
  }
  return phi;
}

}  // namespace

SqpResult sqp_solve(const OcpSpec& spec, const ResidualModel& model, const Vec& x0,
                    const Iterate& guess, const SolverOptions& opts) {
  opts.validate();
  require_dims(x0.size() == spec.nx, "sqp_solve: x0 size");
  if (!x0.allFinite()) throw NumericalError("sqp_solve: non-finite x0");
  SqpResult res;
  SolveStats& st = res.stats;
  CovarianceSchedule frozen;
  Linearization lin = linearize(spec, model, guess, opts, nullptr);
  if (opts.covariance == CovarianceMode::Fixed) frozen = lin.schedule;
  st.prep_ns += lin.prep_ns;
  st.status = SolveStatus::MaxIter;
  double rho = 0.0;
  for (int i = 0; i < opts.max_iter; ++i) {
    lin.qp.dx0 = x0 - lin.iterate.x[0];
    QpSolution sol;
    const auto t0 = Clock::now();
    try {
      sol = solve_qp(lin.qp, opts.qp);
    } catch (const QpError& e) {
      st.fdbk_ns += elapsed_ns(t0);
      st.status = SolveStatus::QpFailure;
      st.message = e.what();
      break;
    }
    st.fdbk_ns += elapsed_ns(t0);
    st.qp_iterations.push_back(sol.iterations);
    ++st.iterations;
    if (!opts.line_search) {
      lin = linearize(spec, model, apply_step(lin.iterate, sol), opts, &frozen);
      st.prep_ns += lin.prep_ns;
      st.step_sizes.push_back(1.0);
    } else {
      rho = std::max(rho, 1.5 * dual_max(sol) + 1.0);
      const double phi0 = l1_merit(spec, lin, x0, rho);
      double alpha = 1.0;
      for (int b = 0;; ++b) {
        Linearization trial = linearize(spec, model, damped_step(lin.iterate, sol, alpha), opts, &frozen);
        st.prep_ns += trial.prep_ns;
        if (l1_merit(spec, trial, x0, rho) < phi0 || b == opts.max_backtracks) {
          lin = std::move(trial);
          break;
        }
        alpha *= 0.5;
      }
      st.step_sizes.push_back(alpha);
    }
    const KktResiduals kkt = kkt_residuals(lin, &x0);
    st.kkt_history.push_back(kkt);
    if (kkt.max() < opts.tol) {
      st.status = SolveStatus::Converged;
      break;
    }
  }
  res.iterate = lin.iterate;
  res.schedule = lin.schedule;
  return res;
}

PreparedQp rti_prepare_at(const OcpSpec& spec, const ResidualModel& model, const Iterate& iterate,
                          const SolverOptions& opts, const CovarianceSchedule* frozen) {
  opts.validate();
  PreparedQp p;
  p.lin = linearize(spec, model, iterate, opts, frozen);
  p.ready = true;
  return p;
}

PreparedQp rti_prepare(const OcpSpec& spec, const ResidualModel& model, const Iterate& previous,
                       const SolverOptions& opts, const CovarianceSchedule* previous_schedule) {
  CovarianceSchedule frozen;
  if (opts.covariance == CovarianceMode::Fixed && previous_schedule)
    frozen = previous_schedule->shifted(spec);
  return rti_prepare_at(spec, model, shift_iterate(previous), opts,
                        frozen.empty() ? nullptr : &frozen);
}

FeedbackResult rti_feedback(const PreparedQp& prepared, const Vec& x0, const SolverOptions& opts) {
  if (!prepared.ready) throw std::logic_error("rti_feedback: prepare has not been called");
  const Linearization& lin = prepared.lin;
  require_dims(x0.size() == lin.qp.dx0.size(), "rti_feedback: x0 size");
  FeedbackResult out;
  const auto t0 = Clock::now();
  QpSubproblem qp = lin.qp;
  qp.dx0 = x0 - lin.iterate.x[0];
  const QpSolution sol = solve_qp(qp, opts.qp);
  out.iterate = apply_step(lin.iterate, sol);
  out.u0 = out.iterate.u[0];
  out.stats.fdbk_ns = elapsed_ns(t0);
  out.stats.prep_ns = lin.prep_ns;
  out.stats.iterations = 1;
  out.stats.qp_iterations.push_back(sol.iterations);
  out.stats.status = SolveStatus::Prepared;
  return out;
}

std::string stats_json(const SolveStats& stats) {
  nlohmann::json j;
  j["iter"] = stats.iterations;
  j["kkt"] = stats.kkt_history.empty() ? nlohmann::json(nullptr)
                                       : nlohmann::json(stats.kkt_history.back().max());
  j["t_prep_ns"] = stats.prep_ns;
  j["t_fdbk_ns"] = stats.fdbk_ns;
  j["status"] = to_string(stats.status);
  return j.dump();
}

}  // namespace resmpc
