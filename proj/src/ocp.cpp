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

#include "resmpc/ocp.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <sstream>

namespace resmpc {

double NlsCost::value(const Vec& x, const Vec& u) const {
  if (empty()) return 0.0;
  Vec y;
  residual(x, u, y, nullptr, nullptr);
  return 0.5 * y.dot(weight * y);
}

namespace {

Constraint bound_row(std::string name, int index, int nx, int nu, bool on_input,
                     double bound, bool upper) {
  Constraint c;
  c.name = std::move(name);
  const double sign = upper ? 1.0 : -1.0;
  c.fn = [=](const Vec& x, const Vec& u, Vec* gx, Vec* gu) {
    if (gx) *gx = Vec::Zero(nx);
    if (gu) *gu = Vec::Zero(nu);
    const double v = on_input ? u(index) : x(index);
    if (on_input) {
      if (gu) (*gu)(index) = sign;
    } else if (gx) {
      (*gx)(index) = sign;
    }
    return sign * (v - bound);
  };
  return c;
}

}  // namespace

void OcpSpec::add_input_bounds(const Vec& lower, const Vec& upper) {
  require_dims(lower.size() == nu && upper.size() == nu, "add_input_bounds: size != nu");
  for (int i = 0; i < nu; ++i) {
    if (std::isfinite(lower(i)))
      constraints.push_back(bound_row("u" + std::to_string(i) + ">=lb", i, nx, nu, true, lower(i), false));
    if (std::isfinite(upper(i)))
      constraints.push_back(bound_row("u" + std::to_string(i) + "<=ub", i, nx, nu, true, upper(i), true));
  }
}

void OcpSpec::add_state_bounds(const Vec& lower, const Vec& upper, bool soft,
                               double slack_linear, double slack_quadratic,
                               bool terminal, double probability) {
  require_dims(lower.size() == nx && upper.size() == nx, "add_state_bounds: size != nx");
  auto decorate = [&](Constraint c) {
    c.soft = soft;
    c.slack_linear = slack_linear;
    c.slack_quadratic = slack_quadratic;
    c.probability = probability;
    c.initial_stage = false;
    return c;
  };
  for (int i = 0; i < nx; ++i) {
    for (int side = 0; side < 2; ++side) {
      const bool upper_side = side == 1;
      const double b = upper_side ? upper(i) : lower(i);
      if (!std::isfinite(b)) continue;
      Constraint c = decorate(bound_row("x" + std::to_string(i) + (upper_side ? "<=ub" : ">=lb"),
                                        i, nx, nu, false, b, upper_side));
      constraints.push_back(c);
      if (terminal) {
        Constraint t = bound_row(c.name, i, nx, 0, false, b, upper_side);
        t = decorate(t);
        terminal_constraints.push_back(t);
      }
    }
  }
}

std::vector<const Constraint*> OcpSpec::stage_rows(int k) const {
  std::vector<const Constraint*> rows;
  if (k == N) {
    for (const auto& c : terminal_constraints) rows.push_back(&c);
    return rows;
  }
  for (const auto& c : constraints)
    if (k > 0 || c.initial_stage) rows.push_back(&c);
  return rows;
}

Iterate Iterate::cold_start(const OcpSpec& spec, const Vec& x0) {
  Iterate it;
  it.x.assign(spec.N + 1, x0);
  it.u.assign(spec.N, Vec::Zero(spec.nu));
  it.resize_duals(spec);
  return it;
}

void Iterate::resize_duals(const OcpSpec& spec) {
  pi.assign(spec.N, Vec::Zero(spec.nx));
  mu.resize(spec.N + 1);
  slack.resize(spec.N + 1);
  slack_mult.resize(spec.N + 1);
  for (int k = 0; k <= spec.N; ++k) {
    const int m = spec.rows_at(k);
    mu[k] = Vec::Zero(m);
    slack[k] = Vec::Zero(m);
    slack_mult[k] = Vec::Zero(m);
  }
}

Iterate shift_iterate(const Iterate& it) {
  Iterate s = it;
  auto shift = [](Trajectory& t, size_t first, size_t last) {
    for (size_t k = first; k < last; ++k) t[k] = t[k + 1];
  };
  if (s.x.size() >= 2) shift(s.x, 0, s.x.size() - 1);
  if (s.u.size() >= 2) shift(s.u, 0, s.u.size() - 1);
  if (s.pi.size() >= 2) shift(s.pi, 0, s.pi.size() - 1);
  // Inequality duals: stages 1..N-1 share a row layout, stage 0 and N may not.
  const size_t n_stages = s.mu.size();
  if (n_stages >= 3) {
    for (Trajectory* t : {&s.mu, &s.slack, &s.slack_mult}) {
      const Vec next0 = (*t)[1];
      shift(*t, 1, n_stages - 2);
      (*t)[0] = next0.size() == (*t)[0].size() ? next0 : Vec::Zero((*t)[0].size());
    }
  }
  return s;
}

int numerical_rank(const Mat& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) >= rel_tol * s(0)) ++r;
  return r;
}

namespace {

void check_sym_psd(const Mat& m, double eig_floor, const std::string& name,
                   std::vector<Violation>& out) {
  if (m.rows() != m.cols()) {
    out.push_back({name + "_not_square", name + " is not square"});
    return;
  }
  if (!m.allFinite()) {
    out.push_back({name + "_not_finite", name + " has non-finite entries"});
    return;
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    out.push_back({name + "_not_symmetric", name + " is not symmetric"});
    return;
  }
  if (m.size() == 0) return;
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < eig_floor) {
    std::ostringstream os;
    os << name << " has eigenvalue " << es.eigenvalues().minCoeff();
    out.push_back({name + "_not_psd", os.str()});
  }
}

void check_cost_shapes(const NlsCost& cost, int nx, int nu, const std::string& name,
                       std::vector<Violation>& out) {
  if (cost.empty()) return;
  if (!cost.residual) {
    out.push_back({name + "_missing_residual", name + " has ny > 0 but no residual"});
    return;
  }
  if (cost.weight.rows() != cost.ny || cost.weight.cols() != cost.ny) {
    out.push_back({name + "_weight_shape", name + " weight is not ny x ny"});
    return;
  }
  check_sym_psd(cost.weight, 0.0, name + "_weight", out);
  try {
    Vec y;
    Mat jx, ju;
    cost.residual(Vec::Zero(nx), Vec::Zero(nu), y, &jx, &ju);
    if (y.size() != cost.ny || jx.rows() != cost.ny || jx.cols() != nx ||
        (nu > 0 && (ju.rows() != cost.ny || ju.cols() != nu)))
      out.push_back({name + "_jacobian_shape", name + " residual/Jacobian shapes inconsistent"});
  } catch (const std::exception& e) {
    out.push_back({name + "_eval_failed", e.what()});
  }
}

void check_constraints(const std::vector<Constraint>& cs, int nx, int nu,
                       const std::string& group, std::vector<Violation>& out) {
  for (const auto& c : cs) {
    if (!c.fn) {
      out.push_back({"constraint_missing_function", group + ":" + c.name});
      continue;
    }
    if (c.tightened() && !(c.probability > 0.0 && c.probability < 1.0))
      out.push_back({"probability_out_of_range", group + ":" + c.name});
    if (c.soft && (c.slack_linear < 0.0 || c.slack_quadratic < 0.0 ||
                   (c.slack_linear == 0.0 && c.slack_quadratic == 0.0)))
      out.push_back({"slack_penalty_invalid", group + ":" + c.name});
    try {
      Vec gx, gu;
      c.fn(Vec::Zero(nx), Vec::Zero(nu), &gx, &gu);
      if (gx.size() != nx || (nu > 0 && gu.size() != nu))
        out.push_back({"constraint_jacobian_shape", group + ":" + c.name});
    } catch (const std::exception& e) {
      out.push_back({"constraint_eval_failed", group + ":" + c.name + ": " + e.what()});
    }
  }
}

}  // namespace

std::vector<Violation> validate_spec(const OcpSpec& spec) {
  std::vector<Violation> out;
  if (spec.N < 1) out.push_back({"horizon_invalid", "N must be >= 1"});
  if (spec.nx < 1 || spec.nu < 0 || spec.ng < 0)
    out.push_back({"dims_invalid", "nx >= 1, nu >= 0, ng >= 0 required"});
  if (!spec.dynamics) {
    out.push_back({"dynamics_missing", "no nominal vector field"});
  } else if (spec.dynamics->state_dim() != spec.nx || spec.dynamics->input_dim() != spec.nu) {
    out.push_back({"dynamics_dims", "vector field dimensions differ from (nx, nu)"});
  }
  if (!(spec.disc.dt > 0.0) || spec.disc.n_steps < 1)
    out.push_back({"discretization_invalid", "dt > 0 and n_steps >= 1 required"});

  if (spec.Bd.rows() != spec.nx || spec.Bd.cols() != spec.ng) {
    out.push_back({"B_d_shape", "B_d must be nx x ng"});
  } else if (spec.ng > 0 && numerical_rank(spec.Bd) < spec.ng) {
    out.push_back({"B_d_rank_deficient", "B_d rank-deficient"});
  }

  if (spec.noise_cov.rows() != spec.nx || spec.noise_cov.cols() != spec.nx)
    out.push_back({"noise_shape", "Sigma_w must be nx x nx"});
  else
    check_sym_psd(spec.noise_cov, -1e-10, "noise", out);

  if (spec.stage_cost.empty() && spec.terminal_cost.empty())
    out.push_back({"cost_missing", "no stage or terminal cost"});
  check_cost_shapes(spec.stage_cost, spec.nx, spec.nu, "stage_cost", out);
  check_cost_shapes(spec.terminal_cost, spec.nx, 0, "terminal_cost", out);
  check_constraints(spec.constraints, spec.nx, spec.nu, "stage", out);
  check_constraints(spec.terminal_constraints, spec.nx, 0, "terminal", out);
  return out;
}

Mat pseudo_inverse(const Mat& Bd) {
  if (Bd.cols() == 0) return Mat::Zero(0, Bd.rows());
  Eigen::JacobiSVD<Mat> svd(Bd, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  if (s(0) == 0.0 || s(s.size() - 1) < 1e-10 * s(0))
    throw NumericalError("B_d rank-deficient: pseudo-inverse undefined");
  return svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
}

Vec project_measurement(const Vec& x_next, const Vec& f_val, const Mat& Bd) {
  require_dims(x_next.size() == Bd.rows() && f_val.size() == Bd.rows(),
               "project_measurement: state size != rows of B_d");
  return pseudo_inverse(Bd) * (x_next - f_val);
}

Mat residual_noise_covariance(const Mat& noise_cov, const Mat& Bd) {
  require_dims(noise_cov.rows() == Bd.rows() && noise_cov.cols() == Bd.rows(),
               "residual_noise_covariance: Sigma_w must be nx x nx");
  const Mat P = pseudo_inverse(Bd);
  Mat c = P * noise_cov * P.transpose();
  return 0.5 * (c + c.transpose());
}

}  // namespace resmpc
