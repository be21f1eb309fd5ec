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

#include "resmpc/qp.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

namespace resmpc {

void QpSubproblem::check() const {
  const int N = horizon();
  require_dims(N >= 1, "QP: need at least one stage plus the terminal stage");
  for (int k = 0; k <= N; ++k) {
    const QpStage& s = stages[k];
    const std::string at = "QP stage " + std::to_string(k) + ": ";
    const int nx = s.nx(), nu = s.nu(), m = s.rows();
    require_dims(s.Q.cols() == nx && s.q.size() == nx, at + "Q/q shape");
    require_dims(s.R.cols() == nu && s.r.size() == nu && s.S.rows() == nu &&
                     (nu == 0 || s.S.cols() == nx), at + "R/S/r shape");
    require_dims(s.C.rows() == m && (m == 0 || s.C.cols() == nx), at + "C shape");
    require_dims(s.D.rows() == m && (m == 0 || nu == 0 || s.D.cols() == nu), at + "D shape");
    require_dims(static_cast<int>(s.soft.size()) == m && s.rho1.size() == m && s.rho2.size() == m,
                 at + "soft-row data shape");
    if (k < N) {
      const int nxn = stages[k + 1].nx();
      require_dims(s.A.rows() == nxn && s.A.cols() == nx && s.B.rows() == nxn &&
                       s.B.cols() == nu && s.b.size() == nxn, at + "dynamics shape");
    } else {
      require_dims(nu == 0, at + "terminal stage must have no input");
    }
    auto finite = [&](bool ok, const char* block) {
      if (!ok) throw NumericalError(at + "non-finite entries in " + block);
    };
    finite(s.Q.allFinite() && s.q.allFinite(), "Q/q");
    finite(s.R.allFinite() && s.S.allFinite() && s.r.allFinite(), "R/S/r");
    finite(s.A.allFinite() && s.B.allFinite() && s.b.allFinite(), "dynamics");
    finite(s.C.allFinite() && s.D.allFinite() && s.e.allFinite(), "constraints");
  }
  require_dims(dx0.size() == stages[0].nx(), "QP: dx0 size");
}

namespace {

struct IpStage {
  Vec x, u, lam, t, s, nu;
};

// Condensed Newton blocks and their Riccati factorization.
struct Riccati {
  std::vector<Mat> Qt, St, Rt;
  std::vector<Mat> P, K, Hm;
  std::vector<Eigen::LLT<Mat>> G;
};

struct Rhs {
  Trajectory qh, rh, d;
};

struct Step {
  Trajectory dx, du, pi, dlam, dt, ds, dnu;
};

bool any_rows(const QpSubproblem& qp) {
  for (const auto& s : qp.stages)
    if (s.rows() > 0) return true;
  return false;
}

void factor(const QpSubproblem& qp, const std::vector<Vec>& wt, Riccati& f) {
  const int N = qp.horizon();
  f.Qt.resize(N + 1);
  f.St.resize(N + 1);
  f.Rt.resize(N + 1);
  f.P.resize(N + 1);
  f.K.resize(N);
  f.Hm.resize(N);
  f.G.resize(N);
  for (int k = 0; k <= N; ++k) {
    const QpStage& s = qp.stages[k];
    const Mat WC = wt[k].asDiagonal() * s.C;
    f.Qt[k] = s.Q + s.C.transpose() * WC;
    if (s.nu() > 0) {
      const Mat WD = wt[k].asDiagonal() * s.D;
      f.St[k] = s.S + s.D.transpose() * WC;
      f.Rt[k] = s.R + s.D.transpose() * WD;
    }
  }
  f.P[N] = f.Qt[N];
  for (int k = N - 1; k >= 0; --k) {
    const QpStage& s = qp.stages[k];
    const Mat PA = f.P[k + 1] * s.A;
    const Mat PB = f.P[k + 1] * s.B;
    Mat G = f.Rt[k] + s.B.transpose() * PB;
    f.Hm[k] = f.St[k] + s.B.transpose() * PA;
    f.G[k].compute(G);
    if (s.nu() > 0 && f.G[k].info() != Eigen::Success)
      throw QpError("QP: Riccati factorization breakdown at stage " + std::to_string(k));
    f.K[k] = s.nu() > 0 ? Mat(-f.G[k].solve(f.Hm[k])) : Mat(0, s.nx());
    Mat P = f.Qt[k] + s.A.transpose() * PA + f.Hm[k].transpose() * f.K[k];
    f.P[k] = 0.5 * (P + P.transpose());
  }
}

void riccati_solve(const QpSubproblem& qp, const Riccati& f, const Rhs& rhs, Step& st) {
  const int N = qp.horizon();
  Trajectory p(N + 1), kff(N);
  p[N] = rhs.qh[N];
  for (int k = N - 1; k >= 0; --k) {
    const QpStage& s = qp.stages[k];
    const Vec v = f.P[k + 1] * rhs.d[k] + p[k + 1];
    if (s.nu() > 0) {
      const Vec g = rhs.rh[k] + s.B.transpose() * v;
      kff[k] = -f.G[k].solve(g);
    } else {
      kff[k] = Vec(0);
    }
    p[k] = rhs.qh[k] + s.A.transpose() * v + f.Hm[k].transpose() * kff[k];
  }
  st.dx.assign(N + 1, Vec());
  st.du.assign(N, Vec());
  st.pi.assign(N, Vec());
  st.dx[0] = Vec::Zero(qp.stages[0].nx());
  for (int k = 0; k < N; ++k) {
    const QpStage& s = qp.stages[k];
    st.du[k] = f.K[k] * st.dx[k] + kff[k];
    st.dx[k + 1] = s.A * st.dx[k] + s.B * st.du[k] + rhs.d[k];
    st.pi[k] = f.P[k + 1] * st.dx[k + 1] + p[k + 1];
  }
}

// Residual of the condensed Newton system at `st` (zero for an exact solve).
Rhs newton_residual(const QpSubproblem& qp, const Riccati& f, const Rhs& rhs, const Step& st) {
  const int N = qp.horizon();
  Rhs r;
  r.qh.assign(N + 1, Vec());
  r.rh.assign(N + 1, Vec());
  r.d.assign(N, Vec());
  for (int k = 0; k <= N; ++k) {
    const QpStage& s = qp.stages[k];
    Vec gx = f.Qt[k] * st.dx[k] + rhs.qh[k];
    if (k < N) {
      gx += s.A.transpose() * st.pi[k];
      if (s.nu() > 0) {
        gx += f.St[k].transpose() * st.du[k];
        r.rh[k] = f.St[k] * st.dx[k] + f.Rt[k] * st.du[k] + rhs.rh[k] + s.B.transpose() * st.pi[k];
      } else {
        r.rh[k] = rhs.rh[k];
      }
      r.d[k] = s.A * st.dx[k] + s.B * st.du[k] + rhs.d[k] - st.dx[k + 1];
    } else {
      r.rh[k] = rhs.rh[k];
    }
    if (k > 0) gx -= st.pi[k - 1];
    // dx_0 is fixed; its stationarity row carries no unknown.
    r.qh[k] = k > 0 ? gx : Vec::Zero(gx.size());
  }
  return r;
}

double max_abs(const Trajectory& t) {
  double m = 0.0;
  for (const auto& v : t)
    if (v.size()) m = std::max(m, v.cwiseAbs().maxCoeff());
  return m;
}

// Iterative refinement against roundoff in the Riccati factor, which sees
// barrier weights spanning many orders of magnitude near the solution.
void refine(const QpSubproblem& qp, const Riccati& f, const Rhs& rhs, Step& st, int sweeps) {
  for (int i = 0; i < sweeps; ++i) {
    const Rhs r = newton_residual(qp, f, rhs, st);
    const double scale = 1.0 + std::max({max_abs(rhs.qh), max_abs(rhs.rh), max_abs(rhs.d)});
    if (std::max({max_abs(r.qh), max_abs(r.rh), max_abs(r.d)}) <= 1e-14 * scale) return;
    Step corr;
    riccati_solve(qp, f, r, corr);
    for (size_t k = 0; k < st.dx.size(); ++k) st.dx[k] += corr.dx[k];
    for (size_t k = 0; k < st.du.size(); ++k) {
      st.du[k] += corr.du[k];
      st.pi[k] += corr.pi[k];
    }
  }
}

double max_step(const Vec& v, const Vec& dv) {
  double a = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
  return a;
}

class InteriorPoint {
 public:
  InteriorPoint(const QpSubproblem& qp, const QpOptions& opts) : qp_(qp), opts_(opts) {
    N_ = qp.horizon();
    scale_ = 1.0;
    for (const auto& s : qp.stages) {
      if (s.q.size()) scale_ = std::max(scale_, s.q.cwiseAbs().maxCoeff());
      if (s.r.size()) scale_ = std::max(scale_, s.r.cwiseAbs().maxCoeff());
    }
    init();
  }

  QpSolution run() {
    QpSolution sol;
    double res = 0.0;
    if (!any_rows(qp_)) {
      // Pure equality-constrained LQ: a single Newton step is exact.
      newton(std::vector<Vec>(N_ + 1), {}, {}, step_);
      apply(step_, 1.0);
      sol.iterations = 1;
      res = residual();
    } else {
      // Near the solution the barrier weights lambda/t reach ~1e16 and the
      // Newton steps lose accuracy (or the Riccati factor its definiteness).
      // The best iterate seen is kept; it is returned when the loop must
      // stop early, provided it meets accept_tol.
      int it = 0;
      double best = std::numeric_limits<double>::infinity();
      std::vector<IpStage> best_z;
      Trajectory best_pi;
      auto restore_best = [&](const std::string& why) {
        if (best > opts_.accept_tol) {
          char buf[48];
          std::snprintf(buf, sizeof buf, " (best residual %.3e)", best);
          throw QpError(why + buf);
        }
        z_ = best_z;
        pi_ = best_pi;
        res = best;
      };
      for (;; ++it) {
        compute_residuals();
        res = residual();
        if (!std::isfinite(res)) {
          restore_best("QP: non-finite iterate");
          break;
        }
        if (res < best) {
          best = res;
          best_z = z_;
          best_pi = pi_;
        }
        if (res <= opts_.tol) break;
        if (it >= opts_.max_iter) {
          restore_best("QP: interior point did not converge");
          break;
        }
        if (best <= opts_.accept_tol && res > 1e3 * best) {
          restore_best("QP: stalled");
          break;
        }
        try {
          iterate();
        } catch (const QpError& e) {
          restore_best(e.what());
          break;
        }
      }
      sol.iterations = it;
    }
    sol.residual = res;
    sol.dx.resize(N_ + 1);
    sol.du.resize(N_);
    sol.lam.resize(N_ + 1);
    sol.slack.resize(N_ + 1);
    sol.slack_mult.resize(N_ + 1);
    for (int k = 0; k <= N_; ++k) {
      sol.dx[k] = z_[k].x;
      if (k < N_) sol.du[k] = z_[k].u;
      sol.lam[k] = z_[k].lam;
      sol.slack[k] = z_[k].s;
      sol.slack_mult[k] = z_[k].nu;
    }
    sol.pi = pi_;
    return sol;
  }

 private:
  void init() {
    z_.resize(N_ + 1);
    pi_.assign(N_, Vec());
    for (int k = 0; k <= N_; ++k) {
      const QpStage& s = qp_.stages[k];
      IpStage& z = z_[k];
      if (k == 0) z.x = qp_.dx0;
      if (k < N_) {
        z.u = Vec::Zero(s.nu());
        z_[k + 1].x = s.A * z.x + s.B * z.u + s.b;
        pi_[k] = Vec::Zero(qp_.stages[k + 1].nx());
      } else {
        z.u = Vec(0);
      }
      const int m = s.rows();
      z.s = Vec::Zero(m);
      z.nu = Vec::Zero(m);
      z.lam = Vec::Ones(m);
      z.t = Vec(m);
      const Vec c = row_values(k);
      for (int i = 0; i < m; ++i) {
        if (s.soft[i]) {
          z.s(i) = 1.0;
          z.nu(i) = 1.0;
        }
        z.t(i) = std::max(1.0, -(c(i) - z.s(i)));
      }
    }
  }

  Vec row_values(int k) const {
    const QpStage& s = qp_.stages[k];
    Vec c = s.e + s.C * z_[k].x;
    if (s.nu() > 0 && s.rows() > 0) c += s.D * z_[k].u;
    return c;
  }

  int comp_count() const {
    int n = 0;
    for (const auto& s : qp_.stages) {
      n += s.rows();
      for (bool b : s.soft) n += b ? 1 : 0;
    }
    return n;
  }

  double mu() const {
    double acc = 0.0;
    for (int k = 0; k <= N_; ++k) {
      const auto& z = z_[k];
      acc += z.lam.dot(z.t);
      for (int i = 0; i < z.s.size(); ++i)
        if (qp_.stages[k].soft[i]) acc += z.nu(i) * z.s(i);
    }
    const int n = comp_count();
    return n ? acc / n : 0.0;
  }

  // Stationarity without dynamics multipliers, primal row residual, slack
  // stationarity and dynamics defect at the current point.
  void compute_residuals() {
    rx_.resize(N_ + 1);
    ru_.resize(N_ + 1);
    rp_.resize(N_ + 1);
    rs_.resize(N_ + 1);
    dyn_.resize(N_);
    for (int k = 0; k <= N_; ++k) {
      const QpStage& s = qp_.stages[k];
      const IpStage& z = z_[k];
      rx_[k] = s.Q * z.x + s.q + s.C.transpose() * z.lam;
      if (s.nu() > 0) {
        rx_[k] += s.S.transpose() * z.u;
        ru_[k] = s.S * z.x + s.R * z.u + s.r;
        if (s.rows() > 0) ru_[k] += s.D.transpose() * z.lam;
      } else {
        ru_[k] = Vec(0);
      }
      rp_[k] = row_values(k) - z.s + z.t;
      rs_[k] = Vec::Zero(s.rows());
      for (int i = 0; i < s.rows(); ++i)
        if (s.soft[i]) rs_[k](i) = s.rho2(i) * z.s(i) + s.rho1(i) - z.lam(i) - z.nu(i);
      if (k < N_) dyn_[k] = s.A * z.x + s.B * z.u + s.b - z_[k + 1].x;
    }
  }

  double residual() const {
    double stat = 0.0, feas = 0.0, comp = 0.0;
    for (int k = 0; k <= N_; ++k) {
      const QpStage& s = qp_.stages[k];
      if (k > 0) {
        Vec g = rx_[k] - pi_[k - 1];
        if (k < N_) g += s.A.transpose() * pi_[k];
        if (g.size()) stat = std::max(stat, g.cwiseAbs().maxCoeff());
      }
      if (k < N_ && ru_[k].size()) {
        const Vec g = ru_[k] + s.B.transpose() * pi_[k];
        stat = std::max(stat, g.cwiseAbs().maxCoeff());
      }
      if (s.rows() > 0) {
        stat = std::max(stat, rs_[k].cwiseAbs().maxCoeff());
        feas = std::max(feas, rp_[k].cwiseAbs().maxCoeff());
        comp = std::max(comp, z_[k].lam.cwiseProduct(z_[k].t).maxCoeff());
        for (int i = 0; i < s.rows(); ++i)
          if (s.soft[i]) comp = std::max(comp, z_[k].nu(i) * z_[k].s(i));
      }
      if (k < N_ && dyn_[k].size()) feas = std::max(feas, dyn_[k].cwiseAbs().maxCoeff());
    }
    return std::max({stat / scale_, feas, comp});
  }

  // Newton step for the given complementarity right-hand sides. Empty
  // rlt/rns mean the pure LQ case.
  void newton(const std::vector<Vec>& wt_in, const std::vector<Vec>& rlt,
              const std::vector<Vec>& rns, Step& st) {
    std::vector<Vec> wt = wt_in;
    std::vector<Vec> gt(N_ + 1), h(N_ + 1), Dd(N_ + 1), w(N_ + 1);
    const bool lq = rlt.empty();
    if (lq) {
      compute_residuals();
      for (int k = 0; k <= N_; ++k) wt[k] = Vec::Zero(qp_.stages[k].rows());
    } else {
      for (int k = 0; k <= N_; ++k) {
        const QpStage& s = qp_.stages[k];
        const IpStage& z = z_[k];
        const int m = s.rows();
        w[k] = z.lam.cwiseQuotient(z.t);
        wt[k] = w[k];
        const Vec g = (z.lam.cwiseProduct(rp_[k]) - rlt[k]).cwiseQuotient(z.t);
        gt[k] = g;
        h[k] = Vec::Zero(m);
        Dd[k] = Vec::Ones(m);
        for (int i = 0; i < m; ++i) {
          if (!s.soft[i]) continue;
          Dd[k](i) = s.rho2(i) + w[k](i) + z.nu(i) / z.s(i);
          h[k](i) = g(i) - rns[k](i) / z.s(i) - rs_[k](i);
          wt[k](i) = w[k](i) - w[k](i) * w[k](i) / Dd[k](i);
          gt[k](i) = g(i) - w[k](i) * h[k](i) / Dd[k](i);
        }
      }
    }
    if (!factored_ || lq) {
      factor(qp_, wt, fac_);
      factored_ = !lq;
    }
    Rhs rhs;
    rhs.qh.resize(N_ + 1);
    rhs.rh.resize(N_ + 1);
    rhs.d = dyn_;
    for (int k = 0; k <= N_; ++k) {
      const QpStage& s = qp_.stages[k];
      rhs.qh[k] = rx_[k];
      rhs.rh[k] = ru_[k];
      if (!lq && s.rows() > 0) {
        rhs.qh[k] += s.C.transpose() * gt[k];
        if (s.nu() > 0) rhs.rh[k] += s.D.transpose() * gt[k];
      }
    }
    riccati_solve(qp_, fac_, rhs, st);
    if (!lq) refine(qp_, fac_, rhs, st, 2);
    st.dlam.assign(N_ + 1, Vec());
    st.dt.assign(N_ + 1, Vec());
    st.ds.assign(N_ + 1, Vec());
    st.dnu.assign(N_ + 1, Vec());
    for (int k = 0; k <= N_; ++k) {
      const QpStage& s = qp_.stages[k];
      const IpStage& z = z_[k];
      const int m = s.rows();
      st.dlam[k] = st.dt[k] = st.ds[k] = st.dnu[k] = Vec::Zero(m);
      if (lq || m == 0) continue;
      Vec a = s.C * st.dx[k];
      if (s.nu() > 0) a += s.D * st.du[k];
      for (int i = 0; i < m; ++i) {
        if (s.soft[i]) {
          st.ds[k](i) = (w[k](i) * a(i) + h[k](i)) / Dd[k](i);
          st.dnu[k](i) = (-rns[k](i) - z.nu(i) * st.ds[k](i)) / z.s(i);
        }
        st.dlam[k](i) = wt[k](i) * a(i) + gt[k](i);
        st.dt[k](i) = -rp_[k](i) - a(i) + st.ds[k](i);
      }
    }
  }

  double step_length(const Step& st) const {
    double a = 1.0;
    for (int k = 0; k <= N_; ++k) {
      const QpStage& s = qp_.stages[k];
      const IpStage& z = z_[k];
      a = std::min({a, max_step(z.lam, st.dlam[k]), max_step(z.t, st.dt[k])});
      for (int i = 0; i < s.rows(); ++i) {
        if (!s.soft[i]) continue;
        if (st.ds[k](i) < 0.0) a = std::min(a, -z.s(i) / st.ds[k](i));
        if (st.dnu[k](i) < 0.0) a = std::min(a, -z.nu(i) / st.dnu[k](i));
      }
    }
    return a;
  }

  void apply(const Step& st, double a) {
    for (int k = 0; k <= N_; ++k) {
      IpStage& z = z_[k];
      z.x += a * st.dx[k];
      if (k < N_) {
        z.u += a * st.du[k];
        pi_[k] += a * (st.pi[k] - pi_[k]);
      }
      if (st.dlam.empty() || z.lam.size() == 0) continue;
      z.lam += a * st.dlam[k];
      z.t += a * st.dt[k];
      z.s += a * st.ds[k];
      z.nu += a * st.dnu[k];
    }
  }

  void iterate() {
    const double mu0 = mu();
    std::vector<Vec> rlt(N_ + 1), rns(N_ + 1);
    for (int k = 0; k <= N_; ++k) {
      rlt[k] = z_[k].lam.cwiseProduct(z_[k].t);
      rns[k] = z_[k].nu.cwiseProduct(z_[k].s);
    }
    factored_ = false;
    Step aff;
    newton(std::vector<Vec>(N_ + 1), rlt, rns, aff);
    const double a_aff = step_length(aff);
    double acc = 0.0;
    for (int k = 0; k <= N_; ++k) {
      const QpStage& s = qp_.stages[k];
      const IpStage& z = z_[k];
      for (int i = 0; i < s.rows(); ++i) {
        acc += (z.lam(i) + a_aff * aff.dlam[k](i)) * (z.t(i) + a_aff * aff.dt[k](i));
        if (s.soft[i]) acc += (z.nu(i) + a_aff * aff.dnu[k](i)) * (z.s(i) + a_aff * aff.ds[k](i));
      }
    }
    const double mu_aff = acc / comp_count();
    const double sigma = std::pow(std::clamp(mu_aff / mu0, 0.0, 1.0), 3);
    for (int k = 0; k <= N_; ++k) {
      const QpStage& s = qp_.stages[k];
      const int m = s.rows();
      for (int i = 0; i < m; ++i) {
        rlt[k](i) += aff.dlam[k](i) * aff.dt[k](i) - sigma * mu0;
        if (s.soft[i]) rns[k](i) += aff.dnu[k](i) * aff.ds[k](i) - sigma * mu0;
      }
    }
    newton(std::vector<Vec>(N_ + 1), rlt, rns, step_);
    const double a = std::min(1.0, opts_.step_fraction * step_length(step_));
    apply(step_, a);
  }

  const QpSubproblem& qp_;
  QpOptions opts_;
  int N_ = 0;
  double scale_ = 1.0;
  std::vector<IpStage> z_;
  Trajectory pi_;
  Trajectory rx_, ru_, rp_, rs_, dyn_;
  Riccati fac_;
  bool factored_ = false;
  Step step_;
};

}  // namespace

QpSolution solve_qp(const QpSubproblem& qp, const QpOptions& opts) {
  qp.check();
  InteriorPoint ip(qp, opts);
  return ip.run();
}

double qp_kkt_residual(const QpSubproblem& qp, const QpSolution& sol) {
  const int N = qp.horizon();
  double res = 0.0;
  auto upd = [&](const Vec& v) {
    if (v.size()) res = std::max(res, v.cwiseAbs().maxCoeff());
  };
  upd(sol.dx[0] - qp.dx0);
  for (int k = 0; k <= N; ++k) {
    const QpStage& s = qp.stages[k];
    Vec gx = s.Q * sol.dx[k] + s.q + s.C.transpose() * sol.lam[k];
    if (k < N) {
      gx += s.A.transpose() * sol.pi[k];
      if (s.nu() > 0) {
        gx += s.S.transpose() * sol.du[k];
        Vec gu = s.S * sol.dx[k] + s.R * sol.du[k] + s.r + s.B.transpose() * sol.pi[k];
        if (s.rows() > 0) gu += s.D.transpose() * sol.lam[k];
        upd(gu);
      }
      upd(s.A * sol.dx[k] + s.B * sol.du[k] + s.b - sol.dx[k + 1]);
    }
    if (k > 0) upd(gx - sol.pi[k - 1]);
    if (s.rows() == 0) continue;
    Vec c = s.e + s.C * sol.dx[k];
    if (s.nu() > 0) c += s.D * sol.du[k];
    c -= sol.slack[k];
    for (int i = 0; i < s.rows(); ++i) {
      res = std::max({res, c(i), -sol.lam[k](i), std::abs(sol.lam[k](i) * c(i))});
      if (s.soft[i]) {
        res = std::max({res, -sol.slack[k](i), std::abs(sol.slack_mult[k](i) * sol.slack[k](i)),
                        std::abs(s.rho2(i) * sol.slack[k](i) + s.rho1(i) - sol.lam[k](i) -
                                 sol.slack_mult[k](i))});
      }
    }
  }
  return res;
}

}  // namespace resmpc
