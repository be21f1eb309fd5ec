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

#include "resmpc/track.hpp"

#include <Eigen/LU>

#include <cmath>

namespace resmpc {

namespace {

// Periodic cubic spline second derivatives on a uniform grid of spacing h.
Mat periodic_second_derivatives(const Mat& y, double h) {
  const Eigen::Index K = y.rows();
  Mat A = Mat::Zero(K, K);
  Mat rhs(K, y.cols());
  for (Eigen::Index i = 0; i < K; ++i) {
    const Eigen::Index im = (i + K - 1) % K, ip = (i + 1) % K;
    A(i, im) += 1.0;
    A(i, i) += 4.0;
    A(i, ip) += 1.0;
    rhs.row(i) = 6.0 * (y.row(ip) - 2.0 * y.row(i) + y.row(im)) / (h * h);
  }
  return A.partialPivLu().solve(rhs);
}

}  // namespace

TrackModel::TrackModel(const Mat& points, double half_width, double margin, int knots)
    : half_width_(half_width), margin_(margin) {
  if (!(margin > 0.0)) throw std::invalid_argument("TrackModel: margin must be positive");
  if (!(half_width > margin)) throw std::invalid_argument("TrackModel: half width must exceed margin");
  require_dims(points.cols() == 2 && points.rows() >= 4, "TrackModel: need >= 4 points of (x, y)");
  if (knots < 8) throw std::invalid_argument("TrackModel: need >= 8 knots");
  const Eigen::Index n = points.rows();
  std::vector<double> cum(n + 1, 0.0);
  for (Eigen::Index i = 0; i < n; ++i)
    cum[i + 1] = cum[i] + (points.row((i + 1) % n) - points.row(i)).norm();
  double poly_len = cum[n];
  if (!(poly_len > 0.0)) throw std::invalid_argument("TrackModel: degenerate centerline");
  // Two passes: resample the polyline, then once more along the spline so the
  // knot spacing matches its arc length closely.
  Mat pts(knots, 2);
  Eigen::Index seg = 0;
  for (int k = 0; k < knots; ++k) {
    const double s = poly_len * k / knots;
    while (cum[seg + 1] < s) ++seg;
    const double a = (s - cum[seg]) / (cum[seg + 1] - cum[seg]);
    pts.row(k) = (1.0 - a) * points.row(seg) + a * points.row((seg + 1) % n);
  }
  for (int pass = 0; pass < 2; ++pass) {
    knots_ = pts;
    spacing_ = poly_len / knots;
    length_ = poly_len;
    second_ = periodic_second_derivatives(knots_, spacing_);
    // Arc length of the current spline by Gauss-Legendre per interval.
    const double gx[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
    const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    std::vector<double> scum(knots + 1, 0.0);
    for (int k = 0; k < knots; ++k) {
      double acc = 0.0;
      for (int g = 0; g < 3; ++g) acc += gw[g] * eval(spacing_ * (k + 0.5 + 0.5 * gx[g])).d1.norm();
      scum[k + 1] = scum[k] + 0.5 * spacing_ * acc;
    }
    const double L = scum[knots];
    Mat next(knots, 2);
    int j = 0;
    for (int k = 0; k < knots; ++k) {
      const double s = L * k / knots;
      while (scum[j + 1] < s) ++j;
      const double a = (s - scum[j]) / (scum[j + 1] - scum[j]);
      next.row(k) = eval(spacing_ * (j + a)).p.transpose();
    }
    pts = next;
    poly_len = L;
  }
  knots_ = pts;
  length_ = poly_len;
  spacing_ = length_ / knots;
  second_ = periodic_second_derivatives(knots_, spacing_);
}

TrackModel TrackModel::builtin(const std::string& name, double half_width, double margin) {
  const int n = 720;
  Mat pts(n, 2);
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * M_PI * i / n;
    if (name == "circle") {
      pts.row(i) << std::cos(t), std::sin(t);
    } else if (name == "oval") {
      // Long straights joined by wide ends.
      pts.row(i) << 6.0 * std::cos(t), 1.5 * std::sin(t);
    } else if (name == "desk") {
      // Irregular loop with a tight and a wide turn and an S section.
      const double r = 1.0 + 0.15 * std::cos(2.0 * t) + 0.06 * std::sin(3.0 * t);
      pts.row(i) << 2.04 * r * std::cos(t), 1.26 * r * std::sin(t) + 0.144 * std::sin(2.0 * t);
    } else {
      throw std::invalid_argument("TrackModel: unknown track '" + name + "'");
    }
  }
  return TrackModel(pts, half_width, margin);
}

double TrackModel::wrap(double theta) const {
  double w = std::fmod(theta, length_);
  if (w < 0.0) w += length_;
  return w;
}

TrackModel::Eval TrackModel::eval(double theta) const {
  const Eigen::Index K = knots_.rows();
  const double s = wrap(theta) / spacing_;
  Eigen::Index i = static_cast<Eigen::Index>(std::floor(s));
  if (i >= K) i = K - 1;
  const Eigen::Index j = (i + 1) % K;
  const double h = spacing_;
  const double b = s - static_cast<double>(i), a = 1.0 - b;
  const Eigen::Vector2d yi = knots_.row(i).transpose(), yj = knots_.row(j).transpose();
  const Eigen::Vector2d mi = second_.row(i).transpose(), mj = second_.row(j).transpose();
  Eval e;
  e.p = a * yi + b * yj + ((a * a * a - a) * mi + (b * b * b - b) * mj) * (h * h) / 6.0;
  e.d1 = (yj - yi) / h + ((1.0 - 3.0 * a * a) * mi + (3.0 * b * b - 1.0) * mj) * h / 6.0;
  e.d2 = a * mi + b * mj;
  return e;
}

Eigen::Vector2d TrackModel::position(double theta) const { return eval(theta).p; }
Eigen::Vector2d TrackModel::tangent(double theta) const { return eval(theta).d1; }

double TrackModel::curvature(double theta) const {
  const Eval e = eval(theta);
  const double sp = e.d1.norm();
  return (e.d1.x() * e.d2.y() - e.d1.y() * e.d2.x()) / (sp * sp * sp);
}

double TrackModel::heading(double theta) const {
  const Eigen::Vector2d d = eval(theta).d1;
  return std::atan2(d.y(), d.x());
}

ContouringErrors TrackModel::errors(double px, double py, double theta) const {
  const Eval e = eval(theta);
  const double sp = e.d1.norm();
  const Eigen::Vector2d t = e.d1 / sp;
  const Eigen::Vector2d n(-t.y(), t.x());
  const double kappa = (e.d1.x() * e.d2.y() - e.d1.y() * e.d2.x()) / (sp * sp * sp);
  const Eigen::Vector2d r(px - e.p.x(), py - e.p.y());
  ContouringErrors c;
  c.ec = n.dot(r);
  c.el = t.dot(r);
  c.dec << n.x(), n.y(), -kappa * sp * c.el;
  c.del << t.x(), t.y(), kappa * sp * c.ec - sp;
  return c;
}

double TrackModel::project(double px, double py, double guess, double window) const {
  const Eigen::Vector2d q(px, py);
  const bool global = window <= 0.0 || window >= 0.5 * length_;
  const double lo = global ? guess - 0.5 * length_ : guess - window;
  const double hi = global ? guess + 0.5 * length_ : guess + window;
  const int samples = std::max(16, static_cast<int>(std::ceil((hi - lo) / (0.5 * spacing_))));
  double best = guess, best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= samples; ++i) {
    const double th = lo + (hi - lo) * i / samples;
    const double d = (eval(th).p - q).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = th;
    }
  }
  // Newton on the stationarity of the squared distance.
  double th = best;
  for (int it = 0; it < 20; ++it) {
    const Eval e = eval(th);
    const Eigen::Vector2d r = e.p - q;
    const double g = r.dot(e.d1);
    const double H = e.d1.squaredNorm() + r.dot(e.d2);
    if (!(H > 0.0)) break;
    const double step = std::clamp(-g / H, -spacing_, spacing_);
    th += step;
    if (std::abs(step) < 1e-13 * std::max(1.0, length_)) break;
  }
  if ((eval(th).p - q).squaredNorm() > best_d) th = best;
  return th;
}

double TrackModel::lateral_distance(double px, double py, double guess) const {
  const double th = project(px, py, guess);
  return errors(px, py, th).ec;
}

}  // namespace resmpc
