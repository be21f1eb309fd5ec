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

#include <string>
#include <vector>

#include "resmpc/types.hpp"

namespace resmpc {

/// Contouring and lag errors with their derivatives w.r.t. (px, py, theta).
struct ContouringErrors {
  double ec = 0.0;  // lateral, positive to the left of the centerline
  double el = 0.0;  // longitudinal, positive ahead of the reference point
  Eigen::Vector3d dec = Eigen::Vector3d::Zero();
  Eigen::Vector3d del = Eigen::Vector3d::Zero();
};

/// Closed centerline as a periodic cubic spline in the arc length theta.
///
/// theta is lifted: any real value is accepted and wrapped by the track
/// length, so progress accumulates across laps.
class TrackModel {
 public:
  /// Resamples the closed polyline `points` (n x 2, last point not repeated)
  /// to `knots` equally spaced arc-length knots.
  TrackModel(const Mat& points, double half_width, double margin, int knots = 400);

  /// Shipped layouts: "desk", "oval", "circle".
  static TrackModel builtin(const std::string& name, double half_width, double margin);

  double length() const { return length_; }
  double half_width() const { return half_width_; }
  double margin() const { return margin_; }
  /// Width of the soft (green) band, half_width - margin.
  double soft_width() const { return half_width_ - margin_; }

  double wrap(double theta) const;
  Eigen::Vector2d position(double theta) const;
  Eigen::Vector2d tangent(double theta) const;  // dp/dtheta
  double curvature(double theta) const;
  double heading(double theta) const;

  ContouringErrors errors(double px, double py, double theta) const;

  /// Arc length of the closest centerline point, searched within
  /// +-window of `guess` (window <= 0 scans the whole track). The result is
  /// lifted to lie next to `guess`.
  double project(double px, double py, double guess, double window = 0.0) const;

  /// Signed lateral distance to the centerline at the closest point.
  double lateral_distance(double px, double py, double guess) const;

 private:
  struct Eval {
    Eigen::Vector2d p, d1, d2;
  };
  Eval eval(double theta) const;

  double length_ = 0.0, spacing_ = 0.0, half_width_ = 0.0, margin_ = 0.0;
  Mat knots_;   // K x 2
  Mat second_;  // K x 2 second derivatives at the knots
};

}  // namespace resmpc
