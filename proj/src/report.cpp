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

#include "resmpc/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace resmpc {

namespace {

constexpr const char* kMagic = "# resmpc-log v1";

// Fixed %.6g keeps SVG output byte-stable across runs.
std::string g6(double v) {
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string zone_name(Zone z) {
  switch (z) {
    case Zone::Green: return "green";
    case Zone::Yellow: return "yellow";
    case Zone::Red: return "red";
  }
  return "green";
}

Zone zone_from(const std::string& s) {
  if (s == "green") return Zone::Green;
  if (s == "yellow") return Zone::Yellow;
  if (s == "red") return Zone::Red;
  throw std::runtime_error("log csv: unknown zone '" + s + "'");
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double to_double(const std::string& s) {
  size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::runtime_error("log csv: bad number '" + s + "'");
  return v;
}

std::string vec_field(const Vec& v) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ";" : "") << v(i);
  return os.str();
}

Vec vec_from(const std::string& s) {
  if (s.empty()) return Vec();
  const auto parts = split(s, ';');
  Vec v(static_cast<Eigen::Index>(parts.size()));
  for (size_t i = 0; i < parts.size(); ++i) v(static_cast<Eigen::Index>(i)) = to_double(parts[i]);
  return v;
}

// Maps data ranges to an SVG viewport with a fixed margin.
struct Frame {
  double x0, x1, y0, y1;
  double w = 640, h = 360, m = 48;
  double px(double x) const { return m + (x - x0) / (x1 - x0) * (w - 2 * m); }
  double py(double y) const { return h - m - (y - y0) / (y1 - y0) * (h - 2 * m); }
};

void pad_range(double& lo, double& hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
}

void svg_open(std::ostream& os, double w, double h) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << g6(w) << "\" height=\"" << g6(h)
     << "\" viewBox=\"0 0 " << g6(w) << ' ' << g6(h) << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void axes(std::ostream& os, const Frame& f, const std::string& xlabel, const std::string& ylabel) {
  os << "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n";
  os << "<line x1=\"" << g6(f.m) << "\" y1=\"" << g6(f.h - f.m) << "\" x2=\"" << g6(f.w - f.m)
     << "\" y2=\"" << g6(f.h - f.m) << "\"/>\n";
  os << "<line x1=\"" << g6(f.m) << "\" y1=\"" << g6(f.m) << "\" x2=\"" << g6(f.m) << "\" y2=\""
     << g6(f.h - f.m) << "\"/>\n</g>\n";
  os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
    os << "<text x=\"" << g6(f.px(xv)) << "\" y=\"" << g6(f.h - f.m + 14)
       << "\" text-anchor=\"middle\">" << g6(xv) << "</text>\n";
    os << "<text x=\"" << g6(f.m - 4) << "\" y=\"" << g6(f.py(yv) + 4) << "\" text-anchor=\"end\">"
       << g6(yv) << "</text>\n";
  }
  os << "<text x=\"" << g6(f.w / 2) << "\" y=\"" << g6(f.h - 8) << "\" text-anchor=\"middle\">"
     << xlabel << "</text>\n";
  os << "<text x=\"12\" y=\"" << g6(f.h / 2) << "\" transform=\"rotate(-90 12 " << g6(f.h / 2)
     << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n</g>\n";
}

std::string polyline(const Frame& f, const std::vector<double>& x, const std::vector<double>& y) {
  std::string pts;
  for (size_t i = 0; i < x.size(); ++i) {
    if (i) pts += ' ';
    pts += g6(f.px(x[i])) + "," + g6(f.py(y[i]));
  }
  return pts;
}

// Blue (slow) to red (fast).
std::string speed_color(double s) {
  s = std::clamp(s, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(255 * s));
  const int b = 255 - r;
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x40%02x", r, b);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
                          "#17becf", "#7f7f7f", "#bcbd22"};

}  // namespace

void write_log_csv(std::ostream& os, const RunLog& log) {
  os << kMagic << '\n';
  os << std::setprecision(17);
  os << "#controller=" << log.controller << '\n';
  os << "#seed=" << log.seed << '\n';
  os << "#dt=" << log.dt << '\n';
  os << "#half_width=" << log.half_width << '\n';
  os << "#soft_width=" << log.soft_width << '\n';
  os << "#track_length=" << log.track_length << '\n';
  os << "#final_state=" << vec_field(log.final_state) << '\n';
  os << "step,x,u,cost,distance,zone,prep_ns,fdbk_ns,sqp_iterations,status,held\n";
  for (const auto& r : log.steps) {
    os << r.step << ',' << vec_field(r.x) << ',' << vec_field(r.u) << ',' << r.cost << ','
       << r.distance << ',' << zone_name(r.zone) << ',' << r.prep_ns << ',' << r.fdbk_ns << ','
       << r.sqp_iterations << ',' << r.status << ',' << (r.held ? 1 : 0) << '\n';
  }
  if (!os) throw std::runtime_error("log csv: write failed");
}

RunLog read_log_csv(std::istream& is) {
  RunLog log;
  std::string line;
  if (!std::getline(is, line) || line != kMagic) throw std::runtime_error("log csv: missing header");
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(1, eq - 1), val = line.substr(eq + 1);
      if (key == "controller") log.controller = val;
      else if (key == "seed") log.seed = std::stoull(val);
      else if (key == "dt") log.dt = to_double(val);
      else if (key == "half_width") log.half_width = to_double(val);
      else if (key == "soft_width") log.soft_width = to_double(val);
      else if (key == "track_length") log.track_length = to_double(val);
      else if (key == "final_state") log.final_state = vec_from(val);
      continue;
    }
    if (!header) {
      header = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 11) throw std::runtime_error("log csv: expected 11 fields, got " +
                                                 std::to_string(f.size()));
    StepRecord r;
    r.step = std::stoi(f[0]);
    r.x = vec_from(f[1]);
    r.u = vec_from(f[2]);
    r.cost = to_double(f[3]);
    r.distance = to_double(f[4]);
    r.zone = zone_from(f[5]);
    r.prep_ns = std::stoll(f[6]);
    r.fdbk_ns = std::stoll(f[7]);
    r.sqp_iterations = std::stoi(f[8]);
    r.status = f[9];
    r.held = f[10] == "1";
    log.steps.push_back(std::move(r));
  }
  if (!header) throw std::runtime_error("log csv: missing column header");
  return log;
}

RunLog read_log_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_log_csv(in);
}

nlohmann::json summary_json(const RunLog& log) {
  const RunSummary s = log.summary();
  return {{"controller", log.controller},
          {"seed", log.seed},
          {"steps", log.steps.size()},
          {"cost", s.cost},
          {"laps", s.laps},
          {"crashed", s.crashed},
          {"red_entries", s.red_entries},
          {"red_steps", s.red_steps},
          {"yellow_steps", s.yellow_steps},
          {"held", s.held},
          {"mean_abs_distance", s.mean_abs_distance},
          {"prep_ms", {{"mean", s.prep_ms_mean}, {"std", s.prep_ms_std}}},
          {"fdbk_ms", {{"mean", s.fdbk_ms_mean}, {"std", s.fdbk_ms_std}}},
          {"total_ms", {{"mean", s.total_ms_mean}, {"std", s.total_ms_std}}}};
}

bool write_zone_svg(std::ostream& os, const RunLog& log) {
  if (log.steps.empty()) return false;
  Frame f;
  f.x0 = 0.0;
  f.x1 = std::max(1.0, static_cast<double>(log.steps.size())) * log.dt;
  double dmax = log.half_width * 1.25;
  for (const auto& r : log.steps) dmax = std::max(dmax, std::abs(r.distance));
  f.y0 = -dmax;
  f.y1 = dmax;
  pad_range(f.y0, f.y1);
  svg_open(os, f.w, f.h);
  // Bands: red beyond the half width, yellow in the margin, green inside.
  auto band = [&](double lo, double hi, const char* color) {
    os << "<rect x=\"" << g6(f.px(f.x0)) << "\" y=\"" << g6(f.py(hi)) << "\" width=\""
       << g6(f.px(f.x1) - f.px(f.x0)) << "\" height=\"" << g6(f.py(lo) - f.py(hi)) << "\" fill=\""
       << color << "\" fill-opacity=\"0.25\"/>\n";
  };
  band(log.half_width, f.y1, "#d62728");
  band(f.y0, -log.half_width, "#d62728");
  band(log.soft_width, log.half_width, "#ffbf00");
  band(-log.half_width, -log.soft_width, "#ffbf00");
  band(-log.soft_width, log.soft_width, "#2ca02c");
  std::vector<double> t, d;
  for (const auto& r : log.steps) {
    t.push_back(r.step * log.dt);
    d.push_back(r.distance);
  }
  os << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"" << polyline(f, t, d)
     << "\"/>\n";
  for (const auto& r : log.steps) {
    if (r.zone != Zone::Red) continue;
    os << "<circle cx=\"" << g6(f.px(r.step * log.dt)) << "\" cy=\"" << g6(f.py(r.distance))
       << "\" r=\"2\" fill=\"#d62728\"/>\n";
  }
  axes(os, f, "time [s]", "distance to centerline [m]");
  os << "<text x=\"" << g6(f.w / 2) << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\" "
     << "text-anchor=\"middle\">" << log.controller << " seed " << log.seed << "</text>\n";
  os << "</svg>\n";
  return true;
}

bool write_trajectory_svg(std::ostream& os, const RunLog& log, const TrackModel& track) {
  if (log.steps.empty()) return false;
  const int M = 400;
  std::vector<double> cx, cy, ix, iy, ox, oy;
  for (int i = 0; i <= M; ++i) {
    const double th = track.length() * i / M;
    const Eigen::Vector2d p = track.position(th);
    Eigen::Vector2d t = track.tangent(th);
    t.normalize();
    const Eigen::Vector2d n(-t.y(), t.x());
    cx.push_back(p.x());
    cy.push_back(p.y());
    ix.push_back(p.x() + track.half_width() * n.x());
    iy.push_back(p.y() + track.half_width() * n.y());
    ox.push_back(p.x() - track.half_width() * n.x());
    oy.push_back(p.y() - track.half_width() * n.y());
  }
  double x0 = *std::min_element(ox.begin(), ox.end()), x1 = *std::max_element(ox.begin(), ox.end());
  double y0 = *std::min_element(oy.begin(), oy.end()), y1 = *std::max_element(oy.begin(), oy.end());
  for (size_t i = 0; i < ix.size(); ++i) {
    x0 = std::min(x0, ix[i]);
    x1 = std::max(x1, ix[i]);
    y0 = std::min(y0, iy[i]);
    y1 = std::max(y1, iy[i]);
  }
  double vmax = 1e-9;
  for (const auto& r : log.steps) {
    x0 = std::min(x0, r.x(car::X));
    x1 = std::max(x1, r.x(car::X));
    y0 = std::min(y0, r.x(car::Y));
    y1 = std::max(y1, r.x(car::Y));
    vmax = std::max(vmax, r.x(car::VX));
  }
  // Equal aspect: stretch the shorter range.
  const double span = std::max(x1 - x0, y1 - y0) * 1.05;
  const double mx = 0.5 * (x0 + x1), my = 0.5 * (y0 + y1);
  Frame f;
  f.w = f.h = 560;
  f.x0 = mx - span / 2;
  f.x1 = mx + span / 2;
  f.y0 = my - span / 2;
  f.y1 = my + span / 2;
  svg_open(os, f.w, f.h);
  os << "<polyline fill=\"none\" stroke=\"#999999\" stroke-dasharray=\"4 3\" points=\""
     << polyline(f, cx, cy) << "\"/>\n";
  os << "<polyline fill=\"none\" stroke=\"black\" points=\"" << polyline(f, ix, iy) << "\"/>\n";
  os << "<polyline fill=\"none\" stroke=\"black\" points=\"" << polyline(f, ox, oy) << "\"/>\n";
  os << "<g stroke-width=\"2\">\n";
  for (size_t i = 0; i + 1 < log.steps.size(); ++i) {
    const Vec& a = log.steps[i].x;
    const Vec& b = log.steps[i + 1].x;
    os << "<line x1=\"" << g6(f.px(a(car::X))) << "\" y1=\"" << g6(f.py(a(car::Y))) << "\" x2=\""
       << g6(f.px(b(car::X))) << "\" y2=\"" << g6(f.py(b(car::Y))) << "\" stroke=\""
       << speed_color(a(car::VX) / vmax) << "\"/>\n";
  }
  os << "</g>\n";
  os << "<text x=\"10\" y=\"20\" font-family=\"sans-serif\" font-size=\"12\">" << log.controller
     << ", max speed " << g6(vmax) << " m/s (red)</text>\n";
  os << "</svg>\n";
  return true;
}

bool write_line_plot_svg(std::ostream& os, const std::string& title, const std::string& xlabel,
                         const std::string& ylabel, const std::vector<SvgSeries>& series) {
  bool any = false;
  Frame f;
  f.x0 = f.y0 = 1e300;
  f.x1 = f.y1 = -1e300;
  for (const auto& s : series) {
    for (size_t i = 0; i < s.x.size(); ++i) {
      any = true;
      f.x0 = std::min(f.x0, s.x[i]);
      f.x1 = std::max(f.x1, s.x[i]);
      f.y0 = std::min(f.y0, s.y[i]);
      f.y1 = std::max(f.y1, s.y[i]);
    }
  }
  if (!any) return false;
  f.y0 = std::min(f.y0, 0.0);
  f.y1 *= 1.05;
  pad_range(f.x0, f.x1);
  pad_range(f.y0, f.y1);
  f.w = 720;
  svg_open(os, f.w, f.h);
  for (size_t k = 0; k < series.size(); ++k) {
    const char* c = kPalette[k % (sizeof kPalette / sizeof *kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\""
       << polyline(f, series[k].x, series[k].y) << "\"/>\n";
    for (size_t i = 0; i < series[k].x.size(); ++i)
      os << "<circle cx=\"" << g6(f.px(series[k].x[i])) << "\" cy=\"" << g6(f.py(series[k].y[i]))
         << "\" r=\"2.5\" fill=\"" << c << "\"/>\n";
    os << "<text x=\"" << g6(f.m + 8) << "\" y=\"" << g6(f.m + 14 * (k + 1))
       << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << c << "\">" << series[k].label
       << "</text>\n";
  }
  axes(os, f, xlabel, ylabel);
  os << "<text x=\"" << g6(f.w / 2) << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\" "
     << "text-anchor=\"middle\">" << title << "</text>\n</svg>\n";
  return true;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
  out.close();
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace resmpc
