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

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "resmpc/sim.hpp"
#include "resmpc/track.hpp"

namespace resmpc {

/// Per-step CSV. Metadata rides on leading '#' lines; an empty log yields
/// the metadata and the header only.
void write_log_csv(std::ostream& os, const RunLog& log);
RunLog read_log_csv(std::istream& is);
RunLog read_log_csv_file(const std::string& path);

/// Aggregates of RunLog::summary() plus identification fields.
nlohmann::json summary_json(const RunLog& log);

/// Constraint-zone timeline: signed distance against time with the soft and
/// hard bands shaded. Returns false (and writes nothing) for an empty log.
bool write_zone_svg(std::ostream& os, const RunLog& log);

/// Track outline and driven path, colored by forward speed.
bool write_trajectory_svg(std::ostream& os, const RunLog& log, const TrackModel& track);

/// One polyline per named series; x and y share a single axis pair.
struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
};
bool write_line_plot_svg(std::ostream& os, const std::string& title, const std::string& xlabel,
                         const std::string& ylabel, const std::vector<SvgSeries>& series);

/// Throws std::runtime_error naming the path if the file cannot be written.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace resmpc
