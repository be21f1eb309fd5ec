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

#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "resmpc/types.hpp"

namespace resmpc {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Read-only view of one JSON object that records the keys it handed out.
/// finish() rejects every key that was never read, so typos fail loudly.
class Table {
 public:
  Table(const nlohmann::json& node, std::string path);

  static nlohmann::json parse_file(const std::string& file);

  const std::string& path() const { return path_; }
  bool has(const std::string& key) const;

  double number(const std::string& key);
  double number(const std::string& key, double fallback);
  int integer(const std::string& key);
  int integer(const std::string& key, int fallback);
  bool boolean(const std::string& key, bool fallback);
  std::string string(const std::string& key);
  std::string string(const std::string& key, const std::string& fallback);
  Vec vector(const std::string& key);
  Vec vector(const std::string& key, const Vec& fallback);
  std::vector<int> int_list(const std::string& key, const std::vector<int>& fallback);
  std::vector<std::string> string_list(const std::string& key,
                                       const std::vector<std::string>& fallback);
  /// Object member; absent members yield an empty table.
  Table table(const std::string& key);
  /// All entries of a flat object of numbers.
  std::vector<std::pair<std::string, double>> number_map(const std::string& key);

  /// Throws ScenarioError listing unread keys.
  void finish() const;

 private:
  const nlohmann::json& get(const std::string& key);

  std::shared_ptr<const nlohmann::json> empty_;
  const nlohmann::json* node_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace resmpc
