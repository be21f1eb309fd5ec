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

#include "resmpc/scenario_file.hpp"

#include <fstream>

namespace resmpc {

Table::Table(const nlohmann::json& node, std::string path)
    : empty_(std::make_shared<nlohmann::json>(nlohmann::json::object())),
      node_(&node),
      path_(std::move(path)) {
  if (node_->is_null()) node_ = empty_.get();
  if (!node_->is_object()) throw ScenarioError(path_ + ": expected an object");
}

nlohmann::json Table::parse_file(const std::string& file) {
  std::ifstream is(file);
  if (!is) throw ScenarioError("cannot open scenario file '" + file + "'");
  try {
    return nlohmann::json::parse(is, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError(file + ": " + e.what());
  }
}

bool Table::has(const std::string& key) const { return node_->contains(key); }

const nlohmann::json& Table::get(const std::string& key) {
  seen_.insert(key);
  if (!node_->contains(key)) throw ScenarioError(path_ + "." + key + ": missing");
  return node_->at(key);
}

double Table::number(const std::string& key) {
  const auto& v = get(key);
  if (!v.is_number()) throw ScenarioError(path_ + "." + key + ": expected a number");
  return v.get<double>();
}

double Table::number(const std::string& key, double fallback) {
  seen_.insert(key);
  return has(key) ? number(key) : fallback;
}

int Table::integer(const std::string& key) {
  const auto& v = get(key);
  if (!v.is_number_integer()) throw ScenarioError(path_ + "." + key + ": expected an integer");
  return v.get<int>();
}

int Table::integer(const std::string& key, int fallback) {
  seen_.insert(key);
  return has(key) ? integer(key) : fallback;
}

bool Table::boolean(const std::string& key, bool fallback) {
  seen_.insert(key);
  if (!has(key)) return fallback;
  const auto& v = get(key);
  if (!v.is_boolean()) throw ScenarioError(path_ + "." + key + ": expected true or false");
  return v.get<bool>();
}

std::string Table::string(const std::string& key) {
  const auto& v = get(key);
  if (!v.is_string()) throw ScenarioError(path_ + "." + key + ": expected a string");
  return v.get<std::string>();
}

std::string Table::string(const std::string& key, const std::string& fallback) {
  seen_.insert(key);
  return has(key) ? string(key) : fallback;
}

Vec Table::vector(const std::string& key) {
  const auto& v = get(key);
  if (!v.is_array()) throw ScenarioError(path_ + "." + key + ": expected an array of numbers");
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ScenarioError(path_ + "." + key + ": expected numbers");
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

Vec Table::vector(const std::string& key, const Vec& fallback) {
  seen_.insert(key);
  return has(key) ? vector(key) : fallback;
}

std::vector<int> Table::int_list(const std::string& key, const std::vector<int>& fallback) {
  seen_.insert(key);
  if (!has(key)) return fallback;
  const auto& v = get(key);
  if (!v.is_array()) throw ScenarioError(path_ + "." + key + ": expected an array of integers");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) throw ScenarioError(path_ + "." + key + ": expected integers");
    out.push_back(e.get<int>());
  }
  return out;
}

std::vector<std::string> Table::string_list(const std::string& key,
                                            const std::vector<std::string>& fallback) {
  seen_.insert(key);
  if (!has(key)) return fallback;
  const auto& v = get(key);
  if (!v.is_array()) throw ScenarioError(path_ + "." + key + ": expected an array of strings");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw ScenarioError(path_ + "." + key + ": expected strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

Table Table::table(const std::string& key) {
  seen_.insert(key);
  static const nlohmann::json kAbsent;
  if (!has(key)) return Table(kAbsent, path_ + "." + key);
  return Table(node_->at(key), path_ + "." + key);
}

std::vector<std::pair<std::string, double>> Table::number_map(const std::string& key) {
  seen_.insert(key);
  std::vector<std::pair<std::string, double>> out;
  if (!has(key)) return out;
  const auto& v = node_->at(key);
  if (!v.is_object()) throw ScenarioError(path_ + "." + key + ": expected an object");
  for (auto it = v.begin(); it != v.end(); ++it) {
    if (!it.value().is_number())
      throw ScenarioError(path_ + "." + key + "." + it.key() + ": expected a number");
    out.emplace_back(it.key(), it.value().get<double>());
  }
  return out;
}

void Table::finish() const {
  std::string unknown;
  for (auto it = node_->begin(); it != node_->end(); ++it)
    if (!seen_.count(it.key())) unknown += (unknown.empty() ? "" : ", ") + it.key();
  if (!unknown.empty()) throw ScenarioError(path_ + ": unknown key(s) " + unknown);
}

}  // namespace resmpc
