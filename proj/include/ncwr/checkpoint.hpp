/*
 * Copyright (c) 2026, The ncwr Authors.
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

// Checkpoints are JSON documents of named tensors. Doubles are written with
// round-trip precision, so load(save(x)) == x on one platform.

#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "ncwr/autodiff.hpp"
#include "ncwr/config.hpp"
#include "ncwr/error.hpp"
#include "ncwr/model.hpp"

namespace ncwr {

inline nlohmann::json tensors_to_json(const ParameterSet& ps) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : ps.items()) {
    std::vector<double> values(p.value.data(), p.value.data() + p.value.size());
    arr.push_back({{"name", p.name},
                   {"rows", p.value.rows()},
                   {"cols", p.value.cols()},
                   {"trainable", p.trainable},
                   {"values", values}});
  }
  return arr;
}

inline ParameterSet tensors_from_json(const nlohmann::json& arr) {
  ParameterSet ps;
  for (const auto& t : arr) {
    const auto rows = t.at("rows").get<Index>(), cols = t.at("cols").get<Index>();
    const auto values = t.at("values").get<std::vector<double>>();
    if (static_cast<Index>(values.size()) != rows * cols)
      throw DimensionError("checkpoint tensor '" + t.at("name").get<std::string>() + "' has wrong size");
    Matrix m(rows, cols);
    std::copy(values.begin(), values.end(), m.data());
    ps.add(t.at("name").get<std::string>(), std::move(m), t.value("trainable", true));
  }
  return ps;
}

/// Overwrites values of `dst` with same-named tensors from `src`.
inline void load_values(ParameterSet& dst, const ParameterSet& src) {
  for (auto& p : dst.items()) {
    const auto& s = src.at(p.name);
    if (s.value.rows() != p.value.rows() || s.value.cols() != p.value.cols())
      throw DimensionError("checkpoint shape mismatch for '" + p.name + "'");
    p.value = s.value;
  }
}

struct Checkpoint {
  TrainConfig config;  // prepared config the model was built with
  int num_classes = 0;
  std::optional<double> tau;
  ParameterSet params;
};

inline nlohmann::json checkpoint_to_json(const Checkpoint& c) {
  nlohmann::json j = {{"format", "ncwr-checkpoint"},
                      {"version", 1},
                      {"config", to_json(c.config)},
                      {"num_classes", c.num_classes},
                      {"tensors", tensors_to_json(c.params)}};
  if (c.tau) j["tau"] = *c.tau;
  return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "ncwr-checkpoint") throw DataError("not an ncwr checkpoint");
  Checkpoint c;
  c.config = train_config_from_json(j.at("config"));
  c.num_classes = j.at("num_classes").get<int>();
  if (j.contains("tau")) c.tau = j.at("tau").get<double>();
  c.params = tensors_from_json(j.at("tensors"));
  return c;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << checkpoint_to_json(c).dump();
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return checkpoint_from_json(nlohmann::json::parse(in));
}

/// Rebuilds a model with the checkpoint's architecture and weights.
inline Model model_from_checkpoint(const Checkpoint& c) {
  Rng rng(0);
  Model m(c.config, c.num_classes, rng);
  load_values(m.params(), c.params);
  return m;
}

}  // namespace ncwr
