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

// JSON form of the training configuration. Every key is optional when
// reading; missing keys keep their defaults.

#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "ncwr/error.hpp"
#include "ncwr/layers.hpp"
#include "ncwr/model.hpp"

namespace ncwr {

inline nlohmann::json to_json(const EncoderConfig& e) {
  return {{"layer_kind", to_string(e.layer_kind)},
          {"num_layers", e.num_layers},
          {"in_features", e.in_features},
          {"out_features", e.out_features},
          {"hidden_heads", e.hidden_heads},
          {"hidden_features", e.hidden_features},
          {"output_heads", e.output_heads},
          {"input_dropout", e.input_dropout},
          {"hidden_dropout", e.hidden_dropout},
          {"attention_slope", e.attention_slope},
          {"attention_dropout", e.attention_dropout}};
}

inline EncoderConfig encoder_from_json(const nlohmann::json& j, EncoderConfig e = {}) {
  if (j.contains("layer_kind")) e.layer_kind = layer_kind_from_string(j.at("layer_kind").get<std::string>());
  e.num_layers = j.value("num_layers", e.num_layers);
  e.in_features = j.value("in_features", e.in_features);
  e.out_features = j.value("out_features", e.out_features);
  e.hidden_heads = j.value("hidden_heads", e.hidden_heads);
  e.hidden_features = j.value("hidden_features", e.hidden_features);
  e.output_heads = j.value("output_heads", e.output_heads);
  e.input_dropout = j.value("input_dropout", e.input_dropout);
  e.hidden_dropout = j.value("hidden_dropout", e.hidden_dropout);
  e.attention_slope = j.value("attention_slope", e.attention_slope);
  e.attention_dropout = j.value("attention_dropout", e.attention_dropout);
  return e;
}

inline nlohmann::json to_json(const TrainConfig& c) {
  nlohmann::json j = {{"variant", to_string(c.variant)},
                      {"learning_rate", c.learning_rate},
                      {"weight_decay", c.weight_decay},
                      {"max_epochs", c.max_epochs},
                      {"patience", c.patience},
                      {"seed", c.seed},
                      {"aux_head", c.aux_head == AuxHead::Separate ? "separate" : "shared"},
                      {"selection", {{"in_features", c.selection.in_features},
                                     {"hidden", c.selection.hidden},
                                     {"bn_momentum", c.selection.bn_momentum}}},
                      {"encoder", to_json(c.encoder)},
                      {"checkpoint_path", c.checkpoint_path}};
  if (c.rejection_cost) j["d"] = *c.rejection_cost;
  if (c.coverage)
    j["coverage"] = {{"target", c.coverage->target_coverage},
                     {"lambda", c.coverage->penalty_weight},
                     {"alpha", c.coverage->mix},
                     {"tau", c.coverage->threshold}};
  return j;
}

/// Reads a config; variant blocks are filled with defaults when the variant
/// needs them and they are absent.
inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c = {}) {
  if (j.contains("variant")) c.variant = variant_from_string(j.at("variant").get<std::string>());
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.seed = j.value("seed", c.seed);
  c.checkpoint_path = j.value("checkpoint_path", c.checkpoint_path);
  if (j.contains("aux_head")) {
    const auto s = j.at("aux_head").get<std::string>();
    if (s != "separate" && s != "shared") throw ParameterError("aux_head must be 'separate' or 'shared'");
    c.aux_head = s == "separate" ? AuxHead::Separate : AuxHead::Shared;
  }
  if (j.contains("selection")) {
    const auto& s = j.at("selection");
    c.selection.in_features = s.value("in_features", c.selection.in_features);
    c.selection.hidden = s.value("hidden", c.selection.hidden);
    c.selection.bn_momentum = s.value("bn_momentum", c.selection.bn_momentum);
  }
  if (j.contains("encoder")) c.encoder = encoder_from_json(j.at("encoder"), c.encoder);
  if (j.contains("d")) c.rejection_cost = j.at("d").get<double>();
  if (j.contains("coverage")) {
    const auto& cj = j.at("coverage");
    CoverageObjectiveConfig cov = c.coverage.value_or(CoverageObjectiveConfig{});
    cov.target_coverage = cj.value("target", cov.target_coverage);
    cov.penalty_weight = cj.value("lambda", cov.penalty_weight);
    cov.mix = cj.value("alpha", cov.mix);
    cov.threshold = cj.value("tau", cov.threshold);
    c.coverage = cov;
  }
  if (c.variant != Variant::Cost) c.rejection_cost.reset();
  if (c.variant != Variant::Cov) c.coverage.reset();
  if (c.variant == Variant::Cost && !c.rejection_cost) c.rejection_cost = 0.5;
  if (c.variant == Variant::Cov && !c.coverage) c.coverage = CoverageObjectiveConfig{};
  return c;
}

}  // namespace ncwr
