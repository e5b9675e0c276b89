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

// Full-graph training with Adam and validation-loss early stopping.

#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncwr/checkpoint.hpp"
#include "ncwr/config.hpp"
#include "ncwr/coverage.hpp"
#include "ncwr/error.hpp"
#include "ncwr/graph.hpp"
#include "ncwr/model.hpp"
#include "ncwr/optim.hpp"

namespace ncwr {

/// Everything needed to reproduce evaluation of a finished run.
struct RunManifest {
  TrainConfig config;  // resolved against the graph
  std::uint64_t seed = 0;
  int epochs_run = 0;
  int best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::optional<double> tau;
  std::string checkpoint_path;
  double wallclock_s = 0.0;
};

inline nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json j = {{"config", to_json(m.config)},
                      {"seed", m.seed},
                      {"epochs_run", m.epochs_run},
                      {"best_epoch", m.best_epoch},
                      {"best_val_loss", m.best_val_loss},
                      {"checkpoint_path", m.checkpoint_path},
                      {"wallclock_s", m.wallclock_s},
                      {"assumptions",
                       {{"optimizer", "adam(beta1=0.9, beta2=0.999, eps=1e-8)"},
                        {"weight_decay", "L2 term added to the gradient"},
                        {"early_stopping", "validation loss of the training objective"}}}};
  if (m.tau) j["tau"] = *m.tau;
  return j;
}

struct TrainResult {
  RunManifest manifest;
  Model model;  // holds the best-validation parameters
  std::vector<double> train_loss;
  std::vector<double> val_loss;
};

/// Called after each epoch with (epoch, train loss, validation loss).
using EpochCallback = std::function<void(int, double, double)>;

inline TrainResult train(const Graph& g, const SplitSpec& split, const TrainConfig& raw_cfg,
                         const EpochCallback& on_epoch = {}) {
  const auto start = std::chrono::steady_clock::now();
  check_split(g, split);
  if (split.train_idx.empty() || split.val_idx.empty())
    throw ContractError("training needs non-empty train and validation splits");
  const TrainConfig cfg = raw_cfg.prepare(g);
  if (cfg.variant == Variant::Cost) RejectionCost(*cfg.rejection_cost).warn_if_dominated(g.num_classes());

  Rng rng(cfg.seed);
  TrainResult res;
  res.model = Model(cfg, g.num_classes(), rng);
  Model& model = res.model;
  const auto y_train = labels_of(g, split.train_idx);
  const auto y_val = labels_of(g, split.val_idx);

  AdamState adam;
  ParameterSet best = model.params();
  int best_epoch = 0;
  double best_val = std::numeric_limits<double>::infinity();
  int epoch = 0;
  for (epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double train_loss = 0.0;
    try {
      Tape t;
      auto out = model.forward(t, g, true, rng);
      Var loss = model.loss(out, split.train_idx, y_train);
      train_loss = loss.item();
      model.params().zero_grad();
      t.backward(loss);
    } catch (const NumericFault& e) {
      throw NumericFault("epoch " + std::to_string(epoch) + " (training loss): " + e.what());
    }
    adam_step(model.params(), adam, cfg.learning_rate, cfg.weight_decay);
    for (const auto& p : model.params().items())
      if (!p.value.allFinite())
        throw NumericFault("epoch " + std::to_string(epoch) + ": parameter '" + p.name + "' became non-finite");

    double val_loss = 0.0;
    try {
      Tape t;
      auto out = model.forward(t, g, false, rng);
      val_loss = model.loss(out, split.val_idx, y_val).item();
    } catch (const NumericFault& e) {
      throw NumericFault("epoch " + std::to_string(epoch) + " (validation loss): " + e.what());
    }
    res.train_loss.push_back(train_loss);
    res.val_loss.push_back(val_loss);
    if (on_epoch) on_epoch(epoch, train_loss, val_loss);

    if (val_loss < best_val) {
      best_val = val_loss;
      best_epoch = epoch;
      best = model.params();
    } else if (epoch - best_epoch >= cfg.patience) {
      break;
    }
  }
  model.params() = best;

  RunManifest& m = res.manifest;
  m.config = cfg;
  m.seed = cfg.seed;
  m.epochs_run = std::min(epoch, cfg.max_epochs);
  m.best_epoch = best_epoch;
  m.best_val_loss = best_val;
  if (cfg.variant == Variant::Cov) {
    const auto inf = infer(model, g);
    std::vector<double> val_scores;
    for (NodeId i : split.val_idx) val_scores.push_back(inf.selection[i]);
    m.tau = calibrate_threshold(val_scores, cfg.coverage->target_coverage);
  }
  if (!cfg.checkpoint_path.empty()) {
    save_checkpoint(cfg.checkpoint_path, Checkpoint{cfg, g.num_classes(), m.tau, model.params()});
    m.checkpoint_path = cfg.checkpoint_path;
  }
  m.wallclock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace ncwr
