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

// Model assembly for the three training variants:
//   vanilla  K-way softmax classifier
//   cost     K+1 outputs, the last one meaning "reject"
//   cov      K-way prediction head + selection head + auxiliary head

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "ncwr/autodiff.hpp"
#include "ncwr/cost.hpp"
#include "ncwr/coverage.hpp"
#include "ncwr/error.hpp"
#include "ncwr/graph.hpp"
#include "ncwr/layers.hpp"
#include "ncwr/ops.hpp"

namespace ncwr {

enum class Variant { Vanilla, Cost, Cov };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::Vanilla: return "vanilla";
    case Variant::Cost: return "cost";
    case Variant::Cov: return "cov";
  }
  return "?";
}

inline Variant variant_from_string(const std::string& s) {
  if (s == "vanilla") return Variant::Vanilla;
  if (s == "cost") return Variant::Cost;
  if (s == "cov") return Variant::Cov;
  throw ParameterError("unknown variant '" + s + "'");
}

/// How the auxiliary head is wired in the cov variant.
enum class AuxHead {
  Separate,  // its own affine+softmax over the hidden representation
  Shared,    // reuses the prediction head's softmax
};

struct TrainConfig {
  Variant variant = Variant::Vanilla;
  double learning_rate = 0.005;
  double weight_decay = 5e-4;
  int max_epochs = 3000;
  int patience = 100;
  std::uint64_t seed = 0;
  /// Rejection cost; present iff variant == Cost.
  std::optional<double> rejection_cost;
  /// Coverage objective; present iff variant == Cov.
  std::optional<CoverageObjectiveConfig> coverage;
  AuxHead aux_head = AuxHead::Separate;
  SelectionHeadConfig selection;
  /// in_features / out_features are filled from the graph by prepare().
  EncoderConfig encoder;
  /// Where to write the best checkpoint; empty means keep it in memory only.
  std::string checkpoint_path;

  void validate() const {
    if (patience < 1) throw ParameterError("patience must be >= 1");
    if (!(learning_rate > 0.0)) throw ParameterError("learning_rate must be > 0");
    if (weight_decay < 0.0) throw ParameterError("weight_decay must be >= 0");
    if (max_epochs < 1) throw ParameterError("max_epochs must be >= 1");
    const bool has_d = rejection_cost.has_value(), has_c = coverage.has_value();
    switch (variant) {
      case Variant::Vanilla:
        if (has_d || has_c) throw ParameterError("vanilla variant takes neither d nor a coverage block");
        break;
      case Variant::Cost:
        if (!has_d || has_c) throw ParameterError("cost variant needs d and no coverage block");
        RejectionCost{*rejection_cost};
        break;
      case Variant::Cov:
        if (!has_c || has_d) throw ParameterError("cov variant needs a coverage block and no d");
        coverage->validate();
        break;
    }
  }

  /// Copy with encoder widths resolved against `g`.
  TrainConfig prepare(const Graph& g) const {
    TrainConfig c = *this;
    c.encoder.in_features = g.num_features();
    c.encoder.out_features = g.num_classes() + (variant == Variant::Cost ? 1 : 0);
    c.selection.in_features = c.encoder.hidden_width();
    c.validate();
    c.encoder.validate();
    return c;
  }
};

struct ForwardResult {
  Var logits;       // [n x K] or [n x K+1]
  Var penultimate;  // [n x hidden]
  Var selection;    // cov only: [n x 1]
  Var aux_logits;   // cov only: [n x K]
};

class Model {
 public:
  Model() = default;

  /// `cfg` must already be prepared for the graph.
  Model(const TrainConfig& cfg, int num_classes, Rng& rng) : cfg_(cfg), num_classes_(num_classes) {
    init_encoder(params_, cfg.encoder, rng);
    if (cfg.variant == Variant::Cov) {
      init_selection_head(params_, cfg.selection, rng);
      if (cfg.aux_head == AuxHead::Separate)
        init_auxiliary_head(params_, cfg.encoder.hidden_width(), num_classes, rng);
    }
  }

  ForwardResult forward(Tape& t, const Graph& g, bool train, Rng& rng) {
    auto enc = encoder_forward(g, t, cfg_.encoder, params_, train, rng);
    ForwardResult r{enc.pre_logits, enc.penultimate, {}, {}};
    if (cfg_.variant == Variant::Cov) {
      r.selection = selection_head_forward(enc.penultimate, params_, cfg_.selection, train);
      r.aux_logits = cfg_.aux_head == AuxHead::Separate ? auxiliary_head_forward(enc.penultimate, params_)
                                                        : enc.pre_logits;
    }
    return r;
  }

  /// Training objective of this model's variant over nodes `idx`.
  Var loss(const ForwardResult& r, std::span<const NodeId> idx, std::span<const int> y) const {
    switch (cfg_.variant) {
      case Variant::Vanilla:
        return ops::mean(nll_rows(r.logits, idx, y));
      case Variant::Cost:
        return cost_loss(r.logits, idx, y, RejectionCost(*cfg_.rejection_cost));
      case Variant::Cov:
        return combined_objective(r.logits, r.selection, r.aux_logits, idx, y, *cfg_.coverage);
    }
    throw ContractError("unknown variant");
  }

  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }
  const TrainConfig& config() const noexcept { return cfg_; }
  int num_classes() const noexcept { return num_classes_; }

 private:
  TrainConfig cfg_;
  int num_classes_ = 0;
  ParameterSet params_;
};

/// Eval-mode outputs of a model over every node.
struct Inference {
  Matrix probs;        // softmax of logits ([n x K] or [n x K+1])
  Matrix penultimate;  // [n x hidden]
  std::vector<double> selection;  // cov only
};

inline Inference infer(Model& model, const Graph& g) {
  Tape t;
  Rng unused(0);
  auto r = model.forward(t, g, false, unused);
  Inference out;
  out.probs = ops::detail::softmax_rows(r.logits.value());
  out.penultimate = r.penultimate.value();
  if (r.selection.valid()) {
    const Matrix& s = r.selection.value();
    out.selection.assign(s.data(), s.data() + s.size());
  }
  return out;
}

}  // namespace ncwr
