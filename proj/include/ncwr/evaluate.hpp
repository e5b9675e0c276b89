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

// Turning model outputs into per-node decisions under each rejection rule.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ncwr/baselines.hpp"
#include "ncwr/cost.hpp"
#include "ncwr/coverage.hpp"
#include "ncwr/decision.hpp"
#include "ncwr/graph.hpp"
#include "ncwr/model.hpp"

namespace ncwr {

/// Rejection rule applied at evaluation time.
enum class RuleKind { Argmax, Cost, Coverage, SoftmaxResponse, Conformal };

struct RejectRule {
  RuleKind kind = RuleKind::Argmax;
  double tau = 0.5;        // Coverage
  double threshold = 0.5;  // SoftmaxResponse
  std::optional<ConformalCalibration> conformal;
};

/// Decisions for `idx`. Conformal rules must carry a calibration.
inline std::vector<Decision> decide(const Inference& inf, std::span<const NodeId> idx, const RejectRule& rule) {
  std::vector<Decision> out;
  out.reserve(idx.size());
  switch (rule.kind) {
    case RuleKind::Argmax:
      for (NodeId i : idx) out.push_back(Decision::predict(argmax_lowest(inf.probs.row(i))));
      return out;
    case RuleKind::Cost:
      return cost_predict(inf.probs, idx);
    case RuleKind::Coverage:
      if (inf.selection.empty()) throw ContractError("coverage rule needs selection scores");
      for (NodeId i : idx) out.push_back(cov_predict(RowVector(inf.probs.row(i)), inf.selection[i], rule.tau));
      return out;
    case RuleKind::SoftmaxResponse:
      return softmax_response_reject(inf.probs, idx, rule.threshold);
    case RuleKind::Conformal:
      if (!rule.conformal) throw ContractError("conformal rule needs a calibration");
      return conformal_reject(inf.probs, idx, *rule.conformal);
  }
  return out;
}

/// Calibrates a conformal rule on the rows of `cal_idx`.
inline RejectRule conformal_rule(const Inference& inf, const Graph& g, std::span<const NodeId> cal_idx,
                                 double alpha, ScoreKind kind) {
  Matrix cal(static_cast<Index>(cal_idx.size()), inf.probs.cols());
  for (std::size_t k = 0; k < cal_idx.size(); ++k) cal.row(static_cast<Index>(k)) = inf.probs.row(cal_idx[k]);
  RejectRule r;
  r.kind = RuleKind::Conformal;
  r.conformal = conformal_calibrate(cal, labels_of(g, cal_idx), alpha, kind);
  return r;
}

/// Default rule for a trained variant (tau taken from calibration).
inline RejectRule default_rule(Variant v, std::optional<double> tau) {
  RejectRule r;
  switch (v) {
    case Variant::Vanilla: r.kind = RuleKind::Argmax; break;
    case Variant::Cost: r.kind = RuleKind::Cost; break;
    case Variant::Cov:
      r.kind = RuleKind::Coverage;
      r.tau = tau.value_or(0.5);
      break;
  }
  return r;
}

}  // namespace ncwr
