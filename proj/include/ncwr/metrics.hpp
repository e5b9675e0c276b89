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

#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "ncwr/decision.hpp"
#include "ncwr/error.hpp"

namespace ncwr {

/// Reject-option metrics over a test set. The 0-d-1 risk charges d per
/// rejection, 1 per accepted mistake and 0 per accepted hit.
struct RejectMetrics {
  double coverage = 0.0;
  /// Absent when every node was rejected.
  std::optional<double> selective_accuracy;
  double zero_d_one_risk = 0.0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t correct = 0;
};

inline RejectMetrics compute_metrics(std::span<const Decision> decisions, std::span<const int> labels, double d) {
  if (decisions.size() != labels.size())
    throw ContractError("compute_metrics: " + std::to_string(decisions.size()) + " decisions for " +
                        std::to_string(labels.size()) + " labels");
  if (decisions.empty()) throw ContractError("compute_metrics: empty test set");
  RejectMetrics m;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    if (decisions[i].rejected()) {
      ++m.rejected;
    } else {
      ++m.accepted;
      if (decisions[i].cls() == labels[i]) ++m.correct;
    }
  }
  const auto n = static_cast<double>(decisions.size());
  m.coverage = static_cast<double>(m.accepted) / n;
  if (m.accepted > 0) m.selective_accuracy = static_cast<double>(m.correct) / static_cast<double>(m.accepted);
  m.zero_d_one_risk = (d * static_cast<double>(m.rejected) + static_cast<double>(m.accepted - m.correct)) / n;
  return m;
}

/// (1 - coverage) * d + coverage * (1 - selective_accuracy); equals the
/// 0-d-1 risk up to rounding.
inline double zero_d_one_from_rates(const RejectMetrics& m, double d) {
  return (1.0 - m.coverage) * d + m.coverage * (1.0 - m.selective_accuracy.value_or(0.0));
}

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample (n-1) deviation; 0 for a single value
  std::size_t count = 0;
};

inline MeanStd mean_std(std::span<const double> xs) {
  MeanStd r;
  r.count = xs.size();
  if (xs.empty()) return r;
  double s = 0.0;
  for (double x : xs) s += x;
  r.mean = s / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return r;
}

}  // namespace ncwr
