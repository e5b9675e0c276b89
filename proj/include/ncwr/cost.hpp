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

// Cost-based abstention: rejection is an extra (K+1)-th output trained with
//   l(f(h), y) = -log f_y(h) - (1 - d) log f_{K+1}(h).

#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <span>
#include <string>
#include <vector>

#include "ncwr/autodiff.hpp"
#include "ncwr/decision.hpp"
#include "ncwr/error.hpp"
#include "ncwr/graph.hpp"
#include "ncwr/ops.hpp"

namespace ncwr {

/// Probabilities are clamped to this floor before any log.
inline constexpr double kProbFloor = 1e-12;

/// Cost of abstaining, 0 < d <= 1.
class RejectionCost {
 public:
  explicit RejectionCost(double d) : d_(d) {
    if (!(d > 0.0 && d <= 1.0)) throw ParameterError("rejection cost d must be in (0, 1], got " + std::to_string(d));
  }
  double value() const noexcept { return d_; }

  /// With d >= (K-1)/K abstaining never beats guessing under 0-d-1 loss.
  bool rejection_dominated(int num_classes) const {
    return d_ >= static_cast<double>(num_classes - 1) / static_cast<double>(num_classes);
  }

  /// Prints a warning to `os` when rejection_dominated() holds.
  void warn_if_dominated(int num_classes, std::ostream& os = std::cerr) const {
    if (rejection_dominated(num_classes))
      os << "warning: d=" << d_ << " >= (K-1)/K=" << static_cast<double>(num_classes - 1) / num_classes
         << "; rejection is never preferable for K=" << num_classes << "\n";
  }

 private:
  double d_;
};

/// Mean cost loss over rows of `probs` ([m x (K+1)], last column = reject)
/// with labels `y` in [0, K).
inline double cost_loss(const Matrix& probs, std::span<const int> y, RejectionCost d) {
  if (static_cast<Index>(y.size()) != probs.rows()) throw DimensionError("cost_loss: label count != rows");
  if (probs.rows() == 0) throw ContractError("cost_loss: empty training set");
  const Index reject = probs.cols() - 1;
  double total = 0.0;
  for (Index i = 0; i < probs.rows(); ++i) {
    if (y[i] == reject) throw ContractError("cost_loss: rejection label in training data");
    if (y[i] < 0 || y[i] > reject) throw ContractError("cost_loss: label out of range");
    total += -std::log(std::max(probs(i, y[i]), kProbFloor)) -
             (1.0 - d.value()) * std::log(std::max(probs(i, reject), kProbFloor));
  }
  return total / static_cast<double>(probs.rows());
}

/// Differentiable cost loss from pre-softmax logits [n x (K+1)] restricted
/// to the rows in `idx`.
inline Var cost_loss(const Var& logits, std::span<const NodeId> idx, std::span<const int> y, RejectionCost d) {
  if (idx.size() != y.size()) throw DimensionError("cost_loss: label count != index count");
  if (idx.empty()) throw ContractError("cost_loss: empty training set");
  const int reject = static_cast<int>(logits.cols()) - 1;
  for (int label : y) {
    if (label == reject) throw ContractError("cost_loss: rejection label in training data");
    if (label < 0 || label > reject) throw ContractError("cost_loss: label out of range");
  }
  Var logp = ops::clamp(ops::row_log_softmax(ops::gather_rows(logits, idx)), std::log(kProbFloor), 0.0);
  std::vector<int> reject_col(idx.size(), reject);
  Var per_node = ops::add(ops::pick(logp, y), ops::scale(ops::pick(logp, reject_col), 1.0 - d.value()));
  return ops::scale(ops::mean(per_node), -1.0);
}

/// Argmax over K+1 outputs; the last index means REJECT. Ties go to the
/// lowest index, so REJECT wins only when strictly largest.
inline Decision cost_predict(const RowVector& probs) {
  const int k = argmax_lowest(probs);
  return k == probs.size() - 1 ? Decision::reject() : Decision::predict(k);
}

inline std::vector<Decision> cost_predict(const Matrix& probs, std::span<const NodeId> idx) {
  std::vector<Decision> out;
  out.reserve(idx.size());
  for (NodeId i : idx) out.push_back(cost_predict(RowVector(probs.row(i))));
  return out;
}

}  // namespace ncwr
