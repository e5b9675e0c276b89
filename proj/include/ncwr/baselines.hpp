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

// Reject-option baselines over a plain K-class model: Softmax Response and
// split-conformal prediction sets (multi-label or empty set => REJECT).

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ncwr/decision.hpp"
#include "ncwr/error.hpp"
#include "ncwr/graph.hpp"

namespace ncwr {

/// REJECT iff max_k p_k <= t; otherwise argmax.
inline Decision softmax_response_reject(const RowVector& probs, double threshold) {
  const int k = argmax_lowest(probs);
  if (probs(k) <= threshold) return Decision::reject();
  return Decision::predict(k);
}

inline std::vector<Decision> softmax_response_reject(const Matrix& probs, std::span<const NodeId> idx,
                                                     double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw ParameterError("softmax-response threshold must be in (0, 1), got " + std::to_string(threshold));
  std::vector<Decision> out;
  out.reserve(idx.size());
  for (NodeId i : idx) out.push_back(softmax_response_reject(RowVector(probs.row(i)), threshold));
  return out;
}

enum class ScoreKind { Tps, Aps };

inline const char* to_string(ScoreKind k) { return k == ScoreKind::Tps ? "tps" : "aps"; }
inline ScoreKind score_kind_from_string(const std::string& s) {
  if (s == "tps" || s == "TPS") return ScoreKind::Tps;
  if (s == "aps" || s == "APS") return ScoreKind::Aps;
  throw ParameterError("unknown conformal score '" + s + "'");
}

/// Nonconformity of label y for one probability row.
///  TPS: 1 - p_y.
///  APS: total mass of labels ranked at or above y (descending probability,
///       lower index first on ties); no randomization.
inline double conformal_score(const RowVector& probs, int y, ScoreKind kind) {
  if (kind == ScoreKind::Tps) return 1.0 - probs(y);
  double mass = 0.0;
  for (Index k = 0; k < probs.size(); ++k) {
    const bool ranked_before = probs(k) > probs(y) || (probs(k) == probs(y) && k < y);
    if (ranked_before) mass += probs(k);
  }
  return mass + probs(y);
}

struct ConformalCalibration {
  double alpha = 0.1;
  double qhat = 0.0;
  ScoreKind score_kind = ScoreKind::Aps;
  std::size_t calibration_size = 0;
};

/// Split-conformal quantile: the ceil((m+1)(1-alpha))-th smallest calibration
/// score.
inline ConformalCalibration conformal_calibrate(const Matrix& cal_probs, std::span<const int> cal_labels,
                                                double alpha, ScoreKind kind) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must be in (0, 1), got " + std::to_string(alpha));
  if (static_cast<Index>(cal_labels.size()) != cal_probs.rows())
    throw DimensionError("conformal_calibrate: label count != rows");
  const auto m = cal_labels.size();
  if (m == 0) throw CalibrationError("empty calibration set");
  std::vector<double> scores(m);
  for (std::size_t i = 0; i < m; ++i)
    scores[i] = conformal_score(RowVector(cal_probs.row(static_cast<Index>(i))), cal_labels[i], kind);
  std::sort(scores.begin(), scores.end());
  // Tolerance keeps exact products such as 4 * 0.75 from rounding up.
  const auto rank = static_cast<std::size_t>(std::ceil((static_cast<double>(m) + 1.0) * (1.0 - alpha) - 1e-9));
  if (rank > m)
    throw CalibrationError("calibration set too small: need rank " + std::to_string(rank) + " of " +
                           std::to_string(m) + " scores for alpha=" + std::to_string(alpha));
  ConformalCalibration c;
  c.alpha = alpha;
  c.score_kind = kind;
  c.calibration_size = m;
  c.qhat = scores[std::max<std::size_t>(rank, 1) - 1];
  return c;
}

/// Labels y with score(y) <= qhat.
inline std::vector<int> conformal_set(const RowVector& probs, const ConformalCalibration& cal) {
  std::vector<int> out;
  for (Index k = 0; k < probs.size(); ++k)
    if (conformal_score(probs, static_cast<int>(k), cal.score_kind) <= cal.qhat) out.push_back(static_cast<int>(k));
  return out;
}

inline Decision conformal_reject(const RowVector& probs, const ConformalCalibration& cal) {
  auto set = conformal_set(probs, cal);
  return set.size() == 1 ? Decision::predict(set.front()) : Decision::reject();
}

inline std::vector<Decision> conformal_reject(const Matrix& probs, std::span<const NodeId> idx,
                                              const ConformalCalibration& cal) {
  std::vector<Decision> out;
  out.reserve(idx.size());
  for (NodeId i : idx) out.push_back(conformal_reject(RowVector(probs.row(i)), cal));
  return out;
}

}  // namespace ncwr
