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

// Coverage-based selective classification: prediction head f, selection
// head g, auxiliary head a, and post-training threshold calibration.
//
// Training minimizes
//   E = alpha * [ r(f, g) + lambda * max(0, c - phi(g))^2 ] + (1 - alpha) * mean l_ce(a, y)
// where phi(g) = mean g_i is the soft coverage and
// r(f, g) = mean(l_ce(f_i, y_i) g_i) / phi(g) the selective risk.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ncwr/autodiff.hpp"
#include "ncwr/cost.hpp"
#include "ncwr/decision.hpp"
#include "ncwr/error.hpp"
#include "ncwr/layers.hpp"
#include "ncwr/ops.hpp"

namespace ncwr {

/// Below this coverage the selective risk divides by the floor instead.
inline constexpr double kCoverageFloor = 1e-8;
/// Upper bound on the guarded selective risk.
inline constexpr double kRiskCap = 1e6;

struct CoverageObjectiveConfig {
  double target_coverage = 0.7;  // c
  double penalty_weight = 32.0;  // lambda
  double mix = 0.5;              // alpha
  double threshold = 0.5;        // tau, replaced by calibration after training

  void validate() const {
    if (!(target_coverage > 0.0 && target_coverage <= 1.0))
      throw ParameterError("target coverage must be in (0, 1], got " + std::to_string(target_coverage));
    if (!(penalty_weight >= 0.0)) throw ParameterError("penalty weight lambda must be >= 0");
    if (!(mix > 0.0 && mix < 1.0)) throw ParameterError("mix alpha must be in (0, 1)");
  }
};

/// Soft coverage: mean of raw selection scores.
inline double empirical_coverage(std::span<const double> sel) {
  if (sel.empty()) throw ContractError("empirical_coverage: empty split");
  double s = 0.0;
  for (double g : sel) s += g;
  return s / static_cast<double>(sel.size());
}

inline double selective_risk(std::span<const double> losses, std::span<const double> sel) {
  if (losses.size() != sel.size()) throw DimensionError("selective_risk: length mismatch");
  const double phi = empirical_coverage(sel);
  double num = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) num += losses[i] * sel[i];
  num /= static_cast<double>(losses.size());
  return std::min(num / std::max(phi, kCoverageFloor), kRiskCap);
}

/// lambda * max(0, c - phi)^2
inline double coverage_penalty(double target, double phi, double lambda) {
  const double gap = std::max(0.0, target - phi);
  return lambda * gap * gap;
}

/// Per-row cross-entropy -log max(p_y, floor).
inline std::vector<double> cross_entropy_rows(const Matrix& probs, std::span<const int> y) {
  if (static_cast<Index>(y.size()) != probs.rows()) throw DimensionError("cross_entropy_rows: label count != rows");
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = -std::log(std::max(probs(static_cast<Index>(i), y[i]), kProbFloor));
  return out;
}

/// Components of the combined objective, evaluated on plain matrices.
struct CoverageObjectiveTerms {
  double coverage = 0.0;
  double selective_risk = 0.0;
  double penalty = 0.0;
  double auxiliary = 0.0;
  double total = 0.0;
};

/// f_probs and a_probs are [m x K] rows of the training nodes, sel the m
/// selection scores, y the m labels.
inline CoverageObjectiveTerms combined_objective(const Matrix& f_probs, std::span<const double> sel,
                                                 const Matrix& a_probs, std::span<const int> y,
                                                 const CoverageObjectiveConfig& cfg) {
  cfg.validate();
  CoverageObjectiveTerms t;
  const auto lf = cross_entropy_rows(f_probs, y);
  const auto la = cross_entropy_rows(a_probs, y);
  t.coverage = empirical_coverage(sel);
  t.selective_risk = selective_risk(lf, sel);
  t.penalty = coverage_penalty(cfg.target_coverage, t.coverage, cfg.penalty_weight);
  double aux = 0.0;
  for (double l : la) aux += l;
  t.auxiliary = aux / static_cast<double>(la.size());
  t.total = cfg.mix * (t.selective_risk + t.penalty) + (1.0 - cfg.mix) * t.auxiliary;
  return t;
}

/// Negative clamped log-likelihood per row: [m x 1].
inline Var nll_rows(const Var& logits, std::span<const NodeId> idx, std::span<const int> y) {
  Var logp = ops::clamp(ops::row_log_softmax(ops::gather_rows(logits, idx)), std::log(kProbFloor), 0.0);
  return ops::scale(ops::pick(logp, y), -1.0);
}

/// Differentiable combined objective over the nodes in `idx`.
/// f_logits, a_logits: [n x K] pre-softmax; selection: [n x 1] in [0, 1].
inline Var combined_objective(const Var& f_logits, const Var& selection, const Var& a_logits,
                              std::span<const NodeId> idx, std::span<const int> y,
                              const CoverageObjectiveConfig& cfg) {
  cfg.validate();
  if (idx.size() != y.size()) throw DimensionError("combined_objective: label count != index count");
  if (idx.empty()) throw ContractError("combined_objective: empty split");
  Var g = ops::gather_rows(selection, idx);
  Var lf = nll_rows(f_logits, idx, y);
  Var phi = ops::mean(g);
  Var risk = ops::div(ops::mean(ops::mul(lf, g)), ops::clamp(phi, kCoverageFloor, 1.0));
  risk = ops::clamp(risk, 0.0, kRiskCap);
  Var gap = ops::relu(ops::scale(ops::add_scalar(phi, -cfg.target_coverage), -1.0));
  Var penalty = ops::scale(ops::square(gap), cfg.penalty_weight);
  Var aux = ops::mean(nll_rows(a_logits, idx, y));
  return ops::add(ops::scale(ops::add(risk, penalty), cfg.mix), ops::scale(aux, 1.0 - cfg.mix));
}

/// Threshold tau such that g >= tau accepts the top round(c * n) validation
/// scores (more when scores tie at tau).
inline double calibrate_threshold(std::span<const double> val_scores, double target_coverage) {
  if (!(target_coverage > 0.0 && target_coverage <= 1.0))
    throw ParameterError("calibration coverage must be in (0, 1], got " + std::to_string(target_coverage));
  if (val_scores.empty()) throw ContractError("calibrate_threshold: empty validation set");
  std::vector<double> s(val_scores.begin(), val_scores.end());
  std::sort(s.begin(), s.end(), std::greater<>());
  const auto n = static_cast<long long>(s.size());
  long long m = std::llround(target_coverage * static_cast<double>(n));
  m = std::clamp(m, 1LL, n);
  return s[static_cast<std::size_t>(m - 1)];
}

/// REJECT iff g < tau, else argmax f (lowest index on ties).
inline Decision cov_predict(const RowVector& f_probs, double g, double tau) {
  if (g < tau) return Decision::reject();
  return Decision::predict(argmax_lowest(f_probs));
}

// Selection head g: FC(hidden -> 512) -> batch norm -> ReLU -> FC(512 -> 1) -> sigmoid.
struct SelectionHeadConfig {
  Index in_features = 64;
  Index hidden = 512;
  double bn_momentum = 0.9;
};

inline void init_selection_head(ParameterSet& ps, const SelectionHeadConfig& cfg, Rng& rng) {
  const auto in = static_cast<double>(cfg.in_features), hid = static_cast<double>(cfg.hidden);
  ps.add("select.fc1.weight", glorot_uniform(cfg.in_features, cfg.hidden, in, hid, rng));
  ps.add("select.fc1.bias", Matrix::Zero(1, cfg.hidden));
  ps.add("select.bn.gamma", Matrix::Ones(1, cfg.hidden));
  ps.add("select.bn.beta", Matrix::Zero(1, cfg.hidden));
  ps.add("select.bn.running_mean", Matrix::Zero(1, cfg.hidden), false);
  ps.add("select.bn.running_var", Matrix::Ones(1, cfg.hidden), false);
  ps.add("select.fc2.weight", glorot_uniform(cfg.hidden, 1, hid, 1.0, rng));
  ps.add("select.fc2.bias", Matrix::Zero(1, 1));
}

/// Returns [n x 1] selection scores.
inline Var selection_head_forward(const Var& h, ParameterSet& ps, const SelectionHeadConfig& cfg, bool train) {
  Tape& t = h.tape();
  Var x = ops::add_bias(ops::matmul(h, t.parameter(ps.at("select.fc1.weight"))),
                        t.parameter(ps.at("select.fc1.bias")));
  ops::BatchNormOptions bn;
  bn.momentum = cfg.bn_momentum;
  x = ops::batch_norm_1d(x, t.parameter(ps.at("select.bn.gamma")), t.parameter(ps.at("select.bn.beta")),
                         ps.at("select.bn.running_mean"), ps.at("select.bn.running_var"), train, bn);
  x = ops::relu(x);
  x = ops::add_bias(ops::matmul(x, t.parameter(ps.at("select.fc2.weight"))),
                    t.parameter(ps.at("select.fc2.bias")));
  return ops::sigmoid(x);
}

/// Auxiliary head a: affine map from the hidden representation to K logits.
inline void init_auxiliary_head(ParameterSet& ps, Index in, Index classes, Rng& rng) {
  ps.add("aux.weight", glorot_uniform(in, classes, static_cast<double>(in), static_cast<double>(classes), rng));
  ps.add("aux.bias", Matrix::Zero(1, classes));
}

inline Var auxiliary_head_forward(const Var& h, ParameterSet& ps) {
  Tape& t = h.tape();
  return ops::add_bias(ops::matmul(h, t.parameter(ps.at("aux.weight"))), t.parameter(ps.at("aux.bias")));
}

}  // namespace ncwr
