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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gradcheck.hpp"
#include "ncwr/cost.hpp"
#include "ncwr/model.hpp"
#include "synthetic.hpp"

using namespace ncwr;

namespace {

Matrix random_simplex(Index rows, Index cols, Rng& rng) {
  Matrix p(rows, cols);
  for (Index i = 0; i < p.size(); ++i) p.data()[i] = 0.05 + uniform01(rng);
  for (Index i = 0; i < rows; ++i) p.row(i) /= p.row(i).sum();
  return p;
}

std::vector<int> random_labels(Index n, int K, Rng& rng) {
  std::vector<int> y(static_cast<std::size_t>(n));
  for (auto& v : y) v = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(K)));
  return y;
}

double plain_ce(const Matrix& p, const std::vector<int>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s -= std::log(p(static_cast<Index>(i), y[i]));
  return s / static_cast<double>(y.size());
}

}  // namespace

TEST(CostLoss, HandExamples) {
  Matrix p(1, 3);
  p << 0.5, 0.25, 0.25;
  const std::vector<int> y{0};
  const double got = cost_loss(p, y, RejectionCost(0.6));
  EXPECT_NEAR(got, -std::log(0.5) - 0.4 * std::log(0.25), 1e-15);
  EXPECT_NEAR(got, 1.2477, 5e-5);
  Matrix u = Matrix::Constant(1, 3, 1.0 / 3.0);
  const double uni = cost_loss(u, y, RejectionCost(0.5));
  EXPECT_NEAR(uni, -std::log(1.0 / 3.0) * 1.5, 1e-15);
  EXPECT_NEAR(uni, 1.6479, 5e-5);
}

TEST(CostLoss, DEqualsOneIsCrossEntropy) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix p = random_simplex(30, 5, rng);
    auto y = random_labels(30, 4, rng);
    EXPECT_NEAR(cost_loss(p, y, RejectionCost(1.0)), plain_ce(p, y), 1e-12);
  }
}

TEST(CostLoss, DifferentiableFormMatchesPureForm) {
  Rng rng(2);
  Matrix logits(8, 4);
  for (Index i = 0; i < logits.size(); ++i) logits.data()[i] = testkit::normal01(rng);
  auto y = random_labels(8, 3, rng);
  std::vector<NodeId> idx{0, 1, 2, 3, 4, 5, 6, 7};
  for (double d : {0.3, 0.85, 1.0}) {
    Tape t;
    const double tape_val = cost_loss(t.constant(logits), idx, y, RejectionCost(d)).item();
    EXPECT_NEAR(tape_val, cost_loss(ops::detail::softmax_rows(logits), y, RejectionCost(d)), 1e-12);
  }
}

TEST(CostLoss, RejectLabelInTrainingDataIsAContractError) {
  Matrix p = Matrix::Constant(1, 3, 1.0 / 3.0);
  const std::vector<int> y{2};
  EXPECT_THROW(cost_loss(p, y, RejectionCost(0.5)), ContractError);
}

TEST(CostLoss, InvariantToTrainingNodeOrder) {
  Rng rng(3);
  Matrix p = random_simplex(12, 4, rng);
  auto y = random_labels(12, 3, rng);
  std::vector<Index> perm(12);
  for (Index i = 0; i < 12; ++i) perm[i] = i;
  portable_shuffle(perm.begin(), perm.end(), rng);
  Matrix q(12, 4);
  std::vector<int> z(12);
  for (Index i = 0; i < 12; ++i) {
    q.row(i) = p.row(perm[i]);
    z[i] = y[perm[i]];
  }
  EXPECT_NEAR(cost_loss(p, y, RejectionCost(0.7)), cost_loss(q, z, RejectionCost(0.7)), 1e-14);
}

TEST(CostLoss, DerivativeInDIsMeanLogRejectProbability) {
  Rng rng(4);
  Matrix p = random_simplex(10, 4, rng);
  auto y = random_labels(10, 3, rng);
  const double d = 0.6, h = 1e-6;
  const double fd = (cost_loss(p, y, RejectionCost(d + h)) - cost_loss(p, y, RejectionCost(d - h))) / (2 * h);
  const double analytic = p.col(3).array().log().mean();
  EXPECT_NEAR(fd, analytic, 1e-7);
}

TEST(CostLoss, LowerDNeverLowersLoss) {
  Rng rng(5);
  Matrix p = random_simplex(10, 4, rng);
  auto y = random_labels(10, 3, rng);
  double prev = cost_loss(p, y, RejectionCost(1.0));
  for (double d = 0.95; d > 0.0; d -= 0.05) {
    const double cur = cost_loss(p, y, RejectionCost(d));
    EXPECT_GE(cur, prev);
    prev = cur;
  }
}

TEST(CostLoss, EndToEndGradientOnSixNodes) {
  Graph g = testkit::random_graph(6, 0.4, 4, 3, 6);
  TrainConfig cfg;
  cfg.variant = Variant::Cost;
  cfg.rejection_cost = 0.4;
  cfg = cfg.prepare(g);
  Rng rng(7);
  Model m(cfg, 3, rng);
  const std::vector<NodeId> idx{0, 1, 2, 3, 4, 5};
  auto res = testkit::grad_check(m.params(), [&](Tape& t, ParameterSet&) {
    Rng unused(0);
    auto out = m.forward(t, g, false, unused);
    return m.loss(out, idx, g.labels());
  });
  EXPECT_LT(res.max_rel_error, 1e-3) << res.worst;
}

TEST(RejectionCost, RangeAndDominanceWarning) {
  EXPECT_THROW(RejectionCost(0.0), ParameterError);
  EXPECT_THROW(RejectionCost(1.01), ParameterError);
  EXPECT_NO_THROW(RejectionCost(1.0));
  std::ostringstream a, b;
  RejectionCost(0.7).warn_if_dominated(3, a);
  RejectionCost(0.6).warn_if_dominated(3, b);
  EXPECT_NE(a.str().find("warning"), std::string::npos);
  EXPECT_TRUE(b.str().empty());
  EXPECT_TRUE(RejectionCost(0.5).rejection_dominated(2));
}

TEST(CostPredict, Examples) {
  auto row = [](std::initializer_list<double> v) {
    RowVector r(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) r(i++) = x;
    return r;
  };
  EXPECT_TRUE(cost_predict(row({0.1, 0.2, 0.7})).rejected());
  EXPECT_EQ(cost_predict(row({0.7, 0.2, 0.1})), Decision::predict(0));
  EXPECT_EQ(cost_predict(row({0.4, 0.4, 0.2})), Decision::predict(0));
  EXPECT_EQ(cost_predict(row({0.2, 0.4, 0.4})), Decision::predict(1));
}

TEST(CostPredict, InvariantUnderMonotoneTransform) {
  Rng rng(8);
  Matrix p = random_simplex(200, 5, rng);
  for (Index i = 0; i < p.rows(); ++i) {
    RowVector r = p.row(i);
    RowVector cubed = r.array().cube();
    RowVector logged = r.array().log();
    EXPECT_EQ(cost_predict(r), cost_predict(cubed));
    EXPECT_EQ(cost_predict(r), cost_predict(logged));
  }
}
