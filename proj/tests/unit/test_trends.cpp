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

// Trade-off trends on a synthetic contextual stochastic block model. These
// mirror the Cora trend checks of the acceptance run at a size that trains
// in seconds; they say nothing about Cora accuracy levels.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ncwr/ncwr.hpp"
#include "synthetic.hpp"

using namespace ncwr;

namespace {

constexpr int kSeeds = 3;

struct Problem {
  Dataset ds;
  SplitSpec split;
};

const Problem& problem() {
  static const Problem p = [] {
    testkit::CsbmOptions o;
    o.num_nodes = 1000;
    o.num_classes = 7;
    o.num_features = 32;
    o.seed = 5;
    Problem x;
    x.ds = testkit::make_csbm(o);
    x.split = make_standard_split(x.ds.graph, 0, 20, 200, 500);
    return x;
  }();
  return p;
}

SweepSpec spec_for(Method m, std::vector<double> grid) {
  SweepSpec s;
  s.dataset = "csbm";
  s.method = m;
  s.grid = std::move(grid);
  s.num_seeds = kSeeds;
  s.base.max_epochs = 300;
  s.base.patience = 50;
  s.base.selection.hidden = 128;
  return s;
}

double mean_at(const SweepResult& r, double param, bool accuracy) {
  for (const auto& s : r.summaries)
    if (s.param == param) {
      EXPECT_EQ(s.failures, 0u);
      return accuracy ? s.selective_accuracy.mean : s.coverage.mean;
    }
  ADD_FAILURE() << "no summary for " << param;
  return 0.0;
}

}  // namespace

TEST(SyntheticTrend, CovAccuracyFallsAsTargetCoverageRises) {
  const auto& p = problem();
  auto res = run_sweep(p.ds, p.split, spec_for(Method::Cov, {0.5, 0.9}));
  const double a05 = mean_at(res, 0.5, true), a09 = mean_at(res, 0.9, true);
  EXPECT_GT(a05, a09);
  // Realized test coverage tracks the validation-calibrated target.
  EXPECT_NEAR(mean_at(res, 0.5, false), 0.5, 0.1);
  EXPECT_NEAR(mean_at(res, 0.9, false), 0.9, 0.1);
}

TEST(SyntheticTrend, CostCoverageNonDecreasingInD) {
  const auto& p = problem();
  const std::vector<double> grid{0.5, 0.6, 0.7, 0.8, 0.85};
  auto res = run_sweep(p.ds, p.split, spec_for(Method::Cost, grid));
  double prev = -1.0;
  for (double d : grid) {
    const double c = mean_at(res, d, false);
    EXPECT_GE(c, prev) << "d=" << d;
    prev = c;
  }
  EXPECT_LT(mean_at(res, 0.5, false), 1.0);
}

TEST(SyntheticTrend, SoftmaxResponseTradesCoverageForAccuracy) {
  const auto& p = problem();
  auto res = run_sweep(p.ds, p.split, spec_for(Method::Sr, {0.3, 0.6, 0.9}));
  EXPECT_GE(mean_at(res, 0.3, false), mean_at(res, 0.6, false));
  EXPECT_GE(mean_at(res, 0.6, false), mean_at(res, 0.9, false));
  EXPECT_LE(mean_at(res, 0.3, true), mean_at(res, 0.9, true));
}
