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

// Synthetic graphs for tests: random small graphs and a contextual
// stochastic block model with class-dependent features.

#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "ncwr/data.hpp"
#include "ncwr/graph.hpp"
#include "ncwr/types.hpp"

namespace ncwr::testkit {

inline double normal01(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng), u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Erdos-Renyi graph with Gaussian features and uniform labels.
inline Graph random_graph(NodeId n, double p, Index features, int K, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      if (uniform01(rng) < p) edges.emplace_back(i, j);
  Matrix x(n, features);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = normal01(rng);
  std::vector<int> y(static_cast<std::size_t>(n));
  for (auto& v : y) v = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(K)));
  return Graph::from_edges(n, edges, std::move(x), std::move(y), K);
}

struct CsbmOptions {
  NodeId num_nodes = 600;
  int num_classes = 3;
  Index num_features = 16;
  double avg_degree = 6.0;
  double homophily = 0.8;   // fraction of edges inside a class
  double signal = 1.0;      // distance scale of class means
  double hard_fraction = 0.4;
  double hard_noise = 2.5;  // feature noise of hard nodes (easy nodes: 1)
  double feature_scale = 0.3;
  std::uint64_t seed = 1;
};

/// Contextual SBM. A fraction of nodes gets heavier feature noise and
/// heterophilous edges, so confidence and correctness are correlated.
inline Dataset make_csbm(const CsbmOptions& o) {
  Rng rng(o.seed);
  const NodeId n = o.num_nodes;
  std::vector<int> y(static_cast<std::size_t>(n));
  for (NodeId i = 0; i < n; ++i) y[i] = static_cast<int>(i % o.num_classes);
  portable_shuffle(y.begin(), y.end(), rng);
  std::vector<char> hard(static_cast<std::size_t>(n));
  for (auto& h : hard) h = uniform01(rng) < o.hard_fraction;

  Matrix means(o.num_classes, o.num_features);
  for (Index i = 0; i < means.size(); ++i) means.data()[i] = o.signal * normal01(rng);
  Matrix x(n, o.num_features);
  for (NodeId i = 0; i < n; ++i) {
    const double s = hard[i] ? o.hard_noise : 1.0;
    for (Index f = 0; f < o.num_features; ++f) x(i, f) = o.feature_scale * (means(y[i], f) + s * normal01(rng));
  }

  std::vector<std::vector<NodeId>> by_class(static_cast<std::size_t>(o.num_classes));
  for (NodeId i = 0; i < n; ++i) by_class[y[i]].push_back(i);
  std::vector<Edge> edges;
  const auto per_node = static_cast<int>(std::lround(o.avg_degree / 2.0));
  for (NodeId i = 0; i < n; ++i)
    for (int e = 0; e < per_node; ++e) {
      const double h = hard[i] ? 1.0 / o.num_classes : o.homophily;
      NodeId j;
      if (uniform01(rng) < h) {
        const auto& pool = by_class[y[i]];
        j = pool[uniform_index(rng, pool.size())];
      } else {
        j = static_cast<NodeId>(uniform_index(rng, static_cast<std::uint64_t>(n)));
      }
      if (j != i) edges.emplace_back(i, j);
    }

  Dataset ds;
  ds.name = "csbm";
  ds.kind = "synthetic";
  ds.graph = Graph::from_edges(n, edges, std::move(x), std::move(y), o.num_classes);
  for (int k = 0; k < o.num_classes; ++k) ds.label_names.push_back("c" + std::to_string(k));
  return ds;
}

}  // namespace ncwr::testkit
