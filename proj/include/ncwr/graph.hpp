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

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ncwr/error.hpp"
#include "ncwr/types.hpp"

namespace ncwr {

using NodeId = std::int64_t;
using Edge = std::pair<NodeId, NodeId>;

/// Label value used for nodes that carry no class.
inline constexpr int kUnlabeled = -1;

/// Undirected node-classification graph in CSR form.
///
/// Every node's neighbor list is sorted, duplicate-free and contains the node
/// itself exactly once. Instances are immutable and safe to share.
class Graph {
 public:
  Graph() = default;

  /// Builds the symmetric closure of `edges` plus one self-loop per node.
  /// Duplicate and reversed edges collapse; self-edges in the input are
  /// ignored (every node already gets one).
  static Graph from_edges(NodeId num_nodes, std::span<const Edge> edges, Matrix features,
                          std::vector<int> labels, int num_classes) {
    if (num_nodes <= 0) throw EmptyDatasetError("graph has no nodes");
    if (features.rows() != num_nodes)
      throw DimensionError("feature rows " + std::to_string(features.rows()) +
                           " != num_nodes " + std::to_string(num_nodes));
    if (static_cast<NodeId>(labels.size()) != num_nodes)
      throw DimensionError("label count " + std::to_string(labels.size()) +
                           " != num_nodes " + std::to_string(num_nodes));
    for (int y : labels) {
      if (y != kUnlabeled && (y < 0 || y >= num_classes))
        throw DataError("label " + std::to_string(y) + " outside [0, " +
                        std::to_string(num_classes) + ")");
    }

    std::vector<std::vector<NodeId>> adj(static_cast<std::size_t>(num_nodes));
    for (NodeId i = 0; i < num_nodes; ++i) adj[i].push_back(i);
    for (const auto& [u, v] : edges) {
      if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes)
        throw DimensionError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                             ") references a node outside [0, " + std::to_string(num_nodes) +
                             ")");
      if (u == v) continue;
      adj[u].push_back(v);
      adj[v].push_back(u);
    }

    Graph g;
    g.offsets_.reserve(static_cast<std::size_t>(num_nodes) + 1);
    g.offsets_.push_back(0);
    for (auto& nbrs : adj) {
      std::sort(nbrs.begin(), nbrs.end());
      nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
      g.neighbors_.insert(g.neighbors_.end(), nbrs.begin(), nbrs.end());
      g.offsets_.push_back(static_cast<NodeId>(g.neighbors_.size()));
    }
    g.edge_rows_.resize(g.neighbors_.size());
    for (NodeId i = 0; i < num_nodes; ++i)
      for (NodeId p = g.offsets_[i]; p < g.offsets_[i + 1]; ++p) g.edge_rows_[p] = i;
    g.features_ = std::move(features);
    g.labels_ = std::move(labels);
    g.num_classes_ = num_classes;
    return g;
  }

  NodeId num_nodes() const noexcept { return static_cast<NodeId>(labels_.size()); }
  /// Stored directed entries, self-loops included.
  NodeId num_entries() const noexcept { return static_cast<NodeId>(neighbors_.size()); }
  /// Undirected edges, self-loops excluded.
  NodeId num_edges() const noexcept { return (num_entries() - num_nodes()) / 2; }
  Index num_features() const noexcept { return features_.cols(); }
  int num_classes() const noexcept { return num_classes_; }

  std::span<const NodeId> csr_offsets() const noexcept { return offsets_; }
  std::span<const NodeId> csr_neighbors() const noexcept { return neighbors_; }
  /// Row (aggregating node) of each CSR entry; parallel to csr_neighbors().
  std::span<const NodeId> csr_rows() const noexcept { return edge_rows_; }

  std::span<const NodeId> neighbors(NodeId i) const {
    return std::span<const NodeId>(neighbors_).subspan(
        static_cast<std::size_t>(offsets_[i]),
        static_cast<std::size_t>(offsets_[i + 1] - offsets_[i]));
  }
  NodeId degree(NodeId i) const { return offsets_[i + 1] - offsets_[i]; }
  bool has_edge(NodeId i, NodeId j) const {
    auto nb = neighbors(i);
    return std::binary_search(nb.begin(), nb.end(), j);
  }

  const Matrix& features() const noexcept { return features_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  int label(NodeId i) const { return labels_[static_cast<std::size_t>(i)]; }

  /// Undirected edge list (u < v), self-loops excluded. Feeding it back into
  /// from_edges reproduces the same CSR arrays.
  std::vector<Edge> edge_list() const {
    std::vector<Edge> out;
    out.reserve(static_cast<std::size_t>(num_edges()));
    for (NodeId i = 0; i < num_nodes(); ++i)
      for (NodeId j : neighbors(i))
        if (i < j) out.emplace_back(i, j);
    return out;
  }

  /// Copy with a different feature matrix (same shape of rows).
  Graph with_features(Matrix features) const {
    if (features.rows() != num_nodes()) throw DimensionError("feature rows mismatch");
    Graph g = *this;
    g.features_ = std::move(features);
    return g;
  }

 private:
  std::vector<NodeId> offsets_;
  std::vector<NodeId> neighbors_;
  std::vector<NodeId> edge_rows_;
  Matrix features_;
  std::vector<int> labels_;
  int num_classes_ = 0;
};

/// Throws ContractError when any structural invariant of `g` is broken.
inline void check_graph_invariants(const Graph& g) {
  auto off = g.csr_offsets();
  auto nbr = g.csr_neighbors();
  if (off.size() != static_cast<std::size_t>(g.num_nodes()) + 1)
    throw ContractError("csr_offsets has wrong length");
  if (off.back() != static_cast<NodeId>(nbr.size()))
    throw ContractError("last csr offset != number of neighbors");
  for (std::size_t i = 1; i < off.size(); ++i)
    if (off[i] < off[i - 1]) throw ContractError("csr_offsets is decreasing");
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    auto nb = g.neighbors(i);
    if (std::count(nb.begin(), nb.end(), i) != 1)
      throw ContractError("node " + std::to_string(i) + " lacks exactly one self-loop");
    for (NodeId j : nb)
      if (!g.has_edge(j, i))
        throw ContractError("asymmetric edge " + std::to_string(i) + "->" + std::to_string(j));
  }
}

/// Train/validation/test node indices.
struct SplitSpec {
  std::vector<NodeId> train_idx;
  std::vector<NodeId> val_idx;
  std::vector<NodeId> test_idx;

  bool operator==(const SplitSpec&) const = default;
};

/// Throws ContractError unless the split is disjoint, in range, and every
/// referenced node carries a label.
inline void check_split(const Graph& g, const SplitSpec& s) {
  std::vector<char> seen(static_cast<std::size_t>(g.num_nodes()), 0);
  for (const auto* part : {&s.train_idx, &s.val_idx, &s.test_idx}) {
    for (NodeId i : *part) {
      if (i < 0 || i >= g.num_nodes())
        throw ContractError("split index " + std::to_string(i) + " out of range");
      if (seen[i]) throw ContractError("split index " + std::to_string(i) + " appears twice");
      seen[i] = 1;
      if (g.label(i) < 0 || g.label(i) >= g.num_classes())
        throw ContractError("split node " + std::to_string(i) + " is unlabeled");
    }
  }
}

/// Labels of `idx` in order.
inline std::vector<int> labels_of(const Graph& g, std::span<const NodeId> idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (NodeId i : idx) out.push_back(g.label(i));
  return out;
}

}  // namespace ncwr
