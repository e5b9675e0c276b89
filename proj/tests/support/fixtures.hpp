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

// On-disk fixtures in the citation and tabular formats.

#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "synthetic.hpp"

namespace ncwr::testkit {

/// Writes `<name>.content` (binary features) and `<name>.cites` for a CSBM.
inline void write_citation_fixture(const std::filesystem::path& dir, const std::string& name, const CsbmOptions& o) {
  std::filesystem::create_directories(dir);
  const Dataset ds = make_csbm(o);
  const Graph& g = ds.graph;
  std::ofstream content(dir / (name + ".content")), cites(dir / (name + ".cites"));
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    content << "p" << 1000 + i;
    for (Index f = 0; f < g.num_features(); ++f) content << ' ' << (g.features()(i, f) > 0.0 ? 1 : 0);
    content << " topic_" << g.label(i) << '\n';
  }
  for (auto [u, v] : g.edge_list())
    if (u < v) cites << "p" << 1000 + u << " p" << 1000 + v << '\n';
}

/// CSV table with a `label` column; features drawn from a CSBM.
inline void write_table_fixture(const std::filesystem::path& path, const CsbmOptions& o) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const Graph g = make_csbm(o).graph;
  std::ofstream out(path);
  for (Index f = 0; f < g.num_features(); ++f) out << "x" << f << ',';
  out << "label\n";
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    for (Index f = 0; f < g.num_features(); ++f) out << g.features()(i, f) << ',';
    out << (g.label(i) == 0 ? "yes" : "no") << '\n';
  }
}

}  // namespace ncwr::testkit
