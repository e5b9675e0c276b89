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
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ncwr/data.hpp"
#include "ncwr/graph.hpp"
#include "synthetic.hpp"

using namespace ncwr;

namespace {

Dataset load_strings(const std::string& content, const std::string& cites, CitationOptions o = {}) {
  std::istringstream c(content), e(cites);
  return load_citation_dataset(c, e, o);
}

std::set<std::pair<NodeId, NodeId>> edge_set(const Graph& g) {
  std::set<std::pair<NodeId, NodeId>> s;
  for (auto [u, v] : g.edge_list()) s.insert({std::min(u, v), std::max(u, v)});
  return s;
}

}  // namespace

TEST(CitationLoader, TwoNodesCitingEachOther) {
  auto ds = load_strings("a 1 0 x\nb 0 1 y\n", "a b\nb a\n");
  const Graph& g = ds.graph;
  EXPECT_EQ(g.num_nodes(), 2);
  EXPECT_EQ(g.degree(0), 2);
  EXPECT_EQ(g.degree(1), 2);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_TRUE(g.has_edge(1, 0));
  EXPECT_EQ(g.num_edges(), 1);
  check_graph_invariants(g);
}

TEST(CitationLoader, EmptyCitesGivesSelfLoopsOnly) {
  auto ds = load_strings("a 1 x\nb 2 y\nc 3 x\n", "");
  for (NodeId i = 0; i < 3; ++i) {
    ASSERT_EQ(ds.graph.degree(i), 1);
    EXPECT_EQ(ds.graph.neighbors(i)[0], i);
  }
}

TEST(CitationLoader, LabelsInFirstAppearanceOrder) {
  auto ds = load_strings("n1 1 beta\nn2 1 alpha\nn3 1 beta\n", "");
  EXPECT_EQ(ds.label_names, (std::vector<std::string>{"beta", "alpha"}));
  EXPECT_EQ(ds.graph.labels(), (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(ds.graph.num_classes(), 2);
  auto m = dataset_manifest(ds);
  EXPECT_EQ(m["label_map"]["beta"], 0);
  EXPECT_EQ(m["label_map"]["alpha"], 1);
}

TEST(CitationLoader, UnknownCitationsAreDroppedAndCounted) {
  auto ds = load_strings("a 1 x\nb 1 x\n", "a b\na ghost\nghost b\n");
  EXPECT_EQ(ds.dropped_citations, 2u);
  EXPECT_EQ(ds.graph.num_edges(), 1);
  EXPECT_EQ(dataset_manifest(ds)["dropped_citations"], 2);
}

TEST(CitationLoader, RowNormalization) {
  auto ds = load_strings("a 1 3 x\nb 0 0 y\n", "");
  EXPECT_DOUBLE_EQ(ds.graph.features()(0, 0), 0.25);
  EXPECT_DOUBLE_EQ(ds.graph.features()(0, 1), 0.75);
  EXPECT_DOUBLE_EQ(ds.graph.features()(1, 0), 0.0);
  auto raw = load_strings("a 1 3 x\n", "", CitationOptions{false});
  EXPECT_DOUBLE_EQ(raw.graph.features()(0, 1), 3.0);
}

TEST(CitationLoader, Errors) {
  try {
    load_strings("a 1 x\nb oops y\n", "");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(load_strings("a 1 x\nb 1 2 y\n", ""), DimensionError);
  EXPECT_THROW(load_strings("", ""), EmptyDatasetError);
  EXPECT_THROW(load_strings("\n\n", ""), EmptyDatasetError);
  try {
    load_strings("a 1 x\n", "a\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(CitationLoader, LoadsDirectoryReference) {
  const auto dir = std::filesystem::temp_directory_path() / "ncwr_test_citation";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "tiny.content") << "p1 1 0 A\np2 0 1 B\np3 1 1 A\n";
  std::ofstream(dir / "tiny.cites") << "p1 p2\np3 p2\n";
  auto ds = load_dataset(dir);
  EXPECT_EQ(ds.name, "tiny");
  EXPECT_EQ(ds.graph.num_nodes(), 3);
  EXPECT_EQ(ds.graph.num_edges(), 2);
  std::filesystem::remove_all(dir);
}

TEST(Graph, CsrRoundTripThroughEdgeList) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Graph g = testkit::random_graph(30, 0.15, 4, 3, seed);
    check_graph_invariants(g);
    auto edges = g.edge_list();
    Graph h = Graph::from_edges(g.num_nodes(), edges, g.features(), g.labels(), g.num_classes());
    EXPECT_TRUE(std::equal(g.csr_offsets().begin(), g.csr_offsets().end(), h.csr_offsets().begin(),
                           h.csr_offsets().end()));
    EXPECT_TRUE(std::equal(g.csr_neighbors().begin(), g.csr_neighbors().end(), h.csr_neighbors().begin(),
                           h.csr_neighbors().end()));
  }
}

TEST(Graph, SymmetryAndSelfLoops) {
  Graph g = testkit::random_graph(40, 0.1, 2, 2, 9);
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    int self = 0;
    for (NodeId j : g.neighbors(i)) {
      if (j == i) ++self;
      EXPECT_TRUE(g.has_edge(j, i));
    }
    EXPECT_EQ(self, 1);
  }
  EXPECT_EQ(g.csr_offsets().back(), static_cast<NodeId>(g.csr_neighbors().size()));
}

TEST(Graph, RejectsBadInput) {
  std::vector<Edge> e{{0, 5}};
  EXPECT_THROW(Graph::from_edges(2, e, Matrix::Zero(2, 1), {0, 0}, 1), DimensionError);
  EXPECT_THROW(Graph::from_edges(2, {}, Matrix::Zero(3, 1), {0, 0}, 1), DimensionError);
  EXPECT_THROW(Graph::from_edges(2, {}, Matrix::Zero(2, 1), {0, 4}, 2), DataError);
  EXPECT_THROW(Graph::from_edges(0, {}, Matrix::Zero(0, 1), {}, 1), EmptyDatasetError);
}

TEST(Graph, JsonRoundTrip) {
  Dataset ds;
  ds.name = "r";
  ds.graph = testkit::random_graph(12, 0.3, 3, 2, 4);
  ds.label_names = {"a", "b"};
  Dataset back = graph_from_json(nlohmann::json::parse(graph_to_json(ds).dump()));
  EXPECT_EQ(back.graph.edge_list(), ds.graph.edge_list());
  EXPECT_EQ(back.graph.labels(), ds.graph.labels());
  EXPECT_TRUE(back.graph.features() == ds.graph.features());
}

class StandardSplit : public ::testing::Test {
 protected:
  Graph g = [] {
    testkit::CsbmOptions o;
    o.num_nodes = 2708;
    o.num_classes = 7;
    return testkit::make_csbm(o).graph;
  }();
};

TEST_F(StandardSplit, SizesForSevenClasses) {
  auto s = make_standard_split(g, 3);
  EXPECT_EQ(s.train_idx.size(), 140u);
  EXPECT_EQ(s.val_idx.size(), 500u);
  EXPECT_EQ(s.test_idx.size(), 1000u);
  std::vector<int> per(7, 0);
  for (NodeId i : s.train_idx) ++per[g.label(i)];
  for (int c : per) EXPECT_EQ(c, 20);
  check_split(g, s);
}

TEST_F(StandardSplit, DeterministicAndSeedDependent) {
  EXPECT_EQ(make_standard_split(g, 11), make_standard_split(g, 11));
  EXPECT_NE(make_standard_split(g, 11), make_standard_split(g, 12));
}

TEST_F(StandardSplit, Disjoint) {
  auto s = make_standard_split(g, 0);
  std::set<NodeId> all;
  for (const auto* v : {&s.train_idx, &s.val_idx, &s.test_idx}) all.insert(v->begin(), v->end());
  EXPECT_EQ(all.size(), s.train_idx.size() + s.val_idx.size() + s.test_idx.size());
}

TEST(StandardSplitCapacity, DeficientClassIsNamed) {
  std::vector<int> y(60, 0);
  for (int i = 0; i < 19; ++i) y[i] = 1;
  Graph g = Graph::from_edges(60, {}, Matrix::Zero(60, 1), y, 2);
  try {
    make_standard_split(g, 0, 20, 5, 5);
    FAIL() << "expected CapacityError";
  } catch (const CapacityError& e) {
    EXPECT_NE(std::string(e.what()).find("class 1"), std::string::npos);
  }
}

TEST(DefaultSplit, FollowsDatasetKind) {
  testkit::CsbmOptions o;
  o.num_nodes = 1700;
  Dataset ds = testkit::make_csbm(o);
  auto s = default_split(ds, 3);
  EXPECT_EQ(s.train_idx.size(), 60u);
  EXPECT_EQ(s.val_idx.size(), 500u);
  EXPECT_EQ(s.test_idx.size(), 1000u);
  ds.kind = "tabular";
  auto t = default_split(ds, 3);
  EXPECT_EQ(t.test_idx.size(), 255u);
  EXPECT_EQ(t.val_idx.size(), 144u);
  EXPECT_EQ(t.train_idx.size(), 1301u);
}

TEST(TabularSplit, Sizes) {
  auto a = make_tabular_split(1000, 0);
  EXPECT_EQ(a.test_idx.size(), 150u);
  EXPECT_EQ(a.val_idx.size(), 85u);
  EXPECT_EQ(a.train_idx.size(), 765u);
  auto b = make_tabular_split(20, 0);
  EXPECT_EQ(b.test_idx.size(), 3u);
  EXPECT_EQ(b.val_idx.size(), 1u);
  EXPECT_EQ(b.train_idx.size(), 16u);
  // Oracle: floor arithmetic on every n in a range.
  for (std::size_t n = 20; n < 300; ++n) {
    auto s = make_tabular_split(n, 1);
    const auto test = static_cast<std::size_t>(std::floor(0.15 * static_cast<double>(n) + 1e-9));
    const auto val = static_cast<std::size_t>(std::floor(0.1 * static_cast<double>(n - test) + 1e-9));
    EXPECT_EQ(s.test_idx.size(), test) << n;
    EXPECT_EQ(s.val_idx.size(), val) << n;
    EXPECT_EQ(s.train_idx.size(), n - test - val) << n;
  }
  EXPECT_EQ(make_tabular_split(500, 7), make_tabular_split(500, 7));
  EXPECT_THROW(make_tabular_split(19, 0), ContractError);
}

TEST(Knn, CollinearPointsMatchBruteForce) {
  Matrix x(3, 1);
  x << 0, 1, 10;
  Graph g = build_knn_graph(x, {0, 0, 1}, 1);
  EXPECT_EQ(edge_set(g), (std::set<std::pair<NodeId, NodeId>>{{0, 1}, {1, 2}}));

  // Brute-force oracle on random tables: union of each row's k nearest.
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const Index n = 25;
    Matrix t(n, 3);
    for (Index i = 0; i < t.size(); ++i) t.data()[i] = testkit::normal01(rng);
    const int k = 3;
    Graph h = build_knn_graph(t, std::vector<int>(n, 0), k);
    Matrix z = standardize_columns(t);
    std::set<std::pair<NodeId, NodeId>> expect;
    for (Index i = 0; i < n; ++i) {
      std::vector<std::pair<double, Index>> d;
      for (Index j = 0; j < n; ++j)
        if (j != i) d.push_back({(z.row(i) - z.row(j)).norm(), j});
      std::sort(d.begin(), d.end());
      for (int q = 0; q < k; ++q) expect.insert({std::min(i, d[q].second), std::max(i, d[q].second)});
    }
    EXPECT_EQ(edge_set(h), expect);
  }
}

TEST(Knn, IdenticalPointsAndConstantColumn) {
  Matrix x(2, 2);
  x << 5, 1, 5, 1;
  Graph g = build_knn_graph(x, {0, 1}, 1);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_TRUE(g.features().allFinite());
  EXPECT_EQ(g.features().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Knn, CompleteGraphWhenKIsNMinusOne) {
  Graph g = build_knn_graph(testkit::random_graph(9, 0, 2, 1, 2).features(), std::vector<int>(9, 0), 8);
  EXPECT_EQ(g.num_edges(), 9 * 8 / 2);
  for (NodeId i = 0; i < 9; ++i) EXPECT_EQ(g.degree(i), 9);
}

TEST(Knn, Errors) {
  Matrix x = Matrix::Ones(3, 1);
  EXPECT_THROW(build_knn_graph(x, {0, 0, 0}, 3), ParameterError);
  x(1, 0) = std::nan("");
  EXPECT_THROW(build_knn_graph(x, {0, 0, 0}, 1), DataError);
}

TEST(Standardize, MeanZeroStdOne) {
  Rng rng(8);
  Matrix x(50, 4);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = 3.0 + 7.0 * testkit::normal01(rng);
  x.col(2).setConstant(4.0);
  Matrix z = standardize_columns(x);
  for (Index c : {0, 1, 3}) {
    const double mean = z.col(c).mean();
    const double sd = std::sqrt((z.col(c).array() - mean).square().sum() / 49.0);
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(sd, 1.0, 1e-9);
  }
  EXPECT_EQ(z.col(2).cwiseAbs().maxCoeff(), 0.0);
}

TEST(TableCsv, ParsesNamedAndNumericLabels) {
  std::istringstream a("f1,label,f2\n1,yes,2\n3,no,4\n5,yes,6\n");
  Table t = read_table_csv(a);
  EXPECT_EQ(t.labels, (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(t.label_names, (std::vector<std::string>{"yes", "no"}));
  EXPECT_EQ(t.features.cols(), 2);
  EXPECT_DOUBLE_EQ(t.features(2, 1), 6.0);
  std::istringstream b("label,x\n2,0.5\n0,1.5\n");
  Table u = read_table_csv(b);
  EXPECT_EQ(u.labels, (std::vector<int>{2, 0}));
  std::istringstream c("x,y\n1,2\n");
  EXPECT_THROW(read_table_csv(c), ParseError);
}

TEST(TableCsv, KnnDatasetManifest) {
  std::ostringstream csv;
  csv << "a,b,label\n";
  for (int i = 0; i < 30; ++i) csv << i << ',' << (i * 7) % 11 << ',' << (i % 3) << '\n';
  std::istringstream in(csv.str());
  auto ds = knn_dataset_from_table(read_table_csv(in), 5);
  auto m = dataset_manifest(ds);
  EXPECT_EQ(m["num_nodes"], 30);
  EXPECT_EQ(m["K"], 3);
  EXPECT_EQ(m["F"], 2);
  EXPECT_EQ(m["kind"], "tabular");
  check_graph_invariants(ds.graph);
}
