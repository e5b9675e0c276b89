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
#include <numeric>

#include "gradcheck.hpp"
#include "ncwr/coverage.hpp"
#include "ncwr/layers.hpp"
#include "synthetic.hpp"

using namespace ncwr;

namespace {

Graph complete_graph(NodeId n, Index f, std::uint64_t seed) {
  std::vector<Edge> e;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j) e.emplace_back(i, j);
  Rng rng(seed);
  Matrix x(n, f);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = testkit::normal01(rng);
  return Graph::from_edges(n, e, std::move(x), std::vector<int>(static_cast<std::size_t>(n), 0), 1);
}

EncoderConfig small_encoder(const Graph& g, int out, LayerKind kind = LayerKind::Gat) {
  EncoderConfig c;
  c.layer_kind = kind;
  c.in_features = g.num_features();
  c.out_features = out;
  return c;
}

}  // namespace

TEST(GatLayer, DefaultFirstLayerIs64Wide) {
  EncoderConfig c;
  c.in_features = 10;
  c.out_features = 7;
  EXPECT_EQ(c.gat_layer(0).out_width(), 64);
  EXPECT_EQ(c.gat_layer(1).out_width(), 7);
  EXPECT_EQ(c.gat_layer(1).num_heads, 1);
}

TEST(GatLayer, ZeroAttentionGivesUniformWeights) {
  Graph g = testkit::random_graph(15, 0.3, 4, 2, 1);
  GatLayerConfig cfg;
  cfg.in_features = 4;
  Rng rng(0);
  ParameterSet ps;
  init_gat_layer(ps, "l", cfg, rng);
  ps.at("l.att_src").value.setZero();
  ps.at("l.att_dst").value.setZero();
  Tape t;
  GatTrace trace;
  gat_layer_forward(t.constant(g.features()), g, ps, "l", cfg, false, rng, &trace);
  auto rows = g.csr_rows();
  for (NodeId p = 0; p < g.num_entries(); ++p)
    for (Index h = 0; h < cfg.num_heads; ++h)
      EXPECT_NEAR(trace.attention(p, h), 1.0 / static_cast<double>(g.degree(rows[p])), 1e-15);
}

TEST(GatLayer, SingletonNodeReturnsItsProjection) {
  Matrix x(1, 3);
  x << 0.5, -1.0, 2.0;
  Graph g = Graph::from_edges(1, {}, x, {0}, 1);
  GatLayerConfig cfg;
  cfg.in_features = 3;
  Rng rng(2);
  ParameterSet ps;
  init_gat_layer(ps, "l", cfg, rng);
  Tape t;
  Var out = gat_layer_forward(t.constant(x), g, ps, "l", cfg, false, rng);
  Matrix z = x * ps.at("l.weight").value;
  EXPECT_LT((out.value() - z).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(GatLayer, MatchesDenseAttentionOracleOnCompleteGraph) {
  for (bool concat : {true, false}) {
    Graph g = complete_graph(7, 5, 3);
    GatLayerConfig cfg;
    cfg.in_features = 5;
    cfg.num_heads = 3;
    cfg.out_features_per_head = 4;
    cfg.concat_heads = concat;
    Rng rng(4);
    ParameterSet ps;
    init_gat_layer(ps, "l", cfg, rng);
    ps.at("l.bias").value.setRandom();
    Tape t;
    Matrix got = gat_layer_forward(t.constant(g.features()), g, ps, "l", cfg, false, rng).value();

    // Dense oracle: no CSR, explicit double loops.
    const Matrix z = g.features() * ps.at("l.weight").value;
    const Matrix& as = ps.at("l.att_src").value;
    const Matrix& ad = ps.at("l.att_dst").value;
    const Index n = 7, H = 3, F = 4;
    Matrix expect = Matrix::Zero(n, concat ? H * F : F);
    for (Index h = 0; h < H; ++h)
      for (Index i = 0; i < n; ++i) {
        std::vector<double> e(n);
        double mx = -1e300;
        for (Index j = 0; j < n; ++j) {
          double s = 0.0;
          for (Index f = 0; f < F; ++f) s += as(h, f) * z(i, h * F + f) + ad(h, f) * z(j, h * F + f);
          e[j] = s > 0 ? s : 0.2 * s;
          mx = std::max(mx, e[j]);
        }
        double den = 0.0;
        for (double& v : e) den += (v = std::exp(v - mx));
        for (Index j = 0; j < n; ++j)
          for (Index f = 0; f < F; ++f) {
            const double c = e[j] / den * z(j, h * F + f);
            if (concat) expect(i, h * F + f) += c;
            else expect(i, f) += c / static_cast<double>(H);
          }
      }
    expect.rowwise() += RowVector(ps.at("l.bias").value.row(0));
    EXPECT_LT((got - expect).cwiseAbs().maxCoeff(), 1e-10) << "concat=" << concat;
  }
}

TEST(GatLayer, AttentionRowsSumToOne) {
  Graph g = testkit::random_graph(40, 0.1, 6, 3, 5);
  GatLayerConfig cfg;
  cfg.in_features = 6;
  Rng rng(6);
  ParameterSet ps;
  init_gat_layer(ps, "l", cfg, rng);
  Tape t;
  GatTrace trace;
  gat_layer_forward(t.constant(g.features()), g, ps, "l", cfg, false, rng, &trace);
  auto off = g.csr_offsets();
  for (NodeId i = 0; i < g.num_nodes(); ++i)
    for (Index h = 0; h < cfg.num_heads; ++h)
      EXPECT_NEAR(trace.attention.middleRows(off[i], off[i + 1] - off[i]).col(h).sum(), 1.0, 1e-12);
}

TEST(GatLayer, WidthMismatchRaises) {
  Graph g = testkit::random_graph(5, 0.5, 3, 2, 7);
  GatLayerConfig cfg;
  cfg.in_features = 4;
  Rng rng(0);
  ParameterSet ps;
  init_gat_layer(ps, "l", cfg, rng);
  Tape t;
  EXPECT_THROW(gat_layer_forward(t.constant(g.features()), g, ps, "l", cfg, false, rng), DimensionError);
  cfg.num_heads = 0;
  EXPECT_THROW(cfg.validate(), ParameterError);
}

TEST(Encoder, PermutationEquivariance) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Graph g = testkit::random_graph(10, 0.3, 4, 3, seed);
    for (LayerKind kind : {LayerKind::Gat, LayerKind::Gcn}) {
      auto cfg = small_encoder(g, 3, kind);
      Rng rng(seed + 100);
      ParameterSet ps;
      init_encoder(ps, cfg, rng);

      std::vector<NodeId> perm(10);
      std::iota(perm.begin(), perm.end(), 0);
      portable_shuffle(perm.begin(), perm.end(), rng);  // new id of node i is perm[i]
      std::vector<Edge> pe;
      for (auto [u, v] : g.edge_list()) pe.emplace_back(perm[u], perm[v]);
      Matrix px(10, 4);
      std::vector<int> py(10);
      for (NodeId i = 0; i < 10; ++i) {
        px.row(perm[i]) = g.features().row(i);
        py[perm[i]] = g.label(i);
      }
      Graph h = Graph::from_edges(10, pe, px, py, 3);

      Tape t1, t2;
      auto a = encoder_forward(g, t1, cfg, ps, false, rng);
      auto b = encoder_forward(h, t2, cfg, ps, false, rng);
      for (NodeId i = 0; i < 10; ++i) {
        EXPECT_LT((a.pre_logits.value().row(i) - b.pre_logits.value().row(perm[i])).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((a.penultimate.value().row(i) - b.penultimate.value().row(perm[i])).cwiseAbs().maxCoeff(),
                  1e-12);
      }
    }
  }
}

TEST(Gcn, IsolatedNodesApplyLinearMap) {
  Rng rng(8);
  Matrix x(2, 3);
  x << 1, 2, 3, -1, 0, 4;
  Graph g = Graph::from_edges(2, {}, x, {0, 0}, 1);
  ParameterSet ps;
  init_gcn_layer(ps, "g", 3, 2, rng);
  Tape t;
  Matrix out = gcn_layer_forward(t.constant(x), g, ps, "g").value();
  EXPECT_LT((out - x * ps.at("g.weight").value).cwiseAbs().maxCoeff(), 1e-15);
  ps.at("g.weight").value.setZero();
  Tape u;
  EXPECT_EQ(gcn_layer_forward(u.constant(x), g, ps, "g").value().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gcn, StarGraphMatchesDenseNormalizedAdjacency) {
  Matrix x(3, 2);
  x << 1, 0, 0, 1, 2, -1;
  std::vector<Edge> e{{0, 1}, {0, 2}};
  Graph g = Graph::from_edges(3, e, x, {0, 0, 0}, 1);
  Rng rng(9);
  ParameterSet ps;
  init_gcn_layer(ps, "g", 2, 2, rng);
  Tape t;
  Matrix out = gcn_layer_forward(t.constant(x), g, ps, "g").value();
  Matrix a(3, 3);
  a << 1, 1, 1, 1, 1, 0, 1, 0, 1;
  Eigen::Vector3d d = a.rowwise().sum();
  Matrix dinv = d.cwiseSqrt().cwiseInverse().asDiagonal();
  Matrix expect = dinv * a * dinv * x * ps.at("g.weight").value;
  EXPECT_LT((out - expect).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Encoder, CoraSizedShapes) {
  testkit::CsbmOptions o;
  o.num_nodes = 2708;
  o.num_classes = 7;
  o.num_features = 1433;
  Graph g = testkit::make_csbm(o).graph;
  auto cfg = small_encoder(g, 7);
  Rng rng(1);
  ParameterSet ps;
  init_encoder(ps, cfg, rng);
  Tape t;
  auto out = encoder_forward(g, t, cfg, ps, false, rng);
  EXPECT_EQ(out.pre_logits.rows(), 2708);
  EXPECT_EQ(out.pre_logits.cols(), 7);
  EXPECT_EQ(out.penultimate.cols(), 64);
}

TEST(Encoder, EvalModeIsDeterministic) {
  Graph g = testkit::random_graph(20, 0.2, 5, 3, 10);
  auto cfg = small_encoder(g, 3);
  Rng init(2), r1(5), r2(6);
  ParameterSet ps;
  init_encoder(ps, cfg, init);
  Tape t1, t2;
  auto a = encoder_forward(g, t1, cfg, ps, false, r1);
  auto b = encoder_forward(g, t2, cfg, ps, false, r2);
  EXPECT_TRUE(a.pre_logits.value() == b.pre_logits.value());
}

TEST(Encoder, ThreeLayerVariantsRun) {
  Graph g = testkit::random_graph(20, 0.2, 5, 3, 11);
  for (LayerKind kind : {LayerKind::Gat, LayerKind::Gcn}) {
    auto cfg = small_encoder(g, 3, kind);
    cfg.num_layers = 3;
    Rng rng(3);
    ParameterSet ps;
    init_encoder(ps, cfg, rng);
    EXPECT_TRUE(ps.contains("encoder.2.weight"));
    Tape t;
    auto out = encoder_forward(g, t, cfg, ps, true, rng);
    EXPECT_EQ(out.pre_logits.cols(), 3);
    EXPECT_EQ(out.penultimate.cols(), 64);
  }
  EncoderConfig bad;
  bad.in_features = 3;
  bad.out_features = 2;
  bad.num_layers = 1;
  EXPECT_THROW(bad.validate(), ParameterError);
}

TEST(Encoder, EndToEndGradientOnSixNodes) {
  for (LayerKind kind : {LayerKind::Gat, LayerKind::Gcn}) {
    Graph g = testkit::random_graph(6, 0.4, 4, 3, 12);
    auto cfg = small_encoder(g, 3, kind);
    Rng rng(13);
    ParameterSet ps;
    init_encoder(ps, cfg, rng);
    const std::vector<NodeId> idx{0, 1, 2, 3, 4, 5};
    auto res = testkit::grad_check(ps, [&](Tape& t, ParameterSet& p) {
      Rng unused(0);
      auto out = encoder_forward(g, t, cfg, p, false, unused);
      return ops::mean(nll_rows(out.pre_logits, idx, g.labels()));
    });
    EXPECT_LT(res.max_rel_error, 1e-3) << to_string(kind) << " worst " << res.worst;
  }
}
