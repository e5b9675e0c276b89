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

// Message-passing layers (GAT, GCN) and the shared multi-layer encoder.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ncwr/autodiff.hpp"
#include "ncwr/error.hpp"
#include "ncwr/graph.hpp"
#include "ncwr/ops.hpp"
#include "ncwr/types.hpp"

namespace ncwr {

struct GatLayerConfig {
  Index in_features = 0;
  Index out_features_per_head = 8;
  Index num_heads = 8;
  bool concat_heads = true;
  double attention_slope = 0.2;
  /// Dropout applied to normalized attention coefficients.
  double dropout_p = 0.6;
  bool attention_dropout = true;

  void validate() const {
    if (num_heads < 1) throw ParameterError("GAT layer needs num_heads >= 1");
    if (in_features < 1 || out_features_per_head < 1) throw ParameterError("GAT layer widths must be positive");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ParameterError("GAT dropout_p must be in [0, 1)");
    if (!(attention_slope > 0.0)) throw ParameterError("GAT attention_slope must be > 0");
  }
  Index out_width() const { return concat_heads ? num_heads * out_features_per_head : out_features_per_head; }
};

/// Glorot/Xavier uniform in [-sqrt(6/(fan_in+fan_out)), +...].
inline Matrix glorot_uniform(Index rows, Index cols, double fan_in, double fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = (2.0 * uniform01(rng) - 1.0) * limit;
  return m;
}

/// Parameters: <prefix>.weight [in x H*F], .att_src / .att_dst [H x F], .bias [1 x out].
inline void init_gat_layer(ParameterSet& ps, const std::string& prefix, const GatLayerConfig& cfg, Rng& rng) {
  cfg.validate();
  const Index h = cfg.num_heads, f = cfg.out_features_per_head;
  ps.add(prefix + ".weight", glorot_uniform(cfg.in_features, h * f, static_cast<double>(cfg.in_features),
                                            static_cast<double>(f), rng));
  ps.add(prefix + ".att_src", glorot_uniform(h, f, 2.0 * static_cast<double>(f), 1.0, rng));
  ps.add(prefix + ".att_dst", glorot_uniform(h, f, 2.0 * static_cast<double>(f), 1.0, rng));
  ps.add(prefix + ".bias", Matrix::Zero(1, cfg.out_width()));
}

/// Attention coefficients [entries x H] of the most recent forward, for inspection.
struct GatTrace {
  Matrix attention;
};

/// Multi-head graph attention. For each head: z = h W, logit(i, j) =
/// LeakyReLU(a_src . z_i + a_dst . z_j), softmax over N(i), out_i = sum_j att_ij z_j.
inline Var gat_layer_forward(const Var& h, const Graph& g, ParameterSet& ps, const std::string& prefix,
                             const GatLayerConfig& cfg, bool train, Rng& rng, GatTrace* trace = nullptr) {
  cfg.validate();
  if (h.cols() != cfg.in_features)
    throw DimensionError("GAT layer " + prefix + ": input width " + std::to_string(h.cols()) +
                         " != " + std::to_string(cfg.in_features));
  if (h.rows() != g.num_nodes()) throw DimensionError("GAT layer " + prefix + ": row count != num_nodes");
  Tape& t = h.tape();
  Var w = t.parameter(ps.at(prefix + ".weight"));
  Var a_src = t.parameter(ps.at(prefix + ".att_src"));
  Var a_dst = t.parameter(ps.at(prefix + ".att_dst"));
  Var bias = t.parameter(ps.at(prefix + ".bias"));

  Var z = ops::matmul(h, w);
  Var s_src = ops::head_dot(z, a_src);
  Var s_dst = ops::head_dot(z, a_dst);
  Var logits = ops::add(ops::gather_rows(s_src, g.csr_rows()), ops::gather_rows(s_dst, g.csr_neighbors()));
  Var att = ops::segment_softmax(ops::leaky_relu(logits, cfg.attention_slope), g.csr_offsets());
  if (trace != nullptr) trace->attention = att.value();
  if (cfg.attention_dropout) att = ops::dropout(att, cfg.dropout_p, train, rng);
  Var out = ops::segment_weighted_sum(att, z, g.csr_offsets(), g.csr_neighbors());
  if (!cfg.concat_heads && cfg.num_heads > 1) out = ops::head_mean(out, cfg.num_heads);
  return ops::add_bias(out, bias);
}

/// D^{-1/2} (A+I) D^{-1/2} entry weights in CSR order (self-loops already in A).
inline Matrix gcn_edge_weights(const Graph& g) {
  Matrix w(g.num_entries(), 1);
  auto rows = g.csr_rows();
  auto nbr = g.csr_neighbors();
  for (NodeId p = 0; p < g.num_entries(); ++p)
    w(p, 0) = 1.0 / std::sqrt(static_cast<double>(g.degree(rows[p])) * static_cast<double>(g.degree(nbr[p])));
  return w;
}

/// Parameters: <prefix>.weight [in x out], <prefix>.bias [1 x out].
inline void init_gcn_layer(ParameterSet& ps, const std::string& prefix, Index in, Index out, Rng& rng) {
  ps.add(prefix + ".weight", glorot_uniform(in, out, static_cast<double>(in), static_cast<double>(out), rng));
  ps.add(prefix + ".bias", Matrix::Zero(1, out));
}

inline Var gcn_layer_forward(const Var& h, const Graph& g, ParameterSet& ps, const std::string& prefix) {
  Tape& t = h.tape();
  Var w = t.parameter(ps.at(prefix + ".weight"));
  if (h.cols() != w.rows())
    throw DimensionError("GCN layer " + prefix + ": input width " + std::to_string(h.cols()) +
                         " != " + std::to_string(w.rows()));
  if (h.rows() != g.num_nodes()) throw DimensionError("GCN layer " + prefix + ": row count != num_nodes");
  Var bias = t.parameter(ps.at(prefix + ".bias"));
  Var z = ops::matmul(h, w);
  Var norm = t.constant(gcn_edge_weights(g));
  return ops::add_bias(ops::segment_weighted_sum(norm, z, g.csr_offsets(), g.csr_neighbors()), bias);
}

enum class LayerKind { Gat, Gcn };

inline const char* to_string(LayerKind k) { return k == LayerKind::Gat ? "gat" : "gcn"; }
inline LayerKind layer_kind_from_string(const std::string& s) {
  if (s == "gat" || s == "GAT") return LayerKind::Gat;
  if (s == "gcn" || s == "GCN") return LayerKind::Gcn;
  throw ParameterError("unknown layer kind '" + s + "'");
}

/// Encoder layout: [dropout -> hidden layer -> ELU] x (num_layers-1) ->
/// dropout -> output layer -> ELU. Hidden GAT layers concatenate
/// `hidden_heads` heads of `hidden_features`; the GAT output layer averages
/// `output_heads` heads. GCN hidden layers are hidden_heads*hidden_features wide.
struct EncoderConfig {
  LayerKind layer_kind = LayerKind::Gat;
  int num_layers = 2;
  Index in_features = 0;
  Index out_features = 0;
  Index hidden_heads = 8;
  Index hidden_features = 8;
  Index output_heads = 1;
  double input_dropout = 0.6;
  double hidden_dropout = 0.6;
  double attention_slope = 0.2;
  bool attention_dropout = true;

  Index hidden_width() const { return hidden_heads * hidden_features; }

  void validate() const {
    if (num_layers < 2) throw ParameterError("encoder needs num_layers >= 2");
    if (in_features < 1) throw ParameterError("encoder in_features must be set");
    if (out_features < 1) throw ParameterError("encoder out_features must be set");
    if (hidden_heads < 1 || hidden_features < 1 || output_heads < 1)
      throw ParameterError("encoder head/feature counts must be positive");
    for (double p : {input_dropout, hidden_dropout})
      if (!(p >= 0.0 && p < 1.0)) throw ParameterError("encoder dropout must be in [0, 1)");
  }

  GatLayerConfig gat_layer(int layer) const {
    GatLayerConfig c;
    const bool last = layer == num_layers - 1;
    c.in_features = layer == 0 ? in_features : hidden_width();
    c.out_features_per_head = last ? out_features : hidden_features;
    c.num_heads = last ? output_heads : hidden_heads;
    c.concat_heads = !last;
    c.attention_slope = attention_slope;
    c.dropout_p = hidden_dropout;
    c.attention_dropout = attention_dropout;
    return c;
  }
};

inline std::string encoder_prefix(int layer) { return "encoder." + std::to_string(layer); }

inline void init_encoder(ParameterSet& ps, const EncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  for (int l = 0; l < cfg.num_layers; ++l) {
    if (cfg.layer_kind == LayerKind::Gat) {
      init_gat_layer(ps, encoder_prefix(l), cfg.gat_layer(l), rng);
    } else {
      const bool last = l == cfg.num_layers - 1;
      init_gcn_layer(ps, encoder_prefix(l), l == 0 ? cfg.in_features : cfg.hidden_width(),
                     last ? cfg.out_features : cfg.hidden_width(), rng);
    }
  }
}

struct EncoderOutput {
  Var pre_logits;   // [n x out_features], post-ELU, pre-softmax
  Var penultimate;  // [n x hidden_width], last hidden representation
};

inline EncoderOutput encoder_forward(const Graph& g, Tape& t, const EncoderConfig& cfg, ParameterSet& ps,
                                     bool train, Rng& rng) {
  cfg.validate();
  if (g.num_features() != cfg.in_features)
    throw DimensionError("encoder expects " + std::to_string(cfg.in_features) + " features, graph has " +
                         std::to_string(g.num_features()));
  Var x = ops::dropout(t.constant(g.features()), cfg.input_dropout, train, rng);
  EncoderOutput out;
  for (int l = 0; l < cfg.num_layers; ++l) {
    if (l > 0) x = ops::dropout(x, cfg.hidden_dropout, train, rng);
    if (cfg.layer_kind == LayerKind::Gat) {
      x = gat_layer_forward(x, g, ps, encoder_prefix(l), cfg.gat_layer(l), train, rng);
    } else {
      x = gcn_layer_forward(x, g, ps, encoder_prefix(l));
    }
    x = ops::elu(x);
    if (l == cfg.num_layers - 2) out.penultimate = x;
  }
  out.pre_logits = x;
  return out;
}

}  // namespace ncwr
