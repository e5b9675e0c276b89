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

// Differentiable operations recorded on a Tape.
//
// Segment operations take CSR arrays: entry p in [offsets[i], offsets[i+1])
// belongs to segment (node) i and refers to neighbor neighbors[p].

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ncwr/autodiff.hpp"
#include "ncwr/error.hpp"
#include "ncwr/graph.hpp"
#include "ncwr/types.hpp"

namespace ncwr::ops {

namespace detail {

inline void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(op) + ": shapes " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
}

inline void require_segments(std::span<const NodeId> offsets, Index entries, const char* op) {
  if (offsets.empty() || offsets.back() != entries)
    throw DimensionError(std::string(op) + ": CSR offsets do not cover " +
                         std::to_string(entries) + " entries");
}

}  // namespace detail

inline Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " * " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  Matrix out = a.value() * b.value();
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (a.requires_grad()) t.accumulate(a, g * b.value().transpose());
    if (b.requires_grad()) t.accumulate(b, a.value().transpose() * g);
  }, "matmul");
}

/// a + bias, with bias of shape 1 x cols broadcast over rows.
inline Var add_bias(const Var& a, const Var& bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols())
    throw DimensionError("add_bias: bias must be 1x" + std::to_string(a.cols()));
  Matrix out = a.value().rowwise() + bias.value().row(0);
  return a.tape().record(std::move(out), {a, bias}, [a, bias](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(bias, g.colwise().sum());
  }, "add_bias");
}

inline Var add(const Var& a, const Var& b) {
  detail::require_same_shape(a, b, "add");
  return a.tape().record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  }, "add");
}

inline Var sub(const Var& a, const Var& b) {
  detail::require_same_shape(a, b, "sub");
  return a.tape().record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  }, "sub");
}

/// Elementwise product.
inline Var mul(const Var& a, const Var& b) {
  detail::require_same_shape(a, b, "mul");
  Matrix out = a.value().cwiseProduct(b.value());
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (a.requires_grad()) t.accumulate(a, g.cwiseProduct(b.value()));
    if (b.requires_grad()) t.accumulate(b, g.cwiseProduct(a.value()));
  }, "mul");
}

/// Elementwise quotient.
inline Var div(const Var& a, const Var& b) {
  detail::require_same_shape(a, b, "div");
  Matrix out = a.value().cwiseQuotient(b.value());
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (a.requires_grad()) t.accumulate(a, g.cwiseQuotient(b.value()));
    if (b.requires_grad())
      t.accumulate(b, -(g.array() * a.value().array() / b.value().array().square()).matrix());
  }, "div");
}

inline Var scale(const Var& a, double s) {
  return a.tape().record(a.value() * s, {a}, [a, s](Tape& t, const Matrix& g) {
    t.accumulate(a, g * s);
  }, "scale");
}

inline Var add_scalar(const Var& a, double s) {
  Matrix out = a.value().array() + s;
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Matrix& g) { t.accumulate(a, g); },
                         "add_scalar");
}

inline Var square(const Var& a) { return mul(a, a); }

inline Var leaky_relu(const Var& a, double slope) {
  Matrix out = a.value().unaryExpr([slope](double x) { return x > 0 ? x : slope * x; });
  return a.tape().record(std::move(out), {a}, [a, slope](Tape& t, const Matrix& g) {
    Matrix d = a.value().unaryExpr([slope](double x) { return x > 0 ? 1.0 : slope; });
    t.accumulate(a, g.cwiseProduct(d));
  }, "leaky_relu");
}

inline Var relu(const Var& a) { return leaky_relu(a, 0.0); }

/// ELU with alpha = 1.
inline Var elu(const Var& a) {
  Matrix out = a.value().unaryExpr([](double x) { return x > 0 ? x : std::expm1(x); });
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    Matrix d = a.value().unaryExpr([](double x) { return x > 0 ? 1.0 : std::exp(x); });
    t.accumulate(a, g.cwiseProduct(d));
  }, "elu");
}

inline Var sigmoid(const Var& a) {
  Matrix out = a.value().unaryExpr([](double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  });
  Matrix y = out;
  return a.tape().record(std::move(out), {a}, [a, y = std::move(y)](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct((y.array() * (1.0 - y.array())).matrix()));
  }, "sigmoid");
}

/// log(x) for strictly positive x.
inline Var log(const Var& a) {
  if ((a.value().array() <= 0.0).any()) throw NumericFault("log of a non-positive value");
  Matrix out = a.value().array().log();
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseQuotient(a.value()));
  }, "log");
}

/// Clamps into [lo, hi]; clamped entries pass no gradient.
inline Var clamp(const Var& a, double lo, double hi) {
  Matrix out = a.value().cwiseMax(lo).cwiseMin(hi);
  return a.tape().record(std::move(out), {a}, [a, lo, hi](Tape& t, const Matrix& g) {
    Matrix d = a.value().unaryExpr([lo, hi](double x) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
    t.accumulate(a, g.cwiseProduct(d));
  }, "clamp");
}

inline Var sum(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  const Index r = a.rows(), c = a.cols();
  return a.tape().record(std::move(out), {a}, [a, r, c](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix::Constant(r, c, g(0, 0)));
  }, "sum");
}

inline Var mean(const Var& a) {
  if (a.value().size() == 0) throw ContractError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

inline Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  const Index r = parts.front().rows();
  Index c = 0;
  for (const auto& p : parts) {
    if (p.rows() != r) throw DimensionError("concat_cols: row counts differ");
    c += p.cols();
  }
  Matrix out(r, c);
  Index off = 0;
  for (const auto& p : parts) {
    out.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  return parts.front().tape().record(std::move(out), parts, [parts](Tape& t, const Matrix& g) {
    Index o = 0;
    for (const auto& p : parts) {
      if (p.requires_grad()) t.accumulate(p, g.middleCols(o, p.cols()));
      o += p.cols();
    }
  }, "concat_cols");
}

inline Var slice_cols(const Var& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols())
    throw DimensionError("slice_cols: [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") outside " + std::to_string(a.cols()));
  Matrix out = a.value().middleCols(start, count);
  return a.tape().record(std::move(out), {a}, [a, start, count](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    full.middleCols(start, count) = g;
    t.accumulate(a, full);
  }, "slice_cols");
}

/// Rows of `a` selected by `idx` (repeats allowed).
inline Var gather_rows(const Var& a, std::span<const NodeId> idx) {
  Matrix out(static_cast<Index>(idx.size()), a.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= a.rows())
      throw DimensionError("gather_rows: index " + std::to_string(idx[k]) + " out of range");
    out.row(static_cast<Index>(k)) = a.value().row(idx[k]);
  }
  std::vector<NodeId> keep(idx.begin(), idx.end());
  return a.tape().record(std::move(out), {a}, [a, keep = std::move(keep)](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    for (std::size_t k = 0; k < keep.size(); ++k) full.row(keep[k]) += g.row(static_cast<Index>(k));
    t.accumulate(a, full);
  }, "gather_rows");
}

/// out[k] = a(k, cols[k]); shape n x 1.
inline Var pick(const Var& a, std::span<const int> cols) {
  if (static_cast<Index>(cols.size()) != a.rows())
    throw DimensionError("pick: one column per row required");
  Matrix out(a.rows(), 1);
  for (Index i = 0; i < a.rows(); ++i) {
    if (cols[i] < 0 || cols[i] >= a.cols())
      throw DimensionError("pick: column " + std::to_string(cols[i]) + " out of range");
    out(i, 0) = a.value()(i, cols[i]);
  }
  std::vector<int> keep(cols.begin(), cols.end());
  return a.tape().record(std::move(out), {a}, [a, keep = std::move(keep)](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    for (Index i = 0; i < a.rows(); ++i) full(i, keep[i]) = g(i, 0);
    t.accumulate(a, full);
  }, "pick");
}

namespace detail {
inline Matrix softmax_rows(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    y.row(i) = (x.row(i).array() - m).exp();
    y.row(i) /= y.row(i).sum();
  }
  return y;
}
}  // namespace detail

inline Var row_softmax(const Var& a) {
  Matrix y = detail::softmax_rows(a.value());
  Matrix saved = y;
  return a.tape().record(std::move(y), {a}, [a, y = std::move(saved)](Tape& t, const Matrix& g) {
    Matrix gy = g.cwiseProduct(y);
    Eigen::VectorXd dot = gy.rowwise().sum();
    t.accumulate(a, gy - (y.array().colwise() * dot.array()).matrix());
  }, "row_softmax");
}

/// log(softmax(a)) per row via log-sum-exp.
inline Var row_log_softmax(const Var& a) {
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    const double lse = m + std::log((x.row(i).array() - m).exp().sum());
    out.row(i) = x.row(i).array() - lse;
  }
  Matrix p = out.array().exp();
  return a.tape().record(std::move(out), {a}, [a, p = std::move(p)](Tape& t, const Matrix& g) {
    Eigen::VectorXd gs = g.rowwise().sum();
    t.accumulate(a, g - (p.array().colwise() * gs.array()).matrix());
  }, "row_log_softmax");
}

/// Softmax over each CSR segment, independently per column.
inline Var segment_softmax(const Var& e, std::span<const NodeId> offsets) {
  detail::require_segments(offsets, e.rows(), "segment_softmax");
  const Matrix& x = e.value();
  Matrix y(x.rows(), x.cols());
  const Index segs = static_cast<Index>(offsets.size()) - 1;
  for (Index s = 0; s < segs; ++s) {
    const Index b = offsets[s], len = offsets[s + 1] - offsets[s];
    if (len == 0) continue;
    auto blk = x.middleRows(b, len);
    Eigen::RowVectorXd m = blk.colwise().maxCoeff();
    Matrix ex = (blk.rowwise() - m).array().exp();
    Eigen::RowVectorXd z = ex.colwise().sum();
    y.middleRows(b, len) = ex.array().rowwise() / z.array();
  }
  std::vector<NodeId> off(offsets.begin(), offsets.end());
  Matrix saved = y;
  return e.tape().record(std::move(y), {e},
                         [e, off = std::move(off), y = std::move(saved)](Tape& t, const Matrix& g) {
    Matrix gx(g.rows(), g.cols());
    for (std::size_t s = 0; s + 1 < off.size(); ++s) {
      const Index b = off[s], len = off[s + 1] - off[s];
      if (len == 0) continue;
      auto yb = y.middleRows(b, len);
      auto gb = g.middleRows(b, len);
      Eigen::RowVectorXd dot = yb.cwiseProduct(gb).colwise().sum();
      gx.middleRows(b, len) = yb.array() * (gb.rowwise() - dot).array();
    }
    t.accumulate(e, gx);
  }, "segment_softmax");
}

/// Attention-weighted neighbor aggregation with H heads:
///   out(i, h*F + f) = sum_{p in seg(i)} w(p, h) * z(nbr(p), h*F + f)
/// w is [entries x H], z is [n x H*F], out is [segments x H*F].
inline Var segment_weighted_sum(const Var& w, const Var& z, std::span<const NodeId> offsets,
                                std::span<const NodeId> neighbors) {
  detail::require_segments(offsets, w.rows(), "segment_weighted_sum");
  if (static_cast<Index>(neighbors.size()) != w.rows())
    throw DimensionError("segment_weighted_sum: neighbor array length != weight rows");
  const Index heads = w.cols();
  if (heads == 0 || z.cols() % heads != 0)
    throw DimensionError("segment_weighted_sum: z columns not divisible by head count");
  const Index f = z.cols() / heads;
  const Index segs = static_cast<Index>(offsets.size()) - 1;
  const Matrix& wv = w.value();
  const Matrix& zv = z.value();
  Matrix out = Matrix::Zero(segs, z.cols());
  for (Index s = 0; s < segs; ++s) {
    for (Index p = offsets[s]; p < offsets[s + 1]; ++p) {
      const NodeId j = neighbors[p];
      if (j < 0 || j >= zv.rows()) throw DimensionError("segment_weighted_sum: neighbor out of range");
      for (Index h = 0; h < heads; ++h)
        out.row(s).segment(h * f, f).noalias() += wv(p, h) * zv.row(j).segment(h * f, f);
    }
  }
  std::vector<NodeId> off(offsets.begin(), offsets.end());
  std::vector<NodeId> nbr(neighbors.begin(), neighbors.end());
  return w.tape().record(std::move(out), {w, z},
                         [w, z, off = std::move(off), nbr = std::move(nbr), heads, f](Tape& t, const Matrix& g) {
    const Matrix& wv = w.value();
    const Matrix& zv = z.value();
    const bool need_w = w.requires_grad(), need_z = z.requires_grad();
    Matrix gw = need_w ? Matrix::Zero(wv.rows(), wv.cols()) : Matrix();
    Matrix gz = need_z ? Matrix::Zero(zv.rows(), zv.cols()) : Matrix();
    for (std::size_t s = 0; s + 1 < off.size(); ++s) {
      for (Index p = off[s]; p < off[s + 1]; ++p) {
        const NodeId j = nbr[p];
        for (Index h = 0; h < heads; ++h) {
          auto gs = g.row(static_cast<Index>(s)).segment(h * f, f);
          if (need_w) gw(p, h) += gs.dot(zv.row(j).segment(h * f, f));
          if (need_z) gz.row(j).segment(h * f, f).noalias() += wv(p, h) * gs;
        }
      }
    }
    if (need_w) t.accumulate(w, gw);
    if (need_z) t.accumulate(z, gz);
  }, "segment_weighted_sum");
}

/// Per-head projection: out(i, h) = z(i, h*F : (h+1)*F) . a(h, :).
/// z is [n x H*F], a is [H x F].
inline Var head_dot(const Var& z, const Var& a) {
  const Index heads = a.rows(), f = a.cols();
  if (z.cols() != heads * f) throw DimensionError("head_dot: z width != heads * features");
  Matrix out(z.rows(), heads);
  for (Index i = 0; i < z.rows(); ++i)
    for (Index h = 0; h < heads; ++h) out(i, h) = z.value().row(i).segment(h * f, f).dot(a.value().row(h));
  return z.tape().record(std::move(out), {z, a}, [z, a, heads, f](Tape& t, const Matrix& g) {
    if (z.requires_grad()) {
      Matrix gz(z.rows(), z.cols());
      for (Index i = 0; i < z.rows(); ++i)
        for (Index h = 0; h < heads; ++h) gz.row(i).segment(h * f, f) = g(i, h) * a.value().row(h);
      t.accumulate(z, gz);
    }
    if (a.requires_grad()) {
      Matrix ga = Matrix::Zero(heads, f);
      for (Index i = 0; i < z.rows(); ++i)
        for (Index h = 0; h < heads; ++h) ga.row(h) += g(i, h) * z.value().row(i).segment(h * f, f);
      t.accumulate(a, ga);
    }
  }, "head_dot");
}

/// Average of H equal-width column blocks: [n x H*F] -> [n x F].
inline Var head_mean(const Var& x, Index heads) {
  if (heads <= 0 || x.cols() % heads != 0) throw DimensionError("head_mean: width not divisible by heads");
  const Index f = x.cols() / heads;
  Matrix out = Matrix::Zero(x.rows(), f);
  for (Index h = 0; h < heads; ++h) out += x.value().middleCols(h * f, f);
  out /= static_cast<double>(heads);
  return x.tape().record(std::move(out), {x}, [x, heads, f](Tape& t, const Matrix& g) {
    Matrix gx(x.rows(), x.cols());
    for (Index h = 0; h < heads; ++h) gx.middleCols(h * f, f) = g / static_cast<double>(heads);
    t.accumulate(x, gx);
  }, "head_mean");
}

/// Inverted dropout: at train time zero each entry with probability p and
/// scale survivors by 1/(1-p); identity otherwise. Mask draws consume `rng`
/// in row-major order.
inline Var dropout(const Var& a, double p, bool train, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw ParameterError("dropout: p must be in [0, 1), got " + std::to_string(p));
  if (!train || p == 0.0) return a;
  Matrix mask(a.rows(), a.cols());
  const double keep = 1.0 / (1.0 - p);
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = uniform01(rng) < p ? 0.0 : keep;
  Matrix out = a.value().cwiseProduct(mask);
  return a.tape().record(std::move(out), {a}, [a, mask = std::move(mask)](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(mask));
  }, "dropout");
}

struct BatchNormOptions {
  double momentum = 0.9;  // running = momentum * running + (1 - momentum) * batch
  double eps = 1e-5;
};

/// Batch normalization over rows. Training mode normalizes with batch
/// statistics (biased variance) and updates the running buffers with the
/// unbiased variance; evaluation mode uses the running buffers.
inline Var batch_norm_1d(const Var& x, const Var& gamma, const Var& beta, Parameter& running_mean,
                         Parameter& running_var, bool train, const BatchNormOptions& opt = {}) {
  const Index n = x.rows(), c = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != c || beta.rows() != 1 || beta.cols() != c ||
      running_mean.value.size() != c || running_var.value.size() != c)
    throw DimensionError("batch_norm_1d: parameter width != " + std::to_string(c));
  if (train && n < 2) throw ContractError("batch_norm_1d: training needs at least 2 rows");

  RowVector mu, var;
  if (train) {
    mu = x.value().colwise().mean();
    var = (x.value().rowwise() - mu).array().square().colwise().mean();
    const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
    running_mean.value = opt.momentum * running_mean.value + (1.0 - opt.momentum) * Matrix(mu);
    running_var.value = opt.momentum * running_var.value + (1.0 - opt.momentum) * unbias * Matrix(var);
  } else {
    mu = running_mean.value.row(0);
    var = running_var.value.row(0);
  }
  RowVector inv_std = (var.array() + opt.eps).rsqrt();
  Matrix xhat = (x.value().rowwise() - mu).array().rowwise() * inv_std.array();
  Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() +
               beta.value().row(0).array();
  return x.tape().record(std::move(out), {x, gamma, beta},
                         [x, gamma, beta, xhat = std::move(xhat), inv_std, train, n](Tape& t, const Matrix& g) {
    if (gamma.requires_grad()) t.accumulate(gamma, g.cwiseProduct(xhat).colwise().sum());
    if (beta.requires_grad()) t.accumulate(beta, g.colwise().sum());
    if (!x.requires_grad()) return;
    RowVector scale_row = gamma.value().row(0).array() * inv_std.array();
    if (!train) {
      t.accumulate(x, (g.array().rowwise() * scale_row.array()).matrix());
      return;
    }
    RowVector gsum = g.colwise().sum();
    RowVector gxs = g.cwiseProduct(xhat).colwise().sum();
    Matrix gx = (static_cast<double>(n) * g).rowwise() - gsum;
    gx -= (xhat.array().rowwise() * gxs.array()).matrix();
    gx = (gx.array().rowwise() * (scale_row.array() / static_cast<double>(n))).matrix();
    t.accumulate(x, gx);
  }, "batch_norm_1d");
}

}  // namespace ncwr::ops
