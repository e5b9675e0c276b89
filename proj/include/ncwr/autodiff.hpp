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

// Reverse-mode automatic differentiation over dense matrices.
//
// A Tape records every operation in execution order; backward() replays the
// recorded rules in exact reverse. Trainable state lives in a ParameterSet
// outside the tape and is bound as a leaf for each forward pass, so one
// ParameterSet can be used by many short-lived tapes.

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ncwr/error.hpp"
#include "ncwr/types.hpp"

namespace ncwr {

/// Named tensor with an accumulated gradient.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  /// Buffers (e.g. batch-norm running statistics) are stored and
  /// checkpointed but never optimized.
  bool trainable = true;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

/// Ordered collection of parameters with value semantics.
class ParameterSet {
 public:
  Parameter& add(std::string name, Matrix init, bool trainable = true) {
    if (index_.count(name)) throw ContractError("duplicate parameter '" + name + "'");
    index_.emplace(name, params_.size());
    Parameter p{std::move(name), std::move(init), Matrix(), trainable};
    p.zero_grad();
    params_.push_back(std::move(p));
    return params_.back();
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  Parameter& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
    return params_[it->second];
  }
  const Parameter& at(const std::string& name) const {
    return const_cast<ParameterSet*>(this)->at(name);
  }

  std::vector<Parameter>& items() noexcept { return params_; }
  const std::vector<Parameter>& items() const noexcept { return params_; }
  std::size_t size() const noexcept { return params_.size(); }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  std::size_t num_scalars(bool trainable_only = true) const {
    std::size_t n = 0;
    for (const auto& p : params_)
      if (p.trainable || !trainable_only) n += static_cast<std::size_t>(p.value.size());
    return n;
  }

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

class Tape;

/// Handle to a tape entry. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  const Matrix& grad() const;
  bool requires_grad() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  /// Value of a 1x1 tensor.
  double item() const;
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* t, std::size_t id) : tape_(t), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  /// Receives the gradient of the loss w.r.t. the op's output.
  using BackwardFn = std::function<void(Tape&, const Matrix&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value) { return push(std::move(value), false, true, nullptr, {}, "constant"); }

  /// Leaf owned by the tape whose gradient accumulates across backward calls.
  Var variable(Matrix value) { return push(std::move(value), true, true, nullptr, {}, "variable"); }

  /// Binds `p` as a leaf. After backward, d(loss)/d(p) is added to p.grad.
  Var parameter(Parameter& p) {
    Var v = push(p.value, p.trainable, true, nullptr, {}, "parameter");
    nodes_[v.id_].param = p.trainable ? &p : nullptr;
    return v;
  }

  /// Records an op output. The backward rule is kept only when some input
  /// requires a gradient. Non-finite outputs raise NumericFault.
  Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn, const char* op) {
    return record(std::move(value), std::vector<Var>(inputs), std::move(fn), op);
  }
  Var record(Matrix value, const std::vector<Var>& inputs, BackwardFn fn, const char* op) {
    bool rg = false;
    for (const Var& v : inputs) {
      if (v.tape_ != this) throw ContractError(std::string(op) + ": input from another tape");
      rg = rg || nodes_[v.id_].requires_grad;
    }
    return push(std::move(value), rg, false, rg ? std::move(fn) : nullptr, inputs, op);
  }

  /// Adds `g` into the gradient slot of `v` (no-op when v needs no grad).
  void accumulate(const Var& v, const Matrix& g) {
    Node& n = nodes_[v.id_];
    if (!n.requires_grad) return;
    if (g.rows() != n.value.rows() || g.cols() != n.value.cols())
      throw DimensionError(std::string("gradient shape mismatch for ") + n.op);
    n.grad += g;
  }

  /// Reverse sweep from a scalar loss. Intermediate gradients are reset on
  /// every call; leaf and parameter gradients accumulate.
  void backward(const Var& loss) {
    if (loss.tape_ != this) throw ContractError("backward: loss from another tape");
    const Node& ln = nodes_[loss.id_];
    if (ln.value.rows() != 1 || ln.value.cols() != 1)
      throw ContractError("backward: loss must be 1x1, got " + std::to_string(ln.value.rows()) +
                          "x" + std::to_string(ln.value.cols()));
    for (auto& n : nodes_)
      if (!n.leaf && n.requires_grad) n.grad.setZero();
    if (!ln.requires_grad) return;
    nodes_[loss.id_].grad(0, 0) += 1.0;
    for (std::size_t i = loss.id_ + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.backward) n.backward(*this, n.grad);
    }
    for (auto& n : nodes_) {
      if (n.param != nullptr) {
        n.param->grad += n.grad;
        n.grad.setZero();
      }
    }
  }

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  friend class Var;

  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool leaf = false;
    Parameter* param = nullptr;
    BackwardFn backward;
    std::vector<Var> inputs;
    const char* op = "";
  };

  Var push(Matrix value, bool requires_grad, bool leaf, BackwardFn fn, std::vector<Var> inputs,
           const char* op) {
    if (!value.allFinite()) throw NumericFault(std::string("non-finite output from ") + op);
    Node n;
    if (requires_grad) n.grad = Matrix::Zero(value.rows(), value.cols());
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.leaf = leaf;
    n.backward = std::move(fn);
    n.inputs = std::move(inputs);
    n.op = op;
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
  }

  // deque keeps references to earlier nodes valid while recording.
  std::deque<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->nodes_[id_].value; }

inline const Matrix& Var::grad() const {
  static const Matrix empty;
  const auto& n = tape_->nodes_[id_];
  return n.requires_grad ? n.grad : empty;
}

inline bool Var::requires_grad() const { return tape_->nodes_[id_].requires_grad; }

inline double Var::item() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ContractError("item() on a non-scalar tensor");
  return v(0, 0);
}

}  // namespace ncwr
