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

#include <cmath>
#include <map>
#include <string>

#include "ncwr/autodiff.hpp"
#include "ncwr/error.hpp"

namespace ncwr {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::map<std::string, Matrix> first_moment;
  std::map<std::string, Matrix> second_moment;
  long step = 0;
};

/// One Adam update of every trainable parameter using its accumulated grad.
/// L2 regularization enters as weight_decay * value added to the gradient.
inline void adam_step(ParameterSet& ps, AdamState& state, double lr, double weight_decay,
                      const AdamOptions& opt = {}) {
  if (lr < 0.0) throw ParameterError("learning rate must be >= 0");
  ++state.step;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.step));
  for (auto& p : ps.items()) {
    if (!p.trainable) continue;
    auto& m = state.first_moment[p.name];
    auto& v = state.second_moment[p.name];
    if (m.size() == 0) {
      m = Matrix::Zero(p.value.rows(), p.value.cols());
      v = Matrix::Zero(p.value.rows(), p.value.cols());
    }
    Matrix g = p.grad + weight_decay * p.value;
    m = opt.beta1 * m + (1.0 - opt.beta1) * g;
    v = opt.beta2 * v + (1.0 - opt.beta2) * g.cwiseProduct(g);
    p.value.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + opt.eps);
  }
}

}  // namespace ncwr
