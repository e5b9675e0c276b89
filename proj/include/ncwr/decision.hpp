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

#include <ostream>
#include <string>

#include "ncwr/error.hpp"
#include "ncwr/types.hpp"

namespace ncwr {

/// Outcome for one node: a class index or an abstention.
class Decision {
 public:
  static Decision reject() { return Decision(-1); }
  static Decision predict(int cls) {
    if (cls < 0) throw ContractError("class index must be non-negative");
    return Decision(cls);
  }

  bool rejected() const noexcept { return cls_ < 0; }
  int cls() const {
    if (rejected()) throw ContractError("cls() on a rejection");
    return cls_;
  }
  /// Class index, or the literal REJECT.
  std::string str() const { return rejected() ? "REJECT" : std::to_string(cls_); }

  bool operator==(const Decision&) const = default;

 private:
  explicit Decision(int c) : cls_(c) {}
  int cls_;
};

inline std::ostream& operator<<(std::ostream& os, const Decision& d) { return os << d.str(); }

/// Index of the largest entry of a row; ties go to the lowest index.
template <typename Row>
int argmax_lowest(const Row& row) {
  int best = 0;
  for (Index k = 1; k < row.size(); ++k)
    if (row(k) > row(best)) best = static_cast<int>(k);
  return best;
}

}  // namespace ncwr
