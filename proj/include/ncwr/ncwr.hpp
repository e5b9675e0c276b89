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

// Umbrella header.

#pragma once

#include "ncwr/autodiff.hpp"
#include "ncwr/baselines.hpp"
#include "ncwr/checkpoint.hpp"
#include "ncwr/config.hpp"
#include "ncwr/cost.hpp"
#include "ncwr/coverage.hpp"
#include "ncwr/data.hpp"
#include "ncwr/decision.hpp"
#include "ncwr/error.hpp"
#include "ncwr/evaluate.hpp"
#include "ncwr/graph.hpp"
#include "ncwr/layers.hpp"
#include "ncwr/metrics.hpp"
#include "ncwr/model.hpp"
#include "ncwr/ops.hpp"
#include "ncwr/optim.hpp"
#include "ncwr/report.hpp"
#include "ncwr/sweep.hpp"
#include "ncwr/train.hpp"
#include "ncwr/types.hpp"
