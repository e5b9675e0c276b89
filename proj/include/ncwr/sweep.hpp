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

// Multi-seed sweeps over one hyperparameter of a rejection method.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncwr/baselines.hpp"
#include "ncwr/config.hpp"
#include "ncwr/data.hpp"
#include "ncwr/evaluate.hpp"
#include "ncwr/metrics.hpp"
#include "ncwr/report.hpp"
#include "ncwr/train.hpp"

namespace ncwr {

/// Method swept over. Sr and Conformal post-process a vanilla model.
enum class Method { Vanilla, Cost, Cov, Sr, Conformal };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Vanilla: return "vanilla";
    case Method::Cost: return "cost";
    case Method::Cov: return "cov";
    case Method::Sr: return "sr";
    case Method::Conformal: return "conformal";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  if (s == "vanilla") return Method::Vanilla;
  if (s == "cost") return Method::Cost;
  if (s == "cov") return Method::Cov;
  if (s == "sr") return Method::Sr;
  if (s == "conformal") return Method::Conformal;
  throw ParameterError("unknown variant '" + s + "' (expected vanilla|cost|cov|sr|conformal)");
}

/// Grid used when none is given.
inline std::vector<double> default_grid(Method m) {
  switch (m) {
    case Method::Vanilla: return {1.0};
    case Method::Cost: return {0.5, 0.6, 0.7, 0.8, 0.85};
    case Method::Cov: return {0.5, 0.6, 0.7, 0.8, 0.9};
    case Method::Sr: return {0.5, 0.6, 0.7, 0.8, 0.9};
    case Method::Conformal: return {0.1, 0.125, 0.15, 0.175, 0.2};
  }
  return {};
}

struct SweepSpec {
  std::string dataset = "dataset";
  Method method = Method::Vanilla;
  /// d values, coverage targets, SR thresholds or conformal alphas.
  std::vector<double> grid;
  int num_seeds = 10;
  std::uint64_t first_seed = 0;
  int jobs = 1;
  TrainConfig base;
  /// Rejection cost charged by the 0-d-1 risk for methods without their own d.
  double report_d = 0.5;
  ScoreKind score_kind = ScoreKind::Aps;

  void validate() const {
    if (grid.empty()) throw ParameterError("sweep grid is empty");
    if (num_seeds < 1) throw ParameterError("num_seeds must be >= 1");
    if (jobs < 1) throw ParameterError("jobs must be >= 1");
    if (!(report_d > 0.0 && report_d <= 1.0)) throw ParameterError("report d must be in (0, 1]");
  }
};

/// One (grid point, seed) outcome. Metric fields are absent when the run
/// failed; `error` then holds the reason.
struct SweepRow {
  std::string dataset;
  Method method = Method::Vanilla;
  double param = 0.0;
  std::uint64_t seed = 0;
  std::optional<double> coverage;
  std::optional<double> selective_accuracy;
  std::optional<double> zero_d_one_risk;
  double d = 0.5;  // cost charged per rejection in the risk column
  int epochs = 0;
  double wallclock_s = 0.0;
  std::optional<double> tau;
  std::string error;
};

struct SweepSummary {
  double param = 0.0;
  std::size_t runs = 0;
  std::size_t failures = 0;
  MeanStd coverage, selective_accuracy, zero_d_one_risk, epochs;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // sorted by (param, seed)
  std::vector<SweepSummary> summaries;
};

/// Training config for one run of `m` at grid value `param`.
inline TrainConfig run_config(const SweepSpec& spec, double param, std::uint64_t seed) {
  TrainConfig c = spec.base;
  c.seed = seed;
  c.checkpoint_path.clear();
  c.rejection_cost.reset();
  const auto cov = c.coverage.value_or(CoverageObjectiveConfig{});
  c.coverage.reset();
  switch (spec.method) {
    case Method::Cost:
      c.variant = Variant::Cost;
      c.rejection_cost = param;
      break;
    case Method::Cov:
      c.variant = Variant::Cov;
      c.coverage = cov;
      c.coverage->target_coverage = param;
      break;
    default:
      c.variant = Variant::Vanilla;
      break;
  }
  return c;
}

/// Rule for grid value `param` on a trained model.
inline RejectRule sweep_rule(const SweepSpec& spec, double param, const Inference& inf, const Graph& g,
                             const SplitSpec& split, const RunManifest& m) {
  switch (spec.method) {
    case Method::Vanilla: return default_rule(Variant::Vanilla, std::nullopt);
    case Method::Cost: return default_rule(Variant::Cost, std::nullopt);
    case Method::Cov: return default_rule(Variant::Cov, m.tau);
    case Method::Sr: {
      RejectRule r;
      r.kind = RuleKind::SoftmaxResponse;
      r.threshold = param;
      return r;
    }
    case Method::Conformal: return conformal_rule(inf, g, split.val_idx, param, spec.score_kind);
  }
  throw ContractError("unknown method");
}

namespace detail {

inline void fill_metrics(SweepRow& row, const RejectMetrics& m) {
  row.coverage = m.coverage;
  row.selective_accuracy = m.selective_accuracy;
  row.zero_d_one_risk = m.zero_d_one_risk;
}

/// Runs one training job and evaluates every grid value it serves.
inline std::vector<SweepRow> run_job(const Dataset& ds, const SplitSpec& split, const SweepSpec& spec,
                                     const std::vector<double>& params, std::uint64_t seed) {
  std::vector<SweepRow> rows;
  for (double p : params) {
    SweepRow r;
    r.dataset = spec.dataset;
    r.method = spec.method;
    r.param = p;
    r.seed = seed;
    r.d = spec.method == Method::Cost ? p : spec.report_d;
    rows.push_back(r);
  }
  try {
    auto res = train(ds.graph, split, run_config(spec, params.front(), seed));
    const auto inf = infer(res.model, ds.graph);
    const auto y_test = labels_of(ds.graph, split.test_idx);
    for (auto& r : rows) {
      r.epochs = res.manifest.epochs_run;
      r.wallclock_s = res.manifest.wallclock_s;
      r.tau = res.manifest.tau;
      try {
        const auto rule = sweep_rule(spec, r.param, inf, ds.graph, split, res.manifest);
        const auto dec = decide(inf, split.test_idx, rule);
        fill_metrics(r, compute_metrics(dec, y_test, r.d));
      } catch (const std::exception& e) {
        r.error = e.what();
      }
    }
  } catch (const std::exception& e) {
    for (auto& r : rows) r.error = e.what();
  }
  return rows;
}

}  // namespace detail

inline std::vector<SweepSummary> summarize(const std::vector<SweepRow>& rows) {
  std::map<double, std::vector<const SweepRow*>> by_param;
  for (const auto& r : rows) by_param[r.param].push_back(&r);
  std::vector<SweepSummary> out;
  for (const auto& [p, rs] : by_param) {
    SweepSummary s;
    s.param = p;
    std::vector<double> cov, acc, risk, ep;
    for (const auto* r : rs) {
      ++s.runs;
      if (!r->error.empty() || !r->coverage) {
        ++s.failures;
        continue;
      }
      cov.push_back(*r->coverage);
      if (r->selective_accuracy) acc.push_back(*r->selective_accuracy);
      risk.push_back(*r->zero_d_one_risk);
      ep.push_back(r->epochs);
    }
    s.coverage = mean_std(cov);
    s.selective_accuracy = mean_std(acc);
    s.zero_d_one_risk = mean_std(risk);
    s.epochs = mean_std(ep);
    out.push_back(s);
  }
  return out;
}

/// Called after each finished job with (done, total).
using SweepProgress = std::function<void(std::size_t, std::size_t)>;

/// Trains and evaluates every grid point for every seed. Individual failures
/// are recorded in their rows and do not stop the sweep.
inline SweepResult run_sweep(const Dataset& ds, const SplitSpec& split, const SweepSpec& spec,
                             const SweepProgress& progress = {}) {
  spec.validate();
  check_split(ds.graph, split);
  struct Job {
    std::vector<double> params;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  const bool shared_model = spec.method == Method::Sr || spec.method == Method::Conformal ||
                            spec.method == Method::Vanilla;
  for (int s = 0; s < spec.num_seeds; ++s) {
    const std::uint64_t seed = spec.first_seed + static_cast<std::uint64_t>(s);
    if (shared_model) {
      jobs.push_back({spec.grid, seed});
    } else {
      for (double p : spec.grid) jobs.push_back({{p}, seed});
    }
  }

  std::vector<std::vector<SweepRow>> slots(jobs.size());
  std::atomic<std::size_t> next{0}, done{0};
  std::mutex progress_mu;
  auto worker = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
      slots[j] = detail::run_job(ds, split, spec, jobs[j].params, jobs[j].seed);
      const std::size_t finished = done.fetch_add(1) + 1;
      if (progress) {
        std::lock_guard lock(progress_mu);
        progress(finished, jobs.size());
      }
    }
  };
  const auto nthreads = std::min<std::size_t>(static_cast<std::size_t>(spec.jobs), jobs.size());
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  SweepResult res;
  for (auto& s : slots)
    for (auto& r : s) res.rows.push_back(std::move(r));
  std::stable_sort(res.rows.begin(), res.rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return a.param != b.param ? a.param < b.param : a.seed < b.seed;
  });
  res.summaries = summarize(res.rows);
  return res;
}

inline constexpr const char* kResultsHeader =
    "dataset,variant,param,seed,coverage,selective_accuracy,zero_d_one_risk,epochs,wallclock_s";

inline void write_results_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kResultsHeader << '\n';
  for (const auto& r : rows)
    out << csv_field(r.dataset) << ',' << to_string(r.method) << ',' << fmt_double(r.param) << ',' << r.seed
        << ',' << fmt_optional(r.coverage) << ',' << fmt_optional(r.selective_accuracy) << ','
        << fmt_optional(r.zero_d_one_risk) << ',' << r.epochs << ',' << fmt_double(r.wallclock_s) << '\n';
}

inline void write_summary_csv(std::ostream& out, const SweepSpec& spec, const std::vector<SweepSummary>& ss) {
  out << "dataset,variant,param,runs,failures,coverage_mean,coverage_std,selective_accuracy_mean,"
         "selective_accuracy_std,zero_d_one_risk_mean,zero_d_one_risk_std,epochs_mean\n";
  for (const auto& s : ss) {
    const bool ok = s.coverage.count > 0, acc = s.selective_accuracy.count > 0;
    auto v = [](bool have, double x) { return have ? fmt_double(x) : std::string(); };
    out << csv_field(spec.dataset) << ',' << to_string(spec.method) << ',' << fmt_double(s.param) << ',' << s.runs
        << ',' << s.failures << ',' << v(ok, s.coverage.mean) << ',' << v(ok, s.coverage.stddev) << ','
        << v(acc, s.selective_accuracy.mean) << ',' << v(acc, s.selective_accuracy.stddev) << ','
        << v(ok, s.zero_d_one_risk.mean) << ',' << v(ok, s.zero_d_one_risk.stddev) << ','
        << v(ok, s.epochs.mean) << '\n';
  }
}

inline nlohmann::json sweep_manifest(const SweepSpec& spec, const SplitSpec& split, const SweepResult& res) {
  nlohmann::json errors = nlohmann::json::array();
  for (const auto& r : res.rows)
    if (!r.error.empty()) errors.push_back({{"param", r.param}, {"seed", r.seed}, {"error", r.error}});
  nlohmann::json taus = nlohmann::json::array();
  for (const auto& r : res.rows)
    if (r.tau) taus.push_back({{"param", r.param}, {"seed", r.seed}, {"tau", *r.tau}});
  return {{"dataset", spec.dataset},
          {"variant", to_string(spec.method)},
          {"grid", spec.grid},
          {"num_seeds", spec.num_seeds},
          {"first_seed", spec.first_seed},
          {"jobs", spec.jobs},
          {"report_d", spec.report_d},
          {"score_kind", to_string(spec.score_kind)},
          {"base_config", to_json(spec.base)},
          {"split_sizes",
           {{"train", split.train_idx.size()}, {"val", split.val_idx.size()}, {"test", split.test_idx.size()}}},
          {"calibrated_tau", taus},
          {"errors", errors}};
}

/// Writes results.csv, summary.csv, curve.svg and manifest.json into `dir`.
inline void write_sweep_outputs(const std::filesystem::path& dir, const SweepSpec& spec, const SplitSpec& split,
                                const SweepResult& res) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_for_write(dir / "results.csv");
    write_results_csv(out, res.rows);
  }
  {
    auto out = open_for_write(dir / "summary.csv");
    write_summary_csv(out, spec, res.summaries);
  }
  CurveSeries cs{to_string(spec.method), {}, {}};
  for (const auto& s : res.summaries)
    if (s.selective_accuracy.count > 0) {
      cs.x.push_back(s.coverage.mean);
      cs.y.push_back(s.selective_accuracy.mean);
    }
  {
    auto out = open_for_write(dir / "curve.svg");
    out << coverage_accuracy_svg({cs}, spec.dataset + ": coverage vs selective accuracy");
  }
  {
    auto out = open_for_write(dir / "manifest.json");
    out << sweep_manifest(spec, split, res).dump(2) << '\n';
  }
}

}  // namespace ncwr
