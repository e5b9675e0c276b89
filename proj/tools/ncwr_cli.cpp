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

// ncwr command-line tool.
//
//   ncwr ingest             load a dataset, write graph.json + manifest.json
//   ncwr knn-graph          build a KNN graph from a CSV table
//   ncwr train              train one model, write checkpoint.json
//   ncwr calibrate          recompute tau (cov) or qhat (conformal) on validation
//   ncwr eval               evaluate a checkpoint under a rejection rule
//   ncwr sweep              grid x seeds experiment runner
//   ncwr export-embeddings  penultimate representations + decisions
//
// Every command reads an optional JSON config (--config); flags override it.
// Each output directory receives the resolved settings as config.json.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ncwr/ncwr.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ncwr;

namespace {

struct Settings {
  std::string command;
  std::string dataset;
  std::string variant = "vanilla";
  std::uint64_t split_seed = 0;
  TrainConfig train;
  std::optional<double> d, coverage, alpha, threshold, tau;
  std::string score = "aps";
  double report_d = 0.5;
  int seeds = 10;
  std::uint64_t first_seed = 0;
  int jobs = 1;
  std::vector<double> grid;
  std::string checkpoint;
  int knn_k = 5;
  bool row_normalize = true;
  std::string out = "ncwr_out";
  bool variant_set = false;  // variant came from a flag or the config
};

json opt_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

json to_json(const Settings& s) {
  return {{"command", s.command},         {"dataset", s.dataset},
          {"variant", s.variant},         {"split_seed", s.split_seed},
          {"train", ncwr::to_json(s.train)}, {"d", opt_json(s.d)},
          {"coverage", opt_json(s.coverage)}, {"alpha", opt_json(s.alpha)},
          {"threshold", opt_json(s.threshold)}, {"tau", opt_json(s.tau)},
          {"score", s.score},             {"report_d", s.report_d},
          {"seeds", s.seeds},             {"first_seed", s.first_seed},
          {"jobs", s.jobs},               {"grid", s.grid},
          {"checkpoint", s.checkpoint},   {"knn_k", s.knn_k},
          {"row_normalize", s.row_normalize}, {"out", s.out}};
}

void read_opt(const json& j, const char* key, std::optional<double>& dst) {
  if (j.contains(key) && !j.at(key).is_null()) dst = j.at(key).get<double>();
}

/// Applies a config document. Unknown keys are rejected so typos surface.
void apply_config(Settings& s, const json& j) {
  static const std::vector<std::string> known{
      "command", "dataset", "variant",  "split_seed", "train",      "d",    "coverage",   "alpha",
      "threshold", "tau",   "score",    "report_d",   "seeds",      "first_seed", "jobs", "grid",
      "checkpoint", "knn_k", "row_normalize", "out"};
  if (!j.is_object()) throw ParameterError("config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end()) throw ParameterError("unknown config key '" + k + "'");
  s.dataset = j.value("dataset", s.dataset);
  if (j.contains("variant")) {
    s.variant = j.at("variant").get<std::string>();
    s.variant_set = true;
  }
  s.split_seed = j.value("split_seed", s.split_seed);
  if (j.contains("train")) s.train = train_config_from_json(j.at("train"), s.train);
  read_opt(j, "d", s.d);
  read_opt(j, "coverage", s.coverage);
  read_opt(j, "alpha", s.alpha);
  read_opt(j, "threshold", s.threshold);
  read_opt(j, "tau", s.tau);
  s.score = j.value("score", s.score);
  s.report_d = j.value("report_d", s.report_d);
  s.seeds = j.value("seeds", s.seeds);
  s.first_seed = j.value("first_seed", s.first_seed);
  s.jobs = j.value("jobs", s.jobs);
  if (j.contains("grid")) s.grid = j.at("grid").get<std::vector<double>>();
  s.checkpoint = j.value("checkpoint", s.checkpoint);
  s.knn_k = j.value("knn_k", s.knn_k);
  s.row_normalize = j.value("row_normalize", s.row_normalize);
  s.out = j.value("out", s.out);
}

/// Flag values; unset flags leave the config untouched.
struct Flags {
  std::string config;
  std::optional<std::string> dataset, variant, score, checkpoint, out;
  std::optional<double> d, coverage, alpha, threshold, tau, report_d, lr, weight_decay;
  std::optional<int> seeds, jobs, max_epochs, patience, knn_k;
  std::optional<std::uint64_t> seed, split_seed;
  std::vector<double> grid;
  bool no_row_normalize = false;
};

Settings resolve(const std::string& command, const Flags& f) {
  Settings s;
  s.command = command;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw DataError("cannot open config " + f.config);
    apply_config(s, json::parse(in));
  }
  if (f.dataset) s.dataset = *f.dataset;
  if (f.variant) {
    s.variant = *f.variant;
    s.variant_set = true;
  }
  if (f.score) s.score = *f.score;
  if (f.checkpoint) s.checkpoint = *f.checkpoint;
  if (f.out) s.out = *f.out;
  if (f.d) s.d = f.d;
  if (f.coverage) s.coverage = f.coverage;
  if (f.alpha) s.alpha = f.alpha;
  if (f.threshold) s.threshold = f.threshold;
  if (f.tau) s.tau = f.tau;
  if (f.report_d) s.report_d = *f.report_d;
  if (f.lr) s.train.learning_rate = *f.lr;
  if (f.weight_decay) s.train.weight_decay = *f.weight_decay;
  if (f.max_epochs) s.train.max_epochs = *f.max_epochs;
  if (f.patience) s.train.patience = *f.patience;
  if (f.seed) {
    s.train.seed = *f.seed;
    s.first_seed = *f.seed;
  }
  if (f.split_seed) s.split_seed = *f.split_seed;
  if (f.seeds) s.seeds = *f.seeds;
  if (f.jobs) s.jobs = *f.jobs;
  if (f.knn_k) s.knn_k = *f.knn_k;
  if (!f.grid.empty()) s.grid = f.grid;
  if (f.no_row_normalize) s.row_normalize = false;
  if (s.dataset.empty()) throw ParameterError("--dataset is required");
  return s;
}

void write_json(const fs::path& p, const json& j) {
  auto out = open_for_write(p);
  out << j.dump(2) << '\n';
}

void freeze(const Settings& s) { write_json(fs::path(s.out) / "config.json", to_json(s)); }

Dataset load(const Settings& s) {
  CitationOptions o;
  o.row_normalize = s.row_normalize;
  return load_dataset(s.dataset, o, s.knn_k);
}

/// Training config for `variant` with the d / coverage flags folded in.
TrainConfig training_config(const Settings& s) {
  TrainConfig c = s.train;
  const Method m = method_from_string(s.variant);
  c.variant = m == Method::Cost ? Variant::Cost : m == Method::Cov ? Variant::Cov : Variant::Vanilla;
  json j = {{"variant", to_string(c.variant)}};
  c = train_config_from_json(j, c);
  if (c.variant == Variant::Cost && s.d) c.rejection_cost = *s.d;
  if (c.variant == Variant::Cov && s.coverage) c.coverage->target_coverage = *s.coverage;
  c.validate();
  return c;
}

// ---------------------------------------------------------------- commands

int cmd_ingest(const Settings& s) {
  const Dataset ds = load(s);
  fs::create_directories(s.out);
  write_json(fs::path(s.out) / "graph.json", graph_to_json(ds));
  write_json(fs::path(s.out) / "manifest.json", dataset_manifest(ds));
  freeze(s);
  std::cout << dataset_manifest(ds).dump() << '\n';
  return 0;
}

int cmd_knn(const Settings& s) {
  if (fs::path(s.dataset).extension() != ".csv") throw ParameterError("knn-graph expects a .csv table");
  const Dataset ds = knn_dataset_from_table(read_table_csv(fs::path(s.dataset)), s.knn_k, fs::path(s.dataset).stem());
  fs::create_directories(s.out);
  write_json(fs::path(s.out) / "graph.json", graph_to_json(ds));
  write_json(fs::path(s.out) / "manifest.json", dataset_manifest(ds));
  freeze(s);
  std::cout << dataset_manifest(ds).dump() << '\n';
  return 0;
}

int cmd_train(Settings s) {
  const Dataset ds = load(s);
  const SplitSpec split = default_split(ds, s.split_seed);
  TrainConfig cfg = training_config(s);
  cfg.checkpoint_path = (fs::path(s.out) / "checkpoint.json").string();
  s.train = cfg;
  fs::create_directories(s.out);
  freeze(s);
  auto log = open_for_write(fs::path(s.out) / "training_log.csv");
  log << "epoch,train_loss,val_loss\n";
  auto res = train(ds.graph, split, cfg, [&](int epoch, double tl, double vl) {
    log << epoch << ',' << fmt_double(tl) << ',' << fmt_double(vl) << '\n';
  });
  json man = to_json(res.manifest);
  man["dataset"] = dataset_manifest(ds);
  man["split_seed"] = s.split_seed;
  write_json(fs::path(s.out) / "manifest.json", man);
  std::cout << "trained " << to_string(cfg.variant) << " for " << res.manifest.epochs_run << " epochs (best "
            << res.manifest.best_epoch << ", val loss " << res.manifest.best_val_loss << ")";
  if (res.manifest.tau) std::cout << ", tau " << *res.manifest.tau;
  std::cout << "\ncheckpoint: " << cfg.checkpoint_path << '\n';
  return 0;
}

struct Loaded {
  Dataset ds;
  SplitSpec split;
  Checkpoint ckpt;
  Model model;
  Inference inf;
};

Loaded load_trained(const Settings& s) {
  if (s.checkpoint.empty()) throw ParameterError("--checkpoint is required");
  Dataset ds = load(s);
  SplitSpec split = default_split(ds, s.split_seed);
  Checkpoint c = load_checkpoint(s.checkpoint);
  if (c.num_classes != ds.graph.num_classes() || c.config.encoder.in_features != ds.graph.num_features())
    throw DimensionError("checkpoint does not match dataset " + s.dataset);
  Model m = model_from_checkpoint(c);
  Inference inf = infer(m, ds.graph);
  return {std::move(ds), std::move(split), std::move(c), std::move(m), std::move(inf)};
}

/// Rule named by --variant; defaults to the checkpoint's own rule.
RejectRule rule_for(const Settings& s, const Loaded& L, bool variant_given) {
  const Method m = variant_given ? method_from_string(s.variant)
                                 : method_from_string(to_string(L.ckpt.config.variant));
  switch (m) {
    case Method::Vanilla: return default_rule(Variant::Vanilla, std::nullopt);
    case Method::Cost:
      if (L.ckpt.config.variant != Variant::Cost) throw ParameterError("cost rule needs a cost checkpoint");
      return default_rule(Variant::Cost, std::nullopt);
    case Method::Cov: {
      if (L.ckpt.config.variant != Variant::Cov) throw ParameterError("cov rule needs a cov checkpoint");
      std::optional<double> tau = s.tau ? s.tau : L.ckpt.tau;
      if (s.coverage && !s.tau) {
        std::vector<double> v;
        for (NodeId i : L.split.val_idx) v.push_back(L.inf.selection[static_cast<std::size_t>(i)]);
        tau = calibrate_threshold(v, *s.coverage);
      }
      return default_rule(Variant::Cov, tau);
    }
    case Method::Sr: {
      RejectRule r;
      r.kind = RuleKind::SoftmaxResponse;
      r.threshold = s.threshold.value_or(0.5);
      return r;
    }
    case Method::Conformal:
      return conformal_rule(L.inf, L.ds.graph, L.split.val_idx, s.alpha.value_or(0.1), score_kind_from_string(s.score));
  }
  throw ContractError("unknown variant");
}

int cmd_eval(const Settings& s, bool variant_given) {
  const Loaded L = load_trained(s);
  const RejectRule rule = rule_for(s, L, variant_given);
  const auto dec = decide(L.inf, L.split.test_idx, rule);
  const double d = L.ckpt.config.variant == Variant::Cost && !variant_given ? *L.ckpt.config.rejection_cost
                                                                           : s.d.value_or(s.report_d);
  const auto m = compute_metrics(dec, labels_of(L.ds.graph, L.split.test_idx), d);
  fs::create_directories(s.out);
  freeze(s);
  {
    auto out = open_for_write(fs::path(s.out) / "predictions.csv");
    write_predictions_csv(out, L.inf, L.ds.graph, L.split.test_idx, dec, L.ds.node_names);
  }
  SweepRow row;
  row.dataset = L.ds.name;
  row.method = variant_given ? method_from_string(s.variant) : method_from_string(to_string(L.ckpt.config.variant));
  row.param = rule.kind == RuleKind::SoftmaxResponse ? rule.threshold
              : rule.kind == RuleKind::Conformal     ? rule.conformal->alpha
              : rule.kind == RuleKind::Coverage      ? rule.tau
                                                     : d;
  row.seed = L.ckpt.config.seed;
  row.coverage = m.coverage;
  row.selective_accuracy = m.selective_accuracy;
  row.zero_d_one_risk = m.zero_d_one_risk;
  {
    auto out = open_for_write(fs::path(s.out) / "results.csv");
    write_results_csv(out, {row});
  }
  json man = {{"checkpoint", s.checkpoint},
              {"rule", to_string(row.method)},
              {"d", d},
              {"coverage", m.coverage},
              {"selective_accuracy", opt_json(m.selective_accuracy)},
              {"zero_d_one_risk", m.zero_d_one_risk},
              {"accepted", m.accepted},
              {"rejected", m.rejected},
              {"correct", m.correct}};
  if (rule.kind == RuleKind::Coverage) man["tau"] = rule.tau;
  if (rule.conformal) man["qhat"] = rule.conformal->qhat;
  write_json(fs::path(s.out) / "manifest.json", man);
  std::cout << "coverage " << m.coverage << ", selective accuracy "
            << (m.selective_accuracy ? fmt_double(*m.selective_accuracy) : std::string("n/a")) << ", 0-d-1 risk "
            << m.zero_d_one_risk << " (d=" << d << ")\n";
  return 0;
}

int cmd_calibrate(const Settings& s, bool variant_given) {
  const Loaded L = load_trained(s);
  fs::create_directories(s.out);
  freeze(s);
  json man = {{"checkpoint", s.checkpoint}};
  const bool conformal = variant_given && method_from_string(s.variant) == Method::Conformal;
  if (conformal) {
    auto r = conformal_rule(L.inf, L.ds.graph, L.split.val_idx, s.alpha.value_or(0.1), score_kind_from_string(s.score));
    man["alpha"] = r.conformal->alpha;
    man["score"] = to_string(r.conformal->score_kind);
    man["qhat"] = r.conformal->qhat;
    man["calibration_size"] = r.conformal->calibration_size;
    std::cout << "qhat " << r.conformal->qhat << '\n';
  } else {
    if (L.ckpt.config.variant != Variant::Cov) throw ParameterError("calibrate needs a cov checkpoint or --variant conformal");
    const double c = s.coverage.value_or(L.ckpt.config.coverage->target_coverage);
    std::vector<double> v;
    for (NodeId i : L.split.val_idx) v.push_back(L.inf.selection[static_cast<std::size_t>(i)]);
    Checkpoint out = L.ckpt;
    out.tau = calibrate_threshold(v, c);
    save_checkpoint(fs::path(s.out) / "checkpoint.json", out);
    man["target_coverage"] = c;
    man["tau"] = *out.tau;
    man["calibrated_checkpoint"] = (fs::path(s.out) / "checkpoint.json").string();
    std::cout << "tau " << *out.tau << '\n';
  }
  write_json(fs::path(s.out) / "manifest.json", man);
  return 0;
}

int cmd_sweep(Settings s) {
  const Dataset ds = load(s);
  const SplitSpec split = default_split(ds, s.split_seed);
  SweepSpec spec;
  spec.dataset = ds.name;
  spec.method = method_from_string(s.variant);
  spec.grid = s.grid.empty() ? default_grid(spec.method) : s.grid;
  spec.num_seeds = s.seeds;
  spec.first_seed = s.first_seed;
  spec.jobs = s.jobs;
  spec.base = s.train;
  spec.report_d = s.report_d;
  spec.score_kind = score_kind_from_string(s.score);
  spec.validate();
  s.grid = spec.grid;
  fs::create_directories(s.out);
  freeze(s);
  auto res = run_sweep(ds, split, spec, [](std::size_t done, std::size_t total) {
    std::cerr << "\rjobs " << done << "/" << total << std::flush;
  });
  std::cerr << '\n';
  write_sweep_outputs(s.out, spec, split, res);
  write_summary_csv(std::cout, spec, res.summaries);
  std::size_t failed = 0;
  for (const auto& r : res.rows) failed += !r.error.empty();
  if (failed) std::cerr << failed << " run(s) failed; see manifest.json\n";
  return 0;
}

int cmd_embeddings(const Settings& s, bool variant_given) {
  const Loaded L = load_trained(s);
  const auto dec = decide(L.inf, L.split.test_idx, rule_for(s, L, variant_given));
  fs::create_directories(s.out);
  freeze(s);
  auto out = open_for_write(fs::path(s.out) / "embeddings.csv");
  write_embeddings_csv(out, L.inf, L.ds.graph, L.split.test_idx, dec);
  std::cout << "wrote " << L.split.test_idx.size() << " rows to " << (fs::path(s.out) / "embeddings.csv").string()
            << '\n';
  return 0;
}

// ---------------------------------------------------------------- parsing

void common_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
  sub->add_option("--dataset", f.dataset, "citation directory, .csv table or graph .json");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--split-seed", f.split_seed, "seed of the train/val/test split");
  sub->add_flag("--no-row-normalize", f.no_row_normalize, "keep raw citation features");
  sub->add_option("--knn-k", f.knn_k, "neighbours per node for tabular data")->check(CLI::PositiveNumber);
}

void variant_flag(CLI::App* sub, Flags& f) {
  sub->add_option("--variant", f.variant, "vanilla | cost | cov | sr | conformal")
      ->check(CLI::IsMember({"vanilla", "cost", "cov", "sr", "conformal"}));
}

void rule_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--d", f.d, "rejection cost in (0, 1]");
  sub->add_option("--coverage", f.coverage, "target coverage in (0, 1]");
  sub->add_option("--alpha", f.alpha, "conformal miscoverage level");
  sub->add_option("--threshold", f.threshold, "softmax-response threshold");
  sub->add_option("--score", f.score, "conformal score: aps | tps")->check(CLI::IsMember({"aps", "tps"}));
  sub->add_option("--report-d", f.report_d, "d charged by the 0-d-1 risk of non-cost rules");
}

void train_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--seed", f.seed, "initialization seed (first seed for sweeps)");
  sub->add_option("--lr", f.lr, "learning rate");
  sub->add_option("--weight-decay", f.weight_decay, "L2 weight decay");
  sub->add_option("--max-epochs", f.max_epochs, "epoch limit");
  sub->add_option("--patience", f.patience, "early-stopping patience");
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const ParameterError*>(&e) || dynamic_cast<const CLI::Error*>(&e)) return 2;
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const DataError*>(&e) ||
      dynamic_cast<const EmptyDatasetError*>(&e) || dynamic_cast<const CapacityError*>(&e))
    return 3;
  if (dynamic_cast<const NumericFault*>(&e)) return 4;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Node classification with a reject option on graphs"};
  app.require_subcommand(1);
  Flags f;

  auto* ingest = app.add_subcommand("ingest", "load a dataset and write graph.json and manifest.json");
  common_flags(ingest, f);

  auto* knn = app.add_subcommand("knn-graph", "build a KNN graph from a CSV table");
  common_flags(knn, f);

  auto* tr = app.add_subcommand("train", "train one model");
  common_flags(tr, f);
  variant_flag(tr, f);
  rule_flags(tr, f);
  train_flags(tr, f);

  auto* cal = app.add_subcommand("calibrate", "recompute tau or the conformal quantile on validation");
  common_flags(cal, f);
  variant_flag(cal, f);
  rule_flags(cal, f);
  cal->add_option("--checkpoint", f.checkpoint, "checkpoint.json")->check(CLI::ExistingFile);

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  common_flags(ev, f);
  variant_flag(ev, f);
  rule_flags(ev, f);
  ev->add_option("--checkpoint", f.checkpoint, "checkpoint.json")->check(CLI::ExistingFile);
  ev->add_option("--tau", f.tau, "selection threshold for cov checkpoints");

  auto* sw = app.add_subcommand("sweep", "train and evaluate a grid over several seeds");
  common_flags(sw, f);
  variant_flag(sw, f);
  rule_flags(sw, f);
  train_flags(sw, f);
  sw->add_option("--grid", f.grid, "grid values (default depends on the variant)")->delimiter(',');
  sw->add_option("--seeds", f.seeds, "number of seeds")->check(CLI::PositiveNumber);
  sw->add_option("--jobs", f.jobs, "concurrent training jobs")->check(CLI::PositiveNumber);

  auto* emb = app.add_subcommand("export-embeddings", "write penultimate representations of test nodes");
  common_flags(emb, f);
  variant_flag(emb, f);
  rule_flags(emb, f);
  emb->add_option("--checkpoint", f.checkpoint, "checkpoint.json")->check(CLI::ExistingFile);
  emb->add_option("--tau", f.tau, "selection threshold for cov checkpoints");

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* sub = app.get_subcommands().front();
    const Settings s = resolve(sub->get_name(), f);
    const bool variant_given = s.variant_set;
    if (sub == ingest) return cmd_ingest(s);
    if (sub == knn) return cmd_knn(s);
    if (sub == tr) return cmd_train(s);
    if (sub == cal) return cmd_calibrate(s, variant_given);
    if (sub == ev) return cmd_eval(s, variant_given);
    if (sub == sw) return cmd_sweep(s);
    if (sub == emb) return cmd_embeddings(s, variant_given);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  }
  return 0;
}
