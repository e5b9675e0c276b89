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

// Dataset ingestion: citation-network text files, tabular CSV, KNN graphs
// and split generation.

#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncwr/error.hpp"
#include "ncwr/graph.hpp"
#include "ncwr/types.hpp"

namespace ncwr {

struct CitationOptions {
  /// Scale each feature row to sum 1 (rows summing to 0 are left alone).
  bool row_normalize = true;
};

/// A graph plus the bookkeeping produced while reading it.
struct Dataset {
  std::string name;
  Graph graph;
  std::vector<std::string> label_names;  // index = class id
  std::vector<std::string> node_names;   // index = node id; may be empty
  std::size_t dropped_citations = 0;
  /// "citation" or "tabular"; decides the default split policy.
  std::string kind = "citation";
};

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view tok, double& out) {
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end;
}

inline bool parse_int(std::string_view tok, long long& out) {
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end;
}

inline std::ifstream open_or_throw(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot open " + p.string());
  return in;
}

}  // namespace detail

/// Reads a `<id> <f_1> ... <f_F> <label>` content file and a
/// `<id_a> <id_b>` cites file into an undirected, self-looped graph.
///
/// Label names map to class ids in first-appearance order. Citations that
/// mention an id absent from the content file are dropped and counted.
inline Dataset load_citation_dataset(std::istream& content, std::istream& cites,
                                     const CitationOptions& opts = {},
                                     const std::string& content_name = "content",
                                     const std::string& cites_name = "cites") {
  Dataset ds;
  ds.kind = "citation";
  std::unordered_map<std::string, NodeId> id_of;
  std::unordered_map<std::string, int> class_of;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  long long width = -1;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(content, line)) {
    ++lineno;
    auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() < 2)
      throw ParseError(content_name, lineno, "expected '<node_id> <features...> <label>'");
    const long long f = static_cast<long long>(toks.size()) - 2;
    if (width < 0) {
      width = f;
    } else if (f != width) {
      throw DimensionError(content_name + ":" + std::to_string(lineno) + ": " +
                           std::to_string(f) + " features, expected " + std::to_string(width));
    }
    std::string node(toks.front());
    if (id_of.count(node)) throw ParseError(content_name, lineno, "duplicate node id '" + node + "'");
    std::vector<double> row(static_cast<std::size_t>(f));
    for (long long c = 0; c < f; ++c) {
      if (!detail::parse_double(toks[static_cast<std::size_t>(c + 1)], row[c]))
        throw ParseError(content_name, lineno,
                         "bad feature value '" + std::string(toks[c + 1]) + "'");
      if (!std::isfinite(row[c])) throw ParseError(content_name, lineno, "non-finite feature");
    }
    std::string label(toks.back());
    auto [it, inserted] = class_of.try_emplace(label, static_cast<int>(ds.label_names.size()));
    if (inserted) ds.label_names.push_back(label);
    id_of.emplace(node, static_cast<NodeId>(rows.size()));
    ds.node_names.push_back(std::move(node));
    rows.push_back(std::move(row));
    labels.push_back(it->second);
  }
  if (rows.empty()) throw EmptyDatasetError(content_name + ": no nodes");

  std::vector<Edge> edges;
  lineno = 0;
  while (std::getline(cites, line)) {
    ++lineno;
    auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() != 2) throw ParseError(cites_name, lineno, "expected '<citing_id> <cited_id>'");
    auto a = id_of.find(std::string(toks[0]));
    auto b = id_of.find(std::string(toks[1]));
    if (a == id_of.end() || b == id_of.end()) {
      ++ds.dropped_citations;
      continue;
    }
    edges.emplace_back(a->second, b->second);
  }

  const auto n = static_cast<Index>(rows.size());
  Matrix x(n, width);
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < width; ++c) x(i, c) = rows[i][c];
    if (opts.row_normalize) {
      const double s = x.row(i).sum();
      if (s != 0.0) x.row(i) /= s;
    }
  }
  ds.graph = Graph::from_edges(n, edges, std::move(x), std::move(labels),
                               static_cast<int>(ds.label_names.size()));
  return ds;
}

inline Dataset load_citation_dataset(const std::filesystem::path& content_path,
                                     const std::filesystem::path& cites_path,
                                     const CitationOptions& opts = {}) {
  auto content = detail::open_or_throw(content_path);
  auto cites = detail::open_or_throw(cites_path);
  Dataset ds = load_citation_dataset(content, cites, opts, content_path.string(), cites_path.string());
  ds.name = content_path.stem().string();
  return ds;
}

/// Planetoid-style split: `per_class` training nodes from every class, then
/// `num_val` and `num_test` nodes from the remaining labeled nodes. Index
/// sets are returned sorted.
inline SplitSpec make_standard_split(const Graph& g, std::uint64_t seed, int per_class = 20,
                                     int num_val = 500, int num_test = 1000) {
  const int k = g.num_classes();
  std::vector<std::vector<NodeId>> by_class(static_cast<std::size_t>(k));
  std::size_t labeled = 0;
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    const int y = g.label(i);
    if (y >= 0 && y < k) {
      by_class[y].push_back(i);
      ++labeled;
    }
  }
  for (int c = 0; c < k; ++c) {
    if (static_cast<int>(by_class[c].size()) < per_class)
      throw CapacityError("class " + std::to_string(c) + " has " +
                          std::to_string(by_class[c].size()) + " labeled nodes, need " +
                          std::to_string(per_class));
  }
  const std::size_t needed = static_cast<std::size_t>(per_class) * k + num_val + num_test;
  if (labeled < needed)
    throw CapacityError(std::to_string(labeled) + " labeled nodes, need " + std::to_string(needed));

  Rng rng(seed);
  SplitSpec s;
  std::vector<char> used(static_cast<std::size_t>(g.num_nodes()), 0);
  for (int c = 0; c < k; ++c) {
    auto pool = by_class[c];
    portable_shuffle(pool.begin(), pool.end(), rng);
    for (int t = 0; t < per_class; ++t) {
      s.train_idx.push_back(pool[t]);
      used[pool[t]] = 1;
    }
  }
  std::vector<NodeId> rest;
  for (NodeId i = 0; i < g.num_nodes(); ++i)
    if (!used[i] && g.label(i) >= 0 && g.label(i) < k) rest.push_back(i);
  portable_shuffle(rest.begin(), rest.end(), rng);
  s.val_idx.assign(rest.begin(), rest.begin() + num_val);
  s.test_idx.assign(rest.begin() + num_val, rest.begin() + num_val + num_test);
  std::sort(s.train_idx.begin(), s.train_idx.end());
  std::sort(s.val_idx.begin(), s.val_idx.end());
  std::sort(s.test_idx.begin(), s.test_idx.end());
  return s;
}

/// 85/15 train/test split with 10% of the training part held out for
/// validation. Sizes use floor; remainders stay in train.
inline SplitSpec make_tabular_split(std::size_t n, std::uint64_t seed) {
  if (n < 20) throw ContractError("tabular split needs n >= 20, got " + std::to_string(n));
  const std::size_t num_test = (15 * n) / 100;
  const std::size_t num_val = (n - num_test) / 10;
  std::vector<NodeId> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<NodeId>(i);
  Rng rng(seed);
  portable_shuffle(perm.begin(), perm.end(), rng);
  SplitSpec s;
  s.test_idx.assign(perm.begin(), perm.begin() + num_test);
  s.val_idx.assign(perm.begin() + num_test, perm.begin() + num_test + num_val);
  s.train_idx.assign(perm.begin() + num_test + num_val, perm.end());
  std::sort(s.train_idx.begin(), s.train_idx.end());
  std::sort(s.val_idx.begin(), s.val_idx.end());
  std::sort(s.test_idx.begin(), s.test_idx.end());
  return s;
}

/// Standard split for citation and synthetic graphs, 85/15 for tabular ones.
inline SplitSpec default_split(const Dataset& ds, std::uint64_t seed) {
  if (ds.kind == "tabular") return make_tabular_split(static_cast<std::size_t>(ds.graph.num_nodes()), seed);
  return make_standard_split(ds.graph, seed);
}

/// Column-wise z-score with the sample (n-1) standard deviation. Constant
/// columns become all zeros.
inline Matrix standardize_columns(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  const auto n = static_cast<double>(x.rows());
  for (Index c = 0; c < x.cols(); ++c) {
    auto col = x.col(c);
    if (x.rows() < 2 || col.maxCoeff() == col.minCoeff()) {
      out.col(c).setZero();
      continue;
    }
    const double mean = col.sum() / n;
    const double var = (col.array() - mean).square().sum() / (n - 1.0);
    out.col(c) = (col.array() - mean) / std::sqrt(var);
  }
  return out;
}

/// Indices of the k nearest rows to row i by Euclidean distance, ties broken
/// toward the lower index.
inline std::vector<NodeId> nearest_rows(const Matrix& x, Index i, int k) {
  std::vector<std::pair<double, NodeId>> d;
  d.reserve(static_cast<std::size_t>(x.rows()));
  for (Index j = 0; j < x.rows(); ++j)
    if (j != i) d.emplace_back((x.row(i) - x.row(j)).squaredNorm(), j);
  std::partial_sort(d.begin(), d.begin() + k, d.end());
  std::vector<NodeId> out;
  for (int t = 0; t < k; ++t) out.push_back(d[t].second);
  return out;
}

/// KNN graph over standardized rows of `table`: i-j is an edge when either
/// is among the other's k nearest neighbors.
inline Graph build_knn_graph(const Matrix& table, std::vector<int> labels, int k) {
  const Index n = table.rows();
  if (k < 1) throw ParameterError("k must be >= 1");
  if (k >= n) throw ParameterError("k=" + std::to_string(k) + " must be < n=" + std::to_string(n));
  if (!table.allFinite()) throw DataError("table contains NaN or Inf");
  int num_classes = 0;
  for (int y : labels) {
    if (y < 0) throw DataError("negative label in table");
    num_classes = std::max(num_classes, y + 1);
  }
  Matrix z = standardize_columns(table);
  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i)
    for (NodeId j : nearest_rows(z, i, k)) edges.emplace_back(i, j);
  return Graph::from_edges(n, edges, std::move(z), std::move(labels), num_classes);
}

/// Parsed tabular CSV: a header row, one `label` column, numeric features.
struct Table {
  Matrix features;
  std::vector<int> labels;
  std::vector<std::string> feature_names;
  std::vector<std::string> label_names;
};

/// Labels that are all non-negative integers keep their values; otherwise
/// names map to ids in first-appearance order.
inline Table read_table_csv(std::istream& in, const std::string& source = "csv") {
  std::string line;
  std::size_t lineno = 0;
  auto split_commas = [](std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
      if (i == s.size() || s[i] == ',') {
        out.push_back(detail::trim(s.substr(start, i - start)));
        start = i + 1;
      }
    }
    return out;
  };

  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    for (auto h : split_commas(line)) header.emplace_back(h);
  }
  if (header.empty()) throw EmptyDatasetError(source + ": missing header");
  const auto label_col = std::find(header.begin(), header.end(), "label");
  if (label_col == header.end()) throw ParseError(source, lineno, "no 'label' column in header");
  if (std::count(header.begin(), header.end(), "label") != 1)
    throw ParseError(source, lineno, "more than one 'label' column");
  const auto lc = static_cast<std::size_t>(label_col - header.begin());

  Table t;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != lc) t.feature_names.push_back(header[c]);
  std::vector<std::vector<double>> rows;
  std::vector<std::string> raw_labels;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto cells = split_commas(line);
    if (cells.size() != header.size())
      throw ParseError(source, lineno,
                       std::to_string(cells.size()) + " cells, header has " +
                           std::to_string(header.size()));
    std::vector<double> row;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == lc) continue;
      double v = 0.0;
      if (cells[c] == "nan" || cells[c] == "NaN" || cells[c] == "NA") {
        v = std::nan("");
      } else if (!detail::parse_double(cells[c], v)) {
        throw ParseError(source, lineno, "non-numeric value '" + std::string(cells[c]) + "'");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
    raw_labels.emplace_back(cells[lc]);
  }
  if (rows.empty()) throw EmptyDatasetError(source + ": no data rows");

  bool numeric = true;
  for (const auto& l : raw_labels) {
    long long v = 0;
    if (!detail::parse_int(l, v) || v < 0) {
      numeric = false;
      break;
    }
  }
  std::unordered_map<std::string, int> ids;
  for (const auto& l : raw_labels) {
    if (numeric) {
      long long v = 0;
      detail::parse_int(l, v);
      t.labels.push_back(static_cast<int>(v));
    } else {
      auto [it, inserted] = ids.try_emplace(l, static_cast<int>(t.label_names.size()));
      if (inserted) t.label_names.push_back(l);
      t.labels.push_back(it->second);
    }
  }
  if (numeric) {
    const int k = *std::max_element(t.labels.begin(), t.labels.end()) + 1;
    for (int c = 0; c < k; ++c) t.label_names.push_back(std::to_string(c));
  }
  t.features.resize(static_cast<Index>(rows.size()), static_cast<Index>(t.feature_names.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) t.features(r, c) = rows[r][c];
  return t;
}

inline Table read_table_csv(const std::filesystem::path& path) {
  auto in = detail::open_or_throw(path);
  return read_table_csv(in, path.string());
}

inline Dataset knn_dataset_from_table(const Table& t, int k, std::string name = "tabular") {
  Dataset ds;
  ds.name = std::move(name);
  ds.kind = "tabular";
  ds.graph = build_knn_graph(t.features, t.labels, k);
  ds.label_names = t.label_names;
  while (static_cast<int>(ds.label_names.size()) < ds.graph.num_classes())
    ds.label_names.push_back(std::to_string(ds.label_names.size()));
  return ds;
}

/// {num_nodes, num_edges, K, F, label_map, dropped_citations}
inline nlohmann::ordered_json dataset_manifest(const Dataset& ds) {
  nlohmann::ordered_json label_map = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < ds.label_names.size(); ++i) label_map[ds.label_names[i]] = i;
  return {{"name", ds.name},
          {"kind", ds.kind},
          {"num_nodes", ds.graph.num_nodes()},
          {"num_edges", ds.graph.num_edges()},
          {"K", ds.graph.num_classes()},
          {"F", ds.graph.num_features()},
          {"label_map", label_map},
          {"dropped_citations", ds.dropped_citations}};
}

/// Self-contained JSON graph file (used for KNN graphs built from tables).
inline nlohmann::json graph_to_json(const Dataset& ds) {
  const Graph& g = ds.graph;
  nlohmann::json feats = nlohmann::json::array();
  for (Index i = 0; i < g.features().rows(); ++i) {
    std::vector<double> row(g.features().row(i).begin(), g.features().row(i).end());
    feats.push_back(row);
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [u, v] : g.edge_list()) edges.push_back({u, v});
  return {{"format", "ncwr-graph"},
          {"version", 1},
          {"name", ds.name},
          {"kind", ds.kind},
          {"num_nodes", g.num_nodes()},
          {"num_classes", g.num_classes()},
          {"label_names", ds.label_names},
          {"labels", g.labels()},
          {"edges", edges},
          {"features", feats}};
}

inline Dataset graph_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "ncwr-graph") throw DataError("not an ncwr-graph document");
  Dataset ds;
  ds.name = j.value("name", "graph");
  ds.kind = j.value("kind", "tabular");
  ds.label_names = j.at("label_names").get<std::vector<std::string>>();
  const auto n = j.at("num_nodes").get<NodeId>();
  std::vector<Edge> edges;
  for (const auto& e : j.at("edges")) edges.emplace_back(e.at(0).get<NodeId>(), e.at(1).get<NodeId>());
  const auto& feats = j.at("features");
  const Index f = feats.empty() ? 0 : static_cast<Index>(feats.at(0).size());
  Matrix x(n, f);
  for (Index i = 0; i < n; ++i) {
    if (static_cast<Index>(feats.at(i).size()) != f) throw DimensionError("ragged feature rows");
    for (Index c = 0; c < f; ++c) x(i, c) = feats.at(i).at(c).get<double>();
  }
  ds.graph = Graph::from_edges(n, edges, std::move(x), j.at("labels").get<std::vector<int>>(),
                               j.at("num_classes").get<int>());
  return ds;
}

/// Resolves a dataset reference:
///  - a directory holding one `*.content` and one `*.cites` file,
///  - a `.csv` table (turned into a KNN graph with `knn_k`),
///  - a `.json` graph file written by graph_to_json.
inline Dataset load_dataset(const std::filesystem::path& ref, const CitationOptions& opts = {},
                            int knn_k = 5) {
  namespace fs = std::filesystem;
  if (fs::is_directory(ref)) {
    fs::path content, cites;
    for (const auto& e : fs::directory_iterator(ref)) {
      if (e.path().extension() == ".content") content = e.path();
      if (e.path().extension() == ".cites") cites = e.path();
    }
    if (content.empty() || cites.empty())
      throw DataError(ref.string() + ": expected a *.content and a *.cites file");
    return load_citation_dataset(content, cites, opts);
  }
  if (ref.extension() == ".csv") return knn_dataset_from_table(read_table_csv(ref), knn_k, ref.stem().string());
  if (ref.extension() == ".json") {
    auto in = detail::open_or_throw(ref);
    return graph_from_json(nlohmann::json::parse(in));
  }
  throw DataError("unrecognized dataset reference " + ref.string());
}

}  // namespace ncwr
