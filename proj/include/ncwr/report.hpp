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

// CSV and SVG writers for predictions, embeddings and sweep results.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ncwr/decision.hpp"
#include "ncwr/error.hpp"
#include "ncwr/graph.hpp"
#include "ncwr/model.hpp"

namespace ncwr {

/// Shortest text that reads back to the same double.
inline std::string fmt_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

inline std::string fmt_optional(const std::optional<double>& x) { return x ? fmt_double(*x) : std::string(); }

/// Quotes a CSV field when needed.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::ofstream open_for_write(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw DataError("cannot write " + p.string());
  return out;
}

/// One row per node in `idx`: node, label, decision, max class probability
/// and the variant's reject score (selection score, reject probability or
/// max probability).
inline void write_predictions_csv(std::ostream& out, const Inference& inf, const Graph& g,
                                  std::span<const NodeId> idx, std::span<const Decision> decisions,
                                  const std::vector<std::string>& node_names = {}) {
  if (idx.size() != decisions.size()) throw ContractError("predictions: index/decision length mismatch");
  const int K = g.num_classes();
  const bool has_reject_col = inf.probs.cols() == K + 1;
  out << "node,name,label,decision,max_prob,score\n";
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const NodeId i = idx[r];
    const double maxp = inf.probs.row(i).head(K).maxCoeff();
    double score = maxp;
    if (!inf.selection.empty()) score = inf.selection[static_cast<std::size_t>(i)];
    else if (has_reject_col) score = inf.probs(i, K);
    const std::string name =
        static_cast<std::size_t>(i) < node_names.size() ? node_names[static_cast<std::size_t>(i)] : "";
    out << i << ',' << csv_field(name) << ',' << g.label(i) << ',' << decisions[r].str() << ','
        << fmt_double(maxp) << ',' << fmt_double(score) << '\n';
  }
}

/// One row per node in `idx`: the hidden representation, the decision and
/// the true label.
inline void write_embeddings_csv(std::ostream& out, const Inference& inf, const Graph& g,
                                 std::span<const NodeId> idx, std::span<const Decision> decisions) {
  if (idx.size() != decisions.size()) throw ContractError("embeddings: index/decision length mismatch");
  const Index w = inf.penultimate.cols();
  for (Index c = 0; c < w; ++c) out << "emb_" << c << ',';
  out << "prediction,label\n";
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const NodeId i = idx[r];
    for (Index c = 0; c < w; ++c) out << fmt_double(inf.penultimate(i, c)) << ',';
    out << decisions[r].str() << ',' << g.label(i) << '\n';
  }
}

/// A labelled series of (x, y) points for the coverage/accuracy plot.
struct CurveSeries {
  std::string label;
  std::vector<double> x, y;
};

/// Line plot of selective accuracy against coverage.
inline std::string coverage_accuracy_svg(const std::vector<CurveSeries>& series, const std::string& title) {
  constexpr double W = 640, H = 420, L = 70, R = 160, T = 40, B = 60;
  double ylo = 1.0, yhi = 0.0;
  for (const auto& s : series)
    for (double v : s.y) ylo = std::min(ylo, v), yhi = std::max(yhi, v);
  if (ylo > yhi) ylo = 0.0, yhi = 1.0;
  ylo = std::max(0.0, std::floor(ylo * 20.0 - 1.0) / 20.0);
  yhi = std::min(1.0, std::ceil(yhi * 20.0 + 1.0) / 20.0);
  if (yhi - ylo < 0.05) yhi = std::min(1.0, ylo + 0.1);
  const double xlo = 0.0, xhi = 1.0;
  auto px = [&](double x) { return L + (x - xlo) / (xhi - xlo) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ylo) / (yhi - ylo) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  s << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 10; ++k) {
    const double x = xlo + k * (xhi - xlo) / 10.0;
    s << "<line x1=\"" << px(x) << "\" y1=\"" << H - B << "\" x2=\"" << px(x) << "\" y2=\"" << H - B + 5
      << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << px(x) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << x << "</text>\n";
  }
  const int ny = static_cast<int>(std::lround((yhi - ylo) / 0.05));
  for (int k = 0; k <= ny; ++k) {
    const double y = ylo + k * 0.05;
    s << "<line x1=\"" << L - 5 << "\" y1=\"" << py(y) << "\" x2=\"" << L << "\" y2=\"" << py(y)
      << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << L - 8 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << y << "</text>\n";
  }
  s << "<text x=\"" << L + (W - L - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">coverage</text>\n";
  s << "<text transform=\"translate(18," << T + (H - T - B) / 2
    << ") rotate(-90)\" text-anchor=\"middle\">selective accuracy</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& sr = series[k];
    const char* col = colors[k % 6];
    std::vector<std::size_t> order(sr.x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return sr.x[a] < sr.x[b]; });
    s << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"2\" points=\"";
    for (auto i : order) s << px(sr.x[i]) << ',' << py(sr.y[i]) << ' ';
    s << "\"/>\n";
    for (auto i : order)
      s << "<circle cx=\"" << px(sr.x[i]) << "\" cy=\"" << py(sr.y[i]) << "\" r=\"3.5\" fill=\"" << col
        << "\"/>\n";
    const double ly = T + 16 + 18.0 * static_cast<double>(k);
    s << "<line x1=\"" << W - R + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - R + 32 << "\" y2=\"" << ly - 4
      << "\" stroke=\"" << col << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << W - R + 38 << "\" y=\"" << ly << "\">" << sr.label << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace ncwr
