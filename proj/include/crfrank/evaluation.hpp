/*
 * Copyright 2026 The crfrank Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "crfrank/crf_model.hpp"
#include "crfrank/errors.hpp"
#include "crfrank/letor_data.hpp"
#include "crfrank/rank_space.hpp"

namespace crfrank {

inline constexpr std::size_t kDefaultTruncation = 5;

struct QueryScores {
  std::string query_id;
  std::vector<double> ndcg;  // ndcg[k - 1] = NDCG@k
};

struct EvalReport {
  std::size_t K = kDefaultTruncation;
  std::vector<QueryScores> per_query;
  std::vector<double> means;  // means[k - 1] = mean NDCG@k over per_query
};

struct FoldReport {
  std::size_t K = kDefaultTruncation;
  std::vector<std::vector<double>> per_fold;  // per_fold[f][k - 1]
  std::vector<double> grand_mean;
};

inline bool all_irrelevant(const QueryGroup& group) {
  for (int r : group.relevance()) {
    if (r != 0) return false;
  }
  return true;
}

inline std::vector<double> ndcg_profile(const Permutation& y, std::span<const int> r, std::size_t K) {
  std::vector<double> out(K);
  for (std::size_t k = 1; k <= K; ++k) out[k - 1] = ndcg_at_k(y, r, k);
  return out;
}

// Ranks every full group (no subsampling) by predicted score. All-irrelevant
// queries score 0 and count toward the means unless `exclude_empty` is set.
inline EvalReport evaluate(const ParamVector& theta, const Dataset& dataset, std::size_t K = kDefaultTruncation,
                           bool exclude_empty = false) {
  if (K < 1) throw ContractError("evaluation truncation K must be >= 1");
  if (theta.size() != dataset.feature_dim) {
    throw DimensionError("model dimension " + std::to_string(theta.size()) + " does not match dataset dimension " +
                         std::to_string(dataset.feature_dim));
  }
  EvalReport report;
  report.K = K;
  for (const auto& g : dataset.groups) {
    if (exclude_empty && all_irrelevant(g)) continue;
    const auto y = predict(score(theta, g));
    report.per_query.push_back({g.query_id(), ndcg_profile(y, g.relevance(), K)});
  }
  if (report.per_query.empty()) throw ContractError("no queries to evaluate");
  report.means.assign(K, 0.0);
  for (const auto& q : report.per_query) {
    for (std::size_t k = 0; k < K; ++k) report.means[k] += q.ndcg[k];
  }
  for (double& m : report.means) m /= static_cast<double>(report.per_query.size());
  return report;
}

// Mean of NDCG@1..K, or NDCG@k alone when k > 0.
inline double selection_score(const EvalReport& report, std::size_t k = 0) {
  if (k > 0) {
    if (k > report.K) throw ContractError("selection truncation exceeds report truncation");
    return report.means[k - 1];
  }
  double s = 0.0;
  for (double m : report.means) s += m;
  return s / static_cast<double>(report.means.size());
}

inline FoldReport fold_report(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw ContractError("fold report needs at least one fold");
  FoldReport out;
  out.K = reports.front().K;
  out.grand_mean.assign(out.K, 0.0);
  for (const auto& r : reports) {
    if (r.K != out.K) throw ContractError("fold reports disagree on truncation");
    out.per_fold.push_back(r.means);
    for (std::size_t k = 0; k < out.K; ++k) out.grand_mean[k] += r.means[k];
  }
  for (double& m : out.grand_mean) m /= static_cast<double>(reports.size());
  return out;
}

// Test-set evaluation of each fold's model, averaged with equal fold weight.
inline FoldReport evaluate_folds(std::span<const ParamVector> models, std::span<const FoldSplit> folds,
                                 std::size_t K = kDefaultTruncation, bool exclude_empty = false) {
  if (models.size() != folds.size()) {
    throw ContractError("got " + std::to_string(models.size()) + " models for " + std::to_string(folds.size()) +
                        " folds");
  }
  std::vector<EvalReport> reports;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (folds[f].test.empty()) {
      throw ContractError("fold " + std::to_string(folds[f].fold_index) + " has an empty test set");
    }
    reports.push_back(evaluate(models[f], folds[f].test, K, exclude_empty));
  }
  return fold_report(reports);
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

class PrecisionGuard {
 public:
  explicit PrecisionGuard(std::ostream& out)
      : out_(out), saved_(out.precision(std::numeric_limits<double>::max_digits10)) {}
  ~PrecisionGuard() { out_.precision(saved_); }
  PrecisionGuard(const PrecisionGuard&) = delete;
  PrecisionGuard& operator=(const PrecisionGuard&) = delete;

 private:
  std::ostream& out_;
  std::streamsize saved_;
};

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

inline void write_means_csv(const EvalReport& report, std::ostream& out) {
  detail::PrecisionGuard guard(out);
  out << "k,ndcg\n";
  for (std::size_t k = 1; k <= report.K; ++k) out << k << ',' << report.means[k - 1] << '\n';
}

inline void write_per_query_csv(const EvalReport& report, std::ostream& out) {
  detail::PrecisionGuard guard(out);
  out << "qid";
  for (std::size_t k = 1; k <= report.K; ++k) out << ",ndcg@" << k;
  out << '\n';
  for (const auto& q : report.per_query) {
    out << q.query_id;
    for (double v : q.ndcg) out << ',' << v;
    out << '\n';
  }
}

// Reads back the `k,ndcg` table written by write_means_csv.
inline std::vector<double> parse_means_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line) || line != "k,ndcg") throw ParseError(1, "expected header 'k,ndcg'");
  ++line_no;
  std::vector<double> means;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = detail::split_csv(line);
    if (cells.size() != 2) throw ParseError(line_no, "expected two columns");
    auto k = detail::parse_number<std::size_t>(cells[0]);
    auto v = detail::parse_number<double>(cells[1]);
    if (!k || !v) throw ParseError(line_no, "non-numeric cell");
    if (*k != means.size() + 1) throw ParseError(line_no, "truncations must be consecutive from 1");
    means.push_back(*v);
  }
  return means;
}

// `k,fold1,...,foldN,mean`
inline void write_fold_report_csv(const FoldReport& report, std::ostream& out) {
  detail::PrecisionGuard guard(out);
  out << 'k';
  for (std::size_t f = 1; f <= report.per_fold.size(); ++f) out << ",fold" << f;
  out << ",mean\n";
  for (std::size_t k = 0; k < report.K; ++k) {
    out << (k + 1);
    for (const auto& fold : report.per_fold) out << ',' << fold[k];
    out << ',' << report.grand_mean[k] << '\n';
  }
}

// NDCG@1..K table with one column per objective: `k,ML,LA,...`.
inline void write_objective_table_csv(const std::vector<std::pair<std::string, FoldReport>>& columns,
                                      std::ostream& out) {
  if (columns.empty()) throw ContractError("objective table needs at least one column");
  detail::PrecisionGuard guard(out);
  const std::size_t K = columns.front().second.K;
  out << 'k';
  for (const auto& [name, report] : columns) {
    if (report.K != K) throw ContractError("objective columns disagree on truncation");
    out << ',' << name;
  }
  out << '\n';
  for (std::size_t k = 0; k < K; ++k) {
    out << (k + 1);
    for (const auto& [name, report] : columns) out << ',' << report.grand_mean[k];
    out << '\n';
  }
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  writer(out);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace crfrank
