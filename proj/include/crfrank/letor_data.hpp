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

// LETOR / SVMlight-with-qid ingestion, query grouping and fold loading.

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "crfrank/errors.hpp"

namespace crfrank {

struct DocumentRow {
  int relevance = 0;
  std::string query_id;
  std::vector<double> features;  // 0-based internally
  std::string comment;
};

// One query's documents. Features are stored row-major, m x feature_dim.
class QueryGroup {
 public:
  QueryGroup() = default;
  QueryGroup(std::string query_id, std::size_t feature_dim, std::vector<double> features,
             std::vector<int> relevance, std::vector<std::string> comments = {})
      : query_id_(std::move(query_id)),
        feature_dim_(feature_dim),
        features_(std::move(features)),
        relevance_(std::move(relevance)),
        comments_(std::move(comments)) {
    if (relevance_.empty()) throw ContractError("query group must hold at least one document");
    if (features_.size() != relevance_.size() * feature_dim_) {
      throw DimensionError("feature matrix of query " + query_id_ + " is not " +
                           std::to_string(relevance_.size()) + " x " +
                           std::to_string(feature_dim_));
    }
    if (comments_.empty()) comments_.resize(relevance_.size());
    if (comments_.size() != relevance_.size()) {
      throw ContractError("comment count does not match document count");
    }
  }

  const std::string& query_id() const noexcept { return query_id_; }
  std::size_t size() const noexcept { return relevance_.size(); }
  std::size_t feature_dim() const noexcept { return feature_dim_; }
  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * feature_dim_, feature_dim_};
  }
  const std::vector<double>& feature_matrix() const noexcept { return features_; }
  const std::vector<int>& relevance() const noexcept { return relevance_; }
  const std::vector<std::string>& comments() const noexcept { return comments_; }

  // Documents at the given positions, in the given order.
  QueryGroup select(std::span<const std::size_t> docs) const {
    std::vector<double> features;
    std::vector<int> relevance;
    std::vector<std::string> comments;
    features.reserve(docs.size() * feature_dim_);
    for (std::size_t i : docs) {
      if (i >= size()) throw ContractError("document index out of range");
      auto r = row(i);
      features.insert(features.end(), r.begin(), r.end());
      relevance.push_back(relevance_[i]);
      comments.push_back(comments_[i]);
    }
    return QueryGroup(query_id_, feature_dim_, std::move(features), std::move(relevance),
                      std::move(comments));
  }

  friend bool operator==(const QueryGroup&, const QueryGroup&) = default;

 private:
  std::string query_id_;
  std::size_t feature_dim_ = 0;
  std::vector<double> features_;
  std::vector<int> relevance_;
  std::vector<std::string> comments_;
};

struct Dataset {
  std::vector<QueryGroup> groups;
  std::size_t feature_dim = 0;

  std::size_t document_count() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.size();
    return n;
  }
  bool empty() const noexcept { return groups.empty(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct FoldSplit {
  Dataset train;
  Dataset validation;
  Dataset test;
  int fold_index = 1;
};

namespace detail {

inline bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\r'; }

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_blank(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_blank(s[j])) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view tok) {
  T value{};
  // from_chars rejects a leading '+', which some writers emit.
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || tok.empty()) return std::nullopt;
  return value;
}

struct ParsedLine {
  int relevance;
  std::string query_id;
  std::vector<std::pair<std::size_t, double>> features;  // 1-based indices
  std::string comment;
};

inline ParsedLine parse_line(std::string_view line, std::size_t line_no) {
  ParsedLine out;
  if (auto hash = line.find('#'); hash != std::string_view::npos) {
    std::string_view rest = line.substr(hash + 1);
    while (!rest.empty() && is_blank(rest.front())) rest.remove_prefix(1);
    while (!rest.empty() && is_blank(rest.back())) rest.remove_suffix(1);
    out.comment = std::string(rest);
    line = line.substr(0, hash);
  }
  auto tokens = split_ws(line);
  if (tokens.empty()) throw ParseError(line_no, "missing relevance grade");
  auto grade = parse_number<int>(tokens[0]);
  if (!grade) throw ParseError(line_no, "relevance grade '" + std::string(tokens[0]) + "' is not an integer");
  if (*grade < 0) throw ParseError(line_no, "negative relevance grade");
  out.relevance = *grade;

  if (tokens.size() < 2 || tokens[1].substr(0, 4) != "qid:" || tokens[1].size() == 4) {
    throw ParseError(line_no, "missing qid: token");
  }
  out.query_id = std::string(tokens[1].substr(4));

  for (std::size_t t = 2; t < tokens.size(); ++t) {
    auto tok = tokens[t];
    auto colon = tok.find(':');
    if (colon == std::string_view::npos) {
      throw ParseError(line_no, "feature token '" + std::string(tok) + "' lacks ':'");
    }
    auto idx = parse_number<long long>(tok.substr(0, colon));
    if (!idx) throw ParseError(line_no, "feature index in '" + std::string(tok) + "' is not an integer");
    if (*idx < 1) throw ParseError(line_no, "feature index must be >= 1");
    auto val = parse_number<double>(tok.substr(colon + 1));
    if (!val) throw ParseError(line_no, "feature value in '" + std::string(tok) + "' is not numeric");
    out.features.emplace_back(static_cast<std::size_t>(*idx), *val);
  }
  return out;
}

}  // namespace detail

// Parses LETOR lines `grade qid:<id> <idx>:<val> ... [# comment]`. Queries keep
// their first-appearance order; rows keep file order within a query.
inline Dataset parse_letor(std::istream& in, std::optional<std::size_t> expected_dim = std::nullopt) {
  struct Pending {
    std::string qid;
    std::vector<detail::ParsedLine> rows;
  };
  std::vector<Pending> pending;
  std::unordered_map<std::string, std::size_t> slot;
  std::size_t max_index = 0;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    std::size_t first = 0;
    while (first < view.size() && detail::is_blank(view[first])) ++first;
    if (first == view.size() || view[first] == '#') continue;

    auto parsed = detail::parse_line(view, line_no);
    for (const auto& [idx, val] : parsed.features) {
      if (expected_dim && idx > *expected_dim) {
        throw DimensionError("line " + std::to_string(line_no) + ": feature index " +
                             std::to_string(idx) + " exceeds expected dimension " +
                             std::to_string(*expected_dim));
      }
      max_index = std::max(max_index, idx);
    }
    auto [it, inserted] = slot.try_emplace(parsed.query_id, pending.size());
    if (inserted) pending.push_back({parsed.query_id, {}});
    pending[it->second].rows.push_back(std::move(parsed));
  }

  Dataset ds;
  ds.feature_dim = expected_dim.value_or(max_index);
  const std::size_t d = ds.feature_dim;
  ds.groups.reserve(pending.size());
  for (auto& p : pending) {
    std::vector<double> features(p.rows.size() * d, 0.0);
    std::vector<int> relevance;
    std::vector<std::string> comments;
    for (std::size_t i = 0; i < p.rows.size(); ++i) {
      for (const auto& [idx, val] : p.rows[i].features) features[i * d + idx - 1] = val;
      relevance.push_back(p.rows[i].relevance);
      comments.push_back(std::move(p.rows[i].comment));
    }
    ds.groups.emplace_back(p.qid, d, std::move(features), std::move(relevance), std::move(comments));
  }
  return ds;
}

inline Dataset parse_letor(std::string_view text, std::optional<std::size_t> expected_dim = std::nullopt) {
  std::istringstream in{std::string(text)};
  return parse_letor(in, expected_dim);
}

inline Dataset read_letor_file(const std::filesystem::path& path,
                               std::optional<std::size_t> expected_dim = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_letor(in, expected_dim);
}

// Writes every feature explicitly at full precision, so parsing the output
// reproduces the dataset exactly.
inline void write_letor(const Dataset& ds, std::ostream& out) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  for (const auto& g : ds.groups) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      out << g.relevance()[i] << " qid:" << g.query_id();
      auto r = g.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) out << ' ' << (j + 1) << ':' << r[j];
      if (!g.comments()[i].empty()) out << " #" << g.comments()[i];
      out << '\n';
    }
  }
  out.precision(old_precision);
}

inline void write_letor_file(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_letor(ds, out);
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::set<int> distinct_relevance_levels(const QueryGroup& group) {
  return {group.relevance().begin(), group.relevance().end()};
}

// Strict mode for LETOR 4.0: grades outside `allowed` are rejected.
inline void validate_grades(const Dataset& ds, const std::set<int>& allowed = {0, 1, 2}) {
  for (const auto& g : ds.groups) {
    for (int r : g.relevance()) {
      if (!allowed.contains(r)) {
        throw ContractError("query " + g.query_id() + " has relevance grade " + std::to_string(r) +
                            " outside the allowed set");
      }
    }
  }
}

// Optional per-query min-max scaling of every feature column to [0, 1].
// Constant columns map to 0.
inline Dataset normalize_per_query(const Dataset& ds) {
  Dataset out;
  out.feature_dim = ds.feature_dim;
  const std::size_t d = ds.feature_dim;
  for (const auto& g : ds.groups) {
    std::vector<double> f = g.feature_matrix();
    for (std::size_t j = 0; j < d; ++j) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (std::size_t i = 0; i < g.size(); ++i) {
        lo = std::min(lo, f[i * d + j]);
        hi = std::max(hi, f[i * d + j]);
      }
      for (std::size_t i = 0; i < g.size(); ++i) {
        f[i * d + j] = hi > lo ? (f[i * d + j] - lo) / (hi - lo) : 0.0;
      }
    }
    out.groups.emplace_back(g.query_id(), d, std::move(f), g.relevance(), g.comments());
  }
  return out;
}

inline FoldSplit load_fold(const std::filesystem::path& train_path,
                           const std::filesystem::path& validation_path,
                           const std::filesystem::path& test_path, int fold_index = 1) {
  FoldSplit split;
  split.fold_index = fold_index;
  split.train = read_letor_file(train_path);
  split.validation = read_letor_file(validation_path);
  split.test = read_letor_file(test_path);

  // Empty partitions carry no width information and adopt the others'.
  std::optional<std::size_t> dim;
  for (const Dataset* ds : {&split.train, &split.validation, &split.test}) {
    if (ds->empty()) continue;
    if (dim && *dim != ds->feature_dim) {
      throw DimensionError("fold partitions disagree on feature dimension (" +
                           std::to_string(*dim) + " vs " + std::to_string(ds->feature_dim) + ")");
    }
    dim = ds->feature_dim;
  }
  for (Dataset* ds : {&split.train, &split.validation, &split.test}) {
    if (ds->empty()) ds->feature_dim = dim.value_or(0);
  }

  std::set<std::string> seen;
  for (const Dataset* ds : {&split.train, &split.validation, &split.test}) {
    std::set<std::string> local;
    for (const auto& g : ds->groups) local.insert(g.query_id());
    for (const auto& q : local) {
      if (!seen.insert(q).second) throw ContractError("query " + q + " appears in more than one partition");
    }
  }
  return split;
}

// Fold<k>/{train,vali,test}.txt under `root`.
inline FoldSplit load_fold_dir(const std::filesystem::path& root, int fold_index) {
  const auto dir = root / ("Fold" + std::to_string(fold_index));
  return load_fold(dir / "train.txt", dir / "vali.txt", dir / "test.txt", fold_index);
}

}  // namespace crfrank
