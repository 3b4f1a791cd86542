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

// Linear document scoring and the position-weighted permutation energy
//   E(y) = -sum_i alpha_{y_i} * s_i,   s_i = theta . phi_i,
// whose minimizer is the descending-score sort.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "crfrank/errors.hpp"
#include "crfrank/letor_data.hpp"
#include "crfrank/rank_space.hpp"

namespace crfrank {

struct ParamVector {
  std::vector<double> theta;

  ParamVector() = default;
  explicit ParamVector(std::size_t d) : theta(d, 0.0) {}
  explicit ParamVector(std::vector<double> values) : theta(std::move(values)) {}

  std::size_t size() const noexcept { return theta.size(); }
  bool all_finite() const {
    return std::all_of(theta.begin(), theta.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

// alpha_i = log 2 / log(i + 1); alpha[0] holds position 1.
struct PositionWeights {
  std::vector<double> alpha;

  std::size_t size() const noexcept { return alpha.size(); }
  double at_rank(int rank) const { return alpha[static_cast<std::size_t>(rank - 1)]; }
};

inline PositionWeights position_weights(std::size_t m) {
  if (m < 1) throw ContractError("position weights need m >= 1");
  PositionWeights w;
  w.alpha.reserve(m);
  for (std::size_t i = 1; i <= m; ++i) w.alpha.push_back(position_discount(i));
  return w;
}

inline std::vector<double> score(const ParamVector& theta, const QueryGroup& group) {
  if (theta.size() != group.feature_dim()) {
    throw DimensionError("parameter dimension " + std::to_string(theta.size()) +
                         " does not match feature dimension " + std::to_string(group.feature_dim()));
  }
  std::vector<double> s(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    auto row = group.row(i);
    s[i] = std::inner_product(row.begin(), row.end(), theta.theta.begin(), 0.0);
  }
  return s;
}

inline double energy(const Permutation& y, std::span<const double> scores, const PositionWeights& alpha) {
  if (y.size() != scores.size() || alpha.size() < y.size()) {
    throw ContractError("energy: permutation, scores and position weights disagree in length");
  }
  double e = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) e -= alpha.at_rank(y[i]) * scores[i];
  return e;
}

// dE/dtheta = -sum_i alpha_{y_i} phi_i.
inline std::vector<double> energy_grad_theta(const Permutation& y, const QueryGroup& group,
                                             const PositionWeights& alpha) {
  if (y.size() != group.size() || alpha.size() < y.size()) {
    throw ContractError("energy gradient: permutation, group and position weights disagree in length");
  }
  std::vector<double> g(group.feature_dim(), 0.0);
  for (std::size_t i = 0; i < group.size(); ++i) {
    const double a = alpha.at_rank(y[i]);
    auto row = group.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) g[j] -= a * row[j];
  }
  return g;
}

// Descending score; equal scores keep ascending document index.
inline Permutation predict(std::span<const double> scores) {
  if (scores.empty()) throw ContractError("cannot rank an empty score vector");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<int> ranks(scores.size());
  for (std::size_t pos = 0; pos < idx.size(); ++pos) ranks[idx[pos]] = static_cast<int>(pos + 1);
  return Permutation(std::move(ranks));
}

// Checkpoint: `crf-rank-theta v1 d=<d>` then one value per line.
inline constexpr std::string_view kCheckpointMagic = "crf-rank-theta v1";

inline void write_checkpoint(const ParamVector& theta, std::ostream& out) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << kCheckpointMagic << " d=" << theta.size() << '\n';
  for (double v : theta.theta) out << v << '\n';
  out.precision(old_precision);
}

inline ParamVector read_checkpoint(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw ParseError(1, "empty checkpoint");
  const std::string prefix = std::string(kCheckpointMagic) + " d=";
  if (header.rfind(prefix, 0) != 0) throw ParseError(1, "bad checkpoint header '" + header + "'");
  auto d = detail::parse_number<std::size_t>(std::string_view(header).substr(prefix.size()));
  if (!d) throw ParseError(1, "bad dimension in checkpoint header");

  ParamVector theta;
  theta.theta.reserve(*d);
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v(line);
    while (!v.empty() && detail::is_blank(v.back())) v.remove_suffix(1);
    if (v.empty()) continue;
    auto value = detail::parse_number<double>(v);
    if (!value) throw ParseError(line_no, "checkpoint value '" + line + "' is not numeric");
    theta.theta.push_back(*value);
  }
  if (theta.size() != *d) {
    throw ParseError(line_no, "checkpoint declares d=" + std::to_string(*d) + " but holds " +
                                  std::to_string(theta.size()) + " values");
  }
  return theta;
}

inline void save_checkpoint(const ParamVector& theta, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_checkpoint(theta, out);
  if (!out) throw IoError("write failed for " + path.string());
}

inline ParamVector load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace crfrank
