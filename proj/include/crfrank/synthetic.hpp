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

// Synthetic ranking data with a planted linear scorer. Grades are the
// within-query tertile of the hidden score, so the planted model ranks every
// query ideally.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "crfrank/crf_model.hpp"
#include "crfrank/letor_data.hpp"

namespace crfrank {

struct SyntheticSpec {
  std::size_t queries = 200;
  std::size_t docs_per_query = 8;
  std::size_t feature_dim = 5;
  std::size_t levels = 3;
  std::string qid_prefix = "q";
};

inline ParamVector random_direction(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ParamVector theta(d);
  for (double& v : theta.theta) v = normal(rng);
  return theta;
}

// The i-th lowest of m hidden scores gets grade floor(levels * i / m).
inline Dataset generate_synthetic(const SyntheticSpec& spec, const ParamVector& hidden, std::mt19937_64& rng) {
  if (hidden.size() != spec.feature_dim) throw DimensionError("hidden model dimension mismatch");
  if (spec.docs_per_query < 1 || spec.levels < 1) throw ContractError("degenerate synthetic spec");
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset ds;
  ds.feature_dim = spec.feature_dim;
  const std::size_t m = spec.docs_per_query;
  for (std::size_t q = 0; q < spec.queries; ++q) {
    std::vector<double> features(m * spec.feature_dim);
    for (double& v : features) v = normal(rng);
    QueryGroup unlabeled(spec.qid_prefix + std::to_string(q), spec.feature_dim, features, std::vector<int>(m, 0));
    const auto s = score(hidden, unlabeled);
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s[a] < s[b]; });
    std::vector<int> relevance(m);
    for (std::size_t i = 0; i < m; ++i) relevance[idx[i]] = static_cast<int>(spec.levels * i / m);
    ds.groups.emplace_back(unlabeled.query_id(), spec.feature_dim, std::move(features), std::move(relevance));
  }
  return ds;
}

// Writes root/Fold1..Fold5/{train,vali,test}.txt with the usual rotation:
// with queries cut into five parts S1..S5, fold k tests on S_k, validates on
// S_{k+1} and trains on the other three.
inline void write_synthetic_folds(const std::filesystem::path& root, const SyntheticSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto hidden = random_direction(spec.feature_dim, rng);
  const auto all = generate_synthetic(spec, hidden, rng);
  constexpr std::size_t kFolds = 5;
  std::vector<Dataset> parts(kFolds);
  for (std::size_t i = 0; i < all.groups.size(); ++i) {
    parts[i % kFolds].groups.push_back(all.groups[i]);
  }
  for (auto& p : parts) p.feature_dim = spec.feature_dim;

  for (std::size_t k = 0; k < kFolds; ++k) {
    Dataset train;
    train.feature_dim = spec.feature_dim;
    for (std::size_t j = 2; j < kFolds; ++j) {
      const auto& part = parts[(k + j) % kFolds];
      train.groups.insert(train.groups.end(), part.groups.begin(), part.groups.end());
    }
    const auto dir = root / ("Fold" + std::to_string(k + 1));
    std::filesystem::create_directories(dir);
    write_letor_file(train, dir / "train.txt");
    write_letor_file(parts[(k + 1) % kFolds], dir / "vali.txt");
    write_letor_file(parts[k], dir / "test.txt");
  }
}

}  // namespace crfrank
