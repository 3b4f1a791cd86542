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

// The permutation output space: enumeration, NDCG, losses and the
// loss-derived target distribution over rankings.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <mutex>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "crfrank/errors.hpp"

namespace crfrank {

inline constexpr std::size_t kDefaultEnumerationCap = 8;
inline constexpr double kZeroLossTolerance = 1e-12;

// A full ranking: ranks()[i] is the 1-based position of document i.
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<int> ranks) : ranks_(std::move(ranks)) {
    std::vector<bool> seen(ranks_.size(), false);
    for (int r : ranks_) {
      if (r < 1 || static_cast<std::size_t>(r) > ranks_.size() || seen[r - 1]) {
        throw ContractError("rank vector is not a bijection onto 1..m");
      }
      seen[r - 1] = true;
    }
  }

  std::size_t size() const noexcept { return ranks_.size(); }
  int operator[](std::size_t i) const { return ranks_[i]; }
  const std::vector<int>& ranks() const noexcept { return ranks_; }

  // order()[k] is the document placed at position k + 1.
  std::vector<std::size_t> order() const {
    std::vector<std::size_t> out(ranks_.size());
    for (std::size_t i = 0; i < ranks_.size(); ++i) out[ranks_[i] - 1] = i;
    return out;
  }

  friend bool operator==(const Permutation&, const Permutation&) = default;
  friend auto operator<=>(const Permutation&, const Permutation&) = default;

 private:
  std::vector<int> ranks_;
};

// All m! rank vectors in lexicographic order. This order is the canonical
// alignment for loss tables, target distributions and objective sums.
inline std::vector<Permutation> enumerate_permutations(std::size_t m,
                                                       std::size_t cap = kDefaultEnumerationCap) {
  if (m < 1) throw ContractError("cannot enumerate permutations of an empty group");
  if (m > cap) throw CapacityError(m, cap);
  std::vector<int> ranks(m);
  std::iota(ranks.begin(), ranks.end(), 1);
  std::vector<Permutation> out;
  do {
    out.emplace_back(ranks);
  } while (std::next_permutation(ranks.begin(), ranks.end()));
  return out;
}

// Process-wide immutable enumerations, one per group size.
inline std::shared_ptr<const std::vector<Permutation>> cached_permutations(
    std::size_t m, std::size_t cap = kDefaultEnumerationCap) {
  if (m < 1) throw ContractError("cannot enumerate permutations of an empty group");
  if (m > cap) throw CapacityError(m, cap);
  static std::mutex mutex;
  static std::vector<std::shared_ptr<const std::vector<Permutation>>> cache;
  std::lock_guard lock(mutex);
  if (cache.size() <= m) cache.resize(m + 1);
  if (!cache[m]) {
    cache[m] = std::make_shared<const std::vector<Permutation>>(enumerate_permutations(m, m));
  }
  return cache[m];
}

inline double position_discount(std::size_t position) {
  return std::log(2.0) / std::log(1.0 + static_cast<double>(position));
}

namespace detail {

inline void check_lengths(const Permutation& y, std::span<const int> r) {
  if (y.size() != r.size()) {
    throw ContractError("permutation length " + std::to_string(y.size()) +
                        " does not match relevance length " + std::to_string(r.size()));
  }
}

// Gain uses raw grades, not 2^r - 1.
inline double ideal_dcg(std::span<const int> r, std::size_t k) {
  std::vector<int> sorted(r.begin(), r.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, sorted.size()); ++i) {
    dcg += sorted[i] * position_discount(i + 1);
  }
  return dcg;
}

}  // namespace detail

inline double ndcg_at_k(const Permutation& y, std::span<const int> r, std::size_t k) {
  detail::check_lengths(y, r);
  if (k < 1) throw ContractError("NDCG truncation must be >= 1");
  const double ideal = detail::ideal_dcg(r, k);
  if (ideal == 0.0) return 0.0;
  // Summed in position order so that any ideal ordering reproduces the ideal
  // DCG bit for bit.
  const auto order = y.order();
  double dcg = 0.0;
  for (std::size_t pos = 0; pos < std::min(k, order.size()); ++pos) {
    dcg += r[order[pos]] * position_discount(pos + 1);
  }
  return dcg / ideal;
}

// Untruncated NDCG; 0 when every grade is 0.
inline double ndcg(const Permutation& y, std::span<const int> r) {
  return ndcg_at_k(y, r, std::max<std::size_t>(r.size(), 1));
}

inline double loss(const Permutation& y, std::span<const int> r) { return 1.0 - ndcg(y, r); }

// Ranks by decreasing relevance, ties by ascending document index.
inline Permutation ideal_permutation(std::span<const int> r) {
  if (r.empty()) throw ContractError("ideal permutation of an empty relevance vector");
  std::vector<std::size_t> idx(r.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return r[a] > r[b]; });
  std::vector<int> ranks(r.size());
  for (std::size_t pos = 0; pos < idx.size(); ++pos) ranks[idx[pos]] = static_cast<int>(pos + 1);
  return Permutation(std::move(ranks));
}

struct LossTable {
  std::vector<double> losses;
};

inline LossTable loss_table(std::span<const Permutation> perms, std::span<const int> r) {
  LossTable t;
  t.losses.reserve(perms.size());
  for (const auto& y : perms) t.losses.push_back(loss(y, r));
  return t;
}

inline std::vector<std::size_t> zero_loss_indices(std::span<const double> losses) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < losses.size(); ++j) {
    if (std::abs(losses[j]) <= kZeroLossTolerance) out.push_back(j);
  }
  return out;
}

inline std::vector<std::size_t> zero_loss_set(std::span<const int> r, std::span<const Permutation> perms) {
  return zero_loss_indices(loss_table(perms, r).losses);
}

struct TargetDistribution {
  std::vector<double> probs;
  double temperature = 1.0;
};

// q_j = exp(-l_j / T) / sum_k exp(-l_k / T).
inline TargetDistribution target_distribution(std::span<const double> losses, double temperature) {
  if (!(temperature > 0.0)) throw ContractError("temperature must be positive");
  if (losses.empty()) throw ContractError("target distribution over an empty loss table");
  const double min_loss = *std::min_element(losses.begin(), losses.end());
  TargetDistribution q;
  q.temperature = temperature;
  q.probs.resize(losses.size());
  double z = 0.0;
  for (std::size_t j = 0; j < losses.size(); ++j) {
    q.probs[j] = std::exp(-(losses[j] - min_loss) / temperature);
    z += q.probs[j];
  }
  for (double& p : q.probs) p /= z;
  return q;
}

inline TargetDistribution target_distribution(const LossTable& table, double temperature) {
  return target_distribution(table.losses, temperature);
}

// Shannon entropy in nats; 0 log 0 = 0.
inline double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace crfrank
