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

// Per-query SGD with level-preserving subsampling, and the validation sweep.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <future>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "crfrank/crf_model.hpp"
#include "crfrank/errors.hpp"
#include "crfrank/evaluation.hpp"
#include "crfrank/letor_data.hpp"
#include "crfrank/objectives.hpp"
#include "crfrank/rank_space.hpp"

namespace crfrank {

using Rng = std::mt19937_64;

struct TrainConfig {
  ObjectiveSpec objective;
  double learning_rate = 0.1;
  int epochs = 50;
  std::size_t max_group_size = 6;
  std::uint64_t seed = 1;
  bool shuffle_queries = true;
  bool skip_zero_signal_queries = true;
  double weight_decay = 0.0;
  std::size_t enumeration_cap = kDefaultEnumerationCap;

  void validate() const {
    objective.validate();
    if (!(learning_rate > 0.0)) throw ContractError("learning rate must be positive");
    if (epochs < 0) throw ContractError("epoch count must be non-negative");
    if (max_group_size < 2 || max_group_size > enumeration_cap) {
      throw ContractError("max group size must lie in [2, " + std::to_string(enumeration_cap) + "]");
    }
    if (weight_decay < 0.0) throw ContractError("weight decay must be non-negative");
  }
};

struct EpochLog {
  int epoch = 0;
  double mean_objective = 0.0;
  double mean_train_ndcg5 = 0.0;
  double wall_seconds = 0.0;
  std::size_t updates = 0;
  std::size_t skipped = 0;
};

struct TrainResult {
  ParamVector theta;
  std::vector<EpochLog> log;
};

// Keeps at least one document of every relevance level: one random document
// per level first, then a uniform fill without replacement. Selected
// documents keep their original relative order.
inline QueryGroup subsample_group(const QueryGroup& group, std::size_t max_size, Rng& rng) {
  const auto levels = distinct_relevance_levels(group);
  if (max_size < levels.size()) {
    throw ContractError("cannot keep " + std::to_string(levels.size()) + " relevance levels in " +
                        std::to_string(max_size) + " documents");
  }
  if (group.size() <= max_size) return group;

  const auto& r = group.relevance();
  std::vector<bool> taken(group.size(), false);
  std::vector<std::size_t> chosen;
  for (int level : levels) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r[i] == level) members.push_back(i);
    }
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
    const std::size_t i = members[pick(rng)];
    taken[i] = true;
    chosen.push_back(i);
  }
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (!taken[i]) rest.push_back(i);
  }
  // Partial Fisher-Yates.
  const std::size_t need = max_size - chosen.size();
  for (std::size_t k = 0; k < need; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, rest.size() - 1);
    std::swap(rest[k], rest[pick(rng)]);
    chosen.push_back(rest[k]);
  }
  std::sort(chosen.begin(), chosen.end());
  return group.select(chosen);
}

inline bool all_losses_zero(const QueryEnumeration& en) { return en.zero_loss.size() == en.size(); }

// theta <- theta - lr * (grad + weight_decay * theta)
inline void sgd_step(ParamVector& theta, std::span<const double> grad, double learning_rate,
                     double weight_decay = 0.0) {
  if (grad.size() != theta.size()) throw DimensionError("gradient and parameter dimensions differ");
  for (std::size_t j = 0; j < theta.size(); ++j) {
    theta.theta[j] -= learning_rate * (grad[j] + weight_decay * theta.theta[j]);
  }
}

// Starts from theta = 0 and takes one step per visited query. Queries with no
// relevant document are never visited since they have no zero-loss ranking;
// with skip_zero_signal_queries, subsamples whose every ranking has zero loss
// are skipped too.
inline TrainResult sgd_train(const Dataset& dataset, const TrainConfig& config) {
  config.validate();
  if (dataset.empty()) throw ContractError("cannot train on an empty dataset");
  for (const auto& g : dataset.groups) {
    if (g.feature_dim() != dataset.feature_dim) throw DimensionError("query " + g.query_id() + " has inconsistent width");
  }

  TrainResult result;
  result.theta = ParamVector(dataset.feature_dim);
  Rng rng(config.seed);
  std::vector<std::size_t> order(dataset.groups.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    if (config.shuffle_queries) std::shuffle(order.begin(), order.end(), rng);

    EpochLog entry;
    entry.epoch = epoch;
    double objective_sum = 0.0;
    for (std::size_t q : order) {
      const auto& full = dataset.groups[q];
      if (all_irrelevant(full)) {
        ++entry.skipped;
        continue;
      }
      const auto group = subsample_group(full, config.max_group_size, rng);
      const auto en = enumerate_query(group, result.theta, config.enumeration_cap);
      if (config.skip_zero_signal_queries && all_losses_zero(en)) {
        ++entry.skipped;
        continue;
      }
      const auto eval = objective_eval(config.objective, en, group);
      const bool finite = std::isfinite(eval.value) &&
                          std::all_of(eval.grad.begin(), eval.grad.end(), [](double v) { return std::isfinite(v); });
      if (!finite) {
        throw NumericalError("non-finite objective or gradient on query " + full.query_id() + " in epoch " +
                             std::to_string(epoch));
      }
      sgd_step(result.theta, eval.grad, config.learning_rate, config.weight_decay);
      if (!result.theta.all_finite()) {
        throw NumericalError("parameters diverged after query " + full.query_id() + " in epoch " +
                             std::to_string(epoch));
      }
      objective_sum += eval.value;
      ++entry.updates;
    }
    entry.mean_objective = entry.updates > 0 ? objective_sum / static_cast<double>(entry.updates) : 0.0;
    entry.mean_train_ndcg5 = evaluate(result.theta, dataset, 5).means[4];
    entry.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(entry);
  }
  return result;
}

inline void write_training_log_csv(const std::vector<EpochLog>& log, std::ostream& out) {
  detail::PrecisionGuard guard(out);
  out << "epoch,mean_objective,mean_train_ndcg@5,wall_seconds\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << e.mean_objective << ',' << e.mean_train_ndcg5 << ',' << e.wall_seconds << '\n';
  }
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepGrid {
  std::vector<double> learning_rates{0.5, 0.1, 0.01, 0.001};
  std::vector<double> la_weights{1, 10, 20, 50};
  std::vector<double> temperatures{1, 10, 20, 50};
  std::size_t selection_k = 0;  // 0 selects on the mean of NDCG@1..5

  // The learning-rate list exactly as printed in the original experiments,
  // duplicate included.
  static std::vector<double> printed_learning_rates() { return {0.5, 0.01, 0.01, 0.001}; }
};

struct SweepPoint {
  TrainConfig config;
  ParamVector theta;
  double validation_score = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;  // grid order
  std::size_t best = 0;

  const SweepPoint& best_point() const { return points.at(best); }
};

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  // splitmix64 finalizer
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Grid order: learning rate outer, then alpha (LA) or T (KL).
inline std::vector<TrainConfig> sweep_configs(const SweepGrid& grid, ObjectiveKind kind, const TrainConfig& base) {
  if (grid.learning_rates.empty()) throw ContractError("learning-rate grid is empty");
  std::vector<double> inner{0.0};
  if (kind == ObjectiveKind::LA) inner = grid.la_weights;
  if (kind == ObjectiveKind::KL) inner = grid.temperatures;
  if (inner.empty()) throw ContractError("hyperparameter grid is empty");

  std::vector<TrainConfig> out;
  for (double lr : grid.learning_rates) {
    for (double h : inner) {
      TrainConfig c = base;
      c.objective.kind = kind;
      c.learning_rate = lr;
      if (kind == ObjectiveKind::LA) c.objective.la_weight = h;
      if (kind == ObjectiveKind::KL) c.objective.temperature = h;
      c.seed = derive_seed(base.seed, out.size());
      out.push_back(c);
    }
  }
  return out;
}

// Trains every grid point on fold.train and keeps the best validation score;
// ties go to the earlier grid point. Grid points may run on `threads` workers
// without changing the result.
inline SweepResult sweep(const FoldSplit& fold, const SweepGrid& grid, ObjectiveKind kind,
                         const TrainConfig& base = {}, unsigned threads = 1) {
  if (fold.validation.empty()) throw ContractError("sweep needs a non-empty validation set");
  const auto configs = sweep_configs(grid, kind, base);

  auto run = [&](const TrainConfig& c) {
    SweepPoint p;
    p.config = c;
    p.theta = sgd_train(fold.train, c).theta;
    p.validation_score = selection_score(evaluate(p.theta, fold.validation, kDefaultTruncation), grid.selection_k);
    return p;
  };

  SweepResult result;
  result.points.resize(configs.size());
  threads = std::max(1u, threads);
  for (std::size_t start = 0; start < configs.size(); start += threads) {
    const std::size_t stop = std::min(configs.size(), start + threads);
    if (threads == 1) {
      result.points[start] = run(configs[start]);
      continue;
    }
    std::vector<std::future<SweepPoint>> jobs;
    for (std::size_t i = start; i < stop; ++i) jobs.push_back(std::async(std::launch::async, run, configs[i]));
    for (std::size_t i = start; i < stop; ++i) result.points[i] = jobs[i - start].get();
  }
  for (std::size_t i = 1; i < result.points.size(); ++i) {
    if (result.points[i].validation_score > result.points[result.best].validation_score) result.best = i;
  }
  return result;
}

}  // namespace crfrank
