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

// Finite-difference audit of the analytic objective gradients on random
// small instances.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include "crfrank/crf_model.hpp"
#include "crfrank/evaluation.hpp"
#include "crfrank/objectives.hpp"
#include "crfrank/synthetic.hpp"

namespace crfrank {

struct GradCheckOptions {
  std::size_t trials = 20;
  std::uint64_t seed = 7;
  std::size_t min_docs = 2;
  std::size_t max_docs = 5;
  std::size_t feature_dim = 4;
  double step = 1e-5;
  double tolerance = 1e-4;
  double la_weight = 1.0;
  double temperature = 1.0;
};

struct GradCheckRow {
  ObjectiveKind kind;
  std::size_t trials = 0;
  double max_rel_error = 0.0;
  bool passed = false;
};

// Central differences of objective_value along each coordinate of theta.
inline std::vector<double> numeric_gradient(const ObjectiveSpec& spec, const QueryGroup& group,
                                            const ParamVector& theta, double step) {
  std::vector<double> g(theta.size());
  ParamVector probe = theta;
  for (std::size_t j = 0; j < theta.size(); ++j) {
    probe.theta[j] = theta.theta[j] + step;
    const double up = objective_value(spec, group, probe);
    probe.theta[j] = theta.theta[j] - step;
    const double down = objective_value(spec, group, probe);
    probe.theta[j] = theta.theta[j];
    g[j] = (up - down) / (2.0 * step);
  }
  return g;
}

// ||a - b|| / max(||b||, 1e-8)
inline double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  double diff = 0.0, ref = 0.0;
  for (std::size_t j = 0; j < analytic.size(); ++j) {
    diff += (analytic[j] - numeric[j]) * (analytic[j] - numeric[j]);
    ref += numeric[j] * numeric[j];
  }
  return std::sqrt(diff) / std::max(std::sqrt(ref), 1e-8);
}

// A random group with grades from {0,1,2}, at least one of them non-zero.
inline QueryGroup random_group(std::mt19937_64& rng, std::size_t m, std::size_t d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> grade(0, 2);
  std::vector<double> features(m * d);
  for (double& v : features) v = normal(rng);
  std::vector<int> relevance(m);
  do {
    for (int& r : relevance) r = grade(rng);
  } while (std::all_of(relevance.begin(), relevance.end(), [](int r) { return r == 0; }));
  return QueryGroup("rand", d, std::move(features), std::move(relevance));
}

inline std::vector<GradCheckRow> check_gradients(const GradCheckOptions& opt) {
  std::vector<GradCheckRow> rows;
  for (ObjectiveKind kind : kAllObjectives) {
    const ObjectiveSpec spec{kind, opt.la_weight, opt.temperature};
    std::mt19937_64 rng(opt.seed);
    std::uniform_int_distribution<std::size_t> size(opt.min_docs, opt.max_docs);
    GradCheckRow row{kind};
    for (std::size_t t = 0; t < opt.trials; ++t) {
      const auto group = random_group(rng, size(rng), opt.feature_dim);
      const auto theta = random_direction(opt.feature_dim, rng);
      const auto analytic = objective_eval(spec, group, theta).grad;
      const auto numeric = numeric_gradient(spec, group, theta, opt.step);
      row.max_rel_error = std::max(row.max_rel_error, relative_error(analytic, numeric));
      ++row.trials;
    }
    row.passed = row.max_rel_error < opt.tolerance;
    rows.push_back(row);
  }
  return rows;
}

inline void write_gradcheck_csv(const std::vector<GradCheckRow>& rows, std::ostream& out) {
  detail::PrecisionGuard guard(out);
  out << "objective,trials,max_rel_error,status\n";
  for (const auto& r : rows) {
    out << to_string(r.kind) << ',' << r.trials << ',' << r.max_rel_error << ',' << (r.passed ? "pass" : "fail")
        << '\n';
  }
}

}  // namespace crfrank
