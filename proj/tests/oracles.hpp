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

// Test-only reference computations. None of these call into the library's
// objective or ranking code paths; they restate each quantity from its
// definition by brute force.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include "crfrank/letor_data.hpp"

namespace crfrank::oracle {

// All rank vectors of length m by recursive construction (order irrelevant).
inline std::vector<std::vector<int>> all_rank_vectors(int m) {
  std::vector<std::vector<int>> out;
  std::vector<int> current(m, 0);
  std::vector<bool> used(m + 1, false);
  std::function<void(int)> rec = [&](int doc) {
    if (doc == m) {
      out.push_back(current);
      return;
    }
    for (int pos = 1; pos <= m; ++pos) {
      if (used[pos]) continue;
      used[pos] = true;
      current[doc] = pos;
      rec(doc + 1);
      used[pos] = false;
    }
  };
  rec(0);
  return out;
}

inline double dcg(const std::vector<int>& y, const std::vector<int>& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r[i] * std::log(2.0) / std::log(1.0 + y[i]);
  return s;
}

// NDCG with the normalizer found by maximizing DCG over every ranking.
inline double ndcg(const std::vector<int>& y, const std::vector<int>& r) {
  double best = 0.0;
  for (const auto& p : all_rank_vectors(static_cast<int>(r.size()))) best = std::max(best, dcg(p, r));
  return best > 0.0 ? dcg(y, r) / best : 0.0;
}

inline double energy(const std::vector<int>& y, const std::vector<double>& s) {
  double e = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) e -= std::log(2.0) / std::log(1.0 + y[i]) * s[i];
  return e;
}

inline std::vector<double> scores(const QueryGroup& g, const std::vector<double>& theta) {
  std::vector<double> s(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < theta.size(); ++j) s[i] += g.row(i)[j] * theta[j];
  }
  return s;
}

inline std::vector<double> softmax_neg(const std::vector<double>& e) {
  double lo = *std::min_element(e.begin(), e.end());
  std::vector<double> p(e.size());
  double z = 0.0;
  for (std::size_t j = 0; j < e.size(); ++j) z += p[j] = std::exp(lo - e[j]);
  for (double& v : p) v /= z;
  return p;
}

// Central differences of an arbitrary scalar function of theta.
inline std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                              std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double saved = x[j];
    x[j] = saved + h;
    const double up = f(x);
    x[j] = saved - h;
    const double down = f(x);
    x[j] = saved;
    g[j] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0, n = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    d += (a[j] - b[j]) * (a[j] - b[j]);
    n += b[j] * b[j];
  }
  return std::sqrt(d) / std::max(std::sqrt(n), 1e-8);
}

inline QueryGroup random_group(std::mt19937_64& rng, std::size_t m, std::size_t d, std::vector<int> relevance) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> f(m * d);
  for (double& v : f) v = normal(rng);
  return QueryGroup("t", d, std::move(f), std::move(relevance));
}

inline std::vector<int> random_grades(std::mt19937_64& rng, std::size_t m) {
  std::uniform_int_distribution<int> grade(0, 2);
  std::vector<int> r(m);
  do {
    for (int& v : r) v = grade(rng);
  } while (std::all_of(r.begin(), r.end(), [](int v) { return v == 0; }));
  return r;
}

// Distinct grades: a shuffled 0..m-1, so the ideal ranking is unique.
inline std::vector<int> distinct_grades(std::mt19937_64& rng, std::size_t m) {
  std::vector<int> r(m);
  for (std::size_t i = 0; i < m; ++i) r[i] = static_cast<int>(i);
  std::shuffle(r.begin(), r.end(), rng);
  return r;
}

inline std::vector<double> normal_vector(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(d);
  for (double& x : v) x = normal(rng);
  return v;
}


enum class Kind { ML, LA, LS, EL, KL };

// Per-query objective straight from its definition, by enumerating every
// ranking. Zero-loss rankings are those with NDCG exactly at its maximum.
inline double objective(Kind kind, const QueryGroup& g, const std::vector<double>& theta, double la_weight,
                        double temperature) {
  const auto s = scores(g, theta);
  const auto perms = all_rank_vectors(static_cast<int>(g.size()));
  std::vector<double> e, l;
  std::vector<std::size_t> gt;
  double best = 0.0;
  for (const auto& y : perms) best = std::max(best, dcg(y, g.relevance()));
  for (std::size_t j = 0; j < perms.size(); ++j) {
    e.push_back(energy(perms[j], s));
    l.push_back(best > 0.0 ? 1.0 - dcg(perms[j], g.relevance()) / best : 1.0);
    if (std::abs(l.back()) < 1e-12) {
      l.back() = 0.0;
      gt.push_back(j);
    }
  }
  auto log_z = [](const std::vector<double>& en) {
    double z = 0.0;
    const double lo = *std::min_element(en.begin(), en.end());
    for (double v : en) z += std::exp(lo - v);
    return std::log(z) - lo;
  };
  switch (kind) {
    case Kind::ML: {
      double v = 0.0;
      for (std::size_t t : gt) v += -(-e[t] - log_z(e));  // -log p(y_t)
      return v;
    }
    case Kind::LA: {
      std::vector<double> ea(e.size());
      for (std::size_t j = 0; j < e.size(); ++j) ea[j] = e[j] - la_weight * l[j];
      double v = 0.0;
      for (std::size_t t : gt) v += ea[t] + log_z(ea);
      return v;
    }
    case Kind::LS: {
      double mean_gt = 0.0;
      for (std::size_t t : gt) mean_gt += e[t];
      mean_gt /= static_cast<double>(gt.size());
      std::vector<double> es(e.size());
      for (std::size_t j = 0; j < e.size(); ++j) es[j] = l[j] * (e[j] - mean_gt) - l[j];
      return log_z(es);
    }
    case Kind::EL: {
      const auto p = softmax_neg(e);
      double v = 0.0;
      for (std::size_t j = 0; j < e.size(); ++j) v += p[j] * l[j];
      return v;
    }
    case Kind::KL: {
      double zq = 0.0;
      for (double v : l) zq += std::exp(-v / temperature);
      const auto p = softmax_neg(e);
      double v = 0.0;
      for (std::size_t j = 0; j < e.size(); ++j) v -= std::exp(-l[j] / temperature) / zq * std::log(p[j]);
      return v;
    }
  }
  return 0.0;
}

}  // namespace crfrank::oracle
