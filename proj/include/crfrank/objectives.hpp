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

// Exact per-query values and parameter gradients of the five training
// objectives, computed by summing over every permutation of the group.
//
// Notation used below: E_j is the energy of the j-th enumerated permutation,
// l_j its loss, p = softmax(-E) the model distribution, Y0 the zero-loss set
// and G_j = dE_j/dtheta. Every gradient here is a weighted sum
// sum_j w_j G_j, and since G_j = -sum_i alpha_{y_j(i)} phi_i that sum collapses
// to a single pass over the documents (see combine_energy_grads).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crfrank/crf_model.hpp"
#include "crfrank/errors.hpp"
#include "crfrank/letor_data.hpp"
#include "crfrank/rank_space.hpp"

namespace crfrank {

enum class ObjectiveKind { ML, LA, LS, EL, KL };

inline constexpr ObjectiveKind kAllObjectives[] = {ObjectiveKind::ML, ObjectiveKind::LA, ObjectiveKind::LS,
                                                   ObjectiveKind::EL, ObjectiveKind::KL};

inline std::string_view to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::ML: return "ML";
    case ObjectiveKind::LA: return "LA";
    case ObjectiveKind::LS: return "LS";
    case ObjectiveKind::EL: return "EL";
    case ObjectiveKind::KL: return "KL";
  }
  return "?";
}

inline ObjectiveKind parse_objective_kind(std::string_view name) {
  std::string upper;
  for (char c : name) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  for (ObjectiveKind k : kAllObjectives) {
    if (to_string(k) == upper) return k;
  }
  throw ContractError("unknown objective '" + std::string(name) + "' (expected ml, la, ls, el or kl)");
}

struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::ML;
  double la_weight = 1.0;    // loss-augmentation weight, LA only
  double temperature = 1.0;  // target sharpness, KL only

  void validate() const {
    if (!(la_weight > 0.0)) throw ContractError("loss-augmentation weight must be positive");
    if (!(temperature > 0.0)) throw ContractError("temperature must be positive");
  }
};

struct ObjectiveEval {
  double value = 0.0;
  std::vector<double> grad;
};

// Everything about one group needed for exact sums: the enumeration, the
// energies under the current theta, and the theta-independent loss table.
struct QueryEnumeration {
  std::shared_ptr<const std::vector<Permutation>> perms;
  PositionWeights alpha;
  std::vector<double> energies;
  std::vector<double> losses;  // members of zero_loss are stored as exactly 0
  std::vector<std::size_t> zero_loss;
  double log_partition = 0.0;  // log Z of the unmodified energy

  std::size_t size() const noexcept { return energies.size(); }
};

namespace detail {

// log sum_j exp(-e_j), stabilized by the minimum energy.
inline double log_sum_exp_neg(std::span<const double> e) {
  const double lo = *std::min_element(e.begin(), e.end());
  double s = 0.0;
  for (double v : e) s += std::exp(lo - v);
  return std::log(s) - lo;
}

inline std::vector<double> softmax_neg(std::span<const double> e) {
  const double lz = log_sum_exp_neg(e);
  std::vector<double> p(e.size());
  for (std::size_t j = 0; j < e.size(); ++j) p[j] = std::exp(-e[j] - lz);
  return p;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline void check_aligned(std::span<const double> energies, std::span<const double> losses,
                          std::span<const std::size_t> zero_loss) {
  if (energies.empty() || energies.size() != losses.size()) {
    throw ContractError("energies and losses must be non-empty and aligned");
  }
  for (std::size_t t : zero_loss) {
    if (t >= energies.size()) throw ContractError("zero-loss index out of range");
  }
}

inline void require_ground_truth(std::span<const std::size_t> zero_loss) {
  if (zero_loss.empty()) throw ContractError("objective needs at least one zero-loss permutation");
}

inline std::vector<double> loss_augmented(std::span<const double> energies, std::span<const double> losses,
                                          double weight) {
  std::vector<double> out(energies.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = energies[j] - weight * losses[j];
  return out;
}

inline double mean_over(std::span<const double> v, std::span<const std::size_t> idx) {
  double s = 0.0;
  for (std::size_t t : idx) s += v[t];
  return s / static_cast<double>(idx.size());
}

inline std::vector<double> loss_scaled(std::span<const double> energies, std::span<const double> losses,
                                       std::span<const std::size_t> zero_loss) {
  const double gt_energy = mean_over(energies, zero_loss);
  std::vector<double> out(energies.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = losses[j] * (energies[j] - gt_energy) - losses[j];
  return out;
}

}  // namespace detail

// Loss-scaled energies l_j (E_j - mean_{Y0} E) - l_j.
inline std::vector<double> loss_scaled_energies(const QueryEnumeration& en) {
  detail::require_ground_truth(en.zero_loss);
  return detail::loss_scaled(en.energies, en.losses, en.zero_loss);
}

// Per-query objective value as a function of free energies. This is the one
// definition of each objective; the analytic theta-gradients below are
// checked against finite differences of it.
inline double objective_value(const ObjectiveSpec& spec, std::span<const double> energies,
                              std::span<const double> losses, std::span<const std::size_t> zero_loss) {
  spec.validate();
  detail::check_aligned(energies, losses, zero_loss);
  switch (spec.kind) {
    case ObjectiveKind::ML: {
      detail::require_ground_truth(zero_loss);
      const double lz = detail::log_sum_exp_neg(energies);
      double v = 0.0;
      for (std::size_t t : zero_loss) v += energies[t] + lz;
      return v;
    }
    case ObjectiveKind::LA: {
      detail::require_ground_truth(zero_loss);
      const auto e = detail::loss_augmented(energies, losses, spec.la_weight);
      const double lz = detail::log_sum_exp_neg(e);
      double v = 0.0;
      for (std::size_t t : zero_loss) v += e[t] + lz;
      return v;
    }
    case ObjectiveKind::LS: {
      detail::require_ground_truth(zero_loss);
      return detail::log_sum_exp_neg(detail::loss_scaled(energies, losses, zero_loss));
    }
    case ObjectiveKind::EL: {
      return detail::dot(detail::softmax_neg(energies), losses);
    }
    case ObjectiveKind::KL: {
      const auto q = target_distribution(losses, spec.temperature);
      const double lz = detail::log_sum_exp_neg(energies);
      double v = 0.0;
      for (std::size_t j = 0; j < energies.size(); ++j) v += q.probs[j] * (energies[j] + lz);
      return v;
    }
  }
  throw ContractError("unknown objective kind");
}

inline QueryEnumeration enumerate_query(const QueryGroup& group, const ParamVector& theta,
                                        std::size_t cap = kDefaultEnumerationCap) {
  QueryEnumeration en;
  en.perms = cached_permutations(group.size(), cap);
  en.alpha = position_weights(group.size());
  const auto s = score(theta, group);
  const auto& perms = *en.perms;
  en.energies.reserve(perms.size());
  for (const auto& y : perms) en.energies.push_back(energy(y, s, en.alpha));
  en.losses = loss_table(perms, group.relevance()).losses;
  en.zero_loss = zero_loss_indices(en.losses);
  for (std::size_t t : en.zero_loss) en.losses[t] = 0.0;
  en.log_partition = detail::log_sum_exp_neg(en.energies);
  return en;
}

// sum_j w_j dE_j/dtheta, computed as -sum_i c_i phi_i with
// c_i = sum_j w_j alpha_{y_j(i)}.
inline std::vector<double> combine_energy_grads(const QueryEnumeration& en, const QueryGroup& group,
                                                std::span<const double> weights) {
  const auto& perms = *en.perms;
  const std::size_t m = group.size();
  std::vector<double> coef(m, 0.0);
  for (std::size_t j = 0; j < perms.size(); ++j) {
    if (weights[j] == 0.0) continue;
    const auto& ranks = perms[j].ranks();
    for (std::size_t i = 0; i < m; ++i) coef[i] += weights[j] * en.alpha.at_rank(ranks[i]);
  }
  std::vector<double> g(group.feature_dim(), 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    auto row = group.row(i);
    for (std::size_t k = 0; k < row.size(); ++k) g[k] -= coef[i] * row[k];
  }
  return g;
}

namespace detail {

// Shared by ML and LA: sum_{t in Y0} [E'_t + log Z'] over modified energies E'.
inline ObjectiveEval likelihood_eval(const QueryEnumeration& en, const QueryGroup& group,
                                     std::span<const double> modified) {
  require_ground_truth(en.zero_loss);
  const double lz = log_sum_exp_neg(modified);
  const auto p = softmax_neg(modified);
  const double n0 = static_cast<double>(en.zero_loss.size());
  std::vector<double> w(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) w[j] = -n0 * p[j];
  ObjectiveEval out;
  for (std::size_t t : en.zero_loss) {
    out.value += modified[t] + lz;
    w[t] += 1.0;
  }
  out.grad = combine_energy_grads(en, group, w);
  return out;
}

}  // namespace detail

// Maximum likelihood of every zero-loss ranking.
inline ObjectiveEval ml_eval(const QueryEnumeration& en, const QueryGroup& group) {
  return detail::likelihood_eval(en, group, en.energies);
}

// Maximum likelihood under E - weight * l. Zero-loss members keep their
// original energy.
inline ObjectiveEval la_eval(const QueryEnumeration& en, const QueryGroup& group, double weight) {
  if (!(weight > 0.0)) throw ContractError("loss-augmentation weight must be positive");
  return detail::likelihood_eval(en, group, detail::loss_augmented(en.energies, en.losses, weight));
}

// log sum_j exp(-E^LS_j). The ground-truth term is identically zero, and the
// gradient flows through both E_j and the mean zero-loss energy:
//   grad = -sum_j p_j l_j (G_j - mean_{Y0} G).
inline ObjectiveEval ls_eval(const QueryEnumeration& en, const QueryGroup& group) {
  const auto scaled = loss_scaled_energies(en);
  const auto p = detail::softmax_neg(scaled);
  const double pl = detail::dot(p, en.losses);
  const double n0 = static_cast<double>(en.zero_loss.size());
  std::vector<double> w(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) w[j] = -p[j] * en.losses[j];
  for (std::size_t t : en.zero_loss) w[t] += pl / n0;
  ObjectiveEval out;
  out.value = detail::log_sum_exp_neg(scaled);
  out.grad = combine_energy_grads(en, group, w);
  return out;
}

// E_p[l]; grad = E_p[l] E_p[G] - E_p[l G].
inline ObjectiveEval el_eval(const QueryEnumeration& en, const QueryGroup& group) {
  const auto p = detail::softmax_neg(en.energies);
  const double expected = detail::dot(p, en.losses);
  std::vector<double> w(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) w[j] = p[j] * (expected - en.losses[j]);
  ObjectiveEval out;
  out.value = expected;
  out.grad = combine_energy_grads(en, group, w);
  return out;
}

// Cross-entropy -sum_j q_j log p_j against q = target_distribution(l, T);
// grad = E_q[G] - E_p[G].
inline ObjectiveEval kl_eval(const QueryEnumeration& en, const QueryGroup& group, double temperature) {
  const auto q = target_distribution(en.losses, temperature);
  const auto p = detail::softmax_neg(en.energies);
  std::vector<double> w(p.size());
  ObjectiveEval out;
  for (std::size_t j = 0; j < p.size(); ++j) {
    w[j] = q.probs[j] - p[j];
    out.value += q.probs[j] * (en.energies[j] + en.log_partition);
  }
  out.grad = combine_energy_grads(en, group, w);
  return out;
}

// D_KL(q || p): the cross-entropy minus the theta-independent entropy of q.
inline double kl_divergence(const QueryEnumeration& en, double temperature) {
  const auto q = target_distribution(en.losses, temperature);
  double v = 0.0;
  for (std::size_t j = 0; j < en.size(); ++j) v += q.probs[j] * (en.energies[j] + en.log_partition);
  return v - entropy(q.probs);
}

inline ObjectiveEval objective_eval(const ObjectiveSpec& spec, const QueryEnumeration& en,
                                    const QueryGroup& group) {
  spec.validate();
  switch (spec.kind) {
    case ObjectiveKind::ML: return ml_eval(en, group);
    case ObjectiveKind::LA: return la_eval(en, group, spec.la_weight);
    case ObjectiveKind::LS: return ls_eval(en, group);
    case ObjectiveKind::EL: return el_eval(en, group);
    case ObjectiveKind::KL: return kl_eval(en, group, spec.temperature);
  }
  throw ContractError("unknown objective kind");
}

inline ObjectiveEval objective_eval(const ObjectiveSpec& spec, const QueryGroup& group, const ParamVector& theta,
                                    std::size_t cap = kDefaultEnumerationCap) {
  spec.validate();
  return objective_eval(spec, enumerate_query(group, theta, cap), group);
}

inline double objective_value(const ObjectiveSpec& spec, const QueryGroup& group, const ParamVector& theta,
                              std::size_t cap = kDefaultEnumerationCap) {
  const auto en = enumerate_query(group, theta, cap);
  return objective_value(spec, en.energies, en.losses, en.zero_loss);
}

inline constexpr double kEnergyDerivativeStep = 1e-6;

// Negative derivative of the per-query objective with respect to each
// configuration's energy, treating energies as free variables, normalized to
// unit l2 norm. `gt` is the 0-based index of the single ground truth.
inline std::vector<double> energy_derivatives(const ObjectiveSpec& spec, std::span<const double> energies,
                                              std::span<const double> losses, std::size_t gt) {
  spec.validate();
  if (energies.size() < 2 || energies.size() != losses.size()) {
    throw ContractError("energy derivative analysis needs at least two aligned configurations");
  }
  if (gt >= losses.size()) throw ContractError("ground-truth index out of range");
  if (std::abs(losses[gt]) > kZeroLossTolerance) throw ContractError("ground-truth configuration must have zero loss");

  const std::size_t zero_loss[] = {gt};
  std::vector<double> e(energies.begin(), energies.end());
  std::vector<double> v(e.size());
  for (std::size_t j = 0; j < e.size(); ++j) {
    const double saved = e[j];
    e[j] = saved + kEnergyDerivativeStep;
    const double up = objective_value(spec, e, losses, zero_loss);
    e[j] = saved - kEnergyDerivativeStep;
    const double down = objective_value(spec, e, losses, zero_loss);
    e[j] = saved;
    v[j] = -(up - down) / (2.0 * kEnergyDerivativeStep);
  }
  const double norm = std::sqrt(detail::dot(v, v));
  if (norm == 0.0) throw DegenerateGradientError("objective is flat in every configuration energy");
  for (double& x : v) x /= norm;
  return v;
}

}  // namespace crfrank
