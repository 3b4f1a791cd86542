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

#include <random>
#include <sstream>

#include "gtest/gtest.h"

#include "crfrank/evaluation.hpp"
#include "crfrank/synthetic.hpp"

namespace crfrank {
namespace {

Dataset one_query(std::vector<double> features, std::vector<int> r) {
  Dataset ds;
  ds.feature_dim = 1;
  ds.groups.emplace_back("q1", 1, std::move(features), std::move(r));
  return ds;
}

TEST(Evaluate, SingleQueryExample) {
  // scores [0.1, 0.9, 0.5] rank the grade-1 document first.
  const auto report = evaluate(ParamVector(std::vector<double>{1.0}), one_query({0.1, 0.9, 0.5}, {2, 1, 0}), 5);
  ASSERT_EQ(report.per_query.size(), 1u);
  EXPECT_DOUBLE_EQ(report.means[0], 0.5);
  EXPECT_EQ(report.means[4], report.means[2]);  // K >= m is untruncated
  EXPECT_DOUBLE_EQ(report.means[2], ndcg(Permutation({3, 1, 2}), std::vector<int>{2, 1, 0}));
}

TEST(Evaluate, IdealModelScoresOne) {
  std::mt19937_64 rng(3);
  SyntheticSpec spec;
  spec.queries = 20;
  const auto hidden = random_direction(spec.feature_dim, rng);
  const auto ds = generate_synthetic(spec, hidden, rng);
  const auto report = evaluate(hidden, ds, 5);
  for (double m : report.means) EXPECT_EQ(m, 1.0);
}

TEST(Evaluate, ZeroThetaUsesIdentityRanking) {
  const auto ds = one_query({3, 1, 2}, {0, 1, 2});
  const auto report = evaluate(ParamVector(1), ds, 3);
  const Permutation identity({1, 2, 3});
  for (std::size_t k = 1; k <= 3; ++k) {
    EXPECT_EQ(report.means[k - 1], ndcg_at_k(identity, std::vector<int>{0, 1, 2}, k));
  }
}

TEST(Evaluate, EmptyQueriesCountAsZeroUnlessExcluded) {
  Dataset ds = one_query({1, 0}, {1, 0});
  ds.groups.emplace_back("empty", 1, std::vector<double>{1, 0}, std::vector<int>{0, 0});
  const auto with = evaluate(ParamVector(std::vector<double>{1.0}), ds, 2);
  EXPECT_EQ(with.per_query.size(), 2u);
  EXPECT_DOUBLE_EQ(with.means[0], 0.5);
  const auto without = evaluate(ParamVector(std::vector<double>{1.0}), ds, 2, true);
  EXPECT_EQ(without.per_query.size(), 1u);
  EXPECT_DOUBLE_EQ(without.means[0], 1.0);
}

TEST(Evaluate, ContractErrors) {
  EXPECT_THROW(evaluate(ParamVector(2), one_query({1}, {1}), 5), DimensionError);
  EXPECT_THROW(evaluate(ParamVector(1), one_query({1}, {1}), 0), ContractError);
  EXPECT_THROW(evaluate(ParamVector(1), Dataset{{}, 1}, 5), ContractError);
}

TEST(Evaluate, PureAndRepeatable) {
  std::mt19937_64 rng(5);
  SyntheticSpec spec;
  spec.queries = 15;
  const auto ds = generate_synthetic(spec, random_direction(5, rng), rng);
  const auto theta = random_direction(5, rng);
  const auto copy_ds = ds;
  const auto copy_theta = theta;
  const auto a = evaluate(theta, ds, 5);
  const auto b = evaluate(theta, ds, 5);
  EXPECT_EQ(a.means, b.means);
  EXPECT_EQ(ds, copy_ds);
  EXPECT_EQ(theta, copy_theta);
  for (const auto& q : a.per_query) {
    for (double v : q.ndcg) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(EvaluateFolds, Averaging) {
  auto report_with = [](double v) {
    EvalReport r;
    r.K = 1;
    r.means = {v};
    return r;
  };
  const auto fr = fold_report({report_with(1), report_with(0), report_with(1), report_with(0), report_with(1)});
  EXPECT_DOUBLE_EQ(fr.grand_mean[0], 0.6);
  EXPECT_EQ(fr.per_fold.size(), 5u);
}

TEST(EvaluateFolds, IdenticalFoldsAndCountChecks) {
  FoldSplit f;
  f.test = one_query({0.1, 0.9, 0.5}, {2, 1, 0});
  std::vector<FoldSplit> folds(5, f);
  std::vector<ParamVector> models(5, ParamVector(std::vector<double>{1.0}));
  const auto fr = evaluate_folds(models, folds, 3);
  const auto single = evaluate(models[0], f.test, 3);
  EXPECT_EQ(fr.grand_mean, single.means);

  models.pop_back();
  EXPECT_THROW(evaluate_folds(models, folds, 3), ContractError);
  models.push_back(ParamVector(std::vector<double>{1.0}));
  folds[2].test = Dataset{{}, 1};
  EXPECT_THROW(evaluate_folds(models, folds, 3), ContractError);
}

TEST(Csv, MeansRoundTrip) {
  std::mt19937_64 rng(7);
  SyntheticSpec spec;
  spec.queries = 12;
  const auto ds = generate_synthetic(spec, random_direction(5, rng), rng);
  const auto report = evaluate(random_direction(5, rng), ds, 5);
  std::stringstream csv;
  write_means_csv(report, csv);
  const auto back = parse_means_csv(csv);
  ASSERT_EQ(back.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(back[k], report.means[k], 1e-12);

  std::stringstream bad("k,ndcg\n2,0.5\n");
  EXPECT_THROW(parse_means_csv(bad), ParseError);
}

TEST(Csv, Layouts) {
  const auto report = evaluate(ParamVector(std::vector<double>{1.0}), one_query({0.1, 0.9, 0.5}, {2, 1, 0}), 2);
  std::ostringstream per_query;
  write_per_query_csv(report, per_query);
  EXPECT_EQ(per_query.str(), "qid,ndcg@1,ndcg@2\nq1,0.5," + [&] {
    std::ostringstream v;
    v.precision(17);
    v << report.means[1];
    return v.str();
  }() + "\n");

  const auto fr = fold_report({report, report});
  std::ostringstream folds, table;
  write_fold_report_csv(fr, folds);
  EXPECT_EQ(folds.str().substr(0, folds.str().find('\n')), "k,fold1,fold2,mean");
  write_objective_table_csv({{"ML", fr}, {"KL", fr}}, table);
  EXPECT_EQ(table.str().substr(0, table.str().find('\n')), "k,ML,KL");
}

}  // namespace
}  // namespace crfrank
