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

// Command-line front end: train, evaluate, sweep, analyze-derivatives,
// check-gradients and synthesize.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "crfrank/crfrank.hpp"

namespace crfrank::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitContract = 1;
inline constexpr int kExitIo = 2;

namespace detail {

inline std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    auto v = crfrank::detail::parse_number<double>(std::string_view(text).substr(start, comma - start));
    if (!v) throw ContractError(flag + ": '" + text + "' is not a comma-separated list of numbers");
    out.push_back(*v);
    start = comma + 1;
  }
  return out;
}

inline std::vector<ObjectiveKind> parse_objectives(const std::string& text) {
  if (text == "all" || text == "ALL") return {std::begin(kAllObjectives), std::end(kAllObjectives)};
  std::vector<ObjectiveKind> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    out.push_back(parse_objective_kind(std::string_view(text).substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

// Writes to `path`, or to `fallback` when the path is empty.
template <typename Writer>
void emit(const std::string& path, std::ostream& fallback, Writer&& writer) {
  if (path.empty()) {
    writer(fallback);
    return;
  }
  write_file(path, writer);
}

struct TrainFlags {
  std::string objective = "kl";
  double alpha = 1.0;
  double temperature = 1.0;
  double lr = 0.1;
  int epochs = 50;
  std::uint64_t seed = 1;
  std::size_t max_group_size = 6;
  double weight_decay = 0.0;
  bool no_shuffle = false;
  bool keep_zero_signal = false;

  void attach(CLI::App& app, bool with_hyper) {
    if (with_hyper) {
      app.add_option("--objective", objective, "ml, la, ls, el or kl")->capture_default_str();
      app.add_option("--alpha", alpha, "loss-augmentation weight (la)")->capture_default_str();
      app.add_option("--temperature", temperature, "target temperature (kl)")->capture_default_str();
      app.add_option("--lr", lr, "learning rate")->capture_default_str();
    }
    app.add_option("--epochs", epochs, "passes over the training queries")->capture_default_str();
    app.add_option("--seed", seed, "RNG seed")->capture_default_str();
    app.add_option("--max-group-size", max_group_size, "documents kept per query visit")->capture_default_str();
    app.add_option("--weight-decay", weight_decay, "l2 decay added to every step")->capture_default_str();
    app.add_flag("--no-shuffle", no_shuffle, "visit queries in file order");
    app.add_flag("--keep-zero-signal", keep_zero_signal, "do not skip subsamples whose rankings all have zero loss");
  }

  TrainConfig config() const {
    TrainConfig c;
    c.objective = {parse_objective_kind(objective), alpha, temperature};
    c.learning_rate = lr;
    c.epochs = epochs;
    c.seed = seed;
    c.max_group_size = max_group_size;
    c.weight_decay = weight_decay;
    c.shuffle_queries = !no_shuffle;
    c.skip_zero_signal_queries = !keep_zero_signal;
    return c;
  }
};

}  // namespace detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Listwise CRF ranker with loss-sensitive training objectives", "crfrank"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
  detail::TrainFlags train_flags;
  train_flags.attach(*train, true);
  std::string train_file, fold_dir, train_out, train_log;
  int fold = 1;
  train->add_option("--train", train_file, "LETOR training file");
  train->add_option("--fold-dir", fold_dir, "directory holding Fold<k>/train.txt");
  train->add_option("--fold", fold, "fold index under --fold-dir")->capture_default_str();
  train->add_option("--out", train_out, "checkpoint path")->required();
  train->add_option("--log", train_log, "training log CSV (default: <out>.log.csv)");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "NDCG@1..K of a checkpoint on a dataset");
  std::string model_path, data_path, eval_out, per_query_out, eval_fold_dir;
  int eval_fold = 1;
  std::size_t k = kDefaultTruncation;
  bool exclude_empty = false;
  eval->add_option("--model", model_path, "checkpoint")->required();
  eval->add_option("--data", data_path, "LETOR file to evaluate");
  eval->add_option("--fold-dir", eval_fold_dir, "evaluate on Fold<k>/test.txt instead of --data");
  eval->add_option("--fold", eval_fold, "fold index under --fold-dir")->capture_default_str();
  eval->add_option("--k", k, "largest truncation")->capture_default_str();
  eval->add_option("--out", eval_out, "means CSV (default: stdout)");
  eval->add_option("--per-query", per_query_out, "per-query CSV");
  eval->add_flag("--exclude-empty", exclude_empty, "drop queries without relevant documents");

  // sweep
  auto* sw = app.add_subcommand("sweep", "grid search per fold, then test-set NDCG averaged over folds");
  detail::TrainFlags sweep_flags;
  sweep_flags.attach(*sw, false);
  std::string sweep_dir, sweep_out, sweep_objectives = "all", lr_grid, alpha_grid, t_grid;
  int folds = 5;
  std::size_t sweep_k = kDefaultTruncation, selection_k = 0;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  bool printed_lr = false, sweep_exclude_empty = false;
  sw->add_option("--fold-dir", sweep_dir, "LETOR directory with Fold1..Fold<n>")->required();
  sw->add_option("--objective", sweep_objectives, "comma list of objectives, or 'all'")->capture_default_str();
  sw->add_option("--folds", folds, "number of folds")->capture_default_str();
  sw->add_option("--lr-grid", lr_grid, "learning rates, comma separated");
  sw->add_flag("--printed-lr-grid", printed_lr, "use 0.5,0.01,0.01,0.001 as the learning-rate grid");
  sw->add_option("--alpha-grid", alpha_grid, "loss-augmentation weights, comma separated");
  sw->add_option("--temperature-grid", t_grid, "temperatures, comma separated");
  sw->add_option("--k", sweep_k, "largest reported truncation")->capture_default_str();
  sw->add_option("--selection-k", selection_k, "validation NDCG@k used for selection (0: mean of @1..5)")
      ->capture_default_str();
  sw->add_option("--threads", threads, "grid points trained concurrently");
  sw->add_flag("--exclude-empty", sweep_exclude_empty, "drop queries without relevant documents from test means");
  sw->add_option("--out", sweep_out, "output directory")->required();

  // analyze-derivatives
  auto* an = app.add_subcommand("analyze-derivatives", "normalized negative energy derivatives per objective");
  std::string energies_text, losses_text, an_objectives = "ML,LA,LS,EL,KL", an_out;
  std::size_t gt = 0;
  double an_alpha = 1.0, an_temperature = 1.0;
  an->add_option("--energies", energies_text, "comma-separated energies")->required();
  an->add_option("--losses", losses_text, "comma-separated losses")->required();
  an->add_option("--gt", gt, "1-based index of the ground-truth configuration")->required();
  an->add_option("--objectives", an_objectives, "comma list of objectives")->capture_default_str();
  an->add_option("--alpha", an_alpha, "loss-augmentation weight")->capture_default_str();
  an->add_option("--temperature", an_temperature, "KL target temperature")->capture_default_str();
  an->add_option("--out", an_out, "CSV path (default: stdout)");

  // check-gradients
  auto* gc = app.add_subcommand("check-gradients", "finite-difference audit of every objective's gradient");
  GradCheckOptions gc_opt;
  std::string gc_out;
  gc->add_option("--trials", gc_opt.trials, "random instances per objective")->capture_default_str();
  gc->add_option("--seed", gc_opt.seed, "RNG seed")->capture_default_str();
  gc->add_option("--tol", gc_opt.tolerance, "maximum relative error")->capture_default_str();
  gc->add_option("--alpha", gc_opt.la_weight, "loss-augmentation weight")->capture_default_str();
  gc->add_option("--temperature", gc_opt.temperature, "KL target temperature")->capture_default_str();
  gc->add_option("--out", gc_out, "CSV path (default: stdout)");

  // synthesize
  auto* syn = app.add_subcommand("synthesize", "write a synthetic five-fold LETOR directory");
  SyntheticSpec syn_spec;
  std::string syn_out;
  std::uint64_t syn_seed = 1;
  syn->add_option("--out", syn_out, "output directory")->required();
  syn->add_option("--queries", syn_spec.queries, "total queries")->capture_default_str();
  syn->add_option("--docs", syn_spec.docs_per_query, "documents per query")->capture_default_str();
  syn->add_option("--dim", syn_spec.feature_dim, "feature dimension")->capture_default_str();
  syn->add_option("--seed", syn_seed, "RNG seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitContract;
  }

  try {
    if (*train) {
      Dataset ds;
      if (!train_file.empty()) {
        ds = read_letor_file(train_file);
      } else if (!fold_dir.empty()) {
        ds = load_fold_dir(fold_dir, fold).train;
      } else {
        throw ContractError("train: pass --train or --fold-dir");
      }
      const auto result = sgd_train(ds, train_flags.config());
      save_checkpoint(result.theta, train_out);
      write_file(train_log.empty() ? train_out + ".log.csv" : train_log,
                 [&](std::ostream& o) { write_training_log_csv(result.log, o); });
      return kExitOk;
    }

    if (*eval) {
      const auto theta = load_checkpoint(model_path);
      Dataset ds;
      if (!data_path.empty()) {
        ds = read_letor_file(data_path);
      } else if (!eval_fold_dir.empty()) {
        ds = load_fold_dir(eval_fold_dir, eval_fold).test;
      } else {
        throw ContractError("evaluate: pass --data or --fold-dir");
      }
      const auto report = evaluate(theta, ds, k, exclude_empty);
      detail::emit(eval_out, out, [&](std::ostream& o) { write_means_csv(report, o); });
      if (!per_query_out.empty()) write_file(per_query_out, [&](std::ostream& o) { write_per_query_csv(report, o); });
      return kExitOk;
    }

    if (*sw) {
      if (folds < 1) throw ContractError("sweep: --folds must be >= 1");
      SweepGrid grid;
      if (printed_lr) grid.learning_rates = SweepGrid::printed_learning_rates();
      if (!lr_grid.empty()) grid.learning_rates = detail::parse_list(lr_grid, "--lr-grid");
      if (!alpha_grid.empty()) grid.la_weights = detail::parse_list(alpha_grid, "--alpha-grid");
      if (!t_grid.empty()) grid.temperatures = detail::parse_list(t_grid, "--temperature-grid");
      grid.selection_k = selection_k;
      const auto kinds = detail::parse_objectives(sweep_objectives);
      const TrainConfig base = sweep_flags.config();

      std::vector<FoldSplit> splits;
      for (int f = 1; f <= folds; ++f) splits.push_back(load_fold_dir(sweep_dir, f));

      std::filesystem::create_directories(sweep_out);
      std::vector<std::pair<std::string, FoldReport>> columns;
      for (ObjectiveKind kind : kinds) {
        const std::string name(to_string(kind));
        const auto dir = std::filesystem::path(sweep_out) / name;
        std::filesystem::create_directories(dir);
        std::vector<ParamVector> models;
        std::ostringstream chosen;
        chosen << "fold,learning_rate,alpha,temperature,validation_score\n";
        chosen.precision(17);
        for (const auto& split : splits) {
          const auto result = sweep(split, grid, kind, base, threads);
          const auto& best = result.best_point();
          models.push_back(best.theta);
          save_checkpoint(best.theta, dir / ("fold" + std::to_string(split.fold_index) + ".theta"));
          chosen << split.fold_index << ',' << best.config.learning_rate << ',' << best.config.objective.la_weight << ','
                 << best.config.objective.temperature << ',' << best.validation_score << '\n';
        }
        const auto report = evaluate_folds(models, splits, sweep_k, sweep_exclude_empty);
        write_file(dir / "fold_report.csv", [&](std::ostream& o) { write_fold_report_csv(report, o); });
        write_file(dir / "selected.csv", [&](std::ostream& o) { o << chosen.str(); });
        columns.emplace_back(name, report);
      }
      write_file(std::filesystem::path(sweep_out) / "ndcg_table.csv",
                 [&](std::ostream& o) { write_objective_table_csv(columns, o); });
      write_objective_table_csv(columns, out);
      return kExitOk;
    }

    if (*an) {
      const auto energies = detail::parse_list(energies_text, "--energies");
      const auto losses = detail::parse_list(losses_text, "--losses");
      if (gt < 1 || gt > energies.size()) throw ContractError("--gt must lie in 1.." + std::to_string(energies.size()));
      const auto kinds = detail::parse_objectives(an_objectives);
      detail::emit(an_out, out, [&](std::ostream& o) {
        crfrank::detail::PrecisionGuard guard(o);
        o << "objective";
        for (std::size_t j = 1; j <= energies.size(); ++j) o << ",c" << j;
        o << '\n';
        for (ObjectiveKind kind : kinds) {
          const auto v = energy_derivatives({kind, an_alpha, an_temperature}, energies, losses, gt - 1);
          o << to_string(kind);
          for (double x : v) o << ',' << x;
          o << '\n';
        }
      });
      return kExitOk;
    }

    if (*gc) {
      const auto rows = check_gradients(gc_opt);
      detail::emit(gc_out, out, [&](std::ostream& o) { write_gradcheck_csv(rows, o); });
      for (const auto& r : rows) {
        if (!r.passed) return kExitContract;
      }
      return kExitOk;
    }

    if (*syn) {
      write_synthetic_folds(syn_out, syn_spec, syn_seed);
      return kExitOk;
    }
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitContract;
  }
  return kExitContract;
}

}  // namespace crfrank::cli
