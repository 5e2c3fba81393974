/*
 * Copyright 2026 The phenomtl Authors.
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

// Command-line driver: cohort generation, labelling, auxiliary task
// selection, single-model training, full experiments, complexity analysis
// and result reports.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "phenomtl/cohort.h"
#include "phenomtl/complexity.h"
#include "phenomtl/config.h"
#include "phenomtl/harness.h"
#include "phenomtl/logreg.h"
#include "phenomtl/metrics.h"
#include "phenomtl/nnet.h"
#include "phenomtl/ruledsl.h"

namespace {

namespace fs = std::filesystem;
using namespace phenomtl;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> settings;
  std::optional<uint64_t> seed;
};

void add_common(CLI::App* app, CommonOptions& opts) {
  app->add_option("-c,--config", opts.config_path, "key = value configuration file")
      ->check(CLI::ExistingFile);
  app->add_option("--set", opts.settings, "override a configuration key (key=value)");
  app->add_option("--seed", opts.seed, "master seed; overrides the config");
}

harness::ExperimentConfig resolve_config(const CommonOptions& opts) {
  auto config = opts.config_path.empty() ? harness::ExperimentConfig{}
                                         : harness::load_config(opts.config_path);
  for (const auto& s : opts.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key=value, got '" + s + "'");
    }
    harness::apply_setting(config, s.substr(0, eq), s.substr(eq + 1));
  }
  if (opts.seed) config.seed = *opts.seed;
  return config;
}

std::ofstream open_output(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

// The cohort named by --cohort, else the config's cohort_file, else the
// generator with the same seed derivation the experiment uses.
std::vector<PatientRecord> obtain_cohort(const harness::ExperimentConfig& config,
                                         const std::string& cohort_path) {
  if (!cohort_path.empty()) return cohort::load_cohort(cohort_path);
  if (!config.cohort_file.empty()) return cohort::load_cohort(config.cohort_file);
  auto gen = config.generator;
  gen.seed = derive_seed(config.seed, {"cohort"});
  return cohort::generate_cohort(gen);
}

std::vector<ruledsl::PhenotypeDefinition> obtain_definitions(
    const harness::ExperimentConfig& config, const std::string& path) {
  std::vector<ruledsl::PhenotypeDefinition> defs;
  if (!path.empty()) {
    defs = ruledsl::load_definitions(path);
  } else if (!config.definitions_file.empty()) {
    defs = ruledsl::load_definitions(config.definitions_file);
  }
  std::string inline_defs;
  for (const auto& d : config.definitions) inline_defs += d + "\n";
  for (auto& d : ruledsl::parse_definitions(inline_defs)) defs.push_back(std::move(d));
  if (defs.empty()) throw std::invalid_argument("no phenotype definitions given");
  return defs;
}

std::string fmt(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.6g", v);
  return buffer;
}

int cmd_generate(const CommonOptions& opts, const std::string& out_path) {
  const auto config = resolve_config(opts);
  const auto records = obtain_cohort(config, "");
  auto out = open_output(out_path);
  cohort::write_cohort(records, out);
  std::cout << "wrote " << records.size() << " patients to " << out_path << '\n';
  return 0;
}

int cmd_label(const CommonOptions& opts, const std::string& cohort_path,
              const std::string& defs_path, const std::string& out_path) {
  const auto config = resolve_config(opts);
  const auto records = obtain_cohort(config, cohort_path);
  const auto defs = obtain_definitions(config, defs_path);
  std::vector<cohort::PhenotypeLabels> labels;
  for (const auto& d : defs) {
    labels.push_back(cohort::label_cohort(records, d));
    std::cout << d.name << "\tprevalence " << fmt(labels.back().prevalence) << '\n';
  }
  if (!out_path.empty()) {
    auto out = open_output(out_path);
    out << "id";
    for (const auto& d : defs) out << '\t' << d.name;
    out << '\n';
    for (size_t i = 0; i < records.size(); ++i) {
      out << records[i].id;
      for (const auto& l : labels) out << '\t' << static_cast<int>(l.labels[i]);
      out << '\n';
    }
  }
  return 0;
}

int cmd_tasks(const CommonOptions& opts, const std::string& out_path) {
  const auto config = resolve_config(opts);
  const auto data = harness::prepare_data(config);
  std::cout << "target " << data.target.name << " prevalence "
            << fmt(data.dataset.prevalence()) << ", " << data.dataset.size() << " patients, "
            << data.vocab.size() << " features\n";
  int eligible = 0;
  for (const auto& t : data.task_pool) {
    eligible += t.prevalence >= config.aux_prevalence_min &&
                t.prevalence <= config.aux_prevalence_max;
  }
  std::cout << data.task_pool.size() << " phecode tasks, " << eligible
            << " within prevalence bounds\n";
  for (int s = 0; s < (config.aux_per_split ? config.n_splits : 1); ++s) {
    const auto sets = harness::auxiliary_sets_for_split(config, data, s);
    for (size_t k = 0; k < sets.size(); ++k) {
      std::cout << (config.aux_per_split ? "split " + std::to_string(s) + " " : "")
                << "size " << config.aux_sizes[k] << ':';
      for (const auto& name : sets[k]) std::cout << ' ' << name;
      std::cout << '\n';
    }
  }
  if (!out_path.empty()) {
    auto out = open_output(out_path);
    out << "task\tprevalence\n";
    for (const auto& t : data.task_pool) out << t.name << '\t' << fmt(t.prevalence) << '\n';
  }
  return 0;
}

int cmd_train(const CommonOptions& opts, const std::string& family, int split, int cell,
              int aux_size, const std::string& out_dir) {
  const auto config = resolve_config(opts);
  const auto data = harness::prepare_data(config);
  const auto splits = cohort::split_dataset(data.dataset, config.fractions,
                                            harness::split_seed(config.seed, split));
  const auto aux = harness::auxiliary_sets_for_split(config, data, split);
  const auto run = harness::run_single(config, splits, aux, split, family, aux_size, cell);
  const auto& r = run.record;
  std::cout << r.model_key() << " split " << split;
  if (family != "LR") {
    std::cout << " layers " << r.layers << " width " << r.width << " lr " << fmt(r.lr)
              << " selected epoch " << run.history.selected_epoch;
  } else {
    std::cout << " lambda " << fmt(r.lr) << " nonzeros " << run.linear->model.nonzeros();
    if (!run.linear->converged) std::cout << " (" << run.linear->diagnostic << ")";
  }
  std::cout << "\nvalidation AUPRC " << fmt(r.val_auprc) << "  test AUPRC "
            << fmt(r.test_auprc) << "  test AUROC "
            << fmt(metrics::auroc(run.test_scores, splits.test.target)) << '\n';
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    if (run.network) {
      auto out = open_output((dir / "model.ckpt").string());
      nnet::save_checkpoint(*run.network, out);
      auto hist = open_output((dir / "history.csv").string());
      hist << "epoch,train_loss,val_auprc\n";
      for (size_t e = 0; e < run.history.train_loss.size(); ++e) {
        hist << e << ',' << fmt(run.history.train_loss[e]) << ','
             << fmt(run.history.validation_auprc[e]) << '\n';
      }
    } else {
      auto out = open_output((dir / "model.tsv").string());
      logreg::export_model(run.linear->model, data.vocab, out);
    }
    auto vocab = open_output((dir / "vocab.txt").string());
    data.vocab.write(vocab);
    auto curve = open_output((dir / "test_pr_curve.csv").string());
    metrics::write_pr_curve_csv(metrics::pr_curve(run.test_scores, splits.test.target), curve);
    auto runs = open_output((dir / "run.csv").string());
    harness::write_runs_csv({r}, runs);
  }
  return 0;
}

int cmd_experiment(const CommonOptions& opts, std::optional<int> threads,
                   const std::string& out_dir, bool quiet) {
  auto config = resolve_config(opts);
  if (threads) config.threads = *threads;
  const auto data = harness::prepare_data(config);
  std::cerr << "target " << data.target.name << " prevalence "
            << fmt(data.dataset.prevalence()) << ", " << data.dataset.size() << " patients, "
            << data.vocab.size() << " features\n";
  harness::RunOptions options;
  options.threads = config.threads;
  if (!quiet) options.progress = [](const std::string& msg) { std::cerr << msg << '\n'; };
  const auto table = harness::run_experiment(config, data, options);
  harness::export_table(table, config, out_dir);
  std::cout << "wrote " << table.runs.size() << " runs (" << table.failures.size()
            << " failed) to " << out_dir << '\n';
  return table.failures.empty() ? 0 : 3;
}

int cmd_complexity(const CommonOptions& opts, const std::string& cohort_path,
                   const std::string& defs_path, int buckets, double alpha,
                   const std::string& out_path, const std::string& hist_dir) {
  const auto config = resolve_config(opts);
  const auto records = obtain_cohort(config, cohort_path);
  const auto defs = obtain_definitions(config, defs_path);
  std::vector<complexity::ComplexityReport> reports;
  for (const auto& d : defs) {
    try {
      reports.push_back(complexity::analyze(records, d, buckets, alpha));
    } catch (const std::invalid_argument& e) {
      std::cerr << "skipping " << d.name << ": " << e.what() << '\n';
    }
  }
  if (out_path.empty()) {
    complexity::write_report_csv(reports, std::cout);
  } else {
    auto out = open_output(out_path);
    complexity::write_report_csv(reports, out);
  }
  if (!hist_dir.empty()) {
    for (const auto& r : reports) {
      auto out = open_output((fs::path(hist_dir) / (r.phenotype + "_histogram.csv")).string());
      complexity::write_histogram_csv(r, out);
    }
  }
  return 0;
}

int cmd_report(const std::string& dir) {
  const auto table = harness::import_table(dir);
  std::map<std::string, std::vector<double>> best;
  for (const auto& r : table.best) best[r.model_key()].push_back(r.test_auprc);
  std::cout << table.runs.size() << " runs, " << table.failures.size() << " failures\n\n";
  std::cout << "model\tsplits\tmedian_test_auprc\tq25\tq75\tmedian_grid_iqr\n";
  for (const auto& [key, values] : best) {
    std::cout << key << '\t' << values.size() << '\t' << fmt(harness::median(values)) << '\t'
              << fmt(harness::quantile(values, 0.25)) << '\t'
              << fmt(harness::quantile(values, 0.75)) << '\t';
    const auto spread = harness::grid_spread(table, key);
    std::cout << (key == "LR" ? std::string("-") : fmt(harness::median(spread))) << '\n';
  }
  std::cout << '\n';
  std::vector<std::string> mtnn;
  for (const auto& [key, values] : best) {
    if (key.rfind("MTNN-", 0) == 0) mtnn.push_back(key);
  }
  auto print_delta = [&](const std::string& a, const std::string& b) {
    if (!best.contains(a) || !best.contains(b)) return;
    std::vector<double> d;
    for (const auto& x : harness::pairwise_deltas(table, a, b)) d.push_back(x.delta);
    int wins = 0;
    for (const double v : d) wins += v > 0;
    std::cout << a << " - " << b << ": median " << fmt(harness::median(d)) << ", positive in "
              << wins << '/' << d.size() << " splits\n";
  };
  for (const auto& k : mtnn) print_delta(k, "STNN");
  for (const auto& k : mtnn) print_delta(k, "LR");
  print_delta("STNN", "LR");
  for (const auto& f : table.failures) {
    std::cout << "failed: split " << f.split << ' ' << f.family << " aux " << f.aux_size
              << " cell " << f.cell << ": " << f.message << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multitask versus single-task phenotyping experiments"};
  app.require_subcommand(1);

  CommonOptions gen_opts;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "generate a synthetic cohort");
  add_common(gen, gen_opts);
  gen->add_option("-o,--out", gen_out, "output cohort TSV")->required();

  CommonOptions label_opts;
  std::string label_cohort, label_defs, label_out;
  auto* label = app.add_subcommand("label", "label a cohort with rule-based phenotypes");
  add_common(label, label_opts);
  label->add_option("--cohort", label_cohort, "cohort TSV")->check(CLI::ExistingFile);
  label->add_option("--definitions", label_defs, "rule DSL file")->check(CLI::ExistingFile);
  label->add_option("-o,--out", label_out, "output label TSV");

  CommonOptions tasks_opts;
  std::string tasks_out;
  auto* tasks = app.add_subcommand("tasks", "derive phecode tasks and auxiliary sets");
  add_common(tasks, tasks_opts);
  tasks->add_option("-o,--out", tasks_out, "output task prevalence TSV");

  CommonOptions train_opts;
  std::string train_family = "MTNN", train_out;
  int train_split = 0, train_cell = 0, train_aux = 0;
  auto* train = app.add_subcommand("train", "train one model on one split");
  add_common(train, train_opts);
  train->add_option("--family", train_family, "STNN, MTNN or LR")
      ->check(CLI::IsMember({"STNN", "MTNN", "LR"}));
  train->add_option("--split", train_split, "split index")->check(CLI::NonNegativeNumber);
  train->add_option("--cell", train_cell, "grid cell index")->check(CLI::NonNegativeNumber);
  train->add_option("--aux-size", train_aux, "auxiliary set size (MTNN)");
  train->add_option("-o,--out", train_out, "directory for model and curves");

  CommonOptions exp_opts;
  std::string exp_out;
  std::optional<int> exp_threads;
  bool exp_quiet = false;
  auto* exp = app.add_subcommand("experiment", "run the full split x grid experiment");
  add_common(exp, exp_opts);
  exp->add_option("-o,--out", exp_out, "result directory")->required();
  exp->add_option("-j,--threads", exp_threads, "concurrent runs")->check(CLI::PositiveNumber);
  exp->add_flag("-q,--quiet", exp_quiet, "no per-run progress");

  CommonOptions cx_opts;
  std::string cx_cohort, cx_defs, cx_out, cx_hist;
  int cx_buckets = complexity::kDefaultBuckets;
  double cx_alpha = complexity::kDefaultAlpha;
  auto* cx = app.add_subcommand("complexity", "entropy and KL complexity of phenotypes");
  add_common(cx, cx_opts);
  cx->add_option("--cohort", cx_cohort, "cohort TSV")->check(CLI::ExistingFile);
  cx->add_option("--definitions", cx_defs, "rule DSL file")->check(CLI::ExistingFile);
  cx->add_option("--buckets", cx_buckets, "hash buckets")->check(CLI::Range(2, 1 << 20));
  cx->add_option("--alpha", cx_alpha, "Laplace pseudo-count")->check(CLI::PositiveNumber);
  cx->add_option("-o,--out", cx_out, "report CSV (default stdout)");
  cx->add_option("--histograms", cx_hist, "directory for per-phenotype histograms");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "summarize an experiment result directory");
  report->add_option("dir", report_dir, "result directory")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return cmd_generate(gen_opts, gen_out);
    if (*label) return cmd_label(label_opts, label_cohort, label_defs, label_out);
    if (*tasks) return cmd_tasks(tasks_opts, tasks_out);
    if (*train) {
      return cmd_train(train_opts, train_family, train_split, train_cell, train_aux, train_out);
    }
    if (*exp) return cmd_experiment(exp_opts, exp_threads, exp_out, exp_quiet);
    if (*cx) {
      return cmd_complexity(cx_opts, cx_cohort, cx_defs, cx_buckets, cx_alpha, cx_out, cx_hist);
    }
    if (*report) return cmd_report(report_dir);
  } catch (const ruledsl::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
