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

#include "phenomtl/harness.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <variant>

#include "json.hpp"
#include "phenomtl/logreg.h"
#include "phenomtl/metrics.h"
#include "phenomtl/nnet.h"

namespace phenomtl::harness {
namespace {

constexpr std::string_view kRunsHeader =
    "split,family,layers,width,lr,aux_size,val_auprc,test_auprc,seed,wall_ms";
constexpr std::string_view kFailuresHeader = "split,family,aux_size,cell,message";

std::string fmt_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

std::vector<std::string> split_csv(const std::string& line, size_t max_fields) {
  std::vector<std::string> out;
  size_t start = 0;
  while (out.size() + 1 < max_fields) {
    const size_t comma = line.find(',', start);
    if (comma == std::string::npos) break;
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  out.push_back(line.substr(start));
  return out;
}

template <typename T>
T parse_field(const std::string& text, const char* what) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (text.empty() || res.ec != std::errc() || res.ptr != end) {
    throw std::runtime_error(std::string("bad ") + what + " field '" + text + "'");
  }
  return value;
}

std::string model_key_of(const std::string& family, int aux_size) {
  return family == "MTNN" ? family + "-" + std::to_string(aux_size) : family;
}

struct Job {
  int split = 0;
  std::string family;
  int aux_size = 0;
  int cell = 0;
};

using JobOutcome = std::variant<RunRecord, FailedRun>;

}  // namespace

std::vector<GridCell> expand_grid(const ExperimentConfig& config) {
  std::vector<GridCell> cells;
  for (const int l : config.layers) {
    for (const int w : config.widths) {
      for (const double lr : config.learning_rates) cells.push_back({l, w, lr});
    }
  }
  return cells;
}

std::string RunRecord::model_key() const { return model_key_of(family, aux_size); }

bool RunRecord::same_outcome(const RunRecord& o) const {
  return split == o.split && family == o.family && layers == o.layers && width == o.width &&
         lr == o.lr && aux_size == o.aux_size && val_auprc == o.val_auprc &&
         test_auprc == o.test_auprc && seed == o.seed;
}

ResultTable ResultTable::from_runs(std::vector<RunRecord> runs,
                                   std::vector<FailedRun> failures) {
  ResultTable t;
  t.runs = std::move(runs);
  t.failures = std::move(failures);
  t.best = select_best(t.runs);
  return t;
}

std::vector<RunRecord> select_best(const std::vector<RunRecord>& runs) {
  // Only (index, validation score) pairs take part in the choice.
  std::map<std::pair<int, std::string>, std::pair<size_t, double>> chosen;
  for (size_t i = 0; i < runs.size(); ++i) {
    const auto key = std::make_pair(runs[i].split, runs[i].model_key());
    const double val = runs[i].val_auprc;
    const auto it = chosen.find(key);
    if (it == chosen.end() || val > it->second.second) chosen[key] = {i, val};
  }
  std::vector<RunRecord> best;
  best.reserve(chosen.size());
  for (const auto& [key, pick] : chosen) best.push_back(runs[pick.first]);
  return best;
}

std::vector<Delta> pairwise_deltas(const ResultTable& table, const std::string& a,
                                   const std::string& b) {
  std::map<int, const RunRecord*> best_a;
  std::map<int, const RunRecord*> best_b;
  for (const auto& r : table.best) {
    if (r.model_key() == a) best_a[r.split] = &r;
    if (r.model_key() == b) best_b[r.split] = &r;
  }
  if (best_a.empty() && best_b.empty()) {
    throw std::invalid_argument("neither " + a + " nor " + b + " appears in the table");
  }
  std::vector<Delta> deltas;
  for (const auto& [split, ra] : best_a) {
    const auto it = best_b.find(split);
    if (it == best_b.end()) {
      throw std::invalid_argument(b + " is missing from split " + std::to_string(split));
    }
    deltas.push_back({split, ra->test_auprc - it->second->test_auprc});
  }
  for (const auto& [split, rb] : best_b) {
    if (!best_a.contains(split)) {
      throw std::invalid_argument(a + " is missing from split " + std::to_string(split));
    }
  }
  return deltas;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

std::vector<double> grid_spread(const ResultTable& table, const std::string& key) {
  std::map<int, std::vector<double>> per_split;
  for (const auto& r : table.runs) {
    if (r.model_key() == key) per_split[r.split].push_back(r.test_auprc);
  }
  std::vector<double> spreads;
  for (const auto& [split, values] : per_split) {
    spreads.push_back(quantile(values, 0.75) - quantile(values, 0.25));
  }
  return spreads;
}

uint64_t split_seed(uint64_t master, int split) {
  return derive_seed(master, {"split", std::to_string(split)});
}

uint64_t run_seed(uint64_t master, int split, const std::string& model_key, int cell) {
  return derive_seed(master, {"run", std::to_string(split), model_key, std::to_string(cell)});
}

PreparedData prepare_data(const ExperimentConfig& config) {
  config.validate();
  PreparedData data;
  if (!config.cohort_file.empty()) {
    data.records = cohort::load_cohort(config.cohort_file);
  } else {
    auto gen = config.generator;
    gen.seed = derive_seed(config.seed, {"cohort"});
    data.records = cohort::generate_cohort(gen);
  }

  std::vector<ruledsl::PhenotypeDefinition> definitions;
  if (!config.definitions_file.empty()) {
    definitions = ruledsl::load_definitions(config.definitions_file);
  }
  std::string inline_defs;
  for (const auto& d : config.definitions) inline_defs += d + "\n";
  for (auto& d : ruledsl::parse_definitions(inline_defs)) definitions.push_back(std::move(d));
  data.target = ruledsl::find_definition(definitions, config.target);
  auto labels = cohort::label_cohort(data.records, data.target);

  std::vector<cohort::PhecodeGrouping> groupings;
  if (!config.phecodes_file.empty()) groupings = cohort::load_groupings(config.phecodes_file);
  std::string inline_groups;
  for (const auto& p : config.phecodes) inline_groups += p + "\n";
  for (auto& g : cohort::parse_groupings(inline_groups)) groupings.push_back(std::move(g));

  std::vector<cohort::LabelColumn> aux;
  std::vector<std::string> names;
  if (!groupings.empty()) {
    aux = cohort::derive_phecode_tasks(data.records, groupings);
    for (size_t j = 0; j < groupings.size(); ++j) {
      const auto positives = std::count(aux[j].begin(), aux[j].end(), uint8_t{1});
      data.task_pool.push_back(
          {groupings[j].name,
           static_cast<double>(positives) / static_cast<double>(data.records.size())});
      names.push_back(groupings[j].name);
    }
  }
  data.vocab = cohort::CodeVocabulary::build(data.records);
  data.dataset = cohort::make_dataset(data.records, data.vocab, std::move(labels.labels),
                                      std::move(aux), std::move(names));
  if (config.has_family("MTNN")) {
    data.aux_sets = cohort::select_auxiliary_tasks(
        data.task_pool, config.aux_prevalence_min, config.aux_prevalence_max,
        config.aux_sizes, derive_seed(config.seed, {"aux"}));
  }
  return data;
}

std::vector<std::vector<std::string>> auxiliary_sets_for_split(
    const ExperimentConfig& config, const PreparedData& data, int split) {
  if (!config.aux_per_split || !config.has_family("MTNN")) return data.aux_sets;
  return cohort::select_auxiliary_tasks(data.task_pool, config.aux_prevalence_min,
                                        config.aux_prevalence_max, config.aux_sizes,
                                        derive_seed(config.seed, {"aux", std::to_string(split)}));
}

SingleRun run_single(const ExperimentConfig& config, const cohort::DatasetSplit& split,
                     const std::vector<std::vector<std::string>>& aux_sets, int split_index,
                     const std::string& family, int aux_size, int cell_index) {
  const auto start = std::chrono::steady_clock::now();
  SingleRun out;
  RunRecord& rec = out.record;
  rec.split = split_index;
  rec.family = family;
  rec.aux_size = family == "MTNN" ? aux_size : 0;
  if (family == "LR") {
    cell_index = 0;
  } else if (family != "STNN" && family != "MTNN") {
    throw std::invalid_argument("unknown model family '" + family + "'");
  }
  rec.seed = run_seed(config.seed, split_index, model_key_of(family, rec.aux_size), cell_index);
  if (family == "LR") {
    logreg::L1Config l1;
    if (!config.lambdas.empty()) l1.lambdas = config.lambdas;
    l1.max_iterations = config.l1_max_iterations;
    l1.tolerance = config.l1_tolerance;
    out.linear = logreg::fit_l1(split.train, split.validation, l1);
    rec.lr = out.linear->model.lambda;
    rec.val_auprc = out.linear->path[out.linear->selected].validation_auprc;
    out.test_scores = logreg::predict_proba(out.linear->model, split.test.features);
  } else {
    const auto grid = expand_grid(config);
    if (cell_index < 0 || cell_index >= static_cast<int>(grid.size())) {
      throw std::invalid_argument("grid cell " + std::to_string(cell_index) + " out of range");
    }
    const auto& cell = grid[static_cast<size_t>(cell_index)];
    std::vector<std::string> tasks;
    if (family == "MTNN") {
      const auto pos = std::find(config.aux_sizes.begin(), config.aux_sizes.end(), aux_size);
      if (pos == config.aux_sizes.end() ||
          static_cast<size_t>(pos - config.aux_sizes.begin()) >= aux_sets.size()) {
        throw std::invalid_argument("auxiliary set size " + std::to_string(aux_size) +
                                    " is not configured");
      }
      tasks = aux_sets[static_cast<size_t>(pos - config.aux_sizes.begin())];
    }
    const auto train_set = split.train.with_tasks(tasks);
    nnet::NetworkSpec spec;
    spec.input_dim = static_cast<int>(train_set.dimension);
    spec.hidden_sizes.assign(static_cast<size_t>(cell.layers), cell.width);
    spec.n_heads = 1 + static_cast<int>(tasks.size());
    nnet::TrainConfig tc;
    tc.epochs = config.epochs;
    tc.batch_size = config.batch_size;
    tc.learning_rate = cell.learning_rate;
    tc.seed = rec.seed;
    auto result = nnet::train(spec, train_set, split.validation, tc);
    rec.layers = cell.layers;
    rec.width = cell.width;
    rec.lr = cell.learning_rate;
    rec.val_auprc =
        result.history.validation_auprc[static_cast<size_t>(result.history.selected_epoch)];
    out.test_scores = nnet::predict(result.params, split.test.features);
    out.history = std::move(result.history);
    out.network = std::move(result.params);
  }
  rec.test_auprc = metrics::auprc(out.test_scores, split.test.target);
  rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  return out;
}

ResultTable run_experiment(const ExperimentConfig& config, const PreparedData& data,
                           const RunOptions& options) {
  config.validate();
  const auto grid = expand_grid(config);

  std::vector<cohort::DatasetSplit> splits;
  std::vector<std::vector<std::vector<std::string>>> aux_sets;
  for (int s = 0; s < config.n_splits; ++s) {
    splits.push_back(cohort::split_dataset(data.dataset, config.fractions,
                                           split_seed(config.seed, s)));
    aux_sets.push_back(auxiliary_sets_for_split(config, data, s));
  }

  std::mutex progress_mutex;
  std::vector<Job> jobs;
  for (int s = 0; s < config.n_splits; ++s) {
    if (config.has_family("STNN")) {
      for (int c = 0; c < static_cast<int>(grid.size()); ++c) jobs.push_back({s, "STNN", 0, c});
    }
    if (config.has_family("MTNN")) {
      for (const int k : config.aux_sizes) {
        for (int c = 0; c < static_cast<int>(grid.size()); ++c) jobs.push_back({s, "MTNN", k, c});
      }
    }
    if (config.has_family("LR")) jobs.push_back({s, "LR", 0, 0});
  }

  auto execute = [&](const Job& job) -> JobOutcome {
    try {
      auto run = run_single(config, splits[static_cast<size_t>(job.split)],
                            aux_sets[static_cast<size_t>(job.split)], job.split, job.family,
                            job.aux_size, job.cell);
      if (run.linear && !run.linear->converged && options.progress) {
        std::lock_guard lock(progress_mutex);
        options.progress("split " + std::to_string(job.split) + " LR: " +
                         run.linear->diagnostic);
      }
      return std::move(run.record);
    } catch (const std::exception& e) {
      return FailedRun{job.split, job.family, job.aux_size, job.cell, e.what()};
    }
  };

  std::vector<std::optional<JobOutcome>> outcomes(jobs.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t i = next++; i < jobs.size(); i = next++) {
      outcomes[i] = execute(jobs[i]);
      if (options.progress) {
        const auto& job = jobs[i];
        std::string msg = "[" + std::to_string(i + 1) + "/" + std::to_string(jobs.size()) +
                          "] split " + std::to_string(job.split) + " " +
                          model_key_of(job.family, job.aux_size) + " cell " +
                          std::to_string(job.cell);
        if (const auto* r = std::get_if<RunRecord>(&*outcomes[i])) {
          msg += " val " + fmt_double(r->val_auprc).substr(0, 6) + " test " +
                 fmt_double(r->test_auprc).substr(0, 6);
        } else {
          msg += " FAILED: " + std::get<FailedRun>(*outcomes[i]).message;
        }
        std::lock_guard lock(progress_mutex);
        options.progress(msg);
      }
    }
  };
  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(jobs.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<RunRecord> runs;
  std::vector<FailedRun> failures;
  for (auto& o : outcomes) {
    if (auto* r = std::get_if<RunRecord>(&*o)) {
      runs.push_back(std::move(*r));
    } else {
      failures.push_back(std::get<FailedRun>(std::move(*o)));
    }
  }
  return ResultTable::from_runs(std::move(runs), std::move(failures));
}

ResultTable run_experiment(const ExperimentConfig& config) {
  const auto data = prepare_data(config);
  RunOptions options;
  options.threads = config.threads;
  return run_experiment(config, data, options);
}

void write_runs_csv(const std::vector<RunRecord>& runs, std::ostream& out) {
  out << kRunsHeader << '\n';
  for (const auto& r : runs) {
    out << r.split << ',' << r.family << ',' << r.layers << ',' << r.width << ','
        << fmt_double(r.lr) << ',' << r.aux_size << ',' << fmt_double(r.val_auprc) << ','
        << fmt_double(r.test_auprc) << ',' << r.seed << ',' << r.wall_ms << '\n';
  }
}

std::vector<RunRecord> read_runs_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kRunsHeader) {
    throw std::runtime_error("runs CSV has an unexpected header");
  }
  std::vector<RunRecord> runs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line, 10);
    if (f.size() != 10) throw std::runtime_error("runs CSV row has wrong field count: " + line);
    RunRecord r;
    r.split = parse_field<int>(f[0], "split");
    r.family = f[1];
    r.layers = parse_field<int>(f[2], "layers");
    r.width = parse_field<int>(f[3], "width");
    r.lr = parse_field<double>(f[4], "lr");
    r.aux_size = parse_field<int>(f[5], "aux_size");
    r.val_auprc = parse_field<double>(f[6], "val_auprc");
    r.test_auprc = parse_field<double>(f[7], "test_auprc");
    r.seed = parse_field<uint64_t>(f[8], "seed");
    r.wall_ms = parse_field<int64_t>(f[9], "wall_ms");
    runs.push_back(std::move(r));
  }
  return runs;
}

void write_failures_csv(const std::vector<FailedRun>& failures, std::ostream& out) {
  out << kFailuresHeader << '\n';
  for (const auto& f : failures) {
    std::string message = f.message;
    std::replace(message.begin(), message.end(), '\n', ' ');
    out << f.split << ',' << f.family << ',' << f.aux_size << ',' << f.cell << ','
        << message << '\n';
  }
}

std::vector<FailedRun> read_failures_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kFailuresHeader) {
    throw std::runtime_error("failures CSV has an unexpected header");
  }
  std::vector<FailedRun> failures;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line, 5);
    if (f.size() != 5) throw std::runtime_error("failures CSV row is malformed: " + line);
    failures.push_back({parse_field<int>(f[0], "split"), f[1], parse_field<int>(f[2], "aux_size"),
                        parse_field<int>(f[3], "cell"), f[4]});
  }
  return failures;
}

void write_deltas_csv(const std::vector<Delta>& deltas, const std::string& a,
                      const std::string& b, std::ostream& out) {
  for (const auto& d : deltas) {
    out << d.split << ',' << a << ',' << b << ',' << fmt_double(d.delta) << '\n';
  }
}

namespace {

std::vector<std::string> model_keys(const ResultTable& table) {
  std::vector<std::string> keys;
  for (const auto& r : table.best) {
    if (std::find(keys.begin(), keys.end(), r.model_key()) == keys.end()) {
      keys.push_back(r.model_key());
    }
  }
  return keys;
}

// (a, b) pairs reported by default: every MTNN size against STNN, and every
// network family against LR.
std::vector<std::pair<std::string, std::string>> default_pairs(const ResultTable& table) {
  const auto keys = model_keys(table);
  auto has = [&](const std::string& k) {
    return std::find(keys.begin(), keys.end(), k) != keys.end();
  };
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& k : keys) {
    if (k.starts_with("MTNN") && has("STNN")) pairs.emplace_back(k, "STNN");
  }
  for (const auto& k : keys) {
    if (k != "LR" && has("LR")) pairs.emplace_back(k, "LR");
  }
  return pairs;
}

nlohmann::json record_json(const RunRecord& r) {
  return {{"split", r.split},         {"family", r.family},         {"layers", r.layers},
          {"width", r.width},         {"lr", r.lr},                 {"aux_size", r.aux_size},
          {"val_auprc", r.val_auprc}, {"test_auprc", r.test_auprc}, {"seed", r.seed}};
}

}  // namespace

std::string summary_json(const ResultTable& table, const ExperimentConfig& config) {
  nlohmann::json j;
  j["config"] = serialize_config(config);
  j["n_runs"] = table.runs.size();
  j["n_failures"] = table.failures.size();
  j["best"] = nlohmann::json::array();
  for (const auto& r : table.best) j["best"].push_back(record_json(r));
  nlohmann::json medians = nlohmann::json::object();
  for (const auto& key : model_keys(table)) {
    std::vector<double> values;
    for (const auto& r : table.best) {
      if (r.model_key() == key) values.push_back(r.test_auprc);
    }
    medians[key] = median(values);
  }
  j["median_best_test_auprc"] = medians;
  nlohmann::json deltas = nlohmann::json::object();
  for (const auto& [a, b] : default_pairs(table)) {
    try {
      nlohmann::json list = nlohmann::json::array();
      for (const auto& d : pairwise_deltas(table, a, b)) list.push_back(d.delta);
      deltas[a + " - " + b] = list;
    } catch (const std::invalid_argument&) {
      // A family missing from some split has no paired deltas.
    }
  }
  j["deltas"] = deltas;
  return j.dump(2);
}

void export_table(const ResultTable& table, const ExperimentConfig& config,
                  const std::string& directory) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + directory);
  auto open = [&](const char* name) {
    std::ofstream out(fs::path(directory) / name);
    if (!out) throw std::runtime_error("cannot write " + (fs::path(directory) / name).string());
    return out;
  };
  {
    auto out = open("runs.csv");
    write_runs_csv(table.runs, out);
  }
  {
    auto out = open("best.csv");
    write_runs_csv(table.best, out);
  }
  {
    auto out = open("failures.csv");
    write_failures_csv(table.failures, out);
  }
  {
    auto out = open("deltas.csv");
    out << "split,a,b,delta\n";
    for (const auto& [a, b] : default_pairs(table)) {
      try {
        write_deltas_csv(pairwise_deltas(table, a, b), a, b, out);
      } catch (const std::invalid_argument&) {
      }
    }
  }
  {
    auto out = open("summary.json");
    out << summary_json(table, config) << '\n';
  }
}

ResultTable import_table(const std::string& directory) {
  namespace fs = std::filesystem;
  std::ifstream runs_in(fs::path(directory) / "runs.csv");
  if (!runs_in) throw std::runtime_error("cannot open runs.csv in " + directory);
  auto runs = read_runs_csv(runs_in);
  std::vector<FailedRun> failures;
  std::ifstream failures_in(fs::path(directory) / "failures.csv");
  if (failures_in) failures = read_failures_csv(failures_in);
  return ResultTable::from_runs(std::move(runs), std::move(failures));
}

}  // namespace phenomtl::harness
