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

#include "phenomtl/cohort.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace phenomtl::cohort {
namespace {

constexpr std::string_view kCohortHeader =
    "# id\tage\tgender\trace\tethnicity\tcodes";

bool valid_frequency(double f) { return f > 0.0 && f < 1.0; }

int sample_count(Rng& rng, double repeat_probability, int max_count) {
  int count = 1;
  while (count < max_count && rng.bernoulli(repeat_probability)) ++count;
  return count;
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  size_t start = 0;
  while (true) {
    const size_t end = line.find(sep, start);
    if (end == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, end - start));
    start = end + 1;
  }
}

template <typename T>
T parse_number(std::string_view text, const char* what, int line_no) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw std::runtime_error("cohort line " + std::to_string(line_no) +
                             ": bad " + what + " '" + std::string(text) + "'");
  }
  return value;
}

bool namespace_less(std::string_view a, std::string_view b) {
  const auto [ns_a, code_a] = split_code(a);
  const auto [ns_b, code_b] = split_code(b);
  if (ns_a != ns_b) return ns_a < ns_b;
  return code_a < code_b;
}

}  // namespace

void GeneratorConfig::validate() const {
  if (n_patients <= 0) throw std::invalid_argument("n_patients must be positive");
  for (const auto& c : codes) {
    if (!valid_frequency(c.frequency)) {
      throw std::invalid_argument("code frequency for " + c.code + " must lie in (0,1)");
    }
    const auto [ns, value] = split_code(c.code);
    if (ns.empty() || value.empty()) {
      throw std::invalid_argument("code '" + c.code + "' is not of the form NS:code");
    }
  }
  for (const auto& b : bundles) {
    if (!valid_frequency(b.probability)) {
      throw std::invalid_argument("bundle probability for " + b.name + " must lie in (0,1)");
    }
    if (!(b.keep_probability > 0.0 && b.keep_probability <= 1.0)) {
      throw std::invalid_argument("bundle keep probability for " + b.name + " must lie in (0,1]");
    }
    if (b.codes.empty()) throw std::invalid_argument("bundle " + b.name + " has no codes");
  }
  if (n_noise_codes < 0) throw std::invalid_argument("n_noise_codes must be non-negative");
  if (n_noise_codes > 0 &&
      !(valid_frequency(noise_frequency_min) && valid_frequency(noise_frequency_max) &&
        noise_frequency_min <= noise_frequency_max)) {
    throw std::invalid_argument("noise frequency range must lie in (0,1)");
  }
  if (!(repeat_probability >= 0.0 && repeat_probability < 1.0)) {
    throw std::invalid_argument("repeat_probability must lie in [0,1)");
  }
  if (max_count < 1) throw std::invalid_argument("max_count must be >= 1");
  if (age_min < 0 || age_max > 110 || age_min > age_max) {
    throw std::invalid_argument("age range must lie within [0,110]");
  }
  if (genders.empty() || races.empty() || ethnicities.empty()) {
    throw std::invalid_argument("demographic category lists must be non-empty");
  }
}

std::vector<PatientRecord> generate_cohort(const GeneratorConfig& config) {
  config.validate();
  Rng rng(config.seed);

  std::vector<CodeMarginal> marginals = config.codes;
  static constexpr std::array<std::string_view, 3> kNoiseNs = {"ICD9", "CPT", "RX"};
  const double log_lo = std::log(config.noise_frequency_min);
  const double log_hi = std::log(config.noise_frequency_max);
  for (int i = 0; i < config.n_noise_codes; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%s:N%04d",
                  std::string(kNoiseNs[i % kNoiseNs.size()]).c_str(), i);
    marginals.push_back({name, std::exp(rng.uniform(log_lo, log_hi))});
  }

  const int n_ages = config.age_max - config.age_min + 1;
  std::vector<PatientRecord> records;
  records.reserve(static_cast<size_t>(config.n_patients));
  for (int64_t id = 0; id < config.n_patients; ++id) {
    PatientRecord r;
    r.id = id;
    r.age = config.age_min + static_cast<int>(rng.below(n_ages));
    r.gender = config.genders[rng.below(config.genders.size())];
    r.race = config.races[rng.below(config.races.size())];
    r.ethnicity = config.ethnicities[rng.below(config.ethnicities.size())];
    for (const auto& m : marginals) {
      if (rng.bernoulli(m.frequency)) {
        r.codes[m.code] += sample_count(rng, config.repeat_probability, config.max_count);
      }
    }
    for (const auto& bundle : config.bundles) {
      if (!rng.bernoulli(bundle.probability)) continue;
      for (const auto& code : bundle.codes) {
        if (rng.bernoulli(bundle.keep_probability)) {
          r.codes[code] += sample_count(rng, config.repeat_probability, config.max_count);
        }
      }
    }
    records.push_back(std::move(r));
  }
  return records;
}

void write_cohort(std::span<const PatientRecord> records, std::ostream& out) {
  out << kCohortHeader << '\n';
  for (const auto& r : records) {
    out << r.id << '\t' << r.age << '\t' << r.gender << '\t' << r.race << '\t'
        << r.ethnicity << '\t';
    bool first = true;
    for (const auto& [code, count] : r.codes) {
      if (!first) out << ' ';
      out << code << ':' << count;
      first = false;
    }
    out << '\n';
  }
}

std::vector<PatientRecord> read_cohort(std::istream& in) {
  std::vector<PatientRecord> records;
  std::set<int64_t> ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_fields(line, '\t');
    if (fields.size() != 6) {
      throw std::runtime_error("cohort line " + std::to_string(line_no) +
                               ": expected 6 tab-separated fields");
    }
    PatientRecord r;
    r.id = parse_number<int64_t>(fields[0], "id", line_no);
    r.age = parse_number<int>(fields[1], "age", line_no);
    r.gender = fields[2];
    r.race = fields[3];
    r.ethnicity = fields[4];
    if (!fields[5].empty()) {
      for (const auto entry : split_fields(fields[5], ' ')) {
        const auto colon = entry.rfind(':');
        if (colon == std::string_view::npos || colon == 0) {
          throw std::runtime_error("cohort line " + std::to_string(line_no) +
                                   ": bad code entry '" + std::string(entry) + "'");
        }
        const int count = parse_number<int>(entry.substr(colon + 1), "count", line_no);
        if (count < 1) {
          throw std::runtime_error("cohort line " + std::to_string(line_no) +
                                   ": code counts must be >= 1");
        }
        r.codes[std::string(entry.substr(0, colon))] = count;
      }
    }
    if (!ids.insert(r.id).second) {
      throw std::runtime_error("cohort line " + std::to_string(line_no) +
                               ": duplicate patient id " + std::to_string(r.id));
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::string serialize_cohort(std::span<const PatientRecord> records) {
  std::ostringstream out;
  write_cohort(records, out);
  return out.str();
}

void save_cohort(std::span<const PatientRecord> records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write cohort file: " + path);
  write_cohort(records, out);
}

std::vector<PatientRecord> load_cohort(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open cohort file: " + path);
  return read_cohort(in);
}

PhenotypeLabels label_cohort(std::span<const PatientRecord> records,
                             const ruledsl::PhenotypeDefinition& definition) {
  PhenotypeLabels out;
  out.labels.reserve(records.size());
  size_t positives = 0;
  for (const auto& r : records) {
    const bool y = ruledsl::evaluate(definition, r);
    out.labels.push_back(y ? 1 : 0);
    positives += y;
  }
  out.prevalence = records.empty() ? 0.0
                                   : static_cast<double>(positives) / records.size();
  return out;
}

void PhecodeGrouping::validate() const {
  if (members.empty()) {
    throw std::invalid_argument("phecode grouping " + name + " has no members");
  }
  for (const auto& m : members) {
    const auto [ns, value] = split_code(m);
    if (ns != "ICD9" || value.empty()) {
      throw std::invalid_argument("phecode grouping " + name +
                                  " must contain ICD9 codes only, got '" + m + "'");
    }
  }
}

std::vector<PhecodeGrouping> parse_groupings(std::string_view text) {
  std::vector<PhecodeGrouping> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::set<std::string> names;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    PhecodeGrouping g;
    if (!(fields >> g.name) || g.name.front() == '#') continue;
    std::string code;
    while (fields >> code) g.members.push_back(code);
    g.validate();
    if (!names.insert(g.name).second) {
      throw std::invalid_argument("duplicate phecode grouping " + g.name);
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<PhecodeGrouping> load_groupings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open phecode file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_groupings(buffer.str());
}

std::vector<LabelColumn> derive_phecode_tasks(
    std::span<const PatientRecord> records,
    std::span<const PhecodeGrouping> groupings) {
  if (groupings.empty()) throw std::invalid_argument("no phecode groupings given");
  std::vector<LabelColumn> columns;
  columns.reserve(groupings.size());
  for (const auto& g : groupings) {
    g.validate();
    LabelColumn column(records.size(), 0);
    for (size_t i = 0; i < records.size(); ++i) {
      for (const auto& code : g.members) {
        if (records[i].codes.contains(code)) {
          column[i] = 1;
          break;
        }
      }
    }
    columns.push_back(std::move(column));
  }
  return columns;
}

std::vector<std::vector<std::string>> select_auxiliary_tasks(
    std::span<const TaskPrevalence> pool, double lo, double hi,
    std::span<const int> sizes, uint64_t seed) {
  if (sizes.empty()) return {};
  for (size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 0 || (i > 0 && sizes[i] < sizes[i - 1])) {
      throw std::invalid_argument("auxiliary set sizes must be ascending and non-negative");
    }
  }
  std::vector<std::string> eligible;
  for (const auto& t : pool) {
    if (t.prevalence >= lo && t.prevalence <= hi) eligible.push_back(t.name);
  }
  const auto largest = static_cast<size_t>(sizes.back());
  if (eligible.size() < largest) {
    throw std::invalid_argument(
        "auxiliary pool has " + std::to_string(eligible.size()) +
        " tasks within prevalence bounds, need " + std::to_string(largest));
  }
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(eligible));
  std::vector<std::vector<std::string>> sets;
  for (const int k : sizes) {
    sets.emplace_back(eligible.begin(), eligible.begin() + k);
  }
  return sets;
}

std::vector<std::string> demographic_features(const PatientRecord& record) {
  const std::string ns(kDemographicNamespace);
  return {ns + ":age=" + std::to_string(record.age),
          ns + ":ethnicity=" + record.ethnicity, ns + ":gender=" + record.gender,
          ns + ":race=" + record.race};
}

CodeVocabulary CodeVocabulary::build(std::span<const PatientRecord> records) {
  std::set<std::string> names;
  for (const auto& r : records) {
    for (const auto& [code, count] : r.codes) names.insert(code);
    for (auto& d : demographic_features(r)) names.insert(std::move(d));
  }
  return from_names(std::vector<std::string>(names.begin(), names.end()));
}

CodeVocabulary CodeVocabulary::from_names(std::vector<std::string> names) {
  std::sort(names.begin(), names.end(), [](const std::string& a, const std::string& b) {
    return namespace_less(a, b);
  });
  CodeVocabulary vocab;
  vocab.lookup_.reserve(names.size());
  for (uint32_t i = 0; i < names.size(); ++i) {
    if (names[i].empty()) throw std::invalid_argument("empty feature name");
    if (!vocab.lookup_.emplace(names[i], i).second) {
      throw std::invalid_argument("duplicate feature name " + names[i]);
    }
  }
  vocab.names_ = std::move(names);
  return vocab;
}

std::optional<uint32_t> CodeVocabulary::index(std::string_view name) const {
  const auto it = lookup_.find(std::string(name));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

void CodeVocabulary::write(std::ostream& out) const {
  for (const auto& n : names_) out << n << '\n';
}

CodeVocabulary CodeVocabulary::read(std::istream& in) {
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    names.push_back(line);
  }
  auto vocab = from_names(names);
  if (vocab.names_ != names) {
    throw std::invalid_argument("vocabulary file is not in canonical order");
  }
  return vocab;
}

FeatureVector encode(const PatientRecord& record, const CodeVocabulary& vocab) {
  FeatureVector fv;
  fv.dimension = vocab.size();
  for (const auto& [code, count] : record.codes) {
    if (const auto idx = vocab.index(code)) fv.indices.push_back(*idx);
  }
  for (const auto& d : demographic_features(record)) {
    if (const auto idx = vocab.index(d)) fv.indices.push_back(*idx);
  }
  std::sort(fv.indices.begin(), fv.indices.end());
  fv.indices.erase(std::unique(fv.indices.begin(), fv.indices.end()), fv.indices.end());
  return fv;
}

std::vector<std::string> decode(const FeatureVector& features,
                                const CodeVocabulary& vocab) {
  std::vector<std::string> names;
  names.reserve(features.indices.size());
  for (const auto i : features.indices) names.push_back(vocab.name(i));
  return names;
}

double LabeledDataset::prevalence() const {
  if (target.empty()) return 0.0;
  const auto positives = std::count(target.begin(), target.end(), uint8_t{1});
  return static_cast<double>(positives) / static_cast<double>(target.size());
}

void LabeledDataset::validate() const {
  const size_t n = features.size();
  if (target.size() != n || (!ids.empty() && ids.size() != n)) {
    throw std::invalid_argument("dataset row counts differ");
  }
  if (auxiliary.size() != task_names.size()) {
    throw std::invalid_argument("auxiliary columns and task names differ in count");
  }
  for (const auto& column : auxiliary) {
    if (column.size() != n) throw std::invalid_argument("auxiliary column length differs");
  }
  for (const auto& fv : features) {
    if (fv.dimension != dimension) throw std::invalid_argument("feature dimension mismatch");
    for (size_t k = 0; k < fv.indices.size(); ++k) {
      if (fv.indices[k] >= dimension || (k > 0 && fv.indices[k] <= fv.indices[k - 1])) {
        throw std::invalid_argument("feature indices must be increasing and in range");
      }
    }
  }
}

LabeledDataset LabeledDataset::subset(std::span<const size_t> rows) const {
  LabeledDataset out;
  out.dimension = dimension;
  out.task_names = task_names;
  out.auxiliary.resize(auxiliary.size());
  for (const size_t r : rows) {
    if (r >= size()) throw std::out_of_range("subset row out of range");
    if (!ids.empty()) out.ids.push_back(ids[r]);
    out.features.push_back(features[r]);
    out.target.push_back(target[r]);
    for (size_t j = 0; j < auxiliary.size(); ++j) out.auxiliary[j].push_back(auxiliary[j][r]);
  }
  return out;
}

LabeledDataset LabeledDataset::with_tasks(std::span<const std::string> names) const {
  LabeledDataset out;
  out.ids = ids;
  out.features = features;
  out.target = target;
  out.dimension = dimension;
  for (const auto& name : names) {
    const auto it = std::find(task_names.begin(), task_names.end(), name);
    if (it == task_names.end()) throw std::out_of_range("unknown auxiliary task " + name);
    out.task_names.push_back(name);
    out.auxiliary.push_back(auxiliary[static_cast<size_t>(it - task_names.begin())]);
  }
  return out;
}

LabeledDataset make_dataset(std::span<const PatientRecord> records,
                            const CodeVocabulary& vocab, LabelColumn target,
                            std::vector<LabelColumn> auxiliary,
                            std::vector<std::string> task_names) {
  LabeledDataset ds;
  ds.dimension = vocab.size();
  ds.ids.reserve(records.size());
  ds.features.reserve(records.size());
  for (const auto& r : records) {
    ds.ids.push_back(r.id);
    ds.features.push_back(encode(r, vocab));
  }
  ds.target = std::move(target);
  ds.auxiliary = std::move(auxiliary);
  ds.task_names = std::move(task_names);
  ds.validate();
  return ds;
}

SplitIndices stratified_split(std::span<const uint8_t> target,
                              const SplitFractions& fractions, uint64_t seed) {
  const double sum = fractions.train + fractions.validation + fractions.test;
  if (fractions.train <= 0 || fractions.validation <= 0 || fractions.test <= 0 ||
      std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must be positive and sum to 1");
  }
  std::vector<size_t> positives;
  std::vector<size_t> negatives;
  for (size_t i = 0; i < target.size(); ++i) {
    (target[i] ? positives : negatives).push_back(i);
  }
  Rng rng(seed);
  SplitIndices out;
  for (auto* group : {&positives, &negatives}) {
    rng.shuffle(std::span<size_t>(*group));
    const double n = static_cast<double>(group->size());
    // The small slack keeps exact products such as 0.8 * 100 from flooring
    // down after rounding error.
    const auto cut_train = static_cast<size_t>(std::floor(n * fractions.train + 1e-9));
    const auto cut_val = static_cast<size_t>(
        std::floor(n * (fractions.train + fractions.validation) + 1e-9));
    if (cut_train == 0 || cut_val == cut_train || cut_val >= group->size()) {
      throw std::invalid_argument(
          std::string("class of size ") + std::to_string(group->size()) +
          " is too small to populate every split");
    }
    out.train.insert(out.train.end(), group->begin(), group->begin() + cut_train);
    out.validation.insert(out.validation.end(), group->begin() + cut_train,
                          group->begin() + cut_val);
    out.test.insert(out.test.end(), group->begin() + cut_val, group->end());
  }
  for (auto* part : {&out.train, &out.validation, &out.test}) {
    std::sort(part->begin(), part->end());
  }
  return out;
}

DatasetSplit split_dataset(const LabeledDataset& dataset,
                           const SplitFractions& fractions, uint64_t seed) {
  const auto idx = stratified_split(dataset.target, fractions, seed);
  return DatasetSplit{dataset.subset(idx.train), dataset.subset(idx.validation),
                      dataset.subset(idx.test)};
}

}  // namespace phenomtl::cohort
