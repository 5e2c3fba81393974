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

#include "phenomtl/config.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace phenomtl::harness {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  s = trim(s);
  if (s.empty()) return out;
  size_t start = 0;
  while (true) {
    const size_t end = s.find(sep, start);
    out.push_back(trim(s.substr(start, end == std::string_view::npos ? s.npos : end - start)));
    if (end == std::string_view::npos) return out;
    start = end + 1;
  }
}

std::vector<std::string_view> split_words(std::string_view s) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

template <typename T>
T parse_value(std::string_view key, std::string_view text) {
  text = trim(text);
  T value{};
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (text.empty() || res.ec != std::errc() || res.ptr != end) {
    throw std::invalid_argument("config key '" + std::string(key) + "': cannot parse '" +
                                std::string(text) + "'");
  }
  return value;
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view text) {
  std::vector<T> out;
  for (const auto item : split_list(text, ',')) out.push_back(parse_value<T>(key, item));
  return out;
}

std::vector<std::string> parse_strings(std::string_view text) {
  std::vector<std::string> out;
  for (const auto item : split_list(text, ',')) out.emplace_back(item);
  return out;
}

std::string fmt_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

template <typename T>
std::string join(const std::vector<T>& items) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ',';
    if constexpr (std::is_same_v<T, double>) {
      out += fmt_double(items[i]);
    } else if constexpr (std::is_same_v<T, std::string>) {
      out += items[i];
    } else {
      out += std::to_string(items[i]);
    }
  }
  return out;
}

std::pair<double, double> parse_pair(std::string_view key, std::string_view value) {
  const auto items = parse_list<double>(key, value);
  if (items.size() != 2) {
    throw std::invalid_argument("config key '" + std::string(key) + "' needs two values");
  }
  return {items[0], items[1]};
}

}  // namespace

bool ExperimentConfig::has_family(std::string_view family) const {
  return std::find(families.begin(), families.end(), family) != families.end();
}

void ExperimentConfig::validate() const {
  if (target.empty()) throw std::invalid_argument("config: target is not set");
  if (definitions_file.empty() && definitions.empty()) {
    throw std::invalid_argument("config: no phenotype definitions given");
  }
  if (n_splits < 1) throw std::invalid_argument("config: n_splits must be >= 1");
  for (size_t i = 0; i < aux_sizes.size(); ++i) {
    if (aux_sizes[i] < 1 || (i > 0 && aux_sizes[i] <= aux_sizes[i - 1])) {
      throw std::invalid_argument("config: aux_sizes must be positive and ascending");
    }
  }
  if (families.empty()) throw std::invalid_argument("config: no model families");
  for (const auto& f : families) {
    if (f != "STNN" && f != "MTNN" && f != "LR") {
      throw std::invalid_argument("config: unknown model family '" + f + "'");
    }
  }
  if (has_family("STNN") || has_family("MTNN")) {
    if (layers.empty() || widths.empty() || learning_rates.empty()) {
      throw std::invalid_argument("config: hyperparameter grid is empty");
    }
    for (const int l : layers) {
      if (l != 1 && l != 2) throw std::invalid_argument("config: layers must be 1 or 2");
    }
  }
  if (has_family("MTNN") && aux_sizes.empty()) {
    throw std::invalid_argument("config: MTNN needs at least one auxiliary set size");
  }
  if (has_family("MTNN") && phecodes_file.empty() && phecodes.empty()) {
    throw std::invalid_argument("config: MTNN needs phecode groupings");
  }
  if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
}

void apply_setting(ExperimentConfig& c, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  auto& g = c.generator;
  if (key == "seed") c.seed = parse_value<uint64_t>(key, value);
  else if (key == "cohort_file") c.cohort_file = value;
  else if (key == "definitions_file") c.definitions_file = value;
  else if (key == "definition") c.definitions.emplace_back(value);
  else if (key == "target") c.target = value;
  else if (key == "phecodes_file") c.phecodes_file = value;
  else if (key == "phecode") c.phecodes.emplace_back(value);
  else if (key == "aux_prevalence") {
    std::tie(c.aux_prevalence_min, c.aux_prevalence_max) = parse_pair(key, value);
  } else if (key == "aux_sizes") c.aux_sizes = parse_list<int>(key, value);
  else if (key == "aux_per_split") c.aux_per_split = parse_value<int>(key, value) != 0;
  else if (key == "n_splits") c.n_splits = parse_value<int>(key, value);
  else if (key == "split_fractions") {
    const auto f = parse_list<double>(key, value);
    if (f.size() != 3) throw std::invalid_argument("config: split_fractions needs three values");
    c.fractions = cohort::SplitFractions{f[0], f[1], f[2]};
  } else if (key == "layers") c.layers = parse_list<int>(key, value);
  else if (key == "widths") c.widths = parse_list<int>(key, value);
  else if (key == "learning_rates") c.learning_rates = parse_list<double>(key, value);
  else if (key == "epochs") c.epochs = parse_value<int>(key, value);
  else if (key == "batch_size") c.batch_size = parse_value<int>(key, value);
  else if (key == "families") c.families = parse_strings(value);
  else if (key == "lambdas") c.lambdas = parse_list<double>(key, value);
  else if (key == "l1_max_iterations") c.l1_max_iterations = parse_value<int>(key, value);
  else if (key == "l1_tolerance") c.l1_tolerance = parse_value<double>(key, value);
  else if (key == "threads") c.threads = parse_value<int>(key, value);
  else if (key == "generator.n_patients") g.n_patients = parse_value<int64_t>(key, value);
  else if (key == "generator.noise_codes") g.n_noise_codes = parse_value<int>(key, value);
  else if (key == "generator.noise_frequency") {
    std::tie(g.noise_frequency_min, g.noise_frequency_max) = parse_pair(key, value);
  } else if (key == "generator.repeat_probability") {
    g.repeat_probability = parse_value<double>(key, value);
  } else if (key == "generator.max_count") g.max_count = parse_value<int>(key, value);
  else if (key == "generator.age_range") {
    const auto a = parse_list<int>(key, value);
    if (a.size() != 2) throw std::invalid_argument("config: generator.age_range needs two values");
    g.age_min = a[0];
    g.age_max = a[1];
  } else if (key == "generator.genders") g.genders = parse_strings(value);
  else if (key == "generator.races") g.races = parse_strings(value);
  else if (key == "generator.ethnicities") g.ethnicities = parse_strings(value);
  else if (key == "generator.code") {
    const auto w = split_words(value);
    if (w.size() != 2) throw std::invalid_argument("config: generator.code needs 'CODE frequency'");
    g.codes.push_back({std::string(w[0]), parse_value<double>(key, w[1])});
  } else if (key == "generator.bundle") {
    const auto w = split_words(value);
    if (w.size() < 4) {
      throw std::invalid_argument(
          "config: generator.bundle needs 'NAME probability keep CODE ...'");
    }
    cohort::SignalBundle b;
    b.name = w[0];
    b.probability = parse_value<double>(key, w[1]);
    b.keep_probability = parse_value<double>(key, w[2]);
    for (size_t i = 3; i < w.size(); ++i) b.codes.emplace_back(w[i]);
    g.bundles.push_back(std::move(b));
  } else {
    throw std::invalid_argument("config: unknown key '" + std::string(key) + "'");
  }
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  int line_no = 0;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected 'key = value'");
    }
    try {
      apply_setting(c, line.substr(0, eq), line.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream out;
  const auto& g = c.generator;
  out << "seed = " << c.seed << '\n';
  out << "cohort_file = " << c.cohort_file << '\n';
  out << "definitions_file = " << c.definitions_file << '\n';
  for (const auto& d : c.definitions) out << "definition = " << d << '\n';
  out << "target = " << c.target << '\n';
  out << "phecodes_file = " << c.phecodes_file << '\n';
  for (const auto& p : c.phecodes) out << "phecode = " << p << '\n';
  out << "aux_prevalence = " << fmt_double(c.aux_prevalence_min) << ','
      << fmt_double(c.aux_prevalence_max) << '\n';
  out << "aux_sizes = " << join(c.aux_sizes) << '\n';
  out << "aux_per_split = " << (c.aux_per_split ? 1 : 0) << '\n';
  out << "n_splits = " << c.n_splits << '\n';
  out << "split_fractions = " << fmt_double(c.fractions.train) << ','
      << fmt_double(c.fractions.validation) << ',' << fmt_double(c.fractions.test) << '\n';
  out << "layers = " << join(c.layers) << '\n';
  out << "widths = " << join(c.widths) << '\n';
  out << "learning_rates = " << join(c.learning_rates) << '\n';
  out << "epochs = " << c.epochs << '\n';
  out << "batch_size = " << c.batch_size << '\n';
  out << "families = " << join(c.families) << '\n';
  out << "lambdas = " << join(c.lambdas) << '\n';
  out << "l1_max_iterations = " << c.l1_max_iterations << '\n';
  out << "l1_tolerance = " << fmt_double(c.l1_tolerance) << '\n';
  out << "threads = " << c.threads << '\n';
  out << "generator.n_patients = " << g.n_patients << '\n';
  out << "generator.noise_codes = " << g.n_noise_codes << '\n';
  out << "generator.noise_frequency = " << fmt_double(g.noise_frequency_min) << ','
      << fmt_double(g.noise_frequency_max) << '\n';
  out << "generator.repeat_probability = " << fmt_double(g.repeat_probability) << '\n';
  out << "generator.max_count = " << g.max_count << '\n';
  out << "generator.age_range = " << g.age_min << ',' << g.age_max << '\n';
  out << "generator.genders = " << join(g.genders) << '\n';
  out << "generator.races = " << join(g.races) << '\n';
  out << "generator.ethnicities = " << join(g.ethnicities) << '\n';
  for (const auto& code : g.codes) {
    out << "generator.code = " << code.code << ' ' << fmt_double(code.frequency) << '\n';
  }
  for (const auto& b : g.bundles) {
    out << "generator.bundle = " << b.name << ' ' << fmt_double(b.probability) << ' '
        << fmt_double(b.keep_probability);
    for (const auto& code : b.codes) out << ' ' << code;
    out << '\n';
  }
  return out.str();
}

}  // namespace phenomtl::harness
