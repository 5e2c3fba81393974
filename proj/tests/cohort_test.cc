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

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <set>
#include <sstream>

namespace phenomtl::cohort {
namespace {

GeneratorConfig small_config(int64_t n, uint64_t seed) {
  GeneratorConfig c;
  c.n_patients = n;
  c.seed = seed;
  c.codes = {{"ICD9:250.00", 0.2}, {"RX:860975", 0.1}, {"LAB:A1C", 0.15}};
  c.bundles = {{"af", {"ICD9:427.31", "CPT:93000"}, 0.05, 0.9}};
  c.n_noise_codes = 12;
  return c;
}

TEST(Generator, RejectsInvalidConfig) {
  auto c = small_config(0, 1);
  EXPECT_THROW(generate_cohort(c), std::invalid_argument);
  c = small_config(10, 1);
  c.codes.push_back({"ICD9:1", 1.0});
  EXPECT_THROW(generate_cohort(c), std::invalid_argument);
  c = small_config(10, 1);
  c.codes.push_back({"nonamespace", 0.5});
  EXPECT_THROW(generate_cohort(c), std::invalid_argument);
  c = small_config(10, 1);
  c.bundles[0].keep_probability = 0.0;
  EXPECT_THROW(generate_cohort(c), std::invalid_argument);
}

TEST(Generator, DeterministicInSeed) {
  const auto a = generate_cohort(small_config(500, 42));
  const auto b = generate_cohort(small_config(500, 42));
  const auto c = generate_cohort(small_config(500, 43));
  EXPECT_EQ(serialize_cohort(a), serialize_cohort(b));
  EXPECT_NE(serialize_cohort(a), serialize_cohort(c));
}

TEST(Generator, MarginalFrequencyMatches) {
  GeneratorConfig c;
  c.n_patients = 100000;
  c.seed = 7;
  c.codes = {{"ICD9:X", 0.5}, {"ICD9:Y", 0.02}};
  const auto records = generate_cohort(c);
  double x = 0, y = 0;
  for (const auto& r : records) {
    x += r.codes.contains("ICD9:X");
    y += r.codes.contains("ICD9:Y");
    for (const auto& [code, count] : r.codes) {
      ASSERT_GE(count, 1);
      ASSERT_LE(count, c.max_count);
    }
    ASSERT_GE(r.age, c.age_min);
    ASSERT_LE(r.age, c.age_max);
  }
  EXPECT_NEAR(x / c.n_patients, 0.5, 0.01);
  EXPECT_NEAR(y / c.n_patients, 0.02, 0.002);
}

TEST(Generator, BundlesCoOccur) {
  auto c = small_config(20000, 3);
  c.bundles[0].keep_probability = 1.0;
  const auto records = generate_cohort(c);
  int with_first = 0;
  for (const auto& r : records) {
    ASSERT_EQ(r.codes.contains("ICD9:427.31"), r.codes.contains("CPT:93000"));
    with_first += r.codes.contains("ICD9:427.31");
  }
  EXPECT_NEAR(with_first / 20000.0, 0.05, 0.006);
}

TEST(CohortIo, RoundTrip) {
  const auto records = generate_cohort(small_config(300, 9));
  std::stringstream buffer;
  write_cohort(records, buffer);
  const auto back = read_cohort(buffer);
  ASSERT_EQ(back.size(), records.size());
  for (size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].id, records[i].id);
    EXPECT_EQ(back[i].age, records[i].age);
    EXPECT_EQ(back[i].gender, records[i].gender);
    EXPECT_EQ(back[i].codes, records[i].codes);
  }
  EXPECT_EQ(serialize_cohort(back), serialize_cohort(records));
}

TEST(CohortIo, RejectsBadInput) {
  std::istringstream dup("1\t40\tF\twhite\thispanic\t\n1\t41\tM\twhite\thispanic\t\n");
  EXPECT_THROW(read_cohort(dup), std::runtime_error);
  std::istringstream fields("1\t40\tF\twhite\n");
  EXPECT_THROW(read_cohort(fields), std::runtime_error);
  std::istringstream count("1\t40\tF\twhite\thispanic\tICD9:1:0\n");
  EXPECT_THROW(read_cohort(count), std::runtime_error);
  std::istringstream ok("7\t40\tF\twhite\thispanic\tICD9:250.00:3 CPT:93000:1\n");
  const auto r = read_cohort(ok);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].count("ICD9:250.00"), 3);
  EXPECT_EQ(r[0].count("CPT:93000"), 1);
}

TEST(Labels, MatchRuleEvaluation) {
  const auto records = generate_cohort(small_config(2000, 11));
  const auto def = ruledsl::parse_rule("T := has(ICD9:250.00) and count(LAB:A1C)>=2");
  const auto labels = label_cohort(records, def);
  size_t positives = 0;
  for (size_t i = 0; i < records.size(); ++i) {
    const bool expected = records[i].count("ICD9:250.00") >= 1 &&
                          records[i].count("LAB:A1C") >= 2;
    ASSERT_EQ(labels.labels[i], expected ? 1 : 0);
    positives += expected;
  }
  EXPECT_DOUBLE_EQ(labels.prevalence, static_cast<double>(positives) / records.size());
}

TEST(Phecodes, LabelIsNonEmptyIntersection) {
  const auto groupings = parse_groupings(
      "# name members\n"
      "P250 ICD9:250.00 ICD9:250.01\n"
      "P427 ICD9:427.31\n");
  ASSERT_EQ(groupings.size(), 2u);
  auto c = small_config(3000, 5);
  c.codes.push_back({"ICD9:250.01", 0.05});
  const auto records = generate_cohort(c);
  const auto tasks = derive_phecode_tasks(records, groupings);
  ASSERT_EQ(tasks.size(), 2u);
  for (size_t i = 0; i < records.size(); ++i) {
    for (size_t g = 0; g < groupings.size(); ++g) {
      std::set<std::string> codes;
      for (const auto& [code, count] : records[i].codes) codes.insert(code);
      std::vector<std::string> common;
      std::set<std::string> members(groupings[g].members.begin(), groupings[g].members.end());
      std::set_intersection(codes.begin(), codes.end(), members.begin(), members.end(),
                            std::back_inserter(common));
      ASSERT_EQ(tasks[g][i], common.empty() ? 0 : 1);
    }
  }
}

TEST(Phecodes, ValidatesGroupings) {
  EXPECT_THROW(parse_groupings("P1\n"), std::invalid_argument);
  EXPECT_THROW(parse_groupings("P1 CPT:93000\n"), std::invalid_argument);
  EXPECT_THROW(parse_groupings("P1 ICD9:1\nP1 ICD9:2\n"), std::invalid_argument);
  const std::vector<PatientRecord> none;
  EXPECT_THROW(derive_phecode_tasks(none, std::vector<PhecodeGrouping>{}),
               std::invalid_argument);
}

TEST(AuxiliaryTasks, NestedAndWithinBounds) {
  std::vector<TaskPrevalence> pool;
  for (int i = 0; i < 40; ++i) {
    pool.push_back({"P" + std::to_string(i), 0.0005 * (i + 1)});
  }
  const std::vector<int> sizes = {5, 10, 20};
  const auto sets = select_auxiliary_tasks(pool, 0.0008, 0.0295, sizes, 17);
  ASSERT_EQ(sets.size(), 3u);
  for (size_t s = 0; s < sets.size(); ++s) {
    ASSERT_EQ(sets[s].size(), static_cast<size_t>(sizes[s]));
    std::set<std::string> unique(sets[s].begin(), sets[s].end());
    EXPECT_EQ(unique.size(), sets[s].size());
    for (const auto& name : sets[s]) {
      const auto it = std::find_if(pool.begin(), pool.end(),
                                   [&](const auto& t) { return t.name == name; });
      ASSERT_NE(it, pool.end());
      EXPECT_GE(it->prevalence, 0.0008);
      EXPECT_LE(it->prevalence, 0.0295);
    }
    if (s > 0) {
      EXPECT_TRUE(std::equal(sets[s - 1].begin(), sets[s - 1].end(), sets[s].begin()));
    }
  }
  EXPECT_EQ(select_auxiliary_tasks(pool, 0.0008, 0.0295, sizes, 17), sets);
  EXPECT_THROW(select_auxiliary_tasks(pool, 0.0008, 0.002, sizes, 17),
               std::invalid_argument);
}

TEST(Vocabulary, SortedByNamespaceThenCode) {
  const auto v = CodeVocabulary::from_names({"RX:1", "CPT:9", "CPT:10", "DEMO:gender=F"});
  EXPECT_EQ(v.names(),
            (std::vector<std::string>{"CPT:10", "CPT:9", "DEMO:gender=F", "RX:1"}));
  EXPECT_EQ(v.index("CPT:9"), 1u);
  EXPECT_FALSE(v.index("ICD9:1").has_value());
  EXPECT_THROW(CodeVocabulary::from_names({"A:1", "A:1"}), std::invalid_argument);
  std::stringstream s;
  v.write(s);
  EXPECT_EQ(CodeVocabulary::read(s).names(), v.names());
}

TEST(Encoding, MultiHotRoundTrip) {
  const auto records = generate_cohort(small_config(400, 13));
  const auto vocab = CodeVocabulary::build(records);
  for (const auto& r : records) {
    const auto fv = encode(r, vocab);
    EXPECT_EQ(fv.dimension, vocab.size());
    ASSERT_TRUE(std::is_sorted(fv.indices.begin(), fv.indices.end()));
    std::vector<std::string> expected;
    for (const auto& [code, count] : r.codes) expected.push_back(code);
    for (const auto& d : demographic_features(r)) expected.push_back(d);
    std::sort(expected.begin(), expected.end());
    auto decoded = decode(fv, vocab);
    std::sort(decoded.begin(), decoded.end());
    ASSERT_EQ(decoded, expected);
  }
}

TEST(Encoding, CountsAreDiscardedAndUnknownCodesDropped) {
  PatientRecord a{1, 30, "F", "white", "hispanic", {{"ICD9:1", 1}}};
  PatientRecord b{2, 30, "F", "white", "hispanic", {{"ICD9:1", 7}, {"ICD9:new", 1}}};
  const auto vocab = CodeVocabulary::build(std::vector<PatientRecord>{a});
  EXPECT_EQ(encode(a, vocab), encode(b, vocab));
  EXPECT_EQ(encode(a, vocab).indices.size(), 5u);
}

LabelColumn rare_target(size_t n, size_t positives, uint64_t seed) {
  LabelColumn y(n, 0);
  std::fill(y.begin(), y.begin() + positives, 1);
  Rng rng(seed);
  rng.shuffle(std::span<uint8_t>(y));
  return y;
}

TEST(StratifiedSplit, ExactCountsAtTenThousand) {
  const auto y = rare_target(10000, 100, 1);
  const auto s = stratified_split(y, {}, 3);
  EXPECT_EQ(s.train.size(), 8000u);
  EXPECT_EQ(s.validation.size(), 1000u);
  EXPECT_EQ(s.test.size(), 1000u);
  auto positives = [&](const std::vector<size_t>& idx) {
    return std::count_if(idx.begin(), idx.end(), [&](size_t i) { return y[i] == 1; });
  };
  EXPECT_EQ(positives(s.train), 80);
  EXPECT_EQ(positives(s.validation), 10);
  EXPECT_EQ(positives(s.test), 10);
}

TEST(StratifiedSplit, PartitionAndPrevalenceProperty) {
  Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const size_t n = 200 + rng.below(5000);
    const size_t pos = 10 + rng.below(n / 4);
    const auto y = rare_target(n, pos, rng.next());
    const auto s = stratified_split(y, {}, rng.next());
    std::vector<size_t> all;
    for (const auto* part : {&s.train, &s.validation, &s.test}) {
      all.insert(all.end(), part->begin(), part->end());
      const double count = static_cast<double>(
          std::count_if(part->begin(), part->end(), [&](size_t i) { return y[i] == 1; }));
      const double expected = static_cast<double>(pos) * part->size() / n;
      ASSERT_LE(std::abs(count - expected), 1.0) << "n=" << n << " pos=" << pos;
    }
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), n);
    for (size_t i = 0; i < n; ++i) ASSERT_EQ(all[i], i);
  }
}

TEST(StratifiedSplit, RejectsTinyClassesAndBadFractions) {
  EXPECT_THROW(stratified_split(rare_target(1000, 5, 1), {}, 1), std::invalid_argument);
  EXPECT_THROW(stratified_split(rare_target(1000, 100, 1), {0.5, 0.5, 0.0}, 1),
               std::invalid_argument);
}

TEST(Dataset, SubsetAndTasks) {
  const auto records = generate_cohort(small_config(2000, 21));
  const auto vocab = CodeVocabulary::build(records);
  const auto target = label_cohort(records, ruledsl::parse_rule("T := has(ICD9:250.00)"));
  const auto groups = parse_groupings("P1 ICD9:427.31\nP2 ICD9:N0000\n");
  auto ds = make_dataset(records, vocab, target.labels, derive_phecode_tasks(records, groups),
                         {"P1", "P2"});
  ds.validate();
  EXPECT_DOUBLE_EQ(ds.prevalence(), target.prevalence);
  const std::vector<std::string> keep = {"P2"};
  const auto only = ds.with_tasks(keep);
  ASSERT_EQ(only.auxiliary.size(), 1u);
  EXPECT_EQ(only.auxiliary[0], ds.auxiliary[1]);
  const std::vector<std::string> missing = {"P9"};
  EXPECT_THROW(ds.with_tasks(missing), std::out_of_range);

  const auto split = split_dataset(ds, {}, 4);
  EXPECT_EQ(split.train.size() + split.validation.size() + split.test.size(), ds.size());
  EXPECT_EQ(split.train.task_names, ds.task_names);
}

}  // namespace
}  // namespace phenomtl::cohort
