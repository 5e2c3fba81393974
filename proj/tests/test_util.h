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

// Test-only generators and oracles. Nothing here calls the code paths it is
// used to check.

#ifndef PHENOMTL_TESTS_TEST_UTIL_H_
#define PHENOMTL_TESTS_TEST_UTIL_H_

#include <cstdint>
#include <string>
#include <vector>

#include "phenomtl/common.h"
#include "phenomtl/ruledsl.h"

namespace phenomtl::testing {

// Atoms "has(ICD9:P<i>)" for i < n.
inline std::vector<ruledsl::Predicate> has_atoms(int n) {
  std::vector<ruledsl::Predicate> atoms;
  for (int i = 0; i < n; ++i) atoms.push_back(ruledsl::Predicate::has("ICD9:P" + std::to_string(i)));
  return atoms;
}

// Random predicate of any kind over a small code alphabet.
inline ruledsl::Predicate random_predicate(Rng& rng) {
  static const char* kNs[] = {"ICD9", "CPT", "RX", "LAB"};
  const std::string code = std::string(kNs[rng.below(4)]) + ":" +
                           std::to_string(100 + rng.below(40)) + (rng.bernoulli(0.5) ? ".1" : "");
  switch (rng.below(3)) {
    case 0: return ruledsl::Predicate::has(code);
    case 1: return ruledsl::Predicate::count_at_least(code, static_cast<int>(rng.below(5)));
    default: return ruledsl::Predicate::age_at_least(static_cast<int>(rng.below(100)));
  }
}

// Random expression tree with depth <= max_depth whose atoms are taken from
// `atoms` (or drawn freshly when `atoms` is empty).
inline ruledsl::RuleExpr random_expr(Rng& rng, int max_depth,
                                     const std::vector<ruledsl::Predicate>& atoms) {
  auto leaf = [&]() {
    return ruledsl::RuleExpr::atom(atoms.empty() ? random_predicate(rng)
                                                 : atoms[rng.below(atoms.size())]);
  };
  if (max_depth <= 1 || rng.bernoulli(0.25)) return leaf();
  switch (rng.below(3)) {
    case 0: return ruledsl::RuleExpr::negate(random_expr(rng, max_depth - 1, atoms));
    default: {
      std::vector<ruledsl::RuleExpr> children;
      const int arity = 2 + static_cast<int>(rng.below(2));
      for (int i = 0; i < arity; ++i) children.push_back(random_expr(rng, max_depth - 1, atoms));
      return rng.bernoulli(0.5) ? ruledsl::RuleExpr::all_of(std::move(children))
                                : ruledsl::RuleExpr::any_of(std::move(children));
    }
  }
}

// Truth table of `expr` over `atoms` as a 64-bit mask: bit p is the value on
// presence pattern p (atom i present iff bit i of p is set). Computed with
// bitwise set algebra on whole columns, independent of ruledsl::evaluate.
inline uint64_t truth_table(const ruledsl::RuleExpr& expr,
                            const std::vector<ruledsl::Predicate>& atoms) {
  const int k = static_cast<int>(atoms.size());
  const uint64_t all = k == 6 ? ~uint64_t{0} : ((uint64_t{1} << (1 << k)) - 1);
  using Op = ruledsl::RuleExpr::Op;
  switch (expr.op()) {
    case Op::kAtom: {
      int idx = 0;
      while (!(atoms[idx] == expr.predicate())) ++idx;
      uint64_t mask = 0;
      for (int p = 0; p < (1 << k); ++p) {
        if (p & (1 << idx)) mask |= uint64_t{1} << p;
      }
      return mask;
    }
    case Op::kNot:
      return all & ~truth_table(expr.children()[0], atoms);
    case Op::kAnd: {
      uint64_t m = all;
      for (const auto& c : expr.children()) m &= truth_table(c, atoms);
      return m;
    }
    case Op::kOr: {
      uint64_t m = 0;
      for (const auto& c : expr.children()) m |= truth_table(c, atoms);
      return m;
    }
  }
  return 0;
}

// Record in which exactly the atoms flagged in `pattern` are present.
inline PatientRecord record_for_pattern(const std::vector<ruledsl::Predicate>& atoms,
                                        uint64_t pattern) {
  PatientRecord r;
  r.age = 40;
  r.gender = "F";
  r.race = "white";
  r.ethnicity = "nonhispanic";
  for (size_t i = 0; i < atoms.size(); ++i) {
    if (pattern & (uint64_t{1} << i)) r.codes[atoms[i].code] = 1;
  }
  return r;
}

}  // namespace phenomtl::testing

#endif  // PHENOMTL_TESTS_TEST_UTIL_H_
