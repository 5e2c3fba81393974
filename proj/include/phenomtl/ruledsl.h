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

// Rule-based phenotype definitions.
//
// A definition is a boolean expression over code predicates, written one per
// line in a small DSL:
//
//   T2DM := has(ICD9:250.00) and (has(RX:860975) or count(LAB:A1C)>=2)
//
// Grammar:
//   def    := NAME ":=" expr
//   expr   := term ("or" term)*
//   term   := factor ("and" factor)*
//   factor := "not" factor | "(" expr ")" | pred
//   pred   := "has(" code ")" | "count(" code ")>=" INT | "age>=" INT
//   code   := NS ":" token        NS in {ICD9, CPT, RX, LAB, DEMO}
//
// Temporal predicates are not supported.

#ifndef PHENOMTL_RULEDSL_H_
#define PHENOMTL_RULEDSL_H_

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "phenomtl/common.h"

namespace phenomtl::ruledsl {

enum class PredicateKind { kHasCode, kCountAtLeast, kAgeAtLeast };

struct Predicate {
  PredicateKind kind = PredicateKind::kHasCode;
  std::string code;  // empty for kAgeAtLeast
  int threshold = 1;

  static Predicate has(std::string code);
  static Predicate count_at_least(std::string code, int threshold);
  static Predicate age_at_least(int years);

  bool holds(const PatientRecord& record) const;

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

class RuleExpr {
 public:
  enum class Op { kAtom, kAnd, kOr, kNot };

  // A placeholder atom; build real expressions with the factories.
  RuleExpr() = default;

  // Factories validate arity: And/Or take >= 2 children, Not exactly 1.
  static RuleExpr atom(Predicate predicate);
  static RuleExpr all_of(std::vector<RuleExpr> children);
  static RuleExpr any_of(std::vector<RuleExpr> children);
  static RuleExpr negate(RuleExpr child);

  Op op() const { return op_; }
  const Predicate& predicate() const { return predicate_; }
  const std::vector<RuleExpr>& children() const { return children_; }

  friend bool operator==(const RuleExpr&, const RuleExpr&) = default;

 private:
  Op op_ = Op::kAtom;
  Predicate predicate_;
  std::vector<RuleExpr> children_;
};

struct PhenotypeDefinition {
  std::string name;
  RuleExpr expr;

  friend bool operator==(const PhenotypeDefinition&,
                         const PhenotypeDefinition&) = default;
};

// Distinct atoms in first-appearance order of a left-to-right depth-first
// traversal.
struct OracleFeatureSet {
  std::vector<Predicate> features;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line, int column);

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// Parses a single definition. `line` is reported in errors.
PhenotypeDefinition parse_rule(std::string_view text, int line = 1);

// Parses a definitions file: one definition per line, blank lines and lines
// starting with '#' are skipped. Names must be unique.
std::vector<PhenotypeDefinition> parse_definitions(std::string_view text);
std::vector<PhenotypeDefinition> load_definitions(const std::string& path);

// Canonical form: binary and n-ary nodes fully parenthesized, single spaces,
// lowercase keywords.
std::string print_rule(const RuleExpr& expr);
std::string print_rule(const PhenotypeDefinition& definition);
std::string print_predicate(const Predicate& predicate);

bool evaluate(const RuleExpr& expr, const PatientRecord& record);
bool evaluate(const PhenotypeDefinition& definition, const PatientRecord& record);

OracleFeatureSet extract_oracle_features(const PhenotypeDefinition& definition);

// Looks up a definition by name; throws std::out_of_range when absent.
const PhenotypeDefinition& find_definition(
    std::span<const PhenotypeDefinition> definitions, std::string_view name);

}  // namespace phenomtl::ruledsl

#endif  // PHENOMTL_RULEDSL_H_
