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

#include "phenomtl/ruledsl.h"

#include <gtest/gtest.h>

#include "test_util.h"

namespace phenomtl::ruledsl {
namespace {

using Op = RuleExpr::Op;

PatientRecord make_record(std::initializer_list<std::pair<const std::string, int>> codes,
                          int age = 50) {
  PatientRecord r;
  r.age = age;
  r.gender = "M";
  r.race = "asian";
  r.ethnicity = "nonhispanic";
  r.codes.insert(codes.begin(), codes.end());
  return r;
}

TEST(ParseRule, SingleAtom) {
  const auto d = parse_rule("AE := has(ICD9:995.1)");
  EXPECT_EQ(d.name, "AE");
  ASSERT_EQ(d.expr.op(), Op::kAtom);
  EXPECT_EQ(d.expr.predicate(), Predicate::has("ICD9:995.1"));
}

TEST(ParseRule, PrecedenceAndBindsTighterThanOr) {
  const auto d =
      parse_rule("T2DM := has(ICD9:250.00) and (has(RX:860975) or count(LAB:A1C)>=2)");
  ASSERT_EQ(d.expr.op(), Op::kAnd);
  ASSERT_EQ(d.expr.children().size(), 2u);
  EXPECT_EQ(d.expr.children()[0].op(), Op::kAtom);
  const auto& alt = d.expr.children()[1];
  ASSERT_EQ(alt.op(), Op::kOr);
  EXPECT_EQ(alt.children()[0].predicate(), Predicate::has("RX:860975"));
  EXPECT_EQ(alt.children()[1].predicate(), Predicate::count_at_least("LAB:A1C", 2));

  const auto flat = parse_rule("X := has(ICD9:1) or has(ICD9:2) and has(ICD9:3)");
  ASSERT_EQ(flat.expr.op(), Op::kOr);
  EXPECT_EQ(flat.expr.children()[1].op(), Op::kAnd);
}

TEST(ParseRule, NotAndAgeAndWhitespace) {
  const auto d = parse_rule("  A   :=not   not age >= 65 and has( CPT:93000 )  ");
  ASSERT_EQ(d.expr.op(), Op::kAnd);
  const auto& first = d.expr.children()[0];
  ASSERT_EQ(first.op(), Op::kNot);
  ASSERT_EQ(first.children()[0].op(), Op::kNot);
  EXPECT_EQ(first.children()[0].children()[0].predicate(), Predicate::age_at_least(65));
}

TEST(ParseRule, ReportsLineAndColumn) {
  try {
    parse_rule("X := has(ICD9:1) and", 7);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 7);
    EXPECT_EQ(e.column(), 21);
  }
  try {
    parse_rule("X := has(ICD9:)");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("empty code identifier"), std::string::npos);
    EXPECT_EQ(e.column(), 15);
  }
}

TEST(ParseRule, RejectsMalformedInput) {
  EXPECT_THROW(parse_rule("has(ICD9:1)"), ParseError);
  EXPECT_THROW(parse_rule("X := has(FOO:1)"), ParseError);
  EXPECT_THROW(parse_rule("X := has(ICD9:1) has(ICD9:2)"), ParseError);
  EXPECT_THROW(parse_rule("X := count(ICD9:1)>=-1"), ParseError);
  EXPECT_THROW(parse_rule("X := (has(ICD9:1)"), ParseError);
  EXPECT_THROW(parse_rule("X := visit(ICD9:1)"), ParseError);
  EXPECT_THROW(parse_rule("X := has(ICD9:1) AND has(ICD9:2)"), ParseError);
  EXPECT_THROW(parse_rule("X := count(ICD9:1)>=99999999999"), ParseError);
}

TEST(RuleExpr, ArityIsValidated) {
  const auto a = RuleExpr::atom(Predicate::has("ICD9:1"));
  EXPECT_THROW(RuleExpr::all_of({a}), std::invalid_argument);
  EXPECT_THROW(RuleExpr::any_of({}), std::invalid_argument);
  EXPECT_THROW(Predicate::has(""), std::invalid_argument);
  EXPECT_THROW(Predicate::has("ICD9:"), std::invalid_argument);
  EXPECT_THROW(Predicate::age_at_least(-1), std::invalid_argument);
}

TEST(PrintRule, CanonicalForm) {
  const auto a = RuleExpr::atom(Predicate::has("ICD9:427.31"));
  EXPECT_EQ(print_rule(a), "has(ICD9:427.31)");
  EXPECT_EQ(print_rule(RuleExpr::negate(RuleExpr::atom(Predicate::has("ICD9:A")))),
            "not (has(ICD9:A))");
  const auto expr = RuleExpr::all_of(
      {RuleExpr::atom(Predicate::has("ICD9:a")),
       RuleExpr::any_of({RuleExpr::atom(Predicate::has("ICD9:b")),
                         RuleExpr::atom(Predicate::has("ICD9:c"))})});
  EXPECT_EQ(print_rule(expr), "(has(ICD9:a) and (has(ICD9:b) or has(ICD9:c)))");
  EXPECT_EQ(print_rule(PhenotypeDefinition{"AF", RuleExpr::atom(Predicate::age_at_least(3))}),
            "AF := age>=3");
  EXPECT_EQ(print_predicate(Predicate::count_at_least("LAB:A1C", 2)), "count(LAB:A1C)>=2");
}

TEST(PrintRule, RoundTripRandomRules) {
  Rng rng(20260101);
  for (int i = 0; i < 1000; ++i) {
    const PhenotypeDefinition d{"R" + std::to_string(i), testing::random_expr(rng, 5, {})};
    const auto text = print_rule(d);
    const auto reparsed = parse_rule(text);
    ASSERT_EQ(reparsed, d) << text;
    ASSERT_EQ(print_rule(reparsed), text);
  }
}

TEST(Evaluate, Predicates) {
  const auto has_a = parse_rule("X := has(ICD9:A)");
  EXPECT_TRUE(evaluate(has_a, make_record({{"ICD9:A", 1}})));
  EXPECT_FALSE(evaluate(has_a, make_record({{"ICD9:B", 3}})));
  const auto twice = parse_rule("X := count(ICD9:A)>=2");
  EXPECT_FALSE(evaluate(twice, make_record({{"ICD9:A", 1}})));
  EXPECT_TRUE(evaluate(twice, make_record({{"ICD9:A", 2}})));
  EXPECT_TRUE(evaluate(parse_rule("X := count(ICD9:Z)>=0"), make_record({})));
  const auto old = parse_rule("X := age>=65");
  EXPECT_TRUE(evaluate(old, make_record({}, 65)));
  EXPECT_FALSE(evaluate(old, make_record({}, 64)));
  const auto male = parse_rule("X := has(DEMO:gender=M) and not has(DEMO:race=white)");
  EXPECT_TRUE(evaluate(male, make_record({})));
  EXPECT_TRUE(evaluate(parse_rule("X := has(DEMO:age=50)"), make_record({})));
}

TEST(Evaluate, MatchesTruthTableOracle) {
  Rng rng(99);
  for (int k = 1; k <= 6; ++k) {
    const auto atoms = testing::has_atoms(k);
    for (int trial = 0; trial < 50; ++trial) {
      const auto expr = testing::random_expr(rng, 4, atoms);
      const uint64_t table = testing::truth_table(expr, atoms);
      for (uint64_t p = 0; p < (uint64_t{1} << k); ++p) {
        const bool expected = (table >> p) & 1;
        ASSERT_EQ(evaluate(expr, testing::record_for_pattern(atoms, p)), expected)
            << print_rule(expr) << " pattern " << p;
      }
    }
  }
}

TEST(Evaluate, DeMorgan) {
  Rng rng(5);
  const auto atoms = testing::has_atoms(6);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = testing::random_expr(rng, 3, atoms);
    const auto b = testing::random_expr(rng, 3, atoms);
    const auto lhs = RuleExpr::negate(RuleExpr::all_of({a, b}));
    const auto rhs = RuleExpr::any_of({RuleExpr::negate(a), RuleExpr::negate(b)});
    const auto record = testing::record_for_pattern(atoms, rng.below(64));
    ASSERT_EQ(evaluate(lhs, record), evaluate(rhs, record));
  }
}

TEST(OracleFeatures, FirstAppearanceOrderWithoutDuplicates) {
  const auto af = parse_rule(
      "AF := has(ICD9:427.31) and (has(CPT:93010) or has(CPT:93005) or has(CPT:93000))");
  const auto oracle = extract_oracle_features(af);
  ASSERT_EQ(oracle.features.size(), 4u);
  EXPECT_EQ(oracle.features[0].code, "ICD9:427.31");
  EXPECT_EQ(oracle.features[3].code, "CPT:93000");

  EXPECT_EQ(extract_oracle_features(parse_rule("X := has(ICD9:1)")).features.size(), 1u);

  const auto dup = parse_rule("X := has(ICD9:A) and (count(ICD9:A)>=2 or not has(ICD9:A))");
  const auto f = extract_oracle_features(dup);
  ASSERT_EQ(f.features.size(), 2u);
  EXPECT_EQ(f.features[0], Predicate::has("ICD9:A"));
  EXPECT_EQ(f.features[1], Predicate::count_at_least("ICD9:A", 2));

  const auto again = extract_oracle_features(af);
  EXPECT_EQ(again.features, oracle.features);
}

TEST(ParseDefinitions, FileFormat) {
  const auto defs = parse_definitions(
      "# phenotypes\n"
      "AE := has(ICD9:995.1)\n"
      "\n"
      "AF := has(ICD9:427.31)\r\n");
  ASSERT_EQ(defs.size(), 2u);
  EXPECT_EQ(find_definition(defs, "AF").name, "AF");
  EXPECT_THROW(find_definition(defs, "T2DM"), std::out_of_range);
  try {
    parse_definitions("A := has(ICD9:1)\nB := has(ICD9:\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  EXPECT_THROW(parse_definitions("A := has(ICD9:1)\nA := has(ICD9:2)\n"), ParseError);
}

}  // namespace
}  // namespace phenomtl::ruledsl
