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

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace phenomtl::ruledsl {
namespace {

constexpr std::array<std::string_view, 5> kNamespaces = {"ICD9", "CPT", "RX",
                                                         "LAB", "DEMO"};

bool is_identifier_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

bool is_code_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' ||
         c == '-' || c == '=' || c == '+' || c == '/';
}

void validate_predicate(const Predicate& predicate) {
  if (predicate.threshold < 0) {
    throw std::invalid_argument("predicate threshold must be non-negative");
  }
  if (predicate.kind != PredicateKind::kAgeAtLeast) {
    const auto [ns, value] = split_code(predicate.code);
    if (ns.empty() || value.empty()) {
      throw std::invalid_argument("empty code identifier in predicate '" +
                                  predicate.code + "'");
    }
  }
}

class Parser {
 public:
  Parser(std::string_view text, int line) : text_(text), line_(line) {}

  PhenotypeDefinition parse_definition() {
    skip_ws();
    const size_t name_start = pos_;
    std::string name = read_identifier();
    if (name.empty() ||
        std::isdigit(static_cast<unsigned char>(name.front()))) {
      fail("expected definition name", name_start);
    }
    expect(":=");
    RuleExpr expr = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input", pos_);
    return PhenotypeDefinition{std::move(name), std::move(expr)};
  }

 private:
  [[noreturn]] void fail(const std::string& message, size_t at) const {
    throw ParseError(message, line_, static_cast<int>(at) + 1);
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  void expect(std::string_view token) {
    skip_ws();
    if (text_.substr(pos_, token.size()) != token) {
      fail("expected '" + std::string(token) + "'", pos_);
    }
    pos_ += token.size();
  }

  bool accept_keyword(std::string_view keyword) {
    skip_ws();
    if (text_.substr(pos_, keyword.size()) != keyword) return false;
    const size_t after = pos_ + keyword.size();
    if (after < text_.size() && is_identifier_char(text_[after])) return false;
    pos_ = after;
    return true;
  }

  std::string read_identifier() {
    skip_ws();
    const size_t start = pos_;
    while (pos_ < text_.size() && is_identifier_char(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  int read_int() {
    skip_ws();
    const size_t start = pos_;
    while (pos_ < text_.size() &&
           std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    if (start == pos_) fail("expected non-negative integer", start);
    int value = 0;
    const auto res = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (res.ec != std::errc()) fail("integer out of range", start);
    return value;
  }

  std::string read_code() {
    skip_ws();
    const size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isupper(static_cast<unsigned char>(text_[pos_])) ||
            std::isdigit(static_cast<unsigned char>(text_[pos_])))) {
      ++pos_;
    }
    const std::string_view ns = text_.substr(start, pos_ - start);
    if (ns.empty()) fail("expected code namespace", start);
    if (std::find(kNamespaces.begin(), kNamespaces.end(), ns) == kNamespaces.end()) {
      fail("unknown code namespace '" + std::string(ns) + "'", start);
    }
    if (pos_ >= text_.size() || text_[pos_] != ':') fail("expected ':' after namespace", pos_);
    ++pos_;
    const size_t token_start = pos_;
    while (pos_ < text_.size() && is_code_char(text_[pos_])) ++pos_;
    if (token_start == pos_) fail("empty code identifier", token_start);
    return std::string(text_.substr(start, pos_ - start));
  }

  RuleExpr parse_expr() {
    std::vector<RuleExpr> terms;
    terms.push_back(parse_term());
    while (accept_keyword("or")) terms.push_back(parse_term());
    if (terms.size() == 1) return std::move(terms.front());
    return RuleExpr::any_of(std::move(terms));
  }

  RuleExpr parse_term() {
    std::vector<RuleExpr> factors;
    factors.push_back(parse_factor());
    while (accept_keyword("and")) factors.push_back(parse_factor());
    if (factors.size() == 1) return std::move(factors.front());
    return RuleExpr::all_of(std::move(factors));
  }

  RuleExpr parse_factor() {
    if (accept_keyword("not")) return RuleExpr::negate(parse_factor());
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      RuleExpr inner = parse_expr();
      expect(")");
      return inner;
    }
    return RuleExpr::atom(parse_predicate());
  }

  Predicate parse_predicate() {
    skip_ws();
    const size_t start = pos_;
    const std::string word = read_identifier();
    if (word == "has") {
      expect("(");
      std::string code = read_code();
      expect(")");
      return Predicate::has(std::move(code));
    }
    if (word == "count") {
      expect("(");
      std::string code = read_code();
      expect(")");
      expect(">=");
      return Predicate::count_at_least(std::move(code), read_int());
    }
    if (word == "age") {
      expect(">=");
      return Predicate::age_at_least(read_int());
    }
    if (word.empty()) fail("expected predicate", start);
    fail("unknown predicate '" + word + "'", start);
  }

  std::string_view text_;
  int line_;
  size_t pos_ = 0;
};

void collect_atoms(const RuleExpr& expr, std::vector<Predicate>& out) {
  if (expr.op() == RuleExpr::Op::kAtom) {
    if (std::find(out.begin(), out.end(), expr.predicate()) == out.end()) {
      out.push_back(expr.predicate());
    }
    return;
  }
  for (const auto& child : expr.children()) collect_atoms(child, out);
}

void print_to(const RuleExpr& expr, std::string& out) {
  switch (expr.op()) {
    case RuleExpr::Op::kAtom:
      out += print_predicate(expr.predicate());
      return;
    case RuleExpr::Op::kNot:
      out += "not (";
      print_to(expr.children().front(), out);
      out += ')';
      return;
    case RuleExpr::Op::kAnd:
    case RuleExpr::Op::kOr: {
      const char* sep = expr.op() == RuleExpr::Op::kAnd ? " and " : " or ";
      out += '(';
      for (size_t i = 0; i < expr.children().size(); ++i) {
        if (i > 0) out += sep;
        print_to(expr.children()[i], out);
      }
      out += ')';
      return;
    }
  }
}

}  // namespace

Predicate Predicate::has(std::string code) {
  Predicate p{PredicateKind::kHasCode, std::move(code), 1};
  validate_predicate(p);
  return p;
}

Predicate Predicate::count_at_least(std::string code, int threshold) {
  Predicate p{PredicateKind::kCountAtLeast, std::move(code), threshold};
  validate_predicate(p);
  return p;
}

Predicate Predicate::age_at_least(int years) {
  Predicate p{PredicateKind::kAgeAtLeast, std::string(), years};
  validate_predicate(p);
  return p;
}

bool Predicate::holds(const PatientRecord& record) const {
  switch (kind) {
    case PredicateKind::kHasCode:
      return record.count(code) >= 1;
    case PredicateKind::kCountAtLeast:
      return record.count(code) >= threshold;
    case PredicateKind::kAgeAtLeast:
      return record.age >= threshold;
  }
  return false;
}

RuleExpr RuleExpr::atom(Predicate predicate) {
  RuleExpr e;
  e.op_ = Op::kAtom;
  e.predicate_ = std::move(predicate);
  return e;
}

RuleExpr RuleExpr::all_of(std::vector<RuleExpr> children) {
  if (children.size() < 2) {
    throw std::invalid_argument("'and' requires at least two operands");
  }
  RuleExpr e;
  e.op_ = Op::kAnd;
  e.children_ = std::move(children);
  return e;
}

RuleExpr RuleExpr::any_of(std::vector<RuleExpr> children) {
  if (children.size() < 2) {
    throw std::invalid_argument("'or' requires at least two operands");
  }
  RuleExpr e;
  e.op_ = Op::kOr;
  e.children_ = std::move(children);
  return e;
}

RuleExpr RuleExpr::negate(RuleExpr child) {
  RuleExpr e;
  e.op_ = Op::kNot;
  e.children_.push_back(std::move(child));
  return e;
}

ParseError::ParseError(const std::string& message, int line, int column)
    : std::runtime_error("line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

PhenotypeDefinition parse_rule(std::string_view text, int line) {
  return Parser(text, line).parse_definition();
}

std::vector<PhenotypeDefinition> parse_definitions(std::string_view text) {
  std::vector<PhenotypeDefinition> out;
  std::set<std::string, std::less<>> names;
  int line_no = 0;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    ++line_no;
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') continue;
    auto definition = parse_rule(line, line_no);
    if (!names.insert(definition.name).second) {
      throw ParseError("duplicate definition name '" + definition.name + "'",
                       line_no, static_cast<int>(first) + 1);
    }
    out.push_back(std::move(definition));
  }
  return out;
}

std::vector<PhenotypeDefinition> load_definitions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open definitions file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_definitions(buffer.str());
}

std::string print_predicate(const Predicate& predicate) {
  switch (predicate.kind) {
    case PredicateKind::kHasCode:
      return "has(" + predicate.code + ")";
    case PredicateKind::kCountAtLeast:
      return "count(" + predicate.code + ")>=" + std::to_string(predicate.threshold);
    case PredicateKind::kAgeAtLeast:
      return "age>=" + std::to_string(predicate.threshold);
  }
  return {};
}

std::string print_rule(const RuleExpr& expr) {
  std::string out;
  print_to(expr, out);
  return out;
}

std::string print_rule(const PhenotypeDefinition& definition) {
  return definition.name + " := " + print_rule(definition.expr);
}

bool evaluate(const RuleExpr& expr, const PatientRecord& record) {
  switch (expr.op()) {
    case RuleExpr::Op::kAtom:
      return expr.predicate().holds(record);
    case RuleExpr::Op::kNot:
      return !evaluate(expr.children().front(), record);
    case RuleExpr::Op::kAnd:
      return std::all_of(expr.children().begin(), expr.children().end(),
                         [&](const RuleExpr& c) { return evaluate(c, record); });
    case RuleExpr::Op::kOr:
      return std::any_of(expr.children().begin(), expr.children().end(),
                         [&](const RuleExpr& c) { return evaluate(c, record); });
  }
  return false;
}

bool evaluate(const PhenotypeDefinition& definition, const PatientRecord& record) {
  return evaluate(definition.expr, record);
}

OracleFeatureSet extract_oracle_features(const PhenotypeDefinition& definition) {
  OracleFeatureSet set;
  collect_atoms(definition.expr, set.features);
  return set;
}

const PhenotypeDefinition& find_definition(
    std::span<const PhenotypeDefinition> definitions, std::string_view name) {
  for (const auto& d : definitions) {
    if (d.name == name) return d;
  }
  throw std::out_of_range("no phenotype definition named '" + std::string(name) + "'");
}

}  // namespace phenomtl::ruledsl
