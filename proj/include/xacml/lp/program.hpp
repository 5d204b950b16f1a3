#pragma once

#include "xacml/model.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace xacml::lp {

/// Variables are upper-case names; constants are symbols, integers or quoted
/// strings. Policy tokens that are not valid bare ASP symbols become strings.
struct Term {
  enum class Kind { variable, symbol, number, string };

  Kind kind = Kind::symbol;
  std::string text;       // name, symbol or string contents
  std::int64_t number = 0;

  static Term var(std::string name) { return {Kind::variable, std::move(name), 0}; }
  static Term sym(std::string name) { return {Kind::symbol, std::move(name), 0}; }
  static Term num(std::int64_t n) { return {Kind::number, std::to_string(n), n}; }
  static Term str(std::string s) { return {Kind::string, std::move(s), 0}; }
  /// Constant for a policy/domain token: number, bare symbol or string.
  static Term constant(std::string_view token);

  bool is_variable() const { return kind == Kind::variable; }
  /// The token this constant stands for (inverse of constant()).
  const std::string& token() const { return text; }

  friend bool operator==(const Term& a, const Term& b) { return a.kind == b.kind && a.text == b.text; }
};

/// Total order on ground terms: numbers < symbols < strings.
int compare(const Term& a, const Term& b);

struct Atom {
  std::string predicate;
  std::vector<Term> args;

  Atom() = default;
  Atom(std::string pred, std::vector<Term> a = {}) : predicate(std::move(pred)), args(std::move(a)) {}

  bool is_ground() const;
  friend bool operator==(const Atom&, const Atom&) = default;
};

struct Comparison {
  enum class Op { eq, ne, lt, le, gt, ge };
  Op op = Op::eq;
  Term lhs;
  Term rhs;

  bool evaluate(const Term& a, const Term& b) const;
  friend bool operator==(const Comparison&, const Comparison&) = default;
};

struct Literal {
  enum class Kind { positive, negative, comparison };
  Kind kind = Kind::positive;
  Atom atom;
  Comparison cmp;

  static Literal pos(Atom a) { return {Kind::positive, std::move(a), {}}; }
  static Literal neg(Atom a) { return {Kind::negative, std::move(a), {}}; }
  static Literal compare(Comparison::Op op, Term l, Term r) {
    return {Kind::comparison, {}, Comparison{op, std::move(l), std::move(r)}};
  }
  friend bool operator==(const Literal&, const Literal&) = default;
};

/// lower { element : generator } upper: body-less cardinality choice.
struct ChoiceHead {
  int lower = 1;
  int upper = 1;
  Atom element;
  Atom generator;
  friend bool operator==(const ChoiceHead&, const ChoiceHead&) = default;
};

/// head :- body.  A missing head (and no choice) makes a constraint; an empty
/// body makes a fact.
struct Rule {
  std::optional<Atom> head;
  std::optional<ChoiceHead> choice;
  std::vector<Literal> body;

  static Rule fact(Atom a) { return {std::move(a), std::nullopt, {}}; }
  static Rule make(Atom a, std::vector<Literal> b) { return {std::move(a), std::nullopt, std::move(b)}; }
  static Rule constraint(std::vector<Literal> b) { return {std::nullopt, std::nullopt, std::move(b)}; }
  static Rule choose(ChoiceHead c) { return {std::nullopt, std::move(c), {}}; }

  bool is_fact() const { return head && body.empty(); }
  bool is_constraint() const { return !head && !choice; }
  bool is_choice() const { return choice.has_value(); }

  /// Variables of head, negative literals and comparisons all occur in a
  /// positive body atom.
  bool is_safe() const;
  friend bool operator==(const Rule&, const Rule&) = default;
};

struct LogicProgram {
  std::vector<Rule> rules;

  void add(Rule r) { rules.push_back(std::move(r)); }
  void append(const LogicProgram& other);
  /// Every constant occurring in the program, sorted by compare().
  std::vector<Term> constants() const;
  friend bool operator==(const LogicProgram&, const LogicProgram&) = default;
};

std::string to_string(const Term& t);
std::string to_string(const Atom& a);
std::string to_string(const Literal& l);
std::string to_string(const Rule& r);

/// One rule per line in standard ASP syntax, in emission order.
std::string serialize_program(const LogicProgram& p);

/// Reads the subset of ASP syntax that serialize_program writes: normal rules,
/// facts, constraints, comparisons and body-less `l { a(X) : g(X) } u.` choices.
/// `%` starts a line comment.
LogicProgram parse_program(std::string_view text, std::string_view file = "<program>");

}  // namespace xacml::lp
