#include "xacml/lp/program.hpp"
#include "xacml/parser.hpp"

#include <gtest/gtest.h>

namespace xacml::lp {
namespace {

TEST(Terms, ConstantClassification) {
  EXPECT_EQ(Term::constant("42").kind, Term::Kind::number);
  EXPECT_EQ(Term::constant("-3").kind, Term::Kind::number);
  EXPECT_EQ(Term::constant("007").kind, Term::Kind::string);
  EXPECT_EQ(Term::constant("-0").kind, Term::Kind::string);
  EXPECT_EQ(Term::constant("doctor").kind, Term::Kind::symbol);
  EXPECT_EQ(Term::constant("Doctor").kind, Term::Kind::string);
  EXPECT_EQ(Term::constant("not").kind, Term::Kind::string);
  EXPECT_EQ(Term::constant("007").token(), "007");
}

TEST(Terms, Order) {
  EXPECT_GT(compare(Term::num(10), Term::num(9)), 0);
  EXPECT_LT(compare(Term::num(9), Term::num(10)), 0);
  EXPECT_LT(compare(Term::num(99), Term::sym("a")), 0);
  EXPECT_LT(compare(Term::sym("z"), Term::str("A")), 0);
  EXPECT_LT(compare(Term::sym("ab"), Term::sym("b")), 0);
  EXPECT_EQ(compare(Term::sym("a"), Term::sym("a")), 0);
}

TEST(Comparisons, Evaluate) {
  Comparison lt{Comparison::Op::lt, {}, {}};
  EXPECT_TRUE(lt.evaluate(Term::num(2), Term::num(10)));
  EXPECT_FALSE(lt.evaluate(Term::sym("b"), Term::sym("a")));
  Comparison ne{Comparison::Op::ne, {}, {}};
  EXPECT_TRUE(ne.evaluate(Term::sym("a"), Term::str("a")));
}

TEST(Printing, StandardSyntax) {
  Rule choice = Rule::choose({1, 1, Atom("subject", {Term::var("X")}), Atom("subject_db", {Term::var("X")})});
  EXPECT_EQ(to_string(choice), "1 { subject(X) : subject_db(X) } 1.");
  Rule c = Rule::constraint({Literal::neg(Atom("gap"))});
  EXPECT_EQ(to_string(c), ":- not gap.");
  Rule r = Rule::make(Atom("val", {Term::sym("p1"), Term::var("E")}),
                      {Literal::pos(Atom("dec", {Term::sym("p1"), Term::var("R"), Term::var("E")})),
                       Literal::compare(Comparison::Op::ne, Term::var("E"), Term::sym("na"))});
  EXPECT_EQ(to_string(r), "val(p1, E) :- dec(p1, R, E), E != na.");
  EXPECT_EQ(to_string(Rule::fact(Atom("v", {Term::str("a \"b\"\\")}))), "v(\"a \\\"b\\\"\\\\\").");
}

TEST(Safety, Rules) {
  EXPECT_TRUE(Rule::make(Atom("a", {Term::var("X")}), {Literal::pos(Atom("b", {Term::var("X")}))}).is_safe());
  EXPECT_FALSE(Rule::make(Atom("a", {Term::var("X")}), {Literal::neg(Atom("b", {Term::var("X")}))}).is_safe());
  EXPECT_FALSE(Rule::constraint({Literal::pos(Atom("b")),
                                 Literal::compare(Comparison::Op::lt, Term::var("X"), Term::num(1))})
                   .is_safe());
  EXPECT_FALSE(Rule::choose({1, 1, Atom("a", {Term::var("Y")}), Atom("g", {Term::var("X")})}).is_safe());
}

TEST(Parsing, RoundTrip) {
  const char* text =
      "val(null, m).\n"
      "v(\"007\", 5, -2, \"Dr X\").\n"
      "1 { subject(X) : subject_db(X) } 1.\n"
      "blocked(P, I) :- dec(P, R1, E1, I), dec(P, R, E, J), E != na, J < I.\n"
      "gap :- val(root, na).\n"
      "q :- p, not r, 1 <= 2, a >= b, X = Y, x(X, Y).\n"
      ":- not gap.\n";
  LogicProgram p = parse_program(text);
  ASSERT_EQ(p.rules.size(), 7u);
  EXPECT_EQ(serialize_program(p), text);
  EXPECT_EQ(parse_program(serialize_program(p)), p);
  EXPECT_EQ(p.rules[1].head->args[0].kind, Term::Kind::string);
  EXPECT_EQ(p.rules[1].head->args[2].number, -2);
}

TEST(Parsing, CommentsAndErrors) {
  LogicProgram p = parse_program("% comment\na. % trailing\n\nb :- a.\n");
  EXPECT_EQ(p.rules.size(), 2u);
  EXPECT_THROW(parse_program("a :- b"), ParseError);
  EXPECT_THROW(parse_program("a(X) :- not b(X)."), ParseError);
  EXPECT_THROW(parse_program("1 { a(X) : g(X) } 1 :- b."), ParseError);
  EXPECT_THROW(parse_program("a :- b $ c."), ParseError);
  try {
    parse_program("a.\nb :- c(.\n", "x.lp");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.span().line, 2);
    EXPECT_EQ(e.span().file, "x.lp");
  }
}

TEST(Programs, ConstantsAndAppend) {
  LogicProgram a = parse_program("p(b, 3). q(X) :- p(X, \"s\").");
  LogicProgram b = parse_program("r(a).");
  a.append(b);
  EXPECT_EQ(a.rules.size(), 3u);
  std::vector<Term> cs = a.constants();
  std::vector<std::string> texts;
  for (const Term& t : cs) texts.push_back(to_string(t));
  EXPECT_EQ(texts, (std::vector<std::string>{"3", "a", "b", "\"s\""}));
}

}  // namespace
}  // namespace xacml::lp
