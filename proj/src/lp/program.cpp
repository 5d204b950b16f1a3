#include "xacml/lp/program.hpp"

#include "xacml/parser.hpp"

#include <algorithm>
#include <charconv>

namespace xacml::lp {

namespace {

bool is_lower(char ch) { return ch >= 'a' && ch <= 'z'; }
bool is_upper(char ch) { return ch >= 'A' && ch <= 'Z'; }
bool is_digit(char ch) { return ch >= '0' && ch <= '9'; }
bool is_ident_char(char ch) { return is_lower(ch) || is_upper(ch) || is_digit(ch) || ch == '_'; }

bool is_bare_symbol(std::string_view s) {
  if (s.empty() || !is_lower(s.front()) || s == "not") return false;
  return std::all_of(s.begin(), s.end(), is_ident_char);
}

std::optional<std::int64_t> as_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::string_view digits = s.front() == '-' ? s.substr(1) : s;
  if (digits.empty() || !std::all_of(digits.begin(), digits.end(), is_digit)) return std::nullopt;
  if (digits.size() > 1 && digits.front() == '0') return std::nullopt;  // keep "007" a string
  if (s == "-0") return std::nullopt;
  std::int64_t n = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return n;
}

void collect_vars(const Term& t, std::set<std::string>& out) {
  if (t.is_variable()) out.insert(t.text);
}

void collect_vars(const Atom& a, std::set<std::string>& out) {
  for (const Term& t : a.args) collect_vars(t, out);
}

}  // namespace

Term Term::constant(std::string_view token) {
  if (auto n = as_number(token)) return num(*n);
  if (is_bare_symbol(token)) return sym(std::string(token));
  return str(std::string(token));
}

int compare(const Term& a, const Term& b) {
  auto rank = [](const Term& t) {
    switch (t.kind) {
      case Term::Kind::number: return 0;
      case Term::Kind::symbol: return 1;
      case Term::Kind::string: return 2;
      case Term::Kind::variable: return 3;
    }
    return 3;
  };
  if (rank(a) != rank(b)) return rank(a) < rank(b) ? -1 : 1;
  if (a.kind == Term::Kind::number) return a.number < b.number ? -1 : (a.number > b.number ? 1 : 0);
  int c = a.text.compare(b.text);
  return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

bool Atom::is_ground() const {
  return std::none_of(args.begin(), args.end(), [](const Term& t) { return t.is_variable(); });
}

bool Comparison::evaluate(const Term& a, const Term& b) const {
  const int c = compare(a, b);
  switch (op) {
    case Op::eq: return c == 0;
    case Op::ne: return c != 0;
    case Op::lt: return c < 0;
    case Op::le: return c <= 0;
    case Op::gt: return c > 0;
    case Op::ge: return c >= 0;
  }
  return false;
}

bool Rule::is_safe() const {
  std::set<std::string> bound;
  for (const Literal& l : body) {
    if (l.kind == Literal::Kind::positive) collect_vars(l.atom, bound);
  }
  std::set<std::string> needed;
  if (head) collect_vars(*head, needed);
  for (const Literal& l : body) {
    if (l.kind == Literal::Kind::negative) collect_vars(l.atom, needed);
    if (l.kind == Literal::Kind::comparison) {
      collect_vars(l.cmp.lhs, needed);
      collect_vars(l.cmp.rhs, needed);
    }
  }
  if (choice) {
    // The element's variables are local and bound by the generator.
    std::set<std::string> local;
    collect_vars(choice->generator, local);
    std::set<std::string> elem;
    collect_vars(choice->element, elem);
    if (!std::includes(local.begin(), local.end(), elem.begin(), elem.end())) return false;
  }
  return std::includes(bound.begin(), bound.end(), needed.begin(), needed.end());
}

void LogicProgram::append(const LogicProgram& other) {
  rules.insert(rules.end(), other.rules.begin(), other.rules.end());
}

std::vector<Term> LogicProgram::constants() const {
  std::vector<Term> out;
  auto add_term = [&](const Term& t) {
    if (t.is_variable()) return;
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  };
  auto add_atom = [&](const Atom& a) {
    for (const Term& t : a.args) add_term(t);
  };
  for (const Rule& r : rules) {
    if (r.head) add_atom(*r.head);
    if (r.choice) {
      add_atom(r.choice->element);
      add_atom(r.choice->generator);
    }
    for (const Literal& l : r.body) {
      if (l.kind == Literal::Kind::comparison) {
        add_term(l.cmp.lhs);
        add_term(l.cmp.rhs);
      } else {
        add_atom(l.atom);
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Term& a, const Term& b) { return compare(a, b) < 0; });
  return out;
}

// ── Printing ─────────────────────────────────────────────────────────────────

std::string to_string(const Term& t) {
  if (t.kind != Term::Kind::string) return t.text;
  std::string out = "\"";
  for (char ch : t.text) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

std::string to_string(const Atom& a) {
  if (a.args.empty()) return a.predicate;
  std::string out = a.predicate + "(";
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (i > 0) out += ", ";
    out += to_string(a.args[i]);
  }
  return out + ")";
}

namespace {

std::string_view op_text(Comparison::Op op) {
  switch (op) {
    case Comparison::Op::eq: return "=";
    case Comparison::Op::ne: return "!=";
    case Comparison::Op::lt: return "<";
    case Comparison::Op::le: return "<=";
    case Comparison::Op::gt: return ">";
    case Comparison::Op::ge: return ">=";
  }
  return "?";
}

}  // namespace

std::string to_string(const Literal& l) {
  switch (l.kind) {
    case Literal::Kind::positive: return to_string(l.atom);
    case Literal::Kind::negative: return "not " + to_string(l.atom);
    case Literal::Kind::comparison:
      return to_string(l.cmp.lhs) + " " + std::string(op_text(l.cmp.op)) + " " + to_string(l.cmp.rhs);
  }
  return "";
}

std::string to_string(const Rule& r) {
  std::string out;
  if (r.choice) {
    out = std::to_string(r.choice->lower) + " { " + to_string(r.choice->element) + " : " +
          to_string(r.choice->generator) + " } " + std::to_string(r.choice->upper);
  } else if (r.head) {
    out = to_string(*r.head);
  }
  if (!r.body.empty()) {
    out += r.head || r.choice ? " :- " : ":- ";
    for (std::size_t i = 0; i < r.body.size(); ++i) {
      if (i > 0) out += ", ";
      out += to_string(r.body[i]);
    }
  }
  return out + ".";
}

std::string serialize_program(const LogicProgram& p) {
  std::string out;
  for (const Rule& r : p.rules) out += to_string(r) + "\n";
  return out;
}

// ── Parsing ──────────────────────────────────────────────────────────────────

namespace {

enum class Tok { lower, upper, number, string, punct, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  SourceSpan span;
};

std::vector<Token> lex_program(std::string_view text, std::string_view file) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto span = [&](int c, int len) { return SourceSpan{std::string(file), line, c, c + len}; };
  while (i < text.size()) {
    const char ch = text[i];
    if (ch == '\n') {
      ++line;
      col = 1;
      ++i;
    } else if (ch == ' ' || ch == '\t' || ch == '\r') {
      ++col;
      ++i;
    } else if (ch == '%') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else if (is_ident_char(ch)) {
      std::size_t j = i;
      while (j < text.size() && is_ident_char(text[j])) ++j;
      std::string word(text.substr(i, j - i));
      Tok kind = is_digit(ch) ? Tok::number : (is_lower(ch) ? Tok::lower : Tok::upper);
      if (kind == Tok::number && !std::all_of(word.begin(), word.end(), is_digit)) {
        throw ParseError(span(col, static_cast<int>(j - i)), "malformed number '" + word + "'");
      }
      out.push_back({kind, word, span(col, static_cast<int>(j - i))});
      col += static_cast<int>(j - i);
      i = j;
    } else if (ch == '"') {
      std::string s;
      std::size_t j = i + 1;
      while (j < text.size() && text[j] != '"' && text[j] != '\n') {
        if (text[j] == '\\' && j + 1 < text.size()) ++j;
        s += text[j++];
      }
      if (j >= text.size() || text[j] != '"') throw ParseError(span(col, 1), "unterminated string");
      out.push_back({Tok::string, s, span(col, static_cast<int>(j + 1 - i))});
      col += static_cast<int>(j + 1 - i);
      i = j + 1;
    } else {
      static constexpr std::string_view two[] = {":-", "!=", "==", "<=", ">="};
      std::string p(1, ch);
      for (std::string_view t : two) {
        if (text.substr(i, 2) == t) p = std::string(t);
      }
      if (p.size() == 1 && std::string_view(".,(){}:=<>-").find(ch) == std::string_view::npos) {
        throw ParseError(span(col, 1), std::string("unexpected character '") + ch + "'");
      }
      out.push_back({Tok::punct, p, span(col, static_cast<int>(p.size()))});
      col += static_cast<int>(p.size());
      i += p.size();
    }
  }
  out.push_back({Tok::end, "", span(col, 0)});
  return out;
}

class ProgramParser {
 public:
  ProgramParser(std::string_view text, std::string_view file) : toks_(lex_program(text, file)) {}

  LogicProgram parse() {
    LogicProgram p;
    while (peek().kind != Tok::end) p.add(parse_statement());
    return p;
  }

 private:
  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool is_punct(std::string_view p, std::size_t k = 0) const {
    return peek(k).kind == Tok::punct && peek(k).text == p;
  }
  bool accept(std::string_view p) {
    if (!is_punct(p)) return false;
    next();
    return true;
  }
  [[noreturn]] void fail(const std::string& msg, std::vector<std::string> expected = {}) const {
    throw ParseError(peek().span, msg, std::move(expected));
  }
  std::string found() const { return peek().kind == Tok::end ? "end of input" : "'" + peek().text + "'"; }
  void expect(std::string_view p) {
    if (!accept(p)) fail("unexpected " + found(), {"'" + std::string(p) + "'"});
  }

  Rule parse_statement() {
    if (accept(":-")) {
      Rule r = Rule::constraint(parse_body());
      expect(".");
      return r;
    }
    Rule r;
    if (peek().kind == Tok::number && is_punct("{", 1)) {
      r.choice = parse_choice();
    } else {
      r.head = parse_atom();
    }
    if (accept(":-")) r.body = parse_body();
    expect(".");
    if (r.choice && !r.body.empty()) fail("choice rules with a body are not supported");
    if (!r.is_safe()) throw ParseError(peek().span, "unsafe rule: " + to_string(r));
    return r;
  }

  ChoiceHead parse_choice() {
    ChoiceHead c;
    c.lower = std::stoi(next().text);
    expect("{");
    c.element = parse_atom();
    expect(":");
    c.generator = parse_atom();
    expect("}");
    if (peek().kind != Tok::number) fail("unexpected " + found(), {"upper bound"});
    c.upper = std::stoi(next().text);
    return c;
  }

  std::vector<Literal> parse_body() {
    std::vector<Literal> body;
    do {
      body.push_back(parse_literal());
    } while (accept(","));
    return body;
  }

  std::optional<Comparison::Op> comparison_op() const {
    if (peek().kind != Tok::punct) return std::nullopt;
    const std::string& t = peek().text;
    if (t == "=" || t == "==") return Comparison::Op::eq;
    if (t == "!=") return Comparison::Op::ne;
    if (t == "<") return Comparison::Op::lt;
    if (t == "<=") return Comparison::Op::le;
    if (t == ">") return Comparison::Op::gt;
    if (t == ">=") return Comparison::Op::ge;
    return std::nullopt;
  }

  Literal parse_literal() {
    if (peek().kind == Tok::lower && peek().text == "not") {
      next();
      return Literal::neg(parse_atom());
    }
    if (peek().kind == Tok::lower && is_punct("(", 1)) return Literal::pos(parse_atom());
    Term lhs = parse_term();
    auto op = comparison_op();
    if (!op) {
      if (lhs.kind == Term::Kind::symbol) return Literal::pos(Atom(lhs.text));
      fail("unexpected " + found(), {"comparison operator"});
    }
    next();
    Term rhs = parse_term();
    return Literal::compare(*op, std::move(lhs), std::move(rhs));
  }

  Atom parse_atom() {
    if (peek().kind != Tok::lower) fail("unexpected " + found(), {"atom"});
    Atom a(next().text);
    if (accept("(")) {
      do {
        a.args.push_back(parse_term());
      } while (accept(","));
      expect(")");
    }
    return a;
  }

  Term parse_term() {
    const bool negative = accept("-");
    const Token& t = next();
    switch (t.kind) {
      case Tok::upper: if (!negative) return Term::var(t.text); break;
      case Tok::lower: if (!negative) return Term::sym(t.text); break;
      case Tok::string: if (!negative) return Term::str(t.text); break;
      case Tok::number: {
        auto n = as_number(negative ? "-" + t.text : t.text);
        if (n) return Term::num(*n);
        break;
      }
      default: break;
    }
    throw ParseError(t.span, "expected a term, found '" + t.text + "'");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

LogicProgram parse_program(std::string_view text, std::string_view file) {
  return ProgramParser(text, file).parse();
}

}  // namespace xacml::lp
