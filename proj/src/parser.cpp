#include "xacml/parser.hpp"

#include <algorithm>
#include <optional>

namespace xacml {

std::string SourceSpan::to_string() const {
  return file + ":" + std::to_string(line) + ":" + std::to_string(column);
}

namespace {

std::string describe(const SourceSpan& span, const std::string& message,
                     const std::vector<std::string>& expected) {
  std::string out = span.to_string() + ": " + message;
  if (!expected.empty()) {
    out += " (expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i > 0) out += i + 1 == expected.size() ? " or " : ", ";
      out += expected[i];
    }
    out += ")";
  }
  return out;
}

}  // namespace

ParseError::ParseError(SourceSpan span, std::string message, std::vector<std::string> expected)
    : Error(describe(span, message, expected)),
      span_(std::move(span)),
      message_(std::move(message)),
      expected_(std::move(expected)) {}

namespace {

// ── Lexer ────────────────────────────────────────────────────────────────────

enum class Tok { word, punct, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  SourceSpan span;
};

bool is_word_char(char ch) {
  return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
         ch == '_';
}

std::vector<Token> lex(std::string_view text, std::string_view file) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto span_at = [&](int c, int len) { return SourceSpan{std::string(file), line, c, c + len}; };
  while (i < text.size()) {
    char ch = text[i];
    if (ch == '\n') {
      ++line;
      col = 1;
      ++i;
      continue;
    }
    if (ch == ' ' || ch == '\t' || ch == '\r') {
      ++col;
      ++i;
      continue;
    }
    if (ch == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
      continue;
    }
    if (is_word_char(ch)) {
      std::size_t j = i;
      while (j < text.size() && is_word_char(text[j])) ++j;
      int len = static_cast<int>(j - i);
      out.push_back({Tok::word, std::string(text.substr(i, j - i)), span_at(col, len)});
      col += len;
      i = j;
      continue;
    }
    if ((ch == '=' || ch == '!') && i + 1 < text.size() && text[i + 1] == '=') {
      out.push_back({Tok::punct, std::string(text.substr(i, 2)), span_at(col, 2)});
      col += 2;
      i += 2;
      continue;
    }
    static constexpr std::string_view punct = "=[],<>()|&:{}";
    if (punct.find(ch) != std::string_view::npos) {
      out.push_back({Tok::punct, std::string(1, ch), span_at(col, 1)});
      ++col;
      ++i;
      continue;
    }
    throw ParseError(span_at(col, 1), std::string("unexpected character '") + ch + "'");
  }
  out.push_back({Tok::end, "", span_at(col, 0)});
  return out;
}

// ── Cursor ───────────────────────────────────────────────────────────────────

class Cursor {
 public:
  Cursor(std::string_view text, std::string_view file) : toks_(lex(text, file)) {}

  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  bool at_end() const { return peek().kind == Tok::end; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }

  bool is_punct(std::string_view p, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::punct && peek(ahead).text == p;
  }
  bool is_word(std::size_t ahead = 0) const { return peek(ahead).kind == Tok::word; }
  bool is_keyword(std::string_view w, std::size_t ahead = 0) const {
    return is_word(ahead) && peek(ahead).text == w;
  }

  bool accept(std::string_view p) {
    if (!is_punct(p)) return false;
    next();
    return true;
  }

  const Token& expect(std::string_view p) {
    if (!is_punct(p)) fail("unexpected " + found(), {"'" + std::string(p) + "'"});
    return next();
  }

  const Token& expect_word(const std::string& what) {
    if (!is_word()) fail("unexpected " + found(), {what});
    return next();
  }

  [[noreturn]] void fail(const std::string& message, std::vector<std::string> expected = {}) const {
    throw ParseError(peek().span, message, std::move(expected));
  }
  [[noreturn]] void fail_at(const Token& t, const std::string& message) const {
    throw ParseError(t.span, message);
  }

  std::string found() const {
    if (peek().kind == Tok::end) return "end of input";
    return "'" + peek().text + "'";
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

bool is_variable_name(std::string_view w) { return !w.empty() && w.front() >= 'A' && w.front() <= 'Z'; }

// ── Policy grammar ───────────────────────────────────────────────────────────

class PolicyParser {
 public:
  PolicyParser(std::string_view text, std::string_view file) : cur_(text, file) {}

  std::vector<ParsedComponent> parse_file() {
    std::vector<ParsedComponent> out;
    if (cur_.at_end()) cur_.fail("empty policy file", {"policyset", "policy", "rule"});
    while (!cur_.at_end()) out.push_back(parse_component());
    return out;
  }

 private:
  ParsedComponent parse_component() {
    const Token& kw = cur_.peek();
    if (!cur_.is_word() || (kw.text != "policyset" && kw.text != "policy" && kw.text != "rule")) {
      cur_.fail("unexpected " + cur_.found(), {"policyset", "policy", "rule"});
    }
    SourceSpan span = kw.span;
    std::string kind = cur_.next().text;
    std::string id = parse_id();
    cur_.expect("=");
    cur_.expect("[");
    if (kind == "rule") {
      Rule r;
      r.id = std::move(id);
      r.effect = parse_effect();
      cur_.expect(",");
      r.target = parse_target();
      cur_.expect(",");
      r.condition = parse_condition();
      cur_.expect("]");
      return {std::move(r), span};
    }
    Target target = parse_target();
    cur_.expect(",");
    std::vector<std::string> children = parse_id_list();
    cur_.expect(",");
    CombiningAlgorithm alg = parse_algorithm();
    cur_.expect("]");
    if (kind == "policy") return {Policy{std::move(id), std::move(target), std::move(children), alg}, span};
    return {PolicySet{std::move(id), std::move(target), std::move(children), alg}, span};
  }

  std::string parse_id() {
    const Token& t = cur_.expect_word("identifier");
    if (!is_identifier(t.text)) cur_.fail_at(t, "invalid identifier '" + t.text + "'");
    return t.text;
  }

  std::vector<std::string> parse_id_list() {
    cur_.expect("<");
    std::vector<std::string> ids;
    ids.push_back(parse_id());
    while (cur_.accept(",")) ids.push_back(parse_id());
    cur_.expect(">");
    return ids;
  }

  Effect parse_effect() {
    const Token& t = cur_.expect_word("effect");
    if (t.text == "permit") return Effect::permit;
    if (t.text == "deny") return Effect::deny;
    cur_.fail_at(t, "unknown effect '" + t.text + "'");
  }

  CombiningAlgorithm parse_algorithm() {
    const Token& t = cur_.expect_word("combining algorithm");
    if (auto a = algorithm_from_token(t.text)) return *a;
    cur_.fail_at(t, "unknown combining algorithm '" + t.text + "'");
  }

  Target parse_target() {
    if (cur_.is_keyword("null")) {
      cur_.next();
      return {};
    }
    if (!cur_.is_keyword("target")) cur_.fail("unexpected " + cur_.found(), {"null", "target"});
    cur_.next();
    cur_.expect("(");
    Target t;
    do {
      t.anyofs.push_back(AnyOf{parse_alternatives()});
    } while (cur_.accept(","));
    cur_.expect(")");
    return t;
  }

  // alternatives := conjunction ("|" conjunction)*
  std::vector<AllOf> parse_alternatives() {
    std::vector<AllOf> alts = parse_conjunction();
    while (cur_.accept("|")) {
      auto more = parse_conjunction();
      alts.insert(alts.end(), more.begin(), more.end());
    }
    return alts;
  }

  // conjunction := factor ("&" factor)*; only single-alternative factors may be joined.
  std::vector<AllOf> parse_conjunction() {
    const Token start = cur_.peek();
    std::vector<std::vector<AllOf>> factors;
    factors.push_back(parse_factor());
    while (cur_.accept("&")) factors.push_back(parse_factor());
    if (factors.size() == 1) return std::move(factors.front());
    AllOf joined;
    for (auto& f : factors) {
      if (f.size() != 1) {
        cur_.fail_at(start, "'&' cannot join alternatives; an AnyOf is a disjunction of AllOf conjunctions");
      }
      joined.matches.insert(joined.matches.end(), f.front().matches.begin(), f.front().matches.end());
    }
    return {std::move(joined)};
  }

  std::vector<AllOf> parse_factor() {
    if (cur_.accept("(")) {
      auto inner = parse_alternatives();
      cur_.expect(")");
      return inner;
    }
    return {AllOf{{parse_match()}}};
  }

  Match parse_match() {
    const Token& cat = cur_.expect_word("attribute category");
    auto c = category_from_string(cat.text);
    if (!c) cur_.fail_at(cat, "unknown attribute category '" + cat.text + "'");
    cur_.expect("(");
    const Token& v = cur_.expect_word("attribute value");
    cur_.expect(")");
    return Match{*c, v.text};
  }

  Condition parse_condition() {
    if (cur_.is_keyword("true")) {
      cur_.next();
      return Condition::truth();
    }
    if (!cur_.is_keyword("cond")) cur_.fail("unexpected " + cur_.found(), {"true", "cond"});
    cur_.next();
    cur_.expect("(");
    Condition c = parse_or();
    cur_.expect(")");
    return c;
  }

  Condition parse_or() {
    std::vector<Condition> ops;
    ops.push_back(parse_and());
    while (cur_.is_keyword("or")) {
      cur_.next();
      ops.push_back(parse_and());
    }
    return Condition::disj(std::move(ops));
  }

  Condition parse_and() {
    std::vector<Condition> ops;
    ops.push_back(parse_unary());
    while (cur_.is_keyword("and")) {
      cur_.next();
      ops.push_back(parse_unary());
    }
    return Condition::conj(std::move(ops));
  }

  Condition parse_unary() {
    if (cur_.is_keyword("not")) {
      cur_.next();
      return Condition::negate(parse_unary());
    }
    if (cur_.accept("(")) {
      Condition inner = parse_or();
      cur_.expect(")");
      return inner;
    }
    if (!cur_.is_word()) cur_.fail("unexpected " + cur_.found(), {"predicate", "comparison", "'('", "not"});
    if (cur_.is_punct("==", 1) || cur_.is_punct("!=", 1)) {
      CondTerm lhs = parse_term();
      bool equal = cur_.next().text == "==";
      CondTerm rhs = parse_term();
      return equal ? Condition::eq(std::move(lhs), std::move(rhs))
                   : Condition::ne(std::move(lhs), std::move(rhs));
    }
    const Token& name = cur_.next();
    if (is_variable_name(name.text) || !is_identifier(name.text)) {
      cur_.fail_at(name, "invalid predicate name '" + name.text + "'");
    }
    if (!cur_.is_punct("(")) cur_.fail("unexpected " + cur_.found(), {"'('", "'=='", "'!='"});
    cur_.next();
    std::vector<CondTerm> args;
    args.push_back(parse_term());
    while (cur_.accept(",")) args.push_back(parse_term());
    cur_.expect(")");
    return Condition::pred(name.text, std::move(args));
  }

  CondTerm parse_term() {
    const Token& t = cur_.expect_word("variable or constant");
    if (t.text == "and" || t.text == "or" || t.text == "not") {
      cur_.fail_at(t, "keyword '" + t.text + "' used as a term");
    }
    return is_variable_name(t.text) ? CondTerm::variable(t.text) : CondTerm::constant(t.text);
  }

  Cursor cur_;
};

// ── Domains grammar ──────────────────────────────────────────────────────────

std::optional<Category> section_category(std::string_view w) {
  if (w == "subjects") return Category::subject;
  if (w == "actions") return Category::action;
  if (w == "resources") return Category::resource;
  if (w == "environments") return Category::environment;
  return std::nullopt;
}

std::string_view section_name(Category c) {
  switch (c) {
    case Category::subject: return "subjects";
    case Category::action: return "actions";
    case Category::resource: return "resources";
    case Category::environment: return "environments";
  }
  return "?";
}

class DomainsParser {
 public:
  DomainsParser(std::string_view text, std::string_view file) : cur_(text, file) {}

  AttributeDomains parse() {
    AttributeDomains dom;
    std::array<bool, 4> seen{};
    while (!cur_.at_end()) {
      const Token& head = cur_.expect_word("section");
      if (auto cat = section_category(head.text)) {
        if (seen[index_of(*cat)]) cur_.fail_at(head, "duplicate section '" + head.text + "'");
        seen[index_of(*cat)] = true;
        cur_.expect(":");
        if (!starts_value()) {
          cur_.fail("empty section '" + head.text + "'; omit the section for an empty domain",
                    {"attribute value"});
        }
        auto& vs = dom.of(*cat);
        do {
          const Token& v = cur_.expect_word("attribute value");
          if (std::find(vs.begin(), vs.end(), v.text) != vs.end()) {
            cur_.fail_at(v, "duplicate token '" + v.text + "' in section '" + head.text + "'");
          }
          vs.push_back(v.text);
        } while (cur_.accept(","));
      } else if (head.text == "relation") {
        parse_relation(dom);
      } else {
        cur_.fail_at(head, "unknown section '" + head.text + "'");
      }
    }
    return dom;
  }

 private:
  // A value follows unless the next tokens open another section.
  bool starts_value() const {
    if (!cur_.is_word()) return false;
    if (cur_.is_punct(":", 1)) return false;
    if (cur_.is_keyword("relation") && cur_.is_word(1) && cur_.is_punct(":", 2)) return false;
    return true;
  }

  void parse_relation(AttributeDomains& dom) {
    const Token& name = cur_.expect_word("relation name");
    if (!is_identifier(name.text) || is_variable_name(name.text)) {
      cur_.fail_at(name, "invalid relation name '" + name.text + "'");
    }
    if (is_reserved_name(name.text) || category_from_string(name.text)) {
      cur_.fail_at(name, "relation name '" + name.text + "' is reserved");
    }
    if (dom.has_relation(name.text)) cur_.fail_at(name, "duplicate relation '" + name.text + "'");
    cur_.expect(":");
    if (!cur_.is_punct("(")) cur_.fail("empty relation '" + name.text + "'", {"'('"});
    auto& tuples = dom.relations[name.text];
    do {
      const Token& open = cur_.expect("(");
      std::vector<std::string> tuple;
      tuple.push_back(cur_.expect_word("constant").text);
      while (cur_.accept(",")) tuple.push_back(cur_.expect_word("constant").text);
      cur_.expect(")");
      if (!tuples.empty() && tuples.front().size() != tuple.size()) {
        cur_.fail_at(open, "tuple width " + std::to_string(tuple.size()) + " differs from relation arity " +
                               std::to_string(tuples.front().size()));
      }
      if (std::find(tuples.begin(), tuples.end(), tuple) != tuples.end()) {
        cur_.fail_at(open, "duplicate tuple in relation '" + name.text + "'");
      }
      tuples.push_back(std::move(tuple));
    } while (cur_.accept(","));
  }

  Cursor cur_;
};

// ── Serialization helpers ────────────────────────────────────────────────────

template <class T, class F>
std::string join(const std::vector<T>& xs, std::string_view sep, F&& f) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) out += sep;
    out += f(xs[i]);
  }
  return out;
}

std::string serialize_formula(const Condition& c) {
  using K = Condition::Kind;
  auto operand = [](const Condition& op) {
    std::string s = serialize_formula(op);
    return (op.kind == K::all || op.kind == K::any) ? "(" + s + ")" : s;
  };
  switch (c.kind) {
    case K::always_true: return "true";
    case K::predicate:
      return c.predicate + "(" + join(c.args, ", ", [](const CondTerm& t) { return t.name; }) + ")";
    case K::all: return join(c.operands, " and ", operand);
    case K::any: return join(c.operands, " or ", operand);
    case K::negation: return "not " + operand(c.operands.front());
    case K::equal: return c.args[0].name + " == " + c.args[1].name;
    case K::not_equal: return c.args[0].name + " != " + c.args[1].name;
  }
  return "";
}

std::string fact_text(const Fact& f) {
  return f.predicate + "(" + join(f.args, ", ", [](const std::string& s) { return s; }) + ")";
}

}  // namespace

std::vector<ParsedComponent> parse_policy_file(std::string_view text, std::string_view file) {
  return PolicyParser(text, file).parse_file();
}

PolicyStore load_store(std::string_view text, const AttributeDomains& domains, StoreOptions options,
                       std::string_view file) {
  std::vector<Component> comps;
  for (auto& pc : parse_policy_file(text, file)) comps.push_back(std::move(pc.component));
  return build_store(std::move(comps), &domains, options);
}

AttributeDomains parse_domains(std::string_view text, std::string_view file) {
  return DomainsParser(text, file).parse();
}

Request parse_request(std::string_view text, const AttributeDomains* domains, std::string_view file) {
  Cursor cur(text, file);
  Request req;
  cur.expect("{");
  if (!cur.is_punct("}")) {
    do {
      const Token& name = cur.expect_word("fact");
      cur.expect("(");
      std::vector<std::string> args;
      args.push_back(cur.expect_word("value").text);
      while (cur.accept(",")) args.push_back(cur.expect_word("value").text);
      cur.expect(")");
      if (category_from_string(name.text)) {
        if (args.size() != 1) cur.fail_at(name, "malformed fact: attribute " + name.text + " takes one value");
      } else if (domains != nullptr && domains->has_relation(name.text)) {
        if (auto ar = domains->arity(name.text); ar && *ar != args.size()) {
          cur.fail_at(name, "malformed fact: '" + name.text + "' has arity " + std::to_string(*ar));
        }
      } else {
        cur.fail_at(name, "unknown category '" + name.text + "'");
      }
      req.add(Fact{name.text, std::move(args)});
    } while (cur.accept(","));
  }
  cur.expect("}");
  if (!cur.at_end()) cur.fail("unexpected " + cur.found() + " after request");
  return req;
}

std::string serialize(const Target& target) {
  if (target.is_null()) return "null";
  return "target(" +
         join(target.anyofs, ", ",
              [](const AnyOf& any) {
                return "(" +
                       join(any.allofs, " | ",
                            [](const AllOf& all) {
                              return join(all.matches, " & ", [](const Match& m) {
                                return std::string(to_string(m.category)) + "(" + m.value + ")";
                              });
                            }) +
                       ")";
              }) +
         ")";
}

std::string serialize(const Condition& condition) {
  if (condition.is_true()) return "true";
  return "cond(" + serialize_formula(condition) + ")";
}

std::string serialize(const Component& component) {
  auto ids = [](const std::vector<std::string>& cs) {
    return "<" + join(cs, ", ", [](const std::string& s) { return s; }) + ">";
  };
  if (const auto* r = std::get_if<Rule>(&component)) {
    return "rule " + r->id + " = [" + (r->effect == Effect::permit ? "permit" : "deny") + ", " +
           serialize(r->target) + ", " + serialize(r->condition) + "]";
  }
  if (const auto* p = std::get_if<Policy>(&component)) {
    return "policy " + p->id + " = [" + serialize(p->target) + ", " + ids(p->children) + ", " +
           std::string(token(p->algorithm)) + "]";
  }
  const auto& ps = std::get<PolicySet>(component);
  return "policyset " + ps.id + " = [" + serialize(ps.target) + ", " + ids(ps.children) + ", " +
         std::string(token(ps.algorithm)) + "]";
}

std::string serialize(const PolicyStore& store) {
  std::string out;
  for (const Component& c : store.components()) out += serialize(c) + "\n";
  return out;
}

std::string serialize(const Request& request) {
  std::vector<Fact> facts(request.facts.begin(), request.facts.end());
  return "{" + join(facts, ", ", fact_text) + "}";
}

std::string serialize(const AttributeDomains& domains) {
  std::string out;
  for (Category c : kCategories) {
    const auto& vs = domains.of(c);
    if (vs.empty()) continue;
    out += std::string(section_name(c)) + ": " + join(vs, ", ", [](const std::string& s) { return s; }) + "\n";
  }
  for (const auto& [name, tuples] : domains.relations) {
    if (tuples.empty()) continue;
    out += "relation " + name + ": " +
           join(tuples, ", ",
                [](const std::vector<std::string>& t) {
                  return "(" + join(t, ", ", [](const std::string& s) { return s; }) + ")";
                }) +
           "\n";
  }
  return out;
}

}  // namespace xacml
