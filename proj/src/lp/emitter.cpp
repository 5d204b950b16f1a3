#include "xacml/lp/emitter.hpp"

#include <algorithm>

namespace xacml::lp {

std::string_view to_string(Task t) {
  switch (t) {
    case Task::gap: return "gap";
    case Task::conflict: return "conflict";
    case Task::reachability: return "reachability";
  }
  return "?";
}

std::optional<Task> task_from_string(std::string_view name) {
  if (name == "gap") return Task::gap;
  if (name == "conflict") return Task::conflict;
  if (name == "reachability") return Task::reachability;
  return std::nullopt;
}

namespace {

Term sym(std::string_view s) { return Term::sym(std::string(s)); }
Term var(std::string_view s) { return Term::var(std::string(s)); }

Atom val(Term id, std::string_view v) { return Atom("val", {std::move(id), sym(v)}); }
Atom val(Term id, Term v) { return Atom("val", {std::move(id), std::move(v)}); }
Atom dec(Term p, Term r, Term e) { return Atom("dec", {std::move(p), std::move(r), std::move(e)}); }
Atom dec(Term p, Term r, Term e, Term i) {
  return Atom("dec", {std::move(p), std::move(r), std::move(e), std::move(i)});
}
Atom algo(std::string_view alg, Term p, Term e) { return Atom("algo", {sym(alg), std::move(p), std::move(e)}); }

Literal pos(Atom a) { return Literal::pos(std::move(a)); }
Literal neg(Atom a) { return Literal::neg(std::move(a)); }
Literal ne(Term a, Term b) { return Literal::compare(Comparison::Op::ne, std::move(a), std::move(b)); }
Literal lt(Term a, Term b) { return Literal::compare(Comparison::Op::lt, std::move(a), std::move(b)); }

Term cond_term(const CondTerm& t) { return t.is_variable ? var(t.name) : Term::constant(t.name); }

Atom predicate_atom(const Condition& leaf) {
  Atom a(leaf.predicate);
  for (const CondTerm& t : leaf.args) a.args.push_back(cond_term(t));
  return a;
}

Literal comparison_literal(const Condition& c) {
  auto op = c.kind == Condition::Kind::equal ? Comparison::Op::eq : Comparison::Op::ne;
  return Literal::compare(op, cond_term(c.args[0]), cond_term(c.args[1]));
}

std::set<std::string> leaf_variables(const Condition& leaf) {
  std::set<std::string> out;
  for (const CondTerm& t : leaf.args) {
    if (t.is_variable) out.insert(t.name);
  }
  return out;
}

// A conjunction of predicate leaves, negated predicate leaves and
// comparisons, where every variable is bound by a positive leaf, maps onto a
// single rule body.
std::optional<std::vector<Literal>> flat_body(const Condition& c) {
  using K = Condition::Kind;
  std::vector<const Condition*> parts;
  if (c.kind == K::all) {
    for (const Condition& op : c.operands) parts.push_back(&op);
  } else {
    parts.push_back(&c);
  }
  std::set<std::string> bound;
  for (const Condition* p : parts) {
    if (p->kind == K::predicate) {
      auto vs = leaf_variables(*p);
      bound.insert(vs.begin(), vs.end());
    }
  }
  std::vector<Literal> body;
  std::vector<Literal> tail;
  for (const Condition* p : parts) {
    std::set<std::string> needed;
    switch (p->kind) {
      case K::predicate:
        body.push_back(pos(predicate_atom(*p)));
        continue;
      case K::negation:
        if (p->operands.front().kind != K::predicate) return std::nullopt;
        needed = leaf_variables(p->operands.front());
        tail.push_back(neg(predicate_atom(p->operands.front())));
        break;
      case K::equal:
      case K::not_equal:
        needed = leaf_variables(*p);
        tail.push_back(comparison_literal(*p));
        break;
      default:
        return std::nullopt;
    }
    if (!std::includes(bound.begin(), bound.end(), needed.begin(), needed.end())) return std::nullopt;
  }
  if (body.empty()) return std::nullopt;
  body.insert(body.end(), tail.begin(), tail.end());
  return body;
}

// Bodies of the eval(C, t) rules when no universe predicate is needed.
std::optional<std::vector<std::vector<Literal>>> flat_encoding(const Condition& c) {
  std::vector<std::vector<Literal>> bodies;
  if (c.kind == Condition::Kind::any) {
    for (const Condition& op : c.operands) {
      auto b = flat_body(op);
      if (!b) return std::nullopt;
      bodies.push_back(std::move(*b));
    }
    return bodies;
  }
  auto b = flat_body(c);
  if (!b) return std::nullopt;
  bodies.push_back(std::move(*b));
  return bodies;
}

bool needs_universe(const PolicyStore& store) {
  for (const Component& comp : store.components()) {
    const auto* r = std::get_if<xacml::Rule>(&comp);
    if (r && !r->condition.is_true() && !flat_encoding(r->condition)) return true;
  }
  return false;
}

void add_universe(LogicProgram& out, const std::set<std::string>& constants) {
  std::vector<Term> terms;
  for (const std::string& c : constants) terms.push_back(Term::constant(c));
  std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return compare(a, b) < 0; });
  for (Term& t : terms) out.add(Rule::fact(Atom("univ", {std::move(t)})));
}

class StoreEmitter {
 public:
  StoreEmitter(const PolicyStore& store, const AttributeDomains& dom, const EmitOptions& options)
      : store_(store), dom_(dom), options_(options) {}

  LogicProgram run() {
    out_.add(Rule::fact(val(sym("null"), "m")));
    const bool has_true = std::any_of(store_.components().begin(), store_.components().end(),
                                      [](const Component& c) {
                                        const auto* r = std::get_if<xacml::Rule>(&c);
                                        return r && r->condition.is_true();
                                      });
    if (has_true) out_.add(Rule::fact(val(sym("cond_true"), "t")));
    if (needs_universe(store_)) add_universe(out_, dom_.constants());
    for (const auto& [name, tuples] : dom_.relations) {
      for (const auto& tuple : tuples) {
        Atom a(name);
        for (const std::string& v : tuple) a.args.push_back(Term::constant(v));
        out_.add(Rule::fact(std::move(a)));
      }
    }

    std::set<CombiningAlgorithm> used;
    for (std::size_t k = 0; k < store_.size(); ++k) {
      const Component& c = store_.at(k);
      const Term id = Term::constant(id_of(c));
      const Term target = emit_target(target_of(c));
      if (const auto* r = std::get_if<xacml::Rule>(&c)) {
        emit_rule(*r, id, target);
        continue;
      }
      const CombiningAlgorithm alg = std::holds_alternative<Policy>(c) ? std::get<Policy>(c).algorithm
                                                                       : std::get<PolicySet>(c).algorithm;
      used.insert(alg);
      emit_container(k, id, target, alg);
    }
    for (CombiningAlgorithm alg : kAlgorithms) {
      if (used.contains(alg)) out_.append(transform_combining(alg, options_));
    }
    return std::move(out_);
  }

 private:
  Term fresh(std::string_view prefix, int& counter) {
    return sym(std::string(prefix) + "_" + std::to_string(++counter));
  }

  Term emit_match(const Match& m) {
    Term id = fresh("match", match_);
    Atom fact(std::string(to_string(m.category)), {Term::constant(m.value)});
    out_.add(Rule::make(val(id, "m"), {pos(fact)}));
    out_.add(Rule::make(val(id, "nm"), {neg(fact)}));
    return id;
  }

  Term emit_allof(const AllOf& a) {
    Term id = fresh("allof", allof_);
    std::vector<Term> kids;
    for (const Match& m : a.matches) kids.push_back(emit_match(m));
    std::vector<Literal> all;
    for (const Term& k : kids) all.push_back(pos(val(k, "m")));
    out_.add(Rule::make(val(id, "m"), std::move(all)));
    for (const Term& k : kids) out_.add(Rule::make(val(id, "nm"), {pos(val(k, "nm"))}));
    return id;
  }

  Term emit_anyof(const AnyOf& a) {
    Term id = fresh("anyof", anyof_);
    std::vector<Term> kids;
    for (const AllOf& all : a.allofs) kids.push_back(emit_allof(all));
    for (const Term& k : kids) out_.add(Rule::make(val(id, "m"), {pos(val(k, "m"))}));
    std::vector<Literal> none;
    for (const Term& k : kids) none.push_back(pos(val(k, "nm")));
    out_.add(Rule::make(val(id, "nm"), std::move(none)));
    return id;
  }

  Term emit_target(const Target& t) {
    if (t.is_null()) return sym("null");
    Term id = fresh("target", target_);
    std::vector<Term> kids;
    for (const AnyOf& any : t.anyofs) kids.push_back(emit_anyof(any));
    std::vector<Literal> all;
    for (const Term& k : kids) all.push_back(pos(val(k, "m")));
    out_.add(Rule::make(val(id, "m"), std::move(all)));
    for (const Term& k : kids) out_.add(Rule::make(val(id, "nm"), {pos(val(k, "nm"))}));
    return id;
  }

  // Compositional encoding: one auxiliary predicate per subformula over its
  // free variables, with univ/1 binding variables a subformula leaves open.
  Atom emit_aux(const Condition& c, int cond, int& next) {
    using K = Condition::Kind;
    const std::vector<std::string> vars = variables_of(c);
    Atom head("aux_" + std::to_string(cond) + "_" + std::to_string(++next));
    for (const std::string& v : vars) head.args.push_back(var(v));
    auto univ_for = [this](const std::vector<std::string>& vs, const std::vector<std::string>& except) {
      std::vector<Literal> out;
      for (const std::string& v : vs) {
        if (std::find(except.begin(), except.end(), v) == except.end()) {
          out.push_back(pos(Atom(universe_, {var(v)})));
        }
      }
      return out;
    };
    switch (c.kind) {
      case K::always_true:
        out_.add(Rule::fact(head));
        break;
      case K::predicate:
        out_.add(Rule::make(head, {pos(predicate_atom(c))}));
        break;
      case K::equal:
      case K::not_equal: {
        auto body = univ_for(vars, {});
        body.push_back(comparison_literal(c));
        out_.add(Rule::make(head, std::move(body)));
        break;
      }
      case K::all: {
        std::vector<Literal> body;
        for (const Condition& op : c.operands) body.push_back(pos(emit_aux(op, cond, next)));
        out_.add(Rule::make(head, std::move(body)));
        break;
      }
      case K::any:
        for (const Condition& op : c.operands) {
          std::vector<Literal> body{pos(emit_aux(op, cond, next))};
          auto rest = univ_for(vars, variables_of(op));
          body.insert(body.end(), rest.begin(), rest.end());
          out_.add(Rule::make(head, std::move(body)));
        }
        break;
      case K::negation: {
        Atom inner = emit_aux(c.operands.front(), cond, next);
        auto body = univ_for(vars, {});
        body.push_back(neg(std::move(inner)));
        out_.add(Rule::make(head, std::move(body)));
        break;
      }
    }
    return head;
  }

  Term emit_condition(const Condition& c) {
    if (c.is_true()) return sym("cond_true");
    const int number = ++cond_;
    Term id = sym("cond_" + std::to_string(number));
    Atom truth("eval", {id, sym("t")});
    Atom falsity("eval", {id, sym("f")});
    if (auto bodies = flat_encoding(c)) {
      for (auto& body : *bodies) out_.add(Rule::make(truth, std::move(body)));
    } else {
      // Variables range over the domain constants and the condition's own.
      universe_ = "univ";
      const std::set<std::string> known = dom_.constants();
      std::vector<Term> own;
      for (const std::string& k : constants_of(c)) {
        if (!known.contains(k)) own.push_back(Term::constant(k));
      }
      if (!own.empty()) {
        universe_ = "aux_" + std::to_string(number) + "_0";
        out_.add(Rule::make(Atom(universe_, {var("X")}), {pos(Atom("univ", {var("X")}))}));
        std::sort(own.begin(), own.end(), [](const Term& a, const Term& b) { return compare(a, b) < 0; });
        for (Term& t : own) out_.add(Rule::fact(Atom(universe_, {std::move(t)})));
      }
      int next = 0;
      out_.add(Rule::make(truth, {pos(emit_aux(c, number, next))}));
    }
    out_.add(Rule::make(falsity, {neg(truth)}));
    out_.add(Rule::make(val(id, var("V")), {pos(Atom("eval", {id, var("V")}))}));
    return id;
  }

  void emit_rule(const xacml::Rule& r, const Term& id, const Term& target) {
    const Term cond = emit_condition(r.condition);
    out_.add(Rule::make(val(id, token(r.effect)), {pos(val(target, "m")), pos(val(cond, "t"))}));
    out_.add(Rule::make(val(id, "na"), {pos(val(target, "m")), pos(val(cond, "f"))}));
    out_.add(Rule::make(val(id, "na"), {pos(val(target, "nm"))}));
  }

  void emit_container(std::size_t k, const Term& id, const Term& target, CombiningAlgorithm alg) {
    out_.add(Rule::fact(Atom("comb", {id, sym(token(alg))})));
    std::vector<Literal> all_na;
    for (std::size_t child : store_.children(k)) {
      const Term cid = Term::constant(id_of(store_.at(child)));
      const Term index = Term::num(static_cast<std::int64_t>(store_.position(child)));
      out_.add(Rule::make(dec(id, cid, var("E")), {pos(val(cid, var("E")))}));
      out_.add(Rule::make(dec(id, cid, var("E"), index), {pos(val(cid, var("E")))}));
      all_na.push_back(pos(val(cid, "na")));
    }
    out_.add(Rule::make(val(id, "na"), {pos(val(target, "nm"))}));
    out_.add(Rule::make(val(id, "na"), std::move(all_na)));
    out_.add(Rule::make(val(id, var("E")), {pos(val(target, "m")), pos(dec(id, var("R"), var("V"))),
                                            ne(var("V"), sym("na")),
                                            pos(algo(token(alg), id, var("E")))}));
  }

  const PolicyStore& store_;
  const AttributeDomains& dom_;
  const EmitOptions& options_;
  LogicProgram out_;
  int match_ = 0;
  int allof_ = 0;
  int anyof_ = 0;
  int target_ = 0;
  int cond_ = 0;
  std::string universe_ = "univ";
};

void add_db_facts(LogicProgram& out, const AttributeDomains& dom) {
  for (Category c : kCategories) {
    for (const std::string& v : dom.of(c)) {
      out.add(Rule::fact(Atom(std::string(to_string(c)) + "_db", {Term::constant(v)})));
    }
  }
}

void add_generate_one(LogicProgram& out, const AttributeDomains& dom) {
  for (Category c : kCategories) {
    if (dom.of(c).empty()) continue;
    const std::string name(to_string(c));
    out.add(Rule::choose({1, 1, Atom(name, {var("X")}), Atom(name + "_db", {var("X")})}));
  }
}

void add_generate_all(LogicProgram& out) {
  for (Category c : kCategories) {
    const std::string name(to_string(c));
    out.add(Rule::make(Atom(name, {var("X")}), {pos(Atom(name + "_db", {var("X")}))}));
  }
}

void collect_categories(const Condition& c, std::set<Category>& out) {
  if (c.kind == Condition::Kind::predicate) {
    if (auto cat = category_from_string(c.predicate)) out.insert(*cat);
  }
  for (const Condition& op : c.operands) collect_categories(op, out);
}

}  // namespace

Atom val_atom(std::string_view id, std::string_view value) {
  return val(Term::constant(id), value);
}

std::set<Category> referenced_categories(const PolicyStore& store) {
  std::set<Category> out;
  for (const Component& comp : store.components()) {
    for (const AnyOf& any : target_of(comp).anyofs) {
      for (const AllOf& all : any.allofs) {
        for (const Match& m : all.matches) out.insert(m.category);
      }
    }
    if (const auto* r = std::get_if<xacml::Rule>(&comp)) collect_categories(r->condition, out);
  }
  return out;
}

LogicProgram transform_combining(CombiningAlgorithm alg, const EmitOptions& options) {
  LogicProgram out;
  const Term P = var("P"), R = var("R"), E = var("E");
  const Term p = sym("p"), d = sym("d"), na = sym("na");
  auto overrides = [&](std::string_view name, const Term& strong, const Term& weak) {
    out.add(Rule::make(algo(name, P, strong), {pos(dec(P, R, strong))}));
    out.add(Rule::make(algo(name, P, weak), {neg(algo(name, P, strong)), pos(dec(P, R, weak))}));
    out.add(Rule::make(algo(name, P, na), {pos(Atom("comb", {P, sym(name)})), neg(algo(name, P, strong)),
                                           neg(algo(name, P, weak))}));
  };
  switch (alg) {
    case CombiningAlgorithm::permit_overrides:
      overrides("po", p, d);
      break;
    case CombiningAlgorithm::deny_overrides:
      if (options.literal_deny_overrides) {
        out.add(Rule::make(algo("po", P, d), {pos(dec(P, R, d))}));
        out.add(Rule::make(algo("po", P, p), {neg(algo("po", P, d)), pos(dec(P, R, p))}));
        out.add(Rule::make(algo("po", P, na), {pos(Atom("comb", {P, sym("do")})), neg(algo("po", P, d)),
                                               neg(algo("po", P, d))}));
      } else {
        overrides("do", d, p);
      }
      break;
    case CombiningAlgorithm::first_applicable: {
      const Term I = var("I"), J = var("J");
      out.add(Rule::make(algo("fa", P, E), {pos(dec(P, R, E, I)), ne(E, na), neg(Atom("blocked", {P, I}))}));
      out.add(Rule::make(Atom("blocked", {P, I}), {pos(dec(P, var("R1"), var("E1"), I)),
                                                   pos(dec(P, R, E, J)), ne(E, na), lt(J, I)}));
      break;
    }
    case CombiningAlgorithm::only_one_applicable: {
      const Term X = var("X"), Y = var("Y"), R1 = var("R1"), R2 = var("R2");
      out.add(Rule::make(Atom("not_one_applicable", {P}),
                         {pos(dec(P, R1, X)), pos(dec(P, R2, Y)), ne(R1, R2), ne(X, na), ne(Y, na)}));
      out.add(Rule::make(algo("ooa", P, E),
                         {pos(dec(P, R, E)), ne(E, na), neg(Atom("not_one_applicable", {P}))}));
      out.add(Rule::make(algo("ooa", P, na), {pos(Atom("not_one_applicable", {P}))}));
      break;
    }
  }
  return out;
}

LogicProgram transform_store(const PolicyStore& store, const AttributeDomains& dom,
                             const EmitOptions& options) {
  return StoreEmitter(store, dom, options).run();
}

LogicProgram transform_request(const Request& q) {
  LogicProgram out;
  for (const Fact& f : q.facts) {
    Atom a(f.predicate);
    for (const std::string& v : f.args) a.args.push_back(Term::constant(v));
    out.add(Rule::fact(std::move(a)));
  }
  return out;
}

LogicProgram emit_eval(const PolicyStore& store, const AttributeDomains& dom, const Request& q,
                       const EmitOptions& options) {
  LogicProgram out = transform_store(store, dom, options);
  out.append(transform_request(q));
  if (needs_universe(store)) {
    const std::set<std::string> known = dom.constants();
    std::set<std::string> extra;
    for (const Fact& f : q.facts) {
      for (const std::string& v : f.args) {
        if (!known.contains(v)) extra.insert(v);
      }
    }
    add_universe(out, extra);
  }
  return out;
}

LogicProgram emit_analysis(Task task, const PolicyStore& store, const AttributeDomains& dom,
                           const EmitOptions& options) {
  if (task != Task::reachability) {
    for (Category c : referenced_categories(store)) {
      if (dom.of(c).empty()) {
        throw Error("cannot generate requests: the store refers to category '" +
                    std::string(to_string(c)) + "' but its domain is empty");
      }
    }
  }
  LogicProgram out = transform_store(store, dom, options);
  add_db_facts(out, dom);
  const Term root = Term::constant(store.root().id);
  const Term R = var("R"), E = var("E"), P = var("P");
  const Term p = sym("p"), d = sym("d"), na = sym("na");
  switch (task) {
    case Task::gap:
      add_generate_one(out, dom);
      out.add(Rule::make(Atom("gap"), {pos(val(root, "na"))}));
      out.add(Rule::constraint({neg(Atom("gap"))}));
      break;
    case Task::conflict:
      add_generate_one(out, dom);
      out.add(Rule::make(Atom("conflict"), {pos(val(var("R1"), p)), pos(val(var("R2"), d)),
                                            ne(var("R1"), var("R2"))}));
      out.add(Rule::constraint({neg(Atom("conflict"))}));
      break;
    case Task::reachability: {
      add_generate_all(out);
      for (const Component& c : store.components()) {
        out.add(Rule::fact(Atom("component", {Term::constant(id_of(c))})));
      }
      const Atom nr("not_reachable", {R});
      out.add(Rule::make(Atom("reachable", {R}), {pos(val(R, E)), ne(E, na)}));
      out.add(Rule::make(nr, {pos(Atom("component", {R})), neg(Atom("reachable", {R}))}));
      out.add(Rule::make(nr, {pos(val(P, p)), pos(dec(P, R, d))}));
      out.add(Rule::make(nr, {pos(val(P, d)), pos(dec(P, R, p))}));
      out.add(Rule::make(nr, {pos(val(P, na)), pos(dec(P, R, E)), ne(E, na)}));
      out.add(Rule::make(Atom("not_reachable", {var("Rj")}),
                         {pos(Atom("comb", {P, sym("fa")})), pos(dec(P, var("Ri"), E, var("I"))),
                          pos(dec(P, var("Rj"), var("E2"), var("J"))), ne(E, na), ne(var("E2"), na),
                          lt(var("I"), var("J"))}));
      out.add(Rule::make(Atom("not_reachable"), {pos(nr)}));
      out.add(Rule::constraint({neg(Atom("not_reachable"))}));
      break;
    }
  }
  return out;
}

}  // namespace xacml::lp
