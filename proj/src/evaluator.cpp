#include "xacml/evaluator.hpp"

#include <algorithm>
#include <string_view>

namespace xacml {

MatchValue eval_match(const Match& m, const Request& q) {
  return q.contains(m) ? MatchValue::match : MatchValue::no_match;
}

MatchValue eval_allof(const AllOf& a, const Request& q) {
  for (const Match& m : a.matches) {
    if (eval_match(m, q) == MatchValue::no_match) return MatchValue::no_match;
  }
  return MatchValue::match;
}

MatchValue eval_anyof(const AnyOf& a, const Request& q) {
  for (const AllOf& all : a.allofs) {
    if (eval_allof(all, q) == MatchValue::match) return MatchValue::match;
  }
  return MatchValue::no_match;
}

MatchValue eval_target(const Target& t, const Request& q) {
  for (const AnyOf& any : t.anyofs) {
    if (eval_anyof(any, q) == MatchValue::no_match) return MatchValue::no_match;
  }
  return MatchValue::match;
}

// ── Conditions ───────────────────────────────────────────────────────────────

namespace {

class ConditionSolver {
 public:
  ConditionSolver(const Condition& c, const Request& q, const AttributeDomains& dom)
      : cond_(c), req_(q), dom_(dom), vars_(variables_of(c)) {}

  bool satisfiable(const std::set<std::string>& universe) {
    std::vector<std::vector<std::string>> candidates(vars_.size());
    for (std::size_t v = 0; v < vars_.size(); ++v) {
      candidates[v] = restrict(vars_[v], universe);
      if (candidates[v].empty()) return false;
    }
    assignment_.assign(vars_.size(), nullptr);
    std::vector<std::size_t> odometer(vars_.size(), 0);
    while (true) {
      for (std::size_t v = 0; v < vars_.size(); ++v) assignment_[v] = &candidates[v][odometer[v]];
      if (holds(cond_)) return true;
      std::size_t v = 0;
      for (; v < vars_.size(); ++v) {
        if (++odometer[v] < candidates[v].size()) break;
        odometer[v] = 0;
      }
      if (v == vars_.size()) return false;
    }
  }

 private:
  bool is_fact(const std::string& pred, const std::vector<std::string>& tuple) const {
    if (req_.facts.contains(Fact{pred, tuple})) return true;
    if (category_from_string(pred)) return false;
    auto it = dom_.relations.find(pred);
    if (it == dom_.relations.end()) return false;
    return std::find(it->second.begin(), it->second.end(), tuple) != it->second.end();
  }

  // Every tuple of `pred`, from the request and (for relations) the domains.
  std::vector<std::vector<std::string>> tuples(const std::string& pred) const {
    std::vector<std::vector<std::string>> out;
    for (const Fact& f : req_.facts) {
      if (f.predicate == pred) out.push_back(f.args);
    }
    if (!category_from_string(pred)) {
      if (auto it = dom_.relations.find(pred); it != dom_.relations.end()) {
        out.insert(out.end(), it->second.begin(), it->second.end());
      }
    }
    return out;
  }

  // A variable occurring in a positive predicate that is a top-level conjunct
  // can only take values found at that argument position.
  std::vector<std::string> restrict(const std::string& var, const std::set<std::string>& universe) const {
    std::set<std::string> allowed = universe;
    std::vector<const Condition*> conjuncts;
    if (cond_.kind == Condition::Kind::all) {
      for (const Condition& op : cond_.operands) conjuncts.push_back(&op);
    } else {
      conjuncts.push_back(&cond_);
    }
    for (const Condition* leaf : conjuncts) {
      if (leaf->kind != Condition::Kind::predicate) continue;
      for (std::size_t pos = 0; pos < leaf->args.size(); ++pos) {
        if (!leaf->args[pos].is_variable || leaf->args[pos].name != var) continue;
        std::set<std::string> seen;
        for (const auto& t : tuples(leaf->predicate)) {
          if (t.size() == leaf->args.size() && allowed.contains(t[pos])) seen.insert(t[pos]);
        }
        allowed = std::move(seen);
      }
    }
    return {allowed.begin(), allowed.end()};
  }

  const std::string& value(const CondTerm& t) const {
    if (!t.is_variable) return t.name;
    auto it = std::find(vars_.begin(), vars_.end(), t.name);
    return *assignment_[static_cast<std::size_t>(it - vars_.begin())];
  }

  bool holds(const Condition& c) const {
    using K = Condition::Kind;
    switch (c.kind) {
      case K::always_true: return true;
      case K::predicate: {
        std::vector<std::string> tuple;
        tuple.reserve(c.args.size());
        for (const CondTerm& t : c.args) tuple.push_back(value(t));
        return is_fact(c.predicate, tuple);
      }
      case K::all:
        return std::all_of(c.operands.begin(), c.operands.end(), [&](const Condition& o) { return holds(o); });
      case K::any:
        return std::any_of(c.operands.begin(), c.operands.end(), [&](const Condition& o) { return holds(o); });
      case K::negation: return !holds(c.operands.front());
      case K::equal: return value(c.args[0]) == value(c.args[1]);
      case K::not_equal: return value(c.args[0]) != value(c.args[1]);
    }
    return false;
  }

  const Condition& cond_;
  const Request& req_;
  const AttributeDomains& dom_;
  std::vector<std::string> vars_;
  std::vector<const std::string*> assignment_;
};

std::set<std::string> condition_universe(const Condition& c, const AttributeDomains& dom) {
  std::set<std::string> u = dom.constants();
  auto own = constants_of(c);
  u.insert(own.begin(), own.end());
  return u;
}

}  // namespace

namespace detail {

CondValue eval_condition(const Condition& c, const Request& q, const AttributeDomains& dom,
                         const std::set<std::string>& base_universe) {
  if (c.is_true()) return CondValue::truth;
  std::set<std::string> universe = base_universe;
  for (const Fact& f : q.facts) universe.insert(f.args.begin(), f.args.end());
  return ConditionSolver(c, q, dom).satisfiable(universe) ? CondValue::truth : CondValue::falsity;
}

}  // namespace detail

CondValue eval_condition(const Condition& c, const Request& q, const AttributeDomains& dom) {
  return detail::eval_condition(c, q, dom, condition_universe(c, dom));
}

Decision eval_rule(const Rule& r, const Request& q, const AttributeDomains& dom) {
  if (eval_target(r.target, q) == MatchValue::no_match) return Decision::not_applicable;
  if (eval_condition(r.condition, q, dom) == CondValue::falsity) return Decision::not_applicable;
  return to_decision(r.effect);
}

// ── Combining ────────────────────────────────────────────────────────────────

namespace {

Decision overrides(Decision strong, Decision weak, std::span<const Decision> values) {
  bool saw_weak = false;
  for (Decision v : values) {
    if (v == strong) return strong;
    if (v == weak) saw_weak = true;
  }
  return saw_weak ? weak : Decision::not_applicable;
}

}  // namespace

Decision combine(CombiningAlgorithm alg, std::span<const Decision> values) {
  switch (alg) {
    case CombiningAlgorithm::permit_overrides:
      return overrides(Decision::permit, Decision::deny, values);
    case CombiningAlgorithm::deny_overrides:
      return overrides(Decision::deny, Decision::permit, values);
    case CombiningAlgorithm::first_applicable:
      for (Decision v : values) {
        if (v != Decision::not_applicable) return v;
      }
      return Decision::not_applicable;
    case CombiningAlgorithm::only_one_applicable: {
      Decision found = Decision::not_applicable;
      int applicable = 0;
      for (Decision v : values) {
        if (v != Decision::not_applicable) {
          found = v;
          ++applicable;
        }
      }
      return applicable == 1 ? found : Decision::not_applicable;
    }
  }
  return Decision::not_applicable;
}

namespace {

Decision combine_container(MatchValue target, CombiningAlgorithm alg, std::span<const Decision> kids) {
  if (target == MatchValue::no_match) return Decision::not_applicable;
  bool any_applicable = std::any_of(kids.begin(), kids.end(),
                                    [](Decision d) { return d != Decision::not_applicable; });
  if (!any_applicable) return Decision::not_applicable;
  return combine(alg, kids);
}

}  // namespace

namespace {

Decision rule_decision(const Rule& r, const Request& q, const AttributeDomains& dom) {
  if (eval_target(r.target, q) == MatchValue::no_match) return Decision::not_applicable;
  if (eval_condition(r.condition, q, dom) == CondValue::falsity) {
    return Decision::not_applicable;
  }
  return to_decision(r.effect);
}

Decision policy_decision(const Policy& p, const PolicyStore& store, const Request& q,
                         const AttributeDomains& dom) {
  if (eval_target(p.target, q) == MatchValue::no_match) return Decision::not_applicable;
  std::vector<Decision> kids;
  for (const std::string& id : p.children) {
    kids.push_back(rule_decision(std::get<Rule>(store.at(id)), q, dom));
  }
  return combine_container(MatchValue::match, p.algorithm, kids);
}

Decision policyset_decision(const PolicySet& ps, const PolicyStore& store, const Request& q,
                            const AttributeDomains& dom) {
  if (eval_target(ps.target, q) == MatchValue::no_match) return Decision::not_applicable;
  std::vector<Decision> kids;
  for (const std::string& id : ps.children) {
    const Component& c = store.at(id);
    if (const auto* child_ps = std::get_if<PolicySet>(&c)) {
      kids.push_back(policyset_decision(*child_ps, store, q, dom));
    } else {
      kids.push_back(policy_decision(std::get<Policy>(c), store, q, dom));
    }
  }
  return combine_container(MatchValue::match, ps.algorithm, kids);
}

}  // namespace

Decision eval_policy(const Policy& p, const PolicyStore& store, const Request& q,
                     const AttributeDomains& dom) {
  return policy_decision(p, store, q, dom);
}

Decision eval_policyset(const PolicySet& ps, const PolicyStore& store, const Request& q,
                        const AttributeDomains& dom) {
  return policyset_decision(ps, store, q, dom);
}

Decision evaluate(const PolicyStore& store, const Request& q, const AttributeDomains& dom) {
  return Evaluator(store, dom).evaluate(q);
}

// ── Evaluator ────────────────────────────────────────────────────────────────

Evaluator::Evaluator(const PolicyStore& store, const AttributeDomains& dom)
    : store_(&store), dom_(&dom), universes_(store.size()) {
  for (std::size_t k = 0; k < store.size(); ++k) {
    if (const auto* r = std::get_if<Rule>(&store.at(k))) universes_[k] = condition_universe(r->condition, dom);
  }
}

std::vector<MatchValue> Evaluator::targets(const Request& q) const {
  std::vector<MatchValue> out;
  out.reserve(store_->size());
  for (const Component& c : store_->components()) out.push_back(eval_target(target_of(c), q));
  return out;
}

std::vector<Decision> Evaluator::evaluate_all(const Request& q) const {
  const std::size_t n = store_->size();
  std::vector<Decision> out(n, Decision::not_applicable);
  // Pre-order layout: children follow their parent, so a reverse sweep
  // settles every child before its container.
  for (std::size_t k = n; k-- > 0;) {
    const Component& c = store_->at(k);
    const MatchValue target = eval_target(target_of(c), q);
    if (const auto* r = std::get_if<Rule>(&c)) {
      if (target == MatchValue::match &&
          detail::eval_condition(r->condition, q, *dom_, universes_[k]) == CondValue::truth) {
        out[k] = to_decision(r->effect);
      }
      continue;
    }
    std::vector<Decision> kids;
    for (std::size_t child : store_->children(k)) kids.push_back(out[child]);
    const CombiningAlgorithm alg = std::holds_alternative<Policy>(c) ? std::get<Policy>(c).algorithm
                                                                    : std::get<PolicySet>(c).algorithm;
    out[k] = combine_container(target, alg, kids);
  }
  return out;
}

Decision Evaluator::evaluate(const Request& q) const { return evaluate_all(q).front(); }

}  // namespace xacml
