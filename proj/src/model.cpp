#include "xacml/model.hpp"

#include <algorithm>
#include <functional>

namespace xacml {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::subject: return "subject";
    case Category::action: return "action";
    case Category::resource: return "resource";
    case Category::environment: return "environment";
  }
  return "?";
}

std::optional<Category> category_from_string(std::string_view name) {
  for (Category c : kCategories) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

std::string_view token(CombiningAlgorithm a) {
  switch (a) {
    case CombiningAlgorithm::permit_overrides: return "po";
    case CombiningAlgorithm::deny_overrides: return "do";
    case CombiningAlgorithm::first_applicable: return "fa";
    case CombiningAlgorithm::only_one_applicable: return "ooa";
  }
  return "?";
}

std::string_view token(Decision d) {
  switch (d) {
    case Decision::permit: return "p";
    case Decision::deny: return "d";
    case Decision::not_applicable: return "na";
  }
  return "?";
}

std::string_view token(MatchValue v) { return v == MatchValue::match ? "m" : "nm"; }
std::string_view token(CondValue v) { return v == CondValue::truth ? "t" : "f"; }
std::string_view token(Effect e) { return e == Effect::permit ? "p" : "d"; }

std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::permit: return "permit";
    case Decision::deny: return "deny";
    case Decision::not_applicable: return "not_applicable";
  }
  return "?";
}

std::optional<CombiningAlgorithm> algorithm_from_token(std::string_view tok) {
  for (CombiningAlgorithm a : kAlgorithms) {
    if (token(a) == tok) return a;
  }
  return std::nullopt;
}

std::optional<Decision> decision_from_token(std::string_view tok) {
  for (Decision d : {Decision::permit, Decision::deny, Decision::not_applicable}) {
    if (token(d) == tok) return d;
  }
  return std::nullopt;
}

// ── Condition ────────────────────────────────────────────────────────────────

Condition Condition::pred(std::string name, std::vector<CondTerm> args) {
  Condition c;
  c.kind = Kind::predicate;
  c.predicate = std::move(name);
  c.args = std::move(args);
  return c;
}

Condition Condition::conj(std::vector<Condition> ops) {
  if (ops.size() == 1) return std::move(ops.front());
  Condition c;
  c.kind = Kind::all;
  c.operands = std::move(ops);
  return c;
}

Condition Condition::disj(std::vector<Condition> ops) {
  if (ops.size() == 1) return std::move(ops.front());
  Condition c;
  c.kind = Kind::any;
  c.operands = std::move(ops);
  return c;
}

Condition Condition::negate(Condition op) {
  Condition c;
  c.kind = Kind::negation;
  c.operands.push_back(std::move(op));
  return c;
}

Condition Condition::eq(CondTerm lhs, CondTerm rhs) {
  Condition c;
  c.kind = Kind::equal;
  c.args = {std::move(lhs), std::move(rhs)};
  return c;
}

Condition Condition::ne(CondTerm lhs, CondTerm rhs) {
  Condition c;
  c.kind = Kind::not_equal;
  c.args = {std::move(lhs), std::move(rhs)};
  return c;
}

namespace {

void collect_variables(const Condition& c, std::vector<std::string>& out) {
  for (const CondTerm& t : c.args) {
    if (t.is_variable && std::find(out.begin(), out.end(), t.name) == out.end()) {
      out.push_back(t.name);
    }
  }
  for (const Condition& op : c.operands) collect_variables(op, out);
}

void collect_constants(const Condition& c, std::set<std::string>& out) {
  for (const CondTerm& t : c.args) {
    if (!t.is_variable) out.insert(t.name);
  }
  for (const Condition& op : c.operands) collect_constants(op, out);
}

void collect_bound(const Condition& c, bool negated, std::set<std::string>& out) {
  if (c.kind == Condition::Kind::predicate && !negated) {
    for (const CondTerm& t : c.args) {
      if (t.is_variable) out.insert(t.name);
    }
  }
  for (const Condition& op : c.operands) {
    collect_bound(op, negated || c.kind == Condition::Kind::negation, out);
  }
}

}  // namespace

std::vector<std::string> variables_of(const Condition& c) {
  std::vector<std::string> out;
  collect_variables(c, out);
  return out;
}

std::set<std::string> constants_of(const Condition& c) {
  std::set<std::string> out;
  collect_constants(c, out);
  return out;
}

std::set<std::string> positively_bound(const Condition& c) {
  std::set<std::string> out;
  collect_bound(c, false, out);
  return out;
}

// ── Components ───────────────────────────────────────────────────────────────

const std::string& id_of(const Component& c) {
  return std::visit([](const auto& x) -> const std::string& { return x.id; }, c);
}

const Target& target_of(const Component& c) {
  return std::visit([](const auto& x) -> const Target& { return x.target; }, c);
}

Fact Fact::attribute(Category c, std::string value) {
  return Fact{std::string(to_string(c)), {std::move(value)}};
}

bool Request::contains(const Match& m) const {
  return facts.contains(Fact::attribute(m.category, m.value));
}

std::vector<std::string> Request::values(Category c) const {
  std::vector<std::string> out;
  for (const Fact& f : facts) {
    if (f.predicate == to_string(c) && f.args.size() == 1) out.push_back(f.args.front());
  }
  return out;
}

bool AttributeDomains::declares(const Match& m) const {
  const auto& vs = of(m.category);
  return std::find(vs.begin(), vs.end(), m.value) != vs.end();
}

bool AttributeDomains::has_relation(std::string_view name) const {
  return relations.find(std::string(name)) != relations.end();
}

std::optional<std::size_t> AttributeDomains::arity(std::string_view name) const {
  auto it = relations.find(std::string(name));
  if (it == relations.end() || it->second.empty()) return std::nullopt;
  return it->second.front().size();
}

std::set<std::string> AttributeDomains::constants() const {
  std::set<std::string> out;
  for (const auto& vs : values) out.insert(vs.begin(), vs.end());
  for (const auto& [name, tuples] : relations) {
    for (const auto& t : tuples) out.insert(t.begin(), t.end());
  }
  return out;
}

// ── Names ────────────────────────────────────────────────────────────────────

bool is_identifier(std::string_view name) {
  if (name.empty()) return false;
  auto alpha = [](char ch) {
    return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || ch == '_';
  };
  if (!alpha(name.front())) return false;
  return std::all_of(name.begin(), name.end(),
                     [&](char ch) { return alpha(ch) || (ch >= '0' && ch <= '9'); });
}

bool is_reserved_name(std::string_view name) {
  static const std::set<std::string, std::less<>> fixed = {
      "null",  "cond_true", "not",       "val",       "dec",
      "algo",  "eval",      "comb",      "univ",      "blocked",
      "gap",   "conflict",  "reachable", "not_reachable", "not_one_applicable",
      "component", "subject", "action",  "resource",  "environment",
      "subject_db", "action_db", "resource_db", "environment_db"};
  if (fixed.contains(name)) return true;
  // Fresh ids minted by the program emitter: <prefix>_<digits>...
  for (std::string_view prefix : {"match_", "allof_", "anyof_", "target_", "cond_", "aux_"}) {
    if (name.starts_with(prefix) && name.size() > prefix.size() &&
        name[prefix.size()] >= '0' && name[prefix.size()] <= '9') {
      return true;
    }
  }
  return false;
}

// ── StoreError ───────────────────────────────────────────────────────────────

StoreError::StoreError(Kind kind, std::string component, std::string path,
                       const std::string& message)
    : Error(message), kind_(kind), component_(std::move(component)), path_(std::move(path)) {}

// ── PolicyStore ──────────────────────────────────────────────────────────────

const Component& PolicyStore::at(std::string_view id) const {
  const Component* c = find(id);
  if (c == nullptr) throw Error("unknown component '" + std::string(id) + "'");
  return *c;
}

const Component* PolicyStore::find(std::string_view id) const {
  auto idx = index_of(id);
  return idx ? &components_[*idx] : nullptr;
}

std::optional<std::size_t> PolicyStore::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string PolicyStore::path(std::size_t index) const {
  std::vector<std::string_view> ids;
  for (std::size_t i = index; i != npos; i = parents_[i]) ids.push_back(id_of(components_[i]));
  std::string out;
  for (auto it = ids.rbegin(); it != ids.rend(); ++it) {
    if (!out.empty()) out += '/';
    out += *it;
  }
  return out;
}

std::vector<std::size_t> PolicyStore::rule_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (std::holds_alternative<Rule>(components_[i])) out.push_back(i);
  }
  return out;
}

PolicyStore PolicyStore::without(std::string_view id) const {
  auto victim = index_of(id);
  if (!victim) throw Error("unknown component '" + std::string(id) + "'");
  std::set<std::string> removed;
  std::size_t i = *victim;
  while (true) {
    if (i == 0) throw Error("removing '" + std::string(id) + "' would empty the root");
    removed.insert(id_of(components_[i]));
    std::size_t p = parents_[i];
    bool parent_empties = std::all_of(children_[p].begin(), children_[p].end(), [&](std::size_t c) {
      return removed.contains(id_of(components_[c]));
    });
    if (!parent_empties) break;
    i = p;
  }
  // Drop the removed subtrees and prune the dangling child references.
  std::vector<Component> kept;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    bool gone = false;
    for (std::size_t a = k; a != npos; a = parents_[a]) {
      if (removed.contains(id_of(components_[a]))) {
        gone = true;
        break;
      }
    }
    if (gone) continue;
    Component c = components_[k];
    std::visit(
        [&](auto& x) {
          if constexpr (!std::is_same_v<std::decay_t<decltype(x)>, Rule>) {
            std::erase_if(x.children, [&](const std::string& ch) { return removed.contains(ch); });
          }
        },
        c);
    kept.push_back(std::move(c));
  }
  return build_store(std::move(kept), nullptr, {});
}

// ── build_store ──────────────────────────────────────────────────────────────

namespace {

using Kind = StoreError::Kind;

const std::vector<std::string>* children_of(const Component& c) {
  if (auto* ps = std::get_if<PolicySet>(&c)) return &ps->children;
  if (auto* p = std::get_if<Policy>(&c)) return &p->children;
  return nullptr;
}

std::string_view kind_name(const Component& c) {
  if (std::holds_alternative<PolicySet>(c)) return "policyset";
  if (std::holds_alternative<Policy>(c)) return "policy";
  return "rule";
}

struct Validator {
  const AttributeDomains* domains;
  StoreOptions options;

  void check_target(const Target& t, const std::string& id, const std::string& path) const {
    if (domains == nullptr || !options.require_declared_values) return;
    for (const AnyOf& any : t.anyofs) {
      for (const AllOf& all : any.allofs) {
        for (const Match& m : all.matches) {
          if (!domains->declares(m)) {
            throw StoreError(Kind::undeclared_value, id, path,
                             "component '" + id + "' (" + path + "): value '" + m.value +
                                 "' is not declared for category " +
                                 std::string(to_string(m.category)));
          }
        }
      }
    }
  }

  void check_condition(const Condition& c, const std::string& id, const std::string& path) const {
    std::set<std::string> bound = positively_bound(c);
    std::function<void(const Condition&)> walk = [&](const Condition& n) {
      using CK = Condition::Kind;
      if (n.kind == CK::equal || n.kind == CK::not_equal) {
        for (const CondTerm& t : n.args) {
          if (t.is_variable && !bound.contains(t.name)) {
            throw StoreError(Kind::unsafe_condition, id, path,
                             "component '" + id + "' (" + path + "): variable " + t.name +
                                 " in a comparison does not occur in a positive predicate");
          }
        }
      }
      if (n.kind == CK::predicate && domains != nullptr) {
        if (auto cat = category_from_string(n.predicate)) {
          if (n.args.size() != 1) {
            throw StoreError(Kind::unknown_predicate, id, path,
                             "component '" + id + "' (" + path + "): attribute predicate " +
                                 n.predicate + " takes exactly one argument");
          }
        } else if (!domains->has_relation(n.predicate)) {
          throw StoreError(Kind::unknown_predicate, id, path,
                           "component '" + id + "' (" + path + "): unknown predicate '" +
                               n.predicate + "'");
        } else if (auto ar = domains->arity(n.predicate); ar && *ar != n.args.size()) {
          throw StoreError(Kind::unknown_predicate, id, path,
                           "component '" + id + "' (" + path + "): predicate '" + n.predicate +
                               "' has arity " + std::to_string(*ar));
        }
      }
      for (const Condition& op : n.operands) walk(op);
    };
    walk(c);
  }
};

}  // namespace

PolicyStore build_store(std::vector<Component> components, const AttributeDomains* domains,
                        StoreOptions options) {
  if (components.empty()) throw StoreError(Kind::empty, "", "", "no components given");

  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < components.size(); ++i) {
    const std::string& id = id_of(components[i]);
    if (!is_identifier(id)) {
      throw StoreError(Kind::invalid_identifier, id, "", "invalid identifier '" + id + "'");
    }
    if (is_reserved_name(id)) {
      throw StoreError(Kind::invalid_identifier, id, "",
                       "identifier '" + id + "' is reserved by the program encoding");
    }
    if (!by_id.emplace(id, i).second) {
      throw StoreError(Kind::duplicate_identifier, id, "", "duplicate identifier '" + id + "'");
    }
  }

  constexpr std::size_t none = PolicyStore::npos;
  std::vector<std::size_t> parent(components.size(), none);
  for (std::size_t i = 0; i < components.size(); ++i) {
    const auto* kids = children_of(components[i]);
    if (kids == nullptr) continue;
    const std::string& id = id_of(components[i]);
    if (kids->empty()) {
      throw StoreError(Kind::empty_children, id, "", std::string(kind_name(components[i])) + " '" +
                                                         id + "' has no children");
    }
    const bool is_policy = std::holds_alternative<Policy>(components[i]);
    for (const std::string& child : *kids) {
      auto it = by_id.find(child);
      if (it == by_id.end()) {
        throw StoreError(Kind::dangling_reference, id, "",
                         "'" + id + "' references undefined component '" + child + "'");
      }
      const Component& cc = components[it->second];
      const bool child_is_rule = std::holds_alternative<Rule>(cc);
      if (is_policy != child_is_rule) {
        throw StoreError(Kind::wrong_child_kind, id, "",
                         std::string(kind_name(components[i])) + " '" + id + "' may not contain " +
                             std::string(kind_name(cc)) + " '" + child + "'");
      }
      if (parent[it->second] != none) {
        throw StoreError(Kind::multiple_parents, child, "",
                         "component '" + child + "' is referenced more than once");
      }
      parent[it->second] = i;
    }
  }

  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (parent[i] == none) roots.push_back(i);
  }
  if (roots.empty()) {
    throw StoreError(Kind::reference_cycle, id_of(components.front()), "",
                     "reference cycle: no component is unreferenced");
  }
  if (roots.size() > 1) {
    std::string ids;
    for (std::size_t r : roots) ids += (ids.empty() ? "" : ", ") + id_of(components[r]);
    throw StoreError(Kind::root, id_of(components[roots.front()]), "",
                     "expected exactly one root policyset, found: " + ids);
  }
  if (!std::holds_alternative<PolicySet>(components[roots.front()])) {
    const std::string& id = id_of(components[roots.front()]);
    throw StoreError(Kind::root, id, id, "root component '" + id + "' is not a policyset");
  }

  // Pre-order layout from the root; whatever is left over sits on a cycle.
  PolicyStore store;
  std::vector<bool> placed(components.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> stack = {{roots.front(), none}};
  std::vector<std::size_t> new_index(components.size(), none);
  while (!stack.empty()) {
    auto [old, new_parent] = stack.back();
    stack.pop_back();
    placed[old] = true;
    const std::size_t idx = store.components_.size();
    new_index[old] = idx;
    store.components_.push_back(components[old]);
    store.parents_.push_back(new_parent);
    store.children_.emplace_back();
    store.positions_.push_back(0);
    if (new_parent != none) {
      store.children_[new_parent].push_back(idx);
      store.positions_[idx] = store.children_[new_parent].size();
    }
    if (const auto* kids = children_of(components[old])) {
      for (auto it = kids->rbegin(); it != kids->rend(); ++it) {
        stack.emplace_back(by_id.at(*it), idx);
      }
    }
  }
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (!placed[i]) {
      const std::string& id = id_of(components[i]);
      throw StoreError(Kind::reference_cycle, id, "",
                       "component '" + id + "' is part of a reference cycle");
    }
  }
  for (std::size_t i = 0; i < store.components_.size(); ++i) {
    store.index_.emplace(id_of(store.components_[i]), i);
  }

  Validator v{domains, options};
  for (std::size_t i = 0; i < store.components_.size(); ++i) {
    const Component& c = store.components_[i];
    const std::string& id = id_of(c);
    const std::string path = store.path(i);
    v.check_target(target_of(c), id, path);
    if (const auto* r = std::get_if<Rule>(&c)) v.check_condition(r->condition, id, path);
  }
  return store;
}

}  // namespace xacml
