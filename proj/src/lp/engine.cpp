#include "xacml/lp/engine.hpp"

#include "xacml/model.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>

namespace xacml::lp {

// ── Ground program ───────────────────────────────────────────────────────────

std::optional<AtomId> GroundProgram::find(const Atom& a) const {
  auto it = index_.find(to_string(a));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

AtomId GroundProgram::intern(const Atom& a) {
  auto [it, inserted] = index_.try_emplace(to_string(a), static_cast<AtomId>(atoms_.size()));
  if (inserted) atoms_.push_back(a);
  return it->second;
}

bool GroundProgram::has_constraints() const {
  return std::any_of(rules.begin(), rules.end(), [](const GroundRule& r) { return !r.head; });
}

// ── Grounding ────────────────────────────────────────────────────────────────

namespace {

std::string relation_key(const Atom& a) { return a.predicate + "/" + std::to_string(a.args.size()); }

// Argument pattern: a constant or a variable slot.
struct Pattern {
  std::string predicate;
  std::size_t relation = 0;
  std::vector<Term> constants;
  std::vector<int> slots;  // -1 for constants
};

struct CompiledRule {
  const Rule* source = nullptr;
  int variables = 0;
  std::vector<Pattern> positive;
  std::vector<Pattern> negative;
  std::optional<Pattern> head;
  // Comparisons scheduled after the positive literal at the given depth.
  std::vector<std::vector<std::pair<Comparison, std::array<int, 2>>>> checks;
  std::vector<std::size_t> seen;  // relation sizes at the last grounding
};

class Grounder {
 public:
  Grounder(const LogicProgram& p, const GroundOptions& options) : program_(p), options_(options) {}

  GroundProgram run() {
    for (const Rule& r : program_.rules) {
      if (!r.is_safe()) throw Error("unsafe rule: " + to_string(r));
    }
    for (const Atom& a : options_.externals) {
      if (!a.is_ground()) throw Error("external atom is not ground: " + to_string(a));
      externals_.push_back(add_possible(a));
    }
    for (const Rule& r : program_.rules) {
      if (r.is_fact()) {
        if (!r.head->is_ground()) throw Error("fact is not ground: " + to_string(r));
        const AtomId id = add_possible(*r.head);
        add_ground({id, {}, {}});
      }
    }
    for (const Rule& r : program_.rules) {
      if (r.is_choice()) ground_choice(r);
    }
    for (const Rule& r : program_.rules) {
      if (!r.is_fact() && !r.is_choice()) compiled_.push_back(compile(r));
    }
    bool changed = true;
    while (changed) {
      changed = false;
      for (CompiledRule& c : compiled_) {
        std::vector<std::size_t> sizes;
        for (const Pattern& p : c.positive) sizes.push_back(relation_size(p));
        if (!c.seen.empty() && sizes == c.seen) continue;
        c.seen = sizes;
        const std::size_t before = table_.atom_count() + ground_.size();
        instantiate(c);
        if (table_.atom_count() + ground_.size() != before) changed = true;
      }
    }
    return compact();
  }

 private:
  std::size_t relation_of(const Atom& a) {
    auto [it, inserted] = relation_index_.try_emplace(relation_key(a), relations_.size());
    if (inserted) relations_.emplace_back();
    return it->second;
  }

  std::size_t relation_size(const Pattern& p) const { return relations_[p.relation].size(); }

  AtomId add_possible(const Atom& a) {
    const AtomId id = table_.intern(a);
    if (possible_.size() <= id) possible_.resize(id + 1, 0);
    if (!possible_[id]) {
      possible_[id] = 1;
      relations_[relation_of(a)].push_back(id);
    }
    return id;
  }

  void add_ground(GroundRule g) {
    std::vector<std::int64_t> key;
    key.push_back(g.head ? static_cast<std::int64_t>(*g.head) : -1);
    for (AtomId a : g.positive) key.push_back(a);
    key.push_back(-2);
    for (AtomId a : g.negative) key.push_back(a);
    if (seen_rules_.insert(std::move(key)).second) ground_.push_back(std::move(g));
  }

  Pattern pattern(const Atom& a, std::map<std::string, int>& vars) {
    Pattern p{a.predicate, relation_of(a), {}, {}};
    for (const Term& t : a.args) {
      if (t.is_variable()) {
        auto [it, _] = vars.try_emplace(t.text, static_cast<int>(vars.size()));
        p.constants.push_back({});
        p.slots.push_back(it->second);
      } else {
        p.constants.push_back(t);
        p.slots.push_back(-1);
      }
    }
    return p;
  }

  CompiledRule compile(const Rule& r) {
    CompiledRule c;
    c.source = &r;
    std::map<std::string, int> vars;
    std::vector<std::set<int>> bound_after;
    std::set<int> bound;
    for (const Literal& l : r.body) {
      if (l.kind != Literal::Kind::positive) continue;
      c.positive.push_back(pattern(l.atom, vars));
      for (int s : c.positive.back().slots) {
        if (s >= 0) bound.insert(s);
      }
      bound_after.push_back(bound);
    }
    for (const Literal& l : r.body) {
      if (l.kind == Literal::Kind::negative) c.negative.push_back(pattern(l.atom, vars));
    }
    if (r.head) c.head = pattern(*r.head, vars);
    c.checks.resize(c.positive.size() + 1);
    for (const Literal& l : r.body) {
      if (l.kind != Literal::Kind::comparison) continue;
      auto slot = [&](const Term& t) {
        if (!t.is_variable()) return -1;
        return vars.at(t.text);
      };
      std::array<int, 2> s{slot(l.cmp.lhs), slot(l.cmp.rhs)};
      std::size_t depth = 0;
      if (!c.positive.empty()) {
        depth = c.positive.size();
        for (std::size_t k = 0; k < bound_after.size(); ++k) {
          if ((s[0] < 0 || bound_after[k].contains(s[0])) && (s[1] < 0 || bound_after[k].contains(s[1]))) {
            depth = k + 1;
            break;
          }
        }
      }
      c.checks[depth].push_back({l.cmp, s});
    }
    c.variables = static_cast<int>(vars.size());
    return c;
  }

  static Atom build(const Pattern& p, const std::vector<Term>& binding) {
    Atom a(p.predicate);
    for (std::size_t i = 0; i < p.slots.size(); ++i) {
      a.args.push_back(p.slots[i] < 0 ? p.constants[i] : binding[static_cast<std::size_t>(p.slots[i])]);
    }
    return a;
  }

  static bool checks_pass(const std::vector<std::pair<Comparison, std::array<int, 2>>>& checks,
                          const std::vector<Term>& binding) {
    for (const auto& [cmp, s] : checks) {
      const Term& a = s[0] < 0 ? cmp.lhs : binding[static_cast<std::size_t>(s[0])];
      const Term& b = s[1] < 0 ? cmp.rhs : binding[static_cast<std::size_t>(s[1])];
      if (!cmp.evaluate(a, b)) return false;
    }
    return true;
  }

  void instantiate(const CompiledRule& c) {
    std::vector<Term> binding(static_cast<std::size_t>(c.variables));
    std::vector<char> set(static_cast<std::size_t>(c.variables), 0);
    std::vector<AtomId> matched(c.positive.size());
    if (!checks_pass(c.checks[0], binding)) return;
    join(c, 0, binding, set, matched);
  }

  void join(const CompiledRule& c, std::size_t depth, std::vector<Term>& binding, std::vector<char>& set,
            std::vector<AtomId>& matched) {
    if (depth == c.positive.size()) {
      GroundRule g;
      if (c.head) g.head = add_possible(build(*c.head, binding));
      g.positive = matched;
      for (const Pattern& n : c.negative) g.negative.push_back(table_.intern(build(n, binding)));
      add_ground(std::move(g));
      return;
    }
    const Pattern& p = c.positive[depth];
    const std::size_t count = relations_[p.relation].size();
    for (std::size_t k = 0; k < count; ++k) {
      const AtomId id = relations_[p.relation][k];
      const Atom a = table_.atom(id);
      std::vector<int> newly;
      bool ok = true;
      for (std::size_t i = 0; i < p.slots.size() && ok; ++i) {
        const int s = p.slots[i];
        if (s < 0) {
          ok = a.args[i] == p.constants[i];
        } else if (set[static_cast<std::size_t>(s)]) {
          ok = a.args[i] == binding[static_cast<std::size_t>(s)];
        } else {
          binding[static_cast<std::size_t>(s)] = a.args[i];
          set[static_cast<std::size_t>(s)] = 1;
          newly.push_back(s);
        }
      }
      if (ok && checks_pass(c.checks[depth + 1], binding)) {
        matched[depth] = id;
        join(c, depth + 1, binding, set, matched);
      }
      for (int s : newly) set[static_cast<std::size_t>(s)] = 0;
    }
  }

  void ground_choice(const Rule& r) {
    const ChoiceHead& ch = *r.choice;
    if (!r.body.empty()) throw Error("choice rules with a body are not supported: " + to_string(r));
    for (const Rule& other : program_.rules) {
      if (other.head && !other.is_fact() && other.head->predicate == ch.generator.predicate) {
        throw Error("choice generator '" + ch.generator.predicate + "' must be defined by facts only");
      }
    }
    std::map<std::string, int> vars;
    const Pattern gen = pattern(ch.generator, vars);
    const Pattern elem = pattern(ch.element, vars);
    std::vector<Atom> elements;
    for (const Rule& f : program_.rules) {
      if (!f.is_fact() || f.head->predicate != gen.predicate || f.head->args.size() != gen.slots.size()) continue;
      std::vector<Term> binding(vars.size());
      std::vector<char> set(vars.size(), 0);
      bool ok = true;
      for (std::size_t i = 0; i < gen.slots.size() && ok; ++i) {
        const int s = gen.slots[i];
        const Term& t = f.head->args[i];
        if (s < 0) {
          ok = t == gen.constants[i];
        } else if (set[static_cast<std::size_t>(s)]) {
          ok = t == binding[static_cast<std::size_t>(s)];
        } else {
          binding[static_cast<std::size_t>(s)] = t;
          set[static_cast<std::size_t>(s)] = 1;
        }
      }
      if (!ok) continue;
      Atom e = build(elem, binding);
      if (std::find(elements.begin(), elements.end(), e) == elements.end()) elements.push_back(std::move(e));
    }
    std::sort(elements.begin(), elements.end(), [](const Atom& a, const Atom& b) {
      return std::lexicographical_compare(a.args.begin(), a.args.end(), b.args.begin(), b.args.end(),
                                          [](const Term& x, const Term& y) { return compare(x, y) < 0; });
    });
    ChoiceGroup group{ch.lower, ch.upper, {}};
    for (const Atom& e : elements) group.elements.push_back(add_possible(e));
    choices_.push_back(std::move(group));
  }

  GroundProgram compact() {
    GroundProgram out;
    std::vector<AtomId> remap(table_.atom_count(), std::numeric_limits<AtomId>::max());
    for (AtomId id = 0; id < table_.atom_count(); ++id) {
      if (id < possible_.size() && possible_[id]) remap[id] = out.intern(table_.atom(id));
    }
    std::set<std::vector<std::int64_t>> seen;
    for (const GroundRule& g : ground_) {
      GroundRule r;
      if (g.head) r.head = remap[*g.head];
      for (AtomId a : g.positive) r.positive.push_back(remap[a]);
      for (AtomId a : g.negative) {
        if (remap[a] != std::numeric_limits<AtomId>::max()) r.negative.push_back(remap[a]);
      }
      std::vector<std::int64_t> key{r.head ? static_cast<std::int64_t>(*r.head) : -1};
      key.insert(key.end(), r.positive.begin(), r.positive.end());
      key.push_back(-2);
      key.insert(key.end(), r.negative.begin(), r.negative.end());
      if (seen.insert(std::move(key)).second) out.rules.push_back(std::move(r));
    }
    for (const ChoiceGroup& c : choices_) {
      ChoiceGroup g{c.lower, c.upper, {}};
      for (AtomId a : c.elements) g.elements.push_back(remap[a]);
      out.choices.push_back(std::move(g));
    }
    for (AtomId a : externals_) out.externals.push_back(remap[a]);
    return out;
  }

  const LogicProgram& program_;
  const GroundOptions& options_;
  GroundProgram table_;  // scratch atom table, including impossible atoms
  std::vector<char> possible_;
  std::unordered_map<std::string, std::size_t> relation_index_;
  std::vector<std::vector<AtomId>> relations_;
  std::vector<GroundRule> ground_;
  std::set<std::vector<std::int64_t>> seen_rules_;
  std::vector<CompiledRule> compiled_;
  std::vector<ChoiceGroup> choices_;
  std::vector<AtomId> externals_;
};

}  // namespace

GroundProgram ground(const LogicProgram& p, const GroundOptions& options) {
  return Grounder(p, options).run();
}

// ── Acyclicity ───────────────────────────────────────────────────────────────

AcyclicityReport check_acyclic(const GroundProgram& g) {
  const std::size_t n = g.atom_count();
  std::vector<std::vector<AtomId>> deps(n);
  for (const GroundRule& r : g.rules) {
    if (!r.head) continue;
    auto& d = deps[*r.head];
    d.insert(d.end(), r.positive.begin(), r.positive.end());
    d.insert(d.end(), r.negative.begin(), r.negative.end());
  }
  AcyclicityReport report;
  report.level.assign(n, 0);
  std::vector<char> state(n, 0);  // 0 new, 1 on stack, 2 done
  std::vector<std::pair<AtomId, std::size_t>> stack;
  for (AtomId start = 0; start < n; ++start) {
    if (state[start]) continue;
    stack.push_back({start, 0});
    state[start] = 1;
    while (!stack.empty()) {
      auto& [a, next] = stack.back();
      if (next < deps[a].size()) {
        const AtomId b = deps[a][next++];
        if (state[b] == 1) {
          auto from = std::find_if(stack.begin(), stack.end(), [&](const auto& f) { return f.first == b; });
          for (auto it = from; it != stack.end(); ++it) report.cycle.push_back(it->first);
          report.level.clear();
          return report;
        }
        if (state[b] == 0) {
          state[b] = 1;
          stack.push_back({b, 0});
        }
        continue;
      }
      int level = 1;
      for (AtomId b : deps[a]) level = std::max(level, report.level[b] + 1);
      report.level[a] = level;
      state[a] = 2;
      stack.pop_back();
    }
  }
  report.acyclic = true;
  return report;
}

// ── Solving ──────────────────────────────────────────────────────────────────

bool AnswerSet::contains(AtomId id) const { return std::binary_search(atoms.begin(), atoms.end(), id); }

std::vector<std::string> to_strings(const GroundProgram& g, const AnswerSet& s) {
  std::vector<std::string> out;
  for (AtomId a : s.atoms) out.push_back(to_string(g.atom(a)));
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

std::string describe_cycle(const GroundProgram& g, const std::vector<AtomId>& cycle) {
  std::string out;
  for (AtomId a : cycle) {
    if (!out.empty()) out += ", ";
    out += to_string(g.atom(a));
  }
  return out;
}

}  // namespace

Solver::Solver(const GroundProgram& g) : g_(&g), defining_(g.atom_count()) {
  AcyclicityReport report = check_acyclic(g);
  if (!report.acyclic) throw Error("program is not acyclic; cycle through " + describe_cycle(g, report.cycle));
  order_.resize(g.atom_count());
  for (AtomId a = 0; a < g.atom_count(); ++a) order_[a] = a;
  std::stable_sort(order_.begin(), order_.end(),
                   [&](AtomId a, AtomId b) { return report.level[a] < report.level[b]; });
  for (std::size_t k = 0; k < g.rules.size(); ++k) {
    if (g.rules[k].head) defining_[*g.rules[k].head].push_back(k);
  }
}

std::vector<char> Solver::truth(std::span<const AtomId> assumed) const {
  std::vector<char> t(g_->atom_count(), 0);
  for (AtomId a : assumed) t.at(a) = 1;
  for (AtomId a : order_) {
    if (t[a]) continue;
    for (std::size_t k : defining_[a]) {
      const GroundRule& r = g_->rules[k];
      const bool fires = std::all_of(r.positive.begin(), r.positive.end(), [&](AtomId b) { return t[b]; }) &&
                         std::none_of(r.negative.begin(), r.negative.end(), [&](AtomId b) { return t[b]; });
      if (fires) {
        t[a] = 1;
        break;
      }
    }
  }
  return t;
}

AnswerSet Solver::solve(std::span<const AtomId> assumed) const {
  const std::vector<char> t = truth(assumed);
  AnswerSet s;
  for (AtomId a = 0; a < t.size(); ++a) {
    if (t[a]) s.atoms.push_back(a);
  }
  return s;
}

bool Solver::violates_constraint(const std::vector<char>& t) const {
  for (const GroundRule& r : g_->rules) {
    if (r.head) continue;
    const bool body = std::all_of(r.positive.begin(), r.positive.end(), [&](AtomId b) { return t[b]; }) &&
                      std::none_of(r.negative.begin(), r.negative.end(), [&](AtomId b) { return t[b]; });
    if (body) return true;
  }
  return false;
}

AnswerSet solve_unique(const GroundProgram& g) {
  if (!g.choices.empty()) throw Error("solve_unique: program has choice rules");
  if (g.has_constraints()) throw Error("solve_unique: program has constraints");
  return Solver(g).solve();
}

std::size_t selection_count(const GroundProgram& g) {
  std::size_t total = 1;
  for (const ChoiceGroup& c : g.choices) {
    const std::size_t k = c.elements.size();
    if (k == 0) return 0;
    if (total > std::numeric_limits<std::size_t>::max() / k) return std::numeric_limits<std::size_t>::max();
    total *= k;
  }
  return total;
}

std::vector<AnswerSet> enumerate_models(const GroundProgram& g, std::size_t limit, Execution exec) {
  for (const ChoiceGroup& c : g.choices) {
    if (c.lower != 1 || c.upper != 1) throw Error("only 1 { ... } 1 choices can be enumerated");
  }
  const Solver solver(g);
  const std::size_t total = selection_count(g);
  std::vector<AnswerSet> models;
  if (total == 0 || limit == 0) return models;

  auto model_at = [&](std::size_t index) -> std::optional<AnswerSet> {
    std::vector<AtomId> selected(g.choices.size());
    for (std::size_t k = g.choices.size(); k-- > 0;) {
      const auto& elems = g.choices[k].elements;
      selected[k] = elems[index % elems.size()];
      index /= elems.size();
    }
    const std::vector<char> t = solver.truth(selected);
    if (solver.violates_constraint(t)) return std::nullopt;
    for (const ChoiceGroup& c : g.choices) {
      const auto count = std::count_if(c.elements.begin(), c.elements.end(), [&](AtomId a) { return t[a]; });
      if (count < c.lower || count > c.upper) return std::nullopt;
    }
    AnswerSet s;
    for (AtomId a = 0; a < t.size(); ++a) {
      if (t[a]) s.atoms.push_back(a);
    }
    return s;
  };

  const std::size_t block = exec == Execution::serial ? 1 : static_cast<std::size_t>(64 * worker_count());
  for (std::size_t start = 0; start < total && models.size() < limit;) {
    const std::size_t n = std::min(block, total - start);
    std::vector<std::optional<AnswerSet>> found(n);
    for_each_index(n, exec, [&](std::size_t i) { found[i] = model_at(start + i); });
    for (auto& m : found) {
      if (m && models.size() < limit) models.push_back(std::move(*m));
    }
    start += n;
  }
  return models;
}

}  // namespace xacml::lp
