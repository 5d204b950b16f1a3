#include "xacml/analyzer.hpp"

#include "xacml/lp/engine.hpp"
#include "xacml/parser.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <limits>

namespace xacml {

std::string_view to_string(Engine e) { return e == Engine::native ? "native" : "lp"; }

std::optional<Engine> engine_from_string(std::string_view name) {
  if (name == "native") return Engine::native;
  if (name == "lp") return Engine::lp;
  return std::nullopt;
}

BudgetExceeded::BudgetExceeded(std::size_t space, std::size_t budget)
    : Error("request space has " +
            (space == std::numeric_limits<std::size_t>::max() ? std::string("more than 2^64")
                                                               : std::to_string(space)) +
            " requests, over the budget of " + std::to_string(budget)),
      space_(space),
      budget_(budget) {}

// ── Request space ────────────────────────────────────────────────────────────

std::vector<std::string> sorted_tokens(std::vector<std::string> tokens) {
  std::sort(tokens.begin(), tokens.end(), [](const std::string& a, const std::string& b) {
    return lp::compare(lp::Term::constant(a), lp::Term::constant(b)) < 0;
  });
  return tokens;
}

RequestSpace::RequestSpace(const AttributeDomains& dom) {
  for (Category c : kCategories) {
    if (dom.of(c).empty()) continue;
    categories_.push_back(c);
    values_.push_back(sorted_tokens(dom.of(c)));
    const std::size_t k = values_.back().size();
    if (size_ > std::numeric_limits<std::size_t>::max() / k) {
      size_ = std::numeric_limits<std::size_t>::max();
    } else if (size_ != std::numeric_limits<std::size_t>::max()) {
      size_ *= k;
    }
  }
}

Request RequestSpace::at(std::size_t index) const {
  Request q;
  for (std::size_t k = categories_.size(); k-- > 0;) {
    q.add(Fact::attribute(categories_[k], values_[k][index % values_[k].size()]));
    index /= values_[k].size();
  }
  return q;
}

std::optional<std::size_t> RequestSpace::index_of(const Request& q) const {
  std::size_t index = 0;
  std::size_t facts = 0;
  for (std::size_t k = 0; k < categories_.size(); ++k) {
    const auto vs = q.values(categories_[k]);
    if (vs.size() != 1) return std::nullopt;
    auto it = std::find(values_[k].begin(), values_[k].end(), vs.front());
    if (it == values_[k].end()) return std::nullopt;
    index = index * values_[k].size() + static_cast<std::size_t>(it - values_[k].begin());
    ++facts;
  }
  if (facts != q.facts.size()) return std::nullopt;
  return index;
}

Request saturated_request(const AttributeDomains& dom) {
  Request q;
  for (Category c : kCategories) {
    for (const std::string& v : dom.of(c)) q.add(Fact::attribute(c, v));
  }
  return q;
}

// ── Shared helpers ───────────────────────────────────────────────────────────

namespace {

using Clock = std::chrono::steady_clock;

void check_budget(const RequestSpace& space, const AnalysisOptions& options) {
  if (space.size() > options.budget) throw BudgetExceeded(space.size(), options.budget);
}

AnalysisReport start_report(std::string_view task, const PolicyStore& store, const AttributeDomains& dom,
                            const AnalysisOptions& options) {
  AnalysisReport r;
  r.task = std::string(task);
  r.engine = options.engine;
  r.store_hash = store_fingerprint(store);
  for (Category c : kCategories) r.domain_sizes[index_of(c)] = dom.of(c).size();
  return r;
}

void finish_report(AnalysisReport& r, Clock::time_point started, std::size_t max_witnesses) {
  r.total = r.witnesses.size();
  if (r.witnesses.size() > max_witnesses) r.witnesses.resize(max_witnesses);
  r.truncated = r.witnesses.size() < r.total;
  r.elapsed_ms = std::chrono::duration<double, std::milli>(Clock::now() - started).count();
}

void require_referenced_domains(const PolicyStore& store, const AttributeDomains& dom) {
  for (Category c : lp::referenced_categories(store)) {
    if (dom.of(c).empty()) {
      throw Error("cannot generate requests: the store refers to category '" + std::string(to_string(c)) +
                  "' but its domain is empty");
    }
  }
}

// Solved analysis program together with the attribute request of each model.
struct LpModels {
  lp::GroundProgram program;
  std::vector<lp::AnswerSet> models;
};

LpModels solve_task(lp::Task task, const PolicyStore& store, const AttributeDomains& dom,
                    const AnalysisOptions& options) {
  LpModels out;
  out.program = lp::ground(lp::emit_analysis(task, store, dom, options.emit));
  out.models = lp::enumerate_models(out.program, std::numeric_limits<std::size_t>::max(), options.execution);
  return out;
}

Request request_of(const lp::GroundProgram& g, const lp::AnswerSet& model) {
  Request q;
  for (const lp::ChoiceGroup& group : g.choices) {
    for (lp::AtomId a : group.elements) {
      if (!model.contains(a)) continue;
      const lp::Atom& atom = g.atom(a);
      q.add(Fact{atom.predicate, {atom.args.at(0).token()}});
    }
  }
  return q;
}

bool holds(const lp::GroundProgram& g, const lp::AnswerSet& model, const lp::Atom& a) {
  auto id = g.find(a);
  return id && model.contains(*id);
}

std::optional<Decision> lp_value(const lp::GroundProgram& g, const lp::AnswerSet& model, const std::string& id) {
  for (Decision d : {Decision::permit, Decision::deny, Decision::not_applicable}) {
    if (holds(g, model, lp::val_atom(id, token(d)))) return d;
  }
  return std::nullopt;
}

}  // namespace

// ── Completeness ─────────────────────────────────────────────────────────────

AnalysisReport check_completeness(const PolicyStore& store, const AttributeDomains& dom,
                                  const AnalysisOptions& options) {
  const auto started = Clock::now();
  const RequestSpace space(dom);
  check_budget(space, options);
  require_referenced_domains(store, dom);
  AnalysisReport report = start_report("gap", store, dom, options);
  const std::string& root = store.root().id;

  if (options.engine == Engine::native) {
    const Evaluator eval(store, dom);
    std::vector<char> gap(space.size(), 0);
    for_each_index(space.size(), options.execution,
                   [&](std::size_t i) { gap[i] = eval.evaluate(space.at(i)) == Decision::not_applicable; });
    for (std::size_t i = 0; i < gap.size(); ++i) {
      if (gap[i]) {
        report.witnesses.push_back(
            {"gap", space.at(i), {root}, {{root, Decision::not_applicable}}, Engine::native, "generate_one"});
      }
    }
  } else {
    const LpModels lp = solve_task(lp::Task::gap, store, dom, options);
    std::vector<std::pair<std::size_t, Witness>> found;
    for (const lp::AnswerSet& m : lp.models) {
      Request q = request_of(lp.program, m);
      const std::size_t index = space.index_of(q).value_or(std::numeric_limits<std::size_t>::max());
      std::map<std::string, Decision> decisions;
      if (auto v = lp_value(lp.program, m, root)) decisions[root] = *v;
      found.push_back({index, {"gap", std::move(q), {root}, std::move(decisions), Engine::lp, "generate_one"}});
    }
    std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [_, w] : found) report.witnesses.push_back(std::move(w));
  }
  finish_report(report, started, options.max_witnesses);
  return report;
}

// ── Conflicts ────────────────────────────────────────────────────────────────

AnalysisReport check_conflicts(const PolicyStore& store, const AttributeDomains& dom,
                               const AnalysisOptions& options) {
  const auto started = Clock::now();
  const RequestSpace space(dom);
  check_budget(space, options);
  require_referenced_domains(store, dom);
  AnalysisReport report = start_report("conflict", store, dom, options);
  const std::vector<std::size_t> rules = store.rule_indices();

  // Pairs in store order: permitting rule first, then denying rule.
  auto pairs_of = [&](auto&& decision_of) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t a : rules) {
      if (decision_of(a) != Decision::permit) continue;
      for (std::size_t b : rules) {
        if (a != b && decision_of(b) == Decision::deny) out.push_back({a, b});
      }
    }
    return out;
  };
  auto witness = [&](const Request& q, std::size_t a, std::size_t b, Engine engine) {
    const std::string& ra = id_of(store.at(a));
    const std::string& rb = id_of(store.at(b));
    return Witness{"conflict", q, {ra, rb}, {{ra, Decision::permit}, {rb, Decision::deny}}, engine,
                   "generate_one"};
  };

  if (options.engine == Engine::native) {
    const Evaluator eval(store, dom);
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> found(space.size());
    for_each_index(space.size(), options.execution, [&](std::size_t i) {
      const std::vector<Decision> all = eval.evaluate_all(space.at(i));
      found[i] = pairs_of([&](std::size_t k) { return all[k]; });
    });
    for (std::size_t i = 0; i < found.size(); ++i) {
      if (found[i].empty()) continue;
      const Request q = space.at(i);
      for (auto [a, b] : found[i]) report.witnesses.push_back(witness(q, a, b, Engine::native));
    }
  } else {
    const LpModels lp = solve_task(lp::Task::conflict, store, dom, options);
    std::vector<std::pair<std::size_t, std::vector<Witness>>> found;
    for (const lp::AnswerSet& m : lp.models) {
      const Request q = request_of(lp.program, m);
      std::vector<Witness> ws;
      auto decision_of = [&](std::size_t k) {
        return lp_value(lp.program, m, id_of(store.at(k))).value_or(Decision::not_applicable);
      };
      for (auto [a, b] : pairs_of(decision_of)) ws.push_back(witness(q, a, b, Engine::lp));
      found.push_back({space.index_of(q).value_or(std::numeric_limits<std::size_t>::max()), std::move(ws)});
    }
    std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [_, ws] : found) {
      for (Witness& w : ws) report.witnesses.push_back(std::move(w));
    }
  }
  finish_report(report, started, options.max_witnesses);
  return report;
}

// ── Reachability ─────────────────────────────────────────────────────────────

namespace {

CombiningAlgorithm algorithm_of(const Component& c) {
  return std::holds_alternative<Policy>(c) ? std::get<Policy>(c).algorithm : std::get<PolicySet>(c).algorithm;
}

bool earlier_applicable(const PolicyStore& store, std::size_t rule, const std::vector<Decision>& d) {
  for (std::size_t sibling : store.children(store.parent(rule))) {
    if (sibling == rule) return false;
    if (d[sibling] != Decision::not_applicable) return true;
  }
  return false;
}

// The five clauses as the saturated program states them.
bool saturated_shadowed(const PolicyStore& store, std::size_t rule, const std::vector<Decision>& d) {
  const std::size_t parent = store.parent(rule);
  const Decision r = d[rule];
  const Decision p = d[parent];
  if (r == Decision::not_applicable) return true;
  if (p == Decision::permit && r == Decision::deny) return true;
  if (p == Decision::deny && r == Decision::permit) return true;
  if (p == Decision::not_applicable) return true;
  return algorithm_of(store.at(parent)) == CombiningAlgorithm::first_applicable &&
         earlier_applicable(store, rule, d);
}

// Removal-safe reading for a single request.
bool request_shadowed(const PolicyStore& store, std::size_t rule, const std::vector<Decision>& d,
                      const std::vector<MatchValue>& targets) {
  const std::size_t parent = store.parent(rule);
  const Decision r = d[rule];
  const Decision p = d[parent];
  if (r == Decision::not_applicable) return true;
  if (p == Decision::permit && r == Decision::deny) return true;
  if (p == Decision::deny && r == Decision::permit) return true;
  if (targets[parent] == MatchValue::no_match) return true;
  switch (algorithm_of(store.at(parent))) {
    case CombiningAlgorithm::only_one_applicable: {
      std::size_t others = 0;
      for (std::size_t sibling : store.children(parent)) {
        if (sibling != rule && d[sibling] != Decision::not_applicable) ++others;
      }
      return others >= 2;
    }
    case CombiningAlgorithm::first_applicable:
      return earlier_applicable(store, rule, d);
    default:
      return false;
  }
}

}  // namespace

AnalysisReport check_reachability(const PolicyStore& store, const AttributeDomains& dom,
                                  const AnalysisOptions& options) {
  const auto started = Clock::now();
  const RequestSpace space(dom);
  check_budget(space, options);
  AnalysisReport report = start_report("reachability", store, dom, options);
  const std::vector<std::size_t> rules = store.rule_indices();

  if (options.engine == Engine::native) {
    const Evaluator eval(store, dom);
    const std::vector<Decision> sat = eval.evaluate_all(saturated_request(dom));
    std::vector<std::atomic<bool>> escapes(rules.size());
    for (auto& e : escapes) e.store(false);
    for_each_index(space.size(), options.execution, [&](std::size_t i) {
      const Request q = space.at(i);
      const std::vector<Decision> d = eval.evaluate_all(q);
      const std::vector<MatchValue> t = eval.targets(q);
      for (std::size_t k = 0; k < rules.size(); ++k) {
        if (!escapes[k].load(std::memory_order_relaxed) && !request_shadowed(store, rules[k], d, t)) {
          escapes[k].store(true, std::memory_order_relaxed);
        }
      }
    });
    for (std::size_t k = 0; k < rules.size(); ++k) {
      const std::string& id = id_of(store.at(rules[k]));
      const bool per_request = !escapes[k].load();
      report.classification.push_back({id, saturated_shadowed(store, rules[k], sat), per_request});
      if (per_request) report.witnesses.push_back({"unreachable", std::nullopt, {id}, {}, Engine::native, "per_request"});
    }
  } else {
    const LpModels lp = solve_task(lp::Task::reachability, store, dom, options);
    for (std::size_t k : rules) {
      const std::string& id = id_of(store.at(k));
      const bool flagged =
          !lp.models.empty() && holds(lp.program, lp.models.front(),
                                      lp::Atom("not_reachable", {lp::Term::constant(id)}));
      report.classification.push_back({id, flagged, std::nullopt});
      if (flagged) {
        std::map<std::string, Decision> decisions;
        if (auto v = lp_value(lp.program, lp.models.front(), id)) decisions[id] = *v;
        report.witnesses.push_back({"unreachable", std::nullopt, {id}, std::move(decisions), Engine::lp, "saturated"});
      }
    }
  }
  finish_report(report, started, options.max_witnesses);
  return report;
}

std::vector<std::string> flagged_rules(const AnalysisReport& report) {
  std::vector<std::string> out;
  for (const Witness& w : report.witnesses) {
    if (w.kind == "unreachable") out.insert(out.end(), w.components.begin(), w.components.end());
  }
  return out;
}

// ── Differential check ───────────────────────────────────────────────────────

DifferentialResult differential_check(const PolicyStore& store, const AttributeDomains& dom,
                                      const AnalysisOptions& options) {
  const RequestSpace space(dom);
  check_budget(space, options);
  DifferentialResult result;
  result.requests = space.size();

  lp::GroundOptions ground_options;
  for (Category c : kCategories) {
    for (const std::string& v : dom.of(c)) {
      ground_options.externals.push_back(lp::Atom(std::string(to_string(c)), {lp::Term::constant(v)}));
    }
  }
  const lp::GroundProgram g = lp::ground(lp::transform_store(store, dom, options.emit), ground_options);
  std::optional<lp::Solver> solver;
  try {
    solver.emplace(g);
  } catch (const Error& e) {
    result.error = e.what();
    return result;
  }

  // val(X, V) atom ids per component, in p/d/na order.
  constexpr std::array<Decision, 3> kDecisions = {Decision::permit, Decision::deny, Decision::not_applicable};
  std::vector<std::array<std::optional<lp::AtomId>, 3>> vals(store.size());
  for (std::size_t k = 0; k < store.size(); ++k) {
    for (std::size_t v = 0; v < 3; ++v) vals[k][v] = g.find(lp::val_atom(id_of(store.at(k)), token(kDecisions[v])));
  }
  const Evaluator eval(store, dom);

  auto compare_at = [&](std::size_t i) -> std::optional<Divergence> {
    const Request q = space.at(i);
    std::vector<lp::AtomId> assumed;
    for (const Fact& f : q.facts) {
      lp::Atom a(f.predicate);
      for (const std::string& v : f.args) a.args.push_back(lp::Term::constant(v));
      if (auto id = g.find(a)) assumed.push_back(*id);
    }
    const std::vector<char> truth = solver->truth(assumed);
    const std::vector<Decision> native = eval.evaluate_all(q);
    for (std::size_t k = 0; k < store.size(); ++k) {
      std::vector<Decision> found;
      for (std::size_t v = 0; v < 3; ++v) {
        if (vals[k][v] && truth[*vals[k][v]]) found.push_back(kDecisions[v]);
      }
      if (found.size() != 1 || found.front() != native[k]) {
        return Divergence{q, id_of(store.at(k)), native[k], std::move(found)};
      }
    }
    return std::nullopt;
  };

  std::vector<char> ok(space.size(), 1);
  for_each_index(space.size(), options.execution, [&](std::size_t i) { ok[i] = !compare_at(i).has_value(); });
  auto bad = std::find(ok.begin(), ok.end(), 0);
  if (bad != ok.end()) {
    result.first = compare_at(static_cast<std::size_t>(bad - ok.begin()));
    return result;
  }
  result.pass = true;
  return result;
}

std::string describe(const Divergence& d) {
  std::string lp;
  for (Decision v : d.lp) lp += (lp.empty() ? "" : ",") + std::string(token(v));
  return "request " + serialize(d.request) + ": component " + d.component + " is " +
         std::string(token(d.native)) + " natively but {" + lp + "} in the answer set";
}

// ── Reports ──────────────────────────────────────────────────────────────────

std::string store_fingerprint(const PolicyStore& store) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : serialize(store)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

nlohmann::json request_json(const Request& q) {
  nlohmann::json out = nlohmann::json::object();
  for (Category c : kCategories) {
    auto vs = q.values(c);
    if (!vs.empty()) out[std::string(to_string(c))] = vs;
  }
  nlohmann::json external = nlohmann::json::array();
  for (const Fact& f : q.facts) {
    if (category_from_string(f.predicate)) continue;
    nlohmann::json args = f.args;
    external.push_back({{"predicate", f.predicate}, {"args", args}});
  }
  if (!external.empty()) out["external"] = external;
  return out;
}

std::string_view reach_word(bool unreachable) { return unreachable ? "not_reachable" : "reachable"; }

}  // namespace

std::string to_json(const AnalysisReport& r, bool timing) {
  nlohmann::ordered_json doc;
  doc["version"] = 1;
  doc["task"] = r.task;
  doc["engine"] = to_string(r.engine);
  doc["store_hash"] = r.store_hash;
  nlohmann::ordered_json sizes;
  for (Category c : kCategories) sizes[std::string(to_string(c))] = r.domain_sizes[index_of(c)];
  doc["domain_sizes"] = sizes;
  nlohmann::ordered_json ws = nlohmann::ordered_json::array();
  for (const Witness& w : r.witnesses) {
    nlohmann::ordered_json j;
    j["kind"] = w.kind;
    j["request"] = w.request ? nlohmann::ordered_json(request_json(*w.request)) : nlohmann::ordered_json();
    j["components"] = w.components;
    nlohmann::ordered_json decisions = nlohmann::ordered_json::object();
    for (const auto& [id, d] : w.decisions) decisions[id] = to_string(d);
    j["decisions"] = decisions;
    j["engine"] = to_string(w.engine);
    j["provenance"] = w.provenance;
    ws.push_back(std::move(j));
  }
  doc["witnesses"] = ws;
  doc["total"] = r.total;
  doc["truncated"] = r.truncated;
  doc["elapsed_ms"] = timing ? r.elapsed_ms : 0.0;
  if (r.task == "reachability") {
    nlohmann::ordered_json cls = nlohmann::ordered_json::array();
    for (const RuleReachability& c : r.classification) {
      nlohmann::ordered_json j;
      j["rule"] = c.rule;
      j["saturated"] = reach_word(c.saturated_unreachable);
      if (c.per_request_unreachable) j["per_request"] = reach_word(*c.per_request_unreachable);
      cls.push_back(std::move(j));
    }
    doc["classification"] = cls;
  }
  return doc.dump(2) + "\n";
}

std::string to_text(const AnalysisReport& r) {
  std::string out = r.task + " (" + std::string(to_string(r.engine)) + "): " + std::to_string(r.total) +
                    (r.total == 1 ? " finding" : " findings");
  if (r.truncated) out += ", showing " + std::to_string(r.witnesses.size());
  out += "\n";
  for (const Witness& w : r.witnesses) {
    out += "  " + w.kind;
    if (w.request) out += " " + serialize(*w.request);
    for (const std::string& c : w.components) {
      out += " " + c;
      if (auto it = w.decisions.find(c); it != w.decisions.end()) out += "=" + std::string(token(it->second));
    }
    out += " [" + w.provenance + "]\n";
  }
  if (r.task == "reachability") {
    for (const RuleReachability& c : r.classification) {
      out += "  rule " + c.rule + ": saturated " + std::string(reach_word(c.saturated_unreachable));
      if (c.per_request_unreachable) out += ", per request " + std::string(reach_word(*c.per_request_unreachable));
      out += "\n";
    }
  }
  return out;
}

}  // namespace xacml
