#include "generators.hpp"
#include "xacml/analyzer.hpp"
#include "xacml/evaluator.hpp"
#include "xacml/lp/emitter.hpp"
#include "xacml/lp/engine.hpp"
#include "xacml/parser.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

using namespace xacml;

namespace {

constexpr std::size_t kAll = std::numeric_limits<std::size_t>::max();
constexpr Decision P = Decision::permit;
constexpr Decision D = Decision::deny;
constexpr Decision NA = Decision::not_applicable;

struct Outcome {
  enum class Status { pass, fail, skip } status = Status::pass;
  std::string detail;
};

Outcome fail(std::string why) { return {Outcome::Status::fail, std::move(why)}; }

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fs", s);
  return buf;
}

std::string read_data(const std::string& name) {
  std::ifstream in(std::string(XACML_TEST_DATA) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Fixture {
  AttributeDomains dom;
  PolicyStore store;
};

Fixture fixture(const std::string& policies, const std::string& domains = "ward.dom") {
  AttributeDomains dom = parse_domains(read_data(domains));
  PolicyStore store = load_store(read_data(policies), dom, {}, policies);
  return {std::move(dom), std::move(store)};
}

AnalysisOptions all_witnesses(Engine e = Engine::native) {
  AnalysisOptions o;
  o.engine = e;
  o.max_witnesses = kAll;
  return o;
}

std::vector<std::pair<std::optional<Request>, std::vector<std::string>>> witness_keys(const AnalysisReport& r) {
  std::vector<std::pair<std::optional<Request>, std::vector<std::string>>> out;
  for (const Witness& w : r.witnesses) out.push_back({w.request, w.components});
  return out;
}

std::size_t lp_model_count(lp::Task task, const Fixture& f) {
  lp::GroundProgram g = lp::ground(lp::emit_analysis(task, f.store, f.dom));
  return lp::enumerate_models(g, kAll).size();
}

// ── 1 ────────────────────────────────────────────────────────────────────────

Decision swap_pd(Decision d) { return d == P ? D : d == D ? P : NA; }

Outcome combining_laws() {
  const auto started = Clock::now();
  std::size_t vectors = 0;
  std::vector<std::vector<Decision>> layer = {{}};
  for (int k = 1; k <= 6; ++k) {
    std::vector<std::vector<Decision>> next;
    for (const auto& v : layer) {
      for (Decision d : {P, D, NA}) {
        auto w = v;
        w.push_back(d);
        next.push_back(std::move(w));
      }
    }
    layer = std::move(next);
    for (const auto& vs : layer) {
      ++vectors;
      const bool any_p = std::count(vs.begin(), vs.end(), P) > 0;
      const bool any_d = std::count(vs.begin(), vs.end(), D) > 0;
      const auto applicable = std::count_if(vs.begin(), vs.end(), [](Decision d) { return d != NA; });
      const auto first = std::find_if(vs.begin(), vs.end(), [](Decision d) { return d != NA; });

      const Decision po = any_p ? P : any_d ? D : NA;
      const Decision dn = any_d ? D : any_p ? P : NA;
      const Decision fa = first == vs.end() ? NA : *first;
      const Decision ooa = applicable == 1 ? *first : NA;
      if (combine(CombiningAlgorithm::permit_overrides, vs) != po) return fail("po disagrees");
      if (combine(CombiningAlgorithm::deny_overrides, vs) != dn) return fail("do disagrees");
      if (combine(CombiningAlgorithm::first_applicable, vs) != fa) return fail("fa disagrees");
      if (combine(CombiningAlgorithm::only_one_applicable, vs) != ooa) return fail("ooa disagrees");

      std::vector<Decision> swapped;
      for (Decision d : vs) swapped.push_back(swap_pd(d));
      if (combine(CombiningAlgorithm::deny_overrides, vs) !=
          swap_pd(combine(CombiningAlgorithm::permit_overrides, swapped))) {
        return fail("do is not the dual of po");
      }
      if (k < 6) {
        auto longer = vs;
        longer.push_back(NA);
        for (CombiningAlgorithm a : kAlgorithms) {
          if (combine(a, longer) != combine(a, vs)) return fail("trailing na changed a decision");
        }
      }
    }
  }
  const double t = seconds_since(started);
  if (vectors != 1092) return fail("expected 1092 vectors, saw " + std::to_string(vectors));
  if (t >= 1.0) return fail("took " + fmt_seconds(t));
  return {Outcome::Status::pass, "1092 vectors x 4 algorithms in " + fmt_seconds(t)};
}

// ── 2, 3 ─────────────────────────────────────────────────────────────────────

std::vector<testing::GeneratedCase>& random_stores() {
  static std::vector<testing::GeneratedCase> cases = [] {
    testing::Rng rng(20240601);
    std::vector<testing::GeneratedCase> out;
    for (int i = 0; i < 200; ++i) out.push_back(testing::random_case(rng));
    return out;
  }();
  return cases;
}

// Containers from the root down to the deepest policy.
std::size_t container_depth(const PolicyStore& store) {
  std::size_t deepest = 0;
  for (std::size_t k = 0; k < store.size(); ++k) {
    if (std::holds_alternative<Rule>(store.at(k))) continue;
    std::size_t d = 1;
    for (std::size_t a = store.parent(k); a != PolicyStore::npos; a = store.parent(a)) ++d;
    deepest = std::max(deepest, d);
  }
  return deepest;
}

Outcome differential() {
  const auto started = Clock::now();
  std::size_t requests = 0;
  std::size_t largest = 0;
  std::size_t rules = 0;
  for (std::size_t i = 0; i < random_stores().size(); ++i) {
    const auto& c = random_stores()[i];
    if (c.store.rule_indices().size() > 10 || container_depth(c.store) > 3) {
      return fail("store " + std::to_string(i) + " is outside the generator bounds");
    }
    for (Category cat : kCategories) {
      if (c.domains.of(cat).size() > 4) return fail("store " + std::to_string(i) + " has a wide domain");
    }
    rules += c.store.rule_indices().size();
    DifferentialResult r = differential_check(c.store, c.domains);
    if (!r.pass) {
      return fail("store " + std::to_string(i) + ": " + (r.first ? describe(*r.first) : r.error));
    }
    requests += r.requests;
    largest = std::max(largest, r.requests);
  }
  const double t = seconds_since(started);
  if (largest > 256) return fail("request space of " + std::to_string(largest));
  if (t >= 60.0) return fail("took " + fmt_seconds(t));
  return {Outcome::Status::pass, "200 stores, " + std::to_string(rules) + " rules, " + std::to_string(requests) +
                                     " requests, 0 divergences in " + fmt_seconds(t)};
}

Outcome acyclicity() {
  std::size_t atoms = 0;
  for (std::size_t i = 0; i < random_stores().size(); ++i) {
    const auto& c = random_stores()[i];
    lp::GroundOptions opts;
    for (const Fact& f : saturated_request(c.domains).facts) {
      lp::Atom a(f.predicate);
      for (const std::string& v : f.args) a.args.push_back(lp::Term::constant(v));
      opts.externals.push_back(a);
    }
    lp::GroundProgram g = lp::ground(lp::transform_store(c.store, c.domains), opts);
    lp::AcyclicityReport rep = lp::check_acyclic(g);
    if (!rep.acyclic) return fail("store " + std::to_string(i) + " has a dependency cycle");
    atoms += g.atom_count();
  }
  return {Outcome::Status::pass, "200 programs acyclic, " + std::to_string(atoms) + " ground atoms"};
}

// ── 4 ────────────────────────────────────────────────────────────────────────

Outcome engine_correctness() {
  const auto started = Clock::now();
  testing::Rng rng(4242);
  for (int i = 0; i < 500; ++i) {
    lp::LogicProgram p = testing::random_acyclic_program(rng, 15);
    lp::GroundProgram g = lp::ground(p);
    auto expected = testing::brute_force_answer_sets(g);
    if (expected.size() != 1) return fail("brute force found " + std::to_string(expected.size()) + " answer sets");
    if (lp::solve_unique(g) != *expected.begin()) return fail("normal program " + std::to_string(i) + " differs");
  }
  std::size_t models = 0;
  for (int i = 0; i < 100; ++i) {
    lp::LogicProgram p = testing::random_choice_program(rng);
    lp::GroundProgram g = lp::ground(p);
    auto expected = testing::brute_force_answer_sets(g);
    auto serial = lp::enumerate_models(g, kAll, Execution::serial);
    auto parallel = lp::enumerate_models(g, kAll, Execution::parallel);
    std::set<lp::AnswerSet> got(serial.begin(), serial.end());
    if (got != expected || got.size() != serial.size()) return fail("choice program " + std::to_string(i) + " differs");
    if (parallel != serial) return fail("parallel enumeration differs on choice program " + std::to_string(i));
    models += serial.size();
  }
  const double t = seconds_since(started);
  if (t >= 30.0) return fail("took " + fmt_seconds(t));
  return {Outcome::Status::pass, "500 normal + 100 choice programs (" + std::to_string(models) +
                                     " models), 0 mismatches in " + fmt_seconds(t)};
}

// ── 5 ────────────────────────────────────────────────────────────────────────

Outcome gap_analysis() {
  Fixture gapped = fixture("gap.pol");
  RequestSpace space(gapped.dom);
  Evaluator ev(gapped.store, gapped.dom);
  std::set<Request> brute;
  for (std::size_t i = 0; i < space.size(); ++i) {
    Request q = space.at(i);
    if (ev.evaluate(q) == NA) brute.insert(q);
  }
  for (const Request& q : brute) {
    if (!q.contains({Category::subject, "nurse"})) return fail("brute force found a doctor gap");
  }
  std::size_t nurse_requests = 0;
  for (std::size_t i = 0; i < space.size(); ++i) nurse_requests += space.at(i).contains({Category::subject, "nurse"});
  if (brute.size() != nurse_requests) return fail("not every nurse request is a gap");

  for (Engine e : {Engine::native, Engine::lp}) {
    AnalysisReport r = check_completeness(gapped.store, gapped.dom, all_witnesses(e));
    std::set<Request> found;
    for (const Witness& w : r.witnesses) found.insert(*w.request);
    if (found != brute || r.total != brute.size()) {
      return fail(std::string(to_string(e)) + " engine reported " + std::to_string(r.total) + " gaps");
    }
  }
  if (lp_model_count(lp::Task::gap, gapped) != brute.size()) return fail("lp model count differs");

  Fixture complete = fixture("gap_complete.pol");
  if (check_completeness(complete.store, complete.dom, all_witnesses()).total != 0) {
    return fail("completed store still has gaps");
  }
  if (std::size_t m = lp_model_count(lp::Task::gap, complete); m != 0) {
    return fail("completed store has " + std::to_string(m) + " gap models");
  }
  return {Outcome::Status::pass, std::to_string(brute.size()) + " of " + std::to_string(space.size()) +
                                     " requests (all nurse) gapped; completed store 0 witnesses, 0 models"};
}

// ── 6 ────────────────────────────────────────────────────────────────────────

Outcome conflict_analysis() {
  Fixture pair = fixture("conflict.pol");
  RequestSpace space(pair.dom);
  AnalysisReport native = check_conflicts(pair.store, pair.dom, all_witnesses(Engine::native));
  AnalysisReport lp = check_conflicts(pair.store, pair.dom, all_witnesses(Engine::lp));
  std::set<Request> covered;
  for (const Witness& w : native.witnesses) covered.insert(*w.request);
  if (covered.size() != space.size()) {
    return fail("conflicts on " + std::to_string(covered.size()) + " of " + std::to_string(space.size()) + " requests");
  }
  if (witness_keys(native) != witness_keys(lp)) return fail("engines disagree on the conflicting pair");
  if (lp_model_count(lp::Task::conflict, pair) != space.size()) return fail("lp model count differs");

  Fixture permits = fixture("all_permit.pol");
  AnalysisReport none = check_conflicts(permits.store, permits.dom, all_witnesses(Engine::native));
  AnalysisReport none_lp = check_conflicts(permits.store, permits.dom, all_witnesses(Engine::lp));
  if (none.total != 0 || none_lp.total != 0) return fail("all-permit store reported conflicts");
  if (lp_model_count(lp::Task::conflict, permits) != 0) return fail("all-permit store has conflict models");
  return {Outcome::Status::pass, std::to_string(space.size()) + "/" + std::to_string(space.size()) +
                                     " requests conflicting; all-permit 0; engines identical"};
}

// ── 7 ────────────────────────────────────────────────────────────────────────

Outcome reachability() {
  struct Case {
    const char* file;
    const char* clause;
    std::vector<std::string> expected;
  };
  const std::vector<Case> cases = {
      {"reach_always_na.pol", "always-na", {"r2"}},
      {"reach_po.pol", "po-shadowed deny", {"r2"}},
      {"reach_do.pol", "do-shadowed permit", {"r2"}},
      {"reach_ooa.pol", "ooa double-applicable", {"r3"}},
      {"reach_fa.pol", "fa later-applicable", {"r2"}},
  };
  std::string notes;
  for (const Case& c : cases) {
    Fixture f = fixture(c.file);
    AnalysisReport native = check_reachability(f.store, f.dom, all_witnesses(Engine::native));
    std::vector<std::string> flagged = flagged_rules(native);
    if (flagged != c.expected) {
      std::string got;
      for (const auto& r : flagged) got += " " + r;
      return fail(std::string(c.clause) + ": flagged" + (got.empty() ? " nothing" : got));
    }
    RequestSpace space(f.dom);
    if (space.size() > 256) return fail(std::string(c.clause) + ": request space too large");
    Evaluator before(f.store, f.dom);
    for (const std::string& rule : flagged) {
      PolicyStore smaller = f.store.without(rule);
      Evaluator after(smaller, f.dom);
      for (std::size_t i = 0; i < space.size(); ++i) {
        if (before.evaluate(space.at(i)) != after.evaluate(space.at(i))) {
          return fail(std::string(c.clause) + ": removing " + rule + " changed a decision");
        }
      }
    }
    AnalysisReport lp = check_reachability(f.store, f.dom, all_witnesses(Engine::lp));
    for (std::size_t k = 0; k < lp.classification.size(); ++k) {
      if (lp.classification[k].saturated_unreachable != native.classification[k].saturated_unreachable) {
        return fail(std::string(c.clause) + ": lp and native saturated readings differ on " + lp.classification[k].rule);
      }
    }
    if (flagged_rules(lp) != flagged) {
      std::string sat;
      for (const auto& r : flagged_rules(lp)) sat += (sat.empty() ? "" : ",") + r;
      notes += std::string("; ") + c.clause + " saturated flags " + sat;
    }
  }
  return {Outcome::Status::pass, "5 fixtures flag exactly the intended rule; removal leaves every decision unchanged" + notes};
}

// ── 8 ────────────────────────────────────────────────────────────────────────

std::vector<std::string> sorted_model(const lp::GroundProgram& g) {
  auto atoms = lp::to_strings(g, lp::solve_unique(g));
  std::sort(atoms.begin(), atoms.end());
  return atoms;
}

Outcome determinism() {
  const std::vector<std::string> files = {"gap.pol", "gap_complete.pol", "conflict.pol", "all_permit.pol",
                                          "reach_always_na.pol", "reach_ooa.pol", "reach_fa.pol"};
  for (const std::string& file : files) {
    Fixture a = fixture(file);
    Fixture b = fixture(file);
    for (lp::Task t : {lp::Task::gap, lp::Task::conflict, lp::Task::reachability}) {
      if (lp::serialize_program(lp::emit_analysis(t, a.store, a.dom)) !=
          lp::serialize_program(lp::emit_analysis(t, b.store, b.dom))) {
        return fail(file + ": emitted program differs between runs");
      }
    }
  }

  testing::Rng rng(8080);
  for (int i = 0; i < 1000; ++i) {
    auto c = testing::random_case(rng);
    const std::string text = serialize(c.store);
    PolicyStore again = load_store(text, c.domains);
    if (!(again == c.store) || serialize(again) != text) return fail("store round trip " + std::to_string(i));
    if (!(parse_domains(serialize(c.domains)) == c.domains)) return fail("domain round trip " + std::to_string(i));
  }

  Fixture hospital = fixture("hospital.pol", "hospital.dom");
  Request doctor = parse_request(read_data("doctor_read.req"), &hospital.dom);
  std::size_t checked = 0;
  auto check_eval = [&](const PolicyStore& store, const AttributeDomains& dom, const Request& q) {
    lp::LogicProgram program = lp::emit_eval(store, dom, q);
    const std::string text = lp::serialize_program(program);
    ++checked;
    return sorted_model(lp::ground(program)) == sorted_model(lp::ground(lp::parse_program(text)));
  };
  if (!check_eval(hospital.store, hospital.dom, doctor)) return fail("hospital eval program");
  testing::Rng rng2(8181);
  for (int i = 0; i < 100; ++i) {
    auto c = testing::random_case(rng2);
    RequestSpace space(c.domains);
    Request q = space.at(static_cast<std::size_t>(i) % space.size());
    if (!check_eval(c.store, c.domains, q)) return fail("eval program round trip " + std::to_string(i));
  }
  return {Outcome::Status::pass, "emit-lp stable, 1000 store round trips, " + std::to_string(checked) +
                                     " eval programs re-parsed to the same answer set"};
}

// ── 9 ────────────────────────────────────────────────────────────────────────

Outcome external_solver() {
  const std::string script = XACML_CLINGO_SCRIPT;
  if (std::system(("python3 " + script + " /dev/null > /dev/null 2>&1").c_str()) != 0) {
    return {Outcome::Status::skip, "clingo Python module not available"};
  }
  auto dir = std::filesystem::temp_directory_path() / ("xacml_acceptance_" + std::to_string(getpid()));
  std::filesystem::create_directories(dir);
  struct Case {
    const char* file;
    lp::Task task;
  };
  std::string detail;
  for (Case c : {Case{"gap.pol", lp::Task::gap}, Case{"gap_complete.pol", lp::Task::gap},
                 Case{"conflict.pol", lp::Task::conflict}, Case{"all_permit.pol", lp::Task::conflict}}) {
    Fixture f = fixture(c.file);
    const auto path = dir / (std::string(c.file) + "." + std::string(lp::to_string(c.task)) + ".lp");
    std::ofstream(path) << lp::serialize_program(lp::emit_analysis(c.task, f.store, f.dom));
    FILE* pipe = popen(("python3 " + script + " " + path.string()).c_str(), "r");
    if (pipe == nullptr) return fail("cannot start python3");
    char buf[64] = {};
    std::string out;
    while (fgets(buf, sizeof buf, pipe) != nullptr) out += buf;
    if (pclose(pipe) != 0) return fail(std::string(c.file) + ": clingo failed");
    const std::size_t theirs = std::stoul(out);
    const std::size_t ours = lp_model_count(c.task, f);
    if (theirs != ours) {
      return fail(std::string(c.file) + ": clingo " + std::to_string(theirs) + " vs " + std::to_string(ours));
    }
    detail += (detail.empty() ? "" : ", ") + std::string(c.file) + "=" + std::to_string(ours);
  }
  std::filesystem::remove_all(dir);
  return {Outcome::Status::pass, "clingo model counts match: " + detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"combining-algorithm laws", combining_laws},
      {"native/lp differential on 200 random stores", differential},
      {"acyclicity of store programs", acyclicity},
      {"lp-engine vs brute force", engine_correctness},
      {"gap analysis", gap_analysis},
      {"conflict analysis", conflict_analysis},
      {"reachability and removal invariance", reachability},
      {"determinism and round trips", determinism},
      {"external ASP solver model counts", external_solver},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const char* word = o.status == Outcome::Status::pass ? "PASS" : o.status == Outcome::Status::skip ? "SKIP" : "FAIL";
    if (o.status == Outcome::Status::fail) ++failures;
    std::cout << "criterion " << i + 1 << ": " << word << "  " << criteria[i].first << " (" << o.detail << ")"
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
