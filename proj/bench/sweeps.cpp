// Serial against OpenMP sweeps over the request space and the choice product.
#include "xacml/analyzer.hpp"
#include "xacml/lp/emitter.hpp"
#include "xacml/lp/engine.hpp"
#include "xacml/parser.hpp"

#include <benchmark/benchmark.h>

#include <limits>
#include <string>

namespace {

using namespace xacml;

// Wide domains and a few dozen rules so each request does real work.
struct Workload {
  AttributeDomains dom;
  PolicyStore store;
};

const Workload& workload() {
  static const Workload w = [] {
    std::string d;
    auto section = [&](const char* name, const char* prefix, int n) {
      d += std::string(name) + ": ";
      for (int i = 0; i < n; ++i) d += (i ? ", " : "") + std::string(prefix) + std::to_string(i);
      d += "\n";
    };
    section("subjects", "s", 12);
    section("actions", "a", 8);
    section("resources", "r", 8);
    section("environments", "e", 6);
    d += "relation owner: (s1, r1), (s2, r2), (s3, r3), (s4, r5)\n";
    AttributeDomains dom = parse_domains(d);

    std::string p = "policyset root = [null, <";
    const char* algs[] = {"po", "do", "fa", "ooa"};
    for (int i = 0; i < 8; ++i) p += (i ? ", " : "") + std::string("p") + std::to_string(i);
    p += ">, do]\n";
    int rule = 0;
    for (int i = 0; i < 8; ++i) {
      p += "policy p" + std::to_string(i) + " = [target(subject(s" + std::to_string(i) + ") | action(a" +
           std::to_string(i % 8) + ")), <";
      for (int k = 0; k < 4; ++k) p += (k ? ", " : "") + std::string("r") + std::to_string(rule + k);
      p += ">, " + std::string(algs[i % 4]) + "]\n";
      for (int k = 0; k < 4; ++k, ++rule) {
        p += "rule r" + std::to_string(rule) + " = [" + (rule % 3 ? "permit" : "deny") +
             ", target(resource(r" + std::to_string(rule % 8) + ") | environment(e" + std::to_string(rule % 6) +
             ")), " + (rule % 2 ? "cond(owner(X, Y) and X != Y)" : "true") + "]\n";
      }
    }
    PolicyStore store = load_store(p, dom);
    return Workload{std::move(dom), std::move(store)};
  }();
  return w;
}

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

void label(benchmark::State& state) { state.SetLabel(std::string(to_string(mode(state)))); }

void BM_Completeness(benchmark::State& state) {
  const Workload& w = workload();
  AnalysisOptions o;
  o.execution = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(check_completeness(w.store, w.dom, o).total);
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(RequestSpace(w.dom).size()));
  label(state);
}

void BM_Conflicts(benchmark::State& state) {
  const Workload& w = workload();
  AnalysisOptions o;
  o.execution = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(check_conflicts(w.store, w.dom, o).total);
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(RequestSpace(w.dom).size()));
  label(state);
}

void BM_Differential(benchmark::State& state) {
  const Workload& w = workload();
  AnalysisOptions o;
  o.execution = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(differential_check(w.store, w.dom, o).pass);
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(RequestSpace(w.dom).size()));
  label(state);
}

void BM_EnumerateGapModels(benchmark::State& state) {
  const Workload& w = workload();
  const lp::GroundProgram g = lp::ground(lp::emit_analysis(lp::Task::gap, w.store, w.dom));
  for (auto _ : state) {
    benchmark::DoNotOptimize(lp::enumerate_models(g, std::numeric_limits<std::size_t>::max(), mode(state)).size());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(lp::selection_count(g)));
  label(state);
}

}  // namespace

BENCHMARK(BM_Completeness)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Conflicts)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Differential)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EnumerateGapModels)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
