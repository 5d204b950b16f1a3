// xacml-analyzer: evaluate requests, emit logic programs and analyse policy
// stores for gaps, conflicts and unreachable rules.

#include "xacml/analyzer.hpp"
#include "xacml/evaluator.hpp"
#include "xacml/lp/emitter.hpp"
#include "xacml/lp/engine.hpp"
#include "xacml/parser.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

namespace {

using namespace xacml;

constexpr int kPermit = 0;
constexpr int kDeny = 1;
constexpr int kNotApplicable = 2;
constexpr int kFindings = 3;
constexpr int kUsage = 64;
constexpr int kBudget = 65;
constexpr int kIo = 66;
constexpr int kDisagree = 70;

constexpr std::size_t kDefaultBudget = 1'000'000;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string policies;
  std::string domains;
  std::string request;
  std::string engine = "native";
  std::size_t max_witnesses = 100;
  std::optional<std::size_t> budget;
  std::string format = "text";
  std::string out;
  int verbose = 0;
  bool no_timing = false;
  std::string task;
  std::string program;
  std::size_t max_models = 0;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const RunConfig& cfg, const std::string& text) {
  if (cfg.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.out, std::ios::binary);
  if (!out || !(out << text)) throw IoError("cannot write '" + cfg.out + "'");
}

std::size_t budget_of(const RunConfig& cfg) {
  if (cfg.budget) return *cfg.budget;
  if (const char* env = std::getenv("XACML_ANALYZER_BUDGET")) {
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(env, &pos);
      if (pos == std::string_view(env).size() && v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw Error("XACML_ANALYZER_BUDGET must be a positive integer");
  }
  return kDefaultBudget;
}

struct Inputs {
  AttributeDomains domains;
  PolicyStore store;
};

Inputs load_inputs(const RunConfig& cfg) {
  const std::string dom_text = read_file(cfg.domains);
  const std::string pol_text = read_file(cfg.policies);
  AttributeDomains dom = parse_domains(dom_text, cfg.domains);
  PolicyStore store = load_store(pol_text, dom, {}, cfg.policies);
  return {std::move(dom), std::move(store)};
}

// ── evaluate ─────────────────────────────────────────────────────────────────

std::vector<Decision> lp_decisions(const PolicyStore& store, const AttributeDomains& dom, const Request& q) {
  const lp::GroundProgram g = lp::ground(lp::emit_eval(store, dom, q));
  const lp::AnswerSet s = lp::solve_unique(g);
  std::vector<Decision> out;
  for (const Component& c : store.components()) {
    std::optional<Decision> found;
    for (Decision d : {Decision::permit, Decision::deny, Decision::not_applicable}) {
      auto id = g.find(lp::val_atom(id_of(c), token(d)));
      if (id && s.contains(*id)) {
        if (found) throw Error("answer set holds two values for " + id_of(c));
        found = d;
      }
    }
    if (!found) throw Error("answer set holds no value for " + id_of(c));
    out.push_back(*found);
  }
  return out;
}

int exit_for(Decision d) {
  switch (d) {
    case Decision::permit: return kPermit;
    case Decision::deny: return kDeny;
    case Decision::not_applicable: return kNotApplicable;
  }
  return kNotApplicable;
}

int cmd_evaluate(const RunConfig& cfg) {
  if (cfg.request.empty()) throw CLI::ValidationError("--request", "evaluate needs a request file");
  const Inputs in = load_inputs(cfg);
  const Request q = parse_request(read_file(cfg.request), &in.domains, cfg.request);

  std::vector<Decision> native;
  std::vector<Decision> lp;
  if (cfg.engine != "lp") native = Evaluator(in.store, in.domains).evaluate_all(q);
  if (cfg.engine != "native") lp = lp_decisions(in.store, in.domains, q);
  const bool both = cfg.engine == "both";
  const bool agree = !both || native == lp;
  const std::vector<Decision>& shown = native.empty() ? lp : native;

  std::string text;
  if (cfg.format == "json") {
    nlohmann::ordered_json doc;
    doc["decision"] = to_string(shown.front());
    doc["engine"] = cfg.engine;
    if (both) doc["agree"] = agree;
    nlohmann::ordered_json comps = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < in.store.size(); ++k) {
      const std::string& id = id_of(in.store.at(k));
      if (both) {
        comps[id] = {{"native", to_string(native[k])}, {"lp", to_string(lp[k])}};
      } else {
        comps[id] = to_string(shown[k]);
      }
    }
    doc["components"] = comps;
    text = doc.dump(2) + "\n";
  } else {
    text = std::string(to_string(shown.front())) + "\n";
    if (both) text += std::string("lp: ") + std::string(to_string(lp.front())) + (agree ? "" : "  (engines disagree)") + "\n";
    if (cfg.verbose >= 1) {
      for (std::size_t k = 0; k < in.store.size(); ++k) {
        text += "  " + in.store.path(k) + ": " + std::string(to_string(shown[k]));
        if (both && lp[k] != native[k]) text += " (lp: " + std::string(to_string(lp[k])) + ")";
        text += "\n";
      }
    }
  }
  write_output(cfg, text);
  if (!agree) {
    std::cerr << "error: native and lp engines disagree\n";
    return kDisagree;
  }
  return exit_for(shown.front());
}

// ── analyze ──────────────────────────────────────────────────────────────────

AnalysisReport run_task(const std::string& task, const Inputs& in, const AnalysisOptions& options) {
  if (task == "gap") return check_completeness(in.store, in.domains, options);
  if (task == "conflict") return check_conflicts(in.store, in.domains, options);
  return check_reachability(in.store, in.domains, options);
}

// Witnesses compared as sets of (request, components).
bool same_findings(const AnalysisReport& a, const AnalysisReport& b) {
  if (a.task == "reachability") {
    if (a.classification.size() != b.classification.size()) return false;
    for (std::size_t k = 0; k < a.classification.size(); ++k) {
      if (a.classification[k].saturated_unreachable != b.classification[k].saturated_unreachable) return false;
    }
    return true;
  }
  auto keys = [](const AnalysisReport& r) {
    std::set<std::pair<std::optional<Request>, std::vector<std::string>>> out;
    for (const Witness& w : r.witnesses) out.insert({w.request, w.components});
    return out;
  };
  return a.total == b.total && keys(a) == keys(b);
}

int cmd_analyze(const RunConfig& cfg) {
  const Inputs in = load_inputs(cfg);
  AnalysisOptions options;
  options.max_witnesses = cfg.max_witnesses;
  options.budget = budget_of(cfg);
  const bool timing = !cfg.no_timing;

  if (cfg.engine != "both") {
    options.engine = *engine_from_string(cfg.engine);
    const AnalysisReport report = run_task(cfg.task, in, options);
    write_output(cfg, cfg.format == "json" ? to_json(report, timing) : to_text(report));
    return report.total == 0 ? 0 : kFindings;
  }
  options.engine = Engine::native;
  const AnalysisReport native = run_task(cfg.task, in, options);
  options.engine = Engine::lp;
  const AnalysisReport lp = run_task(cfg.task, in, options);
  const bool agree = same_findings(native, lp);
  std::string text;
  if (cfg.format == "json") {
    nlohmann::ordered_json doc;
    doc["native"] = nlohmann::ordered_json::parse(to_json(native, timing));
    doc["lp"] = nlohmann::ordered_json::parse(to_json(lp, timing));
    doc["agree"] = agree;
    text = doc.dump(2) + "\n";
  } else {
    text = to_text(native) + to_text(lp) + (agree ? "engines agree\n" : "engines disagree\n");
  }
  write_output(cfg, text);
  if (!agree) {
    std::cerr << "error: native and lp engines disagree\n";
    return kDisagree;
  }
  return native.total == 0 ? 0 : kFindings;
}

// ── emit-lp ──────────────────────────────────────────────────────────────────

int cmd_emit(const RunConfig& cfg) {
  const Inputs in = load_inputs(cfg);
  lp::LogicProgram program;
  if (cfg.task == "eval") {
    if (cfg.request.empty()) throw CLI::ValidationError("--request", "emit-lp eval needs a request file");
    const Request q = parse_request(read_file(cfg.request), &in.domains, cfg.request);
    program = lp::emit_eval(in.store, in.domains, q);
  } else {
    program = lp::emit_analysis(*lp::task_from_string(cfg.task), in.store, in.domains);
  }
  write_output(cfg, lp::serialize_program(program));
  return 0;
}

// ── solve ────────────────────────────────────────────────────────────────────

int cmd_solve(const RunConfig& cfg) {
  const lp::LogicProgram program = lp::parse_program(read_file(cfg.program), cfg.program);
  const lp::GroundProgram g = lp::ground(program);
  const std::size_t limit = cfg.max_models == 0 ? std::numeric_limits<std::size_t>::max() : cfg.max_models;
  const std::vector<lp::AnswerSet> models = lp::enumerate_models(g, limit, Execution::parallel);

  std::string text;
  if (cfg.format == "json") {
    nlohmann::ordered_json doc;
    nlohmann::ordered_json ms = nlohmann::ordered_json::array();
    for (const lp::AnswerSet& m : models) ms.push_back(lp::to_strings(g, m));
    doc["models"] = ms;
    doc["satisfiable"] = !models.empty();
    text = doc.dump(2) + "\n";
  } else {
    for (std::size_t k = 0; k < models.size(); ++k) {
      text += "Answer: " + std::to_string(k + 1) + "\n";
      std::string line;
      for (const std::string& a : lp::to_strings(g, models[k])) line += (line.empty() ? "" : " ") + a;
      text += line + "\n";
    }
    text += models.empty() ? "UNSATISFIABLE\n" : "SATISFIABLE\n";
    text += "Models: " + std::to_string(models.size()) + "\n";
  }
  write_output(cfg, text);
  return models.empty() ? 2 : 0;
}

void add_inputs(CLI::App* cmd, RunConfig& cfg, bool request) {
  cmd->add_option("--policies", cfg.policies, "Policy file")->required();
  cmd->add_option("--domains", cfg.domains, "Attribute domains file")->required();
  if (request) cmd->add_option("--request", cfg.request, "Request file");
}

void add_output(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--format", cfg.format, "Output format")->check(CLI::IsMember({"text", "json"}));
  cmd->add_option("--out", cfg.out, "Write output to this file instead of stdout");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analyse abstract XACML policy stores"};
  app.require_subcommand(1);
  app.footer(
      "Exit codes:\n"
      "  evaluate   0 permit, 1 deny, 2 not applicable\n"
      "  analyze    0 no findings, 3 findings\n"
      "  solve      0 satisfiable, 2 no answer set\n"
      "  64 bad input or flags, 65 request space over budget, 66 I/O error,\n"
      "  70 native and lp engines disagree\n"
      "The XACML_ANALYZER_BUDGET environment variable sets the default budget.");
  RunConfig cfg;
  app.fallthrough();
  app.add_flag("-v,--verbose", cfg.verbose, "List every component's value (evaluate)");

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate one request");
  add_inputs(evaluate, cfg, true);
  evaluate->add_option("--engine", cfg.engine, "native, lp or both")->check(CLI::IsMember({"native", "lp", "both"}));
  add_output(evaluate, cfg);

  auto* analyze = app.add_subcommand("analyze", "Run gap, conflict or reachability analysis");
  analyze->add_option("task", cfg.task, "gap, conflict or reachability")
      ->required()
      ->check(CLI::IsMember({"gap", "conflict", "reachability"}));
  add_inputs(analyze, cfg, false);
  analyze->add_option("--engine", cfg.engine, "native, lp or both")->check(CLI::IsMember({"native", "lp", "both"}));
  analyze->add_option("--max-witnesses", cfg.max_witnesses, "Witnesses to list")->check(CLI::PositiveNumber);
  analyze->add_option("--budget", cfg.budget, "Largest request space to search")->check(CLI::PositiveNumber);
  analyze->add_flag("--no-timing", cfg.no_timing, "Report elapsed_ms as 0 for byte-stable output");
  add_output(analyze, cfg);

  auto* emit = app.add_subcommand("emit-lp", "Write the logic program for evaluation or an analysis");
  emit->add_option("task", cfg.task, "eval, gap, conflict or reachability")
      ->required()
      ->check(CLI::IsMember({"eval", "gap", "conflict", "reachability"}));
  add_inputs(emit, cfg, true);
  emit->add_option("--out", cfg.out, "Write the program to this file instead of stdout");

  auto* solve = app.add_subcommand("solve", "Solve a logic program file");
  solve->add_option("program", cfg.program, "Program file")->required();
  solve->add_option("--max-models", cfg.max_models, "Stop after this many models (0 for all)");
  add_output(solve, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (evaluate->parsed()) return cmd_evaluate(cfg);
    if (analyze->parsed()) return cmd_analyze(cfg);
    if (emit->parsed()) return cmd_emit(cfg);
    return cmd_solve(cfg);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBudget;
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
}
