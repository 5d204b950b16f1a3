#pragma once

#include "xacml/evaluator.hpp"
#include "xacml/lp/emitter.hpp"
#include "xacml/model.hpp"
#include "xacml/parallel.hpp"

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xacml {

enum class Engine { native, lp };

std::string_view to_string(Engine e);
std::optional<Engine> engine_from_string(std::string_view name);

/// Thrown when the request space is larger than the configured budget.
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(std::size_t space, std::size_t budget);
  std::size_t space() const { return space_; }
  std::size_t budget() const { return budget_; }

 private:
  std::size_t space_;
  std::size_t budget_;
};

/// Every request carrying exactly one value for each category with a
/// non-empty domain. Values are ordered like logic-program constants
/// (integers numerically, then bare symbols, then the rest), categories
/// subject first; index 0 is the lexicographically smallest request.
class RequestSpace {
 public:
  explicit RequestSpace(const AttributeDomains& dom);

  /// Number of requests, saturating at SIZE_MAX.
  std::size_t size() const { return size_; }
  Request at(std::size_t index) const;
  /// Index of a request of this space, or nullopt.
  std::optional<std::size_t> index_of(const Request& q) const;

  const std::vector<Category>& categories() const { return categories_; }
  const std::vector<std::string>& values(std::size_t k) const { return values_[k]; }

 private:
  std::vector<Category> categories_;
  std::vector<std::vector<std::string>> values_;
  std::size_t size_ = 1;
};

/// The request holding every declared attribute value at once.
Request saturated_request(const AttributeDomains& dom);

/// Values sorted like logic-program constants.
std::vector<std::string> sorted_tokens(std::vector<std::string> tokens);

struct AnalysisOptions {
  Engine engine = Engine::native;
  std::size_t max_witnesses = 100;
  std::size_t budget = 1'000'000;
  Execution execution = Execution::parallel;
  lp::EmitOptions emit;
};

struct Witness {
  std::string kind;  // gap, conflict, unreachable
  std::optional<Request> request;
  std::vector<std::string> components;
  std::map<std::string, Decision> decisions;
  Engine engine = Engine::native;
  std::string provenance;  // generate_one, saturated or per_request

  friend bool operator==(const Witness&, const Witness&) = default;
};

struct RuleReachability {
  std::string rule;
  bool saturated_unreachable = false;
  std::optional<bool> per_request_unreachable;  // native engine only
};

struct AnalysisReport {
  std::string task;
  Engine engine = Engine::native;
  std::string store_hash;
  std::array<std::size_t, 4> domain_sizes{};
  std::vector<Witness> witnesses;
  std::size_t total = 0;
  bool truncated = false;
  double elapsed_ms = 0;
  std::vector<RuleReachability> classification;  // reachability only
};

/// Requests of the space on which the root evaluates to na.
AnalysisReport check_completeness(const PolicyStore& store, const AttributeDomains& dom,
                                  const AnalysisOptions& options = {});

/// Triples (request, permitting rule, denying rule) over the request space.
AnalysisReport check_conflicts(const PolicyStore& store, const AttributeDomains& dom,
                               const AnalysisOptions& options = {});

/// Unreachable rules. The lp engine reads not_reachable/1 from the model of
/// the saturated program. The native engine computes that same saturated
/// reading and a per-request reading over the request space, and reports
/// the per-request findings as witnesses: a rule is flagged when under every
/// request it is na, loses to an opposite parent decision, sits under a
/// non-matching parent target, is one of three or more applicable children
/// of an only-one-applicable parent, or follows an applicable sibling under
/// first-applicable. Each of these leaves every decision unchanged when the
/// rule is deleted.
AnalysisReport check_reachability(const PolicyStore& store, const AttributeDomains& dom,
                                  const AnalysisOptions& options = {});

/// Rule ids flagged by a reachability report's witnesses.
std::vector<std::string> flagged_rules(const AnalysisReport& report);

struct Divergence {
  Request request;
  std::string component;
  Decision native = Decision::not_applicable;
  std::vector<Decision> lp;  // every V with val(component, V) in the answer set
};

struct DifferentialResult {
  bool pass = false;
  std::size_t requests = 0;
  std::optional<Divergence> first;
  std::string error;  // set when the program could not be solved at all
};

/// Evaluates every request of the space natively and through the unique
/// answer set of the store program, comparing the value of every component.
DifferentialResult differential_check(const PolicyStore& store, const AttributeDomains& dom,
                                      const AnalysisOptions& options = {});

std::string describe(const Divergence& d);

/// 64-bit FNV-1a of the serialized store, as 16 hex digits.
std::string store_fingerprint(const PolicyStore& store);

/// Versioned JSON document. `timing` false writes elapsed_ms as 0 so that
/// identical inputs give identical bytes.
std::string to_json(const AnalysisReport& report, bool timing = true);
std::string to_text(const AnalysisReport& report);

}  // namespace xacml
