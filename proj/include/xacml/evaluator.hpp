#pragma once

#include "xacml/model.hpp"

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace xacml {

MatchValue eval_match(const Match& m, const Request& q);
MatchValue eval_allof(const AllOf& a, const Request& q);
MatchValue eval_anyof(const AnyOf& a, const Request& q);
MatchValue eval_target(const Target& t, const Request& q);

/// Satisfiability of the formula: true iff some assignment of its variables
/// to constants of the universe (domain constants, the formula's own
/// constants, and the request's constants) makes it hold. Attribute-category
/// predicates are read from the request; other predicates from the request's
/// external facts together with the domain relations.
CondValue eval_condition(const Condition& c, const Request& q, const AttributeDomains& dom);

Decision eval_rule(const Rule& r, const Request& q, const AttributeDomains& dom);

/// The four combining operators over child decisions in declaration order.
/// Only-one-applicable maps the "more than one applicable" case to na.
Decision combine(CombiningAlgorithm alg, std::span<const Decision> values);

Decision eval_policy(const Policy& p, const PolicyStore& store, const Request& q,
                     const AttributeDomains& dom);
Decision eval_policyset(const PolicySet& ps, const PolicyStore& store, const Request& q,
                        const AttributeDomains& dom);

/// Decision of the root policy set.
Decision evaluate(const PolicyStore& store, const Request& q, const AttributeDomains& dom);

/// Evaluator bound to one store and domain, caching what does not depend on
/// the request. Safe to share across threads.
class Evaluator {
 public:
  Evaluator(const PolicyStore& store, const AttributeDomains& dom);

  /// Decision of every component, indexed like store.components().
  std::vector<Decision> evaluate_all(const Request& q) const;
  Decision evaluate(const Request& q) const;

  /// Target value of every component under q, indexed like store.components().
  std::vector<MatchValue> targets(const Request& q) const;

  const PolicyStore& store() const { return *store_; }
  const AttributeDomains& domains() const { return *dom_; }

 private:
  const PolicyStore* store_;
  const AttributeDomains* dom_;
  std::vector<std::set<std::string>> universes_;  // per rule condition
};

namespace detail {

/// Condition satisfiability over an explicit universe.
CondValue eval_condition(const Condition& c, const Request& q, const AttributeDomains& dom,
                         const std::set<std::string>& base_universe);

}  // namespace detail

}  // namespace xacml
