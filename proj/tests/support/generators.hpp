#pragma once

#include "xacml/lp/engine.hpp"
#include "xacml/lp/program.hpp"
#include "xacml/model.hpp"

#include <cstdint>
#include <random>
#include <set>
#include <vector>

namespace xacml::testing {

using Rng = std::mt19937_64;

struct StoreShape {
  int max_depth = 3;        // root policy set plus nested levels
  int max_rules = 10;
  int max_values = 4;       // per category
  int max_children = 3;
  bool conditions = true;
  bool allow_empty_category = true;
};

struct GeneratedCase {
  AttributeDomains domains;
  PolicyStore store;
};

AttributeDomains random_domains(Rng& rng, const StoreShape& shape = {});
GeneratedCase random_case(Rng& rng, const StoreShape& shape = {});

/// Propositional acyclic program: atom k only depends on atoms < k.
lp::LogicProgram random_acyclic_program(Rng& rng, int atoms = 15);

/// Acyclic program with one or two `1 { pick_g(X) : opt_g(X) } 1.` groups,
/// rules over the picks and an occasional constraint.
lp::LogicProgram random_choice_program(Rng& rng);

/// Every answer set of a ground program found by trying each interpretation
/// and comparing it with the least model of its reduct. Facts are fixed true,
/// so the search runs over the remaining atoms only.
std::set<lp::AnswerSet> brute_force_answer_sets(const lp::GroundProgram& g);

}  // namespace xacml::testing
