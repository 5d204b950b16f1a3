#pragma once

#include "xacml/lp/program.hpp"
#include "xacml/parallel.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace xacml::lp {

using AtomId = std::uint32_t;

struct GroundRule {
  std::optional<AtomId> head;  // nullopt for a constraint
  std::vector<AtomId> positive;
  std::vector<AtomId> negative;

  friend bool operator==(const GroundRule&, const GroundRule&) = default;
};

/// Ground `lower { e1; ...; en } upper`. Elements are sorted by their
/// arguments in term order.
struct ChoiceGroup {
  int lower = 1;
  int upper = 1;
  std::vector<AtomId> elements;
};

/// Variable-free program over an interned atom table.
class GroundProgram {
 public:
  std::vector<GroundRule> rules;
  std::vector<ChoiceGroup> choices;
  std::vector<AtomId> externals;

  std::size_t atom_count() const { return atoms_.size(); }
  const Atom& atom(AtomId id) const { return atoms_.at(id); }
  std::optional<AtomId> find(const Atom& a) const;
  AtomId intern(const Atom& a);
  bool has_constraints() const;

 private:
  std::vector<Atom> atoms_;
  std::unordered_map<std::string, AtomId> index_;
};

struct GroundOptions {
  /// Atoms that may be asserted at solve time (e.g. request facts). They
  /// count as possibly true during grounding and have no defining rules.
  std::vector<Atom> externals;
};

/// Instantiates every rule over the atoms that can possibly be derived,
/// evaluating comparisons and dropping negative literals on atoms that can
/// never hold. Throws Error for unsafe rules and choice rules with a body or
/// a non-fact generator.
GroundProgram ground(const LogicProgram& p, const GroundOptions& options = {});

struct AcyclicityReport {
  bool acyclic = false;
  std::vector<int> level;      // per atom, ≥ 1, when acyclic
  std::vector<AtomId> cycle;   // atoms of one dependency cycle otherwise
};

/// Longest-path layering of the dependency graph over positive and negative
/// edges. Atoms without defining rules, and facts, get level 1.
AcyclicityReport check_acyclic(const GroundProgram& g);

/// Sorted atom ids.
struct AnswerSet {
  std::vector<AtomId> atoms;

  bool contains(AtomId id) const;
  friend bool operator==(const AnswerSet&, const AnswerSet&) = default;
  friend auto operator<=>(const AnswerSet&, const AnswerSet&) = default;
};

std::vector<std::string> to_strings(const GroundProgram& g, const AnswerSet& s);

/// Fixpoint of an acyclic ground program, prepared once and reusable for
/// many sets of asserted atoms. Constraints and choices are ignored here.
/// Immutable after construction; safe to share across threads.
class Solver {
 public:
  explicit Solver(const GroundProgram& g);

  /// Unique answer set of the normal rules plus `assumed` as facts.
  AnswerSet solve(std::span<const AtomId> assumed = {}) const;
  /// Same, as a dense truth vector.
  std::vector<char> truth(std::span<const AtomId> assumed = {}) const;
  bool violates_constraint(const std::vector<char>& truth) const;

  const GroundProgram& program() const { return *g_; }

 private:
  const GroundProgram* g_;
  std::vector<AtomId> order_;                      // atoms by level
  std::vector<std::vector<std::size_t>> defining_;  // rule indices per head
};

/// Unique answer set. Throws Error if the program is cyclic or has choices
/// or constraints.
AnswerSet solve_unique(const GroundProgram& g);

/// Number of selections in the choice product, saturating at SIZE_MAX.
std::size_t selection_count(const GroundProgram& g);

/// Answer sets of an acyclic program with `1 { ... } 1` choices and
/// constraints, in lexicographic selection order (first group most
/// significant, elements in group order). Stops after
/// `limit` models.
std::vector<AnswerSet> enumerate_models(const GroundProgram& g, std::size_t limit,
                                        Execution exec = Execution::serial);

}  // namespace xacml::lp
