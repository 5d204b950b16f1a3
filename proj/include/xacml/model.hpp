#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace xacml {

// ── Value lattices ───────────────────────────────────────────────────────────

enum class Category { subject, action, resource, environment };

inline constexpr std::array<Category, 4> kCategories = {
    Category::subject, Category::action, Category::resource, Category::environment};

std::string_view to_string(Category c);
std::optional<Category> category_from_string(std::string_view name);
inline std::size_t index_of(Category c) { return static_cast<std::size_t>(c); }

enum class MatchValue { match, no_match };
enum class CondValue { truth, falsity };
enum class Decision { permit, deny, not_applicable };

enum class Effect { permit, deny };

enum class CombiningAlgorithm {
  permit_overrides,
  deny_overrides,
  first_applicable,
  only_one_applicable,
};

inline constexpr std::array<CombiningAlgorithm, 4> kAlgorithms = {
    CombiningAlgorithm::permit_overrides, CombiningAlgorithm::deny_overrides,
    CombiningAlgorithm::first_applicable, CombiningAlgorithm::only_one_applicable};

// Short tokens used by both the policy DSL and the logic-program encoding:
// po/do/fa/ooa, p/d/na, m/nm, t/f.
std::string_view token(CombiningAlgorithm a);
std::string_view token(Decision d);
std::string_view token(MatchValue v);
std::string_view token(CondValue v);
std::string_view token(Effect e);
std::optional<CombiningAlgorithm> algorithm_from_token(std::string_view tok);
std::optional<Decision> decision_from_token(std::string_view tok);

/// Long human-readable form: permit, deny, not_applicable.
std::string_view to_string(Decision d);

inline Decision to_decision(Effect e) {
  return e == Effect::permit ? Decision::permit : Decision::deny;
}

// ── Errors ───────────────────────────────────────────────────────────────────

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ── Policy components ────────────────────────────────────────────────────────

struct Match {
  Category category = Category::subject;
  std::string value;

  friend bool operator==(const Match&, const Match&) = default;
  friend auto operator<=>(const Match&, const Match&) = default;
};

struct AllOf {
  std::vector<Match> matches;
  friend bool operator==(const AllOf&, const AllOf&) = default;
};

struct AnyOf {
  std::vector<AllOf> allofs;
  friend bool operator==(const AnyOf&, const AnyOf&) = default;
};

/// Conjunction of AnyOf elements. The empty list is the Null target.
struct Target {
  std::vector<AnyOf> anyofs;

  bool is_null() const { return anyofs.empty(); }
  friend bool operator==(const Target&, const Target&) = default;
};

/// Argument of a condition predicate: a variable (upper-case initial) or a
/// constant token.
struct CondTerm {
  bool is_variable = false;
  std::string name;

  static CondTerm variable(std::string n) { return {true, std::move(n)}; }
  static CondTerm constant(std::string n) { return {false, std::move(n)}; }
  friend bool operator==(const CondTerm&, const CondTerm&) = default;
};

/// Boolean formula over predicate leaves. Variables are existentially
/// quantified over the finite constant universe.
struct Condition {
  enum class Kind { always_true, predicate, all, any, negation, equal, not_equal };

  Kind kind = Kind::always_true;
  std::string predicate;          // predicate
  std::vector<CondTerm> args;     // predicate arguments; both sides of (not_)equal
  std::vector<Condition> operands;  // all/any: two or more, negation: exactly one

  static Condition truth() { return {}; }
  static Condition pred(std::string name, std::vector<CondTerm> args);
  static Condition conj(std::vector<Condition> ops);
  static Condition disj(std::vector<Condition> ops);
  static Condition negate(Condition op);
  static Condition eq(CondTerm lhs, CondTerm rhs);
  static Condition ne(CondTerm lhs, CondTerm rhs);

  bool is_true() const { return kind == Kind::always_true; }
  friend bool operator==(const Condition&, const Condition&) = default;
};

/// Variables of a condition in first-occurrence order.
std::vector<std::string> variables_of(const Condition& c);
/// Constants of a condition (predicate arguments and comparison sides).
std::set<std::string> constants_of(const Condition& c);
/// Variables that occur in some predicate leaf not under a negation.
std::set<std::string> positively_bound(const Condition& c);

struct Rule {
  std::string id;
  Effect effect = Effect::permit;
  Target target;
  Condition condition;
  friend bool operator==(const Rule&, const Rule&) = default;
};

struct Policy {
  std::string id;
  Target target;
  std::vector<std::string> children;  // Rule ids, order significant
  CombiningAlgorithm algorithm = CombiningAlgorithm::permit_overrides;
  friend bool operator==(const Policy&, const Policy&) = default;
};

struct PolicySet {
  std::string id;
  Target target;
  std::vector<std::string> children;  // Policy or PolicySet ids
  CombiningAlgorithm algorithm = CombiningAlgorithm::permit_overrides;
  friend bool operator==(const PolicySet&, const PolicySet&) = default;
};

using Component = std::variant<PolicySet, Policy, Rule>;

const std::string& id_of(const Component& c);
const Target& target_of(const Component& c);

// ── Requests and domains ─────────────────────────────────────────────────────

/// A ground fact. Attribute facts use the category name as predicate and have
/// exactly one argument; external-state facts are arbitrary named tuples.
struct Fact {
  std::string predicate;
  std::vector<std::string> args;

  static Fact attribute(Category c, std::string value);
  friend bool operator==(const Fact&, const Fact&) = default;
  friend auto operator<=>(const Fact&, const Fact&) = default;
};

struct Request {
  std::set<Fact> facts;

  Request() = default;
  Request(std::initializer_list<Fact> fs) : facts(fs) {}

  void add(Fact f) { facts.insert(std::move(f)); }
  bool contains(const Match& m) const;
  /// Attribute values of one category, in token order.
  std::vector<std::string> values(Category c) const;
  friend bool operator==(const Request&, const Request&) = default;
  friend auto operator<=>(const Request& a, const Request& b) { return a.facts <=> b.facts; }
};

struct AttributeDomains {
  std::array<std::vector<std::string>, 4> values;  // per category, declared order
  std::map<std::string, std::vector<std::vector<std::string>>> relations;

  const std::vector<std::string>& of(Category c) const { return values[index_of(c)]; }
  std::vector<std::string>& of(Category c) { return values[index_of(c)]; }
  bool declares(const Match& m) const;
  bool has_relation(std::string_view name) const;
  /// Tuple width of a relation, or nullopt for an empty/unknown relation.
  std::optional<std::size_t> arity(std::string_view name) const;
  /// Every constant mentioned in any category list or relation tuple.
  std::set<std::string> constants() const;
  friend bool operator==(const AttributeDomains&, const AttributeDomains&) = default;
};

// ── Store ────────────────────────────────────────────────────────────────────

class StoreError : public Error {
 public:
  enum class Kind {
    empty,
    invalid_identifier,
    duplicate_identifier,
    dangling_reference,
    wrong_child_kind,
    empty_children,
    multiple_parents,
    reference_cycle,
    root,
    undeclared_value,
    unknown_predicate,
    unsafe_condition,
  };

  StoreError(Kind kind, std::string component, std::string path, const std::string& message);

  Kind kind() const { return kind_; }
  const std::string& component() const { return component_; }
  /// Slash-separated ids from the root to the component (empty if detached).
  const std::string& path() const { return path_; }

 private:
  Kind kind_;
  std::string component_;
  std::string path_;
};

struct StoreOptions {
  /// Reject Match values absent from the domains. Disable to model targets
  /// that can never match (e.g. retired subjects).
  bool require_declared_values = true;
};

/// Immutable tree of identified components rooted at one PolicySet.
/// Components are held in pre-order from the root.
class PolicyStore {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::span<const Component> components() const { return components_; }
  std::size_t size() const { return components_.size(); }
  const Component& at(std::size_t index) const { return components_.at(index); }
  const Component& at(std::string_view id) const;
  const Component* find(std::string_view id) const;
  std::optional<std::size_t> index_of(std::string_view id) const;

  const PolicySet& root() const { return std::get<PolicySet>(components_.front()); }
  std::size_t parent(std::size_t index) const { return parents_.at(index); }
  std::span<const std::size_t> children(std::size_t index) const { return children_.at(index); }
  /// Position among the parent's children, 1-based; 0 for the root.
  std::size_t position(std::size_t index) const { return positions_.at(index); }
  std::string path(std::size_t index) const;

  std::vector<std::size_t> rule_indices() const;

  /// Copy without the given component. Containers left empty are removed as
  /// well; removing the root (or emptying it) throws.
  PolicyStore without(std::string_view id) const;

  friend bool operator==(const PolicyStore& a, const PolicyStore& b) {
    return a.components_ == b.components_;
  }

 private:
  friend PolicyStore build_store(std::vector<Component>, const AttributeDomains*, StoreOptions);

  std::vector<Component> components_;
  std::vector<std::size_t> parents_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> positions_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Resolve references, verify the tree invariants and (when domains are given)
/// check every Match value and condition predicate against them.
PolicyStore build_store(std::vector<Component> components,
                        const AttributeDomains* domains = nullptr,
                        StoreOptions options = {});

/// Names that collide with the logic-program encoding and may not be used
/// as component ids or relation names.
bool is_reserved_name(std::string_view name);
bool is_identifier(std::string_view name);

}  // namespace xacml
