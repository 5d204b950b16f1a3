#pragma once

#include "xacml/lp/program.hpp"
#include "xacml/model.hpp"

#include <optional>
#include <string_view>

namespace xacml::lp {

enum class Task { gap, conflict, reachability };

std::string_view to_string(Task t);
std::optional<Task> task_from_string(std::string_view name);

struct EmitOptions {
  /// Emit deny-overrides exactly as commonly printed: over algo(po, ...) with
  /// the doubled negative literal. Wrong on purpose; used to show that the
  /// differential check catches it.
  bool literal_deny_overrides = false;
};

/// Combining program for one algorithm. Rules are generic in the container
/// variable P and shared by every container using the algorithm.
LogicProgram transform_combining(CombiningAlgorithm alg, const EmitOptions& options = {});

/// Program for the whole store: value rules for every target element,
/// condition and component, the dec/3 and dec/4 bridges, comb/2 facts, the
/// domain relations and the combining programs of the algorithms in use.
LogicProgram transform_store(const PolicyStore& store, const AttributeDomains& dom,
                             const EmitOptions& options = {});

/// One fact per request fact.
LogicProgram transform_request(const Request& q);

/// transform_store ∪ transform_request, plus universe facts for request
/// constants when some condition needs them.
LogicProgram emit_eval(const PolicyStore& store, const AttributeDomains& dom, const Request& q,
                       const EmitOptions& options = {});

/// Store program joined with the request generator and property program of
/// the task. Throws Error when gap or conflict would need a value from an
/// empty category the store refers to.
LogicProgram emit_analysis(Task task, const PolicyStore& store, const AttributeDomains& dom,
                           const EmitOptions& options = {});

/// Categories referenced by a Match or by a condition predicate.
std::set<Category> referenced_categories(const PolicyStore& store);

/// val(id, token) as a ground atom.
Atom val_atom(std::string_view id, std::string_view value);

}  // namespace xacml::lp
