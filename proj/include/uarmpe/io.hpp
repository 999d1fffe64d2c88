#pragma once

// Model text format, JSON output of solve results and reduction maps.

#include <string>
#include <string_view>

#include "uarmpe/model.hpp"
#include "uarmpe/pipeline.hpp"
#include "uarmpe/uar.hpp"

namespace uarmpe {

/// Parses the model grammar:
///
///   domain Person = {alice, bob}        # or: domain Person = 3
///   predicate friends(Person, Person) range 2
///   parfactor {
///     vars: X:Person, Y:Person
///     constraint: X != Y                # optional
///     atoms: friends(X, Y)
///     table: [0.2, 0.8, exp(-800), 0.5]
///   }
///
/// Throws ParseError with line and column. Semantic checks beyond name
/// resolution, arity and table length are left to validate_model.
Model parse_model(std::string_view text);
Model load_model(const std::string& path);

/// Canonical text: declarations sorted by name, parfactors in order, weights
/// with 17 significant digits (exp(x) outside [1e-300, 1e300]).
std::string serialize_model(const Model& m);

/// Formats a linear weight given as a natural log.
std::string format_weight(double log_weight);

/// Ground atom text "p(a,b)" resolved against `m`.
GroundAtom parse_ground_atom(const Model& m, std::string_view text);

std::string solve_result_json(const Model& m, const SolveResult& r, int indent = 2);
std::string reduction_map_json(const ReductionMap& rm, int indent = 2);
ReductionMap reduction_map_from_json(std::string_view text);
std::string assignment_json(const Model& m, const Assignment& v, int indent = 2);
Assignment assignment_from_json(const Model& m, std::string_view text);

}  // namespace uarmpe
