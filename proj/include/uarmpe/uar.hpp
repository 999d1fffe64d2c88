#pragma once

// Uniform assignment reduction: arity reduction, exponentiated parfactors,
// the simplification driver and assignment expansion.

#include <cstddef>
#include <string>
#include <vector>

#include "uarmpe/model.hpp"
#include "uarmpe/symbolic.hpp"

namespace uarmpe {

struct PredicateReduction {
  std::string original;
  std::string reduced;
  std::vector<std::size_t> kept;
  std::vector<std::size_t> removed;
};

struct ParfactorReduction {
  std::size_t index = 0;  // parfactor position in the input model
  double exponent = 1.0;
  /// e.g. "|X|·|Y|", "|X|−1", or a plain number when no product form fits.
  std::string exponent_expr;
  std::vector<std::string> removed_vars;
};

struct ReductionMap {
  std::vector<PredicateReduction> predicates;
  std::vector<ParfactorReduction> parfactors;

  bool empty() const { return predicates.empty() && parfactors.empty(); }
  const PredicateReduction* find(const std::string& original) const;
};

/// α ↓ α*: drops the positions of `a` that are not kept by `f`, using
/// predicate `reduced`. Atoms of other predicates, and formulas that keep
/// every position, leave `a` unchanged.
Atom arity_reduce(const Atom& a, const AnchoredFormula& f, PredicateId reduced);

struct ParfactorUar {
  Parfactor parfactor;
  double exponent = 1.0;
  std::vector<VarId> removed;  // ids in the input parfactor
};

/// g ↓ α*: L' = LV(A'), C' = C restricted to L', table raised to
/// |(L ∖ L') : C| counted with L' bound. Identical reduced atoms share one
/// axis (diagonal of the table). Throws NonNormalForm for binding-dependent counts.
ParfactorUar uar_parfactor(const Model& m, const Parfactor& g, const AnchoredFormula& f, PredicateId reduced);

struct SimplifyResult {
  Model model;
  DetectionResult detection;
  ReductionMap map;
  /// Stage rows of the detection plus the final reduction row.
  std::vector<TraceStage> trace;
  double detect_ms = 0.0;
  double reduce_ms = 0.0;
};

/// Detection followed by reduction for every formula with removable
/// positions. Requires a completely shattered model.
SimplifyResult simplify(const Model& m);

/// Builds an assignment of `original` from one of the simplified model:
/// reduced atoms broadcast over their removed positions, others are copied.
Assignment expand_assignment(const Model& original, const ReductionMap& rm, const Assignment& v_prime);

/// Symbolic exponent of removing `removed` from `g` with the other variables bound.
std::string exponent_expression(const Model& m, const Parfactor& g, const std::vector<VarId>& removed, double value);

}  // namespace uarmpe
