#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "uarmpe/model.hpp"

namespace uarmpe {

/// Fresh predicate symbols introduced by shattering. Renamed predicates keep
/// the arity, argument domains and range of the original, so translation is a
/// pure change of predicate name.
struct PredicateRenameMap {
  struct Cell {
    std::string original;
    std::string renamed;
    /// A representative atom of the cell, e.g. "p(X, X)" or "p(X, Y) | X ≠ Y".
    std::string pattern;
  };
  std::vector<Cell> cells;

  bool identity() const { return cells.empty(); }
  /// Original predicate name of `name` (itself when not renamed).
  std::string original_of(const std::string& name) const;

  /// Translates an assignment over an original model onto the shattered model's rvs.
  Assignment to_shattered(const Model& shattered, const Assignment& original) const;
  /// Translates a shattered assignment back; throws ConsistencyFailure when two
  /// cells disagree on one original ground atom.
  Assignment to_original(const Assignment& shattered) const;
};

struct ShatterOptions {
  std::size_t split_budget = 10000;
};

struct ShatterResult {
  Model model;
  PredicateRenameMap renames;
  std::size_t splits = 0;
};

/// Splits parfactors until all atom rv-sets are pairwise disjoint or equal,
/// then gives every predicate with several cells one fresh symbol per cell
/// (`name__i`, discovery order). Parfactors without legal groundings are dropped.
ShatterResult shatter(const Model& m, const ShatterOptions& opts = {});

/// Symbolic check that every pair of atoms is disjoint or equal.
bool is_completely_shattered(const Model& m);

/// Explicit check by rv enumeration (small domains only): atoms with equal
/// rv sets share a predicate and all others are disjoint, with names mapped
/// back through `renames`.
bool verify_shattered_by_enumeration(const Model& shattered, const PredicateRenameMap& renames);

}  // namespace uarmpe
