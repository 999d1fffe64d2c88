#pragma once

// Grounding semantics and the ground MPE engines used as reference solvers.

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "uarmpe/model.hpp"

namespace uarmpe {

struct GroundFactor {
  std::vector<GroundAtom> atoms;
  std::shared_ptr<const PotentialTable> table;
};

/// Calls `visit` with the constant bound to each variable of `g`, for every
/// legal ground substitution in lexicographic order (variables in declaration
/// order, constants by index).
void for_each_ground_substitution(const Model& m, const Parfactor& g,
                                  const std::function<void(std::span<const ConstId>)>& visit);

std::vector<GroundFactor> enumerate_groundings(const Model& m, const Parfactor& g);

GroundAtom ground_atom(const Model& m, const Atom& a, std::span<const ConstId> binding);

/// rv(m) in canonical order.
std::vector<GroundAtom> random_variables(const Model& m);

/// Natural log of the Eq. 1 product of all ground factor weights. Throws
/// std::out_of_range naming the atom when `v` misses a random variable.
double model_weight(const Model& m, const Assignment& v);

struct EngineOptions {
  /// Largest assignment space brute force will enumerate.
  double enumeration_budget = 16777216.0;  // 2^24
  /// Largest intermediate table variable elimination will allocate.
  double max_table_entries = 4194304.0;  // 2^22
  /// Worker threads for brute force; 0 picks hardware concurrency.
  unsigned threads = 0;
};

struct MpeStats {
  double elapsed_ms = 0.0;
  std::size_t eliminated = 0;
  std::size_t random_variables = 0;
  std::size_t ground_factors = 0;
};

struct MpeResult {
  Assignment assignment;
  double log_weight = 0.0;
  std::string engine;
  MpeStats stats;
};

/// Exact maximiser by enumeration; ties go to the lexicographically smallest
/// assignment over rv(m) in canonical order.
MpeResult brute_force_mpe(const Model& m, const EngineOptions& opts = {});

/// Exact max-product variable elimination on the ground network with a
/// min-degree ordering; the argmax is recovered by back-substitution, each
/// variable taking its smallest maximising value.
MpeResult ve_max_product(const Model& m, const EngineOptions& opts = {});

/// Largest table (in entries) that ve_max_product would build on `m`. The
/// simulation stops at the first table above `stop_above`.
double estimate_ve_table_size(const Model& m, double stop_above = std::numeric_limits<double>::infinity());

}  // namespace uarmpe
