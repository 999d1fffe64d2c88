#pragma once

// End-to-end MPE: shatter, detect, reduce, solve, expand and verify.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "uarmpe/ground.hpp"
#include "uarmpe/model.hpp"
#include "uarmpe/uar.hpp"

namespace uarmpe {

enum class Engine { Brute, Ve };

std::string engine_name(Engine e);
/// Accepts "brute" and "ve"; throws ValidationError otherwise.
Engine parse_engine(const std::string& name);

struct SolveOptions {
  Engine engine = Engine::Ve;
  bool use_uar = true;
  /// Unary boolean predicate to condition on (original or reduced name).
  std::optional<std::string> condition;
  /// With UAR and ve: condition on an eligible predicate of the simplified
  /// model when its ground network would exceed the table budget.
  bool auto_condition = true;
  EngineOptions engine_options;
};

struct SolveStats {
  double detect_ms = 0.0;  // shattering and detection
  double reduce_ms = 0.0;
  double solve_ms = 0.0;
  double total_ms = 0.0;
  std::size_t eliminated = 0;
  std::size_t sub_solves = 0;
  std::size_t random_variables = 0;  // of the model handed to the engine
  std::string conditioned_on;
};

/// Values of one reduced predicate, keyed by the constants at its kept positions.
struct LiftedBlock {
  std::string predicate;  // name in the input model
  std::vector<std::size_t> kept_positions;
  std::vector<std::pair<std::vector<std::string>, std::uint32_t>> blocks;
};

struct SolveResult {
  Assignment assignment;
  double log_weight = 0.0;
  std::string engine;
  SolveStats stats;
  ReductionMap map;
  std::vector<LiftedBlock> lifted;
};

SolveResult solve(const Model& m, const SolveOptions& opts = {});

/// Predicates `conditional_ua_solve` accepts for `m`: unary, range 2, and no
/// constant of their domain written anywhere in the model.
bool can_condition_on(const Model& m, PredicateId p);

/// Sub-model for one split size: the target's domain becomes a block of the
/// first k constants (target fixed to 0) and one of the rest (fixed to 1).
Model conditioned_submodel(const Model& m, PredicateId target, std::size_t k);

/// Conditions on every count k of target atoms set to 0, solving each
/// sub-model with UAR. Ties go to the smaller k.
SolveResult conditional_ua_solve(const Model& m, const std::string& target, const SolveOptions& opts = {});

}  // namespace uarmpe
