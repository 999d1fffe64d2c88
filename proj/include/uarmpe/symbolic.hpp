#pragma once

// Table-free parfactor skeletons and the uniform-assignment detection loop:
// overlap sets, effect scopes, anchoring, alignment and symbolic fusion.

#include <cstddef>
#include <string>
#include <vector>

#include "uarmpe/model.hpp"

namespace uarmpe {

struct Marker {
  enum class Kind : std::uint8_t { Anchored, Var, Const };
  Kind kind = Kind::Var;
  std::uint32_t id = 0;  // VarId or ConstId; unused when anchored

  static Marker anchored() { return {Kind::Anchored, 0}; }
  static Marker var(VarId v) { return {Kind::Var, v}; }
  static Marker constant(ConstId c) { return {Kind::Const, c}; }
  bool is_anchored() const { return kind == Kind::Anchored; }
  bool is_var() const { return kind == Kind::Var; }
  bool is_const() const { return kind == Kind::Const; }

  friend auto operator<=>(const Marker&, const Marker&) = default;
};

struct AnchoredAtom {
  PredicateId predicate = 0;
  std::vector<Marker> markers;

  std::size_t unanchored() const;
  friend auto operator<=>(const AnchoredAtom&, const AnchoredAtom&) = default;
  friend bool operator==(const AnchoredAtom&, const AnchoredAtom&) = default;
};

struct SymbolicParfactor {
  std::vector<LogicalVar> vars;
  Constraint constraint;
  std::vector<AnchoredAtom> atoms;
  /// Display label used by the stage trace, e.g. "φ1", "φ2′", "φf".
  std::string label;

  std::size_t unanchored() const;
};

using SymbolicModel = std::vector<SymbolicParfactor>;

/// The kept positions of a predicate: anchored or constant markers.
struct AnchoredFormula {
  PredicateId predicate = 0;
  std::vector<bool> kept;
  /// Representative atom and the variables it refers to.
  AnchoredAtom atom;
  std::vector<LogicalVar> vars;

  std::vector<std::size_t> kept_positions() const;
  std::vector<std::size_t> removed_positions() const;
  bool reduces() const { return !removed_positions().empty(); }
};

SymbolicParfactor to_symbolic(const Parfactor& g, std::string label = {});
SymbolicModel to_symbolic(const Model& m);

/// Variables at a position where the instances of a recurring predicate
/// disagree (variable vs variable or constant). Ascending ids.
std::vector<VarId> overlap_set(const SymbolicParfactor& g);

/// Union of the disequality components (variable-variable edges) touching `lo`.
std::vector<VarId> effect_scope(const SymbolicParfactor& g, const std::vector<VarId>& lo);

/// g ⊛ lo: effect-scope positions become anchored, those variables leave the
/// parfactor, the constraint is projected and duplicate atoms collapse.
SymbolicParfactor anchor(const SymbolicParfactor& g, const std::vector<VarId>& lo);

/// Anchors every parfactor over the variables sitting at positions anchored in
/// `g_star` for shared predicates, then re-aligns until every predicate has
/// one anchored mask across the model.
SymbolicModel align(const SymbolicModel& G, const SymbolicParfactor& g_star);
/// Re-alignment only: makes all instances of each predicate agree.
SymbolicModel align(const SymbolicModel& G);

/// Greedy fusion. The parfactor with more atoms (the first on ties) is the
/// base; shared predicates are matched by decreasing unanchored arity and the
/// other parfactor's variables are renamed into the base's namespace.
/// Throws InternalError when a shared predicate carries different masks.
SymbolicParfactor symbolic_fusion(const SymbolicParfactor& g1, const SymbolicParfactor& g2);

struct TraceStage {
  std::string title;
  std::vector<std::string> rows;  // "label : atoms | constraint"
};

struct DetectionResult {
  std::vector<AnchoredFormula> formulas;
  SymbolicModel terminal;
  std::vector<TraceStage> trace;
  std::size_t anchorings = 0;
  std::size_t fusions = 0;
};

/// Repeats anchoring of overlap sets, alignment and fusion of rv-sharing
/// parfactors until no overlap and no sharing remain. Tables are never read.
DetectionResult detect_uniform_assignments(const Model& m);

std::string format_marker(const Model& m, const SymbolicParfactor& g, const AnchoredAtom& a, std::size_t position);
std::string format_anchored_atom(const Model& m, const SymbolicParfactor& g, const AnchoredAtom& a);
std::string format_symbolic_parfactor(const Model& m, const SymbolicParfactor& g);
std::string format_formula(const Model& m, const AnchoredFormula& f);

/// Renders stages as aligned text, one parfactor per line.
std::string format_trace(const std::vector<TraceStage>& trace);

}  // namespace uarmpe
