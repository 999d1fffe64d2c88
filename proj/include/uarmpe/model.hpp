#pragma once

// Parfactor models: domains, predicates, atoms over logical variables and
// constants, disequality constraints and log-space potential tables.

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace uarmpe {

using DomainId = std::uint32_t;
using PredicateId = std::uint32_t;
using VarId = std::uint32_t;    // index into the owning parfactor's variable list
using ConstId = std::uint32_t;  // index into the owning domain

struct Domain {
  std::string name;
  std::size_t size = 0;
  /// Explicit constant names; empty means constants are auto-named.
  std::vector<std::string> names;

  std::string constant_name(ConstId c) const;
  std::optional<ConstId> find_constant(std::string_view name) const;
  bool auto_named() const { return names.empty(); }
};

struct Predicate {
  std::string name;
  std::vector<DomainId> args;
  std::uint32_t range = 2;

  std::size_t arity() const { return args.size(); }
};

struct Term {
  enum class Kind : std::uint8_t { Var, Const };
  Kind kind = Kind::Var;
  std::uint32_t id = 0;

  static Term var(VarId v) { return {Kind::Var, v}; }
  static Term constant(ConstId c) { return {Kind::Const, c}; }
  bool is_var() const { return kind == Kind::Var; }
  bool is_const() const { return kind == Kind::Const; }

  friend auto operator<=>(const Term&, const Term&) = default;
};

struct Atom {
  PredicateId predicate = 0;
  std::vector<Term> args;

  friend auto operator<=>(const Atom&, const Atom&) = default;
  friend bool operator==(const Atom&, const Atom&) = default;
};

struct LogicalVar {
  std::string name;
  DomainId domain = 0;

  friend bool operator==(const LogicalVar&, const LogicalVar&) = default;
};

/// `lhs != rhs`; lhs is always a variable, rhs a variable with a larger id or a constant.
struct Disequality {
  Term lhs;
  Term rhs;

  friend auto operator<=>(const Disequality&, const Disequality&) = default;
};

/// Conjunction of pairwise disequalities. Kept sorted and duplicate-free.
class Constraint {
 public:
  Constraint() = default;

  /// Adds `a != b`. Trivially true pairs (two distinct constants) are dropped;
  /// `t != t` marks the constraint contradictory.
  void add(Term a, Term b);
  bool contains(Term a, Term b) const;
  bool contradictory() const { return contradictory_; }
  void set_contradictory() { contradictory_ = true; }
  bool empty() const { return pairs_.empty() && !contradictory_; }
  const std::vector<Disequality>& pairs() const { return pairs_; }

  /// Variables adjacent to `v` through variable-variable disequalities.
  std::vector<VarId> var_neighbors(VarId v) const;
  /// Constants `c` with `v != c`.
  std::vector<ConstId> excluded_constants(VarId v) const;

  friend bool operator==(const Constraint&, const Constraint&) = default;

 private:
  std::vector<Disequality> pairs_;
  bool contradictory_ = false;
};

/// Dense log-space table; first axis is the most significant index.
struct PotentialTable {
  std::vector<std::uint32_t> axes;
  std::vector<double> log_weights;

  PotentialTable() = default;
  PotentialTable(std::vector<std::uint32_t> axes, std::vector<double> log_weights);

  static PotentialTable from_linear(std::vector<std::uint32_t> axes, std::span<const double> weights);

  std::size_t size() const { return log_weights.size(); }
  std::size_t index(std::span<const std::uint32_t> values) const;
  double at(std::span<const std::uint32_t> values) const { return log_weights[index(values)]; }

  friend bool operator==(const PotentialTable&, const PotentialTable&) = default;
};

double to_log_weight(double linear);
double to_linear_weight(double log_weight);

struct Parfactor {
  std::vector<LogicalVar> vars;
  Constraint constraint;
  std::vector<Atom> atoms;
  std::shared_ptr<const PotentialTable> table;

  std::optional<VarId> find_var(std::string_view name) const;
  DomainId var_domain(VarId v) const { return vars[v].domain; }
  /// Variable ids appearing in at least one atom, ascending.
  std::vector<VarId> atom_vars() const;
};

struct Model {
  std::vector<Domain> domains;
  std::vector<Predicate> predicates;
  std::vector<Parfactor> parfactors;

  std::optional<DomainId> find_domain(std::string_view name) const;
  std::optional<PredicateId> find_predicate(std::string_view name) const;
  PredicateId add_predicate(Predicate p);
  DomainId add_domain(Domain d);
  /// Domain of the term at `position` of `atom`.
  DomainId position_domain(const Atom& atom, std::size_t position) const {
    return predicates[atom.predicate].args[position];
  }
};

struct GroundAtom {
  std::string predicate;
  std::vector<ConstId> args;

  friend auto operator<=>(const GroundAtom&, const GroundAtom&) = default;
  friend bool operator==(const GroundAtom&, const GroundAtom&) = default;
};

/// Total map from ground atoms to value indices, ordered canonically
/// (predicate name, then constant tuple).
using Assignment = std::map<GroundAtom, std::uint32_t>;

/// Maps variables of one parfactor to terms over the same parfactor's variables.
using Substitution = std::map<VarId, Term>;

struct ValidationFinding {
  enum class Severity { Error, Warning };
  Severity severity;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationFinding> findings;

  bool clean() const;
  std::size_t error_count() const;
  std::size_t warning_count() const;
  std::string to_string() const;
};

ValidationReport validate_model(const Model& m);
/// Throws ValidationError listing the hard errors, if any.
void require_valid(const Model& m);

/// Rewrites atoms and constraint; variables bound to constants or renamed onto
/// other variables are dropped and the remaining ids compacted in order.
Parfactor apply_substitution(const Parfactor& g, const Substitution& theta, std::span<const Domain> domains);

/// Number of legal ground substitutions of `counted` under `c`, every other
/// variable of `vars` being bound to an arbitrary legal value. Throws
/// NonNormalForm when that number depends on the binding.
double count_groundings(std::span<const LogicalVar> vars, std::span<const VarId> counted, const Constraint& c,
                        std::span<const Domain> domains);

/// |L : C| for every variable of the parfactor.
double count_groundings(const Parfactor& g, std::span<const Domain> domains);

/// Retains pairs whose variable endpoints all lie in `keep`.
Constraint project_constraint(const Constraint& c, std::span<const VarId> keep);

/// Drops variables not in `keep` (which must not occur in atoms) and compacts ids.
Parfactor restrict_vars(const Parfactor& g, std::span<const VarId> keep);

std::string format_term(const Model& m, const Parfactor& g, const Atom& a, std::size_t position);
std::string format_atom(const Model& m, const Parfactor& g, const Atom& a);
std::string format_constraint(const Model& m, const Parfactor& g);
std::string format_parfactor(const Model& m, const Parfactor& g);
std::string format_ground_atom(const Model& m, const GroundAtom& a);

/// Structural equality by names: domains, predicates (order-insensitive) and
/// parfactors in order, tables compared within `rel_tol` in linear space.
bool structurally_equal(const Model& a, const Model& b, double rel_tol = 0.0);

}  // namespace uarmpe
