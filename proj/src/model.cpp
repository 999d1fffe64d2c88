#include "uarmpe/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "uarmpe/errors.hpp"

namespace uarmpe {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Domain

std::string Domain::constant_name(ConstId c) const {
  if (!names.empty()) return names.at(c);
  return lowercase(name) + std::to_string(c);
}

std::optional<ConstId> Domain::find_constant(std::string_view n) const {
  if (!names.empty()) {
    auto it = std::find(names.begin(), names.end(), n);
    if (it == names.end()) return std::nullopt;
    return static_cast<ConstId>(it - names.begin());
  }
  const std::string prefix = lowercase(name);
  if (n.size() <= prefix.size() || n.substr(0, prefix.size()) != prefix) return std::nullopt;
  const std::string_view digits = n.substr(prefix.size());
  if (digits.size() > 1 && digits.front() == '0') return std::nullopt;
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || value >= size) return std::nullopt;
  return static_cast<ConstId>(value);
}

// ---------------------------------------------------------------------------
// Constraint

void Constraint::add(Term a, Term b) {
  if (a.is_const() && b.is_const()) {
    if (a.id == b.id) contradictory_ = true;
    return;
  }
  if (a == b) {
    contradictory_ = true;
    return;
  }
  if (a.is_const()) std::swap(a, b);
  if (b.is_var() && b.id < a.id) std::swap(a, b);
  Disequality d{a, b};
  auto it = std::lower_bound(pairs_.begin(), pairs_.end(), d);
  if (it == pairs_.end() || *it != d) pairs_.insert(it, d);
}

bool Constraint::contains(Term a, Term b) const {
  if (a.is_const() && b.is_const()) return a.id != b.id;
  if (a.is_const()) std::swap(a, b);
  if (b.is_var() && b.id < a.id) std::swap(a, b);
  return std::binary_search(pairs_.begin(), pairs_.end(), Disequality{a, b});
}

std::vector<VarId> Constraint::var_neighbors(VarId v) const {
  std::vector<VarId> out;
  for (const auto& d : pairs_) {
    if (!d.rhs.is_var()) continue;
    if (d.lhs.id == v) out.push_back(d.rhs.id);
    if (d.rhs.id == v) out.push_back(d.lhs.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ConstId> Constraint::excluded_constants(VarId v) const {
  std::vector<ConstId> out;
  for (const auto& d : pairs_)
    if (d.rhs.is_const() && d.lhs.id == v) out.push_back(d.rhs.id);
  return out;
}

// ---------------------------------------------------------------------------
// PotentialTable

PotentialTable::PotentialTable(std::vector<std::uint32_t> ax, std::vector<double> lw)
    : axes(std::move(ax)), log_weights(std::move(lw)) {
  std::size_t expected = 1;
  for (auto a : axes) expected *= a;
  if (expected != log_weights.size())
    throw ValidationError("potential table has " + std::to_string(log_weights.size()) + " entries, expected " +
                          std::to_string(expected));
}

PotentialTable PotentialTable::from_linear(std::vector<std::uint32_t> ax, std::span<const double> weights) {
  std::vector<double> lw;
  lw.reserve(weights.size());
  for (double w : weights) lw.push_back(to_log_weight(w));
  return PotentialTable(std::move(ax), std::move(lw));
}

std::size_t PotentialTable::index(std::span<const std::uint32_t> values) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < axes.size(); ++i) idx = idx * axes[i] + values[i];
  return idx;
}

double to_log_weight(double linear) {
  if (!(linear >= 0.0) || std::isinf(linear)) throw ValidationError("weights must be finite and non-negative");
  if (linear == 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(linear);
}

double to_linear_weight(double log_weight) { return std::exp(log_weight); }

// ---------------------------------------------------------------------------
// Parfactor / Model

std::optional<VarId> Parfactor::find_var(std::string_view name) const {
  for (VarId v = 0; v < vars.size(); ++v)
    if (vars[v].name == name) return v;
  return std::nullopt;
}

std::vector<VarId> Parfactor::atom_vars() const {
  std::vector<bool> seen(vars.size(), false);
  for (const auto& a : atoms)
    for (const auto& t : a.args)
      if (t.is_var()) seen[t.id] = true;
  std::vector<VarId> out;
  for (VarId v = 0; v < vars.size(); ++v)
    if (seen[v]) out.push_back(v);
  return out;
}

std::optional<DomainId> Model::find_domain(std::string_view name) const {
  for (DomainId d = 0; d < domains.size(); ++d)
    if (domains[d].name == name) return d;
  return std::nullopt;
}

std::optional<PredicateId> Model::find_predicate(std::string_view name) const {
  for (PredicateId p = 0; p < predicates.size(); ++p)
    if (predicates[p].name == name) return p;
  return std::nullopt;
}

PredicateId Model::add_predicate(Predicate p) {
  if (find_predicate(p.name)) throw ValidationError("duplicate predicate '" + p.name + "'");
  predicates.push_back(std::move(p));
  return static_cast<PredicateId>(predicates.size() - 1);
}

DomainId Model::add_domain(Domain d) {
  if (find_domain(d.name)) throw ValidationError("duplicate domain '" + d.name + "'");
  domains.push_back(std::move(d));
  return static_cast<DomainId>(domains.size() - 1);
}

// ---------------------------------------------------------------------------
// Validation

bool ValidationReport::clean() const { return error_count() == 0; }

std::size_t ValidationReport::error_count() const {
  return static_cast<std::size_t>(std::count_if(findings.begin(), findings.end(), [](const auto& f) {
    return f.severity == ValidationFinding::Severity::Error;
  }));
}

std::size_t ValidationReport::warning_count() const { return findings.size() - error_count(); }

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& f : findings)
    os << (f.severity == ValidationFinding::Severity::Error ? "error: " : "warning: ") << f.message << '\n';
  return os.str();
}

ValidationReport validate_model(const Model& m) {
  ValidationReport report;
  auto error = [&](std::string msg) {
    report.findings.push_back({ValidationFinding::Severity::Error, std::move(msg)});
  };
  auto warning = [&](std::string msg) {
    report.findings.push_back({ValidationFinding::Severity::Warning, std::move(msg)});
  };

  std::set<std::string> seen_names;
  for (const auto& d : m.domains) {
    if (!seen_names.insert(d.name).second) error("duplicate domain '" + d.name + "'");
    if (d.size < 1) error("domain '" + d.name + "' is empty");
    if (!d.names.empty()) {
      if (d.names.size() != d.size) error("domain '" + d.name + "' size disagrees with its constant list");
      std::set<std::string> consts(d.names.begin(), d.names.end());
      if (consts.size() != d.names.size()) error("domain '" + d.name + "' has duplicate constants");
    }
  }
  seen_names.clear();
  for (const auto& p : m.predicates) {
    if (!seen_names.insert(p.name).second) error("duplicate predicate '" + p.name + "'");
    if (p.range < 2) error("predicate '" + p.name + "' has range " + std::to_string(p.range) + " < 2");
    for (auto d : p.args)
      if (d >= m.domains.size()) error("predicate '" + p.name + "' refers to an unknown domain");
  }

  for (std::size_t gi = 0; gi < m.parfactors.size(); ++gi) {
    const auto& g = m.parfactors[gi];
    const std::string where = "parfactor " + std::to_string(gi + 1);
    std::set<std::string> var_names;
    bool vars_ok = true;
    for (const auto& v : g.vars) {
      if (!var_names.insert(v.name).second) error(where + ": duplicate variable '" + v.name + "'");
      if (v.domain >= m.domains.size()) {
        error(where + ": variable '" + v.name + "' has an unknown domain");
        vars_ok = false;
      }
    }
    if (!vars_ok) continue;

    for (const auto& a : g.atoms) {
      if (a.predicate >= m.predicates.size()) {
        error(where + ": atom refers to an unknown predicate");
        continue;
      }
      const auto& p = m.predicates[a.predicate];
      if (a.args.size() != p.arity()) {
        error(where + ": atom of '" + p.name + "' has " + std::to_string(a.args.size()) + " arguments, predicate arity is " +
              std::to_string(p.arity()));
        continue;
      }
      for (std::size_t i = 0; i < a.args.size(); ++i) {
        const auto& t = a.args[i];
        if (p.args[i] >= m.domains.size()) continue;
        if (t.is_var()) {
          if (t.id >= g.vars.size())
            error(where + ": atom of '" + p.name + "' uses an undeclared variable");
          else if (g.vars[t.id].domain != p.args[i])
            error(where + ": variable '" + g.vars[t.id].name + "' of domain " + m.domains[g.vars[t.id].domain].name +
                  " at a " + m.domains[p.args[i]].name + " position of '" + p.name + "'");
        } else if (t.id >= m.domains[p.args[i]].size) {
          error(where + ": constant out of range for domain " + m.domains[p.args[i]].name);
        }
      }
    }

    if (g.constraint.contradictory()) error(where + ": constraint relates a term to itself");
    for (const auto& d : g.constraint.pairs()) {
      if (d.lhs.id >= g.vars.size() || (d.rhs.is_var() && d.rhs.id >= g.vars.size())) {
        error(where + ": constraint uses an undeclared variable");
        continue;
      }
      if (d.rhs.is_var()) {
        if (d.lhs.id == d.rhs.id) error(where + ": variable-self disequality on '" + g.vars[d.lhs.id].name + "'");
        if (g.vars[d.lhs.id].domain != g.vars[d.rhs.id].domain)
          error(where + ": cross-domain disequality " + g.vars[d.lhs.id].name + " != " + g.vars[d.rhs.id].name);
      } else if (d.rhs.id >= m.domains[g.vars[d.lhs.id].domain].size) {
        error(where + ": constant out of range in disequality on '" + g.vars[d.lhs.id].name + "'");
      }
    }

    if (!g.table) {
      error(where + ": missing potential table");
    } else {
      if (g.table->axes.size() != g.atoms.size()) {
        error(where + ": table has " + std::to_string(g.table->axes.size()) + " axes for " +
              std::to_string(g.atoms.size()) + " atoms");
      } else {
        for (std::size_t i = 0; i < g.atoms.size(); ++i)
          if (g.atoms[i].predicate < m.predicates.size() && g.table->axes[i] != m.predicates[g.atoms[i].predicate].range)
            error(where + ": table axis " + std::to_string(i) + " does not match the range of '" +
                  m.predicates[g.atoms[i].predicate].name + "'");
      }
      for (double w : g.table->log_weights)
        if (std::isnan(w) || w == std::numeric_limits<double>::infinity()) {
          error(where + ": table holds a non-finite weight");
          break;
        }
    }

    for (VarId v = 0; v < g.vars.size(); ++v) {
      const auto nb = g.constraint.var_neighbors(v);
      bool clique = true;
      for (std::size_t i = 0; i < nb.size() && clique; ++i)
        for (std::size_t j = i + 1; j < nb.size() && clique; ++j)
          if (!g.constraint.contains(Term::var(nb[i]), Term::var(nb[j]))) clique = false;
      if (!clique)
        warning(where + ": disequality neighbours of '" + g.vars[v].name +
                "' are not pairwise distinct; grounding counts over it may depend on bindings");
    }
  }
  return report;
}

void require_valid(const Model& m) {
  auto report = validate_model(m);
  if (!report.clean()) throw ValidationError(report.to_string());
}

// ---------------------------------------------------------------------------
// Substitution, projection

Parfactor apply_substitution(const Parfactor& g, const Substitution& theta, std::span<const Domain> domains) {
  const std::size_t n = g.vars.size();
  std::vector<Term> image(n);
  for (VarId v = 0; v < n; ++v) {
    auto it = theta.find(v);
    image[v] = it == theta.end() ? Term::var(v) : it->second;
    const auto& t = image[v];
    if (t.is_var()) {
      if (t.id >= n) throw DomainMismatch("substitution maps '" + g.vars[v].name + "' to an unknown variable");
      if (g.vars[t.id].domain != g.vars[v].domain)
        throw DomainMismatch("substitution maps '" + g.vars[v].name + "' onto '" + g.vars[t.id].name +
                             "' of a different domain");
    } else if (t.id >= domains[g.vars[v].domain].size) {
      throw DomainMismatch("substitution maps '" + g.vars[v].name + "' to a constant outside its domain");
    }
  }
  std::vector<bool> survives(n, false);
  for (const auto& t : image)
    if (t.is_var()) survives[t.id] = true;
  std::vector<VarId> remap(n, 0);
  Parfactor out;
  for (VarId v = 0; v < n; ++v)
    if (survives[v]) {
      remap[v] = static_cast<VarId>(out.vars.size());
      out.vars.push_back(g.vars[v]);
    }
  auto rewrite = [&](Term t) {
    if (t.is_const()) return t;
    Term im = image[t.id];
    return im.is_var() ? Term::var(remap[im.id]) : im;
  };
  for (const auto& a : g.atoms) {
    Atom b{a.predicate, {}};
    b.args.reserve(a.args.size());
    for (const auto& t : a.args) b.args.push_back(rewrite(t));
    out.atoms.push_back(std::move(b));
  }
  if (g.constraint.contradictory()) out.constraint.set_contradictory();
  for (const auto& d : g.constraint.pairs()) out.constraint.add(rewrite(d.lhs), rewrite(d.rhs));
  out.table = g.table;
  return out;
}

Constraint project_constraint(const Constraint& c, std::span<const VarId> keep) {
  auto kept = [&](VarId v) { return std::find(keep.begin(), keep.end(), v) != keep.end(); };
  Constraint out;
  if (c.contradictory()) out.set_contradictory();
  for (const auto& d : c.pairs())
    if (kept(d.lhs.id) && (d.rhs.is_const() || kept(d.rhs.id))) out.add(d.lhs, d.rhs);
  return out;
}

Parfactor restrict_vars(const Parfactor& g, std::span<const VarId> keep) {
  std::vector<bool> kept(g.vars.size(), false);
  for (auto v : keep) kept[v] = true;
  std::vector<VarId> remap(g.vars.size(), 0);
  Parfactor out;
  for (VarId v = 0; v < g.vars.size(); ++v)
    if (kept[v]) {
      remap[v] = static_cast<VarId>(out.vars.size());
      out.vars.push_back(g.vars[v]);
    }
  auto rewrite = [&](Term t) {
    if (t.is_const()) return t;
    if (!kept[t.id]) throw InternalError("restrict_vars: dropped variable still in use");
    return Term::var(remap[t.id]);
  };
  for (const auto& a : g.atoms) {
    Atom b{a.predicate, {}};
    for (const auto& t : a.args) b.args.push_back(rewrite(t));
    out.atoms.push_back(std::move(b));
  }
  if (g.constraint.contradictory()) out.constraint.set_contradictory();
  for (const auto& d : g.constraint.pairs())
    if (kept[d.lhs.id] && (d.rhs.is_const() || kept[d.rhs.id])) out.constraint.add(rewrite(d.lhs), rewrite(d.rhs));
  out.table = g.table;
  return out;
}

// ---------------------------------------------------------------------------
// Grounding counts
//
// Within one connected component of counted variables (variable-variable
// disequality edges), a ground substitution is described by which of the
// "named" values each variable takes (excluded constants and the values of
// bound neighbours) and by the equality pattern among the remaining fresh
// values. Summing over those patterns gives the exact count without touching
// individual constants, so the cost is independent of domain sizes. Every
// equality pattern of the bound neighbours is tried; a count that differs
// between patterns is binding dependent.

namespace {

struct ComponentCounter {
  const std::vector<std::vector<VarId>>& adj;
  const std::vector<VarId>& members;                // counted vars of the component
  const std::vector<std::vector<std::uint32_t>>& forbidden;  // per member, named values it must avoid
  std::size_t named = 0;
  double domain_size = 0;

  // class_of: for members assigned so far, class id; named values are 0..named-1,
  // fresh classes are named, named+1, ...
  double count(std::size_t i, std::vector<std::uint32_t>& class_of, std::uint32_t fresh_opened) const {
    if (i == members.size()) return 1.0;
    const VarId v = members[i];
    auto conflicts = [&](std::uint32_t cls) {
      for (std::size_t j = 0; j < i; ++j)
        if (class_of[j] == cls && std::binary_search(adj[v].begin(), adj[v].end(), members[j])) return true;
      return false;
    };
    double total = 0.0;
    for (std::uint32_t cls = 0; cls < named; ++cls) {
      if (std::binary_search(forbidden[i].begin(), forbidden[i].end(), cls) || conflicts(cls)) continue;
      class_of[i] = cls;
      total += count(i + 1, class_of, fresh_opened);
    }
    for (std::uint32_t f = 0; f < fresh_opened; ++f) {
      const std::uint32_t cls = static_cast<std::uint32_t>(named) + f;
      if (conflicts(cls)) continue;
      class_of[i] = cls;
      total += count(i + 1, class_of, fresh_opened);
    }
    const double mult = domain_size - static_cast<double>(named) - fresh_opened;
    if (mult > 0) {
      class_of[i] = static_cast<std::uint32_t>(named) + fresh_opened;
      total += mult * count(i + 1, class_of, fresh_opened + 1);
    }
    return total;
  }
};

}  // namespace

double count_groundings(std::span<const LogicalVar> vars, std::span<const VarId> counted, const Constraint& c,
                        std::span<const Domain> domains) {
  if (c.contradictory()) return 0.0;
  const std::size_t n = vars.size();
  std::vector<bool> is_counted(n, false);
  for (auto v : counted) is_counted.at(v) = true;
  std::vector<std::vector<VarId>> adj(n);
  std::vector<std::vector<ConstId>> excl(n);
  for (const auto& d : c.pairs()) {
    if (d.rhs.is_var()) {
      adj[d.lhs.id].push_back(d.rhs.id);
      adj[d.rhs.id].push_back(d.lhs.id);
    } else {
      excl[d.lhs.id].push_back(d.rhs.id);
    }
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());

  std::vector<bool> visited(n, false);
  double result = 1.0;
  std::vector<VarId> order(counted.begin(), counted.end());
  std::sort(order.begin(), order.end());
  for (VarId start : order) {
    if (visited[start]) continue;
    std::vector<VarId> comp{start};
    visited[start] = true;
    for (std::size_t i = 0; i < comp.size(); ++i)
      for (VarId u : adj[comp[i]])
        if (is_counted[u] && !visited[u]) {
          visited[u] = true;
          comp.push_back(u);
        }
    std::sort(comp.begin(), comp.end());

    std::vector<VarId> bound;
    std::vector<ConstId> consts;
    for (VarId v : comp) {
      for (VarId u : adj[v])
        if (!is_counted[u]) bound.push_back(u);
      consts.insert(consts.end(), excl[v].begin(), excl[v].end());
    }
    std::sort(bound.begin(), bound.end());
    bound.erase(std::unique(bound.begin(), bound.end()), bound.end());
    std::sort(consts.begin(), consts.end());
    consts.erase(std::unique(consts.begin(), consts.end()), consts.end());
    const double dsize = static_cast<double>(domains[vars[start].domain].size);

    // Enumerate labellings of bound neighbours: label < |consts| is that
    // constant, otherwise an "other" block distinct from all constants.
    std::optional<double> agreed;
    bool dependent = false;
    std::vector<std::uint32_t> label(bound.size(), 0);
    const std::uint32_t qn = static_cast<std::uint32_t>(consts.size());
    std::function<void(std::size_t, std::uint32_t)> enumerate = [&](std::size_t i, std::uint32_t others) {
      if (dependent) return;
      if (i == bound.size()) {
        if (static_cast<double>(qn + others) > dsize) return;
        std::vector<std::vector<std::uint32_t>> forbidden(comp.size());
        for (std::size_t k = 0; k < comp.size(); ++k) {
          const VarId v = comp[k];
          for (ConstId cst : excl[v])
            forbidden[k].push_back(static_cast<std::uint32_t>(std::lower_bound(consts.begin(), consts.end(), cst) -
                                                              consts.begin()));
          for (VarId u : adj[v])
            if (!is_counted[u]) {
              auto bi = std::lower_bound(bound.begin(), bound.end(), u) - bound.begin();
              forbidden[k].push_back(label[static_cast<std::size_t>(bi)]);
            }
          std::sort(forbidden[k].begin(), forbidden[k].end());
        }
        ComponentCounter counter{adj, comp, forbidden, qn + others, dsize};
        std::vector<std::uint32_t> class_of(comp.size(), 0);
        const double value = counter.count(0, class_of, 0);
        if (!agreed) {
          agreed = value;
        } else if (std::abs(*agreed - value) > 1e-12 * std::max(1.0, std::abs(value))) {
          dependent = true;
        }
        return;
      }
      const VarId b = bound[i];
      auto legal = [&](std::uint32_t lab) {
        if (lab < qn && c.contains(Term::var(b), Term::constant(consts[lab]))) return false;
        for (std::size_t j = 0; j < i; ++j)
          if (label[j] == lab && c.contains(Term::var(b), Term::var(bound[j]))) return false;
        return true;
      };
      for (std::uint32_t lab = 0; lab < qn + others; ++lab)
        if (legal(lab)) {
          label[i] = lab;
          enumerate(i + 1, others);
        }
      label[i] = qn + others;
      enumerate(i + 1, others + 1);
    };
    enumerate(0, 0);

    if (dependent) {
      std::string names;
      for (VarId v : comp) names += (names.empty() ? "" : ", ") + vars[v].name;
      throw NonNormalForm("grounding count of {" + names + "} depends on the binding of its disequality neighbours");
    }
    if (!agreed) return 0.0;
    result *= *agreed;
    if (result == 0.0) return 0.0;
  }
  return result;
}

double count_groundings(const Parfactor& g, std::span<const Domain> domains) {
  std::vector<VarId> all(g.vars.size());
  std::iota(all.begin(), all.end(), 0);
  return count_groundings(g.vars, all, g.constraint, domains);
}

// ---------------------------------------------------------------------------
// Formatting

std::string format_term(const Model& m, const Parfactor& g, const Atom& a, std::size_t position) {
  const auto& t = a.args[position];
  if (t.is_var()) return g.vars[t.id].name;
  return m.domains[m.position_domain(a, position)].constant_name(t.id);
}

std::string format_atom(const Model& m, const Parfactor& g, const Atom& a) {
  std::string out = m.predicates[a.predicate].name;
  if (a.args.empty()) return out;
  out += '(';
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (i) out += ", ";
    out += format_term(m, g, a, i);
  }
  out += ')';
  return out;
}

std::string format_constraint(const Model& m, const Parfactor& g) {
  std::string out;
  if (g.constraint.contradictory()) out = "false";
  for (const auto& d : g.constraint.pairs()) {
    if (!out.empty()) out += ", ";
    out += g.vars[d.lhs.id].name + " ≠ ";
    out += d.rhs.is_var() ? g.vars[d.rhs.id].name : m.domains[g.vars[d.lhs.id].domain].constant_name(d.rhs.id);
  }
  return out;
}

std::string format_parfactor(const Model& m, const Parfactor& g) {
  std::string out;
  for (std::size_t i = 0; i < g.atoms.size(); ++i) {
    if (i) out += ", ";
    out += format_atom(m, g, g.atoms[i]);
  }
  auto c = format_constraint(m, g);
  if (!c.empty()) out += " | " + c;
  return out;
}

std::string format_ground_atom(const Model& m, const GroundAtom& a) {
  std::string out = a.predicate;
  if (a.args.empty()) return out;
  auto p = m.find_predicate(a.predicate);
  out += '(';
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (i) out += ",";
    if (p && i < m.predicates[*p].arity())
      out += m.domains[m.predicates[*p].args[i]].constant_name(a.args[i]);
    else
      out += std::to_string(a.args[i]);
  }
  out += ')';
  return out;
}

// ---------------------------------------------------------------------------
// Structural comparison

bool structurally_equal(const Model& a, const Model& b, double rel_tol) {
  if (a.domains.size() != b.domains.size() || a.predicates.size() != b.predicates.size() ||
      a.parfactors.size() != b.parfactors.size())
    return false;
  for (const auto& d : a.domains) {
    auto id = b.find_domain(d.name);
    if (!id) return false;
    const auto& e = b.domains[*id];
    if (d.size != e.size) return false;
    for (ConstId c = 0; c < d.size && (!d.auto_named() || !e.auto_named()); ++c)
      if (d.constant_name(c) != e.constant_name(c)) return false;
  }
  for (const auto& p : a.predicates) {
    auto id = b.find_predicate(p.name);
    if (!id) return false;
    const auto& q = b.predicates[*id];
    if (p.range != q.range || p.arity() != q.arity()) return false;
    for (std::size_t i = 0; i < p.arity(); ++i)
      if (a.domains[p.args[i]].name != b.domains[q.args[i]].name) return false;
  }
  for (std::size_t i = 0; i < a.parfactors.size(); ++i) {
    const auto& g = a.parfactors[i];
    const auto& h = b.parfactors[i];
    if (g.vars.size() != h.vars.size()) return false;
    for (std::size_t v = 0; v < g.vars.size(); ++v)
      if (g.vars[v].name != h.vars[v].name ||
          a.domains[g.vars[v].domain].name != b.domains[h.vars[v].domain].name)
        return false;
    if (format_parfactor(a, g) != format_parfactor(b, h)) return false;
    if (!g.table || !h.table || g.table->axes != h.table->axes) return false;
    for (std::size_t k = 0; k < g.table->size(); ++k) {
      const double x = g.table->log_weights[k];
      const double y = h.table->log_weights[k];
      if (x == y) continue;
      if (std::isinf(x) || std::isinf(y) || std::abs(x - y) > rel_tol) return false;
    }
  }
  return true;
}

}  // namespace uarmpe
