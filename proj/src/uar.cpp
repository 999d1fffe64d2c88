#include "uarmpe/uar.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>

#include "uarmpe/errors.hpp"
#include "uarmpe/ground.hpp"
#include "uarmpe/shatter.hpp"

namespace uarmpe {

const PredicateReduction* ReductionMap::find(const std::string& original) const {
  for (const auto& p : predicates)
    if (p.original == original) return &p;
  return nullptr;
}

Atom arity_reduce(const Atom& a, const AnchoredFormula& f, PredicateId reduced) {
  if (a.predicate != f.predicate || !f.reduces()) return a;
  Atom out{reduced, {}};
  for (std::size_t i : f.kept_positions()) out.args.push_back(a.args[i]);
  return out;
}

namespace {

std::string plain_number(double x) {
  char buf[64];
  if (x == std::floor(x) && std::fabs(x) < 1e15)
    std::snprintf(buf, sizeof buf, "%.0f", x);
  else
    std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::string exponent_expression(const Model& m, const Parfactor& g, const std::vector<VarId>& removed, double value) {
  if (removed.empty()) return "1";
  std::vector<VarId> order = removed;
  std::sort(order.begin(), order.end());
  std::vector<bool> is_removed(g.vars.size(), false);
  for (VarId v : order) is_removed[v] = true;

  std::vector<std::string> factors;
  double product = 1.0;
  for (VarId v : order) {
    std::size_t k = g.constraint.excluded_constants(v).size();
    for (VarId u : g.constraint.var_neighbors(v))
      if (!is_removed[u] || u < v) ++k;
    const double n = static_cast<double>(m.domains[g.vars[v].domain].size);
    product *= std::max(0.0, n - static_cast<double>(k));
    std::string f = "|" + g.vars[v].name + "|";
    if (k) f += "−" + std::to_string(k);
    factors.push_back(std::move(f));
  }
  if (product != value) return plain_number(value);
  std::string out;
  for (const auto& f : factors) {
    if (!out.empty()) out += "·";
    out += (factors.size() > 1 && f.find("−") != std::string::npos) ? "(" + f + ")" : f;
  }
  return out;
}

ParfactorUar uar_parfactor(const Model& m, const Parfactor& g, const AnchoredFormula& f, PredicateId reduced) {
  Parfactor staged = g;
  for (auto& a : staged.atoms) a = arity_reduce(a, f, reduced);

  std::vector<bool> used(g.vars.size(), false);
  for (const auto& a : staged.atoms)
    for (const auto& t : a.args)
      if (t.is_var()) used[t.id] = true;
  std::vector<VarId> keep, removed;
  for (VarId v = 0; v < g.vars.size(); ++v) (used[v] ? keep : removed).push_back(v);

  ParfactorUar out;
  out.removed = removed;
  out.exponent = removed.empty() ? 1.0 : count_groundings(g.vars, removed, g.constraint, m.domains);

  Parfactor r = restrict_vars(staged, keep);
  // Identical reduced atoms share one axis.
  std::vector<Atom> unique;
  std::vector<std::size_t> axis_of;
  for (const auto& a : r.atoms) {
    auto it = std::find(unique.begin(), unique.end(), a);
    axis_of.push_back(static_cast<std::size_t>(it - unique.begin()));
    if (it == unique.end()) unique.push_back(a);
  }
  const PotentialTable& old = *g.table;
  std::vector<std::uint32_t> axes;
  for (const auto& a : unique) axes.push_back(m.predicates[a.predicate].range);
  std::size_t entries = 1;
  for (auto x : axes) entries *= x;
  std::vector<double> logs(entries);
  std::vector<std::uint32_t> nv(axes.size(), 0), ov(old.axes.size(), 0);
  for (std::size_t idx = 0; idx < entries; ++idx) {
    std::size_t rest = idx;
    for (std::size_t i = axes.size(); i-- > 0;) {
      nv[i] = static_cast<std::uint32_t>(rest % axes[i]);
      rest /= axes[i];
    }
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = nv[axis_of[i]];
    const double w = old.at(ov);
    logs[idx] = out.exponent == 0.0 ? 0.0 : w * out.exponent;
  }
  r.atoms = std::move(unique);
  r.table = std::make_shared<PotentialTable>(std::move(axes), std::move(logs));
  out.parfactor = std::move(r);
  return out;
}

SimplifyResult simplify(const Model& m) {
  require_valid(m);
  if (!is_completely_shattered(m))
    throw ValidationError("simplify needs a completely shattered model; shatter it first");
  SimplifyResult result;
  const auto t0 = std::chrono::steady_clock::now();
  result.detection = detect_uniform_assignments(m);
  const auto t1 = std::chrono::steady_clock::now();

  Model work = m;
  std::vector<double> exponent(m.parfactors.size(), 1.0);
  std::vector<std::vector<std::string>> removed_names(m.parfactors.size());
  std::set<PredicateId> retired;

  for (const auto& f : result.detection.formulas) {
    if (!f.reduces()) continue;
    const Predicate& orig = m.predicates[f.predicate];
    std::string name = orig.name + "′";
    for (int n = 2; work.find_predicate(name); ++n) name = orig.name + "′" + std::to_string(n);
    Predicate reduced{name, {}, orig.range};
    for (std::size_t i : f.kept_positions()) reduced.args.push_back(orig.args[i]);
    const PredicateId id = work.add_predicate(std::move(reduced));
    retired.insert(f.predicate);
    result.map.predicates.push_back({orig.name, name, f.kept_positions(), f.removed_positions()});

    for (std::size_t i = 0; i < work.parfactors.size(); ++i) {
      const Parfactor& g = work.parfactors[i];
      auto r = uar_parfactor(work, g, f, id);
      exponent[i] *= r.exponent;
      for (VarId v : r.removed) removed_names[i].push_back(g.vars[v].name);
      work.parfactors[i] = std::move(r.parfactor);
    }
  }

  // Reduced-away predicates leave the model.
  Model out;
  out.domains = work.domains;
  std::vector<PredicateId> remap(work.predicates.size(), 0);
  for (PredicateId p = 0; p < work.predicates.size(); ++p) {
    if (retired.count(p)) continue;
    remap[p] = out.add_predicate(work.predicates[p]);
  }
  for (auto g : work.parfactors) {
    for (auto& a : g.atoms) a.predicate = remap[a.predicate];
    out.parfactors.push_back(std::move(g));
  }

  TraceStage row{"UA reduction", {}};
  for (std::size_t i = 0; i < m.parfactors.size(); ++i) {
    const Parfactor& g = m.parfactors[i];
    std::string label = m.parfactors.size() == 1 ? "φ" : "φ" + std::to_string(i + 1);
    if (!removed_names[i].empty() || exponent[i] != 1.0) {
      std::vector<VarId> removed;
      for (const auto& n : removed_names[i]) removed.push_back(*g.find_var(n));
      ParfactorReduction pr{i, exponent[i], exponent_expression(m, g, removed, exponent[i]), removed_names[i]};
      const bool wrap = pr.exponent_expr.find("·") != std::string::npos ||
                        pr.exponent_expr.find("−") != std::string::npos;
      if (pr.exponent_expr != "1") label += "^" + (wrap ? "(" + pr.exponent_expr + ")" : pr.exponent_expr);
      result.map.parfactors.push_back(std::move(pr));
    }
    row.rows.push_back(label + " : " + format_parfactor(out, out.parfactors[i]));
  }
  result.trace = result.detection.trace;
  result.trace.push_back(std::move(row));
  result.model = std::move(out);
  const auto t2 = std::chrono::steady_clock::now();
  result.detect_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  result.reduce_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();
  return result;
}

Assignment expand_assignment(const Model& original, const ReductionMap& rm, const Assignment& v_prime) {
  Assignment out;
  for (const auto& rv : random_variables(original)) {
    GroundAtom key;
    if (const auto* red = rm.find(rv.predicate)) {
      key.predicate = red->reduced;
      for (std::size_t i : red->kept) key.args.push_back(rv.args[i]);
    } else {
      key = rv;
    }
    auto it = v_prime.find(key);
    out.emplace_hint(out.end(), rv, it == v_prime.end() ? 0u : it->second);
  }
  return out;
}

}  // namespace uarmpe
