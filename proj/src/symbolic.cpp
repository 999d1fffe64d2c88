#include "uarmpe/symbolic.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <tuple>

#include "uarmpe/errors.hpp"

namespace uarmpe {

namespace {

const std::string kPrime = "′";

std::vector<VarId> sorted_unique(std::vector<VarId> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

bool same_atoms(const SymbolicParfactor& a, const SymbolicParfactor& b) {
  return a.atoms == b.atoms && a.vars == b.vars && a.constraint == b.constraint;
}

// Anchored positions per predicate over the whole model.
std::map<PredicateId, std::vector<bool>> anchored_masks(const SymbolicModel& G) {
  std::map<PredicateId, std::vector<bool>> masks;
  for (const auto& g : G)
    for (const auto& a : g.atoms) {
      auto& mask = masks[a.predicate];
      mask.resize(a.markers.size(), false);
      for (std::size_t i = 0; i < a.markers.size(); ++i)
        if (a.markers[i].is_anchored()) mask[i] = true;
    }
  return masks;
}

std::vector<VarId> vars_at_masked(const SymbolicParfactor& g, const std::map<PredicateId, std::vector<bool>>& masks) {
  std::vector<VarId> out;
  for (const auto& a : g.atoms) {
    auto it = masks.find(a.predicate);
    if (it == masks.end()) continue;
    for (std::size_t i = 0; i < a.markers.size(); ++i)
      if (it->second[i] && a.markers[i].is_var()) out.push_back(a.markers[i].id);
  }
  return sorted_unique(std::move(out));
}

std::size_t total_unanchored(const SymbolicModel& G) {
  std::size_t n = 0;
  for (const auto& g : G) n += g.unanchored();
  return n;
}

bool shares_predicate(const SymbolicParfactor& a, const SymbolicParfactor& b) {
  for (const auto& x : a.atoms)
    for (const auto& y : b.atoms)
      if (x.predicate == y.predicate) return true;
  return false;
}

}  // namespace

std::size_t AnchoredAtom::unanchored() const {
  return static_cast<std::size_t>(
      std::count_if(markers.begin(), markers.end(), [](const Marker& mk) { return mk.is_var(); }));
}

std::size_t SymbolicParfactor::unanchored() const {
  std::size_t n = 0;
  for (const auto& a : atoms) n += a.unanchored();
  return n;
}

std::vector<std::size_t> AnchoredFormula::kept_positions() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < kept.size(); ++i)
    if (kept[i]) out.push_back(i);
  return out;
}

std::vector<std::size_t> AnchoredFormula::removed_positions() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < kept.size(); ++i)
    if (!kept[i]) out.push_back(i);
  return out;
}

SymbolicParfactor to_symbolic(const Parfactor& g, std::string label) {
  SymbolicParfactor s;
  s.vars = g.vars;
  s.constraint = g.constraint;
  s.label = std::move(label);
  for (const auto& a : g.atoms) {
    AnchoredAtom x{a.predicate, {}};
    for (const auto& t : a.args) x.markers.push_back(t.is_var() ? Marker::var(t.id) : Marker::constant(t.id));
    s.atoms.push_back(std::move(x));
  }
  return s;
}

SymbolicModel to_symbolic(const Model& m) {
  SymbolicModel G;
  for (std::size_t i = 0; i < m.parfactors.size(); ++i)
    G.push_back(to_symbolic(m.parfactors[i], m.parfactors.size() == 1 ? "φ" : "φ" + std::to_string(i + 1)));
  return G;
}

std::vector<VarId> overlap_set(const SymbolicParfactor& g) {
  std::vector<VarId> out;
  std::map<PredicateId, std::vector<const AnchoredAtom*>> by_pred;
  for (const auto& a : g.atoms) by_pred[a.predicate].push_back(&a);
  for (const auto& [p, inst] : by_pred) {
    if (inst.size() < 2) continue;
    for (std::size_t i = 0; i < inst.front()->markers.size(); ++i) {
      const bool uniform = std::all_of(inst.begin(), inst.end(),
                                       [&](const AnchoredAtom* a) { return a->markers[i] == inst.front()->markers[i]; });
      if (uniform) continue;
      for (const auto* a : inst)
        if (a->markers[i].is_var()) out.push_back(a->markers[i].id);
    }
  }
  return sorted_unique(std::move(out));
}

std::vector<VarId> effect_scope(const SymbolicParfactor& g, const std::vector<VarId>& lo) {
  std::vector<bool> in(g.vars.size(), false);
  std::vector<VarId> stack(lo.begin(), lo.end());
  for (VarId v : lo) in[v] = true;
  while (!stack.empty()) {
    const VarId v = stack.back();
    stack.pop_back();
    for (VarId u : g.constraint.var_neighbors(v))
      if (!in[u]) {
        in[u] = true;
        stack.push_back(u);
      }
  }
  std::vector<VarId> out;
  for (VarId v = 0; v < in.size(); ++v)
    if (in[v]) out.push_back(v);
  return out;
}

SymbolicParfactor anchor(const SymbolicParfactor& g, const std::vector<VarId>& lo) {
  const auto eff = effect_scope(g, lo);
  if (eff.empty()) return g;
  std::vector<bool> gone(g.vars.size(), false);
  for (VarId v : eff) gone[v] = true;
  std::vector<VarId> keep;
  std::vector<VarId> remap(g.vars.size(), 0);
  for (VarId v = 0; v < g.vars.size(); ++v)
    if (!gone[v]) {
      remap[v] = static_cast<VarId>(keep.size());
      keep.push_back(v);
    }

  SymbolicParfactor out;
  out.label = g.label;
  for (VarId v : keep) out.vars.push_back(g.vars[v]);
  const Constraint projected = project_constraint(g.constraint, keep);
  if (projected.contradictory()) out.constraint.set_contradictory();
  for (const auto& d : projected.pairs()) {
    const Term rhs = d.rhs.is_var() ? Term::var(remap[d.rhs.id]) : d.rhs;
    out.constraint.add(Term::var(remap[d.lhs.id]), rhs);
  }
  for (const auto& a : g.atoms) {
    AnchoredAtom x{a.predicate, {}};
    for (const auto& mk : a.markers) {
      if (mk.is_var())
        x.markers.push_back(gone[mk.id] ? Marker::anchored() : Marker::var(remap[mk.id]));
      else
        x.markers.push_back(mk);
    }
    if (std::find(out.atoms.begin(), out.atoms.end(), x) == out.atoms.end()) out.atoms.push_back(std::move(x));
  }
  return out;
}

SymbolicModel align(const SymbolicModel& G) {
  SymbolicModel cur = G;
  for (;;) {
    const auto masks = anchored_masks(cur);
    bool changed = false;
    for (auto& g : cur) {
      const auto L = vars_at_masked(g, masks);
      if (L.empty()) continue;
      g = anchor(g, L);
      changed = true;
    }
    if (!changed) return cur;
  }
}

SymbolicModel align(const SymbolicModel& G, const SymbolicParfactor& g_star) {
  std::map<PredicateId, std::vector<bool>> masks;
  for (const auto& a : g_star.atoms) {
    auto& mask = masks[a.predicate];
    mask.resize(a.markers.size(), false);
    for (std::size_t i = 0; i < a.markers.size(); ++i)
      if (a.markers[i].is_anchored()) mask[i] = true;
  }
  SymbolicModel cur = G;
  for (auto& g : cur) {
    const auto L = vars_at_masked(g, masks);
    if (!L.empty()) g = anchor(g, L);
  }
  return align(cur);
}

SymbolicParfactor symbolic_fusion(const SymbolicParfactor& g1, const SymbolicParfactor& g2) {
  const bool first_is_base = g1.atoms.size() >= g2.atoms.size();
  const SymbolicParfactor& base = first_is_base ? g1 : g2;
  const SymbolicParfactor& other = first_is_base ? g2 : g1;

  std::vector<PredicateId> shared;
  for (const auto& a : base.atoms)
    if (std::find(shared.begin(), shared.end(), a.predicate) == shared.end() &&
        std::any_of(other.atoms.begin(), other.atoms.end(),
                    [&](const AnchoredAtom& b) { return b.predicate == a.predicate; }))
      shared.push_back(a.predicate);
  if (shared.empty()) throw InternalError("symbolic fusion of parfactors without a shared predicate");
  auto free_positions = [&](PredicateId p) {
    for (const auto& a : base.atoms)
      if (a.predicate == p)
        return std::count_if(a.markers.begin(), a.markers.end(), [](const Marker& mk) { return !mk.is_anchored(); });
    return std::ptrdiff_t{0};
  };
  std::stable_sort(shared.begin(), shared.end(), [&](PredicateId a, PredicateId b) {
    const auto fa = free_positions(a), fb = free_positions(b);
    return fa != fb ? fa > fb : a < b;
  });

  std::vector<std::optional<VarId>> image(other.vars.size());
  std::vector<bool> taken(base.vars.size(), false);
  for (PredicateId p : shared) {
    std::vector<const AnchoredAtom*> xs, ys;
    for (const auto& a : base.atoms)
      if (a.predicate == p) xs.push_back(&a);
    for (const auto& a : other.atoms)
      if (a.predicate == p) ys.push_back(&a);
    for (const auto* x : xs)
      for (const auto* y : ys)
        for (std::size_t i = 0; i < x->markers.size(); ++i)
          if (x->markers[i].is_anchored() != y->markers[i].is_anchored())
            throw InternalError("fusion found inconsistent anchored positions; the model was not aligned");
    for (std::size_t k = 0; k < std::min(xs.size(), ys.size()); ++k)
      for (std::size_t i = 0; i < xs[k]->markers.size(); ++i) {
        const Marker mx = xs[k]->markers[i], my = ys[k]->markers[i];
        if (!mx.is_var() || !my.is_var()) continue;
        if (image[my.id] || taken[mx.id] || base.vars[mx.id].domain != other.vars[my.id].domain) continue;
        image[my.id] = mx.id;
        taken[mx.id] = true;
      }
  }

  SymbolicParfactor out = base;
  out.label.clear();
  std::set<std::string> names;
  for (const auto& v : out.vars) names.insert(v.name);
  for (VarId v = 0; v < other.vars.size(); ++v) {
    if (image[v]) continue;
    std::string name = other.vars[v].name;
    for (int n = 1; names.count(name); ++n) name = other.vars[v].name + std::to_string(n);
    names.insert(name);
    image[v] = static_cast<VarId>(out.vars.size());
    out.vars.push_back({name, other.vars[v].domain});
  }
  if (other.constraint.contradictory()) out.constraint.set_contradictory();
  for (const auto& d : other.constraint.pairs()) {
    const Term rhs = d.rhs.is_var() ? Term::var(*image[d.rhs.id]) : d.rhs;
    out.constraint.add(Term::var(*image[d.lhs.id]), rhs);
  }
  for (const auto& a : other.atoms) {
    AnchoredAtom x{a.predicate, a.markers};
    for (auto& mk : x.markers)
      if (mk.is_var()) mk.id = *image[mk.id];
    if (std::find(out.atoms.begin(), out.atoms.end(), x) == out.atoms.end()) out.atoms.push_back(std::move(x));
  }
  return out;
}

namespace {

void relabel_changed(const SymbolicModel& before, SymbolicModel& after) {
  for (std::size_t i = 0; i < after.size(); ++i)
    if (!same_atoms(before[i], after[i])) after[i].label = before[i].label + kPrime;
}

}  // namespace

DetectionResult detect_uniform_assignments(const Model& m) {
  DetectionResult result;
  const auto stage = [&](const char* title, const SymbolicModel& G) {
    TraceStage s{title, {}};
    for (const auto& g : G) s.rows.push_back(g.label + " : " + format_symbolic_parfactor(m, g));
    result.trace.push_back(std::move(s));
  };

  SymbolicModel G = to_symbolic(m);
  stage("Original model", G);
  {
    SymbolicModel aligned = align(G);
    relabel_changed(G, aligned);
    if (aligned.size() == G.size() &&
        !std::equal(G.begin(), G.end(), aligned.begin(), [](const auto& a, const auto& b) { return same_atoms(a, b); })) {
      G = std::move(aligned);
      stage("Model alignment", G);
    }
  }

  for (;;) {
    const auto before = std::make_pair(total_unanchored(G), G.size());
    bool progressed = false;

    for (std::size_t i = 0; i < G.size(); ++i) {
      const auto lo = overlap_set(G[i]);
      if (lo.empty()) continue;
      SymbolicModel anchored = G;
      anchored[i] = anchor(G[i], lo);
      anchored[i].label = G[i].label + kPrime;
      G = std::move(anchored);
      ++result.anchorings;
      stage("Anchoring", G);
      SymbolicModel aligned = align(G, G[i]);
      relabel_changed(G, aligned);
      const bool changed =
          !std::equal(G.begin(), G.end(), aligned.begin(), [](const auto& a, const auto& b) { return same_atoms(a, b); });
      G = std::move(aligned);
      if (changed) stage("Model alignment", G);
      progressed = true;
      break;
    }

    std::optional<std::pair<std::size_t, std::size_t>> pair;
    for (std::size_t i = 0; i < G.size() && !pair; ++i)
      for (std::size_t j = i + 1; j < G.size() && !pair; ++j)
        if (shares_predicate(G[i], G[j])) pair = {i, j};
    if (pair) {
      auto [i, j] = *pair;
      SymbolicParfactor fused = symbolic_fusion(G[i], G[j]);
      ++result.fusions;
      fused.label = result.fusions == 1 ? "φf" : "φf" + std::to_string(result.fusions);
      G[i] = std::move(fused);
      G.erase(G.begin() + static_cast<std::ptrdiff_t>(j));
      stage("Symbolic fusion", G);
      progressed = true;
    }
    if (!progressed) break;
    const auto after = std::make_pair(total_unanchored(G), G.size());
    if (!(after < before)) throw InternalError("detection made no progress");
  }

  for (const auto& g : G)
    for (const auto& a : g.atoms) {
      if (std::any_of(result.formulas.begin(), result.formulas.end(),
                      [&](const AnchoredFormula& f) { return f.predicate == a.predicate; }))
        continue;
      AnchoredFormula f;
      f.predicate = a.predicate;
      for (const auto& mk : a.markers) f.kept.push_back(!mk.is_var());
      f.atom = a;
      f.vars = g.vars;
      result.formulas.push_back(std::move(f));
    }
  result.terminal = std::move(G);
  return result;
}

std::string format_marker(const Model& m, const SymbolicParfactor& g, const AnchoredAtom& a, std::size_t position) {
  const Marker mk = a.markers[position];
  if (mk.is_anchored()) return "*";
  if (mk.is_var()) return g.vars[mk.id].name;
  return m.domains[m.predicates[a.predicate].args[position]].constant_name(mk.id);
}

std::string format_anchored_atom(const Model& m, const SymbolicParfactor& g, const AnchoredAtom& a) {
  std::string out = m.predicates[a.predicate].name;
  if (a.markers.empty()) return out;
  out += '(';
  for (std::size_t i = 0; i < a.markers.size(); ++i) {
    if (i) out += ", ";
    out += format_marker(m, g, a, i);
  }
  return out + ')';
}

std::string format_symbolic_parfactor(const Model& m, const SymbolicParfactor& g) {
  std::string out;
  for (std::size_t i = 0; i < g.atoms.size(); ++i) {
    if (i) out += ", ";
    out += format_anchored_atom(m, g, g.atoms[i]);
  }
  std::string c;
  if (g.constraint.contradictory()) c = "false";
  for (const auto& d : g.constraint.pairs()) {
    if (!c.empty()) c += ", ";
    c += g.vars[d.lhs.id].name + " ≠ ";
    c += d.rhs.is_var() ? g.vars[d.rhs.id].name : m.domains[g.vars[d.lhs.id].domain].constant_name(d.rhs.id);
  }
  return c.empty() ? out : out + " | " + c;
}

std::string format_formula(const Model& m, const AnchoredFormula& f) {
  SymbolicParfactor g;
  g.vars = f.vars;
  return format_anchored_atom(m, g, f.atom);
}

std::string format_trace(const std::vector<TraceStage>& trace) {
  std::size_t width = 0;
  for (const auto& s : trace) width = std::max(width, s.title.size());
  width += 2;
  std::string out;
  for (const auto& s : trace) {
    for (std::size_t r = 0; r < s.rows.size(); ++r) {
      std::string head = r == 0 ? s.title : std::string();
      head.resize(width, ' ');
      out += head + s.rows[r] + '\n';
    }
    if (s.rows.empty()) out += s.title + '\n';
  }
  return out;
}

}  // namespace uarmpe
