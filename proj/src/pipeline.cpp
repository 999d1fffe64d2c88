#include "uarmpe/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>

#include "uarmpe/errors.hpp"
#include "uarmpe/shatter.hpp"

namespace uarmpe {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t) { return std::chrono::duration<double, std::milli>(Clock::now() - t).count(); }

void check_weight(double expected, double recomputed, const std::string& what) {
  if (expected == recomputed) return;
  // Sums of many exponentiated entries accumulate rounding relative to |w|.
  const double tol = std::max(1e-9, 1e-9 * std::fabs(recomputed));
  if (!(std::fabs(expected - recomputed) <= tol)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, ": engine reported log-weight %.17g but the returned assignment weighs %.17g",
                  expected, recomputed);
    throw ConsistencyFailure(what + buf);
  }
}

MpeResult run_engine(const Model& m, const SolveOptions& opts) {
  return opts.engine == Engine::Brute ? brute_force_mpe(m, opts.engine_options)
                                      : ve_max_product(m, opts.engine_options);
}

std::vector<std::size_t> positions_in(const Predicate& q, DomainId d) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < q.args.size(); ++i)
    if (q.args[i] == d) out.push_back(i);
  return out;
}

std::string sub_predicate_name(const Model& m, const Predicate& q, const std::string& bits) {
  std::string name = q.name + "_" + bits;
  while (m.find_predicate(name)) name += "_";
  return name;
}

std::string sub_domain_name(const Model& m, const Domain& d, int bit) {
  std::string name = d.name + "_" + std::to_string(bit);
  while (m.find_domain(name)) name += "_";
  return name;
}

}  // namespace

std::string engine_name(Engine e) { return e == Engine::Brute ? "brute" : "ve"; }

Engine parse_engine(const std::string& name) {
  if (name == "brute") return Engine::Brute;
  if (name == "ve") return Engine::Ve;
  throw ValidationError("unknown engine '" + name + "' (expected brute or ve)");
}

bool can_condition_on(const Model& m, PredicateId p) {
  const Predicate& pred = m.predicates[p];
  if (pred.arity() != 1 || pred.range != 2) return false;
  const DomainId d = pred.args[0];
  for (const auto& g : m.parfactors) {
    for (const auto& a : g.atoms)
      for (std::size_t i = 0; i < a.args.size(); ++i)
        if (a.args[i].is_const() && m.position_domain(a, i) == d) return false;
    for (const auto& dq : g.constraint.pairs())
      if (dq.rhs.is_const() && g.vars[dq.lhs.id].domain == d) return false;
  }
  return true;
}

Model conditioned_submodel(const Model& m, PredicateId target, std::size_t k) {
  const DomainId D = m.predicates[target].args[0];
  const Domain& dom = m.domains[D];
  const std::size_t n = dom.size;
  if (k > n) throw ValidationError("split size exceeds the domain");

  Model out;
  out.domains = m.domains;
  DomainId side[2] = {0, 0};
  const std::size_t side_size[2] = {k, n - k};
  for (int b = 0; b < 2; ++b) {
    if (side_size[b] == 0) continue;
    Domain part{sub_domain_name(m, dom, b), side_size[b], {}};
    const std::size_t first = b == 0 ? 0 : k;
    for (std::size_t c = 0; c < side_size[b]; ++c)
      part.names.push_back(dom.constant_name(static_cast<ConstId>(first + c)));
    side[b] = out.add_domain(std::move(part));
  }

  // Predicates without positions over D are kept; the others get one
  // sub-predicate per pattern of sides, created on first use.
  std::vector<PredicateId> kept(m.predicates.size(), 0);
  for (PredicateId q = 0; q < m.predicates.size(); ++q)
    if (q != target && positions_in(m.predicates[q], D).empty()) kept[q] = out.add_predicate(m.predicates[q]);
  std::map<std::pair<PredicateId, std::string>, PredicateId> split_preds;
  auto sub_pred = [&](PredicateId q, const std::string& bits) {
    auto key = std::make_pair(q, bits);
    if (auto it = split_preds.find(key); it != split_preds.end()) return it->second;
    Predicate s = m.predicates[q];
    s.name = sub_predicate_name(m, m.predicates[q], bits);
    std::size_t j = 0;
    for (auto& a : s.args)
      if (a == D) a = side[bits[j++] - '0'];
    const PredicateId id = out.add_predicate(std::move(s));
    split_preds.emplace(key, id);
    return id;
  };

  for (const auto& g : m.parfactors) {
    std::vector<VarId> dvars;
    for (VarId v = 0; v < g.vars.size(); ++v)
      if (g.vars[v].domain == D) dvars.push_back(v);
    const std::size_t first_sub = out.parfactors.size();

    for (std::size_t mask = 0; mask < (std::size_t{1} << dvars.size()); ++mask) {
      std::vector<int> bit(g.vars.size(), -1);
      bool empty_side = false;
      for (std::size_t i = 0; i < dvars.size(); ++i) {
        bit[dvars[i]] = static_cast<int>((mask >> i) & 1U);
        if (side_size[bit[dvars[i]]] == 0) empty_side = true;
      }
      if (empty_side) continue;

      Parfactor s;
      for (VarId v = 0; v < g.vars.size(); ++v) {
        LogicalVar lv = g.vars[v];
        if (bit[v] >= 0) {
          lv.name += "_" + std::to_string(bit[v]);
          lv.domain = side[bit[v]];
        }
        s.vars.push_back(std::move(lv));
      }
      if (g.constraint.contradictory()) s.constraint.set_contradictory();
      for (const auto& d : g.constraint.pairs()) {
        if (d.rhs.is_var() && bit[d.lhs.id] >= 0 && bit[d.lhs.id] != bit[d.rhs.id]) continue;
        s.constraint.add(d.lhs, d.rhs);
      }

      // Target atoms are fixed by slicing; others move to their sub-predicate.
      std::vector<int> fixed(g.atoms.size(), -1);
      std::vector<std::uint32_t> axes;
      for (std::size_t i = 0; i < g.atoms.size(); ++i) {
        const Atom& a = g.atoms[i];
        if (a.predicate == target) {
          fixed[i] = bit[a.args[0].id];
          continue;
        }
        const auto dpos = positions_in(m.predicates[a.predicate], D);
        Atom b = a;
        if (dpos.empty()) {
          b.predicate = kept[a.predicate];
        } else {
          std::string bits;
          for (std::size_t pos : dpos) bits += static_cast<char>('0' + bit[a.args[pos].id]);
          b.predicate = sub_pred(a.predicate, bits);
        }
        s.atoms.push_back(std::move(b));
        axes.push_back(m.predicates[a.predicate].range);
      }

      // Variables left in no atom and no variable disequality fold into the exponent.
      std::vector<bool> used(s.vars.size(), false);
      for (const auto& a : s.atoms)
        for (const auto& t : a.args)
          if (t.is_var()) used[t.id] = true;
      double exponent = 1.0;
      std::vector<VarId> keep;
      for (VarId v = 0; v < s.vars.size(); ++v) {
        if (used[v] || !s.constraint.var_neighbors(v).empty()) {
          keep.push_back(v);
          continue;
        }
        const double size = static_cast<double>(out.domains[s.vars[v].domain].size);
        exponent *= std::max(0.0, size - static_cast<double>(s.constraint.excluded_constants(v).size()));
      }
      // Constraint pairs with a folded variable only exclude constants; restrict drops them.
      Parfactor r = restrict_vars(s, keep);

      std::size_t entries = 1;
      for (auto x : axes) entries *= x;
      std::vector<double> logs(entries);
      std::vector<std::uint32_t> ov(g.atoms.size(), 0);
      for (std::size_t idx = 0; idx < entries; ++idx) {
        std::size_t rest = idx;
        std::size_t j = axes.size();
        for (std::size_t i = g.atoms.size(); i-- > 0;) {
          if (fixed[i] >= 0) {
            ov[i] = static_cast<std::uint32_t>(fixed[i]);
            continue;
          }
          --j;
          ov[i] = static_cast<std::uint32_t>(rest % axes[j]);
          rest /= axes[j];
        }
        const double w = g.table->at(ov);
        logs[idx] = exponent == 0.0 ? 0.0 : w * exponent;
      }

      bool merged = false;
      for (std::size_t t = first_sub; t < out.parfactors.size() && !merged; ++t) {
        Parfactor& o = out.parfactors[t];
        if (o.vars == r.vars && o.constraint == r.constraint && o.atoms == r.atoms) {
          auto sum = std::make_shared<PotentialTable>(*o.table);
          for (std::size_t i = 0; i < logs.size(); ++i) sum->log_weights[i] += logs[i];
          o.table = std::move(sum);
          merged = true;
        }
      }
      if (!merged) {
        r.table = std::make_shared<PotentialTable>(std::move(axes), std::move(logs));
        out.parfactors.push_back(std::move(r));
      }
    }
  }
  return out;
}

namespace {

// A solved model before expansion back onto the input.
struct Staged {
  bool uar = false;
  ShatterResult sh;
  SimplifyResult simp;
  Assignment solved;  // over simp.model, or the input without UAR
  double weight = 0.0;
  std::string engine;
  SolveStats stats;
};

Staged solve_staged(const Model& m, const SolveOptions& opts);
SolveResult finish(const Model& m, Staged st, Clock::time_point start);

}  // namespace

SolveResult conditional_ua_solve(const Model& m, const std::string& target, const SolveOptions& opts) {
  const auto start = Clock::now();
  require_valid(m);
  const auto p = m.find_predicate(target);
  if (!p) throw ValidationError("unknown predicate '" + target + "'");
  if (!can_condition_on(m, *p))
    throw UnsupportedShape("conditioning needs a unary predicate with range 2 whose domain constants do not occur in the model");
  const DomainId D = m.predicates[*p].args[0];
  const std::size_t n = m.domains[D].size;

  SolveOptions inner = opts;
  inner.use_uar = true;
  inner.condition.reset();
  inner.auto_condition = false;

  // Each split is solved on its reduced model; only the winner is expanded.
  std::optional<Staged> best;
  Model best_model;
  std::size_t best_k = 0;
  std::size_t sub_solves = 0;
  SolveStats acc;
  for (std::size_t k = 0; k <= n; ++k) {
    Model sub = conditioned_submodel(m, *p, k);
    Staged r = solve_staged(sub, inner);
    ++sub_solves;
    acc.detect_ms += r.stats.detect_ms;
    acc.reduce_ms += r.stats.reduce_ms;
    acc.solve_ms += r.stats.solve_ms;
    acc.eliminated += r.stats.eliminated;
    if (!best || r.weight > best->weight) {
      best = std::move(r);
      best_model = std::move(sub);
      best_k = k;
    }
  }
  const SolveResult sub = finish(best_model, std::move(*best), Clock::now());

  SolveResult out;
  for (const auto& rv : random_variables(m)) {
    if (rv.predicate == target) {
      out.assignment.emplace_hint(out.assignment.end(), rv, rv.args[0] < best_k ? 0U : 1U);
      continue;
    }
    const Predicate& q = m.predicates[*m.find_predicate(rv.predicate)];
    const auto dpos = positions_in(q, D);
    GroundAtom key = rv;
    if (!dpos.empty()) {
      std::string bits;
      for (std::size_t pos : dpos) {
        const bool second = rv.args[pos] >= best_k;
        bits += second ? '1' : '0';
        if (second) key.args[pos] -= static_cast<ConstId>(best_k);
      }
      key.predicate = sub_predicate_name(m, q, bits);
    }
    auto it = sub.assignment.find(key);
    out.assignment.emplace_hint(out.assignment.end(), rv, it == sub.assignment.end() ? 0U : it->second);
  }
  out.log_weight = model_weight(m, out.assignment);
  check_weight(sub.log_weight, out.log_weight, "conditional solve");
  out.engine = engine_name(opts.engine);
  out.stats = acc;
  out.stats.sub_solves = sub_solves;
  out.stats.conditioned_on = target;
  out.stats.random_variables = out.assignment.size();
  out.stats.total_ms = ms_since(start);
  return out;
}

namespace {

Staged solve_staged(const Model& m, const SolveOptions& opts) {
  Staged st;
  st.uar = opts.use_uar;
  st.engine = engine_name(opts.engine);

  auto inner_solve = [&](const Model& target, const std::optional<std::string>& cond) {
    const auto t = Clock::now();
    if (cond) {
      SolveResult r = conditional_ua_solve(target, *cond, opts);
      st.solved = std::move(r.assignment);
      st.weight = r.log_weight;
      st.stats.sub_solves = r.stats.sub_solves;
      st.stats.eliminated = r.stats.eliminated;
      st.stats.conditioned_on = *cond;
    } else {
      MpeResult r = run_engine(target, opts);
      st.solved = std::move(r.assignment);
      st.weight = r.log_weight;
      st.stats.eliminated = r.stats.eliminated;
      st.stats.random_variables = r.stats.random_variables;
    }
    st.stats.solve_ms = ms_since(t);
  };

  if (!opts.use_uar) {
    inner_solve(m, opts.condition);
    return st;
  }
  const auto t = Clock::now();
  st.sh = shatter(m);
  const double shatter_ms = ms_since(t);
  st.simp = simplify(st.sh.model);
  st.stats.detect_ms = shatter_ms + st.simp.detect_ms;
  st.stats.reduce_ms = st.simp.reduce_ms;

  const Model& reduced = st.simp.model;
  std::optional<std::string> cond;
  if (opts.condition) {
    std::string name = *opts.condition;
    if (!reduced.find_predicate(name)) {
      for (const auto& cell : st.sh.renames.cells)
        if (cell.original == name) name = cell.renamed;
      if (const auto* red = st.simp.map.find(name)) name = red->reduced;
    }
    if (!reduced.find_predicate(name)) throw ValidationError("unknown predicate '" + *opts.condition + "'");
    cond = name;
  } else if (opts.auto_condition && opts.engine == Engine::Ve &&
             estimate_ve_table_size(reduced, opts.engine_options.max_table_entries) >
                 opts.engine_options.max_table_entries) {
    for (PredicateId p = 0; p < reduced.predicates.size() && !cond; ++p)
      if (can_condition_on(reduced, p)) cond = reduced.predicates[p].name;
  }
  inner_solve(reduced, cond);
  return st;
}

SolveResult finish(const Model& m, Staged st, Clock::time_point start) {
  SolveResult res;
  res.engine = st.engine;
  res.stats = st.stats;
  if (!st.uar) {
    res.assignment = std::move(st.solved);
  } else {
    const Model& reduced = st.simp.model;
    res.assignment = st.sh.renames.to_original(expand_assignment(st.sh.model, st.simp.map, st.solved));
    for (const auto& pr : st.simp.map.predicates) {
      LiftedBlock block{st.sh.renames.original_of(pr.original), pr.kept, {}};
      const Predicate& rp = reduced.predicates[*reduced.find_predicate(pr.reduced)];
      for (const auto& [atom, value] : st.solved) {
        if (atom.predicate != pr.reduced) continue;
        std::vector<std::string> names;
        for (std::size_t i = 0; i < atom.args.size(); ++i)
          names.push_back(reduced.domains[rp.args[i]].constant_name(atom.args[i]));
        block.blocks.emplace_back(std::move(names), value);
      }
      res.lifted.push_back(std::move(block));
    }
    res.map = std::move(st.simp.map);
  }
  res.log_weight = model_weight(m, res.assignment);
  check_weight(st.weight, res.log_weight, "solve");
  if (res.stats.random_variables == 0) res.stats.random_variables = res.assignment.size();
  res.stats.total_ms = ms_since(start);
  return res;
}

}  // namespace

SolveResult solve(const Model& m, const SolveOptions& opts) {
  const auto start = Clock::now();
  require_valid(m);
  return finish(m, solve_staged(m, opts), start);
}

}  // namespace uarmpe
