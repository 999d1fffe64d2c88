#include "uarmpe/shatter.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>

#include "uarmpe/errors.hpp"
#include "uarmpe/ground.hpp"

namespace uarmpe {

std::string PredicateRenameMap::original_of(const std::string& name) const {
  for (const auto& c : cells)
    if (c.renamed == name) return c.original;
  return name;
}

Assignment PredicateRenameMap::to_shattered(const Model& shattered, const Assignment& original) const {
  std::map<std::string, std::string> back;
  for (const auto& c : cells) back.emplace(c.renamed, c.original);
  Assignment out;
  for (const auto& rv : random_variables(shattered)) {
    GroundAtom key = rv;
    if (auto it = back.find(rv.predicate); it != back.end()) key.predicate = it->second;
    out.emplace_hint(out.end(), rv, original.at(key));
  }
  return out;
}

Assignment PredicateRenameMap::to_original(const Assignment& shattered) const {
  std::map<std::string, std::string> back;
  for (const auto& c : cells) back.emplace(c.renamed, c.original);
  Assignment out;
  for (const auto& [atom, value] : shattered) {
    GroundAtom key = atom;
    if (auto it = back.find(atom.predicate); it != back.end()) key.predicate = it->second;
    auto [pos, inserted] = out.emplace(key, value);
    if (!inserted && pos->second != value)
      throw ConsistencyFailure("shattered cells disagree on " + key.predicate);
  }
  return out;
}

namespace {

// A split of one parfactor into `x = y` (substitution) and `x != y` (constraint).
struct Split {
  VarId x = 0;
  Term y;  // constant, or a variable with a smaller id than x
};

enum class Relation { Disjoint, Contained, NeedsSplit };

struct Relate {
  Relation relation = Relation::Contained;
  Split split;
};

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }
  std::size_t add() {
    parent_.push_back(parent_.size());
    return parent_.size() - 1;
  }

 private:
  std::vector<std::size_t> parent_;
};

bool in_atom(const Atom& a, VarId v) {
  return std::any_of(a.args.begin(), a.args.end(), [&](const Term& t) { return t.is_var() && t.id == v; });
}

// Pairs of the constraint local to the atom's variables.
std::vector<Disequality> local_pairs(const Parfactor& g, const Atom& a) {
  std::vector<Disequality> out;
  for (const auto& d : g.constraint.pairs())
    if (in_atom(a, d.lhs.id) && (d.rhs.is_const() || in_atom(a, d.rhs.id))) out.push_back(d);
  return out;
}

Split split_between(Term s, Term t) {
  if (s.is_const()) std::swap(s, t);
  if (t.is_const()) return {s.id, t};
  if (s.id < t.id) std::swap(s, t);
  return {s.id, t};
}

// Relation of rv(a : Cg) to rv(b : Ch), judged on the atoms' local patterns.
// A NeedsSplit answer names a split of g that refines a towards b.
Relate relate(const Model& m, const Parfactor& g, const Atom& a, const Parfactor& h, const Atom& b) {
  const std::size_t ng = g.vars.size();
  UnionFind uf(ng + h.vars.size());
  std::map<std::pair<DomainId, ConstId>, std::size_t> const_node;
  auto node = [&](const Atom& atom, std::size_t pos, std::size_t offset) -> std::size_t {
    const Term& t = atom.args[pos];
    if (t.is_var()) return offset + t.id;
    const auto key = std::make_pair(m.position_domain(atom, pos), t.id);
    auto it = const_node.find(key);
    if (it != const_node.end()) return it->second;
    const std::size_t n = uf.add();
    const_node.emplace(key, n);
    return n;
  };
  for (std::size_t i = 0; i < a.args.size(); ++i) uf.unite(node(a, i, 0), node(b, i, ng));
  {
    std::map<std::size_t, std::size_t> const_of_class;
    for (const auto& [key, n] : const_node) {
      auto [it, inserted] = const_of_class.emplace(uf.find(n), n);
      if (!inserted) return {Relation::Disjoint, {}};
    }
  }
  auto pair_node = [&](const Parfactor& p, const Disequality& d, std::size_t offset, std::size_t& lhs, std::size_t& rhs) {
    lhs = offset + d.lhs.id;
    if (d.rhs.is_var()) {
      rhs = offset + d.rhs.id;
      return true;
    }
    auto it = const_node.find({p.vars[d.lhs.id].domain, d.rhs.id});
    if (it == const_node.end()) return false;  // constant not unified with anything
    rhs = it->second;
    return true;
  };
  const auto g_local = local_pairs(g, a);
  const auto h_local = local_pairs(h, b);
  for (const auto& d : g_local) {
    std::size_t l = 0, r = 0;
    if (pair_node(g, d, 0, l, r) && uf.find(l) == uf.find(r)) return {Relation::Disjoint, {}};
  }
  for (const auto& d : h_local) {
    std::size_t l = 0, r = 0;
    if (pair_node(h, d, ng, l, r) && uf.find(l) == uf.find(r)) return {Relation::Disjoint, {}};
  }

  // Containment of a in b: a must imply every condition of b's pattern.
  std::map<VarId, std::size_t> first_pos;
  for (std::size_t i = 0; i < b.args.size(); ++i)
    if (b.args[i].is_var()) first_pos.emplace(b.args[i].id, i);

  auto provably_distinct = [&](Term s, Term t) {
    if (s.is_const() && t.is_const()) return s.id != t.id;
    return g.constraint.contains(s, t);
  };

  for (std::size_t i = 0; i < b.args.size(); ++i) {
    const Term bt = b.args[i];
    const Term at = a.args[i];
    if (bt.is_const()) {
      if (at.is_var()) return {Relation::NeedsSplit, {at.id, bt}};
      continue;
    }
    const std::size_t j = first_pos.at(bt.id);
    if (j < i && a.args[j] != at) return {Relation::NeedsSplit, split_between(a.args[j], at)};
  }
  for (const auto& d : h_local) {
    const Term s = a.args[first_pos.at(d.lhs.id)];
    const Term t = d.rhs.is_var() ? a.args[first_pos.at(d.rhs.id)] : d.rhs;
    if (!provably_distinct(s, t)) return {Relation::NeedsSplit, split_between(s, t)};
  }
  return {Relation::Contained, {}};
}

std::vector<Parfactor> apply_split(const Model& m, const Parfactor& g, const Split& s) {
  std::vector<Parfactor> pieces;
  Substitution theta{{s.x, s.y}};
  Parfactor eq = apply_substitution(g, theta, m.domains);
  Parfactor ne = g;
  ne.constraint.add(Term::var(s.x), s.y);
  for (auto* p : {&eq, &ne})
    if (count_groundings(*p, m.domains) > 0) pieces.push_back(std::move(*p));
  return pieces;
}

std::string local_pattern(const Model& m, const Parfactor& g, const Atom& a) {
  std::string out = format_atom(m, g, a);
  std::string c;
  for (const auto& d : local_pairs(g, a)) {
    if (!c.empty()) c += ", ";
    c += g.vars[d.lhs.id].name + " ≠ ";
    c += d.rhs.is_var() ? g.vars[d.rhs.id].name : m.domains[g.vars[d.lhs.id].domain].constant_name(d.rhs.id);
  }
  return c.empty() ? out : out + " | " + c;
}

struct Occurrence {
  std::size_t parfactor;
  std::size_t atom;
};

}  // namespace

ShatterResult shatter(const Model& m, const ShatterOptions& opts) {
  require_valid(m);
  ShatterResult result;
  std::vector<Parfactor> pars;
  for (const auto& g : m.parfactors)
    if (count_groundings(g, m.domains) > 0) pars.push_back(g);

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t gi = 0; gi < pars.size() && !changed; ++gi)
      for (std::size_t ai = 0; ai < pars[gi].atoms.size() && !changed; ++ai)
        for (std::size_t hi = 0; hi < pars.size() && !changed; ++hi)
          for (std::size_t bi = 0; bi < pars[hi].atoms.size() && !changed; ++bi) {
            if (gi == hi && ai == bi) continue;
            const Atom& a = pars[gi].atoms[ai];
            const Atom& b = pars[hi].atoms[bi];
            if (a.predicate != b.predicate) continue;
            const Relate r = relate(m, pars[gi], a, pars[hi], b);
            if (r.relation != Relation::NeedsSplit) continue;
            auto pieces = apply_split(m, pars[gi], r.split);
            pars.erase(pars.begin() + static_cast<std::ptrdiff_t>(gi));
            pars.insert(pars.begin() + static_cast<std::ptrdiff_t>(gi), pieces.begin(), pieces.end());
            if (++result.splits > opts.split_budget)
              throw FixpointBudgetExceeded("shattering did not stabilise within " +
                                           std::to_string(opts.split_budget) + " splits");
            changed = true;
          }
  }

  // Cells: classes of equal rv-sets per predicate, in discovery order.
  std::vector<std::vector<std::vector<Occurrence>>> cells(m.predicates.size());
  for (std::size_t gi = 0; gi < pars.size(); ++gi)
    for (std::size_t ai = 0; ai < pars[gi].atoms.size(); ++ai) {
      const Atom& a = pars[gi].atoms[ai];
      auto& classes = cells[a.predicate];
      bool placed = false;
      for (auto& cls : classes) {
        const auto& rep = cls.front();
        const auto& g = pars[rep.parfactor];
        const Atom& b = g.atoms[rep.atom];
        if (relate(m, pars[gi], a, g, b).relation == Relation::Contained &&
            relate(m, g, b, pars[gi], a).relation == Relation::Contained) {
          cls.push_back({gi, ai});
          placed = true;
          break;
        }
      }
      if (!placed) classes.push_back({{gi, ai}});
    }

  Model out;
  out.domains = m.domains;
  std::set<std::string> taken;
  for (const auto& p : m.predicates) taken.insert(p.name);
  for (PredicateId p = 0; p < m.predicates.size(); ++p) {
    if (cells[p].size() <= 1) {
      const PredicateId id = out.add_predicate(m.predicates[p]);
      for (const auto& cls : cells[p])
        for (const auto& o : cls) pars[o.parfactor].atoms[o.atom].predicate = id;
      continue;
    }
    std::size_t suffix = 0;
    for (const auto& cls : cells[p]) {
      std::string name;
      do {
        name = m.predicates[p].name + "__" + std::to_string(suffix++);
      } while (taken.count(name));
      taken.insert(name);
      Predicate fresh = m.predicates[p];
      fresh.name = name;
      const auto& rep = cls.front();
      result.renames.cells.push_back(
          {m.predicates[p].name, name, local_pattern(m, pars[rep.parfactor], pars[rep.parfactor].atoms[rep.atom])});
      const PredicateId id = out.add_predicate(std::move(fresh));
      for (const auto& o : cls) pars[o.parfactor].atoms[o.atom].predicate = id;
    }
  }
  out.parfactors = std::move(pars);
  result.model = std::move(out);
  return result;
}

bool is_completely_shattered(const Model& m) {
  for (std::size_t gi = 0; gi < m.parfactors.size(); ++gi)
    for (const auto& a : m.parfactors[gi].atoms)
      for (std::size_t hi = 0; hi < m.parfactors.size(); ++hi)
        for (const auto& b : m.parfactors[hi].atoms) {
          if (a.predicate != b.predicate) continue;
          const auto r = relate(m, m.parfactors[gi], a, m.parfactors[hi], b).relation;
          if (r == Relation::NeedsSplit) return false;
          if (r == Relation::Disjoint) continue;
          if (relate(m, m.parfactors[hi], b, m.parfactors[gi], a).relation != Relation::Contained) return false;
        }
  return true;
}

bool verify_shattered_by_enumeration(const Model& shattered, const PredicateRenameMap& renames) {
  struct Entry {
    std::string predicate;
    std::set<GroundAtom> rvs;
  };
  std::vector<Entry> entries;
  for (const auto& g : shattered.parfactors)
    for (const auto& a : g.atoms) {
      Entry e{shattered.predicates[a.predicate].name, {}};
      for_each_ground_substitution(shattered, g, [&](std::span<const ConstId> binding) {
        GroundAtom ga = ground_atom(shattered, a, binding);
        ga.predicate = renames.original_of(ga.predicate);
        e.rvs.insert(std::move(ga));
      });
      entries.push_back(std::move(e));
    }
  for (std::size_t i = 0; i < entries.size(); ++i)
    for (std::size_t j = i + 1; j < entries.size(); ++j) {
      const auto& x = entries[i];
      const auto& y = entries[j];
      if (x.rvs == y.rvs) {
        if (x.predicate != y.predicate) return false;
        continue;
      }
      if (x.predicate == y.predicate) return false;
      std::vector<GroundAtom> common;
      std::set_intersection(x.rvs.begin(), x.rvs.end(), y.rvs.begin(), y.rvs.end(), std::back_inserter(common));
      if (!common.empty()) return false;
    }
  return true;
}

}  // namespace uarmpe
