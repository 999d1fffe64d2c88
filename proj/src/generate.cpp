#include "uarmpe/generate.hpp"

#include <cmath>
#include <random>

#include "uarmpe/errors.hpp"

namespace uarmpe {

Model gen_random(std::size_t n_parfactors, std::size_t domain_size, std::uint64_t seed) {
  if (n_parfactors == 0 || domain_size == 0) throw ValidationError("gen_random needs n >= 1 and a non-empty domain");
  std::mt19937_64 rng(seed);
  Model m;
  const DomainId d = m.add_domain({"D", domain_size, {}});
  const std::size_t n_preds = 2 * n_parfactors;
  for (std::size_t i = 0; i < n_preds; ++i) m.add_predicate({"p" + std::to_string(i), {d}, 2});

  static const char* const kVarNames[3] = {"X", "Y", "Z"};
  for (std::size_t f = 0; f < n_parfactors; ++f) {
    PredicateId preds[3];
    unsigned slots[3];
    for (int a = 0; a < 3; ++a) {
      preds[a] = static_cast<PredicateId>(rng() % n_preds);
      slots[a] = static_cast<unsigned>(rng() % 3);
    }
    // Declare only the variables in use, in X, Y, Z order.
    Parfactor g;
    VarId id_of[3] = {0, 0, 0};
    for (unsigned s = 0; s < 3; ++s)
      if (slots[0] == s || slots[1] == s || slots[2] == s) {
        id_of[s] = static_cast<VarId>(g.vars.size());
        g.vars.push_back({kVarNames[s], d});
      }
    for (int a = 0; a < 3; ++a) g.atoms.push_back({preds[a], {Term::var(id_of[slots[a]])}});
    std::vector<double> logs(8);
    for (auto& w : logs) w = std::log((static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53);
    g.table = std::make_shared<PotentialTable>(std::vector<std::uint32_t>{2, 2, 2}, std::move(logs));
    m.parfactors.push_back(std::move(g));
  }
  return m;
}

Model with_domain_size(const Model& m, std::size_t size) {
  if (size == 0) throw ValidationError("domain size must be positive");
  Model out = m;
  for (auto& d : out.domains) {
    d.size = size;
    d.names.clear();
  }
  for (const auto& g : out.parfactors) {
    for (const auto& a : g.atoms)
      for (const auto& t : a.args)
        if (t.is_const() && t.id >= size) throw ValidationError("a constant of the model falls outside the resized domain");
    for (const auto& dq : g.constraint.pairs())
      if (dq.rhs.is_const() && dq.rhs.id >= size)
        throw ValidationError("a constant of the model falls outside the resized domain");
  }
  return out;
}

}  // namespace uarmpe
