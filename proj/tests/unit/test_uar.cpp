#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"
#include "uarmpe/errors.hpp"
#include "uarmpe/generate.hpp"
#include "uarmpe/io.hpp"
#include "uarmpe/shatter.hpp"
#include "uarmpe/symbolic.hpp"
#include "uarmpe/uar.hpp"

using namespace uarmpe;
using namespace uarmpe::testing;

namespace {

std::vector<std::string> lines(const Model& m) {
  std::vector<std::string> out;
  for (const auto& g : m.parfactors) out.push_back(format_parfactor(m, g));
  return out;
}

Model single(const Model& m, const Parfactor& g) {
  Model out = m;
  out.parfactors = {g};
  return out;
}

const char* kDiagonal = R"(
domain D = 3
predicate p(D, D) range 2
parfactor {
  vars: X:D, Y:D, Z:D
  atoms: p(X, Y), p(X, Z)
  table: [1.7, 0.4, 0.9, 1.2]
}
)";

}  // namespace

TEST(ArityReduce, DropsRemovedPositions) {
  Model m = parse_model(R"(
domain D = 3
predicate p(D, D, D) range 2
predicate q(D) range 2
parfactor {
  vars: X:D, Y:D, Z:D
  atoms: p(X, Y, Z), q(Y)
  table: [1, 1, 1, 1]
}
)");
  const AnchoredFormula f = formula(m, "p", {false, true, false});
  const PredicateId red = add_reduced(m, f);
  const Parfactor& g = m.parfactors[0];
  EXPECT_EQ(format_atom(m, g, arity_reduce(g.atoms[0], f, red)), "p′(Y)");
  EXPECT_EQ(format_atom(m, g, arity_reduce(g.atoms[1], f, red)), "q(Y)");
}

TEST(ArityReduce, AllPositionsKeptIsIdentity) {
  Model m = fixture("friends_knows");
  const AnchoredFormula f = formula(m, "k", {true, true});
  const Parfactor& g = m.parfactors[0];
  const Atom a = arity_reduce(g.atoms[2], f, 99);
  EXPECT_EQ(format_atom(m, g, a), "k(Y, Z)");
}

TEST(UarParfactor, RemovedVariableWithoutConstraint) {
  Model m = fixture("removed_free_var");
  const AnchoredFormula f = formula(m, "q", {false, true});
  const PredicateId red = add_reduced(m, f);
  const Parfactor& g = m.parfactors[0];
  const ParfactorUar r = uar_parfactor(m, g, f, red);
  EXPECT_EQ(format_parfactor(m, r.parfactor), "p(X), q′(Z)");
  EXPECT_EQ(r.exponent, 3.0);
  EXPECT_EQ(exponent_expression(m, g, r.removed, r.exponent), "|Y|");
  for (std::size_t i = 0; i < g.table->size(); ++i)
    EXPECT_NEAR(r.parfactor.table->log_weights[i], 3.0 * g.table->log_weights[i], 1e-12);
}

TEST(UarParfactor, RemovedVariableUnderDisequality) {
  Model m = fixture("removed_diseq_var");
  const AnchoredFormula f = formula(m, "p", {false});
  const PredicateId red = add_reduced(m, f);
  const Parfactor& g = m.parfactors[0];
  const ParfactorUar r = uar_parfactor(m, g, f, red);
  EXPECT_EQ(format_parfactor(m, r.parfactor), "p′, q(Y)");
  EXPECT_EQ(r.exponent, 2.0);
  EXPECT_EQ(exponent_expression(m, g, r.removed, r.exponent), "|X|−1");
}

TEST(UarParfactor, NoExponentWhenVariableStays) {
  Model m = fixture("kept_var");
  const AnchoredFormula f = formula(m, "q", {false, true});
  const PredicateId red = add_reduced(m, f);
  const Parfactor& g = m.parfactors[0];
  const ParfactorUar r = uar_parfactor(m, g, f, red);
  EXPECT_EQ(format_parfactor(m, r.parfactor), "p(Y), q′(Z)");
  EXPECT_EQ(r.exponent, 1.0);
  EXPECT_EQ(exponent_expression(m, g, r.removed, r.exponent), "1");
  EXPECT_EQ(*r.parfactor.table, *g.table);
}

TEST(UarParfactor, BindingDependentExponentThrows) {
  Model m = parse_model(R"(
domain D = 4
predicate p(D) range 2
predicate q(D) range 2
predicate r(D) range 2
parfactor {
  vars: X:D, Y:D, Z:D
  constraint: X != Y, Y != Z
  atoms: p(X), q(Y), r(Z)
  table: [1, 1, 1, 1, 1, 1, 1, 1]
}
)");
  const AnchoredFormula f = formula(m, "q", {false});
  const PredicateId red = add_reduced(m, f);
  EXPECT_THROW(uar_parfactor(m, m.parfactors[0], f, red), NonNormalForm);
}

TEST(UarParfactor, CollapsedAtomsKeepTheDiagonal) {
  Model m = parse_model(kDiagonal);
  const AnchoredFormula f = formula(m, "p", {true, false});
  const PredicateId red = add_reduced(m, f);
  const Parfactor& g = m.parfactors[0];
  const ParfactorUar r = uar_parfactor(m, g, f, red);
  EXPECT_EQ(format_parfactor(m, r.parfactor), "p′(X)");
  EXPECT_EQ(r.exponent, 9.0);
  ASSERT_EQ(r.parfactor.table->size(), 2u);
  EXPECT_NEAR(r.parfactor.table->log_weights[0], 9.0 * g.table->log_weights[0], 1e-12);
  EXPECT_NEAR(r.parfactor.table->log_weights[1], 9.0 * g.table->log_weights[3], 1e-12);

  const SimplifyResult s = simplify(m);
  EXPECT_NEAR(oracle_mpe(s.model).log_weight, oracle_mpe(m).log_weight, 1e-9);
}

TEST(Simplify, FriendsKnows) {
  const Model m = fixture("friends_knows");
  const SimplifyResult r = simplify(m);
  EXPECT_EQ(lines(r.model), (std::vector<std::string>{"fr′(Y), fr′(Z), k(Y, Z)"}));
  ASSERT_EQ(r.map.parfactors.size(), 1u);
  EXPECT_EQ(r.map.parfactors[0].exponent_expr, "|X|");
  EXPECT_EQ(r.map.parfactors[0].exponent, 3.0);
  ASSERT_EQ(r.map.predicates.size(), 1u);
  EXPECT_EQ(r.map.predicates[0].original, "fr");
  EXPECT_EQ(r.map.predicates[0].reduced, "fr′");
  EXPECT_EQ(r.map.predicates[0].kept, (std::vector<std::size_t>{0}));
  EXPECT_EQ(r.map.predicates[0].removed, (std::vector<std::size_t>{1}));
}

TEST(Simplify, SharedPS) {
  const Model m = fixture("shared_p_s");
  const SimplifyResult r = simplify(m);
  EXPECT_EQ(lines(r.model), (std::vector<std::string>{"p′, q′(Z), r′(Z), s′(Z)", "s′(V), s′(W), p′"}));
  ASSERT_EQ(r.map.parfactors.size(), 2u);
  for (const auto& pr : r.map.parfactors) {
    EXPECT_EQ(pr.exponent_expr, "|X|·|Y|");
    EXPECT_EQ(pr.exponent, 4.0);
  }
  ASSERT_FALSE(r.trace.empty());
  EXPECT_EQ(r.trace.back().title, "UA reduction");
  EXPECT_EQ(r.trace.back().rows,
            (std::vector<std::string>{"φ1^(|X|·|Y|) : p′, q′(Z), r′(Z), s′(Z)", "φ2^(|X|·|Y|) : s′(V), s′(W), p′"}));
}

TEST(Simplify, NoUniformAssignmentIsIdentity) {
  const Model m = fixture("no_ua");
  const SimplifyResult r = simplify(m);
  EXPECT_TRUE(r.map.empty());
  EXPECT_TRUE(structurally_equal(r.model, m));
}

TEST(Simplify, RequiresShatteredInput) {
  EXPECT_THROW(simplify(fixture("diagonal_split")), ValidationError);
  EXPECT_NO_THROW(simplify(shatter(fixture("diagonal_split")).model));
}

TEST(Simplify, NeverGrowsModel) {
  std::vector<Model> models;
  for (const auto& name : fixture_names()) models.push_back(shatter(fixture(name)).model);
  for (std::uint64_t seed = 0; seed < 50; ++seed) models.push_back(shatter(gen_random(1 + seed % 3, 3, seed)).model);
  for (const auto& m : models) {
    const SimplifyResult r = simplify(m);
    std::size_t before = 0, after = 0;
    for (const auto& g : m.parfactors) before += g.table->size();
    for (const auto& g : r.model.parfactors) after += g.table->size();
    EXPECT_LE(after, before);
    EXPECT_LE(random_variables(r.model).size(), random_variables(m).size());
  }
}

TEST(Simplify, ExponentTimesReducedCountIsOriginalCount) {
  for (const auto& name : fixture_names()) {
    for (std::size_t size : {1, 2, 3, 4}) {
      const Model m = shatter(with_domain_size(fixture(name), size)).model;
      const SimplifyResult r = simplify(m);
      for (const auto& pr : r.map.parfactors) {
        const auto original = static_cast<double>(oracle_ground(single(m, m.parfactors[pr.index])).size());
        const auto reduced = static_cast<double>(oracle_ground(single(r.model, r.model.parfactors[pr.index])).size());
        EXPECT_EQ(pr.exponent * reduced, original) << name << " size " << size << " parfactor " << pr.index;
      }
    }
  }
}

TEST(Expand, NullaryBroadcasts) {
  const Model m = fixture("two_parfactors");
  const SimplifyResult r = simplify(m);
  Assignment v;
  for (const auto& a : random_variables(r.model)) v[a] = a.predicate == "q′" ? 1 : 0;
  const Assignment full = expand_assignment(m, r.map, v);
  for (ConstId z = 0; z < 3; ++z) EXPECT_EQ(full.at({"q", {z}}), 1u);
}

TEST(Expand, ReducedValueCoversRemovedPositions) {
  const Model m = fixture("friends_knows");
  const SimplifyResult r = simplify(m);
  Assignment v;
  for (const auto& a : random_variables(r.model)) v[a] = a.predicate == "fr′" ? (a.args[0] == 1 ? 1u : 0u) : 0u;
  const Assignment full = expand_assignment(m, r.map, v);
  for (ConstId y = 0; y < 3; ++y)
    for (ConstId x = 0; x < 3; ++x) EXPECT_EQ(full.at({"fr", {y, x}}), y == 1 ? 1u : 0u);
  EXPECT_EQ(full.size(), random_variables(m).size());
}

TEST(Expand, TransfersWeight) {
  std::mt19937_64 rng(29);
  std::vector<std::pair<std::string, Model>> models;
  for (const auto& name : fixture_names()) models.emplace_back(name, shatter(fixture(name)).model);
  models.emplace_back("diagonal", parse_model(kDiagonal));
  for (const auto& [name, m] : models) {
    const SimplifyResult r = simplify(m);
    for (int i = 0; i < 100; ++i) {
      const Assignment vp = random_assignment(r.model, rng);
      const Assignment v = expand_assignment(m, r.map, vp);
      ASSERT_NEAR(oracle_weight(m, v), oracle_weight(r.model, vp), 1e-9) << name;
    }
  }
}

TEST(Simplify, PreservesOptimum) {
  for (const auto& name : fixture_names()) {
    const Model m = shatter(fixture(name)).model;
    if (space_size(m) > 65536) continue;
    const SimplifyResult r = simplify(m);
    const OracleMpe reduced = oracle_mpe(r.model);
    EXPECT_NEAR(reduced.log_weight, oracle_mpe(m).log_weight, 1e-9) << name;
    EXPECT_NEAR(oracle_weight(m, expand_assignment(m, r.map, reduced.argmax)), reduced.log_weight, 1e-9) << name;
  }
}
