#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"
#include "uarmpe/errors.hpp"
#include "uarmpe/generate.hpp"
#include "uarmpe/io.hpp"
#include "uarmpe/pipeline.hpp"
#include "uarmpe/shatter.hpp"
#include "uarmpe/uar.hpp"

using namespace uarmpe;
using namespace uarmpe::testing;

namespace {

SolveOptions options(Engine e, bool uar) {
  SolveOptions o;
  o.engine = e;
  o.use_uar = uar;
  return o;
}

Model no_ua_model(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return randomize_tables(with_domain_size(fixture("no_ua"), n), rng);
}

std::vector<std::string> lines(const Model& m) {
  std::vector<std::string> out;
  for (const auto& g : m.parfactors) out.push_back(format_parfactor(m, g));
  return out;
}

}  // namespace

TEST(Solve, AllRoutesAgreeWithOracle) {
  for (const auto& name : fixture_names()) {
    const Model m = fixture(name);
    const SolveResult ve = solve(m, options(Engine::Ve, true));
    const SolveResult bf = solve(m, options(Engine::Brute, true));
    const SolveResult raw = solve(m, options(Engine::Ve, false));
    EXPECT_NEAR(ve.log_weight, bf.log_weight, 1e-9) << name;
    EXPECT_NEAR(ve.log_weight, raw.log_weight, 1e-9) << name;
    if (space_size(m) <= 65536) EXPECT_NEAR(ve.log_weight, oracle_mpe(m).log_weight, 1e-9) << name;
    for (const auto* r : {&ve, &bf, &raw}) {
      EXPECT_EQ(r->assignment.size(), oracle_rvs(m).size()) << name;
      EXPECT_NEAR(oracle_weight(m, r->assignment), r->log_weight, 1e-9) << name;
    }
  }
}

TEST(Solve, FriendsKnowsMatchesExhaustiveSearch) {
  const Model m = fixture("friends_knows");
  const double expected = oracle_mpe(m).log_weight;
  EXPECT_NEAR(solve(m, options(Engine::Ve, true)).log_weight, expected, 1e-9);
  EXPECT_NEAR(solve(m, options(Engine::Brute, false)).log_weight, expected, 1e-9);
}

TEST(Solve, IdentityReductionGivesSameResult) {
  const Model m = fixture("no_ua");
  const SolveResult a = solve(m, options(Engine::Ve, true));
  const SolveResult b = solve(m, options(Engine::Ve, false));
  EXPECT_TRUE(a.map.empty());
  EXPECT_EQ(a.assignment, b.assignment);
  EXPECT_EQ(a.log_weight, b.log_weight);
}

TEST(Solve, RecordsStages) {
  const SolveResult r = solve(fixture("shared_p_s"));
  EXPECT_GE(r.stats.detect_ms, 0.0);
  EXPECT_GE(r.stats.total_ms, r.stats.solve_ms);
  EXPECT_EQ(r.engine, "ve");
  ASSERT_EQ(r.lifted.size(), 4u);
  EXPECT_EQ(r.lifted[0].predicate, "p");
  EXPECT_TRUE(r.lifted[0].kept_positions.empty());
  ASSERT_EQ(r.lifted[0].blocks.size(), 1u);
}

TEST(Solve, BudgetErrorsPropagate) {
  const Model m = with_domain_size(fixture("friends_knows"), 5);
  SolveOptions o = options(Engine::Brute, false);
  EXPECT_THROW(solve(m, o), BudgetExceeded);
}

TEST(Solve, RejectsInvalidModels) {
  Model m = fixture("abc");
  m.parfactors[0].atoms[0].args.clear();
  EXPECT_THROW(solve(m), ValidationError);
}

TEST(Solve, AutoConditioningKeepsOptimum) {
  const Model m = with_domain_size(fixture("friends_knows"), 6);
  SolveOptions plain = options(Engine::Ve, true);
  plain.auto_condition = false;
  const SolveResult a = solve(m, plain);
  SolveOptions small = options(Engine::Ve, true);
  small.engine_options.max_table_entries = 16;
  const SolveResult b = solve(m, small);
  EXPECT_EQ(b.stats.conditioned_on, "fr′");
  EXPECT_EQ(b.stats.sub_solves, 7u);
  EXPECT_NEAR(a.log_weight, b.log_weight, 1e-9);
}

TEST(Solve, ExplicitConditionAcceptsOriginalName) {
  const Model m = with_domain_size(fixture("friends_knows"), 4);
  SolveOptions o = options(Engine::Ve, true);
  o.condition = "fr";
  const SolveResult r = solve(m, o);
  EXPECT_EQ(r.stats.conditioned_on, "fr′");
  EXPECT_NEAR(r.log_weight, solve(m).log_weight, 1e-9);
  o.condition = "nope";
  EXPECT_THROW(solve(m, o), ValidationError);
}

TEST(Conditional, SubModelStructure) {
  const Model m = no_ua_model(4, 1);
  const PredicateId p = *m.find_predicate("p");
  const Model mid = conditioned_submodel(m, p, 2);
  EXPECT_EQ(lines(mid), (std::vector<std::string>{"q_0(X_0)", "q_1(X_1)", "q_0(Y_0)", "q_1(Y_1)"}));
  for (const auto& a : random_variables(mid)) EXPECT_NE(a.predicate, "p");

  const SimplifyResult r = simplify(shatter(mid).model);
  ASSERT_EQ(r.model.parfactors.size(), 4u);
  for (const auto& g : r.model.parfactors) EXPECT_TRUE(g.vars.empty());
  std::vector<double> exponents;
  for (const auto& pr : r.map.parfactors) exponents.push_back(pr.exponent);
  EXPECT_EQ(exponents, (std::vector<double>{2, 2, 2, 2}));

  const Model skewed = conditioned_submodel(m, p, 1);
  const SimplifyResult rs = simplify(shatter(skewed).model);
  exponents.clear();
  for (const auto& pr : rs.map.parfactors) exponents.push_back(pr.exponent);
  EXPECT_EQ(exponents, (std::vector<double>{1, 3, 1, 3}));

  EXPECT_EQ(conditioned_submodel(m, p, 0).parfactors.size(), 2u);
  EXPECT_EQ(conditioned_submodel(m, p, 4).parfactors.size(), 2u);
}

TEST(Conditional, FoldsTargetIntoTables) {
  const Model m = no_ua_model(3, 2);
  const PredicateId p = *m.find_predicate("p");
  const Model sub = conditioned_submodel(m, p, 1);
  // q(Y) with p summed over one 0 and two 1s: φ2(0, q) · φ2(1, q)^2.
  const auto& phi2 = *m.parfactors[1].table;
  const auto& y0 = *sub.parfactors[2].table;
  for (std::uint32_t q = 0; q < 2; ++q)
    EXPECT_NEAR(y0.log_weights[q], phi2.log_weights[q] + 2 * phi2.log_weights[2 + q], 1e-12);
}

TEST(Conditional, MatchesExhaustiveSearch) {
  for (std::size_t n : {2, 4, 6}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Model m = no_ua_model(n, 100 * n + seed);
      const SolveResult r = conditional_ua_solve(m, "p");
      const OracleMpe o = oracle_mpe(m);
      EXPECT_NEAR(r.log_weight, o.log_weight, 1e-9) << "n=" << n;
      EXPECT_NEAR(oracle_weight(m, r.assignment), r.log_weight, 1e-9);
      EXPECT_EQ(r.stats.sub_solves, n + 1);
    }
  }
}

TEST(Conditional, TargetZerosComeFirst) {
  const Model m = no_ua_model(5, 9);
  const SolveResult r = conditional_ua_solve(m, "p");
  bool seen_one = false;
  for (ConstId c = 0; c < 5; ++c) {
    const auto v = r.assignment.at({"p", {c}});
    if (seen_one) EXPECT_EQ(v, 1u);
    seen_one = seen_one || v == 1;
  }
}

TEST(Conditional, RejectsUnsupportedTargets) {
  EXPECT_THROW(conditional_ua_solve(fixture("shared_p_s"), "p"), UnsupportedShape);
  EXPECT_THROW(conditional_ua_solve(fixture("no_ua"), "zzz"), ValidationError);
  Model ternary = fixture("no_ua");
  ternary.predicates[0].range = 3;
  EXPECT_FALSE(can_condition_on(ternary, 0));
  EXPECT_TRUE(can_condition_on(fixture("no_ua"), 0));
}

TEST(Solve, RandomModelsAgreeWithOracle) {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 80; ++seed) {
    const Model m = gen_random(1 + seed % 3, 1 + (seed / 3) % 3, seed);
    if (random_variables(m).size() > 16) continue;
    const double expected = oracle_mpe(m).log_weight;
    const SolveResult r = solve(m, options(Engine::Ve, true));
    EXPECT_NEAR(r.log_weight, expected, 1e-9) << seed;
    EXPECT_NEAR(oracle_weight(m, r.assignment), expected, 1e-9) << seed;
    ++checked;
  }
  EXPECT_GT(checked, 50);
}
