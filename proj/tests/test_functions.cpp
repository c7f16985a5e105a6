#include "campanato/functions.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

namespace campanato {
namespace {

TEST(Functions, IndicatorAndConstant) {
  const TreePtr t = share(build_dyadic(3));
  const LeafFunction chi = LeafFunction::indicator(t, AtomId{1, 1});
  EXPECT_DOUBLE_EQ(expectation(chi), 0.5);
  EXPECT_DOUBLE_EQ(atom_average(chi, AtomId{2, 3}), 1.0);
  EXPECT_DOUBLE_EQ(atom_average(chi, AtomId{0, 0}), 0.5);
  EXPECT_DOUBLE_EQ(linf_norm(LeafFunction::constant(t, -2.5)), 2.5);
}

TEST(Functions, ConstructorValidation) {
  const TreePtr t = share(build_dyadic(2));
  EXPECT_THROW(LeafFunction(t, {1.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(LeafFunction(t, {1.0, 2.0, 3.0, INFINITY}), std::invalid_argument);
  EXPECT_THROW(LeafFunction(nullptr, {}), std::invalid_argument);
  const TreePtr floating = share(build_from_spec(SplitNode::split({Fraction::floating(0.5), Fraction::floating(0.5)})));
  EXPECT_THROW(ExactLeafFunction(floating, {Rational(1), Rational(2)}), std::invalid_argument);
}

TEST(Functions, ArithmeticRejectsForeignTrees) {
  const LeafFunction a = LeafFunction::constant(share(build_dyadic(2)), 1.0);
  const LeafFunction b = LeafFunction::constant(share(build_dyadic(3)), 1.0);
  EXPECT_THROW(a + b, std::invalid_argument);
  const LeafFunction c = LeafFunction::constant(share(build_dyadic(2)), 2.0);
  EXPECT_DOUBLE_EQ((a + c)[0], 3.0);
}

TEST(Functions, ConditionalExpectationMatchesOracle) {
  const TreePtr t = share(build_from_spec(oracle::random_split_spec(3, 4), 4));
  const LeafFunction f = random_function(t, 42);
  const std::vector<double> v(f.values().begin(), f.values().end());
  const auto avgs = oracle::averages(*t, v);
  for (int n = 0; n <= t->depth(); ++n) {
    const LeafFunction en = conditional_expectation(f, n);
    for (const Atom& a : t->level(n)) {
      for (std::size_t i = a.first_leaf; i < a.first_leaf + a.leaf_count; ++i) {
        EXPECT_NEAR(en[i], avgs[n][a.id.index], 1e-14);
      }
    }
    EXPECT_TRUE(is_measurable_at(en, n));
  }
  EXPECT_THROW(conditional_expectation(f, 5), std::out_of_range);
}

TEST(Functions, ExactMartingale) {
  const TreePtr t = share(build_dyadic(4));
  const ExactLeafFunction f = to_exact(random_function(t, 9));
  const auto mg = martingale_of(f);
  EXPECT_TRUE(mg.is_martingale());
  EXPECT_EQ(mg[0][0], expectation(f));
  EXPECT_TRUE(mg[4] == f);
}

TEST(Functions, CentralIntegral) {
  const TreePtr t = share(build_dyadic(2));
  const LeafFunction f(t, {0.0, 1.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(central_p_integral(f, AtomId{0, 0}, 0, 1.0), 1.0);  // (1.5+0.5+0.5+1.5)/4
  EXPECT_DOUBLE_EQ(central_p_integral(f, AtomId{1, 0}, 1, 2.0), 0.125);
  EXPECT_THROW(central_p_integral(f, AtomId{1, 0}, 0, 1.0), std::invalid_argument);
  EXPECT_THROW(central_p_integral(f, AtomId{0, 0}, 0, 0.5), std::invalid_argument);
}

TEST(Functions, RestrictAndLift) {
  const TreePtr t = share(build_dyadic(5));
  const TreePtr t2 = share(t->truncated(2));
  const LeafFunction f = random_function(t, 5);
  const LeafFunction r = restrict_to_level(f, 2, t2);
  ASSERT_EQ(r.size(), 4u);
  const LeafFunction back = lift_from_level(r, t);
  const LeafFunction e2 = conditional_expectation(f, 2);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_DOUBLE_EQ(back[i], e2[i]);
}

TEST(Functions, RandomFunctionIsSeeded) {
  const TreePtr t = share(build_dyadic(4));
  EXPECT_TRUE(random_function(t, 1) == random_function(t, 1));
  EXPECT_FALSE(random_function(t, 1) == random_function(t, 2));
  const LeafFunction f = random_function(t, 3, -2.0, 5.0);
  for (double v : f.values()) {
    EXPECT_GE(v, -2.0);
    EXPECT_LT(v, 5.0);
  }
}

TEST(Functions, LpNorm) {
  const TreePtr t = share(build_dyadic(1));
  const LeafFunction f(t, {3.0, -4.0});
  EXPECT_DOUBLE_EQ(lp_norm(f, 1.0), 3.5);
  EXPECT_DOUBLE_EQ(lp_norm(f, 2.0), std::sqrt(12.5));
}

}  // namespace
}  // namespace campanato
