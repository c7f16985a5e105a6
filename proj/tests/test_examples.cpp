// Worked examples with hand-derived values for every module.

#include "campanato/constructions.hpp"
#include "campanato/multiplier.hpp"
#include "campanato/norms.hpp"
#include "campanato/phi.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace campanato {
namespace {

TreePtr chain_tree(int depth) { return share(build_from_spec(SplitNode::persisting(), depth)); }

TEST(Examples, DyadicTrees) {
  const FiltrationTree t0 = build_dyadic(0);
  EXPECT_EQ(t0.atom_count(), 1u);
  EXPECT_EQ(t0.root().measure, 1.0);
  const FiltrationTree t10 = build_dyadic(10);
  EXPECT_EQ(t10.leaf_count(), 1024u);
  for (int n = 0; n <= 10; ++n) {
    Rational sum(0);
    for (const Atom& a : t10.level(n)) sum += t10.exact_measure(a.id);
    EXPECT_EQ(sum, 1);
  }
}

TEST(Examples, SpecTrees) {
  const FiltrationTree third = build_from_spec(SplitNode::split({Fraction::parse("1/3"), Fraction::parse("2/3")}));
  EXPECT_EQ(third.exact_measure(AtomId{1, 1}), Rational(2, 3));
  EXPECT_DOUBLE_EQ(regularity_constant(third), 3.0);

  const TreePtr chain = chain_tree(5);
  EXPECT_EQ(chain->leaf_count(), 1u);
  EXPECT_EQ(chain->depth(), 5);
  EXPECT_DOUBLE_EQ(regularity_constant(*chain), 1.0);
  EXPECT_TRUE(check_chain_gaps(*chain, 1.0).passed());
  EXPECT_EQ(chain_to_root(*chain, AtomId{5, 0}).size(), 6u);

  SplitNode halves = SplitNode::persisting();
  for (int i = 0; i < 4; ++i) halves = SplitNode::split({Fraction::parse("1/2"), Fraction::parse("1/2")}, {halves, halves});
  EXPECT_TRUE(build_from_spec(halves) == build_dyadic(4));

  EXPECT_DOUBLE_EQ(regularity_constant(build_dyadic(7)), 2.0);
  EXPECT_TRUE(check_chain_gaps(build_dyadic(7), 2.0).passed());

  const FiltrationTree skew = build_from_spec(SplitNode::split({Fraction::parse("0.01"), Fraction::parse("0.99")}));
  // The 0.01 child needs P(parent) <= R P(child), so R = 100 is the least passing value.
  EXPECT_DOUBLE_EQ(regularity_constant(skew), 100.0);
  EXPECT_TRUE(check_chain_gaps(skew, 100.0).passed());
  const auto r99 = check_chain_gaps(skew, 99.0);
  ASSERT_FALSE(r99.passed());
  EXPECT_EQ(r99.checks.front().failures.size(), 1u);
  EXPECT_NE(r99.checks.front().failures.front().find("above R"), std::string::npos);
  EXPECT_FALSE(check_chain_gaps(skew, 2.0).passed());

  const FiltrationTree d3 = build_dyadic(3);
  const auto c = chain_to_root(d3, AtomId{3, 0});
  for (int k = 0; k <= 3; ++k) EXPECT_EQ(d3.atom(c[k]).measure, std::ldexp(1.0, -k));
  EXPECT_EQ(chain_to_root(build_dyadic(0), AtomId{0, 0}), (std::vector<AtomId>{AtomId{0, 0}}));
}

TEST(Examples, Averages) {
  const TreePtr t2 = share(build_dyadic(2));
  const ExactLeafFunction f(t2, {Rational(1), Rational(0), Rational(0), Rational(0)});
  const auto mg = martingale_of(f);
  EXPECT_EQ(mg[0][3], Rational(1, 4));
  EXPECT_EQ(mg[1][0], Rational(1, 2));
  EXPECT_EQ(mg[1][3], Rational(0));
  EXPECT_TRUE(mg[2] == f);
  EXPECT_EQ(atom_average(ExactLeafFunction::indicator(t2, AtomId{2, 1}), AtomId{1, 0}), Rational(1, 2));

  const TreePtr t1 = share(build_dyadic(1));
  EXPECT_DOUBLE_EQ(atom_average(LeafFunction(t1, {3.0, 1.0}), AtomId{0, 0}), 2.0);
  const LeafFunction ten(t1, {1.0, 0.0});
  EXPECT_DOUBLE_EQ(central_p_integral(ten, AtomId{0, 0}, 0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(central_p_integral(ten, AtomId{0, 0}, 0, 2.0), 0.25);
  EXPECT_DOUBLE_EQ(central_p_integral(ten, AtomId{1, 0}, 1, 2.0), 0.0);

  const LeafFunction pm(t1, {1.0, -1.0});
  EXPECT_DOUBLE_EQ(linf_norm(pm), 1.0);
  EXPECT_DOUBLE_EQ(lp_norm(pm, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(expectation(pm), 0.0);
  const TreePtr t3 = share(build_dyadic(3));
  const LeafFunction leaf = LeafFunction::indicator(t3, AtomId{3, 2});
  EXPECT_DOUBLE_EQ(lp_norm(leaf, 2.0), std::sqrt(0.125));
  EXPECT_DOUBLE_EQ(expectation(leaf), 0.125);
}

TEST(Examples, PhiValues) {
  EXPECT_DOUBLE_EQ(Phi::power(1.0)(0.5), 0.5);
  for (const Phi& phi : {Phi::one(), Phi::psi(), Phi::power(0.4), Phi::table({{0.1, 2.0}, {1.0, 1.0}})}) {
    EXPECT_DOUBLE_EQ(phi_star(phi, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(quotient_phi(phi)(1.0), phi(1.0));
  }
  const auto grid = default_grid();
  EXPECT_NEAR(doubling_constant(Phi::power(-0.5), grid).value, std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(int_condition_constant(Phi::power(-0.5), 1.0, grid).value, 2.0, 1e-9);
  EXPECT_NEAR(int_condition_power_weight(Phi::one(), 1.0, grid).value, 1.0, 1e-9);
  EXPECT_NEAR(int_condition_power_weight(Phi::one(), 2.0, grid).value, 2.0, 1e-9);
  EXPECT_NEAR(int_condition_power_weight(Phi::power(1.0), 1.0, grid).value, 0.5, 1e-9);
  const auto [inc, dec] = almost_monotone_constants(Phi::power(1.0), grid);
  EXPECT_DOUBLE_EQ(inc, 1.0);
  EXPECT_NEAR(dec, 1.0 / grid.front(), 1e-3 / grid.front());
  const auto [pinc, pdec] = almost_monotone_constants(Phi::psi(), grid);
  EXPECT_DOUBLE_EQ(pinc, 1.0);
  EXPECT_GT(pdec, 20.0);
  const RegimeReport neg = classify_regime(Phi::power(-0.3), geometric_grid(1e-6, 4));
  EXPECT_EQ(neg.regime, Regime::star_like_phi);
  EXPECT_LE(neg.sup_star_over_phi, 4.0);
}

TEST(Examples, Seminorms) {
  const TreePtr t = share(build_dyadic(4));
  const CampanatoSpace space(t, 1.0, Phi::one());
  const NormResult chi = space.seminorm(LeafFunction::indicator(t, AtomId{1, 0}));
  EXPECT_DOUBLE_EQ(chi.value, 0.5);
  EXPECT_EQ(chi.witness.level, 0);
  EXPECT_DOUBLE_EQ(space.norm(LeafFunction::indicator(t, AtomId{1, 0})).value, 1.0);
  EXPECT_DOUBLE_EQ(chi_norm_closed_form(*t, AtomId{1, 1}, 1.0, Phi::one()).value, 0.5);
  EXPECT_DOUBLE_EQ(chi_norm_closed_form(*t, AtomId{0, 0}, 2.0, Phi::psi()).value, 0.0);

  std::vector<double> rademacher(16, 1.0);
  for (std::size_t i = 8; i < 16; ++i) rademacher[i] = -1.0;
  const NormResult r = space.seminorm(LeafFunction(t, rademacher));
  EXPECT_DOUBLE_EQ(r.value, 1.0);
  EXPECT_EQ(r.witness.level, 0);
  EXPECT_DOUBLE_EQ(space.norm(LeafFunction(t, rademacher)).value, 1.0);

  const TreePtr chain = chain_tree(4);
  const LeafFunction c = LeafFunction::constant(chain, 2.0);
  EXPECT_EQ(f_norm_exact(c, 1.0, Phi::one()).value, CampanatoSpace(chain, 1.0, Phi::one()).seminorm(c).value);
}

TEST(Examples, FNormLowerBetweenSeminormAndExact) {
  const TreePtr t = share(build_dyadic(3));
  for (std::uint64_t s = 0; s < 10; ++s) {
    const LeafFunction f = random_function(t, s);
    const double semi = CampanatoSpace(t, 1.0, Phi::one()).seminorm(f).value;
    const double exact = f_norm_exact(f, 1.0, Phi::one()).value;
    const double lower = f_norm_lower(f, 1.0, Phi::one(), 4).value;
    EXPECT_GE(lower, semi);
    EXPECT_LE(lower, exact);
  }
}

TEST(Examples, DyadicHRings) {
  const LeafFunction h = dyadic_h_closed_form(6, 0);
  const double l2 = std::log(2.0);
  // Leaf 63 lies in B_0 \ B_1, leaf 16 in B_1 \ B_2.
  EXPECT_NEAR(h[63], -1.0 / (1.0 + l2), 1e-15);
  EXPECT_NEAR(h[63], -0.590616, 1e-6);
  EXPECT_NEAR(h[16], 1.0 / (1.0 + l2) - 1.0 / (1.0 + 2.0 * l2), 1e-15);
  EXPECT_NEAR(h[16], 0.171556, 1e-6);

  const TreePtr chain = chain_tree(5);
  EXPECT_EQ(linf_norm(h_function(chain, chain_through_leaf(*chain, 0), Phi::psi())), 0.0);
  EXPECT_EQ(linf_norm(sin_h_multiplier(chain, chain_through_leaf(*chain, 0), Phi::one())), 0.0);
}

TEST(Examples, LipschitzIdentityAndScaling) {
  const TreePtr t = share(build_dyadic(5));
  const LeafFunction f = random_function(t, 12);
  const auto id = lipschitz_compose_check(f, 1.0, f);
  EXPECT_TRUE(id.passed());
  EXPECT_DOUBLE_EQ(*id.checks.front().value("worst_ratio"), 1.0);
  const auto scaled = lipschitz_compose_check(f, 3.0, -3.0 * f);
  EXPECT_TRUE(scaled.passed());
  EXPECT_NEAR(*scaled.checks.front().value("worst_ratio"), 3.0, 1e-12);
}

double brute_F(const LeafFunction& f, const LeafFunction& g, double p) {
  const FiltrationTree& t = f.tree();
  const auto m = t.leaf_measures();
  double best = 0.0;
  for (int n = 0; n <= t.depth(); ++n) {
    for (const Atom& a : t.level(n)) {
      double fb = 0.0;
      double gb = 0.0;
      for (std::size_t i = a.first_leaf; i < a.first_leaf + a.leaf_count; ++i) {
        fb += f[i] * m[i] / a.measure;
        gb += g[i] * m[i] / a.measure;
      }
      double osc = 0.0;
      for (std::size_t i = a.first_leaf; i < a.first_leaf + a.leaf_count; ++i) osc += std::pow(std::abs(g[i] - gb), p) * m[i];
      best = std::max(best, std::abs(fb) * std::pow(osc / a.measure, 1.0 / p));
    }
  }
  return best;
}

TEST(Examples, CapitalF) {
  const TreePtr t = share(build_dyadic(2));
  const CampanatoSpace space(t, 1.0, Phi::one());
  const LeafFunction f(t, {1.0, 0.0, 0.0, 0.0});
  const LeafFunction g(t, {0.0, 1.0, 0.0, 0.0});
  EXPECT_DOUBLE_EQ(capital_F(f, g, space).value, brute_F(f, g, 1.0));
  EXPECT_EQ(capital_F(f, LeafFunction::constant(t, 5.0), space).value, 0.0);
  EXPECT_DOUBLE_EQ(capital_F(LeafFunction::constant(t, -2.0), g, space).value, 2.0 * space.seminorm(g).value);
  EXPECT_TRUE(check_product_estimate(f, LeafFunction::constant(t, 1.0), space).passed());
  EXPECT_TRUE(check_product_estimate(LeafFunction::constant(t, 1.0), g, space).passed());
}

TEST(Examples, OpNormAndCertificateForConstants) {
  const TreePtr t = share(build_dyadic(4));
  TestFamily fam(t);
  fam.add("1", LeafFunction::constant(t, 1.0));
  fam.add("chi", LeafFunction::indicator(t, AtomId{2, 1}));
  const CampanatoSpace space(t, 1.0, Phi::one());
  const OpNormBound c = op_norm_lower_bound(LeafFunction::constant(t, -1.5), space, fam);
  EXPECT_DOUBLE_EQ(c.value, 1.5);
  EXPECT_EQ(c.witness_label, "1");

  TestFamily one(t);
  one.add("1", LeafFunction::constant(t, 1.0));
  const LeafFunction chi = LeafFunction::indicator(t, AtomId{2, 1});
  EXPECT_DOUBLE_EQ(op_norm_lower_bound(chi, space, one).value, space.norm(chi).value);

  CertificateOptions opt;
  opt.sample_chains = 2;
  opt.random_members = 2;
  const MultiplierReport zero = theorem1_certificate(LeafFunction::constant(t, 0.0), 1.0, Phi::one(), opt);
  EXPECT_EQ(zero.T, 0.0);
  EXPECT_EQ(zero.L.value, 0.0);
  const MultiplierReport constant = theorem1_certificate(LeafFunction::constant(t, 2.0), 1.0, Phi::one(), opt);
  EXPECT_DOUBLE_EQ(constant.T, 2.0);
  EXPECT_DOUBLE_EQ(constant.L.value, 2.0);
  EXPECT_DOUBLE_EQ(constant.ratio, 1.0);
}

TEST(Examples, LinfBoundForLeafIndicator) {
  const TreePtr t = share(build_dyadic(6));
  EXPECT_TRUE(linf_bound_check(LeafFunction::indicator(t, AtomId{6, 9}), 1.0, Phi::one()).passed());
  EXPECT_TRUE(linf_bound_check(LeafFunction::constant(t, -4.0), 2.0, Phi::psi()).passed());
}

}  // namespace
}  // namespace campanato
