#include "campanato/phi.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace campanato {
namespace {

oracle::Weight weight(const Phi& phi) {
  return [phi](double r) { return phi(r); };
}

TEST(Phi, Evaluation) {
  EXPECT_EQ(Phi::one()(0.3), 1.0);
  EXPECT_DOUBLE_EQ(Phi::psi()(1.0), 1.0);
  EXPECT_DOUBLE_EQ(Phi::psi()(std::exp(-1.0)), 0.5);
  EXPECT_DOUBLE_EQ(Phi::power(0.5)(0.25), 0.5);
  const double r = 0.01;
  const double L = 1.0 - std::log(r);
  EXPECT_NEAR(Phi::power_log(0.3, 0.7, 1.2)(r),
              std::pow(r, 0.3) * std::pow(L, -0.7) * std::pow(std::log(std::exp(1.0) + std::log(1.0 / r)), -1.2),
              1e-15);
  EXPECT_THROW(Phi::one()(0.0), std::domain_error);
  EXPECT_THROW(Phi::one()(1.5), std::domain_error);
}

TEST(Phi, Describe) {
  EXPECT_EQ(Phi::one().describe(), "one");
  EXPECT_EQ(Phi::psi().describe(), "psi");
  EXPECT_EQ(Phi::power(0.5).describe(), "powerlog(0.5,0,0)");
  EXPECT_EQ(quotient_phi(Phi::one()).describe(), "quotient(one)");
}

TEST(Phi, TableInterpolatesLogLog) {
  const Phi t = Phi::table({{0.01, 1.0}, {1.0, 100.0}});
  EXPECT_NEAR(t(0.1), 10.0, 1e-12);
  EXPECT_NEAR(t(0.001), 0.1, 1e-12);  // extrapolated
  EXPECT_THROW(Phi::table({}), std::invalid_argument);
  EXPECT_THROW(Phi::table({{0.5, 1.0}, {0.5, 2.0}}), std::invalid_argument);
  EXPECT_THROW(Phi::table({{0.5, -1.0}}), std::invalid_argument);
}

TEST(Phi, StarClosedForms) {
  for (double r : {1.0, 0.5, 1e-3, 1e-9}) {
    const double L = 1.0 - std::log(r);
    EXPECT_NEAR(phi_star(Phi::one(), r), L, 1e-12);
    EXPECT_NEAR(phi_star(Phi::psi(), r), 1.0 + std::log(L), 1e-12);
    EXPECT_NEAR(phi_star(Phi::power(0.5), r), 3.0 - 2.0 * std::sqrt(r), 1e-12);
    EXPECT_NEAR(phi_star(Phi::power(-0.3), r), 1.0 + (std::pow(r, -0.3) - 1.0) / 0.3, 1e-9 * std::pow(r, -0.3));
  }
}

TEST(Phi, QuadratureAgainstSimpson) {
  for (const Phi& phi : {Phi::one(), Phi::power(0.5), Phi::power(-0.3), Phi::power_log(0.2, 0.5, 1.0),
                         Phi::table({{0.001, 2.0}, {0.1, 1.0}, {1.0, 3.0}})}) {
    for (double r : {0.5, 1e-2, 1e-5}) {
      const Integral q = star_integral_quadrature(phi, r);
      EXPECT_TRUE(q.converged);
      const double oracle_value = oracle::phi_star_simpson(weight(phi), r) - 1.0;
      EXPECT_NEAR(q.value, oracle_value, 1e-9 * std::max(1.0, oracle_value)) << phi.describe() << " r=" << r;
    }
  }
}

TEST(Phi, QuotientIsPhiOverStar) {
  const Phi q = quotient_phi(Phi::psi());
  EXPECT_EQ(q.kind(), Phi::Kind::quotient);
  for (double r : {1.0, 0.1, 1e-6}) EXPECT_NEAR(q(r), Phi::psi()(r) / phi_star(Phi::psi(), r), 1e-14);
  EXPECT_THROW(Phi::one().base(), std::logic_error);
}

TEST(Phi, QuotientOfOneIsPsi) {
  const Phi q = quotient_phi(Phi::one());
  for (double r : {1.0, 0.3, 1e-4, 1e-12}) EXPECT_NEAR(q(r), 1.0 / std::log(std::exp(1.0) / r), 1e-15);
}

TEST(Phi, IntegrateFromZero) {
  const Integral a = integrate_from_zero([](double t) { return std::pow(t, -0.5); }, 0.25);
  EXPECT_TRUE(a.converged);
  EXPECT_NEAR(a.value, 1.0, 1e-10);
  const Integral b = integrate_from_zero([](double t) { return 1.0 / t; }, 0.5);
  EXPECT_TRUE(b.divergent);
}

TEST(Phi, IntConditionPowers) {
  const auto grid = default_grid();
  for (double alpha : {-0.5, 0.0, 0.3, 1.0}) {
    for (double p : {1.0, 2.0}) {
      const GridConstant c = int_condition_constant(Phi::power(alpha), p, grid);
      if (alpha * p + 1.0 == 0.0) {
        EXPECT_TRUE(c.divergent);
        EXPECT_EQ(c.value, INFINITY);
      } else {
        EXPECT_NEAR(c.value, 1.0 / (alpha * p + 1.0), 1e-6);
      }
    }
  }
  EXPECT_TRUE(int_condition_constant(Phi::power(-1.0), 1.0, grid).divergent);
  EXPECT_THROW(int_condition_constant(Phi::one(), 0.5, grid), std::invalid_argument);
}

TEST(Phi, IntConditionQuadratureAgainstSimpson) {
  const Phi phi = Phi::power_log(0.2, 1.0, 0.0);
  const std::vector<double> grid{1e-3, 0.1, 0.5};
  const GridConstant c = int_condition_constant(phi, 2.0, grid);
  double oracle_sup = 0.0;
  for (double r : grid) oracle_sup = std::max(oracle_sup, oracle::int_condition_simpson(weight(phi), 2.0, r));
  EXPECT_NEAR(c.value, oracle_sup, 1e-7);
}

TEST(Phi, DoublingAndMonotone) {
  const auto grid = default_grid();
  EXPECT_DOUBLE_EQ(doubling_constant(Phi::one(), grid).value, 1.0);
  EXPECT_NEAR(doubling_constant(Phi::power(1.0), grid).value, 2.0, 1e-12);
  const auto [inc, dec] = almost_monotone_constants(Phi::power(0.5), grid);
  EXPECT_DOUBLE_EQ(inc, 1.0);
  EXPECT_GT(dec, 1e5);
  EXPECT_THROW(doubling_constant(Phi::one(), std::vector<double>{}), std::invalid_argument);
}

TEST(Phi, Regimes) {
  const auto grid = default_grid();
  EXPECT_EQ(classify_regime(Phi::power(-0.3), grid).regime, Regime::star_like_phi);
  EXPECT_EQ(classify_regime(Phi::power(0.5), grid).regime, Regime::star_bounded);
  const RegimeReport one = classify_regime(Phi::one(), grid);
  EXPECT_EQ(one.regime, Regime::neither);
  EXPECT_EQ(one.label, "neither; phi/phi* -> 0");
}

TEST(Phi, Grids) {
  const auto g = default_grid();
  EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
  EXPECT_DOUBLE_EQ(g.back(), 1.0);
  EXPECT_DOUBLE_EQ(g.front(), std::ldexp(1.0, -40));
  const auto h = geometric_grid(1e-4, 2);
  EXPECT_EQ(h.size(), 9u);
  EXPECT_NEAR(h.front(), 1e-4, 1e-18);
  EXPECT_THROW(geometric_grid(1e-4, 0), std::invalid_argument);
}

TEST(Phi, ReportJson) {
  const std::vector<double> ps{1.0, 2.0};
  const auto grid = default_grid();
  const PhiReport r = phi_report(Phi::psi(), ps, grid);
  EXPECT_EQ(r.int_condition.size(), 2u);
  const auto j = to_json(r);
  EXPECT_EQ(j.at("phi"), "psi");
  EXPECT_TRUE(j.contains("regime"));
}

}  // namespace
}  // namespace campanato
