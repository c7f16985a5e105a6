#include "campanato/multiplier.hpp"

#include "campanato/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace campanato {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t member_seed(std::uint64_t seed, std::size_t i) { return splitmix(seed ^ splitmix(i + 1)); }

std::string fmt(double x) {
  std::ostringstream out;
  out.precision(17);
  out << x;
  return out.str();
}

// Nearest ancestor of b with strictly larger measure.
std::optional<AtomId> larger_ancestor(const FiltrationTree& tree, AtomId b) {
  const double m = tree.atom(b).measure;
  for (auto cur = tree.parent(b); cur; cur = tree.parent(*cur)) {
    if (tree.atom(*cur).measure > m) return cur;
  }
  return std::nullopt;
}

}  // namespace

CapitalF capital_F(const LeafFunction& f, const LeafFunction& g, const CampanatoSpace& space) {
  const auto osc = space.oscillations(g);
  CapitalF out{0.0, space.tree().root().id};
  for (int n = 0; n <= space.tree().depth(); ++n) {
    const auto averages = level_averages(f, n);
    const auto atoms = space.tree().level(n);
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const double o = osc[static_cast<std::size_t>(n)][i];
      if (o == 0.0) continue;
      const double v = std::abs(averages[i]) / space.phi_at(atoms[i].id) * o;
      if (v > out.value) out = CapitalF{v, atoms[i].id};
    }
  }
  return out;
}

double capital_F(const LeafFunction& f, const LeafFunction& g, double p, const Phi& phi) {
  return capital_F(f, g, CampanatoSpace(f.tree_ptr(), p, phi)).value;
}

VerificationReport check_product_estimate(const LeafFunction& f, const LeafFunction& g, const CampanatoSpace& space,
                                          double slack) {
  VerificationReport report{"product_estimate", {}};
  Check check;
  check.name = "product estimate";
  check.anchor = "|F(f,g) - ||fg||_{L_{p,phi}}| <= 2 ||f||_{L_{p,phi}} ||g||_inf";
  const CapitalF F = capital_F(f, g, space);
  const NormResult fg = space.seminorm(f * g);
  const double f_semi = space.seminorm(f).value;
  const double g_inf = linf_norm(g);
  const double gap = std::abs(F.value - fg.value);
  const double bound = 2.0 * f_semi * g_inf;
  check.threshold = bound;
  check.measure("F", F.value)
      .measure("fg_seminorm", fg.value)
      .measure("f_seminorm", f_semi)
      .measure("g_inf", g_inf)
      .measure("gap", gap)
      .measure("bound", bound);
  check.witness = "F at " + to_string(F.witness) + ", ||fg|| at " + describe(fg.witness);
  if (gap > bound + slack) check.fail("gap " + fmt(gap) + " exceeds " + fmt(bound));
  report.add(std::move(check));
  return report;
}

VerificationReport check_product_estimate(const LeafFunction& f, const LeafFunction& g, double p, const Phi& phi,
                                          double slack) {
  return check_product_estimate(f, g, CampanatoSpace(f.tree_ptr(), p, phi), slack);
}

double average_bound_constant(const LeafFunction& f, const CampanatoSpace& space) {
  const double norm = space.norm(f).value;
  if (norm == 0.0) return 0.0;
  double worst = 0.0;
  for (int n = 0; n <= space.tree().depth(); ++n) {
    const auto averages = level_averages(f, n);
    const auto atoms = space.tree().level(n);
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      worst = std::max(worst, std::abs(averages[i]) / space.star_at(atoms[i].id));
    }
  }
  return worst / norm;
}

void TestFamily::add(std::string label, std::function<LeafFunction()> make) {
  members_.push_back(Member{std::move(label), std::move(make)});
}

void TestFamily::add(std::string label, LeafFunction f) {
  if (f.tree_ptr() != tree_ && !(f.tree() == *tree_)) throw std::invalid_argument("family member on a different tree");
  add(std::move(label), [f = std::move(f)] { return f; });
}

LeafFunction TestFamily::build(std::size_t i) const {
  LeafFunction f = members_.at(i).make();
  if (f.tree_ptr() != tree_ && !(f.tree() == *tree_)) throw std::invalid_argument("family member on a different tree");
  return f;
}

TestFamily default_family(TreePtr tree, const Phi& phi, const FamilyOptions& options) {
  TestFamily family(tree);
  if (options.constant) family.add("1", [tree] { return LeafFunction::constant(tree, 1.0); });
  if (options.indicators) {
    for (int n = 0; n <= tree->depth(); ++n) {
      for (const auto& a : tree->level(n)) {
        const AtomId id = a.id;
        family.add("chi" + to_string(id), [tree, id] { return LeafFunction::indicator(tree, id); });
      }
    }
  }
  std::vector<std::size_t> leaves = sample_leaves(*tree, options.chains, options.seed);
  leaves.insert(leaves.end(), options.extra_chain_leaves.begin(), options.extra_chain_leaves.end());
  for (std::size_t leaf : leaves) {
    family.add("extremal chain to leaf " + std::to_string(leaf), [tree, leaf, phi] {
      return extremal_chain_function(tree, chain_through_leaf(*tree, leaf), phi).f;
    });
  }
  for (std::size_t i = 0; i < options.randoms; ++i) {
    const std::uint64_t s = member_seed(options.seed, i);
    family.add("random #" + std::to_string(i), [tree, s] { return random_function(tree, s); });
  }
  return family;
}

std::vector<MemberEvaluation> evaluate_family(const LeafFunction& g, const CampanatoSpace& space,
                                              const TestFamily& family) {
  std::vector<MemberEvaluation> out(family.size());
  parallel_for(family.size(), [&](std::size_t i) {
    const LeafFunction f = family.build(i);
    MemberEvaluation& e = out[i];
    e.f_norm = space.norm(f).value;
    if (e.f_norm == 0.0) {
      e.skipped = true;
      return;
    }
    e.fg_norm = space.norm(f * g).value;
    e.ratio = e.fg_norm / e.f_norm;
    e.average_bound = average_bound_constant(f, space);
  });
  return out;
}

OpNormBound reduce_op_norm(const TestFamily& family, std::span<const MemberEvaluation> evaluations) {
  OpNormBound out;
  bool any = false;
  for (std::size_t i = 0; i < evaluations.size(); ++i) {
    if (evaluations[i].skipped) {
      out.warnings.push_back("skipped zero-norm member " + family.label(i));
      continue;
    }
    ++out.evaluated;
    if (!any || evaluations[i].ratio > out.value) {
      any = true;
      out.value = evaluations[i].ratio;
      out.witness = i;
      out.witness_label = family.label(i);
    }
  }
  return out;
}

OpNormBound op_norm_lower_bound(const LeafFunction& g, const CampanatoSpace& space, const TestFamily& family) {
  if (family.size() == 0) throw std::invalid_argument("op-norm family is empty");
  const auto evaluations = evaluate_family(g, space, family);
  return reduce_op_norm(family, evaluations);
}

OpNormBound op_norm_lower_bound(const LeafFunction& g, double p, const Phi& phi, std::span<const LeafFunction> family) {
  TestFamily fam(g.tree_ptr());
  for (std::size_t i = 0; i < family.size(); ++i) fam.add("member " + std::to_string(i), family[i]);
  return op_norm_lower_bound(g, CampanatoSpace(g.tree_ptr(), p, phi), fam);
}

MultiplierReport theorem1_certificate(const LeafFunction& g, double p, const Phi& phi,
                                      const CertificateOptions& options) {
  MultiplierReport out;
  out.g_description = options.g_description;
  out.checks.suite = "theorem1";
  const TreePtr& tree = g.tree_ptr();

  const auto grid = default_grid();
  const GridConstant doubling = doubling_constant(phi, grid);
  const GridConstant integral = int_condition_constant(phi, p, grid);
  Check assumptions;
  assumptions.name = "phi conditions";
  assumptions.anchor = "phi doubling and int_0^r phi(t)^p dt <= C r phi(r)^p (measured over grid)";
  assumptions.measure("doubling_constant", doubling.value).measure("int_condition_constant", integral.value);
  if (doubling.divergent || !std::isfinite(doubling.value)) assumptions.fail("doubling constant is not finite");
  if (integral.divergent || !std::isfinite(integral.value)) assumptions.fail("int_0^r phi^p diverges");
  const bool assumptions_met = assumptions.passed;
  out.checks.add(std::move(assumptions));
  if (!assumptions_met) {
    out.status = "assumptions unmet";
    out.ratio = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  const CampanatoSpace space(tree, p, phi);
  const CampanatoSpace quotient_space(tree, p, quotient_phi(phi));
  out.g_inf = linf_norm(g);
  out.g_quotient = quotient_space.seminorm(g);
  out.T = out.g_quotient.value + out.g_inf;

  FamilyOptions family_options;
  family_options.chains = options.sample_chains;
  family_options.randoms = options.random_members;
  family_options.seed = options.seed;
  // The chain through the atom where g oscillates most relative to φ/φ*.
  const Atom& witness_atom = tree->atom(out.g_quotient.witness.atoms.front());
  family_options.extra_chain_leaves.push_back(witness_atom.first_leaf);
  const TestFamily family = default_family(tree, phi, family_options);
  out.family_size = family.size();

  const auto evaluations = evaluate_family(g, space, family);
  out.L = reduce_op_norm(family, evaluations);
  for (const auto& e : evaluations) {
    if (!e.skipped) out.average_bound = std::max(out.average_bound, e.average_bound);
  }
  out.upper_constant = out.average_bound * out.g_quotient.value + (2.0 + std::max(1.0, phi(1.0))) * out.g_inf;

  Check fb;
  fb.name = "average bound";
  fb.anchor = "|f_B| <= C phi*(P(B)) ||f||_{L~_{p,phi}}";
  fb.measure("C_fB", out.average_bound).measure("members", static_cast<double>(out.L.evaluated));
  out.checks.add(std::move(fb));

  Check upper;
  upper.name = "upper bound";
  upper.anchor = "||fg||_{L~} <= (C_fB ||g||_{L_{p,phi/phi*}} + (2 + max(1, phi(1))) ||g||_inf) ||f||_{L~}";
  upper.threshold = out.upper_constant;
  double worst = 0.0;
  for (std::size_t i = 0; i < evaluations.size(); ++i) {
    const auto& e = evaluations[i];
    if (e.skipped) continue;
    if (e.ratio > worst) {
      worst = e.ratio;
      upper.witness = family.label(i);
    }
    if (e.fg_norm > out.upper_constant * e.f_norm + options.slack) {
      upper.fail(family.label(i) + ": " + fmt(e.fg_norm) + " > " + fmt(out.upper_constant * e.f_norm));
    }
  }
  upper.measure("upper_constant", out.upper_constant).measure("worst_member_ratio", worst);
  const bool upper_ok = upper.passed;
  out.checks.add(std::move(upper));

  if (out.L.value > 0.0) {
    out.ratio = out.T / out.L.value;
  } else {
    out.ratio = out.T == 0.0 ? std::numeric_limits<double>::quiet_NaN() : std::numeric_limits<double>::infinity();
  }
  Check band;
  band.name = "two-sided ratio";
  band.anchor = "||g||_Op ~ ||g||_{L_{p,phi/phi*}} + ||g||_inf; T/L within calibrated band";
  band.threshold = options.band_high;
  band.measure("T", out.T)
      .measure("L", out.L.value)
      .measure("ratio", out.ratio)
      .measure("band_low", options.band_low)
      .measure("band_high", options.band_high);
  band.witness = out.L.witness_label;
  const bool both_zero = out.T == 0.0 && out.L.value == 0.0;
  if (!both_zero && !(out.ratio >= options.band_low && out.ratio <= options.band_high)) {
    band.fail("T/L = " + fmt(out.ratio) + " outside [" + fmt(options.band_low) + ", " + fmt(options.band_high) + "]");
  }
  const bool band_ok = band.passed;
  out.checks.add(std::move(band));

  out.status = !upper_ok ? "upper bound violated" : (!band_ok ? "outside band" : "certified");
  return out;
}

MultiplierReport theorem1_certificate(const LeafFunction& g, double p, const Phi& phi, std::size_t sample_chains,
                                      std::uint64_t seed) {
  CertificateOptions options;
  options.sample_chains = sample_chains;
  options.seed = seed;
  return theorem1_certificate(g, p, phi, options);
}

nlohmann::json to_json(const MultiplierReport& report) {
  nlohmann::json j;
  j["g"] = report.g_description;
  j["status"] = report.status;
  j["g_inf"] = number_to_json(report.g_inf);
  j["g_quotient_seminorm"] = number_to_json(report.g_quotient.value);
  j["g_quotient_witness"] = describe(report.g_quotient.witness);
  j["T"] = number_to_json(report.T);
  j["L"] = number_to_json(report.L.value);
  j["L_witness"] = report.L.witness_label;
  j["L_members_evaluated"] = report.L.evaluated;
  j["skipped_members"] = report.L.warnings;
  j["ratio_T_over_L"] = number_to_json(report.ratio);
  j["C_fB"] = number_to_json(report.average_bound);
  j["upper_constant"] = number_to_json(report.upper_constant);
  j["family_size"] = report.family_size;
  j["checks"] = to_json(report.checks);
  return j;
}

VerificationReport linf_bound_check(const LeafFunction& g, double p, const Phi& phi, double slack) {
  const TreePtr& tree = g.tree_ptr();
  const CampanatoSpace space(tree, p, phi);
  const double R = regularity_constant(*tree);
  VerificationReport report{"linf_bound", {}};

  Check regular;
  regular.name = "regularity on |g|";
  regular.anchor = "E_n[|g|] <= R E_{n-1}[|g|]";
  regular.threshold = R;
  const LeafFunction abs_g = g.map([](double x) { return std::abs(x); });
  double worst_growth = 0.0;
  std::vector<double> previous = level_averages(abs_g, 0);
  for (int n = 1; n <= tree->depth(); ++n) {
    const auto current = level_averages(abs_g, n);
    const auto atoms = tree->level(n);
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const double parent = previous[*atoms[i].parent];
      if (parent > 0.0) worst_growth = std::max(worst_growth, current[i] / parent);
      if (current[i] > R * parent + slack) regular.fail("atom " + to_string(atoms[i].id) + " exceeds R times its parent");
    }
    previous = current;
  }
  regular.measure("R", R).measure("worst_growth", worst_growth);
  report.add(std::move(regular));

  Check bound;
  bound.name = "sup-norm lower bound";
  bound.anchor = "||g chi_B||_{L_{p,phi}} >= ||E_n g||_inf / (2R(R+1)^{1/p} phi(P(B')))";
  double worst = 0.0;  // max rhs / lhs
  std::size_t checked = 0;
  for (int n = 1; n <= tree->depth(); ++n) {
    const auto averages = level_averages(g, n);
    const auto atoms = tree->level(n);
    std::size_t best = 0;
    for (std::size_t i = 1; i < atoms.size(); ++i) {
      if (std::abs(averages[i]) > std::abs(averages[best])) best = i;
    }
    const AtomId b = atoms[best].id;
    const auto b_prime = larger_ancestor(*tree, b);
    if (!b_prime) continue;
    ++checked;
    const double sup = std::abs(averages[best]);
    const double lhs = space.seminorm(g * LeafFunction::indicator(tree, b)).value;
    const double rhs = sup / (2.0 * R * std::pow(R + 1.0, 1.0 / p) * space.phi_at(*b_prime));
    if (lhs > 0.0 && rhs / lhs > worst) {
      worst = rhs / lhs;
      bound.witness = "B = " + to_string(b) + ", B' = " + to_string(*b_prime);
    } else if (lhs == 0.0 && rhs > 0.0) {
      worst = std::numeric_limits<double>::infinity();
    }
    if (rhs > lhs + slack) bound.fail("level " + std::to_string(n) + ": " + fmt(lhs) + " < " + fmt(rhs));
  }
  bound.measure("levels_checked", static_cast<double>(checked)).measure("worst_rhs_over_lhs", worst);
  report.add(std::move(bound));

  Check ratio;
  ratio.name = "sup norm over indicator lower bound";
  ratio.anchor = "||g||_inf <= C ||g||_Op";
  double L = 0.0;
  for (int n = 0; n <= tree->depth(); ++n) {
    for (const auto& a : tree->level(n)) {
      const LeafFunction chi = LeafFunction::indicator(tree, a.id);
      const double r = space.norm(g * chi).value / space.norm(chi).value;
      if (r > L) {
        L = r;
        ratio.witness = "chi" + to_string(a.id);
      }
    }
  }
  const double g_inf = linf_norm(g);
  ratio.measure("g_inf", g_inf)
      .measure("L_indicators", L)
      .measure("g_inf_over_L", L > 0.0 ? g_inf / L : (g_inf == 0.0 ? 0.0 : std::numeric_limits<double>::infinity()));
  report.add(std::move(ratio));
  return report;
}

VerificationReport conditional_multiplier_check(const LeafFunction& g, double p, const Phi& phi,
                                                const ConditionalOptions& options) {
  const TreePtr& tree = g.tree_ptr();
  const int N = tree->depth();
  const CampanatoSpace space(tree, p, phi);
  const CampanatoSpace quotient_space(tree, p, quotient_phi(phi));

  std::vector<std::pair<std::string, LeafFunction>> base;
  base.emplace_back("1", LeafFunction::constant(tree, 1.0));
  for (std::size_t leaf : sample_leaves(*tree, options.chains, options.seed)) {
    base.emplace_back("extremal chain to leaf " + std::to_string(leaf),
                      extremal_chain_function(tree, chain_through_leaf(*tree, leaf), phi).f);
  }
  for (std::size_t i = 0; i < options.randoms; ++i) {
    base.emplace_back("random #" + std::to_string(i), random_function(tree, member_seed(options.seed, i)));
  }

  VerificationReport report{"theorem2", {}};
  Check product;
  product.name = "conditional product bound";
  product.anchor = "||(E_n g) f||_{L~} = ||E_n(gf)||_{L~} <= ||gf||_{L~} for F_n-measurable f";
  Check consistency;
  consistency.name = "truncation consistency";
  consistency.anchor = "norms of F_n-measurable functions agree on F_0..F_n and on F_0..F_N";
  std::vector<double> L(static_cast<std::size_t>(N) + 1, 0.0);
  std::vector<double> T(static_cast<std::size_t>(N) + 1, 0.0);
  double worst_excess = -std::numeric_limits<double>::infinity();
  double worst_mismatch = 0.0;
  std::size_t members_checked = 0;

  for (int n = 0; n <= N; ++n) {
    const TreePtr truncated = share(tree->truncated(n));
    const CampanatoSpace level_space(truncated, p, phi);
    const LeafFunction gn = conditional_expectation(g, n);
    const LeafFunction gn_trunc = restrict_to_level(g, n, truncated);
    T[static_cast<std::size_t>(n)] = quotient_space.seminorm(gn).value + linf_norm(gn);

    std::vector<std::pair<std::string, LeafFunction>> members;
    for (int m = 0; m <= n; ++m) {
      for (const auto& [label, f] : base) {
        members.emplace_back("E_" + std::to_string(m) + "[" + label + "]", conditional_expectation(f, m));
      }
      for (const auto& a : tree->level(m)) members.emplace_back("chi" + to_string(a.id), LeafFunction::indicator(tree, a.id));
    }

    struct Row {
      double ratio = 0.0, excess = 0.0, mismatch = 0.0;
      bool skipped = false;
    };
    std::vector<Row> rows(members.size());
    parallel_for(members.size(), [&](std::size_t i) {
      const LeafFunction& f = members[i].second;
      const LeafFunction f_trunc = restrict_to_level(f, n, truncated);
      const double f_norm = level_space.norm(f_trunc).value;
      if (f_norm == 0.0) {
        rows[i].skipped = true;
        return;
      }
      const double product_trunc = level_space.norm(gn_trunc * f_trunc).value;
      const double product_full = space.norm(gn * f).value;
      const double gf = space.norm(g * f).value;
      rows[i].ratio = product_trunc / f_norm;
      rows[i].excess = product_full - gf;
      rows[i].mismatch = std::abs(product_trunc - product_full) / std::max(1.0, product_full);
    });
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].skipped) continue;
      ++members_checked;
      L[static_cast<std::size_t>(n)] = std::max(L[static_cast<std::size_t>(n)], rows[i].ratio);
      if (rows[i].excess > worst_excess) {
        worst_excess = rows[i].excess;
        product.witness = "n=" + std::to_string(n) + ", " + members[i].first;
      }
      worst_mismatch = std::max(worst_mismatch, rows[i].mismatch);
      if (rows[i].excess > options.slack) {
        product.fail("n=" + std::to_string(n) + ", " + members[i].first + ": excess " + fmt(rows[i].excess));
      }
      if (rows[i].mismatch > 1e-12) {
        consistency.fail("n=" + std::to_string(n) + ", " + members[i].first + ": mismatch " + fmt(rows[i].mismatch));
      }
    }
  }
  product.measure("members_checked", static_cast<double>(members_checked)).measure("worst_excess", worst_excess);
  consistency.measure("worst_relative_mismatch", worst_mismatch);
  report.add(std::move(product));
  report.add(std::move(consistency));

  const double LN = L.back();
  Check bounded;
  bounded.name = "L_n bounded by L(g)";
  bounded.anchor = "L_n <= L(g) = L_N";
  bounded.threshold = LN;
  Check monotone;
  monotone.name = "L_n monotone";
  monotone.anchor = "L_n <= L_{n+1}";
  for (int n = 0; n <= N; ++n) {
    const double Ln = L[static_cast<std::size_t>(n)];
    bounded.measure("L_" + std::to_string(n), Ln);
    if (Ln > LN + options.slack) bounded.fail("L_" + std::to_string(n) + " = " + fmt(Ln) + " > L(g) = " + fmt(LN));
    if (n < N && Ln > L[static_cast<std::size_t>(n) + 1] + options.slack) {
      monotone.fail("L_" + std::to_string(n) + " > L_" + std::to_string(n + 1));
    }
  }
  report.add(std::move(bounded));
  report.add(std::move(monotone));

  Check base_level;
  base_level.name = "L_0 equals |Eg|";
  base_level.anchor = "E_0 g = Eg is constant, so ||E_0 g||_Op = |Eg|";
  const double mean = std::abs(expectation(g));
  base_level.measure("L_0", L.front()).measure("abs_Eg", mean);
  if (std::abs(L.front() - mean) > 1e-12 * std::max(1.0, mean)) base_level.fail("L_0 differs from |Eg|");
  report.add(std::move(base_level));

  Check peak;
  peak.name = "T_n peaks at N";
  peak.anchor = "sup_n ||E_n g||_{L_{p,phi/phi*}} + ||E_n g||_inf = ||g||_{L_{p,phi/phi*}} + ||g||_inf";
  const double TN = T.back();
  peak.threshold = TN;
  for (int n = 0; n <= N; ++n) {
    peak.measure("T_" + std::to_string(n), T[static_cast<std::size_t>(n)]);
    if (T[static_cast<std::size_t>(n)] > TN + options.slack) peak.fail("T_" + std::to_string(n) + " exceeds T_N");
  }
  const double T_full = quotient_space.seminorm(g).value + linf_norm(g);
  peak.measure("T", T_full);
  if (TN != T_full) peak.fail("T_N differs from T(g)");
  report.add(std::move(peak));
  return report;
}

}  // namespace campanato
