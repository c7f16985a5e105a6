#pragma once

// Pointwise multipliers of L̃_{p,φ}: the functional F(f,g), finite-family
// lower bounds for ‖g‖_Op, and certificates comparing them with
// T(g) = ‖g‖_{L_{p,φ/φ*}} + ‖g‖_∞.

#include "campanato/constructions.hpp"
#include "campanato/functions.hpp"
#include "campanato/norms.hpp"
#include "campanato/phi.hpp"
#include "campanato/report.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace campanato {

struct CapitalF {
  double value = 0.0;
  AtomId witness;
};

/// F(f,g) = sup_B (|f_B|/φ(P(B))) ((1/P(B)) ∫_B |g − g_B|^p dP)^{1/p}.
CapitalF capital_F(const LeafFunction& f, const LeafFunction& g, const CampanatoSpace& space);
double capital_F(const LeafFunction& f, const LeafFunction& g, double p, const Phi& phi);

/// |F(f,g) − ‖fg‖_{L_{p,φ}}| ≤ 2 ‖f‖_{L_{p,φ}} ‖g‖_∞ (+ slack).
VerificationReport check_product_estimate(const LeafFunction& f, const LeafFunction& g, const CampanatoSpace& space,
                                          double slack = 1e-10);
VerificationReport check_product_estimate(const LeafFunction& f, const LeafFunction& g, double p, const Phi& phi,
                                          double slack = 1e-10);

/// sup_B |f_B| / (φ*(P(B)) ‖f‖_{L̃_{p,φ}}); 0 for f ≡ 0.
double average_bound_constant(const LeafFunction& f, const CampanatoSpace& space);

/// Test functions built on demand.
class TestFamily {
 public:
  explicit TestFamily(TreePtr tree) : tree_(std::move(tree)) {}

  void add(std::string label, std::function<LeafFunction()> make);
  void add(std::string label, LeafFunction f);

  std::size_t size() const { return members_.size(); }
  const std::string& label(std::size_t i) const { return members_.at(i).label; }
  LeafFunction build(std::size_t i) const;
  const TreePtr& tree() const { return tree_; }

 private:
  struct Member {
    std::string label;
    std::function<LeafFunction()> make;
  };
  TreePtr tree_;
  std::vector<Member> members_;
};

struct FamilyOptions {
  bool constant = true;
  bool indicators = true;
  std::size_t chains = 64;  // extremal chain functions through sampled leaves
  std::size_t randoms = 32;
  std::uint64_t seed = 0;
  std::vector<std::size_t> extra_chain_leaves;
};

/// {1} ∪ {χ_B} ∪ {extremal chain functions for φ} ∪ {seeded random functions}.
TestFamily default_family(TreePtr tree, const Phi& phi, const FamilyOptions& options);

struct MemberEvaluation {
  double f_norm = 0.0;   // ‖f‖_{L̃}
  double fg_norm = 0.0;  // ‖fg‖_{L̃}
  double ratio = 0.0;
  double average_bound = 0.0;  // average_bound_constant(f)
  bool skipped = false;        // f ≡ 0
};

/// Members are evaluated in parallel; results are in family order.
std::vector<MemberEvaluation> evaluate_family(const LeafFunction& g, const CampanatoSpace& space,
                                              const TestFamily& family);

struct OpNormBound {
  double value = 0.0;
  std::size_t witness = 0;
  std::string witness_label;
  std::size_t evaluated = 0;
  std::vector<std::string> warnings;  // skipped members
};

/// max over the family of ‖fg‖_{L̃}/‖f‖_{L̃}; zero-norm members are skipped
/// with a warning. Ties keep the earliest member.
OpNormBound op_norm_lower_bound(const LeafFunction& g, const CampanatoSpace& space, const TestFamily& family);
OpNormBound op_norm_lower_bound(const LeafFunction& g, double p, const Phi& phi, std::span<const LeafFunction> family);
OpNormBound reduce_op_norm(const TestFamily& family, std::span<const MemberEvaluation> evaluations);

struct CertificateOptions {
  std::size_t sample_chains = 64;
  std::uint64_t seed = 0;
  std::size_t random_members = 32;
  // Band for T/L; these are calibration values, not constants from a proof.
  double band_low = 1.0;
  double band_high = 50.0;
  double slack = 1e-10;
  std::string g_description = "g";
};

struct MultiplierReport {
  std::string g_description;
  std::string status;  // "certified", "outside band", "upper bound violated", "assumptions unmet"
  double g_inf = 0.0;
  NormResult g_quotient;  // ‖g‖_{L_{p,φ/φ*}}
  double T = 0.0;
  OpNormBound L;
  double ratio = 0.0;  // T / L
  double average_bound = 0.0;  // measured C_fB
  double upper_constant = 0.0;  // C_fB ‖g‖_{L_{p,φ/φ*}} + (2 + max(1, φ(1))) ‖g‖_∞
  std::size_t family_size = 0;
  VerificationReport checks;
};

MultiplierReport theorem1_certificate(const LeafFunction& g, double p, const Phi& phi,
                                      const CertificateOptions& options = {});
MultiplierReport theorem1_certificate(const LeafFunction& g, double p, const Phi& phi, std::size_t sample_chains,
                                      std::uint64_t seed);
nlohmann::json to_json(const MultiplierReport& report);

/// On every level n ≥ 1: take B maximizing |g_B|, B' its nearest ancestor of
/// larger measure, and check
///     ‖g χ_B‖_{L_{p,φ}} ≥ ‖E_n g‖_∞ / (2R(R+1)^{1/p} φ(P(B'))),
/// plus E_n|g| ≤ R E_{n-1}|g| on every atom. Reports ‖g‖_∞ / L(g) over {χ_B}.
VerificationReport linf_bound_check(const LeafFunction& g, double p, const Phi& phi, double slack = 1e-10);

struct ConditionalOptions {
  std::size_t chains = 8;
  std::size_t randoms = 8;
  std::uint64_t seed = 0;
  double slack = 1e-10;
};

/// For each n, L_n is the lower bound for ‖E_n g‖_Op on the truncated tree
/// over the nested family F_n = {E_m f : f base member, m ≤ n} ∪ {χ_B : level ≤ n}.
/// Checks ‖(E_n g) f‖ ≤ ‖gf‖ for every member, L_n ≤ L_{n+1}, L_0 = |Eg|,
/// L_N = L(g), and that ‖E_n g‖_{L_{p,φ/φ*}} + ‖E_n g‖_∞ peaks at n = N.
VerificationReport conditional_multiplier_check(const LeafFunction& g, double p, const Phi& phi,
                                                const ConditionalOptions& options = {});

}  // namespace campanato
