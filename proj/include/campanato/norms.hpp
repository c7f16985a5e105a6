#pragma once

// Campanato seminorm
//     ‖f‖_{L_{p,φ}} = sup_n sup_{B∈A(F_n)} (1/φ(P(B))) ((1/P(B)) ∫_B |f − E_n f|^p dP)^{1/p},
// the norm ‖f‖_{L̃_{p,φ}} = ‖f‖_{L_{p,φ}} + |Ef|, the variant that takes the
// inner sup over unions of level-n atoms, and the indicator closed form.
//
// Levels beyond N contribute nothing for leaf functions, so the sups over
// n ∈ [0, N] are exact.

#include "campanato/filtration.hpp"
#include "campanato/functions.hpp"
#include "campanato/phi.hpp"

#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace campanato {

/// Level and atom set attaining a sup. Seminorm witnesses hold one atom.
struct NormWitness {
  int level = 0;
  std::vector<AtomId> atoms;
};

struct NormResult {
  double value = 0.0;
  NormWitness witness;
  std::vector<double> level_sups;  // sup over B ∈ A(F_n), per n
  bool lower_bound = false;
  /// value^p as an exact rational, when the computation allows it (exact
  /// input, integer p, φ ≡ 1).
  std::optional<Rational> exact_power;
};

std::string describe(const NormWitness& w);

/// Ties between atoms with equal ratios go to the first in (level, index)
/// order; comparisons use no slack, so the witness attains `value` exactly.
class CampanatoSpace {
 public:
  CampanatoSpace(TreePtr tree, double p, Phi phi);

  const FiltrationTree& tree() const { return *tree_; }
  const TreePtr& tree_ptr() const { return tree_; }
  double p() const { return p_; }
  const Phi& phi() const { return phi_; }

  /// φ(P(B)) and φ*(P(B)), memoized by measure.
  double phi_at(AtomId b) const;
  double phi_of_measure(double r) const;
  double star_at(AtomId b) const;

  NormResult seminorm(const LeafFunction& f) const;
  NormResult norm(const LeafFunction& f) const;
  /// Rational oscillations; exact_power is set when φ ≡ 1 and p is an integer.
  NormResult seminorm(const ExactLeafFunction& f) const;
  NormResult norm(const ExactLeafFunction& f) const;

  /// Per level and atom: ((1/P(B)) ∫_B |f − f_B|^p dP)^{1/p}.
  std::vector<std::vector<double>> oscillations(const LeafFunction& f) const;

 private:
  TreePtr tree_;
  double p_;
  Phi phi_;
  std::vector<std::vector<double>> phi_values_;
  mutable std::map<double, double> phi_cache_;
  mutable std::mutex cache_mutex_;
  mutable std::once_flag star_once_;
  mutable std::vector<std::vector<double>> star_values_;
};

NormResult campanato_seminorm(const LeafFunction& f, double p, const Phi& phi);
NormResult campanato_norm(const LeafFunction& f, double p, const Phi& phi);

/// Per level and atom: (1/P(B)) ∫_B |f − f_B|^p dP in exact arithmetic.
/// Subtrees on which f is constant are skipped, so sparse functions such as
/// indicators cost little more than their support chain.
std::vector<std::vector<Rational>> exact_mean_oscillation_powers(const ExactLeafFunction& f, int p);

/// Seminorm of χ_B from the ancestor formula
///     max_{k<n} (1/φ(P_k)) [(1/P_k)(P(1 − P/P_k)^p + (P_k − P)(P/P_k)^p)]^{1/p},
/// P = P(B), P_k = P(B_k); ancestors with P_k = P contribute 0.
NormResult chi_norm_closed_form(const FiltrationTree& tree, AtomId b, double p, const Phi& phi);

class EnumerationLimitError : public std::length_error {
 public:
  using std::length_error::length_error;
};

inline constexpr std::size_t kMaxEnumeratedAtoms = 20;

/// sup over n and nonempty unions A of level-n atoms of
/// (1/φ(P(A))) ((1/P(A)) Σ_{B⊂A} ∫_B |f − E_n f|^p)^{1/p}.
/// Throws EnumerationLimitError when a level has more than `max_atoms` atoms.
NormResult f_norm_exact(const LeafFunction& f, double p, const Phi& phi,
                        std::size_t max_atoms = kMaxEnumeratedAtoms);

/// Lower bound for the same quantity: on each level, every single atom plus
/// the prefixes (up to `budget` atoms) of the atoms ordered by decreasing
/// (∫_B |f − E_n f|^p)/P(B). Never below the seminorm. Marked lower_bound.
NormResult f_norm_lower(const LeafFunction& f, double p, const Phi& phi, std::size_t budget);

}  // namespace campanato
