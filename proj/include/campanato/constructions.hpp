#pragma once

// Explicit functions along a nested chain B_0 = Ω ⊃ B_1 ⊃ ... ⊃ B_N:
//     u_k = c_k ((P(B_{k-1})/P(B_k)) χ_{B_k} − χ_{B_{k-1}}),   c_k = φ(P(B_k)),
//     f = χ_{B_0} + Σ_k u_k,   h = Σ_k u_k,   g = sin h (with c_k = (φ/φ*)(P(B_k))).
// A persistence step has P(B_k) = P(B_{k-1}) and B_k = B_{k-1}, so u_k = 0.

#include "campanato/filtration.hpp"
#include "campanato/functions.hpp"
#include "campanato/norms.hpp"
#include "campanato/phi.hpp"
#include "campanato/report.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace campanato {

template <class T>
struct BasicChainConstruction {
  std::vector<AtomId> chain;
  Phi phi;
  std::vector<T> coefficients;             // c_1, ..., c_K
  std::vector<BasicLeafFunction<T>> u_terms;  // u_1, ..., u_K
  BasicLeafFunction<T> f;
  BasicMartingaleSequence<T> sequence;  // f_n = χ_{B_0} + Σ_{k≤n} u_k

  const BasicLeafFunction<T>& u(int k) const { return u_terms.at(static_cast<std::size_t>(k - 1)); }
};

using ChainConstruction = BasicChainConstruction<double>;
using ExactChainConstruction = BasicChainConstruction<Rational>;

/// Throws std::invalid_argument ("chain not nested") unless chain[k] is a
/// level-k atom whose parent is chain[k-1], starting at the root.
void require_nested_chain(const FiltrationTree& tree, const std::vector<AtomId>& chain);

/// chain_to_root of the leaf with the given index.
std::vector<AtomId> chain_through_leaf(const FiltrationTree& tree, std::size_t leaf_index);

template <class T>
BasicChainConstruction<T> extremal_chain(TreePtr tree, std::vector<AtomId> chain, Phi phi) {
  require_nested_chain(*tree, chain);
  const int depth = tree->depth();
  const std::size_t K = chain.size() - 1;

  std::vector<T> coefficients;
  std::vector<BasicLeafFunction<T>> u_terms;
  std::vector<BasicLeafFunction<T>> partial;
  auto running = BasicLeafFunction<T>::indicator(tree, chain.front());
  partial.push_back(running);
  for (std::size_t k = 1; k <= K; ++k) {
    const T c = T(phi(std::min(1.0, tree->atom(chain[k]).measure)));
    const T ratio = detail::atom_measure<T>(*tree, chain[k - 1]) / detail::atom_measure<T>(*tree, chain[k]);
    auto u = T(c * ratio) * BasicLeafFunction<T>::indicator(tree, chain[k]) -
             c * BasicLeafFunction<T>::indicator(tree, chain[k - 1]);
    running = running + u;
    coefficients.push_back(c);
    u_terms.push_back(std::move(u));
    partial.push_back(running);
  }
  while (static_cast<int>(partial.size()) <= depth) partial.push_back(running);
  BasicMartingaleSequence<T> sequence(std::move(partial));
  return BasicChainConstruction<T>{std::move(chain), std::move(phi), std::move(coefficients), std::move(u_terms),
                                   running, std::move(sequence)};
}

/// Floating construction with c_k = φ(P(B_k)).
ChainConstruction extremal_chain_function(TreePtr tree, std::vector<AtomId> chain, const Phi& phi);
/// Same construction in rational arithmetic (exact-mode trees; c_k are the
/// doubles φ(P(B_k)) converted without rounding).
ExactChainConstruction extremal_chain_function_exact(TreePtr tree, std::vector<AtomId> chain, const Phi& phi);

/// h = Σ u_k = f − χ_Ω.
LeafFunction h_function(TreePtr tree, std::vector<AtomId> chain, const Phi& phi);

/// h on the dyadic tree for c_k = 1/(1 + k log 2) and the chain through
/// `leaf_index`: on B_n \ B_{n+1} it equals Σ_{k≤n} c_k − c_{n+1}, and on B_N
/// it equals Σ_{k≤N} c_k. The tree must be dyadic of matching depth.
LeafFunction dyadic_h_closed_form(TreePtr dyadic_tree, std::size_t leaf_index);
LeafFunction dyadic_h_closed_form(int depth, std::size_t leaf_index);

/// sin h with c_k = (φ/φ*)(P(B_k)).
LeafFunction sin_h_multiplier(TreePtr tree, std::vector<AtomId> chain, const Phi& phi);

/// For every atom B at every level n and p = 1:
///     ∫_B |F(f) − E_n F(f)| ≤ 2C ∫_B |f − E_n f|,
/// where composed = F∘f and C is the caller's Lipschitz constant.
VerificationReport lipschitz_compose_check(const LeafFunction& f, double lip_constant, const LeafFunction& composed,
                                           double slack = 1e-10);

struct ExtremalMeasurement {
  NormResult seminorm;
  double norm = 0.0;  // ‖f‖_{L̃_{p,φ}}, the measured C₁ for this chain
  // min and max over n of f_{B_n} / φ*(P(B_n)); the min is the measured C₂.
  double min_average_ratio = 0.0;
  double max_average_ratio = 0.0;
  int min_ratio_level = 0;
  int max_ratio_level = 0;
  // φ(P(B_N)) P(B_N)^{1/p}: size of the neglected tail of the infinite sum.
  double truncation_bound = 0.0;
};

ExtremalMeasurement measure_extremal(const ChainConstruction& construction, const CampanatoSpace& space);

/// `count` distinct leaf indices drawn uniformly with a seeded mt19937_64
/// (all leaves when count ≥ leaf_count), in draw order.
std::vector<std::size_t> sample_leaves(const FiltrationTree& tree, std::size_t count, std::uint64_t seed);

}  // namespace campanato
