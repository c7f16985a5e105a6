#pragma once

// Finite atom-generated filtrations F_0 ⊂ F_1 ⊂ ... ⊂ F_N on a probability
// space. Level n of the tree is the partition A(F_n); F_0 = {∅, Ω} is the
// single root atom. An atom that does not split between levels is stored as a
// single child of equal measure.

#include "campanato/rational.hpp"
#include "campanato/report.hpp"

#include <compare>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace campanato {

enum class ArithmeticMode { exact, floating };

/// Atoms are identified by (level, index) in construction order.
struct AtomId {
  int level = 0;
  std::size_t index = 0;

  friend auto operator<=>(const AtomId&, const AtomId&) = default;
};

std::string to_string(AtomId id);

struct Atom {
  AtomId id;
  double measure = 1.0;
  std::optional<std::size_t> parent;  // index into the previous level
  std::size_t first_child = 0;
  std::size_t child_count = 0;
  // Deepest-level atoms contained in this one form a contiguous range.
  std::size_t first_leaf = 0;
  std::size_t leaf_count = 0;
};

class TreeSpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A child fraction of a split. Exact when parsed from "p/q" or a decimal
/// string; floating when given as a plain number.
struct Fraction {
  std::optional<Rational> exact;
  double value = 0.0;

  static Fraction parse(std::string_view text);
  static Fraction floating(double v);
};

/// Nested split description. A node with `persist` set keeps its atom whole
/// down to the bottom of the tree. Otherwise `fractions` gives the child
/// measures relative to the parent and `children` (empty, or one entry per
/// fraction) describes the next levels; missing children persist.
struct SplitNode {
  bool persist = false;
  std::vector<Fraction> fractions;
  std::vector<SplitNode> children;

  static SplitNode persisting() { return SplitNode{true, {}, {}}; }
  static SplitNode split(std::vector<Fraction> fractions, std::vector<SplitNode> children = {});
};

class FiltrationTree {
 public:
  int depth() const { return static_cast<int>(levels_.size()) - 1; }
  ArithmeticMode mode() const { return mode_; }

  std::span<const Atom> level(int n) const;
  const Atom& atom(AtomId id) const;
  bool contains(AtomId id) const;
  const Atom& root() const { return levels_.front().front(); }
  std::span<const Atom> children(AtomId id) const;
  std::optional<AtomId> parent(AtomId id) const;
  /// The level-k atom containing `id` (k ≤ id.level).
  AtomId ancestor(AtomId id, int k) const;
  /// Level-N atom id of leaf `i`.
  AtomId leaf_id(std::size_t i) const { return AtomId{depth(), i}; }

  std::size_t leaf_count() const { return levels_.back().size(); }
  std::size_t atom_count() const;

  /// Exact measure; only available in exact mode.
  const Rational& exact_measure(AtomId id) const;
  std::span<const double> leaf_measures() const { return leaf_measures_; }
  std::span<const Rational> exact_leaf_measures() const;

  /// The filtration stopped at level `n` (F_0, ..., F_n).
  FiltrationTree truncated(int n) const;

  /// Structural equality: same shape and identical measures.
  bool operator==(const FiltrationTree& other) const;

 private:
  friend FiltrationTree build_from_spec(const SplitNode&, std::optional<int>);
  friend FiltrationTree build_dyadic(int);

  void finalize();

  std::vector<std::vector<Atom>> levels_;
  std::vector<std::vector<Rational>> exact_;  // empty in floating mode
  std::vector<double> leaf_measures_;
  std::vector<Rational> exact_leaf_measures_;
  ArithmeticMode mode_ = ArithmeticMode::exact;
};

using TreePtr = std::shared_ptr<const FiltrationTree>;

/// Level n has 2^n atoms of measure 2^-n, modelling [j 2^-n, (j+1) 2^-n).
FiltrationTree build_dyadic(int depth);

/// Builds a tree from a nested split description. The tree depth is the
/// deepest split in the spec, raised to `min_depth` when given.
/// Throws TreeSpecError when fractions do not sum to one, a fraction is not
/// positive, or a split lists no fractions.
FiltrationTree build_from_spec(const SplitNode& root, std::optional<int> min_depth = std::nullopt);

inline TreePtr share(FiltrationTree tree) {
  return std::make_shared<const FiltrationTree>(std::move(tree));
}

/// Least R with E_n f ≤ R E_{n-1} f for all non-negative martingales, i.e.
/// the largest parent/child measure ratio.
double regularity_constant(const FiltrationTree& tree);

/// Checks every edge B_n ⊂ B_{n-1}: either the atom persists or
/// (1 + 1/R) P(B_n) ≤ P(B_{n-1}) ≤ R P(B_n). Violations are listed, not thrown.
VerificationReport check_chain_gaps(const FiltrationTree& tree, double R);

/// [B_0, ..., B_N] with B_N = leaf. Throws std::out_of_range when the atom is
/// not in the tree, std::invalid_argument when it is not at the deepest level.
std::vector<AtomId> chain_to_root(const FiltrationTree& tree, AtomId leaf);

}  // namespace campanato
