#include "campanato/functions.hpp"

#include <random>

namespace campanato {

LeafFunction restrict_to_level(const LeafFunction& f, int n, TreePtr truncated) {
  if (!truncated || truncated->depth() != n) throw std::invalid_argument("truncated tree must have depth n");
  const auto avgs = level_averages(f, n);
  if (avgs.size() != truncated->leaf_count()) throw std::invalid_argument("truncated tree does not match level n");
  return LeafFunction(std::move(truncated), avgs);
}

LeafFunction lift_from_level(const LeafFunction& g, TreePtr full) {
  const int n = g.tree().depth();
  const auto atoms = full->level(n);
  if (atoms.size() != g.size()) throw std::invalid_argument("function does not match level " + std::to_string(n));
  std::vector<double> out(full->leaf_count());
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    for (std::size_t i = atoms[j].first_leaf; i < atoms[j].first_leaf + atoms[j].leaf_count; ++i) out[i] = g[j];
  }
  return LeafFunction(std::move(full), std::move(out));
}

ExactLeafFunction to_exact(const LeafFunction& f) {
  std::vector<Rational> values;
  values.reserve(f.size());
  for (double v : f.values()) values.emplace_back(v);
  return ExactLeafFunction(f.tree_ptr(), std::move(values));
}

LeafFunction random_function(TreePtr tree, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::vector<double> values(tree->leaf_count());
  for (auto& v : values) {
    const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    v = lo + (hi - lo) * unit;
  }
  return LeafFunction(std::move(tree), std::move(values));
}

}  // namespace campanato
