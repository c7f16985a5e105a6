#include "campanato/constructions.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <sstream>
#include <unordered_set>

namespace campanato {

void require_nested_chain(const FiltrationTree& tree, const std::vector<AtomId>& chain) {
  if (chain.empty()) throw std::invalid_argument("chain not nested: empty chain");
  if (chain.size() > static_cast<std::size_t>(tree.depth()) + 1) {
    throw std::invalid_argument("chain not nested: longer than the tree is deep");
  }
  for (std::size_t k = 0; k < chain.size(); ++k) {
    if (!tree.contains(chain[k]) || chain[k].level != static_cast<int>(k)) {
      throw std::invalid_argument("chain not nested: entry " + std::to_string(k) + " is " + to_string(chain[k]));
    }
    if (k > 0 && tree.parent(chain[k]) != chain[k - 1]) {
      throw std::invalid_argument("chain not nested: " + to_string(chain[k]) + " is not a child of " +
                                  to_string(chain[k - 1]));
    }
  }
}

std::vector<AtomId> chain_through_leaf(const FiltrationTree& tree, std::size_t leaf_index) {
  return chain_to_root(tree, tree.leaf_id(leaf_index));
}

ChainConstruction extremal_chain_function(TreePtr tree, std::vector<AtomId> chain, const Phi& phi) {
  return extremal_chain<double>(std::move(tree), std::move(chain), phi);
}

ExactChainConstruction extremal_chain_function_exact(TreePtr tree, std::vector<AtomId> chain, const Phi& phi) {
  if (tree->mode() != ArithmeticMode::exact) throw std::invalid_argument("exact construction needs an exact-mode tree");
  return extremal_chain<Rational>(std::move(tree), std::move(chain), phi);
}

LeafFunction h_function(TreePtr tree, std::vector<AtomId> chain, const Phi& phi) {
  const ChainConstruction c = extremal_chain_function(tree, std::move(chain), phi);
  return c.f - LeafFunction::indicator(tree, tree->root().id);
}

LeafFunction dyadic_h_closed_form(TreePtr tree, std::size_t leaf_index) {
  const int N = tree->depth();
  if (!(*tree == build_dyadic(N))) throw std::invalid_argument("dyadic_h_closed_form needs a dyadic tree");
  if (leaf_index >= tree->leaf_count()) throw std::out_of_range("leaf index outside the dyadic tree");

  const double log2 = std::log(2.0);
  std::vector<double> c(static_cast<std::size_t>(N) + 2, 0.0);
  for (int k = 1; k <= N + 1; ++k) c[static_cast<std::size_t>(k)] = 1.0 / (1.0 + k * log2);
  // ring[n] is the value on B_n \ B_{n+1}; ring[N] the value on B_N.
  std::vector<double> ring(static_cast<std::size_t>(N) + 1);
  double partial = 0.0;
  for (int n = 0; n <= N; ++n) {
    if (n > 0) partial += c[static_cast<std::size_t>(n)];
    ring[static_cast<std::size_t>(n)] = n < N ? partial - c[static_cast<std::size_t>(n) + 1] : partial;
  }
  std::vector<double> values(tree->leaf_count());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const int n = N - static_cast<int>(std::bit_width(i ^ leaf_index));
    values[i] = ring[static_cast<std::size_t>(n)];
  }
  return LeafFunction(std::move(tree), std::move(values));
}

LeafFunction dyadic_h_closed_form(int depth, std::size_t leaf_index) {
  return dyadic_h_closed_form(share(build_dyadic(depth)), leaf_index);
}

LeafFunction sin_h_multiplier(TreePtr tree, std::vector<AtomId> chain, const Phi& phi) {
  return h_function(std::move(tree), std::move(chain), quotient_phi(phi)).map([](double x) { return std::sin(x); });
}

VerificationReport lipschitz_compose_check(const LeafFunction& f, double lip_constant, const LeafFunction& composed,
                                           double slack) {
  if (!(lip_constant >= 0.0)) throw std::invalid_argument("Lipschitz constant must be non-negative");
  if (f.tree_ptr() != composed.tree_ptr() && !(f.tree() == composed.tree())) {
    throw std::invalid_argument("f and F(f) live on different trees");
  }
  VerificationReport report{"lipschitz", {}};
  Check check;
  check.name = "Lipschitz composition";
  check.anchor = "int_B |F(f) - E_n F(f)| <= 2C int_B |f - E_n f|, p = 1";
  check.threshold = 2.0 * lip_constant;

  const FiltrationTree& tree = f.tree();
  std::size_t atoms = 0;
  double worst = 0.0;
  for (int n = 0; n <= tree.depth(); ++n) {
    for (const auto& a : tree.level(n)) {
      ++atoms;
      const double lhs = central_p_integral(composed, a.id, n, 1.0);
      const double base = central_p_integral(f, a.id, n, 1.0);
      const double rhs = 2.0 * lip_constant * base;
      if (base > 0.0) {
        const double ratio = lhs / base;
        if (ratio > worst) {
          worst = ratio;
          check.witness = to_string(a.id);
        }
      }
      if (lhs > rhs + slack) {
        std::ostringstream msg;
        msg << "atom " << to_string(a.id) << ": " << lhs << " > " << rhs;
        check.fail(msg.str());
      }
    }
  }
  check.measure("atoms", static_cast<double>(atoms))
      .measure("worst_ratio", worst)
      .measure("violations", static_cast<double>(check.failures.size()));
  report.add(std::move(check));
  return report;
}

ExtremalMeasurement measure_extremal(const ChainConstruction& construction, const CampanatoSpace& space) {
  ExtremalMeasurement out;
  out.seminorm = space.seminorm(construction.f);
  out.norm = out.seminorm.value + std::abs(expectation(construction.f));
  out.min_average_ratio = INFINITY;
  out.max_average_ratio = -INFINITY;
  for (const AtomId& b : construction.chain) {
    const double ratio = atom_average(construction.f, b) / space.star_at(b);
    if (ratio < out.min_average_ratio) {
      out.min_average_ratio = ratio;
      out.min_ratio_level = b.level;
    }
    if (ratio > out.max_average_ratio) {
      out.max_average_ratio = ratio;
      out.max_ratio_level = b.level;
    }
  }
  const AtomId last = construction.chain.back();
  const double m = space.tree().atom(last).measure;
  out.truncation_bound = space.phi_at(last) * std::pow(m, 1.0 / space.p());
  return out;
}

std::vector<std::size_t> sample_leaves(const FiltrationTree& tree, std::size_t count, std::uint64_t seed) {
  const std::size_t n = tree.leaf_count();
  std::vector<std::size_t> out;
  if (count >= n) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = i;
    return out;
  }
  std::mt19937_64 rng(seed);
  std::unordered_set<std::size_t> seen;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  while (out.size() < count) {
    const std::uint64_t x = rng();
    if (x >= limit) continue;
    const auto draw = static_cast<std::size_t>(x % n);
    if (seen.insert(draw).second) out.push_back(draw);
  }
  return out;
}

}  // namespace campanato
