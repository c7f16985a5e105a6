#include "oracles.hpp"

#include <cmath>
#include <random>
#include <string>

namespace oracle {

using campanato::Atom;
using campanato::FiltrationTree;

namespace {

struct AtomSums {
  double measure = 0.0;
  double integral = 0.0;  // Σ |v − v_B|^p P(leaf)
};

AtomSums atom_sums(const FiltrationTree& tree, const Atom& a, const std::vector<double>& v, double p) {
  const auto m = tree.leaf_measures();
  AtomSums out;
  double weighted = 0.0;
  for (std::size_t i = a.first_leaf; i < a.first_leaf + a.leaf_count; ++i) {
    out.measure += m[i];
    weighted += v[i] * m[i];
  }
  const double avg = weighted / out.measure;
  for (std::size_t i = a.first_leaf; i < a.first_leaf + a.leaf_count; ++i) {
    out.integral += std::pow(std::abs(v[i] - avg), p) * m[i];
  }
  return out;
}

template <class F>
double simpson(F&& f, double a, double b, int panels) {
  if (panels % 2) ++panels;
  const double h = (b - a) / panels;
  double sum = f(a) + f(b);
  for (int i = 1; i < panels; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return sum * h / 3.0;
}

}  // namespace

double mean(const FiltrationTree& tree, const std::vector<double>& v) {
  const auto m = tree.leaf_measures();
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * m[i];
  return s;
}

double seminorm(const FiltrationTree& tree, const std::vector<double>& v, double p, const Weight& phi) {
  double best = 0.0;
  for (int n = 0; n <= tree.depth(); ++n) {
    for (const Atom& a : tree.level(n)) {
      const AtomSums s = atom_sums(tree, a, v, p);
      best = std::max(best, std::pow(s.integral / s.measure, 1.0 / p) / phi(std::min(1.0, s.measure)));
    }
  }
  return best;
}

double f_norm(const FiltrationTree& tree, const std::vector<double>& v, double p, const Weight& phi) {
  double best = 0.0;
  for (int n = 0; n <= tree.depth(); ++n) {
    std::vector<AtomSums> sums;
    for (const Atom& a : tree.level(n)) sums.push_back(atom_sums(tree, a, v, p));
    const std::size_t k = sums.size();
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << k); ++mask) {
      double measure = 0.0;
      double integral = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        if (mask >> i & 1) {
          measure += sums[i].measure;
          integral += sums[i].integral;
        }
      }
      best = std::max(best, std::pow(integral / measure, 1.0 / p) / phi(std::min(1.0, measure)));
    }
  }
  return best;
}

std::vector<std::vector<double>> averages(const FiltrationTree& tree, const std::vector<double>& v) {
  const auto m = tree.leaf_measures();
  std::vector<std::vector<double>> out;
  for (int n = 0; n <= tree.depth(); ++n) {
    std::vector<double> level;
    for (const Atom& a : tree.level(n)) {
      double mass = 0.0;
      double s = 0.0;
      for (std::size_t i = a.first_leaf; i < a.first_leaf + a.leaf_count; ++i) {
        mass += m[i];
        s += v[i] * m[i];
      }
      level.push_back(s / mass);
    }
    out.push_back(std::move(level));
  }
  return out;
}

std::vector<std::vector<double>> telescoping_bounds(const FiltrationTree& tree, double abs_mean, double s,
                                                    const Weight& phi) {
  std::vector<std::vector<double>> out{{abs_mean}};
  for (int n = 1; n <= tree.depth(); ++n) {
    std::vector<double> level;
    for (const Atom& a : tree.level(n)) {
      const Atom& parent = tree.level(n - 1)[*a.parent];
      const double step = parent.measure == a.measure ? 0.0 : parent.measure / a.measure * phi(parent.measure) * s;
      level.push_back(out.back()[*a.parent] + step);
    }
    out.push_back(std::move(level));
  }
  return out;
}

double phi_star_simpson(const Weight& phi, double r, int panels) {
  if (r >= 1.0) return 1.0;
  return 1.0 + simpson([&](double s) { return phi(std::exp(-s)); }, 0.0, -std::log(r), panels);
}

double int_condition_simpson(const Weight& phi, double p, double r, double smax, int panels) {
  // t = r e^{-s}, dt = t ds.
  const double integral = simpson(
      [&](double s) {
        const double t = r * std::exp(-s);
        return std::pow(phi(t), p) * t;
      },
      0.0, smax, panels);
  return integral / (r * std::pow(phi(r), p));
}

namespace {

std::vector<double> dyadic_chain_sum(int depth, std::size_t leaf, const std::function<double(int)>& c) {
  const std::size_t n = std::size_t{1} << depth;
  auto chi = [&](int k) {
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) out[i] = (i >> (depth - k)) == (leaf >> (depth - k)) ? 1.0 : 0.0;
    return out;
  };
  std::vector<double> f = chi(0);
  for (int k = 1; k <= depth; ++k) {
    const auto bk = chi(k);
    const auto prev = chi(k - 1);
    for (std::size_t i = 0; i < n; ++i) f[i] += c(k) * (2.0 * bk[i] - prev[i]);
  }
  return f;
}

}  // namespace

std::vector<double> dyadic_extremal_one(int depth, std::size_t leaf) {
  return dyadic_chain_sum(depth, leaf, [](int) { return 1.0; });
}

std::vector<double> dyadic_h_psi(int depth, std::size_t leaf) {
  auto f = dyadic_chain_sum(depth, leaf, [](int k) { return 1.0 / (1.0 + k * std::log(2.0)); });
  for (double& x : f) x -= 1.0;
  return f;
}

double geometric_series_oracle() {
  double s = 0.0;
  for (int j = 0; j < 200; ++j) s += std::abs(j - 1.0) * std::ldexp(1.0, -j - 1);
  return s;
}

namespace {

campanato::SplitNode random_node(std::mt19937_64& rng, int remaining, bool root) {
  using campanato::Fraction;
  using campanato::SplitNode;
  if (remaining == 0) return SplitNode::persisting();
  if (!root && std::uniform_int_distribution<int>(0, 4)(rng) == 0) return SplitNode::persisting();
  const int k = std::uniform_int_distribution<int>(2, 4)(rng);
  std::vector<int> weights(static_cast<std::size_t>(k));
  int total = 0;
  for (int& w : weights) {
    w = std::uniform_int_distribution<int>(1, 5)(rng);
    total += w;
  }
  std::vector<Fraction> fractions;
  std::vector<SplitNode> children;
  for (int w : weights) {
    fractions.push_back(Fraction::parse(std::to_string(w) + "/" + std::to_string(total)));
    children.push_back(random_node(rng, remaining - 1, false));
  }
  return SplitNode::split(std::move(fractions), std::move(children));
}

}  // namespace

campanato::SplitNode random_split_spec(std::uint64_t seed, int depth) {
  std::mt19937_64 rng(seed);
  return random_node(rng, depth, true);
}

}  // namespace oracle
