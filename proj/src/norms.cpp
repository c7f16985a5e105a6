#include "campanato/norms.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace campanato {

namespace {

struct AtomIntegral {
  double integral = 0.0;  // ∫_B |f − f_B|^p dP
  bool constant = true;
};

AtomIntegral central_integral(std::span<const double> v, std::span<const double> m, const Atom& a, double p) {
  const std::size_t lo = a.first_leaf;
  const std::size_t hi = a.first_leaf + a.leaf_count;
  AtomIntegral out;
  double sum = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    sum += v[i] * m[i];
    if (v[i] != v[lo]) out.constant = false;
  }
  if (out.constant) return out;
  const double avg = sum / a.measure;
  for (std::size_t i = lo; i < hi; ++i) out.integral += detail::abs_pow<double>(v[i] - avg, p) * m[i];
  return out;
}

double root_p(double x, double p) {
  if (p == 1.0) return x;
  if (p == 2.0) return std::sqrt(x);
  return std::pow(x, 1.0 / p);
}

// (1/φ(P)) ((1/P) I)^{1/p}
double normalized(double integral, double measure, double p, double phi_value) {
  return root_p(integral / measure, p) / phi_value;
}

void require_tree(const TreePtr& expected, const TreePtr& got) {
  if (expected != got && !(*expected == *got)) {
    throw std::invalid_argument("function lives on a different tree than the space");
  }
}

std::vector<double> level_integrals(const LeafFunction& f, int n, double p) {
  const auto v = f.values();
  const auto m = f.tree().leaf_measures();
  std::vector<double> out;
  for (const auto& a : f.tree().level(n)) out.push_back(central_integral(v, m, a, p).integral);
  return out;
}

class MeasureMemo {
 public:
  explicit MeasureMemo(const Phi& phi) : phi_(phi) {}
  double operator()(double r) {
    auto [it, inserted] = cache_.try_emplace(r, 0.0);
    if (inserted) it->second = phi_(std::min(r, 1.0));
    return it->second;
  }

 private:
  const Phi& phi_;
  std::unordered_map<double, double> cache_;
};

NormResult empty_result(const FiltrationTree& tree) {
  NormResult out;
  out.level_sups.assign(static_cast<std::size_t>(tree.depth()) + 1, 0.0);
  out.witness = NormWitness{0, {tree.root().id}};
  return out;
}

}  // namespace

std::string describe(const NormWitness& w) {
  std::ostringstream out;
  out << "n=" << w.level << " {";
  for (std::size_t i = 0; i < w.atoms.size(); ++i) out << (i ? "," : "") << to_string(w.atoms[i]);
  out << "}";
  return out.str();
}

CampanatoSpace::CampanatoSpace(TreePtr tree, double p, Phi phi) : tree_(std::move(tree)), p_(p), phi_(std::move(phi)) {
  if (!tree_) throw std::invalid_argument("Campanato space needs a tree");
  detail::require_p(p_);
  phi_values_.resize(static_cast<std::size_t>(tree_->depth()) + 1);
  for (int n = 0; n <= tree_->depth(); ++n) {
    for (const auto& a : tree_->level(n)) phi_values_[static_cast<std::size_t>(n)].push_back(phi_of_measure(a.measure));
  }
}

double CampanatoSpace::phi_of_measure(double r) const {
  std::lock_guard lock(cache_mutex_);
  auto [it, inserted] = phi_cache_.try_emplace(r, 0.0);
  if (inserted) it->second = phi_(std::min(r, 1.0));
  return it->second;
}

double CampanatoSpace::phi_at(AtomId b) const {
  (void)tree_->atom(b);
  return phi_values_[static_cast<std::size_t>(b.level)][b.index];
}

double CampanatoSpace::star_at(AtomId b) const {
  (void)tree_->atom(b);
  std::call_once(star_once_, [this] {
    std::map<double, double> memo;
    star_values_.resize(phi_values_.size());
    for (int n = 0; n <= tree_->depth(); ++n) {
      for (const auto& a : tree_->level(n)) {
        auto [it, inserted] = memo.try_emplace(a.measure, 0.0);
        if (inserted) it->second = phi_star(phi_, std::min(a.measure, 1.0));
        star_values_[static_cast<std::size_t>(n)].push_back(it->second);
      }
    }
  });
  return star_values_[static_cast<std::size_t>(b.level)][b.index];
}

NormResult CampanatoSpace::seminorm(const LeafFunction& f) const {
  require_tree(tree_, f.tree_ptr());
  NormResult out = empty_result(*tree_);
  const auto v = f.values();
  const auto m = tree_->leaf_measures();
  for (int n = 0; n <= tree_->depth(); ++n) {
    const auto atoms = tree_->level(n);
    double& level_sup = out.level_sups[static_cast<std::size_t>(n)];
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const AtomIntegral c = central_integral(v, m, atoms[i], p_);
      if (c.constant) continue;
      const double ratio = normalized(c.integral, atoms[i].measure, p_, phi_values_[static_cast<std::size_t>(n)][i]);
      level_sup = std::max(level_sup, ratio);
      if (ratio > out.value) {
        out.value = ratio;
        out.witness = NormWitness{n, {atoms[i].id}};
      }
    }
  }
  return out;
}

NormResult CampanatoSpace::norm(const LeafFunction& f) const {
  NormResult out = seminorm(f);
  out.value += std::abs(expectation(f));
  return out;
}

std::vector<std::vector<double>> CampanatoSpace::oscillations(const LeafFunction& f) const {
  require_tree(tree_, f.tree_ptr());
  const auto v = f.values();
  const auto m = tree_->leaf_measures();
  std::vector<std::vector<double>> out(static_cast<std::size_t>(tree_->depth()) + 1);
  for (int n = 0; n <= tree_->depth(); ++n) {
    for (const auto& a : tree_->level(n)) {
      const AtomIntegral c = central_integral(v, m, a, p_);
      out[static_cast<std::size_t>(n)].push_back(c.constant ? 0.0 : root_p(c.integral / a.measure, p_));
    }
  }
  return out;
}

std::vector<std::vector<Rational>> exact_mean_oscillation_powers(const ExactLeafFunction& f, int p) {
  if (p < 1) throw std::invalid_argument("exact oscillations need an integer p >= 1");
  const FiltrationTree& tree = f.tree();
  const int depth = tree.depth();
  const auto values = f.values();

  // constant[n][i]: f is constant on the atom (its value is then values[first_leaf]).
  std::vector<std::vector<char>> constant(static_cast<std::size_t>(depth) + 1);
  constant[static_cast<std::size_t>(depth)].assign(tree.leaf_count(), 1);
  for (int n = depth - 1; n >= 0; --n) {
    const auto atoms = tree.level(n);
    const auto& below = constant[static_cast<std::size_t>(n) + 1];
    auto& here = constant[static_cast<std::size_t>(n)];
    here.assign(atoms.size(), 1);
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const Atom& a = atoms[i];
      for (std::size_t c = a.first_child; c < a.first_child + a.child_count; ++c) {
        const Atom& child = tree.level(n + 1)[c];
        if (!below[c] || values[child.first_leaf] != values[a.first_leaf]) {
          here[i] = 0;
          break;
        }
      }
    }
  }

  // Σ_B f dP on non-constant atoms, bottom-up.
  std::vector<std::vector<Rational>> sums(static_cast<std::size_t>(depth) + 1);
  for (int n = depth; n >= 0; --n) {
    const auto atoms = tree.level(n);
    auto& here = sums[static_cast<std::size_t>(n)];
    here.assign(atoms.size(), Rational(0));
    if (n == depth) continue;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (constant[static_cast<std::size_t>(n)][i]) continue;
      const Atom& a = atoms[i];
      for (std::size_t c = a.first_child; c < a.first_child + a.child_count; ++c) {
        const AtomId cid{n + 1, c};
        if (constant[static_cast<std::size_t>(n) + 1][c]) {
          here[i] += values[tree.atom(cid).first_leaf] * tree.exact_measure(cid);
        } else {
          here[i] += sums[static_cast<std::size_t>(n) + 1][c];
        }
      }
    }
  }

  // ∫_B |f − c|^p dP, descending only into non-constant children.
  auto integral = [&](auto&& self, AtomId b, const Rational& c) -> Rational {
    Rational total(0);
    const Atom& a = tree.atom(b);
    for (std::size_t k = a.first_child; k < a.first_child + a.child_count; ++k) {
      const AtomId cid{b.level + 1, k};
      if (constant[static_cast<std::size_t>(cid.level)][k]) {
        const Rational& v = values[tree.atom(cid).first_leaf];
        if (v != c) total += detail::abs_pow<Rational>(Rational(v - c), p) * tree.exact_measure(cid);
      } else {
        total += self(self, cid, c);
      }
    }
    return total;
  };

  std::vector<std::vector<Rational>> out(static_cast<std::size_t>(depth) + 1);
  for (int n = 0; n <= depth; ++n) {
    const auto atoms = tree.level(n);
    auto& here = out[static_cast<std::size_t>(n)];
    here.assign(atoms.size(), Rational(0));
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (constant[static_cast<std::size_t>(n)][i]) continue;
      const AtomId id{n, i};
      const Rational& measure = tree.exact_measure(id);
      const Rational avg = sums[static_cast<std::size_t>(n)][i] / measure;
      here[i] = integral(integral, id, avg) / measure;
    }
  }
  return out;
}

NormResult CampanatoSpace::seminorm(const ExactLeafFunction& f) const {
  if (f.tree_ptr() != tree_ && !(f.tree() == *tree_)) {
    throw std::invalid_argument("function lives on a different tree than the space");
  }
  if (p_ != std::floor(p_)) throw std::invalid_argument("exact seminorms need an integer p");
  const int p = static_cast<int>(p_);
  const auto powers = exact_mean_oscillation_powers(f, p);
  const bool exact_phi = phi_.kind() == Phi::Kind::one;

  NormResult out = empty_result(*tree_);
  Rational best(0);
  for (int n = 0; n <= tree_->depth(); ++n) {
    const auto& level = powers[static_cast<std::size_t>(n)];
    double& level_sup = out.level_sups[static_cast<std::size_t>(n)];
    for (std::size_t i = 0; i < level.size(); ++i) {
      if (level[i] == 0) continue;
      const double ratio = root_p(to_double(level[i]), p_) / phi_values_[static_cast<std::size_t>(n)][i];
      level_sup = std::max(level_sup, ratio);
      const bool better = exact_phi ? level[i] > best : ratio > out.value;
      if (better) {
        best = level[i];
        out.value = ratio;
        out.witness = NormWitness{n, {AtomId{n, i}}};
      }
    }
  }
  if (exact_phi) {
    out.exact_power = best;
    out.value = root_p(to_double(best), p_);
  }
  return out;
}

NormResult CampanatoSpace::norm(const ExactLeafFunction& f) const {
  NormResult out = seminorm(f);
  using std::abs;
  const Rational mean = abs(expectation(f));
  out.value += to_double(mean);
  if (out.exact_power && p_ == 1.0) {
    *out.exact_power += mean;
  } else {
    out.exact_power.reset();
  }
  return out;
}

NormResult campanato_seminorm(const LeafFunction& f, double p, const Phi& phi) {
  return CampanatoSpace(f.tree_ptr(), p, phi).seminorm(f);
}

NormResult campanato_norm(const LeafFunction& f, double p, const Phi& phi) {
  return CampanatoSpace(f.tree_ptr(), p, phi).norm(f);
}

NormResult chi_norm_closed_form(const FiltrationTree& tree, AtomId b, double p, const Phi& phi) {
  detail::require_p(p);
  const double P = tree.atom(b).measure;
  NormResult out = empty_result(tree);
  for (int k = 0; k < b.level; ++k) {
    const AtomId anc = tree.ancestor(b, k);
    const double Pk = tree.atom(anc).measure;
    if (Pk == P) continue;
    const double x = P / Pk;
    const double inner = x * detail::abs_pow<double>(1.0 - x, p) + (1.0 - x) * detail::abs_pow<double>(x, p);
    const double ratio = root_p(inner, p) / phi(std::min(Pk, 1.0));
    out.level_sups[static_cast<std::size_t>(k)] = ratio;
    if (ratio > out.value) {
      out.value = ratio;
      out.witness = NormWitness{k, {anc}};
    }
  }
  return out;
}

NormResult f_norm_exact(const LeafFunction& f, double p, const Phi& phi, std::size_t max_atoms) {
  detail::require_p(p);
  const FiltrationTree& tree = f.tree();
  for (int n = 0; n <= tree.depth(); ++n) {
    if (tree.level(n).size() > max_atoms) {
      throw EnumerationLimitError("level " + std::to_string(n) + " has " + std::to_string(tree.level(n).size()) +
                                  " atoms; exact subset enumeration is limited to " + std::to_string(max_atoms) +
                                  " atoms per level (use f_norm_lower for a lower bound)");
    }
  }
  MeasureMemo phi_of(phi);
  NormResult out = empty_result(tree);
  for (int n = 0; n <= tree.depth(); ++n) {
    const auto atoms = tree.level(n);
    const std::vector<double> integrals = level_integrals(f, n, p);
    const std::size_t k = atoms.size();
    const std::size_t subsets = std::size_t{1} << k;
    std::vector<double> mass(subsets, 0.0);
    std::vector<double> total(subsets, 0.0);
    double& level_sup = out.level_sups[static_cast<std::size_t>(n)];
    std::size_t best_mask = 0;
    double best = 0.0;
    for (std::size_t mask = 1; mask < subsets; ++mask) {
      const std::size_t low = static_cast<std::size_t>(std::countr_zero(mask));
      const std::size_t rest = mask & (mask - 1);
      mass[mask] = mass[rest] + atoms[low].measure;
      total[mask] = total[rest] + integrals[low];
      if (total[mask] == 0.0) continue;
      const double ratio = normalized(total[mask], mass[mask], p, phi_of(mass[mask]));
      if (ratio > best) {
        best = ratio;
        best_mask = mask;
      }
    }
    level_sup = best;
    if (best > out.value) {
      out.value = best;
      out.witness.level = n;
      out.witness.atoms.clear();
      for (std::size_t i = 0; i < k; ++i) {
        if (best_mask >> i & 1U) out.witness.atoms.push_back(atoms[i].id);
      }
    }
  }
  return out;
}

NormResult f_norm_lower(const LeafFunction& f, double p, const Phi& phi, std::size_t budget) {
  detail::require_p(p);
  if (budget == 0) throw std::invalid_argument("f_norm_lower needs a positive budget");
  const FiltrationTree& tree = f.tree();
  MeasureMemo phi_of(phi);
  NormResult out = empty_result(tree);
  out.lower_bound = true;
  for (int n = 0; n <= tree.depth(); ++n) {
    const auto atoms = tree.level(n);
    const std::vector<double> integrals = level_integrals(f, n, p);
    double& level_sup = out.level_sups[static_cast<std::size_t>(n)];
    auto consider = [&](double ratio, auto make_atoms) {
      level_sup = std::max(level_sup, ratio);
      if (ratio > out.value) {
        out.value = ratio;
        out.witness = NormWitness{n, make_atoms()};
      }
    };
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (integrals[i] == 0.0) continue;
      consider(normalized(integrals[i], atoms[i].measure, p, phi_of(atoms[i].measure)),
               [&] { return std::vector<AtomId>{atoms[i].id}; });
    }
    std::vector<std::size_t> order(atoms.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return integrals[a] / atoms[a].measure > integrals[b] / atoms[b].measure;
    });
    double mass = 0.0;
    double total = 0.0;
    const std::size_t limit = std::min(budget, order.size());
    for (std::size_t j = 0; j < limit; ++j) {
      mass += atoms[order[j]].measure;
      total += integrals[order[j]];
      if (j == 0 || total == 0.0) continue;
      consider(normalized(total, mass, p, phi_of(mass)), [&] {
        std::vector<AtomId> ids;
        for (std::size_t q = 0; q <= j; ++q) ids.push_back(atoms[order[q]].id);
        std::sort(ids.begin(), ids.end());
        return ids;
      });
    }
  }
  return out;
}

}  // namespace campanato
