#pragma once

// Leaf functions (F_N-measurable functions), conditional expectations E_n,
// atom averages f_B and martingale sequences (E_0 f, ..., E_N f).
//
// Everything is templated on the scalar: `double` for the general case and
// `Rational` on exact-mode trees, where averaging is exact.

#include "campanato/filtration.hpp"
#include "campanato/rational.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

namespace campanato {

template <class T>
class BasicLeafFunction {
 public:
  BasicLeafFunction(TreePtr tree, std::vector<T> values) : tree_(std::move(tree)), values_(std::move(values)) {
    if (!tree_) throw std::invalid_argument("leaf function needs a tree");
    if (values_.size() != tree_->leaf_count()) {
      throw std::invalid_argument("expected " + std::to_string(tree_->leaf_count()) + " leaf values, got " +
                                  std::to_string(values_.size()));
    }
    if constexpr (std::is_floating_point_v<T>) {
      for (const T& v : values_) {
        if (!std::isfinite(v)) throw std::invalid_argument("leaf values must be finite");
      }
    }
    if constexpr (std::is_same_v<T, Rational>) {
      if (tree_->mode() != ArithmeticMode::exact) {
        throw std::invalid_argument("exact leaf functions need an exact-mode tree");
      }
    }
  }

  static BasicLeafFunction constant(TreePtr tree, T c) {
    const std::size_t n = tree->leaf_count();
    return BasicLeafFunction(std::move(tree), std::vector<T>(n, c));
  }

  /// χ_B as a leaf function.
  static BasicLeafFunction indicator(TreePtr tree, AtomId b) {
    const Atom& a = tree->atom(b);
    std::vector<T> v(tree->leaf_count(), T(0));
    for (std::size_t i = a.first_leaf; i < a.first_leaf + a.leaf_count; ++i) v[i] = T(1);
    return BasicLeafFunction(std::move(tree), std::move(v));
  }

  const FiltrationTree& tree() const { return *tree_; }
  const TreePtr& tree_ptr() const { return tree_; }
  std::span<const T> values() const { return values_; }
  const T& operator[](std::size_t leaf) const { return values_[leaf]; }
  std::size_t size() const { return values_.size(); }

  /// Pointwise F(f).
  template <class F>
  BasicLeafFunction map(F&& fn) const {
    std::vector<T> out(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) out[i] = fn(values_[i]);
    return BasicLeafFunction(tree_, std::move(out));
  }

  friend BasicLeafFunction operator+(const BasicLeafFunction& a, const BasicLeafFunction& b) {
    return a.zip(b, std::plus<T>());
  }
  friend BasicLeafFunction operator-(const BasicLeafFunction& a, const BasicLeafFunction& b) {
    return a.zip(b, std::minus<T>());
  }
  friend BasicLeafFunction operator*(const BasicLeafFunction& a, const BasicLeafFunction& b) {
    return a.zip(b, std::multiplies<T>());
  }
  friend BasicLeafFunction operator*(const T& c, const BasicLeafFunction& f) {
    return f.map([&](const T& v) { return T(c * v); });
  }
  friend bool operator==(const BasicLeafFunction& a, const BasicLeafFunction& b) {
    return a.tree_ == b.tree_ && a.values_ == b.values_;
  }

 private:
  template <class Op>
  BasicLeafFunction zip(const BasicLeafFunction& other, Op op) const {
    if (tree_ != other.tree_ && !(*tree_ == *other.tree_)) {
      throw std::invalid_argument("leaf functions live on different trees");
    }
    std::vector<T> out(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) out[i] = op(values_[i], other.values_[i]);
    return BasicLeafFunction(tree_, std::move(out));
  }

  TreePtr tree_;
  std::vector<T> values_;
};

using LeafFunction = BasicLeafFunction<double>;
using ExactLeafFunction = BasicLeafFunction<Rational>;

namespace detail {

template <class T>
std::span<const T> leaf_measures(const FiltrationTree& tree) {
  if constexpr (std::is_same_v<T, Rational>) {
    return tree.exact_leaf_measures();
  } else {
    return tree.leaf_measures();
  }
}

template <class T>
T atom_measure(const FiltrationTree& tree, AtomId b) {
  if constexpr (std::is_same_v<T, Rational>) {
    return tree.exact_measure(b);
  } else {
    return tree.atom(b).measure;
  }
}

/// |x|^p. Exact scalars require an integer p.
template <class T>
T abs_pow(const T& x, double p) {
  using std::abs;
  const T a = abs(x);
  if constexpr (std::is_same_v<T, Rational>) {
    if (p != std::floor(p) || p < 1) throw std::invalid_argument("exact p-th powers need an integer p >= 1");
    T out(1);
    for (int k = 0; k < static_cast<int>(p); ++k) out *= a;
    return out;
  } else {
    if (p == 1.0) return a;
    if (p == 2.0) return a * a;
    return std::pow(a, p);
  }
}

inline void require_p(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw std::invalid_argument("p must be a finite real >= 1");
}

}  // namespace detail

/// f_B = (1/P(B)) ∫_B f dP.
template <class T>
T atom_average(const BasicLeafFunction<T>& f, AtomId b) {
  const FiltrationTree& tree = f.tree();
  const Atom& a = tree.atom(b);
  const auto m = detail::leaf_measures<T>(tree);
  T sum(0);
  for (std::size_t i = a.first_leaf; i < a.first_leaf + a.leaf_count; ++i) sum += f[i] * m[i];
  return sum / detail::atom_measure<T>(tree, b);
}

/// E f = Σ f(leaf) P(leaf).
template <class T>
T expectation(const BasicLeafFunction<T>& f) {
  const auto m = detail::leaf_measures<T>(f.tree());
  T sum(0);
  for (std::size_t i = 0; i < f.size(); ++i) sum += f[i] * m[i];
  return sum;
}

/// Per-atom averages of f on level n, indexed like tree.level(n).
template <class T>
std::vector<T> level_averages(const BasicLeafFunction<T>& f, int n) {
  const FiltrationTree& tree = f.tree();
  const auto atoms = tree.level(n);
  std::vector<T> out;
  out.reserve(atoms.size());
  for (const auto& a : atoms) out.push_back(atom_average(f, a.id));
  return out;
}

/// E_n f: constant on every level-n atom.
template <class T>
BasicLeafFunction<T> conditional_expectation(const BasicLeafFunction<T>& f, int n) {
  const FiltrationTree& tree = f.tree();
  if (n < 0 || n > tree.depth()) {
    throw std::out_of_range("conditional expectation level " + std::to_string(n) + " outside [0, " +
                            std::to_string(tree.depth()) + "]");
  }
  if (n == tree.depth()) return f;
  std::vector<T> out(f.size());
  for (const auto& a : tree.level(n)) {
    const T avg = atom_average(f, a.id);
    for (std::size_t i = a.first_leaf; i < a.first_leaf + a.leaf_count; ++i) out[i] = avg;
  }
  return BasicLeafFunction<T>(f.tree_ptr(), std::move(out));
}

/// ∫_B |f − E_n f|^p dP for B ∈ A(F_n).
template <class T>
T central_p_integral(const BasicLeafFunction<T>& f, AtomId b, int n, double p) {
  detail::require_p(p);
  if (b.level != n) {
    throw std::invalid_argument("atom " + to_string(b) + " is not at level " + std::to_string(n));
  }
  const FiltrationTree& tree = f.tree();
  const Atom& a = tree.atom(b);
  const auto m = detail::leaf_measures<T>(tree);
  const T avg = atom_average(f, b);
  T sum(0);
  for (std::size_t i = a.first_leaf; i < a.first_leaf + a.leaf_count; ++i) {
    sum += detail::abs_pow<T>(T(f[i] - avg), p) * m[i];
  }
  return sum;
}

template <class T>
T linf_norm(const BasicLeafFunction<T>& f) {
  using std::abs;
  T best(0);
  for (const T& v : f.values()) {
    const T a = abs(v);
    if (a > best) best = a;
  }
  return best;
}

inline double to_real(double x) { return x; }
inline double to_real(const Rational& q) { return to_double(q); }

/// (Σ |f|^p P(leaf))^{1/p}, always in floating point.
template <class T>
double lp_norm(const BasicLeafFunction<T>& f, double p) {
  detail::require_p(p);
  const auto m = f.tree().leaf_measures();
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) sum += detail::abs_pow<double>(to_real(f[i]), p) * m[i];
  return p == 1.0 ? sum : std::pow(sum, 1.0 / p);
}

/// The martingale (f_n) = (E_n f) for n = 0..N.
template <class T>
class BasicMartingaleSequence {
 public:
  explicit BasicMartingaleSequence(std::vector<BasicLeafFunction<T>> levels) : levels_(std::move(levels)) {
    if (levels_.empty()) throw std::invalid_argument("martingale sequence needs at least one level");
    if (static_cast<int>(levels_.size()) != levels_.front().tree().depth() + 1) {
      throw std::invalid_argument("martingale sequence needs one function per level");
    }
  }

  const FiltrationTree& tree() const { return levels_.front().tree(); }
  int depth() const { return static_cast<int>(levels_.size()) - 1; }
  const BasicLeafFunction<T>& operator[](int n) const { return levels_.at(static_cast<std::size_t>(n)); }
  std::span<const BasicLeafFunction<T>> levels() const { return levels_; }

  /// E_n f_{n+1} == f_n for every n, and each f_n is F_n-measurable; compared
  /// with == (meaningful as "exact" for Rational scalars or dyadic data).
  bool is_martingale() const {
    for (int n = 0; n < depth(); ++n) {
      if (!(conditional_expectation(levels_[n + 1], n) == levels_[n])) return false;
      if (!(conditional_expectation(levels_[n], n) == levels_[n])) return false;
    }
    return true;
  }

 private:
  std::vector<BasicLeafFunction<T>> levels_;
};

using MartingaleSequence = BasicMartingaleSequence<double>;
using ExactMartingaleSequence = BasicMartingaleSequence<Rational>;

template <class T>
BasicMartingaleSequence<T> martingale_of(const BasicLeafFunction<T>& f) {
  std::vector<BasicLeafFunction<T>> levels;
  const int depth = f.tree().depth();
  levels.reserve(static_cast<std::size_t>(depth) + 1);
  for (int n = 0; n <= depth; ++n) levels.push_back(conditional_expectation(f, n));
  return BasicMartingaleSequence<T>(std::move(levels));
}

/// Whether f is constant on every level-n atom (F_n-measurable).
template <class T>
bool is_measurable_at(const BasicLeafFunction<T>& f, int n) {
  for (const auto& a : f.tree().level(n)) {
    for (std::size_t i = a.first_leaf + 1; i < a.first_leaf + a.leaf_count; ++i) {
      if (!(f[i] == f[a.first_leaf])) return false;
    }
  }
  return true;
}

/// The values of E_n f as a leaf function on tree.truncated(n).
LeafFunction restrict_to_level(const LeafFunction& f, int n, TreePtr truncated);

/// Inverse of restrict_to_level: an F_n-measurable function on the full tree.
LeafFunction lift_from_level(const LeafFunction& g, TreePtr full);

/// Exact copy of a floating function (values converted without rounding).
ExactLeafFunction to_exact(const LeafFunction& f);

/// Seeded random leaf function with i.i.d. values uniform in [lo, hi).
/// Uses mt19937_64 bits directly so the sequence is portable.
LeafFunction random_function(TreePtr tree, std::uint64_t seed, double lo = -1.0, double hi = 1.0);

}  // namespace campanato
