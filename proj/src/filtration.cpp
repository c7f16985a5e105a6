#include "campanato/filtration.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace campanato {

namespace {

constexpr double kPartitionTolerance = 1e-12;

int spec_depth(const SplitNode& node) {
  if (node.persist) return 0;
  if (node.fractions.empty()) throw TreeSpecError("a split lists no fractions");
  int deepest = 0;
  for (const auto& child : node.children) deepest = std::max(deepest, spec_depth(child));
  return 1 + deepest;
}

bool spec_is_exact(const SplitNode& node) {
  for (const auto& f : node.fractions) {
    if (!f.exact) return false;
  }
  return std::all_of(node.children.begin(), node.children.end(), spec_is_exact);
}

std::string where(AtomId id) { return "atom " + to_string(id); }

}  // namespace

std::string to_string(AtomId id) {
  return "(" + std::to_string(id.level) + "," + std::to_string(id.index) + ")";
}

Fraction Fraction::parse(std::string_view text) {
  Rational q = parse_rational(text);
  return Fraction{q, to_double(q)};
}

Fraction Fraction::floating(double v) { return Fraction{std::nullopt, v}; }

SplitNode SplitNode::split(std::vector<Fraction> fractions, std::vector<SplitNode> children) {
  SplitNode node;
  node.fractions = std::move(fractions);
  node.children = std::move(children);
  return node;
}

std::span<const Atom> FiltrationTree::level(int n) const {
  if (n < 0 || n > depth()) {
    throw std::out_of_range("level " + std::to_string(n) + " outside [0, " + std::to_string(depth()) + "]");
  }
  return levels_[static_cast<std::size_t>(n)];
}

bool FiltrationTree::contains(AtomId id) const {
  return id.level >= 0 && id.level <= depth() && id.index < levels_[static_cast<std::size_t>(id.level)].size();
}

const Atom& FiltrationTree::atom(AtomId id) const {
  if (!contains(id)) throw std::out_of_range(where(id) + " is not in the tree");
  return levels_[static_cast<std::size_t>(id.level)][id.index];
}

std::span<const Atom> FiltrationTree::children(AtomId id) const {
  const Atom& a = atom(id);
  if (a.child_count == 0) return {};
  return level(id.level + 1).subspan(a.first_child, a.child_count);
}

std::optional<AtomId> FiltrationTree::parent(AtomId id) const {
  const Atom& a = atom(id);
  if (!a.parent) return std::nullopt;
  return AtomId{id.level - 1, *a.parent};
}

AtomId FiltrationTree::ancestor(AtomId id, int k) const {
  if (k < 0 || k > id.level) throw std::out_of_range("no level-" + std::to_string(k) + " ancestor of " + where(id));
  (void)atom(id);
  while (id.level > k) id = AtomId{id.level - 1, *levels_[static_cast<std::size_t>(id.level)][id.index].parent};
  return id;
}

std::size_t FiltrationTree::atom_count() const {
  std::size_t n = 0;
  for (const auto& l : levels_) n += l.size();
  return n;
}

const Rational& FiltrationTree::exact_measure(AtomId id) const {
  if (mode_ != ArithmeticMode::exact) throw std::logic_error("exact measures requested from a floating-mode tree");
  (void)atom(id);
  return exact_[static_cast<std::size_t>(id.level)][id.index];
}

std::span<const Rational> FiltrationTree::exact_leaf_measures() const {
  if (mode_ != ArithmeticMode::exact) throw std::logic_error("exact measures requested from a floating-mode tree");
  return exact_leaf_measures_;
}

void FiltrationTree::finalize() {
  const std::size_t last = levels_.size() - 1;
  for (std::size_t i = 0; i < levels_[last].size(); ++i) {
    levels_[last][i].first_leaf = i;
    levels_[last][i].leaf_count = 1;
    levels_[last][i].child_count = 0;
    levels_[last][i].first_child = 0;
  }
  for (std::size_t n = last; n-- > 0;) {
    for (auto& a : levels_[n]) {
      const auto& kids = levels_[n + 1];
      a.first_leaf = kids[a.first_child].first_leaf;
      a.leaf_count = 0;
      for (std::size_t c = 0; c < a.child_count; ++c) a.leaf_count += kids[a.first_child + c].leaf_count;
    }
  }
  leaf_measures_.clear();
  for (const auto& a : levels_[last]) leaf_measures_.push_back(a.measure);
  exact_leaf_measures_.clear();
  if (mode_ == ArithmeticMode::exact) exact_leaf_measures_ = exact_[last];

  // Partition invariant on every level.
  for (std::size_t n = 0; n <= last; ++n) {
    if (mode_ == ArithmeticMode::exact) {
      Rational sum(0);
      for (const auto& m : exact_[n]) sum += m;
      if (sum != 1) throw TreeSpecError("level " + std::to_string(n) + " measures do not sum to 1");
    } else {
      double sum = 0.0;
      for (const auto& a : levels_[n]) sum += a.measure;
      if (std::abs(sum - 1.0) > kPartitionTolerance) {
        throw TreeSpecError("level " + std::to_string(n) + " measures do not sum to 1");
      }
    }
  }
}

FiltrationTree FiltrationTree::truncated(int n) const {
  if (n < 0 || n > depth()) throw std::out_of_range("cannot truncate at level " + std::to_string(n));
  FiltrationTree out;
  out.mode_ = mode_;
  out.levels_.assign(levels_.begin(), levels_.begin() + n + 1);
  if (mode_ == ArithmeticMode::exact) out.exact_.assign(exact_.begin(), exact_.begin() + n + 1);
  out.finalize();
  return out;
}

bool FiltrationTree::operator==(const FiltrationTree& other) const {
  if (depth() != other.depth() || mode_ != other.mode_) return false;
  for (int n = 0; n <= depth(); ++n) {
    const auto a = level(n);
    const auto b = other.level(n);
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].parent != b[i].parent || a[i].child_count != b[i].child_count ||
          a[i].first_child != b[i].first_child || a[i].measure != b[i].measure) {
        return false;
      }
      if (mode_ == ArithmeticMode::exact && exact_[n][i] != other.exact_[n][i]) return false;
    }
  }
  return true;
}

FiltrationTree build_dyadic(int depth) {
  if (depth < 0) throw std::invalid_argument("dyadic depth must be non-negative");
  if (depth > 30) throw std::invalid_argument("dyadic depth above 30 is not supported");
  FiltrationTree tree;
  tree.mode_ = ArithmeticMode::exact;
  for (int n = 0; n <= depth; ++n) {
    const std::size_t count = std::size_t{1} << n;
    std::vector<Atom> level(count);
    std::vector<Rational> exact(count, Rational(1) / Rational(boost::multiprecision::mpz_int(1) << n));
    for (std::size_t j = 0; j < count; ++j) {
      Atom& a = level[j];
      a.id = AtomId{n, j};
      a.measure = std::ldexp(1.0, -n);
      if (n > 0) a.parent = j / 2;
      if (n < depth) {
        a.first_child = 2 * j;
        a.child_count = 2;
      }
    }
    tree.levels_.push_back(std::move(level));
    tree.exact_.push_back(std::move(exact));
  }
  tree.finalize();
  return tree;
}

FiltrationTree build_from_spec(const SplitNode& root, std::optional<int> min_depth) {
  const int depth = std::max(spec_depth(root), min_depth.value_or(0));
  if (depth < 0) throw TreeSpecError("tree depth must be non-negative");
  const bool exact = spec_is_exact(root);

  FiltrationTree tree;
  tree.mode_ = exact ? ArithmeticMode::exact : ArithmeticMode::floating;

  Atom root_atom;
  root_atom.id = AtomId{0, 0};
  root_atom.measure = 1.0;
  tree.levels_.push_back({root_atom});
  if (exact) tree.exact_.push_back({Rational(1)});

  // nullptr means "persist from here on".
  std::vector<const SplitNode*> specs{&root};

  for (int n = 0; n < depth; ++n) {
    auto& parents = tree.levels_.back();
    std::vector<Atom> next;
    std::vector<Rational> next_exact;
    std::vector<const SplitNode*> next_specs;

    for (std::size_t i = 0; i < parents.size(); ++i) {
      Atom& parent = parents[i];
      const SplitNode* spec = specs[i];
      const AtomId pid{n, i};
      parent.first_child = next.size();

      if (spec == nullptr || spec->persist) {
        Atom child;
        child.id = AtomId{n + 1, next.size()};
        child.measure = parent.measure;
        child.parent = i;
        next.push_back(child);
        if (exact) next_exact.push_back(tree.exact_.back()[i]);
        next_specs.push_back(nullptr);
        parent.child_count = 1;
        continue;
      }

      if (spec->fractions.empty()) throw TreeSpecError("split at " + where(pid) + " lists no fractions");
      if (!spec->children.empty() && spec->children.size() != spec->fractions.size()) {
        throw TreeSpecError("split at " + where(pid) + " has " + std::to_string(spec->fractions.size()) +
                            " fractions but " + std::to_string(spec->children.size()) + " children");
      }

      Rational exact_sum(0);
      double sum = 0.0;
      for (std::size_t c = 0; c < spec->fractions.size(); ++c) {
        const Fraction& f = spec->fractions[c];
        if (exact ? (*f.exact <= 0) : !(f.value > 0.0)) {
          throw TreeSpecError("non-positive fraction at " + where(pid));
        }
        if (exact) exact_sum += *f.exact;
        sum += f.value;

        Atom child;
        child.id = AtomId{n + 1, next.size()};
        child.parent = i;
        if (exact) {
          next_exact.push_back(tree.exact_.back()[i] * *f.exact);
          child.measure = to_double(next_exact.back());
        } else {
          child.measure = parent.measure * f.value;
        }
        next.push_back(child);
        next_specs.push_back(spec->children.empty() ? nullptr : &spec->children[c]);
      }
      if (exact ? (exact_sum != 1) : (std::abs(sum - 1.0) > kPartitionTolerance)) {
        std::ostringstream msg;
        msg << "fractions at " << where(pid) << " sum to " << (exact ? exact_sum.str() : std::to_string(sum))
            << ", not 1";
        throw TreeSpecError(msg.str());
      }
      parent.child_count = spec->fractions.size();
    }

    tree.levels_.push_back(std::move(next));
    if (exact) tree.exact_.push_back(std::move(next_exact));
    specs = std::move(next_specs);
  }

  tree.finalize();
  return tree;
}

double regularity_constant(const FiltrationTree& tree) {
  if (tree.mode() == ArithmeticMode::exact) {
    Rational worst(1);
    for (int n = 1; n <= tree.depth(); ++n) {
      for (const auto& a : tree.level(n)) {
        Rational ratio = tree.exact_measure(AtomId{n - 1, *a.parent}) / tree.exact_measure(a.id);
        if (ratio > worst) worst = ratio;
      }
    }
    return to_double(worst);
  }
  double worst = 1.0;
  for (int n = 1; n <= tree.depth(); ++n) {
    const auto parents = tree.level(n - 1);
    for (const auto& a : tree.level(n)) worst = std::max(worst, parents[*a.parent].measure / a.measure);
  }
  return worst;
}

VerificationReport check_chain_gaps(const FiltrationTree& tree, double R) {
  if (!(R > 0.0) || !std::isfinite(R)) throw std::invalid_argument("R must be a positive finite number");
  VerificationReport report{"chain_gaps", {}};
  Check check;
  check.name = "chain gaps";
  check.anchor = "B_n = B_{n-1} or (1+1/R) P(B_n) <= P(B_{n-1}) <= R P(B_n)";
  check.threshold = R;

  const bool exact = tree.mode() == ArithmeticMode::exact;
  const Rational R_exact(R);
  const Rational lower_factor = Rational(1) + Rational(1) / R_exact;
  constexpr double slack = 1e-12;

  std::size_t edges = 0;
  std::size_t persistent = 0;
  double worst_upper = 0.0;  // max P(parent)/P(child) over splitting edges
  double worst_lower = 1e300;  // min P(parent)/P(child) over splitting edges

  for (int n = 1; n <= tree.depth(); ++n) {
    const auto parents = tree.level(n - 1);
    for (const auto& child : tree.level(n)) {
      ++edges;
      const Atom& parent = parents[*child.parent];
      if (parent.child_count == 1) {
        ++persistent;
        continue;
      }
      bool lower_ok = false;
      bool upper_ok = false;
      if (exact) {
        const Rational& pm = tree.exact_measure(parent.id);
        const Rational& cm = tree.exact_measure(child.id);
        lower_ok = lower_factor * cm <= pm;
        upper_ok = pm <= R_exact * cm;
      } else {
        lower_ok = (1.0 + 1.0 / R) * child.measure <= parent.measure * (1.0 + slack);
        upper_ok = parent.measure <= R * child.measure * (1.0 + slack);
      }
      const double ratio = parent.measure / child.measure;
      worst_upper = std::max(worst_upper, ratio);
      worst_lower = std::min(worst_lower, ratio);
      if (!lower_ok || !upper_ok) {
        std::ostringstream msg;
        msg << "edge " << to_string(parent.id) << " -> " << to_string(child.id) << ": P(parent)/P(child) = " << ratio
            << (lower_ok ? "" : " below 1+1/R") << (upper_ok ? "" : " above R");
        check.fail(msg.str());
      }
    }
  }
  check.measure("R", R)
      .measure("edges", static_cast<double>(edges))
      .measure("persistence_edges", static_cast<double>(persistent))
      .measure("violations", static_cast<double>(check.failures.size()))
      .measure("max_split_ratio", edges > persistent ? worst_upper : 1.0)
      .measure("min_split_ratio", edges > persistent ? worst_lower : 1.0);
  if (!check.failures.empty()) check.witness = check.failures.front();
  report.add(std::move(check));
  return report;
}

std::vector<AtomId> chain_to_root(const FiltrationTree& tree, AtomId leaf) {
  (void)tree.atom(leaf);
  if (leaf.level != tree.depth()) {
    throw std::invalid_argument(where(leaf) + " is not at the deepest level " + std::to_string(tree.depth()));
  }
  std::vector<AtomId> chain(static_cast<std::size_t>(leaf.level) + 1);
  AtomId cur = leaf;
  for (int n = leaf.level; n >= 0; --n) {
    chain[static_cast<std::size_t>(n)] = cur;
    if (n > 0) cur = *tree.parent(cur);
  }
  return chain;
}

}  // namespace campanato
