#include "campanato/app.hpp"

#include "campanato/constructions.hpp"
#include "campanato/multiplier.hpp"
#include "campanato/norms.hpp"
#include "campanato/parallel.hpp"

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace campanato::app {

namespace {

using json = nlohmann::json;

constexpr double kSlack = 1e-10;

// ---------------------------------------------------------------- parsing

class Parser {
 public:
  explicit Parser(std::string source) : source_(std::move(source)) {}

  std::string where(const YAML::Node& node) const {
    const YAML::Mark m = node.Mark();
    if (m.is_null()) return source_ + ": ";
    return source_ + ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1) + ": ";
  }

  [[noreturn]] void fail(const YAML::Node& node, const std::string& msg) const { throw ConfigError(where(node) + msg); }

  void expect_map(const YAML::Node& node, const std::string& what, std::initializer_list<const char*> keys) const {
    if (!node.IsMap()) fail(node, what + " must be a mapping");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + what);
    }
  }

  std::string str(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, what + " must be a string");
    return node.Scalar();
  }

  double real(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, what + " must be a number");
    try {
      std::size_t used = 0;
      const double v = std::stod(node.Scalar(), &used);
      if (used != node.Scalar().size() || !std::isfinite(v)) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      fail(node, what + " must be a finite number, got '" + node.Scalar() + "'");
    }
  }

  std::uint64_t u64(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, what + " must be a non-negative integer");
    const std::string& s = node.Scalar();
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      fail(node, what + " must be a non-negative integer, got '" + s + "'");
    }
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      fail(node, what + " is out of range");
    }
  }

  int integer(const YAML::Node& node, const std::string& what, int lo, int hi) const {
    const std::uint64_t v = u64(node, what);
    if (v < static_cast<std::uint64_t>(lo) || v > static_cast<std::uint64_t>(hi)) {
      fail(node, what + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return static_cast<int>(v);
  }

  Fraction fraction(const YAML::Node& node) const {
    if (!node.IsScalar()) fail(node, "fraction must be a scalar");
    // Plain numbers are floating; strings ("1/3", "0.25") are exact.
    if (node.Tag() == "?") {
      try {
        std::size_t used = 0;
        const double v = std::stod(node.Scalar(), &used);
        if (used == node.Scalar().size()) return Fraction::floating(v);
      } catch (const std::exception&) {
      }
    }
    try {
      return Fraction::parse(node.Scalar());
    } catch (const std::exception& e) {
      fail(node, std::string("bad fraction: ") + e.what());
    }
  }

  SplitNode split(const YAML::Node& node) const {
    if (node.IsScalar()) {
      if (node.Scalar() == "persist") return SplitNode::persisting();
      fail(node, "split node must be a mapping or \"persist\"");
    }
    expect_map(node, "split node", {"fractions", "children", "persist"});
    if (node["persist"]) {
      if (node["persist"].as<std::string>() != "true") fail(node["persist"], "persist must be true when given");
      if (node["fractions"]) fail(node, "a persisting node cannot list fractions");
      return SplitNode::persisting();
    }
    const YAML::Node fr = node["fractions"];
    if (!fr) fail(node, "split node needs \"fractions\" or \"persist\"");
    if (!fr.IsSequence() || fr.size() == 0) fail(fr, "fractions must be a non-empty list");
    SplitNode out;
    bool exact = true;
    Rational exact_sum(0);
    double sum = 0.0;
    for (const auto& f : fr) {
      Fraction x = fraction(f);
      if (x.exact ? *x.exact <= 0 : !(x.value > 0.0)) fail(f, "fractions must be positive");
      if (x.exact) {
        exact_sum += *x.exact;
      } else {
        exact = false;
      }
      sum += x.value;
      out.fractions.push_back(std::move(x));
    }
    if (exact ? exact_sum != 1 : std::abs(sum - 1.0) > 1e-12) {
      std::ostringstream msg;
      msg << "fractions sum to " << (exact ? exact_sum.str() : std::to_string(sum)) << ", not 1";
      fail(fr, msg.str());
    }
    if (const YAML::Node ch = node["children"]) {
      if (!ch.IsSequence()) fail(ch, "children must be a list");
      if (ch.size() != out.fractions.size()) {
        fail(ch, "children lists " + std::to_string(ch.size()) + " entries for " +
                     std::to_string(out.fractions.size()) + " fractions");
      }
      for (const auto& c : ch) out.children.push_back(split(c));
    }
    return out;
  }

  Phi phi(const YAML::Node& node) const {
    expect_map(node, "phi", {"family", "alpha", "beta", "gamma", "points", "base"});
    if (!node["family"]) fail(node, "phi needs a family");
    const std::string family = str(node["family"], "phi family");
    try {
      if (family == "one") return Phi::one();
      if (family == "psi") return Phi::psi();
      if (family == "powerlog" || family == "power") {
        const double a = node["alpha"] ? real(node["alpha"], "alpha") : 0.0;
        const double b = node["beta"] ? real(node["beta"], "beta") : 0.0;
        const double g = node["gamma"] ? real(node["gamma"], "gamma") : 0.0;
        return Phi::power_log(a, b, g);
      }
      if (family == "table") {
        const YAML::Node pts = node["points"];
        if (!pts || !pts.IsSequence()) fail(node, "table phi needs a list of [r, value] points");
        std::vector<std::pair<double, double>> points;
        for (const auto& pt : pts) {
          if (!pt.IsSequence() || pt.size() != 2) fail(pt, "table point must be [r, value]");
          points.emplace_back(real(pt[0], "r"), real(pt[1], "phi value"));
        }
        return Phi::table(std::move(points));
      }
      if (family == "quotient") {
        if (!node["base"]) fail(node, "quotient phi needs a base");
        return quotient_phi(phi(node["base"]));
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      fail(node, std::string("invalid phi: ") + e.what());
    }
    fail(node["family"], "unknown phi family '" + family + "' (one, psi, powerlog, power, table, quotient)");
  }

  FunctionSpec function(const YAML::Node& node) const {
    expect_map(node, "function", {"name", "type", "atom", "leaf", "phi", "seed", "count", "values", "value"});
    FunctionSpec spec;
    spec.location = where(node);
    if (!node["type"]) fail(node, "function needs a type");
    spec.type = str(node["type"], "function type");
    spec.name = node["name"] ? str(node["name"], "function name") : spec.type;
    const std::set<std::string> types{"indicator", "extremal", "h", "sin_h", "random", "leaf_values", "constant"};
    if (!types.count(spec.type)) fail(node["type"], "unknown function type '" + spec.type + "'");
    if (node["atom"]) {
      const YAML::Node a = node["atom"];
      if (!a.IsSequence() || a.size() != 2) fail(a, "atom must be [level, index]");
      spec.atom = AtomId{integer(a[0], "atom level", 0, 1 << 20), static_cast<std::size_t>(u64(a[1], "atom index"))};
    }
    if (node["leaf"]) spec.leaf = static_cast<std::size_t>(u64(node["leaf"], "leaf"));
    if (node["phi"]) spec.phi = phi(node["phi"]);
    if (node["seed"]) spec.seed = u64(node["seed"], "seed");
    if (node["count"]) spec.count = static_cast<std::size_t>(integer(node["count"], "count", 1, 100000));
    if (node["value"]) spec.value = real(node["value"], "value");
    if (node["values"]) {
      if (!node["values"].IsSequence()) fail(node["values"], "values must be a list");
      for (const auto& v : node["values"]) spec.values.push_back(real(v, "leaf value"));
    }
    if (spec.type == "indicator" && !spec.atom) fail(node, "indicator needs an atom");
    if (spec.type == "leaf_values" && !node["values"]) fail(node, "leaf_values needs values");
    if (spec.type == "constant" && !node["value"]) fail(node, "constant needs a value");
    return spec;
  }

  ExperimentConfig config(const YAML::Node& root) const {
    ExperimentConfig c;
    c.source = source_;
    expect_map(root, "config",
               {"tree", "arithmetic", "phi", "phis", "p", "functions", "suites", "seed", "output", "grid", "verify",
                "multiplier"});

    const YAML::Node tree = root["tree"];
    if (!tree) fail(root, "config needs a tree");
    expect_map(tree, "tree", {"type", "depth", "root"});
    c.tree.location = where(tree);
    c.tree.type = tree["type"] ? str(tree["type"], "tree type") : "dyadic";
    if (tree["depth"]) c.tree.depth = integer(tree["depth"], "depth", 0, 64);
    if (c.tree.type == "dyadic" || c.tree.type == "chain") {
      if (!c.tree.depth) fail(tree, c.tree.type + " tree needs a depth");
      if (tree["root"]) fail(tree["root"], c.tree.type + " tree takes no root");
    } else if (c.tree.type == "splits") {
      if (!tree["root"]) fail(tree, "splits tree needs a root");
      c.tree.root = split(tree["root"]);
    } else {
      fail(tree["type"], "unknown tree type '" + c.tree.type + "' (dyadic, splits, chain)");
    }

    if (root["arithmetic"]) {
      c.arithmetic = str(root["arithmetic"], "arithmetic");
      if (c.arithmetic != "auto" && c.arithmetic != "exact" && c.arithmetic != "floating") {
        fail(root["arithmetic"], "arithmetic must be auto, exact or floating");
      }
    }

    if (root["phi"] && root["phis"]) fail(root, "give either phi or phis, not both");
    if (root["phi"]) c.phis = {phi(root["phi"])};
    if (root["phis"]) {
      if (!root["phis"].IsSequence() || root["phis"].size() == 0) fail(root["phis"], "phis must be a non-empty list");
      c.phis.clear();
      for (const auto& ph : root["phis"]) c.phis.push_back(phi(ph));
    }

    if (const YAML::Node p = root["p"]) {
      c.ps.clear();
      auto add = [&](const YAML::Node& n) {
        const double v = real(n, "p");
        if (!(v >= 1.0)) fail(n, "p must be >= 1");
        c.ps.push_back(v);
      };
      if (p.IsSequence()) {
        if (p.size() == 0) fail(p, "p list is empty");
        for (const auto& x : p) add(x);
      } else {
        add(p);
      }
    }

    if (root["seed"]) c.seed = u64(root["seed"], "seed");

    std::set<std::string> names;
    if (const YAML::Node fs = root["functions"]) {
      if (!fs.IsSequence()) fail(fs, "functions must be a list");
      for (const auto& f : fs) {
        FunctionSpec spec = function(f);
        if (!names.insert(spec.name).second) fail(f, "duplicate function name '" + spec.name + "'");
        c.functions.push_back(std::move(spec));
      }
    }

    if (const YAML::Node s = root["suites"]) {
      if (!s.IsSequence()) fail(s, "suites must be a list");
      c.suites.clear();
      for (const auto& x : s) {
        const std::string name = str(x, "suite");
        if (name == "norms") {
          c.suites.push_back(Suite::norms);
        } else if (name == "phi_report") {
          c.suites.push_back(Suite::phi_report);
        } else if (name == "verify") {
          c.suites.push_back(Suite::verify);
        } else if (name == "multiplier") {
          c.suites.push_back(Suite::multiplier);
        } else {
          fail(x, "unknown suite '" + name + "' (norms, phi_report, verify, multiplier)");
        }
      }
    }

    if (const YAML::Node o = root["output"]) {
      expect_map(o, "output", {"dir"});
      if (o["dir"]) c.out_dir = str(o["dir"], "output dir");
    }
    if (const YAML::Node g = root["grid"]) {
      expect_map(g, "grid", {"r_min", "per_decade"});
      if (g["r_min"]) {
        c.grid_r_min = real(g["r_min"], "r_min");
        if (!(*c.grid_r_min > 0.0 && *c.grid_r_min <= 1.0)) fail(g["r_min"], "r_min must lie in (0, 1]");
      }
      if (g["per_decade"]) c.grid_per_decade = integer(g["per_decade"], "per_decade", 1, 1000);
    }
    if (const YAML::Node v = root["verify"]) {
      expect_map(v, "verify", {"random_count", "chains", "R"});
      if (v["random_count"]) c.verify_randoms = static_cast<std::size_t>(integer(v["random_count"], "random_count", 0, 100000));
      if (v["chains"]) c.verify_chains = static_cast<std::size_t>(integer(v["chains"], "chains", 0, 100000));
      if (v["R"]) {
        c.verify_R = real(v["R"], "R");
        if (!(*c.verify_R > 0.0)) fail(v["R"], "R must be positive");
      }
    }
    if (const YAML::Node m = root["multiplier"]) {
      expect_map(m, "multiplier", {"g", "sample_chains", "random_members", "band"});
      if (m["g"]) {
        c.multiplier_g = str(m["g"], "multiplier g");
        if (!names.count(*c.multiplier_g)) fail(m["g"], "multiplier g '" + *c.multiplier_g + "' is not a listed function");
      }
      if (m["sample_chains"]) c.sample_chains = static_cast<std::size_t>(integer(m["sample_chains"], "sample_chains", 0, 1 << 20));
      if (m["random_members"]) c.random_members = static_cast<std::size_t>(integer(m["random_members"], "random_members", 0, 1 << 20));
      if (const YAML::Node b = m["band"]) {
        if (!b.IsSequence() || b.size() != 2) fail(b, "band must be [low, high]");
        c.band_low = real(b[0], "band low");
        c.band_high = real(b[1], "band high");
        if (!(c.band_low <= c.band_high)) fail(b, "band low exceeds band high");
      }
    }
    return c;
  }

 private:
  std::string source_;
};

// ---------------------------------------------------------------- helpers

std::uint64_t mix(std::uint64_t seed, std::uint64_t i) {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (i + 1);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

SplitNode to_floating(const SplitNode& node) {
  if (node.persist) return node;
  SplitNode out;
  for (const auto& f : node.fractions) out.fractions.push_back(Fraction::floating(f.value));
  for (const auto& c : node.children) out.children.push_back(to_floating(c));
  return out;
}

SplitNode dyadic_spec(int depth, bool exact) {
  if (depth == 0) return SplitNode::persisting();
  const Fraction half = exact ? Fraction::parse("1/2") : Fraction::floating(0.5);
  SplitNode child = dyadic_spec(depth - 1, exact);
  return SplitNode::split({half, half}, {child, child});
}

bool all_exact(const SplitNode& node) {
  for (const auto& f : node.fractions) {
    if (!f.exact) return false;
  }
  return std::all_of(node.children.begin(), node.children.end(), all_exact);
}

json atom_json(AtomId id) { return json::array({id.level, id.index}); }

json witness_json(const NormWitness& w) {
  json atoms = json::array();
  for (const auto& a : w.atoms) atoms.push_back(atom_json(a));
  return json{{"level", w.level}, {"atoms", atoms}};
}

json numbers(const std::vector<double>& xs) {
  json out = json::array();
  for (double x : xs) out.push_back(number_to_json(x));
  return out;
}

std::string csv_number(double x) {
  std::ostringstream out;
  out << std::setprecision(17) << x;
  return out.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string iso_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Combo {
  std::size_t phi_index;
  double p;
};

std::vector<Combo> combos(const ExperimentConfig& c) {
  std::vector<Combo> out;
  for (std::size_t i = 0; i < c.phis.size(); ++i) {
    for (double p : c.ps) out.push_back({i, p});
  }
  return out;
}

std::vector<NamedFunction> all_functions(const ExperimentConfig& c, const TreePtr& tree, const Phi& phi) {
  std::vector<NamedFunction> out;
  for (const auto& spec : c.functions) {
    auto fs = materialize(spec, tree, phi, c.seed, c.source);
    for (auto& f : fs) out.push_back(std::move(f));
  }
  return out;
}

std::vector<NamedFunction> verify_functions(const ExperimentConfig& c, const TreePtr& tree, const Phi& phi) {
  std::vector<NamedFunction> out = all_functions(c, tree, phi);
  const std::uint64_t seed = c.seed.value_or(0);
  for (std::size_t i = 0; i < c.verify_randoms; ++i) {
    out.push_back({"random #" + std::to_string(i), random_function(tree, mix(seed, i))});
  }
  return out;
}

LeafFunction multiplier_g(const ExperimentConfig& c, const TreePtr& tree, const Phi& phi, std::string& label) {
  if (c.multiplier_g) {
    for (const auto& spec : c.functions) {
      if (spec.name != *c.multiplier_g) continue;
      auto fs = materialize(spec, tree, phi, c.seed, c.source);
      if (fs.size() != 1) throw ConfigError(spec.location + "multiplier g must name a single function");
      label = fs.front().name;
      return fs.front().f;
    }
  }
  label = "sin h along the chain to leaf 0";
  return sin_h_multiplier(tree, chain_through_leaf(*tree, 0), phi);
}

// ---------------------------------------------------------------- verify suites

VerificationReport indicator_suite(const CampanatoSpace& space) {
  const FiltrationTree& tree = space.tree();
  VerificationReport report{"indicator", {}};
  Check closed;
  closed.name = "indicator closed form";
  closed.anchor = "||chi_B||_{L_{p,phi}} = max_{k<n} (1/phi(P_k)) [x(1-x)^p + (1-x)x^p]^{1/p}, x = P(B)/P(B_k)";
  closed.threshold = 1e-10;
  Check bound;
  bound.name = "indicator bound";
  bound.anchor = "||chi_B||_{L~_{p,phi}} phi(P(B)) <= C";
  double worst_diff = 0.0;
  double worst_bound = 0.0;
  for (int n = 0; n <= tree.depth(); ++n) {
    for (const auto& a : tree.level(n)) {
      const LeafFunction chi = LeafFunction::indicator(space.tree_ptr(), a.id);
      const double direct = space.seminorm(chi).value;
      const double formula = chi_norm_closed_form(tree, a.id, space.p(), space.phi()).value;
      const double diff = std::abs(direct - formula) / std::max(direct, 1e-300);
      if (direct > 0.0 || formula > 0.0) worst_diff = std::max(worst_diff, diff);
      if (diff > 1e-10 && !(direct == 0.0 && formula == 0.0)) {
        closed.fail("atom " + to_string(a.id) + ": " + csv_number(direct) + " vs " + csv_number(formula));
      }
      const double scaled = (direct + a.measure) * space.phi_at(a.id);
      if (scaled > worst_bound) {
        worst_bound = scaled;
        bound.witness = to_string(a.id);
      }
    }
  }
  closed.measure("atoms", static_cast<double>(tree.atom_count())).measure("worst_relative_difference", worst_diff);
  bound.measure("C", worst_bound);
  if (!std::isfinite(worst_bound)) bound.fail("indicator norms are not finite");
  report.add(std::move(closed));
  report.add(std::move(bound));
  return report;
}

VerificationReport average_suite(const CampanatoSpace& space, const std::vector<NamedFunction>& functions) {
  const FiltrationTree& tree = space.tree();
  VerificationReport report{"f_B", {}};
  Check ratio;
  ratio.name = "average bound";
  ratio.anchor = "|f_B| <= C phi*(P(B)) ||f||_{L~_{p,phi}}";
  Check tele;
  tele.name = "telescoping bound";
  tele.anchor = "|f_B| <= |Ef| + ||f||_{L_{p,phi}} sum_{k<=n} (P(B_{k-1})/P(B_k)) phi(P(B_{k-1}))";
  double worst = 0.0;
  double tightest = 0.0;
  for (const auto& [name, f] : functions) {
    const double c = average_bound_constant(f, space);
    if (c > worst) {
      worst = c;
      ratio.witness = name;
    }
    const double s = space.seminorm(f).value;
    std::vector<double> bound{std::abs(expectation(f))};
    for (int n = 0; n <= tree.depth(); ++n) {
      const auto atoms = tree.level(n);
      const auto averages = level_averages(f, n);
      std::vector<double> next(atoms.size());
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (n == 0) {
          next[i] = bound[0];
        } else {
          const Atom& parent = tree.level(n - 1)[*atoms[i].parent];
          const double step = parent.child_count == 1 ? 0.0 : parent.measure / atoms[i].measure * space.phi_at(parent.id) * s;
          next[i] = bound[*atoms[i].parent] + step;
        }
        const double lhs = std::abs(averages[i]);
        if (next[i] > 0.0) tightest = std::max(tightest, lhs / next[i]);
        if (lhs > next[i] + kSlack * std::max(1.0, next[i])) {
          tele.fail(name + " at " + to_string(atoms[i].id) + ": " + csv_number(lhs) + " > " + csv_number(next[i]));
        }
      }
      bound = std::move(next);
    }
  }
  ratio.measure("C", worst).measure("functions", static_cast<double>(functions.size()));
  tele.measure("tightest_ratio", tightest);
  report.add(std::move(ratio));
  report.add(std::move(tele));
  return report;
}

VerificationReport extremal_suite(const CampanatoSpace& space, std::size_t chains, std::uint64_t seed) {
  const TreePtr& tree = space.tree_ptr();
  VerificationReport report{"extremal", {}};
  Check identity;
  identity.name = "martingale identity";
  identity.anchor = "E_n f = chi_{B_0} + sum_{k<=n} u_k and E[u_k] = 0";
  Check upper;
  upper.name = "extremal upper bound";
  upper.anchor = "||f||_{L~_{p,phi}} <= C_1 uniformly over chains";
  Check lower;
  lower.name = "extremal lower bound";
  lower.anchor = "f_{B_n} >= C_2 phi*(P(B_n))";

  const bool exact = tree->mode() == ArithmeticMode::exact;
  auto leaves = sample_leaves(*tree, chains, seed);
  if (std::find(leaves.begin(), leaves.end(), std::size_t{0}) == leaves.end()) leaves.insert(leaves.begin(), 0);
  double c1 = 0.0;
  double c1_min = INFINITY;
  double c2 = INFINITY;
  double top = 0.0;
  double tail = 0.0;
  for (std::size_t leaf : leaves) {
    const auto chain = chain_through_leaf(*tree, leaf);
    const ChainConstruction c = extremal_chain_function(tree, chain, space.phi());
    const ExtremalMeasurement m = measure_extremal(c, space);
    if (m.norm > c1) {
      c1 = m.norm;
      upper.witness = "chain to leaf " + std::to_string(leaf);
    }
    c1_min = std::min(c1_min, m.norm);
    if (m.min_average_ratio < c2) {
      c2 = m.min_average_ratio;
      lower.witness = "chain to leaf " + std::to_string(leaf) + ", n=" + std::to_string(m.min_ratio_level);
    }
    top = std::max(top, m.max_average_ratio);
    tail = std::max(tail, m.truncation_bound);

    if (exact) {
      const ExactChainConstruction e = extremal_chain_function_exact(tree, chain, space.phi());
      const auto mg = martingale_of(e.f);
      for (int n = 0; n <= tree->depth(); ++n) {
        if (!(mg[n] == e.sequence[n])) identity.fail("leaf " + std::to_string(leaf) + ": E_n f differs at n=" + std::to_string(n));
      }
      for (std::size_t k = 0; k < e.u_terms.size(); ++k) {
        if (expectation(e.u_terms[k]) != 0) identity.fail("leaf " + std::to_string(leaf) + ": E[u_" + std::to_string(k + 1) + "] != 0");
      }
    } else {
      const auto mg = martingale_of(c.f);
      for (int n = 0; n <= tree->depth(); ++n) {
        const auto a = mg[n].values();
        const auto b = c.sequence[n].values();
        for (std::size_t i = 0; i < a.size(); ++i) {
          if (std::abs(a[i] - b[i]) > 1e-12 * std::max(1.0, std::abs(b[i]))) {
            identity.fail("leaf " + std::to_string(leaf) + ": E_n f differs at n=" + std::to_string(n));
            break;
          }
        }
      }
      for (std::size_t k = 0; k < c.u_terms.size(); ++k) {
        if (std::abs(expectation(c.u_terms[k])) > 1e-12 * std::max(1.0, c.coefficients[k])) {
          identity.fail("leaf " + std::to_string(leaf) + ": E[u_" + std::to_string(k + 1) + "] != 0");
        }
      }
    }
  }
  identity.measure("chains", static_cast<double>(leaves.size())).measure("exact", exact ? 1.0 : 0.0);
  upper.measure("C_1", c1).measure("min_norm", c1_min).measure("spread", c1_min > 0.0 ? c1 / c1_min - 1.0 : 0.0);
  lower.measure("C_2", c2).measure("max_ratio", top).measure("truncation_bound", tail);
  if (!std::isfinite(c1)) upper.fail("extremal norm is not finite");
  if (!(c2 > 0.0)) lower.fail("f_{B_n} / phi*(P(B_n)) is not bounded below by a positive constant");
  report.add(std::move(identity));
  report.add(std::move(upper));
  report.add(std::move(lower));
  return report;
}

VerificationReport product_suite(const CampanatoSpace& space, std::size_t pairs, std::uint64_t seed) {
  VerificationReport report{"product_estimate", {}};
  Check merged;
  merged.name = "product estimate";
  merged.anchor = "|F(f,g) - ||fg||_{L_{p,phi}}| <= 2 ||f||_{L_{p,phi}} ||g||_inf";
  double worst = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    const LeafFunction f = random_function(space.tree_ptr(), mix(seed, 2 * i + 1000));
    const LeafFunction g = random_function(space.tree_ptr(), mix(seed, 2 * i + 1001));
    const auto r = check_product_estimate(f, g, space, kSlack);
    const Check& c = r.checks.front();
    const double bound = *c.value("bound");
    if (bound > 0.0 && *c.value("gap") / bound > worst) {
      worst = *c.value("gap") / bound;
      merged.witness = "pair " + std::to_string(i);
    }
    for (const auto& f_msg : c.failures) merged.fail("pair " + std::to_string(i) + ": " + f_msg);
  }
  merged.measure("pairs", static_cast<double>(pairs)).measure("worst_gap_over_bound", worst);
  report.add(std::move(merged));
  return report;
}

VerificationReport lipschitz_suite(const std::vector<NamedFunction>& functions) {
  VerificationReport report{"lipschitz", {}};
  Check merged;
  merged.name = "Lipschitz composition";
  merged.anchor = "int_B |F(f) - E_n F(f)| <= 2C int_B |f - E_n f|, F = sin, C = 1, p = 1";
  merged.threshold = 2.0;
  double worst = 0.0;
  for (const auto& [name, f] : functions) {
    const auto r = lipschitz_compose_check(f, 1.0, f.map([](double x) { return std::sin(x); }), kSlack);
    const Check& c = r.checks.front();
    if (*c.value("worst_ratio") > worst) {
      worst = *c.value("worst_ratio");
      merged.witness = name + " at " + c.witness;
    }
    for (const auto& msg : c.failures) merged.fail(name + ": " + msg);
  }
  merged.measure("functions", static_cast<double>(functions.size())).measure("worst_ratio", worst);
  report.add(std::move(merged));
  return report;
}

VerificationReport proposition_suite(const CampanatoSpace& space, const std::vector<NamedFunction>& functions) {
  const FiltrationTree& tree = space.tree();
  VerificationReport report{"proposition", {}};
  Check check;
  check.name = "conditional expectation contraction";
  check.anchor = "sup_n ||E_n f||_{L_{p,phi}} <= ||f||_{L_{p,phi}}, with equality at n = N";
  const bool exact = tree.mode() == ArithmeticMode::exact && space.phi().kind() == Phi::Kind::one &&
                     space.p() == std::floor(space.p());
  double worst = -INFINITY;
  for (const auto& [name, f] : functions) {
    if (exact) {
      const ExactLeafFunction ef = to_exact(f);
      const Rational full = *space.seminorm(ef).exact_power;
      for (int n = 0; n <= tree.depth(); ++n) {
        const Rational level = *space.seminorm(conditional_expectation(ef, n)).exact_power;
        worst = std::max(worst, to_double(level - full));
        if (level > full) check.fail(name + ": n=" + std::to_string(n) + " exceeds the full seminorm");
        if (n == tree.depth() && level != full) check.fail(name + ": no equality at n = N");
      }
    } else {
      const double full = space.seminorm(f).value;
      for (int n = 0; n <= tree.depth(); ++n) {
        const double level = space.seminorm(conditional_expectation(f, n)).value;
        worst = std::max(worst, level - full);
        if (level > full + kSlack) check.fail(name + ": n=" + std::to_string(n) + " exceeds the full seminorm");
        if (n == tree.depth() && level != full) check.fail(name + ": no equality at n = N");
      }
    }
  }
  check.measure("functions", static_cast<double>(functions.size()))
      .measure("exact", exact ? 1.0 : 0.0)
      .measure("worst_excess", worst);
  report.add(std::move(check));
  return report;
}

json report_list(const std::vector<VerificationReport>& reports, bool& passed) {
  json out = json::array();
  for (const auto& r : reports) {
    passed = passed && r.passed();
    out.push_back(to_json(r));
  }
  return out;
}

}  // namespace

std::string to_string(Suite suite) {
  switch (suite) {
    case Suite::norms:
      return "norms";
    case Suite::phi_report:
      return "phi_report";
    case Suite::verify:
      return "verify";
    case Suite::multiplier:
      return "multiplier";
  }
  return "unknown";
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                      ": " + e.msg);
  }
  if (!root || root.IsNull()) throw ConfigError(source + ": empty config");
  Parser parser(source);
  try {
    return parser.config(root);
  } catch (const YAML::Exception& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                      ": " + e.msg);
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path);
}

void apply_overrides(ExperimentConfig& config, const Overrides& overrides) {
  if (overrides.seed) config.seed = overrides.seed;
  if (overrides.out_dir) config.out_dir = *overrides.out_dir;
  if (overrides.depth) {
    if (*overrides.depth < 0) throw ConfigError("--depth must be non-negative");
    config.tree.depth = *overrides.depth;
  }
}

TreePtr build_tree(const ExperimentConfig& config) {
  const TreeConfig& t = config.tree;
  try {
    if (t.type == "dyadic") {
      const int depth = t.depth.value_or(0);
      if (config.arithmetic == "floating") {
        if (depth > 20) throw ConfigError(t.location + "floating dyadic trees are limited to depth 20");
        return share(build_from_spec(dyadic_spec(depth, false), depth));
      }
      return share(build_dyadic(depth));
    }
    if (t.type == "chain") return share(build_from_spec(SplitNode::persisting(), t.depth.value_or(0)));
    SplitNode root = t.root;
    if (config.arithmetic == "floating") root = to_floating(root);
    if (config.arithmetic == "exact" && !all_exact(root)) {
      throw ConfigError(t.location + "arithmetic is exact but some fractions are plain numbers; quote them");
    }
    return share(build_from_spec(root, t.depth));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(t.location + e.what());
  }
}

std::vector<NamedFunction> materialize(const FunctionSpec& spec, const TreePtr& tree, const Phi& row_phi,
                                       std::optional<std::uint64_t> global_seed, const std::string& source) {
  const std::string where = spec.location.empty() ? source + ": " : spec.location;
  const Phi& phi = spec.phi ? *spec.phi : row_phi;
  const std::optional<std::uint64_t> seed = spec.seed ? spec.seed : global_seed;
  auto chain = [&]() {
    std::size_t leaf = 0;
    if (spec.leaf) {
      leaf = *spec.leaf;
    } else {
      if (!seed) throw ConfigError(where + spec.type + " without a leaf needs a seed to sample one");
      leaf = sample_leaves(*tree, 1, *seed).front();
    }
    if (leaf >= tree->leaf_count()) {
      throw ConfigError(where + "leaf " + std::to_string(leaf) + " is outside the tree (" +
                        std::to_string(tree->leaf_count()) + " leaves)");
    }
    return chain_through_leaf(*tree, leaf);
  };

  std::vector<NamedFunction> out;
  if (spec.type == "indicator") {
    if (!tree->contains(*spec.atom)) throw ConfigError(where + "atom " + to_string(*spec.atom) + " is not in the tree");
    out.push_back({spec.name, LeafFunction::indicator(tree, *spec.atom)});
  } else if (spec.type == "extremal") {
    out.push_back({spec.name, extremal_chain_function(tree, chain(), phi).f});
  } else if (spec.type == "h") {
    out.push_back({spec.name, h_function(tree, chain(), phi)});
  } else if (spec.type == "sin_h") {
    out.push_back({spec.name, sin_h_multiplier(tree, chain(), phi)});
  } else if (spec.type == "random") {
    if (!seed) throw ConfigError(where + "random functions need a seed (in the function, the config or --seed)");
    for (std::size_t i = 0; i < spec.count; ++i) {
      const std::string name = spec.count == 1 ? spec.name : spec.name + "#" + std::to_string(i);
      out.push_back({name, random_function(tree, *seed + i)});
    }
  } else if (spec.type == "leaf_values") {
    if (spec.values.size() != tree->leaf_count()) {
      throw ConfigError(where + "leaf_values lists " + std::to_string(spec.values.size()) + " values for " +
                        std::to_string(tree->leaf_count()) + " leaves");
    }
    out.push_back({spec.name, LeafFunction(tree, spec.values)});
  } else if (spec.type == "constant") {
    out.push_back({spec.name, LeafFunction::constant(tree, spec.value)});
  } else {
    throw ConfigError(where + "unknown function type '" + spec.type + "'");
  }
  return out;
}

std::string content_hash(const nlohmann::json& report) {
  json copy = report;
  copy.erase("generated_at");
  copy.erase("content_hash");
  const std::string text = copy.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

RunResult run_experiment(const ExperimentConfig& config, const std::vector<Suite>& suites) {
  const TreePtr tree = build_tree(config);
  // Validate function specs up front so config errors surface before any work.
  for (const auto& spec : config.functions) (void)materialize(spec, tree, config.phis.front(), config.seed, config.source);

  RunResult result;
  json& report = result.report;
  report["tool"] = "campanato_lab";
  report["generated_at"] = iso_timestamp();
  json phis = json::array();
  for (const auto& phi : config.phis) phis.push_back(phi.describe());
  report["config"] = {{"source", config.source},
                      {"tree",
                       {{"type", config.tree.type},
                        {"depth", tree->depth()},
                        {"arithmetic", tree->mode() == ArithmeticMode::exact ? "exact" : "floating"},
                        {"leaves", tree->leaf_count()},
                        {"atoms", tree->atom_count()},
                        {"regularity_constant", number_to_json(regularity_constant(*tree))}}},
                      {"phis", phis},
                      {"p", config.ps},
                      {"seed", config.seed ? json(*config.seed) : json(nullptr)}};
  json suite_json = json::object();
  const auto cs = combos(config);
  const std::uint64_t seed = config.seed.value_or(0);

  for (Suite suite : suites) {
    if (suite == Suite::norms) {
      std::vector<json> rows(cs.size());
      std::vector<std::string> lines(cs.size());
      parallel_for(cs.size(), [&](std::size_t i) {
        const Phi& phi = config.phis[cs[i].phi_index];
        const CampanatoSpace space(tree, cs[i].p, phi);
        rows[i] = json::array();
        for (const auto& [name, f] : all_functions(config, tree, phi)) {
          const NormResult semi = space.seminorm(f);
          const double mean = expectation(f);
          const double norm = semi.value + std::abs(mean);
          rows[i].push_back({{"function", name},
                             {"phi", phi.describe()},
                             {"p", cs[i].p},
                             {"seminorm", number_to_json(semi.value)},
                             {"norm", number_to_json(norm)},
                             {"expectation", number_to_json(mean)},
                             {"witness", witness_json(semi.witness)},
                             {"level_sups", numbers(semi.level_sups)}});
          lines[i] += csv_field(name) + "," + csv_field(phi.describe()) + "," + csv_number(cs[i].p) + "," +
                      csv_number(semi.value) + "," + csv_number(norm) + "," + std::to_string(semi.witness.level) +
                      "," + csv_field(describe(semi.witness)) + "\n";
        }
      });
      json all = json::array();
      for (auto& r : rows) {
        for (auto& x : r) all.push_back(std::move(x));
      }
      suite_json["norms"] = all;
      result.norms_csv = "function,phi,p,seminorm,norm,witness_level,witness\n";
      for (const auto& l : lines) result.norms_csv += l;
    } else if (suite == Suite::phi_report) {
      const auto grid = config.grid_r_min ? geometric_grid(*config.grid_r_min, config.grid_per_decade) : default_grid();
      std::vector<json> reports(config.phis.size());
      std::vector<std::string> lines(config.phis.size());
      parallel_for(config.phis.size(), [&](std::size_t i) {
        const Phi& phi = config.phis[i];
        reports[i] = to_json(phi_report(phi, config.ps, grid));
        for (double r : grid) {
          const double v = phi(r);
          const double star = phi_star(phi, r);
          lines[i] += csv_field(phi.describe()) + "," + csv_number(r) + "," + csv_number(v) + "," + csv_number(star) +
                      "," + csv_number(v / star) + "\n";
        }
      });
      suite_json["phi_report"] = reports;
      result.phi_csv = "phi,r,phi_r,phi_star,phi_over_phi_star\n";
      for (const auto& l : lines) result.phi_csv += l;
    } else if (suite == Suite::verify) {
      json out;
      bool passed = true;
      const auto shared_functions = verify_functions(config, tree, config.phis.front());
      const double R = config.verify_R.value_or(regularity_constant(*tree));
      out["shared"] = report_list({check_chain_gaps(*tree, R), lipschitz_suite(shared_functions)}, passed);
      std::vector<json> per(cs.size());
      std::vector<char> ok(cs.size(), 1);
      parallel_for(cs.size(), [&](std::size_t i) {
        const Phi& phi = config.phis[cs[i].phi_index];
        const double p = cs[i].p;
        const CampanatoSpace space(tree, p, phi);
        const auto functions = verify_functions(config, tree, phi);
        std::string g_label;
        const LeafFunction g = multiplier_g(config, tree, phi, g_label);
        ConditionalOptions copt;
        copt.chains = std::min<std::size_t>(config.verify_chains, 4);
        copt.randoms = 4;
        copt.seed = seed;
        bool combo_ok = true;
        json reports = report_list({indicator_suite(space), average_suite(space, functions),
                                    extremal_suite(space, config.verify_chains, seed),
                                    product_suite(space, config.verify_randoms, seed), proposition_suite(space, functions),
                                    conditional_multiplier_check(g, p, phi, copt)},
                                   combo_ok);
        per[i] = {{"phi", phi.describe()}, {"p", p}, {"g", g_label}, {"passed", combo_ok}, {"reports", reports}};
        ok[i] = combo_ok;
      });
      for (char c : ok) passed = passed && c;
      out["combinations"] = per;
      out["status"] = passed ? "pass" : "fail";
      result.passed = result.passed && passed;
      suite_json["verify"] = out;
    } else if (suite == Suite::multiplier) {
      std::vector<json> per(cs.size());
      std::vector<char> ok(cs.size(), 1);
      parallel_for(cs.size(), [&](std::size_t i) {
        const Phi& phi = config.phis[cs[i].phi_index];
        const double p = cs[i].p;
        std::string g_label;
        const LeafFunction g = multiplier_g(config, tree, phi, g_label);
        CertificateOptions opt;
        opt.sample_chains = config.sample_chains;
        opt.random_members = config.random_members;
        opt.seed = seed;
        opt.band_low = config.band_low;
        opt.band_high = config.band_high;
        opt.g_description = g_label;
        const MultiplierReport cert = theorem1_certificate(g, p, phi, opt);
        const VerificationReport linf = linf_bound_check(g, p, phi);
        ok[i] = cert.status == "certified" && linf.passed();
        per[i] = {{"phi", phi.describe()}, {"p", p}, {"certificate", to_json(cert)}, {"linf_bound", to_json(linf)}};
      });
      bool passed = true;
      for (char c : ok) passed = passed && c;
      suite_json["multiplier"] = {{"combinations", per}, {"status", passed ? "pass" : "fail"}};
      result.passed = result.passed && passed;
    }
  }
  report["suites"] = suite_json;
  report["status"] = result.passed ? "pass" : "fail";
  report["content_hash"] = content_hash(report);
  return result;
}

void write_outputs(const RunResult& result, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream out(fs::path(out_dir) / name);
    if (!out) throw std::runtime_error("cannot write " + (fs::path(out_dir) / name).string());
    out << text;
  };
  write("report.json", result.report.dump(2) + "\n");
  if (!result.norms_csv.empty()) write("norms.csv", result.norms_csv);
  if (!result.phi_csv.empty()) write("phi.csv", result.phi_csv);
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App cli{"campanato_lab: Campanato seminorms, weight functions and multiplier checks on finite filtrations"};
  cli.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int depth = 0;
  std::string format = "json";

  struct Command {
    const char* name;
    const char* help;
    std::optional<Suite> suite;
  };
  const Command commands[] = {
      {"run", "Run the suites listed in the config", std::nullopt},
      {"norms", "Seminorm and norm table for every function x phi x p", Suite::norms},
      {"verify", "Run the verification suites", Suite::verify},
      {"phi", "Weight-function report and phi* table", Suite::phi_report},
      {"multiplier", "Multiplier certificate for the configured g", Suite::multiplier},
  };
  std::vector<std::pair<CLI::App*, std::optional<Suite>>> subs;
  for (const auto& c : commands) {
    CLI::App* sub = cli.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "Config file (JSON or YAML)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (overrides output.dir)");
    sub->add_option("--seed", seed, "Seed (overrides the config seed)");
    sub->add_option("--depth", depth, "Tree depth override")->check(CLI::NonNegativeNumber);
    sub->add_option("--format", format, "Stdout format")->check(CLI::IsMember({"json", "csv"}));
    subs.emplace_back(sub, c.suite);
  }

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig config = load_config(config_path);
    Overrides overrides;
    for (const auto& [sub, suite] : subs) {
      if (!sub->parsed()) continue;
      if (sub->count("--seed")) overrides.seed = seed;
      if (sub->count("--depth")) overrides.depth = depth;
      if (sub->count("--out")) overrides.out_dir = out_dir;
    }
    apply_overrides(config, overrides);
    std::vector<Suite> suites = config.suites;
    for (const auto& [sub, suite] : subs) {
      if (sub->parsed() && suite) suites = {*suite};
    }
    const RunResult result = run_experiment(config, suites);
    write_outputs(result, config.out_dir);
    if (format == "csv") {
      out << result.norms_csv << result.phi_csv;
    } else {
      out << result.report.dump(2) << "\n";
    }
    if (!result.passed) {
      err << "verification failed; see " << (std::filesystem::path(config.out_dir) / "report.json").string() << "\n";
      return 1;
    }
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace campanato::app
