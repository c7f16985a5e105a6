#pragma once

// Experiment runner behind the campanato_lab CLI: config parsing, the suite
// registry and report assembly.

#include "campanato/filtration.hpp"
#include "campanato/functions.hpp"
#include "campanato/phi.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace campanato::app {

/// Invalid configuration. The message starts with "source:line:column:"
/// when the offending node is known.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Suite { norms, phi_report, verify, multiplier };
std::string to_string(Suite suite);

struct FunctionSpec {
  std::string name;
  std::string type;  // indicator | extremal | h | sin_h | random | leaf_values | constant
  std::optional<AtomId> atom;
  std::optional<std::size_t> leaf;  // chain selection; sampled with the seed when absent
  std::optional<Phi> phi;           // construction weight; the row φ when absent
  std::optional<std::uint64_t> seed;
  std::size_t count = 1;
  std::vector<double> values;
  double value = 0.0;
  std::string location;  // "source:line:column: " of the spec, for error messages
};

struct TreeConfig {
  std::string type = "dyadic";  // dyadic | splits | chain
  std::optional<int> depth;
  SplitNode root;
  std::string location;
};

struct ExperimentConfig {
  std::string source = "<config>";
  TreeConfig tree;
  std::string arithmetic = "auto";  // auto | exact | floating
  std::vector<Phi> phis{Phi::one()};
  std::vector<double> ps{1.0};
  std::vector<FunctionSpec> functions;
  std::vector<Suite> suites{Suite::verify};
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::optional<double> grid_r_min;
  int grid_per_decade = 4;
  // verify
  std::size_t verify_randoms = 20;
  std::size_t verify_chains = 8;
  std::optional<double> verify_R;
  // multiplier
  std::optional<std::string> multiplier_g;  // name of a function; sin h through leaf 0 otherwise
  std::size_t sample_chains = 64;
  std::size_t random_members = 32;
  double band_low = 1.0;
  double band_high = 50.0;
};

ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> depth;
  std::optional<std::string> out_dir;
};

void apply_overrides(ExperimentConfig& config, const Overrides& overrides);

/// Builds the tree; throws ConfigError on invalid specs.
TreePtr build_tree(const ExperimentConfig& config);

struct NamedFunction {
  std::string name;
  LeafFunction f;
};

/// The functions of one spec for a given row φ; validates atoms, leaves and seeds.
std::vector<NamedFunction> materialize(const FunctionSpec& spec, const TreePtr& tree, const Phi& row_phi,
                                       std::optional<std::uint64_t> global_seed, const std::string& source);

struct RunResult {
  nlohmann::json report;
  std::string norms_csv;
  std::string phi_csv;
  bool passed = true;
};

/// Runs the suites; the report carries "generated_at" and a "content_hash"
/// computed with the timestamp removed.
RunResult run_experiment(const ExperimentConfig& config, const std::vector<Suite>& suites);

/// FNV-1a 64-bit hash of the report dump without "generated_at" and "content_hash".
std::string content_hash(const nlohmann::json& report);

/// Writes report.json and, when produced, norms.csv and phi.csv into out_dir.
void write_outputs(const RunResult& result, const std::string& out_dir);

/// Full CLI: returns the process exit code (0 ok, 1 verification failure,
/// 2 usage or config error).
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace campanato::app
