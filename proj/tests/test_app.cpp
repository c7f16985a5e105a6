#include "campanato/app.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace campanato::app {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("campanato_app_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const fs::path& dir, const std::string& text) {
  const fs::path path = dir / "config.yaml";
  std::ofstream(path) << text;
  return path.string();
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  args.insert(args.begin(), "campanato_lab");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, Minimal) {
  const ExperimentConfig c = parse_config("tree: {type: dyadic, depth: 3}\n");
  EXPECT_EQ(c.tree.depth, 3);
  ASSERT_EQ(c.phis.size(), 1u);
  EXPECT_EQ(c.phis[0].kind(), Phi::Kind::one);
  EXPECT_EQ(c.ps, std::vector<double>{1.0});
  EXPECT_EQ(c.suites, std::vector<Suite>{Suite::verify});
}

TEST(Config, JsonIsAccepted) {
  const ExperimentConfig c = parse_config(
      R"({"tree": {"type": "dyadic", "depth": 2}, "phis": [{"family": "psi"}, {"family": "power", "alpha": 0.5}],
          "p": [1, 2], "seed": 18446744073709551615, "suites": ["norms", "phi_report"]})");
  EXPECT_EQ(c.phis.size(), 2u);
  EXPECT_EQ(c.ps.size(), 2u);
  EXPECT_EQ(*c.seed, 18446744073709551615ULL);
  EXPECT_EQ(c.suites.size(), 2u);
}

TEST(Config, ErrorsCarryLineAndColumn) {
  EXPECT_EQ(error_of("tree:\n  type: splits\n  root:\n    fractions: [\"1/3\", \"1/3\"]\n"),
            "cfg:4:16: fractions sum to 2/3, not 1");
  EXPECT_EQ(error_of("tree: {type: dyadic, depth: 2}\ncolour: red\n"), "cfg:2:1: unknown key 'colour' in config");
  EXPECT_EQ(error_of("tree: {type: dyadic, depth: 2}\nphi: {family: nope}\n"),
            "cfg:2:15: unknown phi family 'nope' (one, psi, powerlog, power, table, quotient)");
  EXPECT_NE(error_of("tree: {type: dyadic}\n").find("needs a depth"), std::string::npos);
  EXPECT_NE(error_of("tree: {type: dyadic, depth: 2}\np: 0.5\n").find("cfg:2:4"), std::string::npos);
  EXPECT_NE(error_of("tree: [\n").find("cfg:"), std::string::npos);
  EXPECT_NE(error_of("").find("empty config"), std::string::npos);
}

TEST(Config, FractionsPlainVersusQuoted) {
  const ExperimentConfig exact = parse_config("tree:\n  type: splits\n  root: {fractions: [\"1/4\", \"3/4\"]}\n");
  EXPECT_TRUE(exact.tree.root.fractions[0].exact.has_value());
  const ExperimentConfig floating = parse_config("tree:\n  type: splits\n  root: {fractions: [0.25, 0.75]}\n");
  EXPECT_FALSE(floating.tree.root.fractions[0].exact.has_value());
  EXPECT_EQ(build_tree(floating)->mode(), ArithmeticMode::floating);
  ExperimentConfig forced = floating;
  forced.arithmetic = "exact";
  EXPECT_THROW(build_tree(forced), ConfigError);
}

TEST(Config, PersistEncodings) {
  const ExperimentConfig c = parse_config(
      "tree:\n  type: splits\n  root:\n    fractions: [\"1/2\", \"1/2\"]\n    children:\n      - persist\n"
      "      - {persist: true}\n");
  EXPECT_TRUE(c.tree.root.children[0].persist);
  EXPECT_TRUE(c.tree.root.children[1].persist);
}

TEST(Config, ChainTreeAndOverrides) {
  ExperimentConfig c = parse_config("tree: {type: chain, depth: 3}\n");
  EXPECT_EQ(build_tree(c)->leaf_count(), 1u);
  apply_overrides(c, Overrides{5, 6, "elsewhere"});
  EXPECT_EQ(*c.seed, 5u);
  EXPECT_EQ(*c.tree.depth, 6);
  EXPECT_EQ(c.out_dir, "elsewhere");
}

TEST(Config, MaterializeValidates) {
  const ExperimentConfig c = parse_config(
      "tree: {type: dyadic, depth: 2}\nfunctions:\n  - {name: a, type: indicator, atom: [3, 0]}\n"
      "  - {name: b, type: random}\n  - {name: c, type: leaf_values, values: [1, 2]}\n");
  const TreePtr t = build_tree(c);
  EXPECT_THROW(materialize(c.functions[0], t, Phi::one(), std::nullopt, "cfg"), ConfigError);
  EXPECT_THROW(materialize(c.functions[1], t, Phi::one(), std::nullopt, "cfg"), ConfigError);
  EXPECT_EQ(materialize(c.functions[1], t, Phi::one(), 3, "cfg").size(), 1u);
  EXPECT_THROW(materialize(c.functions[2], t, Phi::one(), std::nullopt, "cfg"), ConfigError);
  EXPECT_NE(error_of("tree: {type: dyadic, depth: 2}\nfunctions:\n  - {type: random}\n  - {type: random}\n")
                .find("duplicate function name"),
            std::string::npos);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("exit");
  const std::string good = write_config(dir, "tree: {type: dyadic, depth: 4}\nphi: {family: one}\np: 1\n"
                                             "suites: [verify]\noutput: {dir: " + (dir / "out").string() + "}\n");
  EXPECT_EQ(cli({"verify", "--config", good}), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "report.json"));
  EXPECT_EQ(cli({"verify", "--config", good, "--bogus"}), 2);
  EXPECT_EQ(cli({"--help"}), 0);
  EXPECT_EQ(cli({}), 2);
  EXPECT_EQ(cli({"norms", "--config", (dir / "missing.yaml").string()}), 2);
  std::string err;
  const fs::path bad_dir = scratch("bad");
  const std::string bad = write_config(bad_dir, "tree:\n  type: splits\n  root: {fractions: [\"1/2\", \"1/3\"]}\n");
  EXPECT_EQ(cli({"run", "--config", bad}, nullptr, &err), 2);
  EXPECT_NE(err.find("config.yaml:3:"), std::string::npos);
}

TEST(Cli, VerificationFailureExitsOne) {
  const fs::path dir = scratch("fail");
  // R below the regularity constant makes the chain-gap check fail.
  const std::string cfg = write_config(dir, "tree: {type: dyadic, depth: 3}\nverify: {R: 1.5, random_count: 2}\n"
                                            "output: {dir: " + (dir / "out").string() + "}\n");
  EXPECT_EQ(cli({"verify", "--config", cfg}), 1);
}

TEST(Cli, NormsCsvAndDeterminism) {
  const fs::path dir = scratch("norms");
  const std::string cfg = write_config(
      dir, "tree: {type: dyadic, depth: 5}\nphis: [{family: one}, {family: psi}]\np: [1, 2]\nseed: 3\n"
           "functions:\n  - {name: chi, type: indicator, atom: [1, 0]}\n  - {name: r, type: random, count: 2}\n"
           "suites: [norms, phi_report]\n");
  std::string csv;
  EXPECT_EQ(cli({"norms", "--config", cfg, "--out", (dir / "a").string(), "--format", "csv"}, &csv), 0);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3 * 4);
  EXPECT_EQ(csv.rfind("function,phi,p,seminorm,norm,witness_level,witness\n", 0), 0u);
  EXPECT_EQ(cli({"run", "--config", cfg, "--out", (dir / "b").string()}), 0);
  EXPECT_EQ(cli({"run", "--config", cfg, "--out", (dir / "c").string()}), 0);
  auto load = [](const fs::path& p) {
    std::ifstream in(p);
    auto j = nlohmann::json::parse(in);
    j.erase("generated_at");
    return j.dump();
  };
  EXPECT_EQ(load(dir / "b" / "report.json"), load(dir / "c" / "report.json"));
  EXPECT_TRUE(fs::exists(dir / "b" / "phi.csv"));
}

TEST(Report, ContentHashIgnoresTimestamp) {
  nlohmann::json a{{"x", 1}, {"generated_at", "2020"}};
  nlohmann::json b{{"x", 1}, {"generated_at", "2021"}, {"content_hash", "zzz"}};
  EXPECT_EQ(content_hash(a), content_hash(b));
  EXPECT_NE(content_hash(a), content_hash(nlohmann::json{{"x", 2}}));
  EXPECT_EQ(content_hash(a).size(), 16u);
}

TEST(Report, SuiteNames) {
  EXPECT_EQ(to_string(Suite::phi_report), "phi_report");
  EXPECT_EQ(to_string(Suite::multiplier), "multiplier");
}

}  // namespace
}  // namespace campanato::app
