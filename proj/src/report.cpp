#include "campanato/report.hpp"

#include <algorithm>
#include <cmath>

namespace campanato {

namespace {
constexpr std::size_t kMaxListedFailures = 32;
}

std::optional<double> Check::value(std::string_view key) const {
  for (const auto& m : measured) {
    if (m.name == key) return m.value;
  }
  return std::nullopt;
}

void Check::fail(std::string what) {
  passed = false;
  failures.push_back(std::move(what));
}

bool VerificationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

Check& VerificationReport::add(Check check) {
  checks.push_back(std::move(check));
  return checks.back();
}

const Check* VerificationReport::find(std::string_view name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::size_t VerificationReport::failure_count() const {
  return static_cast<std::size_t>(
      std::count_if(checks.begin(), checks.end(), [](const Check& c) { return !c.passed; }));
}

void VerificationReport::append(const VerificationReport& other) {
  checks.insert(checks.end(), other.checks.begin(), other.checks.end());
}

nlohmann::json number_to_json(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

nlohmann::json to_json(const Check& check) {
  nlohmann::json j;
  j["name"] = check.name;
  j["anchor"] = check.anchor;
  nlohmann::json measured = nlohmann::json::object();
  for (const auto& m : check.measured) measured[m.name] = number_to_json(m.value);
  j["measured"] = measured;
  j["threshold"] = check.threshold ? number_to_json(*check.threshold) : nlohmann::json();
  j["passed"] = check.passed;
  j["witness"] = check.witness;
  nlohmann::json failures = nlohmann::json::array();
  for (std::size_t i = 0; i < check.failures.size() && i < kMaxListedFailures; ++i) {
    failures.push_back(check.failures[i]);
  }
  j["failures"] = failures;
  j["failure_count"] = check.failures.size();
  return j;
}

nlohmann::json to_json(const VerificationReport& report) {
  nlohmann::json j;
  j["suite"] = report.suite;
  j["status"] = report.passed() ? "pass" : "fail";
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks) checks.push_back(to_json(c));
  j["checks"] = checks;
  return j;
}

}  // namespace campanato
