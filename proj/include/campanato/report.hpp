#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace campanato {

struct Measurement {
  std::string name;
  double value = 0.0;
};

/// One verified statement. `anchor` is the statement being checked, written
/// out as a formula so a report can be read without the source code.
struct Check {
  std::string name;
  std::string anchor;
  std::vector<Measurement> measured;
  std::optional<double> threshold;
  bool passed = true;
  std::string witness;
  std::vector<std::string> failures;

  Check& measure(std::string key, double value) {
    measured.push_back({std::move(key), value});
    return *this;
  }
  std::optional<double> value(std::string_view key) const;
  /// Marks the check failed and records why.
  void fail(std::string what);
};

struct VerificationReport {
  std::string suite;
  std::vector<Check> checks;

  bool passed() const;
  Check& add(Check check);
  const Check* find(std::string_view name) const;
  std::size_t failure_count() const;
  void append(const VerificationReport& other);
};

/// Non-finite doubles become the strings "inf", "-inf" or "nan".
nlohmann::json number_to_json(double x);
nlohmann::json to_json(const Check& check);
nlohmann::json to_json(const VerificationReport& report);

}  // namespace campanato
