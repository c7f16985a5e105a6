#include "campanato/rational.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

namespace campanato {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

[[noreturn]] void malformed(std::string_view text) {
  throw std::invalid_argument("malformed rational '" + std::string(text) + "'");
}

Rational pow10(long e) {
  Rational ten(10);
  Rational out(1);
  for (long i = 0; i < (e < 0 ? -e : e); ++i) out *= ten;
  return e < 0 ? Rational(1 / out) : out;
}

Rational parse_decimal(std::string_view text, std::string_view full) {
  bool negative = false;
  if (!text.empty() && (text.front() == '+' || text.front() == '-')) {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  long exponent = 0;
  if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
    std::string_view exp_part = text.substr(e + 1);
    bool exp_negative = false;
    if (!exp_part.empty() && (exp_part.front() == '+' || exp_part.front() == '-')) {
      exp_negative = exp_part.front() == '-';
      exp_part.remove_prefix(1);
    }
    if (!all_digits(exp_part) || exp_part.size() > 6) malformed(full);
    exponent = std::stol(std::string(exp_part));
    if (exp_negative) exponent = -exponent;
    text = text.substr(0, e);
  }
  std::string digits;
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = text.substr(dot + 1);
    if ((!whole.empty() && !all_digits(whole)) || (!frac.empty() && !all_digits(frac)) ||
        (whole.empty() && frac.empty())) {
      malformed(full);
    }
    digits = std::string(whole) + std::string(frac);
    exponent -= static_cast<long>(frac.size());
  } else {
    if (!all_digits(text)) malformed(full);
    digits = std::string(text);
  }
  // A leading 0 would make GMP read the digits as octal.
  const auto first = digits.find_first_not_of('0');
  digits = first == std::string::npos ? "0" : digits.substr(first);
  Rational value{boost::multiprecision::mpz_int(digits)};
  value *= pow10(exponent);
  return negative ? Rational(-value) : value;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  const std::string_view full = text;
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty()) malformed(full);

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    Rational num = parse_decimal(text.substr(0, slash), full);
    Rational den = parse_decimal(text.substr(slash + 1), full);
    if (den == 0) throw std::invalid_argument("zero denominator in '" + std::string(full) + "'");
    return num / den;
  }
  return parse_decimal(text, full);
}

double to_double(const Rational& q) {
  // mpq_get_d truncates; step to the nearest neighbour by exact comparison.
  double d = mpq_get_d(q.backend().data());
  if (!std::isfinite(d) || d == 0.0) {
    if (q == 0) return 0.0;
  }
  const double up = std::nextafter(d, HUGE_VAL);
  const double down = std::nextafter(d, -HUGE_VAL);
  auto dist = [&](double c) {
    Rational diff = Rational(c) - q;
    return diff < 0 ? Rational(-diff) : diff;
  };
  double best = d;
  Rational best_dist = dist(d);
  for (double c : {up, down}) {
    if (!std::isfinite(c)) continue;
    Rational cd = dist(c);
    if (cd < best_dist) {
      best = c;
      best_dist = cd;
    }
  }
  return best;
}

}  // namespace campanato
