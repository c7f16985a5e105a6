#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <string_view>

namespace campanato {

/// Exact rational arithmetic backed by GMP. Expression templates are off so
/// the type behaves like a plain value in generic code.
using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                               boost::multiprecision::et_off>;

/// Parses "p/q", "-3", "0.125" or "1.5e-3" without rounding.
/// Throws std::invalid_argument on malformed input or a zero denominator.
Rational parse_rational(std::string_view text);

/// Nearest double to q.
double to_double(const Rational& q);

}  // namespace campanato
