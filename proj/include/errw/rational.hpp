#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>

namespace errw {

using Rational = boost::multiprecision::cpp_rational;

/// Exact value of a finite double (every double is a dyadic rational).
Rational to_rational(double x);

/// "p/q" in lowest terms, or "p" when the denominator is 1.
std::string to_fraction_string(const Rational& r);

double to_double(const Rational& r);

}  // namespace errw
