#include "errw/rational.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace errw {

Rational to_rational(double x)
{
    if (!std::isfinite(x)) {
        throw std::invalid_argument("to_rational: non-finite value");
    }
    if (x == 0.0) {
        return Rational(0);
    }
    int exponent = 0;
    const double fraction = std::frexp(x, &exponent);  // x = fraction * 2^exponent, |fraction| in [0.5, 1)
    const auto mantissa = static_cast<std::int64_t>(std::ldexp(fraction, 53));
    exponent -= 53;
    boost::multiprecision::cpp_int num = mantissa;
    boost::multiprecision::cpp_int den = 1;
    if (exponent >= 0) {
        num <<= exponent;
    } else {
        den <<= -exponent;
    }
    return Rational(num, den);
}

std::string to_fraction_string(const Rational& r)
{
    const auto num = boost::multiprecision::numerator(r);
    const auto den = boost::multiprecision::denominator(r);
    if (den == 1) {
        return num.str();
    }
    return num.str() + "/" + den.str();
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace errw
