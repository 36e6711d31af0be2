#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace sosr {

using Rational = mpq_class;

// Accepts "3", "-0.8", "1/3", "2.5e-3". Throws std::invalid_argument.
Rational parse_rational(std::string_view text);

// Exact decimal when the reduced denominator is of the form 2^a 5^b,
// otherwise "p/q".
std::string to_string(const Rational& value);

inline double to_double(const Rational& value) { return value.get_d(); }

// Exact binary value of a finite double.
Rational from_double(double value);

// Best rational approximation with denominator <= max_denominator
// (continued-fraction convergents and semiconvergents).
Rational round_rational(double value, long max_denominator = 1'000'000);

inline Rational abs(const Rational& value) { return value < 0 ? Rational(-value) : value; }

}  // namespace sosr
