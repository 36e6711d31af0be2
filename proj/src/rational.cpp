#include "sosr/rational.hpp"

#include <cmath>
#include <stdexcept>

namespace sosr {

namespace {

Rational pow10(long exponent) {
  mpz_class p;
  mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(exponent));
  return Rational(p);
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

Rational parse_decimal(std::string_view text) {
  bool negative = false;
  if (!text.empty() && (text[0] == '+' || text[0] == '-')) {
    negative = text[0] == '-';
    text.remove_prefix(1);
  }
  long exponent = 0;
  if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
    std::string_view exp_part = text.substr(e + 1);
    bool exp_negative = false;
    if (!exp_part.empty() && (exp_part[0] == '+' || exp_part[0] == '-')) {
      exp_negative = exp_part[0] == '-';
      exp_part.remove_prefix(1);
    }
    if (!all_digits(exp_part) || exp_part.size() > 6)
      throw std::invalid_argument("bad exponent in number");
    exponent = std::stol(std::string(exp_part));
    if (exp_negative) exponent = -exponent;
    text = text.substr(0, e);
  }
  std::string digits;
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = text.substr(dot + 1);
    if (whole.empty() && frac.empty()) throw std::invalid_argument("bad number");
    if ((!whole.empty() && !all_digits(whole)) || (!frac.empty() && !all_digits(frac)))
      throw std::invalid_argument("bad number");
    digits = std::string(whole) + std::string(frac);
    exponent -= static_cast<long>(frac.size());
  } else {
    if (!all_digits(text)) throw std::invalid_argument("bad number");
    digits = std::string(text);
  }
  if (digits.empty()) digits = "0";
  Rational value{mpz_class(digits, 10)};
  if (exponent > 0) value *= pow10(exponent);
  if (exponent < 0) value /= pow10(-exponent);
  value.canonicalize();
  return negative ? Rational(-value) : value;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty number");
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    Rational num = parse_decimal(text.substr(0, slash));
    Rational den = parse_decimal(text.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator");
    Rational q = num / den;
    q.canonicalize();
    return q;
  }
  return parse_decimal(text);
}

std::string to_string(const Rational& value) {
  mpz_class den = value.get_den();
  int twos = 0, fives = 0;
  while (mpz_divisible_ui_p(den.get_mpz_t(), 2)) {
    den /= 2;
    ++twos;
  }
  while (mpz_divisible_ui_p(den.get_mpz_t(), 5)) {
    den /= 5;
    ++fives;
  }
  if (den != 1 || twos > 40 || fives > 40) return value.get_str();
  if (value.get_den() == 1) return value.get_num().get_str();
  int places = std::max(twos, fives);
  mpz_class scaled = value.get_num() * (pow10(places).get_num() / value.get_den());
  bool negative = scaled < 0;
  if (negative) scaled = -scaled;
  std::string digits = scaled.get_str();
  if (static_cast<int>(digits.size()) <= places)
    digits.insert(0, static_cast<std::size_t>(places - static_cast<int>(digits.size()) + 1), '0');
  digits.insert(digits.size() - static_cast<std::size_t>(places), ".");
  return negative ? "-" + digits : digits;
}

Rational from_double(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("non-finite value");
  return Rational(value);
}

Rational round_rational(double value, long max_denominator) {
  if (!std::isfinite(value)) throw std::invalid_argument("non-finite value");
  Rational x = from_double(value);
  // Convergents h/k of the continued fraction of x.
  mpz_class h_prev = 1, h = 0, k_prev = 0, k = 1;
  Rational rest = x;
  Rational best = Rational(mpz_class(0));
  bool have_best = false;
  for (int iter = 0; iter < 64; ++iter) {
    mpz_class a;
    mpz_fdiv_q(a.get_mpz_t(), rest.get_num_mpz_t(), rest.get_den_mpz_t());
    mpz_class h_next = a * h_prev + h;
    mpz_class k_next = a * k_prev + k;
    if (k_next > max_denominator) {
      // Largest semiconvergent that still fits.
      mpz_class t = (mpz_class(max_denominator) - k) / k_prev;
      if (t > 0) {
        Rational semi(t * h_prev + h, t * k_prev + k);
        semi.canonicalize();
        Rational conv(h_prev, k_prev);
        conv.canonicalize();
        best = abs(semi - x) < abs(conv - x) ? semi : conv;
      } else {
        best = Rational(h_prev, k_prev);
        best.canonicalize();
      }
      have_best = true;
      break;
    }
    h = h_prev;
    k = k_prev;
    h_prev = h_next;
    k_prev = k_next;
    Rational frac = rest - Rational(a);
    if (frac == 0) {
      best = Rational(h_prev, k_prev);
      best.canonicalize();
      have_best = true;
      break;
    }
    rest = 1 / frac;
  }
  if (!have_best) {
    best = Rational(h_prev, k_prev);
    best.canonicalize();
  }
  return best;
}

}  // namespace sosr
