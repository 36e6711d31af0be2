#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sosr/rational.hpp"

namespace sosr {

// A name of the domain. Constants carry their identifier; generic names are
// numbered and print as "#i".
struct Name {
  enum class Kind : std::uint8_t { Constant, Generic };

  Kind kind = Kind::Constant;
  std::string id;
  int index = 0;

  static Name constant(std::string id) { return Name{Kind::Constant, std::move(id), 0}; }
  static Name generic(int index) { return Name{Kind::Generic, {}, index}; }

  bool is_generic() const { return kind == Kind::Generic; }
  std::string str() const { return is_generic() ? "#" + std::to_string(index) : id; }

  friend bool operator==(const Name&, const Name&) = default;
  // Constants order before generics; constants by identifier, generics by index.
  friend std::strong_ordering operator<=>(const Name& a, const Name& b) {
    if (a.kind != b.kind) return a.kind <=> b.kind;
    if (a.is_generic()) return a.index <=> b.index;
    int c = a.id.compare(b.id);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }
};

struct Variable {
  std::string name;
  friend bool operator==(const Variable&, const Variable&) = default;
  friend std::strong_ordering operator<=>(const Variable& a, const Variable& b) {
    int c = a.name.compare(b.name);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }
};

using Arg = std::variant<Variable, Name>;

inline std::string arg_str(const Name& n) { return n.str(); }
inline std::string arg_str(const Arg& a) {
  return std::holds_alternative<Variable>(a) ? std::get<Variable>(a).name : std::get<Name>(a).str();
}

inline std::strong_ordering compare_args(const Name& a, const Name& b) { return a <=> b; }
inline std::strong_ordering compare_args(const Arg& a, const Arg& b) {
  if (a.index() != b.index()) return a.index() <=> b.index();
  if (std::holds_alternative<Variable>(a)) return std::get<Variable>(a) <=> std::get<Variable>(b);
  return std::get<Name>(a) <=> std::get<Name>(b);
}

// R(t1, ..., tk). With A = Name this is a ground atom; with A = Arg it may
// mention variables.
template <class A>
struct BasicAtom {
  std::string predicate;
  std::vector<A> args;

  std::string str() const {
    std::string out = predicate + "(";
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i) out += ",";
      out += arg_str(args[i]);
    }
    return out + ")";
  }

  friend bool operator==(const BasicAtom&, const BasicAtom&) = default;
  friend std::strong_ordering operator<=>(const BasicAtom& a, const BasicAtom& b) {
    if (int c = a.predicate.compare(b.predicate); c != 0)
      return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
    if (a.args.size() != b.args.size()) return a.args.size() <=> b.args.size();
    for (std::size_t i = 0; i < a.args.size(); ++i)
      if (auto c = compare_args(a.args[i], b.args[i]); c != 0) return c;
    return std::strong_ordering::equal;
  }
};

using Atom = BasicAtom<Name>;
using Term = BasicAtom<Arg>;

// Product of atom powers, factors kept sorted by atom with positive exponents
// so that equality is structural.
template <class A>
class BasicMonomial {
 public:
  using AtomType = BasicAtom<A>;
  using Factor = std::pair<AtomType, int>;

  BasicMonomial() = default;
  explicit BasicMonomial(AtomType atom, int exponent = 1) {
    if (exponent > 0) factors_.emplace_back(std::move(atom), exponent);
  }
  explicit BasicMonomial(std::vector<Factor> factors) : factors_(std::move(factors)) { normalize(); }

  const std::vector<Factor>& factors() const { return factors_; }
  bool is_constant() const { return factors_.empty(); }
  int degree() const {
    int d = 0;
    for (const auto& f : factors_) d += f.second;
    return d;
  }
  int exponent_of(const AtomType& atom) const {
    for (const auto& f : factors_)
      if (f.first == atom) return f.second;
    return 0;
  }
  std::vector<AtomType> atoms() const {
    std::vector<AtomType> out;
    out.reserve(factors_.size());
    for (const auto& f : factors_) out.push_back(f.first);
    return out;
  }

  friend BasicMonomial operator*(const BasicMonomial& a, const BasicMonomial& b) {
    std::vector<Factor> merged;
    merged.reserve(a.factors_.size() + b.factors_.size());
    std::size_t i = 0, j = 0;
    while (i < a.factors_.size() || j < b.factors_.size()) {
      if (j == b.factors_.size() || (i < a.factors_.size() && a.factors_[i].first < b.factors_[j].first)) {
        merged.push_back(a.factors_[i++]);
      } else if (i == a.factors_.size() || b.factors_[j].first < a.factors_[i].first) {
        merged.push_back(b.factors_[j++]);
      } else {
        merged.emplace_back(a.factors_[i].first, a.factors_[i].second + b.factors_[j].second);
        ++i;
        ++j;
      }
    }
    BasicMonomial out;
    out.factors_ = std::move(merged);
    return out;
  }

  std::string str() const {
    if (factors_.empty()) return "1";
    std::string out;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      if (i) out += "*";
      out += factors_[i].first.str();
      if (factors_[i].second != 1) out += "^" + std::to_string(factors_[i].second);
    }
    return out;
  }

  friend bool operator==(const BasicMonomial&, const BasicMonomial&) = default;
  friend std::strong_ordering operator<=>(const BasicMonomial& a, const BasicMonomial& b) {
    std::size_t n = std::min(a.factors_.size(), b.factors_.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (auto c = a.factors_[i].first <=> b.factors_[i].first; c != 0) return c;
      if (auto c = a.factors_[i].second <=> b.factors_[i].second; c != 0) return c;
    }
    return a.factors_.size() <=> b.factors_.size();
  }

 private:
  void normalize() {
    std::sort(factors_.begin(), factors_.end(),
              [](const Factor& x, const Factor& y) { return x.first < y.first; });
    std::vector<Factor> merged;
    for (auto& f : factors_) {
      if (f.second < 0) throw std::invalid_argument("negative exponent");
      if (f.second == 0) continue;
      if (!merged.empty() && merged.back().first == f.first)
        merged.back().second += f.second;
      else
        merged.push_back(std::move(f));
    }
    factors_ = std::move(merged);
  }

  std::vector<Factor> factors_;
};

using Monomial = BasicMonomial<Name>;
using TermMonomial = BasicMonomial<Arg>;

// Graded order: degree first, then lexicographic. Used for basis ordering.
template <class A>
bool graded_less(const BasicMonomial<A>& a, const BasicMonomial<A>& b) {
  if (a.degree() != b.degree()) return a.degree() < b.degree();
  return a < b;
}

// Sparse polynomial; the constant term is keyed by the empty monomial.
// Zero coefficients are never stored.
template <class A>
class BasicPolynomial {
 public:
  using MonomialType = BasicMonomial<A>;
  using Terms = std::map<MonomialType, Rational>;

  BasicPolynomial() = default;
  BasicPolynomial(const Rational& constant) { add_term(MonomialType{}, constant); }
  BasicPolynomial(const MonomialType& m, const Rational& c = 1) { add_term(m, c); }

  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const {
    return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.is_constant());
  }
  Rational constant_term() const {
    auto it = terms_.find(MonomialType{});
    return it == terms_.end() ? Rational(0) : it->second;
  }
  Rational coefficient(const MonomialType& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? Rational(0) : it->second;
  }
  int degree() const {
    int d = 0;
    for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
    return d;
  }
  std::set<BasicAtom<A>> atoms() const {
    std::set<BasicAtom<A>> out;
    for (const auto& [m, c] : terms_)
      for (const auto& f : m.factors()) out.insert(f.first);
    return out;
  }

  void add_term(const MonomialType& m, const Rational& c) {
    if (c == 0) return;
    auto [it, inserted] = terms_.try_emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0) terms_.erase(it);
    }
  }

  BasicPolynomial& operator+=(const BasicPolynomial& o) {
    for (const auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
  }
  BasicPolynomial& operator-=(const BasicPolynomial& o) {
    for (const auto& [m, c] : o.terms_) add_term(m, -c);
    return *this;
  }
  BasicPolynomial& operator*=(const Rational& s) {
    if (s == 0) {
      terms_.clear();
      return *this;
    }
    for (auto& [m, c] : terms_) c *= s;
    return *this;
  }
  friend BasicPolynomial operator+(BasicPolynomial a, const BasicPolynomial& b) { return a += b; }
  friend BasicPolynomial operator-(BasicPolynomial a, const BasicPolynomial& b) { return a -= b; }
  friend BasicPolynomial operator-(BasicPolynomial a) { return a *= Rational(-1); }
  friend BasicPolynomial operator*(BasicPolynomial a, const Rational& s) { return a *= s; }
  friend BasicPolynomial operator*(const Rational& s, BasicPolynomial a) { return a *= s; }
  friend BasicPolynomial operator*(const BasicPolynomial& a, const BasicPolynomial& b) {
    BasicPolynomial out;
    for (const auto& [ma, ca] : a.terms_)
      for (const auto& [mb, cb] : b.terms_) out.add_term(ma * mb, ca * cb);
    return out;
  }
  friend BasicPolynomial operator*(const BasicPolynomial& a, const MonomialType& m) {
    BasicPolynomial out;
    for (const auto& [ma, ca] : a.terms_) out.add_term(ma * m, ca);
    return out;
  }

  // Terms in graded order, e.g. "1 - t(a) + 4/5*t(a)*s(a)".
  std::string str() const {
    if (terms_.empty()) return "0";
    std::vector<std::pair<MonomialType, Rational>> ordered(terms_.begin(), terms_.end());
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto& x, const auto& y) { return graded_less(x.first, y.first); });
    std::string out;
    bool first = true;
    for (const auto& [m, c] : ordered) {
      Rational mag = abs(c);
      if (first) {
        if (c < 0) out += "-";
      } else {
        out += c < 0 ? " - " : " + ";
      }
      first = false;
      if (m.is_constant()) {
        out += to_string(mag);
      } else {
        if (mag != 1) out += to_string(mag) + "*";
        out += m.str();
      }
    }
    return out;
  }

  friend bool operator==(const BasicPolynomial&, const BasicPolynomial&) = default;
  friend bool operator<(const BasicPolynomial& a, const BasicPolynomial& b) {
    return std::lexicographical_compare(
        a.terms_.begin(), a.terms_.end(), b.terms_.begin(), b.terms_.end(),
        [](const auto& x, const auto& y) {
          if (auto c = x.first <=> y.first; c != 0) return c < 0;
          return x.second < y.second;
        });
  }

 private:
  Terms terms_;
};

using Polynomial = BasicPolynomial<Name>;
using TermPolynomial = BasicPolynomial<Arg>;

// Variable -> name assignment used for grounding.
using Substitution = std::map<Variable, Name>;

Atom instantiate(const Term& term, const Substitution& theta);
Monomial instantiate(const TermMonomial& m, const Substitution& theta);
Polynomial instantiate(const TermPolynomial& p, const Substitution& theta);

// Lifts a ground object back into the term language (no variables).
Term as_term(const Atom& atom);
TermPolynomial as_term_polynomial(const Polynomial& p);

std::set<Variable> variables_of(const TermPolynomial& p);

// Evaluation at a full assignment; throws std::out_of_range for a missing atom.
Rational evaluate(const Monomial& m, const std::function<Rational(const Atom&)>& value);
Rational evaluate(const Polynomial& p, const std::function<Rational(const Atom&)>& value);
Rational evaluate(const Polynomial& p, const std::map<Atom, Rational>& assignment);

// Atom -> real-or-unknown. Atoms absent from the map are unknown.
struct PartialModel {
  std::map<Atom, std::optional<Rational>> values;

  std::optional<Rational> value(const Atom& atom) const {
    auto it = values.find(atom);
    return it == values.end() ? std::nullopt : it->second;
  }
  bool observed(const Atom& atom) const { return value(atom).has_value(); }

  friend bool operator==(const PartialModel&, const PartialModel&) = default;
  friend bool operator<(const PartialModel& a, const PartialModel& b) { return a.values < b.values; }
};

// Observed atoms replaced by their values, like monomials collected. The
// result mentions only unobserved atoms.
Polynomial partial_evaluate(const Polynomial& p, const PartialModel& rho);

// Monomial version: coefficient times the monomial of unobserved factors.
std::pair<Rational, Monomial> partial_evaluate(const Monomial& m, const PartialModel& rho);

// Closed interval with exact endpoints.
struct Interval {
  Rational lo;
  Rational hi;

  bool contains(const Rational& x) const { return lo <= x && x <= hi; }
  bool empty() const { return lo > hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

Interval interval_product(const Interval& a, const Interval& b);
Interval interval_power(const Interval& a, int exponent);
Interval intersect(const Interval& a, const Interval& b);

}  // namespace sosr
