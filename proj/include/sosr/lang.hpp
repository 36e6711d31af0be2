#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sosr/polynomial.hpp"

namespace sosr {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                           message),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// Boolean combination of equalities between variables and constants.
struct EqualityExpr {
  enum class Op : std::uint8_t { True, Equal, Not, And, Or };

  Op op = Op::True;
  Arg lhs;
  Arg rhs;
  std::vector<EqualityExpr> children;

  static EqualityExpr always() { return {}; }
  static EqualityExpr equal(Arg a, Arg b) { return {Op::Equal, std::move(a), std::move(b), {}}; }
  static EqualityExpr negation(EqualityExpr e) { return {Op::Not, {}, {}, {std::move(e)}}; }

  bool is_tautology() const { return op == Op::True; }
  // Names are equal iff identical.
  bool evaluate(const Substitution& theta) const;
  std::set<Variable> variables() const;
  std::string str() const;

  friend bool operator==(const EqualityExpr&, const EqualityExpr&) = default;
};

enum class Relation : std::uint8_t { Ge, Le, Eq };

std::string relation_str(Relation r);

// poly rel rhs, with the constant part of the written form moved to rhs.
struct PolyConstraint {
  TermPolynomial poly;
  Relation rel = Relation::Ge;
  Rational rhs = 0;
  friend bool operator==(const PolyConstraint&, const PolyConstraint&) = default;
};

// sum c_mu e(mu) rel rhs; every monomial of `linear` stands for its moment.
struct ExpectationBody {
  TermPolynomial linear;
  Relation rel = Relation::Ge;
  Rational rhs = 0;
  friend bool operator==(const ExpectationBody&, const ExpectationBody&) = default;
};

struct LogicalConstraint {
  std::vector<Variable> variables;
  EqualityExpr guard;
  PolyConstraint body;
  friend bool operator==(const LogicalConstraint&, const LogicalConstraint&) = default;
};

struct ExpectationConstraint {
  std::vector<Variable> variables;
  EqualityExpr guard;
  ExpectationBody body;
  friend bool operator==(const ExpectationConstraint&, const ExpectationConstraint&) = default;
};

// "if <premise> then <conclusion>" under one quantifier block. Handled by the
// two-phase learner, never encoded directly.
struct ConditionalRule {
  std::vector<Variable> variables;
  EqualityExpr guard;
  ExpectationBody premise;
  PolyConstraint conclusion;
  friend bool operator==(const ConditionalRule&, const ConditionalRule&) = default;
};

using Constraint = std::variant<LogicalConstraint, ExpectationConstraint, ConditionalRule>;

// `pattern` empty means the blanket "bounds * in [L, U]" form.
struct BoundsDecl {
  std::optional<TermMonomial> pattern;
  Interval range;
  friend bool operator==(const BoundsDecl&, const BoundsDecl&) = default;
};

struct KnowledgeBase {
  std::vector<Constraint> constraints;
  std::set<std::string> constants;
  std::vector<BoundsDecl> bounds;
  std::map<std::string, std::size_t> signature;

  friend bool operator==(const KnowledgeBase& a, const KnowledgeBase& b) {
    return a.constraints == b.constraints && a.constants == b.constants && a.bounds == b.bounds;
  }
};

// Throws ParseError with line and column.
KnowledgeBase parse_kb(std::string_view text);
std::string render_kb(const KnowledgeBase& kb);
std::string render_constraint(const Constraint& c);

// Ground syntax as printed by str(): every identifier is a name and "#i" a
// generic. Used for data files and certificates.
Polynomial parse_ground_polynomial(std::string_view text);
Monomial parse_ground_monomial(std::string_view text);
Atom parse_atom(std::string_view text);

// Distinct variables occurring in guard and body.
int quantifier_rank(const Constraint& c);
int quantifier_rank(const KnowledgeBase& kb);

// ---------------------------------------------------------------------------
// Ground constraints and queries.

// Normalized ground constraint: poly >= 0 or poly = 0. Expectation
// constraints read every monomial as its moment e(mu).
struct GroundConstraint {
  enum class Kind : std::uint8_t { Logical, Expectation };

  Kind kind = Kind::Logical;
  Polynomial poly;
  Relation rel = Relation::Ge;
  std::string origin = "kb";

  bool is_equality() const { return rel == Relation::Eq; }
  std::string str() const;

  friend bool operator==(const GroundConstraint& a, const GroundConstraint& b) {
    return a.kind == b.kind && a.poly == b.poly && a.rel == b.rel;
  }
  friend bool operator<(const GroundConstraint& a, const GroundConstraint& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    if (a.rel != b.rel) return a.rel < b.rel;
    return a.poly < b.poly;
  }
};

// p rel c  ->  p - c >= 0, c - p >= 0 or p - c = 0.
GroundConstraint normalize(GroundConstraint::Kind kind, const Polynomial& p, Relation rel, const Rational& rhs,
                           std::string origin);

struct Query {
  std::vector<Variable> variables;
  std::optional<std::vector<Name>> domain;
  EqualityExpr guard;
  std::variant<PolyConstraint, ExpectationBody> body;
  friend bool operator==(const Query&, const Query&) = default;
};

// Constants not yet known to `kb` are accepted and reported by
// query_constants.
Query parse_query(std::string_view text, const KnowledgeBase& kb);
std::string render_query(const Query& q);
int quantifier_rank(const Query& q);
std::set<std::string> query_constants(const Query& q);

class UnsupportedQuery : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A set of ground constraints whose joint SOS-infeasibility is sought.
struct RefutationGoal {
  std::string label;
  std::vector<GroundConstraint> added;
};

// Ground instances of the query over its listed domain, or `default_domain`
// when none is listed. Guard-failing substitutions are skipped.
std::vector<std::pair<std::string, GroundConstraint>> query_instances(const Query& q,
                                                                      const std::vector<Name>& default_domain);

// p >= c becomes p <= c - eps; p <= c becomes p >= c + eps; p = c splits into
// both. One goal per (instance, branch); the query is proved iff every goal is
// refuted.
std::vector<RefutationGoal> negate_query(const Query& q, const Rational& eps,
                                         const std::vector<Name>& default_domain);

}  // namespace sosr
