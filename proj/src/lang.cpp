#include "sosr/lang.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

namespace sosr {

// ---------------------------------------------------------------------------
// EqualityExpr

bool EqualityExpr::evaluate(const Substitution& theta) const {
  auto resolve = [&](const Arg& a) -> Name {
    if (const auto* v = std::get_if<Variable>(&a)) {
      auto it = theta.find(*v);
      if (it == theta.end()) throw std::invalid_argument("unbound variable " + v->name + " in guard");
      return it->second;
    }
    return std::get<Name>(a);
  };
  switch (op) {
    case Op::True:
      return true;
    case Op::Equal:
      return resolve(lhs) == resolve(rhs);
    case Op::Not:
      return !children.front().evaluate(theta);
    case Op::And:
      return std::all_of(children.begin(), children.end(), [&](const auto& c) { return c.evaluate(theta); });
    case Op::Or:
      return std::any_of(children.begin(), children.end(), [&](const auto& c) { return c.evaluate(theta); });
  }
  return false;
}

std::set<Variable> EqualityExpr::variables() const {
  std::set<Variable> out;
  if (op == Op::Equal) {
    if (const auto* v = std::get_if<Variable>(&lhs)) out.insert(*v);
    if (const auto* v = std::get_if<Variable>(&rhs)) out.insert(*v);
  }
  for (const auto& c : children) {
    auto sub = c.variables();
    out.insert(sub.begin(), sub.end());
  }
  return out;
}

std::string EqualityExpr::str() const {
  switch (op) {
    case Op::True:
      return "true";
    case Op::Equal:
      return arg_str(lhs) + " = " + arg_str(rhs);
    case Op::Not:
      return "!(" + children.front().str() + ")";
    case Op::And:
    case Op::Or: {
      std::string out;
      for (std::size_t i = 0; i < children.size(); ++i) {
        if (i) out += op == Op::And ? " & " : " | ";
        out += "(" + children[i].str() + ")";
      }
      return out;
    }
  }
  return {};
}

std::string relation_str(Relation r) {
  switch (r) {
    case Relation::Ge:
      return ">=";
    case Relation::Le:
      return "<=";
    case Relation::Eq:
      return "=";
  }
  return "?";
}

std::string GroundConstraint::str() const {
  std::string body = poly.str();
  if (kind == Kind::Expectation) body = "E[" + body + "]";
  return body + (rel == Relation::Eq ? " = 0" : " >= 0");
}

GroundConstraint normalize(GroundConstraint::Kind kind, const Polynomial& p, Relation rel, const Rational& rhs,
                           std::string origin) {
  GroundConstraint g;
  g.kind = kind;
  g.origin = std::move(origin);
  switch (rel) {
    case Relation::Ge:
      g.poly = p - Polynomial(rhs);
      g.rel = Relation::Ge;
      break;
    case Relation::Le:
      g.poly = Polynomial(rhs) - p;
      g.rel = Relation::Ge;
      break;
    case Relation::Eq:
      g.poly = p - Polynomial(rhs);
      g.rel = Relation::Eq;
      break;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

struct Token {
  enum class Kind : std::uint8_t { Ident, Number, Generic, Symbol, End };
  Kind kind = Kind::End;
  std::string text;
  int line = 0;
  int column = 0;
};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::vector<Token> lex_line(std::string_view s, int line) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto col = [&](std::size_t pos) { return static_cast<int>(pos) + 1; };
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < s.size() && s[i + 1] == '/') break;
    std::size_t start = i;
    if (is_ident_start(c)) {
      while (i < s.size() && is_ident_char(s[i])) ++i;
      out.push_back({Token::Kind::Ident, std::string(s.substr(start, i - start)), line, col(start)});
      continue;
    }
    if (c == '#') {
      ++i;
      while (i < s.size() && is_digit(s[i])) ++i;
      if (i == start + 1) throw ParseError(line, col(start), "expected digits after '#'");
      out.push_back({Token::Kind::Generic, std::string(s.substr(start + 1, i - start - 1)), line, col(start)});
      continue;
    }
    if (is_digit(c)) {
      auto digits = [&] {
        while (i < s.size() && is_digit(s[i])) ++i;
      };
      auto decimal = [&] {
        digits();
        if (i + 1 < s.size() && s[i] == '.' && is_digit(s[i + 1])) {
          ++i;
          digits();
        }
        if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
          std::size_t j = i + 1;
          if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
          if (j < s.size() && is_digit(s[j])) {
            i = j;
            digits();
          }
        }
      };
      decimal();
      if (i + 1 < s.size() && s[i] == '/' && is_digit(s[i + 1])) {
        ++i;
        decimal();
      }
      out.push_back({Token::Kind::Number, std::string(s.substr(start, i - start)), line, col(start)});
      continue;
    }
    static const char* two_char[] = {">=", "<=", "!=", "=>"};
    bool matched = false;
    for (const char* op : two_char) {
      if (s.substr(i, 2) == op) {
        out.push_back({Token::Kind::Symbol, op, line, col(start)});
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    static const std::string singles = "()[]{},:.*^+-=!&|";
    if (singles.find(c) != std::string::npos) {
      out.push_back({Token::Kind::Symbol, std::string(1, c), line, col(start)});
      ++i;
      continue;
    }
    throw ParseError(line, col(start), std::string("unexpected character '") + c + "'");
  }
  out.push_back({Token::Kind::End, "", line, col(s.size())});
  return out;
}

// Single lowercase letter with optional digits: x, d, y2.
bool looks_like_variable(const std::string& id) {
  if (id.empty() || !std::islower(static_cast<unsigned char>(id[0]))) return false;
  return std::all_of(id.begin() + 1, id.end(), [](char c) { return is_digit(c); });
}

// Linear combination of a pointwise polynomial and an expectation part.
struct Expr {
  TermPolynomial random;
  TermPolynomial expect;

  bool has_expect() const { return !expect.is_zero(); }
};

Expr operator*(const Expr& a, const Expr& b) {
  Expr out;
  out.random = a.random * b.random;
  if (a.has_expect()) {
    if (!b.random.is_constant() || b.has_expect()) throw std::invalid_argument("product involving E[...]");
    out.expect = a.expect * b.random.constant_term();
  }
  if (b.has_expect()) {
    if (!a.random.is_constant() || a.has_expect()) throw std::invalid_argument("product involving E[...]");
    out.expect += b.expect * a.random.constant_term();
  }
  return out;
}

enum class ArgMode : std::uint8_t { Constraint, Pattern, Ground };

class LineParser {
 public:
  LineParser(std::vector<Token> tokens, const std::set<std::string>& declared,
             std::map<std::string, std::size_t>& signature, std::set<std::string>& inferred)
      : tokens_(std::move(tokens)), declared_(declared), signature_(signature), inferred_(inferred) {}

  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  bool at_end() const { return peek().kind == Token::Kind::End; }
  bool is_symbol(const char* s, std::size_t ahead = 0) const {
    return peek(ahead).kind == Token::Kind::Symbol && peek(ahead).text == s;
  }
  bool is_keyword(const char* s) const { return peek().kind == Token::Kind::Ident && peek().text == s; }
  Token next() { return tokens_[std::min(pos_++, tokens_.size() - 1)]; }
  [[noreturn]] void fail(const Token& t, const std::string& msg) const { throw ParseError(t.line, t.column, msg); }
  [[noreturn]] void fail(const std::string& msg) const { fail(peek(), msg); }
  void expect_symbol(const char* s) {
    if (!is_symbol(s)) fail(std::string("expected '") + s + "'" + (at_end() ? " at end of line" : ""));
    next();
  }
  void expect_end() {
    if (!at_end()) fail("unexpected '" + peek().text + "'");
  }

  std::vector<std::string> parse_name_list() {
    std::vector<std::string> names;
    do {
      Token t = next();
      if (t.kind != Token::Kind::Ident) fail(t, "expected a name");
      names.push_back(t.text);
    } while (is_symbol(",") && (next(), true));
    return names;
  }

  Rational parse_signed_number() {
    bool negative = false;
    if (is_symbol("-") || is_symbol("+")) negative = next().text == "-";
    Token t = next();
    if (t.kind != Token::Kind::Number) fail(t, "expected a number");
    Rational v = parse_rational(t.text);
    return negative ? Rational(-v) : v;
  }

  // forall v1, v2 [in {a, b}] :
  void parse_quantifier(bool allow_domain) {
    next();  // forall
    for (const auto& n : parse_name_list()) {
      Variable v{n};
      if (std::find(variables_.begin(), variables_.end(), v) != variables_.end())
        fail("variable '" + n + "' quantified twice");
      variables_.push_back(v);
    }
    if (is_keyword("in")) {
      if (!allow_domain) fail("a listed domain is only allowed in queries");
      next();
      expect_symbol("{");
      std::vector<Name> dom;
      for (const auto& n : parse_name_list()) {
        dom.push_back(Name::constant(n));
        inferred_.insert(n);
      }
      expect_symbol("}");
      domain_ = std::move(dom);
    }
    expect_symbol(":");
  }

  Arg resolve(const Token& t, ArgMode mode) {
    if (t.kind == Token::Kind::Generic) return Name::generic(std::stoi(t.text));
    if (t.kind != Token::Kind::Ident) fail(t, "expected a variable or name");
    if (mode == ArgMode::Ground) return Name::constant(t.text);
    Variable v{t.text};
    if (std::find(variables_.begin(), variables_.end(), v) != variables_.end()) return v;
    if (declared_.count(t.text)) return Name::constant(t.text);
    if (looks_like_variable(t.text)) {
      if (mode == ArgMode::Pattern) return v;
      fail(t, "unbound variable '" + t.text + "' (quantify it or declare it with const)");
    }
    inferred_.insert(t.text);
    return Name::constant(t.text);
  }

  Term parse_term(ArgMode mode) {
    Token head = next();
    if (head.kind != Token::Kind::Ident) fail(head, "expected a predicate");
    Term term;
    term.predicate = head.text;
    expect_symbol("(");
    if (!is_symbol(")")) {
      do {
        term.args.push_back(resolve(next(), mode));
      } while (is_symbol(",") && (next(), true));
    }
    expect_symbol(")");
    auto [it, inserted] = signature_.try_emplace(term.predicate, term.args.size());
    if (!inserted && it->second != term.args.size())
      fail(head, "arity mismatch for '" + term.predicate + "': expected " + std::to_string(it->second) + ", got " +
                     std::to_string(term.args.size()));
    return term;
  }

  TermMonomial parse_pattern_monomial() {
    TermMonomial m;
    do {
      Term t = parse_term(ArgMode::Pattern);
      int e = 1;
      if (is_symbol("^")) {
        next();
        Token n = next();
        if (n.kind != Token::Kind::Number) fail(n, "expected an exponent");
        e = std::stoi(n.text);
      }
      m = m * TermMonomial(t, e);
    } while (is_symbol("*") && (next(), true));
    return m;
  }

  // --- guards
  EqualityExpr parse_guard_or() {
    EqualityExpr first = parse_guard_and();
    if (!is_symbol("|")) return first;
    EqualityExpr out{EqualityExpr::Op::Or, {}, {}, {std::move(first)}};
    while (is_symbol("|")) {
      next();
      out.children.push_back(parse_guard_and());
    }
    return out;
  }
  EqualityExpr parse_guard_and() {
    EqualityExpr first = parse_guard_unary();
    if (!is_symbol("&")) return first;
    EqualityExpr out{EqualityExpr::Op::And, {}, {}, {std::move(first)}};
    while (is_symbol("&")) {
      next();
      out.children.push_back(parse_guard_unary());
    }
    return out;
  }
  EqualityExpr parse_guard_unary() {
    if (is_symbol("!")) {
      next();
      return EqualityExpr::negation(parse_guard_unary());
    }
    if (is_symbol("(")) {
      next();
      EqualityExpr e = parse_guard_or();
      expect_symbol(")");
      return e;
    }
    if (is_keyword("true") && !is_symbol("=", 1) && !is_symbol("!=", 1)) {
      next();
      return EqualityExpr::always();
    }
    Arg a = resolve(next(), ArgMode::Constraint);
    bool negated = false;
    if (is_symbol("!=")) {
      negated = true;
    } else if (!is_symbol("=")) {
      fail("expected '=' or '!=' in guard");
    }
    next();
    Arg b = resolve(next(), ArgMode::Constraint);
    EqualityExpr eq = EqualityExpr::equal(std::move(a), std::move(b));
    return negated ? EqualityExpr::negation(std::move(eq)) : eq;
  }

  // --- polynomial expressions
  Expr parse_expr(bool inside_expectation) {
    Expr out;
    bool negate = false;
    if (is_symbol("-") || is_symbol("+")) negate = next().text == "-";
    out = parse_product(inside_expectation);
    if (negate) out = scale(out, -1);
    while (is_symbol("+") || is_symbol("-")) {
      bool minus = next().text == "-";
      Expr t = parse_product(inside_expectation);
      out.random += minus ? -t.random : t.random;
      out.expect += minus ? -t.expect : t.expect;
    }
    return out;
  }
  static Expr scale(Expr e, const Rational& s) {
    e.random *= s;
    e.expect *= s;
    return e;
  }
  Expr parse_product(bool inside_expectation) {
    Token start = peek();
    Expr out = parse_factor(inside_expectation);
    while (is_symbol("*")) {
      next();
      Token at = peek();
      Expr f = parse_factor(inside_expectation);
      try {
        out = out * f;
      } catch (const std::invalid_argument&) {
        fail(at, "expectations must appear linearly (coefficient * E[...])");
      }
    }
    (void)start;
    return out;
  }
  Expr parse_factor(bool inside_expectation) {
    const Token& t = peek();
    if (t.kind == Token::Kind::Number) {
      next();
      Expr e;
      e.random = TermPolynomial(parse_rational(t.text));
      return e;
    }
    if (is_symbol("(")) {
      next();
      Expr e = parse_expr(inside_expectation);
      expect_symbol(")");
      return e;
    }
    if (is_symbol("-")) {
      next();
      return scale(parse_factor(inside_expectation), -1);
    }
    if (t.kind == Token::Kind::Ident && t.text == "E" && is_symbol("[", 1)) {
      if (inside_expectation) fail("nested E[...]");
      next();
      next();
      Expr inner = parse_expr(true);
      expect_symbol("]");
      Expr e;
      e.expect = inner.random;
      return e;
    }
    if (t.kind == Token::Kind::Ident && is_symbol("(", 1)) {
      Term term = parse_term(factor_mode_);
      int exponent = 1;
      if (is_symbol("^")) {
        next();
        Token n = next();
        if (n.kind != Token::Kind::Number || n.text.find_first_not_of("0123456789") != std::string::npos)
          fail(n, "expected a natural exponent");
        exponent = std::stoi(n.text);
      }
      Expr e;
      e.random = TermPolynomial(TermMonomial(term, exponent));
      return e;
    }
    if (t.kind == Token::Kind::End) fail("unexpected end of line");
    if (t.kind == Token::Kind::Ident) fail("unknown identifier '" + t.text + "' (atoms need an argument list)");
    fail("unexpected '" + t.text + "'");
  }

  Relation parse_relation() {
    Token t = next();
    if (t.kind == Token::Kind::Symbol) {
      if (t.text == ">=") return Relation::Ge;
      if (t.text == "<=") return Relation::Le;
      if (t.text == "=") return Relation::Eq;
    }
    fail(t, "expected '>=', '<=' or '='");
  }

  // lhs rel rhs, split into logical or expectation form.
  std::variant<PolyConstraint, ExpectationBody> parse_constraint_body() {
    Token start = peek();
    Expr lhs = parse_expr(false);
    Relation rel = parse_relation();
    Expr rhs = parse_expr(false);
    Expr diff;
    diff.random = lhs.random - rhs.random;
    diff.expect = lhs.expect - rhs.expect;
    if (diff.has_expect()) {
      if (!diff.random.is_constant())
        fail(start, "a constraint cannot mix random terms with expectations");
      ExpectationBody body;
      Rational constant = diff.random.constant_term() + diff.expect.constant_term();
      body.linear = diff.expect - TermPolynomial(diff.expect.constant_term());
      body.rel = rel;
      body.rhs = -constant;
      return body;
    }
    PolyConstraint body;
    Rational constant = diff.random.constant_term();
    body.poly = diff.random - TermPolynomial(constant);
    body.rel = rel;
    body.rhs = -constant;
    return body;
  }

  std::vector<Variable> occurring_order(const std::set<Variable>& used) const {
    std::vector<Variable> out;
    for (const auto& v : variables_)
      if (used.count(v)) out.push_back(v);
    return out;
  }

  const std::vector<Variable>& variables() const { return variables_; }
  const std::optional<std::vector<Name>>& domain() const { return domain_; }

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  const std::set<std::string>& declared_;
  std::map<std::string, std::size_t>& signature_;
  std::set<std::string>& inferred_;
  std::vector<Variable> variables_;
  std::optional<std::vector<Name>> domain_;

 public:
  ArgMode factor_mode_ = ArgMode::Constraint;
};

std::vector<std::pair<int, std::string_view>> split_lines(std::string_view text) {
  std::vector<std::pair<int, std::string_view>> out;
  int line = 1;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == '\n') {
      std::string_view l = text.substr(start, i - start);
      if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
      out.emplace_back(line++, l);
      start = i + 1;
    }
  }
  return out;
}

// Everything after the quantifier prefix: [guard =>] (if ... then ... | body).
Constraint parse_constraint_line(LineParser& p) {
  // Guard present iff a top-level "=>" occurs.
  EqualityExpr guard;
  for (std::size_t k = 0;; ++k) {
    const Token& t = p.peek(k);
    if (t.kind == Token::Kind::End) break;
    if (t.kind == Token::Kind::Symbol && t.text == "=>") {
      guard = p.parse_guard_or();
      p.expect_symbol("=>");
      break;
    }
  }
  if (p.is_keyword("if")) {
    Token if_tok = p.next();
    auto premise = p.parse_constraint_body();
    if (!std::holds_alternative<ExpectationBody>(premise)) p.fail(if_tok, "rule premise must be an expectation constraint");
    if (!p.is_keyword("then")) p.fail("expected 'then'");
    Token then_tok = p.next();
    auto conclusion = p.parse_constraint_body();
    if (!std::holds_alternative<PolyConstraint>(conclusion))
      p.fail(then_tok, "rule conclusion must be a logical constraint");
    p.expect_end();
    ConditionalRule rule;
    rule.guard = std::move(guard);
    rule.premise = std::get<ExpectationBody>(premise);
    rule.conclusion = std::get<PolyConstraint>(conclusion);
    std::set<Variable> used = rule.guard.variables();
    for (const auto& v : variables_of(rule.premise.linear)) used.insert(v);
    for (const auto& v : variables_of(rule.conclusion.poly)) used.insert(v);
    rule.variables = p.variables();
    return rule;
  }
  auto body = p.parse_constraint_body();
  p.expect_end();
  if (auto* e = std::get_if<ExpectationBody>(&body))
    return ExpectationConstraint{p.variables(), std::move(guard), std::move(*e)};
  return LogicalConstraint{p.variables(), std::move(guard), std::get<PolyConstraint>(std::move(body))};
}

std::string render_vars(const std::vector<Variable>& vars) {
  std::string out;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (i) out += ", ";
    out += vars[i].name;
  }
  return out;
}

std::string render_prefix(const std::vector<Variable>& vars, const EqualityExpr& guard) {
  std::string out;
  if (!vars.empty()) out += "forall " + render_vars(vars) + " : ";
  if (!guard.is_tautology()) out += guard.str() + " => ";
  return out;
}

std::string render_expectation(const TermPolynomial& linear) {
  if (linear.is_zero()) return "0";
  std::vector<std::pair<TermMonomial, Rational>> ordered(linear.terms().begin(), linear.terms().end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& x, const auto& y) { return graded_less(x.first, y.first); });
  std::string out;
  bool first = true;
  for (const auto& [m, c] : ordered) {
    Rational mag = abs(c);
    if (first)
      out += c < 0 ? "-" : "";
    else
      out += c < 0 ? " - " : " + ";
    first = false;
    if (mag != 1) out += to_string(mag) + "*";
    out += "E[" + m.str() + "]";
  }
  return out;
}

std::string render_body(const PolyConstraint& b) {
  return b.poly.str() + " " + relation_str(b.rel) + " " + to_string(b.rhs);
}
std::string render_body(const ExpectationBody& b) {
  return render_expectation(b.linear) + " " + relation_str(b.rel) + " " + to_string(b.rhs);
}

int rank_of(const std::set<Variable>& vars) { return static_cast<int>(vars.size()); }

}  // namespace

// ---------------------------------------------------------------------------

KnowledgeBase parse_kb(std::string_view text) {
  auto lines = split_lines(text);
  std::vector<std::pair<int, std::vector<Token>>> lexed;
  std::set<std::string> declared;
  for (const auto& [no, l] : lines) {
    auto tokens = lex_line(l, no);
    if (tokens.front().kind == Token::Kind::End) continue;
    if (tokens.front().kind == Token::Kind::Ident && tokens.front().text == "const") {
      for (std::size_t i = 1; i < tokens.size(); ++i)
        if (tokens[i].kind == Token::Kind::Ident) declared.insert(tokens[i].text);
    }
    lexed.emplace_back(no, std::move(tokens));
  }

  KnowledgeBase kb;
  std::set<std::string> inferred;
  for (auto& [no, tokens] : lexed) {
    LineParser p(tokens, declared, kb.signature, inferred);
    if (p.is_keyword("const")) {
      p.next();
      p.parse_name_list();
      if (p.is_symbol(".")) p.next();
      p.expect_end();
      continue;
    }
    if (p.is_keyword("bounds")) {
      p.next();
      BoundsDecl decl;
      if (p.is_symbol("*") && p.peek(1).kind == Token::Kind::Ident && p.peek(1).text == "in") {
        p.next();
      } else {
        decl.pattern = p.parse_pattern_monomial();
      }
      if (!p.is_keyword("in")) p.fail("expected 'in'");
      p.next();
      p.expect_symbol("[");
      decl.range.lo = p.parse_signed_number();
      p.expect_symbol(",");
      decl.range.hi = p.parse_signed_number();
      p.expect_symbol("]");
      p.expect_end();
      if (decl.range.lo > decl.range.hi) throw ParseError(no, 1, "empty bounds interval");
      kb.bounds.push_back(std::move(decl));
      continue;
    }
    if (p.is_keyword("exists")) p.fail("existential quantification is not supported");
    if (p.is_keyword("forall")) p.parse_quantifier(false);
    kb.constraints.push_back(parse_constraint_line(p));
  }
  if (kb.constraints.empty()) throw ParseError(1, 1, "empty knowledge base");
  kb.constants = declared;
  kb.constants.insert(inferred.begin(), inferred.end());
  return kb;
}

std::string render_constraint(const Constraint& c) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ConditionalRule>) {
          return render_prefix(x.variables, x.guard) + "if " + render_body(x.premise) + " then " +
                 render_body(x.conclusion);
        } else {
          return render_prefix(x.variables, x.guard) + render_body(x.body);
        }
      },
      c);
}

std::string render_kb(const KnowledgeBase& kb) {
  std::ostringstream out;
  if (!kb.constants.empty()) {
    out << "const ";
    bool first = true;
    for (const auto& c : kb.constants) {
      out << (first ? "" : ", ") << c;
      first = false;
    }
    out << ".\n";
  }
  for (const auto& b : kb.bounds)
    out << "bounds " << (b.pattern ? b.pattern->str() : "*") << " in [" << to_string(b.range.lo) << ", "
        << to_string(b.range.hi) << "]\n";
  for (const auto& c : kb.constraints) out << render_constraint(c) << "\n";
  return out.str();
}

int quantifier_rank(const Constraint& c) {
  return std::visit(
      [](const auto& x) -> int {
        using T = std::decay_t<decltype(x)>;
        std::set<Variable> vars = x.guard.variables();
        if constexpr (std::is_same_v<T, LogicalConstraint>) {
          auto v = variables_of(x.body.poly);
          vars.insert(v.begin(), v.end());
        } else if constexpr (std::is_same_v<T, ExpectationConstraint>) {
          auto v = variables_of(x.body.linear);
          vars.insert(v.begin(), v.end());
        } else {
          auto v1 = variables_of(x.premise.linear);
          auto v2 = variables_of(x.conclusion.poly);
          vars.insert(v1.begin(), v1.end());
          vars.insert(v2.begin(), v2.end());
        }
        return rank_of(vars);
      },
      c);
}

int quantifier_rank(const KnowledgeBase& kb) {
  int r = 0;
  for (const auto& c : kb.constraints) r = std::max(r, quantifier_rank(c));
  return r;
}

// ---------------------------------------------------------------------------
// Queries

Query parse_query(std::string_view text, const KnowledgeBase& kb) {
  auto tokens = lex_line(text, 1);
  if (tokens.front().kind == Token::Kind::End) throw ParseError(1, 1, "empty query");
  std::map<std::string, std::size_t> signature = kb.signature;
  std::set<std::string> inferred;
  LineParser p(std::move(tokens), kb.constants, signature, inferred);
  if (p.is_keyword("exists")) throw UnsupportedQuery("existential queries over an unbounded domain are not supported");
  if (p.is_keyword("forall")) p.parse_quantifier(true);
  Constraint c = parse_constraint_line(p);
  Query q;
  q.variables = p.variables();
  q.domain = p.domain();
  if (auto* l = std::get_if<LogicalConstraint>(&c)) {
    q.guard = l->guard;
    q.body = l->body;
  } else if (auto* e = std::get_if<ExpectationConstraint>(&c)) {
    q.guard = e->guard;
    q.body = e->body;
  } else {
    throw UnsupportedQuery("a conditional rule cannot be used as a query");
  }
  return q;
}

std::string render_query(const Query& q) {
  std::string out;
  if (!q.variables.empty()) {
    out += "forall " + render_vars(q.variables);
    if (q.domain) {
      out += " in {";
      for (std::size_t i = 0; i < q.domain->size(); ++i) out += (i ? ", " : "") + (*q.domain)[i].str();
      out += "}";
    }
    out += " : ";
  }
  if (!q.guard.is_tautology()) out += q.guard.str() + " => ";
  out += std::visit([](const auto& b) { return render_body(b); }, q.body);
  return out;
}

int quantifier_rank(const Query& q) {
  std::set<Variable> vars = q.guard.variables();
  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        std::set<Variable> v;
        if constexpr (std::is_same_v<T, PolyConstraint>)
          v = variables_of(b.poly);
        else
          v = variables_of(b.linear);
        vars.insert(v.begin(), v.end());
      },
      q.body);
  return rank_of(vars);
}

std::set<std::string> query_constants(const Query& q) {
  std::set<std::string> out;
  auto collect = [&](const TermPolynomial& p) {
    for (const auto& [m, c] : p.terms())
      for (const auto& [t, e] : m.factors())
        for (const Arg& a : t.args)
          if (const auto* n = std::get_if<Name>(&a); n && !n->is_generic()) out.insert(n->id);
  };
  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, PolyConstraint>)
          collect(b.poly);
        else
          collect(b.linear);
      },
      q.body);
  if (q.domain)
    for (const Name& n : *q.domain)
      if (!n.is_generic()) out.insert(n.id);
  return out;
}

namespace {

void enumerate_substitutions(const std::vector<Variable>& vars, const std::vector<Name>& domain,
                             const std::function<void(const Substitution&)>& visit) {
  Substitution theta;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == vars.size()) {
      visit(theta);
      return;
    }
    for (const Name& n : domain) {
      theta[vars[i]] = n;
      rec(i + 1);
    }
  };
  rec(0);
}

std::string substitution_label(const Substitution& theta) {
  std::string out;
  for (const auto& [v, n] : theta) out += (out.empty() ? "" : ",") + v.name + "=" + n.str();
  return out;
}

}  // namespace

std::vector<std::pair<std::string, GroundConstraint>> query_instances(const Query& q,
                                                                      const std::vector<Name>& default_domain) {
  std::set<Variable> used = q.guard.variables();
  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        std::set<Variable> v;
        if constexpr (std::is_same_v<T, PolyConstraint>)
          v = variables_of(b.poly);
        else
          v = variables_of(b.linear);
        used.insert(v.begin(), v.end());
      },
      q.body);
  std::vector<Variable> vars;
  for (const auto& v : q.variables)
    if (used.count(v)) vars.push_back(v);
  const std::vector<Name>& domain = q.domain ? *q.domain : default_domain;
  std::vector<std::pair<std::string, GroundConstraint>> out;
  std::set<GroundConstraint> seen;
  enumerate_substitutions(vars, domain, [&](const Substitution& theta) {
    if (!q.guard.evaluate(theta)) return;
    GroundConstraint g = std::visit(
        [&](const auto& b) {
          using T = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<T, PolyConstraint>)
            return normalize(GroundConstraint::Kind::Logical, instantiate(b.poly, theta), b.rel, b.rhs, "query");
          else
            return normalize(GroundConstraint::Kind::Expectation, instantiate(b.linear, theta), b.rel, b.rhs,
                             "query");
        },
        q.body);
    if (!seen.insert(g).second) return;
    out.emplace_back(substitution_label(theta), std::move(g));
  });
  return out;
}

std::vector<RefutationGoal> negate_query(const Query& q, const Rational& eps,
                                         const std::vector<Name>& default_domain) {
  if (eps < 0) throw std::invalid_argument("negative query margin");
  std::vector<RefutationGoal> goals;
  for (auto& [label, g] : query_instances(q, default_domain)) {
    // g is "p >= 0" or "p = 0"; its complement is p <= -eps (and p >= eps).
    std::string base = label.empty() ? std::string("query") : label;
    GroundConstraint below = g;
    below.rel = Relation::Ge;
    below.poly = -g.poly - Polynomial(eps);
    below.origin = "negated-query";
    goals.push_back({base + (g.is_equality() ? " (below)" : ""), {below}});
    if (g.is_equality()) {
      GroundConstraint above = g;
      above.rel = Relation::Ge;
      above.poly = g.poly - Polynomial(eps);
      above.origin = "negated-query";
      goals.push_back({base + " (above)", {above}});
    }
  }
  return goals;
}

Polynomial parse_ground_polynomial(std::string_view text) {
  auto tokens = lex_line(text, 1);
  std::set<std::string> none;
  std::set<std::string> inferred;
  std::map<std::string, std::size_t> signature;
  LineParser p(std::move(tokens), none, signature, inferred);
  p.factor_mode_ = ArgMode::Ground;
  Expr e = p.parse_expr(false);
  p.expect_end();
  if (e.has_expect()) p.fail("E[...] not allowed here");
  return instantiate(e.random, Substitution{});
}

Atom parse_atom(std::string_view text) {
  Polynomial p = parse_ground_polynomial(text);
  if (p.terms().size() != 1 || p.terms().begin()->second != 1 || p.terms().begin()->first.degree() != 1)
    throw ParseError(1, 1, "expected a single atom, got '" + std::string(text) + "'");
  return p.terms().begin()->first.factors().front().first;
}

Monomial parse_ground_monomial(std::string_view text) {
  Polynomial p = parse_ground_polynomial(text);
  if (p.is_zero()) throw ParseError(1, 1, "expected a monomial");
  if (p.terms().size() != 1 || p.terms().begin()->second != 1)
    throw ParseError(1, 1, "expected a monomial, got '" + std::string(text) + "'");
  return p.terms().begin()->first;
}

}  // namespace sosr
