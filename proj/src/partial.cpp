#include "sosr/partial.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace sosr {

namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_probability(std::string_view text) {
  std::string s(trim(text));
  std::size_t used = 0;
  double p = 0;
  try {
    p = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad probability '" + s + "'");
  }
  if (used != s.size() || !(p >= 0 && p <= 1)) throw std::invalid_argument("bad probability '" + s + "'");
  return p;
}

// Shortest decimal that round-trips, read back exactly: 0.3 becomes 3/10.
Rational json_rational(const json& v) {
  if (v.is_boolean()) return v.get<bool>() ? 1 : 0;
  if (v.is_number_integer()) return Rational(v.get<long>());
  if (v.is_number_unsigned()) return Rational(static_cast<unsigned long>(v.get<unsigned long>()));
  double d = v.get<double>();
  if (!std::isfinite(d)) throw std::invalid_argument("non-finite value");
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, d);
  return parse_rational(std::string(buf, res.ptr));
}

Atom checked_atom(const std::string& key, const KnowledgeBase* kb, int line) {
  Atom a;
  try {
    a = parse_atom(key);
  } catch (const std::exception& e) {
    throw DataError(line, "bad atom '" + key + "': " + e.what());
  }
  if (kb) {
    auto it = kb->signature.find(a.predicate);
    if (it == kb->signature.end()) throw DataError(line, "atom '" + key + "' uses a predicate not in the knowledge base");
    if (it->second != a.args.size())
      throw DataError(line, "atom '" + key + "' has arity " + std::to_string(a.args.size()) + ", expected " +
                                std::to_string(it->second));
  }
  return a;
}

template <class F>
void for_each_record(std::istream& in, F&& f) {
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (trim(text).empty()) continue;
    json rec;
    try {
      rec = json::parse(text);
    } catch (const json::parse_error& e) {
      throw DataError(line, std::string("malformed record: ") + e.what());
    }
    if (!rec.is_object()) throw DataError(line, "record is not an object");
    f(rec, line);
  }
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

bool MaskRule::matches(const Atom& a) const {
  if (predicate != "*" && predicate != a.predicate) return false;
  if (!args) return true;
  if (args->size() != a.args.size()) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if ((*args)[i] != "*" && (*args)[i] != a.args[i].str()) return false;
  return true;
}

double MaskSpec::hide_probability(const Atom& a) const {
  double p = default_probability;
  for (const auto& r : rules)
    if (r.matches(a)) p = r.probability;
  return p;
}

MaskSpec parse_mask(std::string_view text, std::uint64_t seed) {
  MaskSpec spec;
  spec.seed = seed;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(';', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view part = trim(text.substr(start, end - start));
    start = end + 1;
    if (part.empty()) continue;
    auto eq = part.rfind('=');
    if (eq == std::string_view::npos) {
      spec.default_probability = parse_probability(part);
      continue;
    }
    MaskRule rule;
    rule.probability = parse_probability(part.substr(eq + 1));
    std::string_view pat = trim(part.substr(0, eq));
    auto open = pat.find('(');
    if (open == std::string_view::npos) {
      rule.predicate = std::string(pat);
    } else {
      if (pat.back() != ')') throw std::invalid_argument("bad mask pattern '" + std::string(pat) + "'");
      rule.predicate = std::string(trim(pat.substr(0, open)));
      std::vector<std::string> args;
      std::string_view inner = pat.substr(open + 1, pat.size() - open - 2);
      std::size_t s = 0;
      while (s <= inner.size()) {
        std::size_t c = inner.find(',', s);
        if (c == std::string_view::npos) c = inner.size();
        std::string_view arg = trim(inner.substr(s, c - s));
        if (!arg.empty()) args.emplace_back(arg);
        s = c + 1;
      }
      rule.args = std::move(args);
    }
    if (rule.predicate.empty()) throw std::invalid_argument("bad mask pattern '" + std::string(pat) + "'");
    spec.rules.push_back(std::move(rule));
  }
  return spec;
}

double counter_uniform(std::uint64_t seed, std::uint64_t index, std::string_view key) {
  std::uint64_t x = splitmix(seed);
  x = splitmix(x ^ (index * 0xd1342543de82ef95ULL));
  x = splitmix(x ^ fnv1a(key));
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

std::vector<PartialModel> simulate(const WorldMixture& mix, const MaskSpec& mask, std::size_t m) {
  if (m == 0) throw std::invalid_argument("m must be at least 1");
  if (mix.worlds.empty()) throw std::invalid_argument("mixture has no worlds");
  double total = 0;
  for (const auto& w : mix.worlds) {
    if (w.probability < 0) throw std::invalid_argument("negative world probability");
    total += w.probability;
  }
  if (std::abs(total - 1) > 1e-9) throw std::invalid_argument("world probabilities sum to " + std::to_string(total));

  std::vector<PartialModel> out(m);
  for (std::size_t t = 0; t < m; ++t) {
    double u = counter_uniform(mask.seed, t, "\x01world");
    std::size_t pick = mix.worlds.size() - 1;
    double acc = 0;
    for (std::size_t i = 0; i < mix.worlds.size(); ++i) {
      acc += mix.worlds[i].probability;
      if (u < acc) {
        pick = i;
        break;
      }
    }
    auto& rho = out[t];
    for (const auto& [atom, value] : mix.worlds[pick].values) {
      double p = mask.hide_probability(atom);
      bool hidden = counter_uniform(mask.seed, t, atom.str()) < p;
      rho.values.emplace(atom, hidden ? std::nullopt : std::optional<Rational>(value));
    }
  }
  return out;
}

std::vector<PartialModel> parse_partial_models(std::istream& in, const KnowledgeBase* kb) {
  std::vector<PartialModel> out;
  for_each_record(in, [&](const json& rec, int line) {
    PartialModel rho;
    for (const auto& [key, v] : rec.items()) {
      Atom a = checked_atom(key, kb, line);
      if (v.is_null()) {
        rho.values[a] = std::nullopt;
      } else if (v.is_number() || v.is_boolean()) {
        try {
          rho.values[a] = json_rational(v);
        } catch (const std::exception& e) {
          throw DataError(line, "bad value for '" + key + "': " + e.what());
        }
      } else {
        throw DataError(line, "value of '" + key + "' must be a number or null");
      }
    }
    out.push_back(std::move(rho));
  });
  if (out.empty()) throw DataError(0, "empty dataset");
  return out;
}

std::vector<PartialModel> load_partial_models(const std::string& path, const KnowledgeBase* kb) {
  std::ifstream in(path);
  if (!in) throw DataError(0, "cannot open " + path);
  return parse_partial_models(in, kb);
}

void write_partial_models(std::ostream& out, const std::vector<PartialModel>& data) {
  for (const auto& rho : data) {
    json rec = json::object();
    for (const auto& [a, v] : rho.values) {
      if (!v) {
        rec[a.str()] = nullptr;
      } else if (v->get_den() == 1 && v->get_num().fits_slong_p()) {
        rec[a.str()] = v->get_num().get_si();
      } else {
        rec[a.str()] = to_double(*v);
      }
    }
    out << rec.dump() << '\n';
  }
}

WorldMixture parse_mixture(std::istream& in, const KnowledgeBase* kb) {
  WorldMixture mix;
  for_each_record(in, [&](const json& rec, int line) {
    World w;
    if (!rec.contains("prob") || !rec.at("prob").is_number()) throw DataError(line, "world needs a numeric 'prob'");
    w.probability = rec.at("prob").get<double>();
    for (const auto& [key, v] : rec.items()) {
      if (key == "prob") continue;
      if (!v.is_number() && !v.is_boolean()) throw DataError(line, "world value of '" + key + "' must be a number");
      w.values[checked_atom(key, kb, line)] = json_rational(v);
    }
    mix.worlds.push_back(std::move(w));
  });
  if (mix.worlds.empty()) throw DataError(0, "mixture has no worlds");
  return mix;
}

WorldMixture load_mixture(const std::string& path, const KnowledgeBase* kb) {
  std::ifstream in(path);
  if (!in) throw DataError(0, "cannot open " + path);
  return parse_mixture(in, kb);
}

void check_data_bounds(const std::vector<PartialModel>& data, const BoundsTable& table) {
  for (std::size_t t = 0; t < data.size(); ++t)
    for (const auto& [a, v] : data[t].values) {
      if (!v) continue;
      auto b = table.atom_bounds(a);
      if (b && !b->contains(*v))
        throw DataConflict("example " + std::to_string(t + 1) + ": value " + to_string(*v) + " of '" + a.str() + "' is outside [" +
                                                     to_string(b->lo) + ", " + to_string(b->hi) + "]");
    }
}

// ---------------------------------------------------------------------------
// Tightest bounds

TightestBounds::TightestBounds(std::vector<GroundConstraint> logical, const BoundsTable& bounds, int degree,
                               SolveOptions options)
    : logical_(std::move(logical)), table_(bounds), degree_(degree), options_(options) {}

TightestBounds::Example TightestBounds::prepare(const PartialModel& rho) const {
  Example ex;
  ex.rho = rho;
  for (const auto& g : logical_) {
    Polynomial p = partial_evaluate(g.poly, rho);
    if (p.is_constant()) {
      Rational c = p.constant_term();
      if (g.is_equality() ? c != 0 : c < 0)
        throw DataConflict("example violates " + g.str() + " (restricts to " + to_string(c) + ")");
      continue;
    }
    ex.restricted.push_back(std::move(p));
    ex.equality.push_back(g.is_equality());
  }

  std::map<Atom, int> index;
  std::vector<int> parent;
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<int> first_atom(ex.restricted.size());
  for (std::size_t i = 0; i < ex.restricted.size(); ++i) {
    int prev = -1;
    for (const auto& a : ex.restricted[i].atoms()) {
      auto [it, fresh] = index.try_emplace(a, static_cast<int>(parent.size()));
      if (fresh) parent.push_back(it->second);
      if (prev >= 0) parent[find(it->second)] = find(prev);
      prev = it->second;
    }
    first_atom[i] = prev;
  }
  std::map<int, int> component_of_root;
  for (const auto& [a, id] : index) {
    auto [it, fresh] = component_of_root.try_emplace(find(id), static_cast<int>(component_of_root.size()));
    ex.component[a] = it->second;
  }
  ex.component_constraints.resize(component_of_root.size());
  for (std::size_t i = 0; i < ex.restricted.size(); ++i)
    ex.component_constraints[component_of_root.at(find(first_atom[i]))].push_back(static_cast<int>(i));
  return ex;
}

std::pair<double, double> TightestBounds::bounds(const Monomial& v, const Example& ex) {
  auto [c, w] = partial_evaluate(v, ex.rho);
  if (w.is_constant()) {
    double x = to_double(c);
    return {x, x};
  }
  Interval naive = table_.require(w);
  std::pair<double, double> r{to_double(naive.lo), to_double(naive.hi)};

  std::set<int> comps;
  for (const auto& a : w.atoms())
    if (auto it = ex.component.find(a); it != ex.component.end()) comps.insert(it->second);
  std::vector<Polynomial> cons;
  std::vector<bool> eq;
  for (int comp : comps)
    for (int i : ex.component_constraints[comp]) {
      if (ex.restricted[i].degree() > degree_) continue;
      cons.push_back(ex.restricted[i]);
      eq.push_back(ex.equality[i]);
    }
  if (!cons.empty() && w.degree() <= degree_) {
    auto [lo, hi] = solve_component(Polynomial(w), cons, eq);
    r.first = std::max(r.first, lo);
    r.second = std::min(r.second, hi);
    if (r.first > r.second) r.first = r.second = 0.5 * (r.first + r.second);
  }

  double s = to_double(c);
  std::pair<double, double> out{s * r.first, s * r.second};
  if (s < 0) std::swap(out.first, out.second);
  if (auto global = table_.bounds(v)) {
    out.first = std::clamp(out.first, to_double(global->lo), to_double(global->hi));
    out.second = std::clamp(out.second, out.first, to_double(global->hi));
  }
  return out;
}

std::pair<double, double> TightestBounds::solve_component(const Polynomial& target,
                                                          const std::vector<Polynomial>& constraints,
                                                          const std::vector<bool>& equality) {
  // Rename atoms positionally so that structurally identical problems from
  // different examples share one solve, and solve the renamed problem so the
  // result does not depend on which example got there first.
  std::set<Atom> atoms = target.atoms();
  for (const auto& p : constraints) {
    auto a = p.atoms();
    atoms.insert(a.begin(), a.end());
  }
  std::map<Atom, Atom> rename;
  BoundsTable local;
  std::string key;
  for (const auto& a : atoms) {
    Atom r{"x" + std::to_string(rename.size()), {}};
    Interval b = table_.require(Monomial(a));
    local.bound_atom(r, b);
    key += r.predicate + "[" + to_string(b.lo) + "," + to_string(b.hi) + "]";
    rename.emplace(a, std::move(r));
  }
  auto relabel = [&](const Polynomial& p) {
    Polynomial out;
    for (const auto& [m, coef] : p.terms()) {
      std::vector<Monomial::Factor> fs;
      for (const auto& [a, e] : m.factors()) fs.emplace_back(rename.at(a), e);
      out.add_term(Monomial(std::move(fs)), coef);
    }
    return out;
  };
  ProgramSpec spec;
  std::vector<std::string> parts;
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    GroundConstraint g{GroundConstraint::Kind::Logical, relabel(constraints[i]),
                       equality[i] ? Relation::Eq : Relation::Ge, "restricted"};
    parts.push_back(g.str());
    spec.logical.push_back(std::move(g));
  }
  std::sort(parts.begin(), parts.end());
  for (const auto& p : parts) key += ";" + p;
  Polynomial goal = relabel(target);
  key += "|" + goal.str();

  if (auto it = cache_.find(key); it != cache_.end()) {
    if (std::isnan(it->second.first)) throw DataConflict("example is inconsistent with the knowledge base");
    return it->second;
  }

  std::sort(spec.logical.begin(), spec.logical.end());
  for (const auto& [a, r] : rename) spec.extra_atoms.insert(r);
  spec.bounds = &local;
  spec.degree = degree_;
  SosProgram prog = assemble_program(spec);
  const Monomial& v = goal.terms().begin()->first;
  ++solves_;
  OptimizeResult lo = optimize_variable(prog, v, false, options_);
  OptimizeResult hi = optimize_variable(prog, v, true, options_);
  Interval naive = local.require(v);
  std::pair<double, double> out{to_double(naive.lo), to_double(naive.hi)};
  if (!lo.ok || !hi.ok) {
    FeasibilityResult f = solve_feasibility(prog, options_);
    if (f.verdict == Feasibility::Infeasible) {
      cache_[key] = {std::nan(""), std::nan("")};
      throw DataConflict("example is inconsistent with the knowledge base");
    }
  }
  if (lo.ok) out.first = std::max(out.first, lo.value);
  if (hi.ok) out.second = std::min(out.second, hi.value);
  cache_[key] = out;
  return out;
}

bool is_witnessed(const Polynomial& p, const TightestBounds::Example& ex, TightestBounds& tb, double tol) {
  double total = 0;
  for (const auto& [m, c] : p.terms()) {
    double coef = to_double(c);
    if (m.is_constant()) {
      total += coef;
      continue;
    }
    auto [lo, hi] = tb.bounds(m, ex);
    total += coef * (coef > 0 ? lo : hi);
  }
  return total >= -tol;
}

Testability estimate_testability(const std::vector<Polynomial>& constraints, const std::vector<PartialModel>& data,
                                 TightestBounds& tb) {
  if (data.empty()) throw DataError(0, "empty dataset");
  std::map<PartialModel, std::size_t> counts;
  for (const auto& rho : data) ++counts[rho];
  Testability out;
  out.examples = data.size();
  std::vector<std::size_t> hits(constraints.size(), 0);
  std::size_t joint = 0;
  for (const auto& [rho, n] : counts) {
    auto ex = tb.prepare(rho);
    bool all = true;
    for (std::size_t i = 0; i < constraints.size(); ++i) {
      if (is_witnessed(constraints[i], ex, tb))
        hits[i] += n;
      else
        all = false;
    }
    if (all) joint += n;
  }
  const double m = static_cast<double>(data.size());
  out.joint = static_cast<double>(joint) / m;
  for (auto h : hits) out.per_constraint.push_back(static_cast<double>(h) / m);
  return out;
}

}  // namespace sosr
