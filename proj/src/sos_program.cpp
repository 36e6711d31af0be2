#include "sosr/sos.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace sosr {

void Affine::add(const Affine& o, const Rational& scale) {
  if (scale == 0) return;
  constant += scale * o.constant;
  for (const auto& [v, c] : o.terms) {
    auto [it, inserted] = terms.try_emplace(v, scale * c);
    if (!inserted) {
      it->second += scale * c;
      if (it->second == 0) terms.erase(it);
    }
  }
}

Affine MomentVariables::moment(const Monomial& m) {
  Affine out;
  if (m.is_constant()) {
    out.constant = 1;
    return out;
  }
  Monomial key = lifted(m);
  auto [it, inserted] = ids_.try_emplace(key, static_cast<int>(representatives_.size()));
  if (inserted) {
    representatives_.push_back(key);
    members_.push_back(m);
  }
  out.terms[it->second] = 1;
  return out;
}

Affine MomentVariables::expectation(const Polynomial& p) {
  Affine out;
  for (const auto& [m, c] : p.terms()) out.add(moment(m), c);
  return out;
}

std::optional<int> MomentVariables::find(const Monomial& m) const {
  auto it = ids_.find(lifted(m));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::vector<Monomial> monomials_up_to(const std::set<Atom>& atoms, int max_degree) {
  std::vector<Atom> list(atoms.begin(), atoms.end());
  std::vector<Monomial> out;
  std::vector<Monomial::Factor> current;
  std::function<void(std::size_t, int)> rec = [&](std::size_t start, int remaining) {
    out.emplace_back(current);
    if (remaining == 0) return;
    for (std::size_t i = start; i < list.size(); ++i) {
      bool same = !current.empty() && current.back().first == list[i];
      if (same)
        ++current.back().second;
      else
        current.emplace_back(list[i], 1);
      rec(i, remaining - 1);
      if (same)
        --current.back().second;
      else
        current.pop_back();
    }
  };
  rec(0, std::max(0, max_degree));
  std::stable_sort(out.begin(), out.end(), [](const Monomial& a, const Monomial& b) { return graded_less(a, b); });
  return out;
}

const Affine& PsdBlock::entry(int i, int j) const {
  if (i > j) std::swap(i, j);
  const int n = size();
  return entries[static_cast<std::size_t>(i) * n - static_cast<std::size_t>(i) * (i - 1) / 2 + (j - i)];
}

PsdBlock build_localizing_matrix(const Polynomial& g, const std::vector<Monomial>& basis, MomentVariables& vars) {
  PsdBlock b;
  b.g = g;
  b.basis = basis;
  const int n = static_cast<int>(basis.size());
  b.entries.reserve(static_cast<std::size_t>(n) * (n + 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) b.entries.push_back(vars.expectation(g * (basis[i] * basis[j])));
  return b;
}

PsdBlock build_moment_matrix(const std::vector<Monomial>& basis, MomentVariables& vars) {
  PsdBlock b = build_localizing_matrix(Polynomial(Rational(1)), basis, vars);
  b.label = "moment";
  b.origin = "moment";
  return b;
}

SosProgram assemble_program(const ProgramSpec& spec) {
  const int d = spec.degree;
  if (d < 2 || d % 2) throw DegreeError("degree must be an even number >= 2, got " + std::to_string(d));
  if (!spec.bounds) throw CompactnessError("no bounds table supplied");

  SosProgram prog;
  prog.degree = d;
  prog.k = spec.k;
  prog.vars = MomentVariables(spec.lift);
  if (spec.lift) prog.constants = spec.lift->constants();
  prog.atoms = spec.extra_atoms;
  for (const auto* list : {&spec.logical, &spec.expectation})
    for (const auto& g : *list) {
      auto a = g.poly.atoms();
      prog.atoms.insert(a.begin(), a.end());
    }
  auto report = check_explicit_compactness(prog.atoms, *spec.bounds);
  if (!report.ok) {
    std::string names;
    for (std::size_t i = 0; i < report.unbounded.size() && i < 5; ++i)
      names += (i ? ", " : "") + report.unbounded[i].str();
    throw CompactnessError("no finite bounds for " + names + (report.unbounded.size() > 5 ? ", ..." : ""));
  }

  prog.basis = monomials_up_to(prog.atoms, d / 2);
  prog.blocks.push_back(build_moment_matrix(prog.basis, prog.vars));

  for (const auto& g : spec.logical) {
    int dg = g.poly.degree();
    if (dg > d)
      throw DegreeError("constraint " + g.str() + " has degree " + std::to_string(dg) + " > " + std::to_string(d));
    if (g.is_equality()) {
      for (const Monomial& shift : monomials_up_to(prog.atoms, d - dg)) {
        EqualityRow row{g.str(), g.origin, g.poly, shift, false, prog.vars.expectation(g.poly * shift)};
        prog.equalities.push_back(std::move(row));
      }
    } else {
      PsdBlock b = build_localizing_matrix(g.poly, monomials_up_to(prog.atoms, (d - dg) / 2), prog.vars);
      b.label = g.str();
      b.origin = g.origin;
      prog.blocks.push_back(std::move(b));
    }
  }
  for (const auto& g : spec.expectation) {
    int dg = g.poly.degree();
    if (dg > d)
      throw DegreeError("expectation constraint " + g.str() + " has degree " + std::to_string(dg) + " > " +
                        std::to_string(d));
    if (g.is_equality())
      prog.equalities.push_back({g.str(), g.origin, g.poly, Monomial{}, true, prog.vars.expectation(g.poly)});
    else
      prog.rows.push_back({g.str(), g.origin, g.poly, prog.vars.expectation(g.poly)});
  }

  // Learned and compactness rows for every moment variable in the program.
  const int nvars = prog.vars.size();
  for (int id = 0; id < nvars; ++id) {
    const Monomial& member = prog.vars.member(id);
    const Polynomial mono(member);
    if (spec.learned) {
      auto it = spec.learned->find(prog.vars.representative(id));
      if (it != spec.learned->end()) {
        const Interval& iv = it->second;
        std::string label = "learned " + prog.vars.representative(id).str();
        if (iv.lo == iv.hi) {
          Polynomial h = mono - Polynomial(iv.lo);
          prog.equalities.push_back({label, "learned", h, Monomial{}, true, prog.vars.expectation(h)});
        } else {
          Polynomial lo = mono - Polynomial(iv.lo), hi = Polynomial(iv.hi) - mono;
          prog.rows.push_back({label + " lower", "learned", lo, prog.vars.expectation(lo)});
          prog.rows.push_back({label + " upper", "learned", hi, prog.vars.expectation(hi)});
        }
      }
    }
    Interval iv = spec.bounds->require(member);
    if (iv.empty()) throw CompactnessError("empty bounds for " + member.str());
    if (iv.lo == iv.hi) {
      Polynomial h = mono - Polynomial(iv.lo);
      prog.equalities.push_back({h.str() + " = 0", "bound", h, Monomial{}, false, prog.vars.expectation(h)});
      continue;
    }
    for (const Polynomial& g : {mono - Polynomial(iv.lo), Polynomial(iv.hi) - mono}) {
      PsdBlock b = build_localizing_matrix(g, {Monomial{}}, prog.vars);
      b.label = g.str() + " >= 0";
      b.origin = "bound";
      prog.blocks.push_back(std::move(b));
    }
  }
  return prog;
}

std::string feasibility_name(Feasibility f) {
  switch (f) {
    case Feasibility::Feasible:
      return "feasible";
    case Feasibility::Infeasible:
      return "infeasible";
    case Feasibility::Unknown:
      return "unknown";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Exact elimination of equality rows and reduction to an LMI.

namespace {

struct ReducedRow {
  int pivot = -1;
  Affine form;                         // pivot coefficient 1, other terms free
  std::map<int, Rational> transform;  // combination of original rows
};

struct Elimination {
  std::vector<ReducedRow> rows;
  std::map<int, int> pivot_row;
  bool inconsistent = false;
  std::map<int, Rational> conflict;
  Rational conflict_constant = 0;

  Affine substitute(const Affine& a) const {
    Affine out = a;
    for (const auto& [v, c] : a.terms) {
      auto it = pivot_row.find(v);
      if (it == pivot_row.end()) continue;
      const Rational coef = c;
      const auto& row = rows[it->second];
      out.add(row.form, -coef);
      // row.form has pivot coefficient 1, so v cancels.
    }
    return out;
  }
};

void add_transform(std::map<int, Rational>& dst, const std::map<int, Rational>& src, const Rational& scale) {
  for (const auto& [k, c] : src) {
    auto [it, inserted] = dst.try_emplace(k, scale * c);
    if (!inserted) {
      it->second += scale * c;
      if (it->second == 0) dst.erase(it);
    }
  }
}

Elimination eliminate(const std::vector<EqualityRow>& eqs) {
  Elimination e;
  for (int i = 0; i < static_cast<int>(eqs.size()); ++i) {
    ReducedRow r;
    r.form = eqs[i].form;
    r.transform[i] = 1;
    std::vector<std::pair<int, Rational>> hits;
    for (const auto& [v, c] : r.form.terms)
      if (e.pivot_row.count(v)) hits.emplace_back(v, c);
    for (const auto& [v, c] : hits) {
      const auto& pr = e.rows[e.pivot_row[v]];
      r.form.add(pr.form, -c);
      add_transform(r.transform, pr.transform, -c);
    }
    if (r.form.terms.empty()) {
      if (r.form.constant != 0) {
        e.inconsistent = true;
        e.conflict = r.transform;
        e.conflict_constant = r.form.constant;
        return e;
      }
      continue;
    }
    r.pivot = r.form.terms.rbegin()->first;
    Rational inv = 1 / r.form.terms.rbegin()->second;
    Affine scaled;
    scaled.add(r.form, inv);
    r.form = std::move(scaled);
    std::map<int, Rational> t;
    add_transform(t, r.transform, inv);
    r.transform = std::move(t);
    for (auto& other : e.rows) {
      auto it = other.form.terms.find(r.pivot);
      if (it == other.form.terms.end()) continue;
      Rational c = it->second;
      other.form.add(r.form, -c);
      add_transform(other.transform, r.transform, -c);
    }
    e.pivot_row[r.pivot] = static_cast<int>(e.rows.size());
    e.rows.push_back(std::move(r));
  }
  return e;
}

// Which LMI slot holds each scalar item.
struct ScalarItem {
  bool is_row = false;  // MomentRow, else a 1x1 PsdBlock
  int index = 0;
};

struct Reduction {
  Elimination elim;
  std::map<int, int> free_index;  // var id -> LMI variable
  std::vector<int> free_vars;
  Lmi lmi;
  std::vector<int> dense_blocks;  // program block index per dense LMI block
  std::vector<ScalarItem> scalars;
  int scalar_block = -1;
};

void append(std::vector<SdpEntry>& constant, std::vector<std::vector<SdpEntry>>& coeffs, const Reduction& red,
            const Affine& a, int block, int row, int col) {
  if (a.constant != 0) constant.push_back({block, row, col, to_double(a.constant)});
  for (const auto& [v, c] : a.terms) coeffs[red.free_index.at(v)].push_back({block, row, col, to_double(c)});
}

Reduction reduce(const SosProgram& prog) {
  Reduction red;
  red.elim = eliminate(prog.equalities);
  if (red.elim.inconsistent) return red;
  for (int v = 0; v < prog.vars.size(); ++v) {
    if (red.elim.pivot_row.count(v)) continue;
    red.free_index[v] = static_cast<int>(red.free_vars.size());
    red.free_vars.push_back(v);
  }
  Lmi& lmi = red.lmi;
  lmi.num_vars = static_cast<int>(red.free_vars.size());
  lmi.coefficient.assign(lmi.num_vars, {});
  for (int b = 0; b < static_cast<int>(prog.blocks.size()); ++b) {
    if (prog.blocks[b].size() == 1) {
      red.scalars.push_back({false, b});
      continue;
    }
    int lb = static_cast<int>(lmi.blocks.size());
    lmi.blocks.push_back({false, prog.blocks[b].size()});
    red.dense_blocks.push_back(b);
    const auto& blk = prog.blocks[b];
    for (int i = 0; i < blk.size(); ++i)
      for (int j = i; j < blk.size(); ++j)
        append(lmi.constant, lmi.coefficient, red, red.elim.substitute(blk.entry(i, j)), lb, i, j);
  }
  for (int r = 0; r < static_cast<int>(prog.rows.size()); ++r) red.scalars.push_back({true, r});
  if (!red.scalars.empty()) {
    red.scalar_block = static_cast<int>(lmi.blocks.size());
    lmi.blocks.push_back({true, static_cast<int>(red.scalars.size())});
    for (int s = 0; s < static_cast<int>(red.scalars.size()); ++s) {
      const auto& item = red.scalars[s];
      const Affine& a = item.is_row ? prog.rows[item.index].form : prog.blocks[item.index].entries.front();
      append(lmi.constant, lmi.coefficient, red, red.elim.substitute(a), red.scalar_block, s, s);
    }
  }
  return red;
}

std::map<Monomial, double> moment_values(const SosProgram& prog, const Reduction& red, const Eigen::VectorXd& y) {
  std::vector<double> value(prog.vars.size(), 0.0);
  for (std::size_t i = 0; i < red.free_vars.size(); ++i) value[red.free_vars[i]] = y(static_cast<int>(i));
  for (const auto& row : red.elim.rows) {
    // pivot + sum c v + const = 0
    double v = -to_double(row.form.constant);
    for (const auto& [var, c] : row.form.terms)
      if (var != row.pivot) v -= to_double(c) * value[var];
    value[row.pivot] = v;
  }
  std::map<Monomial, double> out;
  for (int i = 0; i < prog.vars.size(); ++i) out[prog.vars.representative(i)] = value[i];
  return out;
}

// Rational LDL' with a small diagonal shift until it passes.
std::vector<std::vector<Rational>> rounded_psd(const Eigen::MatrixXd& x, long max_den) {
  const int n = static_cast<int>(x.rows());
  std::vector<std::vector<Rational>> q(n, std::vector<Rational>(n));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      q[i][j] = round_rational(0.5 * (x(i, j) + x(j, i)), max_den);
      q[j][i] = q[i][j];
    }
  if (is_psd_exact(q)) return q;
  Eigen::MatrixXd qd(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) qd(i, j) = to_double(q[i][j]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(qd, Eigen::EigenvaluesOnly);
  double delta = std::max(0.0, -es.eigenvalues()(0)) + 1e-9;
  for (int attempt = 0; attempt < 12; ++attempt, delta *= 4) {
    Rational shift(static_cast<long>(std::ceil(delta * 1e9)), 1'000'000'000L);
    auto shifted = q;
    for (int i = 0; i < n; ++i) shifted[i][i] += shift;
    if (is_psd_exact(shifted)) return shifted;
  }
  return q;
}

std::optional<Certificate> exact_certificate(const SosProgram& prog, const Reduction& red, const SdpSolution& sol,
                                             long max_den) {
  const double c = sol.primal_objective;
  if (!(c < 0)) return std::nullopt;
  const double s = 1.0 / -c;

  Certificate cert;
  cert.degree = prog.degree;
  cert.k = prog.k;
  cert.lifted = prog.vars.is_lifted();
  cert.constants = prog.constants;

  Affine total;
  std::map<int, Rational> block_scalar;  // 1x1 blocks by program index
  std::map<int, std::vector<std::vector<Rational>>> grams;
  for (std::size_t lb = 0; lb < red.dense_blocks.size(); ++lb) {
    int b = red.dense_blocks[lb];
    auto q = rounded_psd(sol.X[lb] * s, max_den);
    const auto& blk = prog.blocks[b];
    for (int i = 0; i < blk.size(); ++i)
      for (int j = i; j < blk.size(); ++j)
        if (q[i][j] != 0) total.add(blk.entry(i, j), i == j ? q[i][j] : Rational(2 * q[i][j]));
    grams[b] = std::move(q);
  }
  std::map<int, Rational> row_mult;
  for (std::size_t si = 0; si < red.scalars.size(); ++si) {
    double v = sol.X[red.scalar_block](static_cast<int>(si), 0) * s;
    Rational r = v > 0 ? round_rational(v, max_den) : Rational(0);
    const auto& item = red.scalars[si];
    if (item.is_row) {
      row_mult[item.index] = r;
      total.add(prog.rows[item.index].form, r);
    } else {
      block_scalar[item.index] = r;
      total.add(prog.blocks[item.index].entries.front(), r);
    }
  }

  // Equality multipliers cancel the pivot coefficients exactly.
  std::map<int, Rational> lambda;
  for (const auto& row : red.elim.rows) {
    auto it = total.terms.find(row.pivot);
    if (it == total.terms.end()) continue;
    add_transform(lambda, row.transform, it->second);
  }
  for (const auto& [i, l] : lambda) total.add(prog.equalities[i].form, -l);

  // Remaining free coefficients go onto the bound rows of each variable.
  std::map<int, std::pair<int, int>> bound_blocks;  // var -> (lower, upper)
  for (int b = 0; b < static_cast<int>(prog.blocks.size()); ++b) {
    const auto& blk = prog.blocks[b];
    if (blk.origin != "bound" || blk.entries.front().terms.size() != 1) continue;
    const auto& [v, coef] = *blk.entries.front().terms.begin();
    auto& slot = bound_blocks.try_emplace(v, std::make_pair(-1, -1)).first->second;
    (coef > 0 ? slot.first : slot.second) = b;
  }
  const auto residual = total.terms;
  for (const auto& [v, rho] : residual) {
    auto it = bound_blocks.find(v);
    if (it == bound_blocks.end()) return std::nullopt;
    int b = rho < 0 ? it->second.first : it->second.second;
    if (b < 0) return std::nullopt;
    Rational add = abs(rho);
    block_scalar[b] += add;
    total.add(prog.blocks[b].entries.front(), add);
  }
  if (!total.terms.empty() || !(total.constant < 0)) return std::nullopt;

  for (const auto& [b, q] : grams) {
    bool nonzero = false;
    for (const auto& r : q)
      for (const auto& v : r) nonzero = nonzero || v != 0;
    if (!nonzero) continue;
    const auto& blk = prog.blocks[b];
    cert.blocks.push_back({blk.label, blk.origin, blk.g, blk.basis, q});
  }
  for (const auto& [b, r] : block_scalar) {
    if (r == 0) continue;
    const auto& blk = prog.blocks[b];
    cert.blocks.push_back({blk.label, blk.origin, blk.g, blk.basis, {{r}}});
  }
  for (const auto& [i, r] : row_mult) {
    if (r == 0) continue;
    const auto& row = prog.rows[i];
    cert.rows.push_back({row.label, row.origin, row.b, r});
  }
  std::map<std::pair<std::string, std::string>, std::size_t> eq_slot;
  for (const auto& [i, l] : lambda) {
    const auto& eq = prog.equalities[i];
    auto key = std::make_pair(eq.origin, eq.label);
    auto [it, inserted] = eq_slot.try_emplace(key, cert.equalities.size());
    if (inserted) cert.equalities.push_back({eq.label, eq.origin, eq.h, Polynomial{}, eq.expectation});
    cert.equalities[it->second].multiplier += Polynomial(eq.shift, Rational(-l));
  }
  cert.equalities.erase(std::remove_if(cert.equalities.begin(), cert.equalities.end(),
                                       [](const CertificateEquality& e) { return e.multiplier.is_zero(); }),
                        cert.equalities.end());
  cert.constant = total.constant;
  cert.exact = true;
  cert.residual = 0;
  return cert;
}

Certificate conflict_certificate(const SosProgram& prog, const Elimination& elim) {
  Certificate cert;
  cert.degree = prog.degree;
  cert.k = prog.k;
  cert.lifted = prog.vars.is_lifted();
  cert.constants = prog.constants;
  // sum_i t_i form_i == conflict_constant; flip the sign to make it negative.
  Rational sign = elim.conflict_constant > 0 ? Rational(-1) : Rational(1);
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  for (const auto& [i, t] : elim.conflict) {
    const auto& eq = prog.equalities[i];
    auto key = std::make_pair(eq.origin, eq.label);
    auto [it, inserted] = slot.try_emplace(key, cert.equalities.size());
    if (inserted) cert.equalities.push_back({eq.label, eq.origin, eq.h, Polynomial{}, eq.expectation});
    cert.equalities[it->second].multiplier += Polynomial(eq.shift, Rational(sign * t));
  }
  cert.constant = sign * elim.conflict_constant;
  cert.exact = true;
  return cert;
}

}  // namespace

FeasibilityResult solve_feasibility(const SosProgram& prog, const SolveOptions& options) {
  FeasibilityResult out;
  Reduction red = reduce(prog);
  if (red.elim.inconsistent) {
    out.verdict = Feasibility::Infeasible;
    out.status = SdpStatus::Optimal;
    out.certificate = conflict_certificate(prog, red.elim);
    out.message = "equality constraints are inconsistent";
    return out;
  }
  PhaseOneResult p1 = solve_phase_one(red.lmi, options.sdp);
  out.t = p1.t;
  out.status = p1.solution.status;
  out.iterations = p1.solution.iterations;
  if (p1.solution.y.size() == red.lmi.num_vars + 1) {
    Eigen::VectorXd y = p1.solution.y.head(red.lmi.num_vars);
    out.moments = moment_values(prog, red, y);
  }
  if (p1.solution.status == SdpStatus::NumericalFailure && p1.solution.X.empty()) {
    out.message = "solver failed";
    return out;
  }
  if (p1.t <= options.tol) {
    out.verdict = Feasibility::Feasible;
    if (p1.solution.status != SdpStatus::Optimal) out.message = "solver " + status_name(p1.solution.status);
    return out;
  }
  auto cert = exact_certificate(prog, red, p1.solution, options.max_denominator);
  if (cert) {
    VerifyReport vr = verify_certificate(*cert, 1e-6);
    if (vr.ok) {
      cert->exact = vr.exact;
      cert->residual = vr.max_residual;
      out.verdict = Feasibility::Infeasible;
      out.certificate = std::move(cert);
      return out;
    }
    out.message = "certificate rejected: " + vr.message;
  } else {
    out.message = "no certificate could be extracted (t = " + std::to_string(p1.t) + ")";
  }
  out.verdict = Feasibility::Unknown;
  return out;
}

OptimizeResult optimize_variable(const SosProgram& prog, const Monomial& v, bool maximize,
                                 const SolveOptions& options) {
  OptimizeResult out;
  Reduction red = reduce(prog);
  if (red.elim.inconsistent) return out;
  Affine target;
  if (v.is_constant()) {
    target.constant = 1;
  } else {
    auto id = prog.vars.find(v);
    if (!id) throw std::invalid_argument("monomial " + v.str() + " is not a variable of the program");
    target.terms[*id] = 1;
  }
  target = red.elim.substitute(target);
  if (target.terms.empty()) {
    out.ok = true;
    out.value = to_double(target.constant);
    out.status = SdpStatus::Optimal;
    return out;
  }
  const double sign = maximize ? 1.0 : -1.0;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(red.lmi.num_vars);
  for (const auto& [var, c] : target.terms) b(red.free_index.at(var)) = sign * to_double(c);
  auto usable = [](const SdpSolution& s) {
    return s.status == SdpStatus::Optimal ||
           (s.status == SdpStatus::Stalled && s.primal_infeasibility < 1e-6 && s.dual_infeasibility < 1e-6);
  };
  SdpSolution sol = solve_sdp(red.lmi, b, options.sdp);
  double pad = 0;
  if (!usable(sol)) {
    // No interior point (e.g. a moment pinned to a bound). F(y) + eps I >= 0
    // contains the original set, so its optimum still bounds ours.
    constexpr double eps = 1e-7;
    Lmi relaxed = red.lmi;
    for (std::size_t j = 0; j < relaxed.blocks.size(); ++j)
      for (int i = 0; i < relaxed.blocks[j].size; ++i) relaxed.constant.push_back({static_cast<int>(j), i, i, eps});
    sol = solve_sdp(relaxed, b, options.sdp);
    pad = 1e-6;
  }
  out.status = sol.status;
  if (!usable(sol)) return out;
  double upper = std::max(sol.primal_objective, sol.dual_objective);
  pad += 1e-7 * (1 + std::abs(upper));
  double constant = to_double(target.constant);
  out.ok = true;
  out.value = maximize ? constant + upper + pad : constant - upper - pad;
  return out;
}

}  // namespace sosr
