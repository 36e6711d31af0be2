#include "sosr/certificate.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "sosr/grounding.hpp"
#include "sosr/lang.hpp"

namespace sosr {

bool is_psd_exact(const std::vector<std::vector<Rational>>& q) {
  const std::size_t n = q.size();
  auto a = q;
  for (std::size_t k = 0; k < n; ++k) {
    if (a[k][k] < 0) return false;
    if (a[k][k] == 0) {
      for (std::size_t j = k + 1; j < n; ++j)
        if (a[k][j] != 0) return false;
      continue;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      if (a[i][k] == 0) continue;
      Rational f = a[i][k] / a[k][k];
      for (std::size_t j = k + 1; j < n; ++j) a[i][j] -= f * a[k][j];
      a[i][k] = 0;
    }
  }
  return true;
}

namespace {

Polynomial lift(const Polynomial& p, const Canonicalizer* canon) {
  if (!canon) return p;
  Polynomial out;
  for (const auto& [m, c] : p.terms()) out.add_term((*canon)(m), c);
  return out;
}

Polynomial gram_polynomial(const CertificateBlock& b) {
  Polynomial s;
  const std::size_t n = b.basis.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (b.gram[i][j] != 0) s.add_term(b.basis[i] * b.basis[j], b.gram[i][j]);
  return s;
}

double min_eigenvalue(const std::vector<std::vector<Rational>>& q) {
  const int n = static_cast<int>(q.size());
  if (n == 0) return 0;
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = to_double(q[i][j]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace

Polynomial certificate_identity(const Certificate& cert) {
  std::optional<Canonicalizer> canon;
  if (cert.lifted) canon.emplace(cert.constants);
  const Canonicalizer* c = canon ? &*canon : nullptr;
  Polynomial total;
  for (const auto& b : cert.blocks) total += lift(b.g * gram_polynomial(b), c);
  for (const auto& r : cert.rows) total += lift(r.b * r.multiplier, c);
  for (const auto& e : cert.equalities) total += lift(e.multiplier * e.h, c);
  return total;
}

VerifyReport verify_certificate(const Certificate& cert, double tol) {
  VerifyReport rep;
  for (const auto& b : cert.blocks) {
    if (b.gram.size() != b.basis.size()) {
      rep.message = "gram/basis size mismatch in block '" + b.label + "'";
      return rep;
    }
    for (std::size_t i = 0; i < b.gram.size(); ++i) {
      if (b.gram[i].size() != b.basis.size()) {
        rep.message = "gram matrix of block '" + b.label + "' is not square";
        return rep;
      }
      for (std::size_t j = 0; j < i; ++j)
        if (b.gram[i][j] != b.gram[j][i]) {
          rep.message = "gram matrix of block '" + b.label + "' is not symmetric";
          return rep;
        }
    }
  }
  Polynomial total = certificate_identity(cert);
  rep.constant = total.constant_term();
  if (!(rep.constant < 0)) {
    rep.message = "identity constant " + to_string(rep.constant) + " is not negative";
    return rep;
  }
  const double scale = std::abs(to_double(rep.constant));
  bool exact_identity = true;
  for (const auto& [m, c] : total.terms()) {
    if (m.is_constant()) continue;
    exact_identity = false;
    rep.max_residual = std::max(rep.max_residual, std::abs(to_double(c)) / scale);
  }
  bool exact_psd = true;
  rep.min_eigenvalue = 0;
  for (const auto& b : cert.blocks) {
    if (!is_psd_exact(b.gram)) {
      exact_psd = false;
      rep.min_eigenvalue = std::min(rep.min_eigenvalue, min_eigenvalue(b.gram) / scale);
    }
  }
  bool rows_ok = true;
  for (const auto& r : cert.rows) rows_ok = rows_ok && r.multiplier >= 0;
  rep.exact = exact_identity && exact_psd && rows_ok;
  if (!rows_ok) {
    rep.message = "negative row multiplier";
    return rep;
  }
  if (rep.max_residual > tol) {
    rep.message = "identity residual " + std::to_string(rep.max_residual) + " exceeds tolerance";
    return rep;
  }
  if (rep.min_eigenvalue < -tol) {
    rep.message = "gram matrix not PSD (min eigenvalue " + std::to_string(rep.min_eigenvalue) + ")";
    return rep;
  }
  if (rep.constant != cert.constant) {
    rep.message = "declared constant " + to_string(cert.constant) + " does not match identity constant " +
                  to_string(rep.constant);
    return rep;
  }
  rep.ok = true;
  rep.message = rep.exact ? "verified exactly" : "verified within tolerance";
  return rep;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

using nlohmann::json;

json gram_json(const std::vector<std::vector<Rational>>& q) {
  json out = json::array();
  for (const auto& row : q) {
    json r = json::array();
    for (const auto& v : row) r.push_back(to_string(v));
    out.push_back(std::move(r));
  }
  return out;
}

Rational rational_field(const json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<long>());
  if (j.is_number()) return from_double(j.get<double>());
  throw std::invalid_argument("expected a number or rational string");
}

}  // namespace

json to_json(const Certificate& cert) {
  json j;
  j["degree"] = cert.degree;
  j["k"] = cert.k;
  j["lifted"] = cert.lifted;
  j["constants"] = cert.constants;
  j["constant"] = to_string(cert.constant);
  j["exact"] = cert.exact;
  j["residual"] = cert.residual;
  j["tol"] = cert.tol;
  json blocks = json::array();
  for (const auto& b : cert.blocks) {
    json basis = json::array();
    for (const auto& m : b.basis) basis.push_back(m.str());
    blocks.push_back({{"label", b.label}, {"origin", b.origin}, {"g", b.g.str()}, {"basis", basis},
                      {"gram", gram_json(b.gram)}});
  }
  j["blocks"] = blocks;
  json rows = json::array();
  for (const auto& r : cert.rows)
    rows.push_back({{"label", r.label}, {"origin", r.origin}, {"b", r.b.str()}, {"multiplier", to_string(r.multiplier)}});
  j["rows"] = rows;
  json eqs = json::array();
  for (const auto& e : cert.equalities)
    eqs.push_back({{"label", e.label},
                   {"origin", e.origin},
                   {"h", e.h.str()},
                   {"multiplier", e.multiplier.str()},
                   {"expectation", e.expectation}});
  j["equalities"] = eqs;
  return j;
}

Certificate certificate_from_json(const json& j) {
  Certificate cert;
  cert.degree = j.value("degree", 2);
  cert.k = j.value("k", 0);
  cert.lifted = j.value("lifted", true);
  if (j.contains("constants")) cert.constants = j.at("constants").get<std::set<std::string>>();
  if (j.contains("constant")) cert.constant = rational_field(j.at("constant"));
  cert.exact = j.value("exact", false);
  cert.residual = j.value("residual", 0.0);
  cert.tol = j.value("tol", 1e-6);
  for (const auto& b : j.value("blocks", json::array())) {
    CertificateBlock blk;
    blk.label = b.value("label", "");
    blk.origin = b.value("origin", "");
    blk.g = parse_ground_polynomial(b.at("g").get<std::string>());
    for (const auto& m : b.at("basis")) blk.basis.push_back(parse_ground_monomial(m.get<std::string>()));
    for (const auto& row : b.at("gram")) {
      std::vector<Rational> r;
      for (const auto& v : row) r.push_back(rational_field(v));
      blk.gram.push_back(std::move(r));
    }
    cert.blocks.push_back(std::move(blk));
  }
  for (const auto& r : j.value("rows", json::array()))
    cert.rows.push_back({r.value("label", ""), r.value("origin", ""), parse_ground_polynomial(r.at("b").get<std::string>()),
                         rational_field(r.at("multiplier"))});
  for (const auto& e : j.value("equalities", json::array()))
    cert.equalities.push_back({e.value("label", ""), e.value("origin", ""),
                               parse_ground_polynomial(e.at("h").get<std::string>()),
                               parse_ground_polynomial(e.at("multiplier").get<std::string>()),
                               e.value("expectation", false)});
  // Without a declared constant there is nothing to cross-check.
  if (!j.contains("constant")) cert.constant = certificate_identity(cert).constant_term();
  return cert;
}

}  // namespace sosr
