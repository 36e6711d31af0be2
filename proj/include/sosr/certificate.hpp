#pragma once

#include "json.hpp"

#include <set>
#include <string>
#include <vector>

#include "sosr/polynomial.hpp"

namespace sosr {

// sigma = v' Q v contributes e(g * sigma).
struct CertificateBlock {
  std::string label;
  std::string origin;
  Polynomial g;
  std::vector<Monomial> basis;
  std::vector<std::vector<Rational>> gram;
};

// r * e(b) with r >= 0.
struct CertificateRow {
  std::string label;
  std::string origin;
  Polynomial b;
  Rational multiplier;
};

// e(lambda * h) with h = 0 and lambda of any sign. For expectation equalities
// lambda is a constant.
struct CertificateEquality {
  std::string label;
  std::string origin;
  Polynomial h;
  Polynomial multiplier;
  bool expectation = false;
};

// Refutation: the sum of all contributions, with every monomial replaced by
// its lifted moment, is the negative constant `constant`.
struct Certificate {
  int degree = 2;
  int k = 0;
  bool lifted = true;
  std::set<std::string> constants;
  std::vector<CertificateBlock> blocks;
  std::vector<CertificateRow> rows;
  std::vector<CertificateEquality> equalities;
  Rational constant = -1;
  bool exact = false;
  double residual = 0;
  double tol = 1e-6;
};

struct VerifyReport {
  bool ok = false;
  bool exact = false;  // identity and PSD checks hold in exact arithmetic
  Rational constant = 0;
  double max_residual = 0;    // largest non-constant coefficient, relative to |constant|
  double min_eigenvalue = 0;  // smallest Gram eigenvalue, relative to |constant|
  std::string message;
};

// Expands everything symbolically over lifted monomials. Accepts when the
// constant is negative, every other coefficient is within tol * |constant|,
// Gram matrices are PSD within the same tolerance and rows are nonnegative.
VerifyReport verify_certificate(const Certificate& cert, double tol = 1e-6);

// The identity polynomial itself, over lifted monomials.
Polynomial certificate_identity(const Certificate& cert);

bool is_psd_exact(const std::vector<std::vector<Rational>>& q);

nlohmann::json to_json(const Certificate& cert);
Certificate certificate_from_json(const nlohmann::json& j);

}  // namespace sosr
