#include "sosr/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sosr {

int Lmi::total_dimension() const {
  int n = 0;
  for (const auto& b : blocks) n += b.size;
  return n;
}

std::string status_name(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal:
      return "optimal";
    case SdpStatus::Stalled:
      return "stalled";
    case SdpStatus::NumericalFailure:
      return "numerical-failure";
  }
  return "unknown";
}

double inner(const std::vector<SdpEntry>& f, const BlockMatrix& x, const std::vector<SdpBlock>& blocks) {
  double s = 0;
  for (const auto& e : f) {
    const auto& m = x[e.block];
    if (blocks[e.block].diagonal)
      s += e.value * m(e.row, 0);
    else
      s += e.value * (e.row == e.col ? m(e.row, e.col) : m(e.row, e.col) + m(e.col, e.row));
  }
  return s;
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

BlockMatrix zeros(const std::vector<SdpBlock>& blocks) {
  BlockMatrix out;
  for (const auto& b : blocks) out.push_back(MatrixXd::Zero(b.size, b.diagonal ? 1 : b.size));
  return out;
}

BlockMatrix scaled_identity(const std::vector<SdpBlock>& blocks, const std::vector<double>& scale) {
  BlockMatrix out;
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    const auto& b = blocks[j];
    if (b.diagonal)
      out.push_back(MatrixXd::Constant(b.size, 1, scale[j]));
    else
      out.push_back(MatrixXd::Identity(b.size, b.size) * scale[j]);
  }
  return out;
}

void add_entries(BlockMatrix& m, const std::vector<SdpEntry>& f, double scale, const std::vector<SdpBlock>& blocks) {
  for (const auto& e : f) {
    auto& mb = m[e.block];
    if (blocks[e.block].diagonal) {
      mb(e.row, 0) += scale * e.value;
    } else {
      mb(e.row, e.col) += scale * e.value;
      if (e.row != e.col) mb(e.col, e.row) += scale * e.value;
    }
  }
}

double dot(const BlockMatrix& a, const BlockMatrix& b) {
  double s = 0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j].cwiseProduct(b[j]).sum();
  return s;
}

double frobenius(const BlockMatrix& a) { return std::sqrt(dot(a, a)); }

void axpy(BlockMatrix& y, double alpha, const BlockMatrix& x) {
  for (std::size_t j = 0; j < y.size(); ++j) y[j] += alpha * x[j];
}

// Largest alpha with X + alpha dX >= 0 (infinity if unconstrained).
double max_step(const BlockMatrix& x, const BlockMatrix& dx, const std::vector<SdpBlock>& blocks, bool& ok) {
  double alpha = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    if (blocks[j].size == 0) continue;
    if (blocks[j].diagonal) {
      for (int i = 0; i < blocks[j].size; ++i)
        if (dx[j](i, 0) < 0) alpha = std::min(alpha, -x[j](i, 0) / dx[j](i, 0));
      continue;
    }
    Eigen::LLT<MatrixXd> llt(x[j]);
    if (llt.info() != Eigen::Success) {
      ok = false;
      return 0;
    }
    MatrixXd w = llt.matrixL().solve(dx[j]);
    w = llt.matrixL().solve(w.transpose()).transpose();
    w = 0.5 * (w + w.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(w, Eigen::EigenvaluesOnly);
    double lmin = es.eigenvalues()(0);
    if (lmin < 0) alpha = std::min(alpha, -1.0 / lmin);
  }
  return alpha;
}

struct Structure {
  // Per dense block: variables touching it with their entries.
  struct VarEntries {
    int var;
    std::vector<SdpEntry> entries;
    std::vector<int> columns;  // columns touched by X * A
  };
  std::vector<std::vector<VarEntries>> dense;
  // Per diagonal block and row: (var, value).
  std::vector<std::vector<std::vector<std::pair<int, double>>>> diag;
};

Structure analyze(const std::vector<SdpBlock>& blocks, const std::vector<std::vector<SdpEntry>>& a) {
  Structure s;
  s.dense.resize(blocks.size());
  s.diag.resize(blocks.size());
  for (std::size_t j = 0; j < blocks.size(); ++j)
    if (blocks[j].diagonal) s.diag[j].resize(blocks[j].size);
  std::vector<int> slot(blocks.size(), -1);
  for (int k = 0; k < static_cast<int>(a.size()); ++k) {
    std::fill(slot.begin(), slot.end(), -1);
    for (const auto& e : a[k]) {
      if (blocks[e.block].diagonal) {
        s.diag[e.block][e.row].emplace_back(k, e.value);
        continue;
      }
      auto& list = s.dense[e.block];
      if (slot[e.block] < 0) {
        slot[e.block] = static_cast<int>(list.size());
        list.push_back({k, {}, {}});
      }
      list[slot[e.block]].entries.push_back(e);
    }
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      if (slot[j] < 0) continue;
      auto& ve = s.dense[j][slot[j]];
      for (const auto& e : ve.entries) {
        ve.columns.push_back(e.row);
        ve.columns.push_back(e.col);
      }
      std::sort(ve.columns.begin(), ve.columns.end());
      ve.columns.erase(std::unique(ve.columns.begin(), ve.columns.end()), ve.columns.end());
    }
  }
  return s;
}

// <A_k, G> for every k, G arbitrary (not necessarily symmetric).
VectorXd apply_a(const std::vector<std::vector<SdpEntry>>& a, const BlockMatrix& g,
                 const std::vector<SdpBlock>& blocks) {
  VectorXd out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out(k) = inner(a[k], g, blocks);
  return out;
}

MatrixXd schur_complement(const Structure& s, const std::vector<SdpBlock>& blocks, const BlockMatrix& x,
                          const BlockMatrix& zinv, int m) {
  MatrixXd M = MatrixXd::Zero(m, m);
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    if (blocks[j].diagonal) {
      for (int r = 0; r < blocks[j].size; ++r) {
        const auto& list = s.diag[j][r];
        double w = x[j](r, 0) * zinv[j](r, 0);
        for (const auto& [p, vp] : list)
          for (const auto& [q, vq] : list) M(p, q) += w * vp * vq;
      }
      continue;
    }
    const auto& vars = s.dense[j];
    const MatrixXd& X = x[j];
    const MatrixXd& Zi = zinv[j];
    const int n = blocks[j].size;
    for (std::size_t a = 0; a < vars.size(); ++a) {
      const auto& va = vars[a];
      // P = X A_a Z^{-1} via the touched columns only.
      const int nc = static_cast<int>(va.columns.size());
      MatrixXd t = MatrixXd::Zero(n, nc);
      auto col_of = [&](int c) {
        return static_cast<int>(std::lower_bound(va.columns.begin(), va.columns.end(), c) - va.columns.begin());
      };
      for (const auto& e : va.entries) {
        t.col(col_of(e.col)) += e.value * X.col(e.row);
        if (e.row != e.col) t.col(col_of(e.row)) += e.value * X.col(e.col);
      }
      MatrixXd zrows(nc, n);
      for (int c = 0; c < nc; ++c) zrows.row(c) = Zi.row(va.columns[c]);
      MatrixXd p = t * zrows;
      for (std::size_t b = a; b < vars.size(); ++b) {
        double v = 0;
        for (const auto& e : vars[b].entries)
          v += e.value * (e.row == e.col ? p(e.row, e.col) : p(e.row, e.col) + p(e.col, e.row));
        M(va.var, vars[b].var) += v;
        if (b != a) M(vars[b].var, va.var) += v;
      }
    }
  }
  return M;
}

}  // namespace

SdpSolution solve_sdp(const Lmi& lmi, const VectorXd& b, const SdpOptions& options) {
  const auto& blocks = lmi.blocks;
  const int m = lmi.num_vars;
  const double n_total = std::max(1, lmi.total_dimension());
  SdpSolution sol;

  // Standard form: C = F0, A_k = -F_k; max b'y s.t. C - sum y_k A_k = Z >= 0.
  std::vector<std::vector<SdpEntry>> a(m);
  for (int k = 0; k < m; ++k) {
    a[k] = lmi.coefficient[k];
    for (auto& e : a[k]) e.value = -e.value;
  }
  BlockMatrix C = zeros(blocks);
  add_entries(C, lmi.constant, 1.0, blocks);
  Structure structure = analyze(blocks, a);

  // Starting point in the style of SDPT3.
  std::vector<double> xi(blocks.size()), eta(blocks.size());
  {
    std::vector<double> cnorm(blocks.size(), 0.0);
    std::vector<std::vector<double>> anorm(blocks.size(), std::vector<double>(m, 0.0));
    for (std::size_t j = 0; j < blocks.size(); ++j) cnorm[j] = C[j].norm();
    for (int k = 0; k < m; ++k)
      for (const auto& e : a[k]) anorm[e.block][k] += e.value * e.value * (e.row == e.col ? 1 : 2);
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      double sq = std::sqrt(static_cast<double>(std::max(1, blocks[j].size)));
      double ratio = 0, amax = 0;
      for (int k = 0; k < m; ++k) {
        double an = std::sqrt(anorm[j][k]);
        ratio = std::max(ratio, (1 + std::abs(b(k))) / (1 + an));
        amax = std::max(amax, an);
      }
      xi[j] = std::max({10.0, sq, sq * ratio});
      eta[j] = std::max({10.0, sq, amax, cnorm[j]});
    }
  }
  BlockMatrix X = scaled_identity(blocks, xi);
  BlockMatrix Z = scaled_identity(blocks, eta);
  VectorXd y = VectorXd::Zero(m);
  const double bnorm = b.norm();
  const double cnorm = frobenius(C);

  auto finish = [&](SdpStatus status, int it) {
    sol.status = status;
    sol.y = y;
    sol.X = X;
    sol.iterations = it;
    sol.primal_objective = dot(C, X);
    sol.dual_objective = m ? b.dot(y) : 0.0;
    return sol;
  };

  for (int it = 0; it < options.max_iterations; ++it) {
    // Residuals.
    VectorXd rp = b - apply_a(a, X, blocks);
    BlockMatrix Rd = C;
    axpy(Rd, -1.0, Z);
    for (int k = 0; k < m; ++k)
      if (y(k) != 0) add_entries(Rd, a[k], -y(k), blocks);
    double pobj = dot(C, X), dobj = m ? b.dot(y) : 0.0;
    double gap = dot(X, Z);
    sol.primal_infeasibility = rp.norm() / (1 + bnorm);
    sol.dual_infeasibility = frobenius(Rd) / (1 + cnorm);
    double relgap = std::max(gap, std::abs(pobj - dobj)) / (1 + std::abs(pobj) + std::abs(dobj));
    if (!std::isfinite(relgap) || !std::isfinite(sol.primal_infeasibility) || !std::isfinite(sol.dual_infeasibility))
      return finish(SdpStatus::NumericalFailure, it);
    if (sol.primal_infeasibility < options.tol && sol.dual_infeasibility < options.tol && relgap < options.tol)
      return finish(SdpStatus::Optimal, it);
    if (frobenius(X) > 1e14 || frobenius(Z) > 1e14) return finish(SdpStatus::Stalled, it);

    // Z^{-1}.
    BlockMatrix Zinv(blocks.size());
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      if (blocks[j].diagonal) {
        Zinv[j] = Z[j].cwiseInverse();
        continue;
      }
      Eigen::LLT<MatrixXd> llt(Z[j]);
      if (llt.info() != Eigen::Success) return finish(SdpStatus::NumericalFailure, it);
      Zinv[j] = llt.solve(MatrixXd::Identity(blocks[j].size, blocks[j].size));
      Zinv[j] = 0.5 * (Zinv[j] + Zinv[j].transpose());
    }

    MatrixXd M = schur_complement(structure, blocks, X, Zinv, m);
    double diag_max = m ? M.diagonal().cwiseAbs().maxCoeff() : 0.0;
    M.diagonal().array() += 1e-13 * std::max(1.0, diag_max);
    Eigen::LLT<MatrixXd> mfac(M);
    Eigen::LDLT<MatrixXd> mfac_ldlt;
    bool use_ldlt = mfac.info() != Eigen::Success;
    if (use_ldlt) {
      mfac_ldlt.compute(M);
      if (mfac_ldlt.info() != Eigen::Success) return finish(SdpStatus::NumericalFailure, it);
    }
    auto solve_m = [&](const VectorXd& r) -> VectorXd {
      if (use_ldlt) return mfac_ldlt.solve(r);
      return mfac.solve(r);
    };

    // X Rd Z^{-1}, reused by both steps.
    BlockMatrix XRdZi(blocks.size());
    for (std::size_t j = 0; j < blocks.size(); ++j)
      XRdZi[j] = blocks[j].diagonal ? MatrixXd(X[j].cwiseProduct(Rd[j]).cwiseProduct(Zinv[j]))
                                    : MatrixXd(X[j] * Rd[j] * Zinv[j]);

    // Direction for target K (K = sigma mu I - dXp dZp, or 0 for the predictor).
    auto direction = [&](const BlockMatrix* K, VectorXd& dy, BlockMatrix& dX, BlockMatrix& dZ) {
      // G = K Z^{-1} - X - X Rd Z^{-1}
      BlockMatrix G(blocks.size());
      for (std::size_t j = 0; j < blocks.size(); ++j) {
        G[j] = -X[j] - XRdZi[j];
        if (K) G[j] += blocks[j].diagonal ? MatrixXd((*K)[j].cwiseProduct(Zinv[j])) : MatrixXd((*K)[j] * Zinv[j]);
      }
      VectorXd rhs = rp - apply_a(a, G, blocks);
      dy = m ? solve_m(rhs) : VectorXd();
      dZ = Rd;
      for (int k = 0; k < m; ++k)
        if (dy(k) != 0) add_entries(dZ, a[k], -dy(k), blocks);
      dX.resize(blocks.size());
      for (std::size_t j = 0; j < blocks.size(); ++j) {
        if (blocks[j].diagonal) {
          dX[j] = -X[j] - X[j].cwiseProduct(dZ[j]).cwiseProduct(Zinv[j]);
          if (K) dX[j] += (*K)[j].cwiseProduct(Zinv[j]);
        } else {
          MatrixXd d = -X[j] - X[j] * dZ[j] * Zinv[j];
          if (K) d += (*K)[j] * Zinv[j];
          dX[j] = 0.5 * (d + d.transpose());
        }
      }
    };

    VectorXd dy;
    BlockMatrix dX, dZ;
    direction(nullptr, dy, dX, dZ);
    bool ok = true;
    double ap = std::min(1.0, max_step(X, dX, blocks, ok));
    double ad = std::min(1.0, max_step(Z, dZ, blocks, ok));
    if (!ok) return finish(SdpStatus::NumericalFailure, it);
    double mu = gap / n_total;
    BlockMatrix Xa = X, Za = Z;
    axpy(Xa, ap, dX);
    axpy(Za, ad, dZ);
    double mu_aff = dot(Xa, Za) / n_total;
    double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);
    if (!std::isfinite(sigma)) sigma = 0.5;

    BlockMatrix K(blocks.size());
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      if (blocks[j].diagonal) {
        K[j] = MatrixXd::Constant(blocks[j].size, 1, sigma * mu) - dX[j].cwiseProduct(dZ[j]);
      } else {
        K[j] = sigma * mu * MatrixXd::Identity(blocks[j].size, blocks[j].size) - dX[j] * dZ[j];
      }
    }
    direction(&K, dy, dX, dZ);
    ap = max_step(X, dX, blocks, ok);
    ad = max_step(Z, dZ, blocks, ok);
    if (!ok) return finish(SdpStatus::NumericalFailure, it);
    ap = std::min(1.0, 0.95 * ap);
    ad = std::min(1.0, 0.95 * ad);
    if (ap < 1e-10 && ad < 1e-10) return finish(SdpStatus::Stalled, it);
    axpy(X, ap, dX);
    axpy(Z, ad, dZ);
    if (m) y += ad * dy;
  }
  return finish(SdpStatus::Stalled, options.max_iterations);
}

PhaseOneResult solve_phase_one(const Lmi& lmi, const SdpOptions& options) {
  Lmi ext = lmi;
  ext.num_vars = lmi.num_vars + 1;
  std::vector<SdpEntry> ident;
  for (int j = 0; j < static_cast<int>(lmi.blocks.size()); ++j)
    for (int i = 0; i < lmi.blocks[j].size; ++i) ident.push_back({j, i, i, 1.0});
  ext.coefficient.push_back(std::move(ident));
  VectorXd b = VectorXd::Zero(ext.num_vars);
  b(lmi.num_vars) = -1;
  PhaseOneResult out;
  out.solution = solve_sdp(ext, b, options);
  out.t = out.solution.y.size() ? out.solution.y(lmi.num_vars) : 0.0;
  return out;
}

}  // namespace sosr
