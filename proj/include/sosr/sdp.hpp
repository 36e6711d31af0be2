#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace sosr {

// Block-diagonal linear matrix inequality F(y) = F0 + sum_k y_k F_k >= 0.
// Diagonal blocks hold scalar rows.
struct SdpBlock {
  bool diagonal = false;
  int size = 0;
};

// Upper-triangular entry (row <= col); the mirrored entry is implied.
struct SdpEntry {
  int block = 0;
  int row = 0;
  int col = 0;
  double value = 0;
};

struct Lmi {
  std::vector<SdpBlock> blocks;
  int num_vars = 0;
  std::vector<SdpEntry> constant;                 // F0
  std::vector<std::vector<SdpEntry>> coefficient;  // F_1..F_m

  int total_dimension() const;
};

// One matrix per block; diagonal blocks are stored as n x 1 columns.
using BlockMatrix = std::vector<Eigen::MatrixXd>;

enum class SdpStatus : std::uint8_t { Optimal, Stalled, NumericalFailure };

std::string status_name(SdpStatus s);

struct SdpOptions {
  double tol = 1e-9;
  int max_iterations = 100;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::NumericalFailure;
  Eigen::VectorXd y;
  BlockMatrix X;  // primal (dual of the LMI): X >= 0 with <F_k, X> = -b_k
  double primal_objective = 0;  // <F0, X>, an upper bound on b'y when X is feasible
  double dual_objective = 0;    // b'y
  double primal_infeasibility = 0;
  double dual_infeasibility = 0;
  int iterations = 0;
};

// max b'y subject to F(y) >= 0, by a primal-dual interior-point method
// (HKM direction, Mehrotra predictor-corrector). Infeasible start.
SdpSolution solve_sdp(const Lmi& lmi, const Eigen::VectorXd& b, const SdpOptions& options = {});

struct PhaseOneResult {
  SdpSolution solution;
  // min t such that F(y) + t I >= 0; feasible iff t <= 0 up to tolerance.
  double t = 0;
};

// Requires a block with a constant positive diagonal entry (e.g. the moment
// matrix corner) so that t stays bounded below.
PhaseOneResult solve_phase_one(const Lmi& lmi, const SdpOptions& options = {});

// <F, X> for a sparse symmetric F given by its upper triangle.
double inner(const std::vector<SdpEntry>& f, const BlockMatrix& x, const std::vector<SdpBlock>& blocks);

}  // namespace sosr
