#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <nlohmann/json_fwd.hpp>

namespace sobomos {

// Block-diagonal semidefinite program over free variables x:
//
//   minimize    objective . x
//   subject to  C_l + sum_k x_k A_{l,k}  >= 0   (PSD, one block per l)
//               <coeffs_j, x> = rhs_j
//
// Matrix entries are given for the upper triangle (row <= col) and placed
// symmetrically.
struct SdpProblem {
  struct MatEntry {
    int row = 0, col = 0;
    double value = 0.0;
  };
  struct VarEntry {
    int var = 0, row = 0, col = 0;
    double value = 0.0;
  };
  struct Block {
    int size = 0;
    std::vector<MatEntry> constant;
    std::vector<VarEntry> terms;
  };
  struct Equality {
    std::vector<std::pair<int, double>> coeffs;
    double rhs = 0.0;
  };

  int variable_count = 0;
  std::vector<Block> blocks;
  std::vector<Equality> equalities;
  Eigen::VectorXd objective;

  void validate() const;
  // Dense value of block l at x (constant plus variable part).
  Eigen::MatrixXd block_value(int l, const Eigen::VectorXd& x) const;
};

enum class SdpStatus { Optimal, MaxIter, InfeasibleSuspect };

const char* to_string(SdpStatus status);

struct SdpSolution {
  Eigen::VectorXd x;
  std::vector<Eigen::MatrixXd> block_primal;  // S_l
  std::vector<Eigen::MatrixXd> block_dual;    // Z_l
  Eigen::VectorXd eq_dual;
  SdpStatus status = SdpStatus::MaxIter;
  double objective = 0.0;
  double gap = 0.0;  // relative duality gap at the returned iterate
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
};

struct SolveOptions {
  double tol = 1e-8;
  int max_iter = 200;
};

struct SolveError : std::runtime_error {
  explicit SolveError(const std::string& what, std::string diag = {})
      : std::runtime_error(what), diagnostics(std::move(diag)) {}
  std::string diagnostics;
};

// Primal-dual path-following with Nesterov-Todd scaling and a Mehrotra
// predictor-corrector step; dense Cholesky on the Schur complement.
SdpSolution solve(const SdpProblem& problem, const SolveOptions& options = {});

nlohmann::json sdp_to_json(const SdpProblem& problem);
SdpProblem sdp_from_json(const nlohmann::json& j);

}  // namespace sobomos
