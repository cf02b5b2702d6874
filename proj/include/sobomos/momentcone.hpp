#pragma once

#include <map>
#include <vector>

#include <Eigen/Dense>

#include "sobomos/model.hpp"
#include "sobomos/sdp.hpp"

namespace sobomos {

// Ordered distinct coefficient variables of a finite relaxation.
struct VariableSet {
  std::vector<FreqIndex> vars;
};

// Finite polynomial optimization instance: minimize objective over the set
// {slack >= 0} in the given variables.  Produced by the harmonic/algebraic
// routes (ellipsoid slack) and by the kernel reduction (Gram ball slack).
struct PopInstance {
  SobolevSpace space;
  VariableSet vars;
  FourierPolynomial objective;
  FourierPolynomial slack;
};

// Moment matrix M[i,j] = y_{b_i u b_j} over the degree <= r basis.
Eigen::MatrixXd moment_matrix(const MomentVector& y, const std::vector<FreqIndex>& vars,
                              int r);
Eigen::MatrixXd moment_matrix(const MomentVector& y, int r, int rho);

// Localizing matrix of the slack polynomial over the degree <= r-1 basis:
// M_g[i,j] = sum_bg g_bg y_{b_i u b_j u bg}.
Eigen::MatrixXd localizing_matrix(const MomentVector& y, const std::vector<FreqIndex>& vars,
                                  int r, const FourierPolynomial& slack);
Eigen::MatrixXd localizing_matrix(const MomentVector& y, int r, int rho,
                                  const SobolevSpace& space);

// Outer semidefinite relaxation at algebraic degree r:
//   minimize <objective, y>  s.t.  y_empty = 1,
//   moment matrix PSD, localizing matrix of the slack PSD,
// with one free variable per monomial of degree <= 2r over the instance
// variables.
struct OuterRelaxation {
  SobolevSpace space;
  VariableSet vars;
  int r = 0;
  int rho = 0;
  std::vector<Monomial> variable_monomials;  // SDP unknowns, graded-lex
  std::vector<Monomial> basis;               // degree <= r
  std::vector<Monomial> basis_loc;           // degree <= r-1
  FourierPolynomial objective;
  FourierPolynomial slack;
  SdpProblem sdp;
  std::map<Monomial, int> index_of;
};

// Harmonic route.  The relaxation variables are restricted to the frequencies
// that actually appear in the objective; coordinates the objective does not
// see can be fixed to zero without changing the optimum, and the restriction
// leaves the relaxation value unchanged at every level.
OuterRelaxation build_outer(const FourierPolynomial& objective, int r, int rho,
                            std::size_t cap = kDefaultMonomialCap);

OuterRelaxation build_outer_instance(const PopInstance& instance, int r,
                                     std::size_t cap = kDefaultMonomialCap);

struct OuterResult {
  double value = 0.0;
  MomentVector y;
  SdpSolution certificate;
};

// Throws SolveError when the SDP does not reach the optimal status.
OuterResult solve_outer(const OuterRelaxation& relaxation, double tol = 1e-8,
                        int max_iter = 200);

}  // namespace sobomos
