#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sobomos/model.hpp"
#include "sobomos/sdp.hpp"

namespace sobomos {

// Monte Carlo estimates of the moments of the reference measure gamma: the
// product Gaussian with per-coordinate variance 1/w_a on the harmonic window,
// restricted to the ellipsoid E by rejection and normalized to mass one.
// Sampling is antithetic in sign, so odd-degree estimates are exactly zero.
struct ReferenceMoments {
  SobolevSpace space;
  int rho = 0;
  int max_degree = 0;
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
  std::int64_t accepted = 0;
  std::vector<Monomial> basis;  // graded-lex over the window
  Eigen::VectorXd estimate;
  Eigen::VectorXd std_error;
  std::map<Monomial, int> index;

  double at(const Monomial& m) const;
  double std_error_of(const Monomial& m) const;
  bool covers(const Monomial& m) const { return index.count(m) > 0; }
};

// Throws when fewer than 1e-4 of the draws land in E.
ReferenceMoments estimate_reference_moments(const SobolevSpace& space, int rho,
                                            int max_degree, std::int64_t samples,
                                            std::uint64_t seed);

ReferenceMoments load_reference_cache(const std::string& path);
void save_reference_cache(const ReferenceMoments& reference, const std::string& path);

// Inner semidefinite program: densities p = s0 + s1 * slack with s0, s1 sums
// of squares given by Gram matrices G0, G1; moments of p d(gamma) are linear
// in the Gram entries through the reference moments.
struct InnerRelaxation {
  SobolevSpace space;
  int r = 0;
  int rho = 0;
  std::vector<Monomial> gram_basis;      // degree <= r
  std::vector<Monomial> gram_basis_loc;  // degree <= r-1
  FourierPolynomial objective;
  FourierPolynomial slack;
  ReferenceMoments reference;
  SdpProblem sdp;  // variables: upper triangle of G0, then of G1

  int g0_size() const { return static_cast<int>(gram_basis.size()); }
  int g1_size() const { return static_cast<int>(gram_basis_loc.size()); }
};

InnerRelaxation build_inner(const FourierPolynomial& objective, int r, int rho,
                            const ReferenceMoments& reference,
                            std::size_t cap = kDefaultMonomialCap);

struct InnerResult {
  double value = 0.0;
  double value_std_error = 0.0;  // Monte Carlo error propagated to the value
  Eigen::MatrixXd gram0;
  Eigen::MatrixXd gram1;
  SdpSolution certificate;
};

InnerResult solve_inner(const InnerRelaxation& relaxation, double tol = 1e-8,
                        int max_iter = 200);

// y_ba of the Gram-pair density as a linear functional on the SDP variables
// (vech(G0) then vech(G1)).
Eigen::VectorXd inner_moment_coefficients(const InnerRelaxation& relaxation,
                                          const Monomial& ba);

// Value and Monte Carlo std error of y_ba at a concrete Gram pair.
double inner_moment_of(const InnerRelaxation& relaxation, const Eigen::MatrixXd& G0,
                       const Eigen::MatrixXd& G1, const Monomial& ba,
                       double* std_error = nullptr);

// Moments y_ba = integral of c^ba p d(gamma) of the density given by the Gram
// pair, for every monomial with degree <= max_degree on the window; std-error
// estimates go to y_err when non-null.
MomentVector inner_moments(const InnerRelaxation& relaxation, const Eigen::MatrixXd& G0,
                           const Eigen::MatrixXd& G1, int max_degree,
                           std::map<Monomial, double>* y_err = nullptr);

}  // namespace sobomos
