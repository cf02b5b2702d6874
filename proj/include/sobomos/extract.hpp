#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sobomos/model.hpp"

namespace sobomos {

struct ExtractionOptions {
  double rank_tol = 1e-3;        // relative singular-value threshold
  double residual_tol = 1e-4;    // max moment mismatch allowed for flat = true
  double membership_tol = 1e-6;  // slack >= -membership_tol per atom
  std::uint64_t seed = 0x8d2f6a13c55aULL;  // convex combination of shift operators
};

struct ExtractionReport {
  bool flat = false;
  int rank = 0;
  AtomicMeasure atoms;
  double residual = 0.0;
  std::string diagnostics;  // reason when flat is false
};

// Numerical ranks of the moment matrices at degrees r and r-1; flat when they
// agree.
std::pair<bool, int> check_flat(const MomentVector& y, const std::vector<FreqIndex>& vars,
                                int r, double rank_tol = 1e-3);
std::pair<bool, int> check_flat(const MomentVector& y, int r, int rho,
                                double rank_tol = 1e-3);

// Shift-operator extraction from a flat truncated moment vector: column-space
// basis of the moment matrix, one multiplication matrix per variable, joint
// Schur diagonalization of a random convex combination, then weights by least
// squares against y.  Ill-conditioned cases report flat = false with
// diagnostics instead of returning atoms.
ExtractionReport extract_atoms(const MomentVector& y, const std::vector<FreqIndex>& vars,
                               int r, const FourierPolynomial& membership_slack,
                               const SobolevSpace& atom_space,
                               const ExtractionOptions& options = {});
ExtractionReport extract_atoms(const MomentVector& y, int r, int rho,
                               const ExtractionOptions& options = {});

// Synthesized function values, one row per atom, one column per grid point.
Eigen::MatrixXd atoms_to_functions(const ExtractionReport& report,
                                   const std::vector<std::vector<double>>& grid);

}  // namespace sobomos
