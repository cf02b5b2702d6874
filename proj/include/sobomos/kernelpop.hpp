#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "sobomos/extract.hpp"
#include "sobomos/model.hpp"
#include "sobomos/momentcone.hpp"

namespace sobomos {

// Reproducing kernel of H^m(T^n), m > n/2, computed as the truncated lattice
// sum  k(x,y) = sum_{|a|_inf <= R} cos(2*pi*<a,x-y>) / w_a  with an analytic
// bound on the dropped tail.
class PeriodicKernel {
 public:
  // Picks the smallest cutoff whose tail bound is below tol.
  PeriodicKernel(SobolevSpace space, double tol = 1e-7,
                 std::int64_t lattice_cap = 100'000'000);
  // Explicit cutoff (testing and reproducibility).
  PeriodicKernel(SobolevSpace space, std::int64_t cutoff, double tail_bound);

  const SobolevSpace& space() const { return space_; }
  std::int64_t lattice_cutoff() const { return cutoff_; }
  double tail_bound() const { return tail_bound_; }

 private:
  SobolevSpace space_;
  std::int64_t cutoff_ = 0;
  double tail_bound_ = 0.0;
};

double kernel_eval(const PeriodicKernel& kernel, const std::vector<double>& x,
                   const std::vector<double>& y);

// Gram matrix (k(x_i, x_j)); points must be pairwise distinct.
Eigen::MatrixXd gram(const PeriodicKernel& kernel,
                     const std::vector<std::vector<double>>& points);

// min p(f(x_1), ..., f(x_l)) over functions with ||f||_{H^m} <= radius.
struct KernelProblem {
  struct Term {
    std::vector<int> powers;  // exponents of the l point values
    double coeff = 0.0;
  };
  SobolevSpace space;
  std::vector<std::vector<double>> points;
  std::vector<Term> objective;
  std::optional<double> radius;  // defaults to 1 (the unit ball)
};

void validate(const KernelProblem& prob);

// Representer reduction: optimal f = sum_j w_j k(., x_j), so the problem
// becomes a POP in w with objective p(<K_1, w>, ..., <K_l, w>) and ball
// constraint w^T K w <= radius^2.  Variables are labelled (0), ..., (l-1).
PopInstance compile_kernel_pop(const KernelProblem& prob, const PeriodicKernel& kernel);

struct KernelResult {
  double value = 0.0;
  std::vector<std::pair<double, Eigen::VectorXd>> atoms;  // weight, w vector
  Eigen::MatrixXd representer_values;  // one row per atom, one column per grid point
  ExtractionReport extraction;
  OuterResult outer;
  Eigen::MatrixXd gram;
};

KernelResult solve_kernel_pop(const KernelProblem& prob, const PeriodicKernel& kernel,
                              int r, double tol = 1e-8,
                              const std::vector<std::vector<double>>& grid = {},
                              const ExtractionOptions& extraction = {});

}  // namespace sobomos
