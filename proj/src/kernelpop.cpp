#include "sobomos/kernelpop.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace sobomos {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void check_kernel_space(const SobolevSpace& space) {
  validate(space);
  if (2 * space.m <= space.n) {
    std::ostringstream msg;
    msg << "H^" << space.m << "(T^" << space.n
        << ") has no reproducing kernel: point evaluation is bounded only for m > n/2";
    throw std::invalid_argument(msg.str());
  }
}

// Upper bound on sum_{|a|_inf > R} 1/w_a by shell counting and an integral
// comparison: 2n 3^(n-1) R^(n-2m) / (2m-n).
double tail_of(const SobolevSpace& space, double R) {
  const double q = 2.0 * space.m - space.n;
  return 2.0 * space.n * std::pow(3.0, space.n - 1) * std::pow(R, -q) / q;
}

double lattice_points(const SobolevSpace& space, std::int64_t R) {
  return std::pow(2.0 * static_cast<double>(R) + 1.0, space.n);
}

}  // namespace

PeriodicKernel::PeriodicKernel(SobolevSpace space, double tol, std::int64_t lattice_cap)
    : space_(space) {
  check_kernel_space(space_);
  if (!(tol > 0.0)) throw std::invalid_argument("kernel tolerance must be positive");
  const double q = 2.0 * space_.m - space_.n;
  const double R = std::pow(2.0 * space_.n * std::pow(3.0, space_.n - 1) / (q * tol),
                            1.0 / q);
  cutoff_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(R)));
  tail_bound_ = tail_of(space_, static_cast<double>(cutoff_));
  if (lattice_points(space_, cutoff_) > static_cast<double>(lattice_cap)) {
    std::ostringstream msg;
    msg << "kernel tolerance " << tol << " needs " << lattice_points(space_, cutoff_)
        << " lattice terms per evaluation, above the cap of " << lattice_cap
        << "; loosen the tolerance";
    throw SizeCapError(msg.str());
  }
}

PeriodicKernel::PeriodicKernel(SobolevSpace space, std::int64_t cutoff, double tail_bound)
    : space_(space), cutoff_(cutoff), tail_bound_(tail_bound) {
  check_kernel_space(space_);
  if (cutoff_ < 1) throw std::invalid_argument("lattice cutoff must be >= 1");
}

double kernel_eval(const PeriodicKernel& kernel, const std::vector<double>& x,
                   const std::vector<double>& y) {
  const SobolevSpace& space = kernel.space();
  if (static_cast<int>(x.size()) != space.n || static_cast<int>(y.size()) != space.n) {
    throw std::invalid_argument("kernel arguments have the wrong dimension");
  }
  const std::int64_t R = kernel.lattice_cutoff();
  if (space.n == 1) {
    // Pair a with -a and advance cos(a*theta) by the two-term recurrence.
    const double theta = 2.0 * std::numbers::pi * (x[0] - y[0]);
    const double step = std::cos(theta);
    double prev = 1.0;   // cos(0)
    double curr = step;  // cos(theta)
    double sum = 1.0;
    for (std::int64_t a = 1; a <= R; ++a) {
      double base = 1.0 + static_cast<double>(a) * static_cast<double>(a);
      double w = 1.0;
      for (int e = 0; e < space.m; ++e) w *= base;
      sum += 2.0 * curr / w;
      const double next = 2.0 * step * curr - prev;
      prev = curr;
      curr = next;
    }
    return sum;
  }

  std::vector<int> a(space.n, static_cast<int>(-R));
  double sum = 0.0;
  while (true) {
    double base = 1.0;
    double phase = 0.0;
    for (int i = 0; i < space.n; ++i) {
      base += static_cast<double>(a[i]) * a[i];
      phase += a[i] * (x[i] - y[i]);
    }
    double w = 1.0;
    for (int e = 0; e < space.m; ++e) w *= base;
    sum += std::cos(2.0 * std::numbers::pi * phase) / w;
    int i = space.n - 1;
    while (i >= 0 && a[i] == R) a[i--] = static_cast<int>(-R);
    if (i < 0) break;
    ++a[i];
  }
  return sum;
}

Eigen::MatrixXd gram(const PeriodicKernel& kernel,
                     const std::vector<std::vector<double>>& points) {
  const int l = static_cast<int>(points.size());
  if (l < 1) throw std::invalid_argument("gram needs at least one point");
  for (int i = 0; i < l; ++i) {
    for (int j = i + 1; j < l; ++j) {
      if (points[i] == points[j]) {
        throw std::invalid_argument("gram points must be pairwise distinct");
      }
    }
  }
  MatrixXd K(l, l);
  for (int i = 0; i < l; ++i) {
    for (int j = i; j < l; ++j) {
      K(i, j) = K(j, i) = kernel_eval(kernel, points[i], points[j]);
    }
  }
  return K;
}

void validate(const KernelProblem& prob) {
  check_kernel_space(prob.space);
  if (prob.points.empty()) throw std::invalid_argument("kernel problem needs points");
  for (const auto& x : prob.points) {
    if (static_cast<int>(x.size()) != prob.space.n) {
      throw std::invalid_argument("evaluation point has wrong dimension");
    }
  }
  for (std::size_t i = 0; i < prob.points.size(); ++i) {
    for (std::size_t j = i + 1; j < prob.points.size(); ++j) {
      if (prob.points[i] == prob.points[j]) {
        throw std::invalid_argument("evaluation points must be distinct");
      }
    }
  }
  for (const auto& term : prob.objective) {
    if (term.powers.size() != prob.points.size()) {
      throw std::invalid_argument("objective term has wrong variable count");
    }
    for (int p : term.powers) {
      if (p < 0) throw std::invalid_argument("negative exponent in kernel objective");
    }
  }
  if (prob.radius && !(*prob.radius > 0.0)) {
    throw std::invalid_argument("radius must be positive");
  }
}

PopInstance compile_kernel_pop(const KernelProblem& prob, const PeriodicKernel& kernel) {
  validate(prob);
  if (!(prob.space == kernel.space())) {
    throw std::invalid_argument("problem and kernel disagree on the space");
  }
  const MatrixXd K = gram(kernel, prob.points);
  const int l = static_cast<int>(prob.points.size());
  const double radius = prob.radius.value_or(1.0);

  // w variables are labelled by one-dimensional indices (0), ..., (l-1); the
  // reporting space is synthetic since atoms live in representer coordinates.
  const SobolevSpace wspace{1, 0};
  PopInstance instance;
  instance.space = wspace;
  for (int j = 0; j < l; ++j) instance.vars.vars.push_back(FreqIndex{j});

  std::vector<FourierPolynomial> point_values;  // <K_i, w> per evaluation point
  for (int i = 0; i < l; ++i) {
    FourierPolynomial t(wspace);
    for (int j = 0; j < l; ++j) {
      t.add_term(canonicalize({instance.vars.vars[j]}), K(i, j));
    }
    point_values.push_back(std::move(t));
  }

  FourierPolynomial objective(wspace);
  for (const auto& term : prob.objective) {
    FourierPolynomial product = FourierPolynomial::constant(wspace, term.coeff);
    for (int i = 0; i < l; ++i) {
      for (int p = 0; p < term.powers[i]; ++p) product = product * point_values[i];
    }
    objective = objective + product;
  }
  instance.objective = std::move(objective);

  FourierPolynomial slack = FourierPolynomial::constant(wspace, radius * radius);
  for (int i = 0; i < l; ++i) {
    for (int j = i; j < l; ++j) {
      const double coeff = (i == j ? 1.0 : 2.0) * K(i, j);
      slack.add_term(canonicalize({instance.vars.vars[i], instance.vars.vars[j]}), -coeff);
    }
  }
  instance.slack = std::move(slack);
  return instance;
}

KernelResult solve_kernel_pop(const KernelProblem& prob, const PeriodicKernel& kernel,
                              int r, double tol,
                              const std::vector<std::vector<double>>& grid,
                              const ExtractionOptions& extraction) {
  PopInstance instance = compile_kernel_pop(prob, kernel);
  const OuterRelaxation relaxation = build_outer_instance(instance, r);

  KernelResult result;
  result.gram = gram(kernel, prob.points);
  result.outer = solve_outer(relaxation, tol);
  result.value = result.outer.value;
  result.extraction = extract_atoms(result.outer.y, instance.vars.vars, r,
                                    instance.slack, instance.space, extraction);

  const int l = static_cast<int>(prob.points.size());
  for (const auto& atom : result.extraction.atoms.atoms) {
    VectorXd w(l);
    for (int j = 0; j < l; ++j) w[j] = atom.point.value(instance.vars.vars[j]);
    result.atoms.emplace_back(atom.weight, std::move(w));
  }
  if (!grid.empty() && !result.atoms.empty()) {
    result.representer_values. resize(static_cast<int>(result.atoms.size()),
                                      static_cast<int>(grid.size()));
    for (std::size_t i = 0; i < result.atoms.size(); ++i) {
      for (std::size_t g = 0; g < grid.size(); ++g) {
        double f = 0.0;
        for (int j = 0; j < l; ++j) {
          f += result.atoms[i].second[j] * kernel_eval(kernel, grid[g], prob.points[j]);
        }
        result.representer_values(static_cast<int>(i), static_cast<int>(g)) = f;
      }
    }
  }
  return result;
}

}  // namespace sobomos
