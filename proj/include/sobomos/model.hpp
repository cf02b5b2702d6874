#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sobomos/indexcore.hpp"

namespace sobomos {

struct MissingMomentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Periodic Sobolev space H^m(T^n), with the unit ball as feasible set.
struct SobolevSpace {
  int n = 1;  // torus dimension
  int m = 0;  // smoothness order

  bool operator==(const SobolevSpace&) const = default;
};

void validate(const SobolevSpace& space);

// Fourier-side Sobolev weight w_a = (1 + <a,a>)^m.
double weight(const SobolevSpace& space, const FreqIndex& a);

// Finitely supported coefficient point c = (c_a).  Membership in the ellipsoid
// E means sum_a w_a c_a^2 <= 1 up to tolerance.
class CoefficientPoint {
 public:
  CoefficientPoint(SobolevSpace space, std::map<FreqIndex, double> values);

  const SobolevSpace& space() const { return space_; }
  const std::map<FreqIndex, double>& values() const { return values_; }
  double value(const FreqIndex& a) const;
  double weighted_norm_sq() const;
  bool in_ellipsoid(double tol = 1e-12) const;

 private:
  SobolevSpace space_;
  std::map<FreqIndex, double> values_;
};

// Real polynomial in the Fourier coefficients; no zero coefficients stored.
class FourierPolynomial {
 public:
  FourierPolynomial() = default;
  explicit FourierPolynomial(SobolevSpace space) : space_(space) {}
  static FourierPolynomial constant(SobolevSpace space, double value);

  const SobolevSpace& space() const { return space_; }
  const std::map<Monomial, double>& terms() const { return terms_; }
  void add_term(const Monomial& m, double coeff);
  double coeff(const Monomial& m) const;

  int algebraic_degree() const;
  int harmonic_degree() const;
  // Distinct frequencies appearing in the support, sorted.
  std::vector<FreqIndex> support_frequencies() const;

 private:
  SobolevSpace space_;
  std::map<Monomial, double> terms_;
};

FourierPolynomial operator+(const FourierPolynomial& p, const FourierPolynomial& q);
FourierPolynomial operator*(const FourierPolynomial& p, const FourierPolynomial& q);
FourierPolynomial operator*(double s, const FourierPolynomial& p);

// Ellipsoid slack 1 - sum w_a c_a^2 over the given variables (or the full
// window |a|_inf <= rho).
FourierPolynomial ellipsoid_slack(const SobolevSpace& space,
                                  const std::vector<FreqIndex>& variables);
FourierPolynomial ellipsoid_slack(const SobolevSpace& space, int rho);

double evaluate(const FourierPolynomial& p, const CoefficientPoint& c);
double evaluate_monomial(const Monomial& m, const CoefficientPoint& c);

// Finite atomic measure on E, used as a moment oracle and as extraction output.
struct AtomicMeasure {
  struct Atom {
    double weight;
    CoefficientPoint point;
  };
  std::vector<Atom> atoms;

  double mass() const;
};

// Throws unless all weights are positive and all points lie in E within tol.
void validate(const AtomicMeasure& mu, double membership_tol = 1e-12);

// Truncated moment sequence y_ba, keyed by canonical monomials with
// d <= 2r and harmonic degree <= rho.
struct MomentVector {
  SobolevSpace space;
  int r = 0;
  int rho = 0;
  std::map<Monomial, double> entries;

  double at(const Monomial& m) const;
  bool contains(const Monomial& m) const { return entries.count(m) > 0; }
};

MomentVector moments(const AtomicMeasure& mu, const IndexSet& A);
MomentVector restrict_to(const MomentVector& y, const IndexSet& A);

// Bounded linear functional L on L^inf(T^n): Dirac mass, Lebesgue measure, or
// a weighted sum of those.
struct LinearFunctionalSpec {
  struct Term {
    enum class Kind { Dirac, Lebesgue };
    Kind kind = Kind::Lebesgue;
    double coeff = 1.0;
    std::vector<double> x;  // Dirac location in [0,1)^n
  };
  std::vector<Term> terms;

  static LinearFunctionalSpec dirac(std::vector<double> x);
  static LinearFunctionalSpec lebesgue();
  static LinearFunctionalSpec weighted_sum(std::vector<Term> terms);
};

void validate(const LinearFunctionalSpec& spec, int n);

// True when every coordinate of x is k/q for some q <= max_denominator.
bool is_lattice_rational(const std::vector<double>& x, int max_denominator = 4096);

// z_a = L applied to the real trigonometric basis value cos(2*pi*<a,x>).
double functional_moment(const LinearFunctionalSpec& spec, const FreqIndex& a);

// Pointwise polynomial in f and its derivatives, integrated against L.
// Variables are v_0 = f and v_j = D^{b_j} f for the listed multi-indices.
struct AlgebraicProblem {
  struct Term {
    std::vector<int> powers;  // exponent of v_0..v_l
    double coeff = 0.0;
  };
  SobolevSpace space;
  LinearFunctionalSpec functional;
  std::vector<Term> integrand;
  std::vector<std::vector<int>> derivatives;  // b_j per v_j, j >= 1
};

void validate(const AlgebraicProblem& prob);

// Expands the integrand over the truncated Fourier series |a|_inf <= rho and
// contracts against the functional moments z.  Real mode: each basis element
// is cos(2*pi*<a,x>), derivatives track the cos/sin phase, and only terms of
// even total derivative order are representable (odd ones are rejected).
FourierPolynomial compile_algebraic(const AlgebraicProblem& prob, int rho,
                                    std::size_t op_cap = 100'000'000);

// f(x) = sum_a c_a cos(2*pi*<a,x>).
double synthesize(const CoefficientPoint& c, const std::vector<double>& x);

}  // namespace sobomos
