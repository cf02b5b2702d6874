#include "sobomos/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace sobomos {

namespace {

double ipow(double base, int exp) {
  double out = 1.0;
  for (int i = 0; i < exp; ++i) out *= base;
  return out;
}

void check_dim(const SobolevSpace& space, const FreqIndex& a) {
  if (a.dim() != space.n) {
    throw std::invalid_argument("frequency " + to_text(a) + " has dimension " +
                                std::to_string(a.dim()) + ", space expects " +
                                std::to_string(space.n));
  }
}

}  // namespace

void validate(const SobolevSpace& space) {
  if (space.n < 1) throw std::invalid_argument("torus dimension must be >= 1");
  if (space.m < 0) throw std::invalid_argument("smoothness order must be >= 0");
}

double weight(const SobolevSpace& space, const FreqIndex& a) {
  check_dim(space, a);
  return ipow(1.0 + static_cast<double>(a.squared_norm()), space.m);
}

CoefficientPoint::CoefficientPoint(SobolevSpace space, std::map<FreqIndex, double> values)
    : space_(space), values_(std::move(values)) {
  validate(space_);
  for (const auto& [a, v] : values_) check_dim(space_, a);
}

double CoefficientPoint::value(const FreqIndex& a) const {
  auto it = values_.find(a);
  return it == values_.end() ? 0.0 : it->second;
}

double CoefficientPoint::weighted_norm_sq() const {
  double s = 0.0;
  for (const auto& [a, v] : values_) s += weight(space_, a) * v * v;
  return s;
}

bool CoefficientPoint::in_ellipsoid(double tol) const {
  return weighted_norm_sq() <= 1.0 + tol;
}

FourierPolynomial FourierPolynomial::constant(SobolevSpace space, double value) {
  FourierPolynomial p(space);
  p.add_term(Monomial{}, value);
  return p;
}

void FourierPolynomial::add_term(const Monomial& m, double coeff) {
  if (!m.empty() && m.entries()[0].dim() != space_.n) {
    throw std::invalid_argument("monomial " + to_text(m) + " does not match space dimension");
  }
  auto [it, inserted] = terms_.try_emplace(m, coeff);
  if (!inserted) it->second += coeff;
  if (it->second == 0.0) terms_.erase(it);
}

double FourierPolynomial::coeff(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

int FourierPolynomial::algebraic_degree() const {
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.algebraic_degree());
  return d;
}

int FourierPolynomial::harmonic_degree() const {
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.harmonic_degree());
  return d;
}

std::vector<FreqIndex> FourierPolynomial::support_frequencies() const {
  std::set<FreqIndex> freqs;
  for (const auto& [m, c] : terms_) {
    for (const auto& a : m.entries()) freqs.insert(a);
  }
  return {freqs.begin(), freqs.end()};
}

FourierPolynomial operator+(const FourierPolynomial& p, const FourierPolynomial& q) {
  if (!(p.space() == q.space())) throw std::invalid_argument("space mismatch in +");
  FourierPolynomial out = p;
  for (const auto& [m, c] : q.terms()) out.add_term(m, c);
  return out;
}

FourierPolynomial operator*(const FourierPolynomial& p, const FourierPolynomial& q) {
  if (!(p.space() == q.space())) throw std::invalid_argument("space mismatch in *");
  FourierPolynomial out(p.space());
  for (const auto& [mp, cp] : p.terms()) {
    for (const auto& [mq, cq] : q.terms()) {
      out.add_term(unite(mp, mq), cp * cq);
    }
  }
  return out;
}

FourierPolynomial operator*(double s, const FourierPolynomial& p) {
  FourierPolynomial out(p.space());
  for (const auto& [m, c] : p.terms()) out.add_term(m, s * c);
  return out;
}

FourierPolynomial ellipsoid_slack(const SobolevSpace& space,
                                  const std::vector<FreqIndex>& variables) {
  FourierPolynomial g = FourierPolynomial::constant(space, 1.0);
  for (const auto& a : variables) {
    g.add_term(canonicalize({a, a}), -weight(space, a));
  }
  return g;
}

FourierPolynomial ellipsoid_slack(const SobolevSpace& space, int rho) {
  return ellipsoid_slack(space, frequency_window(space.n, rho));
}

double evaluate_monomial(const Monomial& m, const CoefficientPoint& c) {
  double v = 1.0;
  for (const auto& a : m.entries()) v *= c.value(a);
  return v;
}

double evaluate(const FourierPolynomial& p, const CoefficientPoint& c) {
  if (!(p.space() == c.space())) throw std::invalid_argument("space mismatch in evaluate");
  double s = 0.0;
  for (const auto& [m, coeff] : p.terms()) s += coeff * evaluate_monomial(m, c);
  return s;
}

double AtomicMeasure::mass() const {
  double s = 0.0;
  for (const auto& atom : atoms) s += atom.weight;
  return s;
}

void validate(const AtomicMeasure& mu, double membership_tol) {
  for (const auto& atom : mu.atoms) {
    if (!(atom.weight > 0.0)) {
      throw std::invalid_argument("atomic measure has a non-positive weight");
    }
    if (!atom.point.in_ellipsoid(membership_tol)) {
      std::ostringstream msg;
      msg << "atom outside the ellipsoid: weighted norm^2 = "
          << atom.point.weighted_norm_sq();
      throw std::invalid_argument(msg.str());
    }
  }
}

double MomentVector::at(const Monomial& m) const {
  auto it = entries.find(m);
  if (it == entries.end()) {
    throw MissingMomentError("missing moment entry " + to_text(m));
  }
  return it->second;
}

MomentVector moments(const AtomicMeasure& mu, const IndexSet& A) {
  MomentVector y;
  if (!mu.atoms.empty()) y.space = mu.atoms[0].point.space();
  y.r = (A.algebraic_degree() + 1) / 2;
  y.rho = A.harmonic_degree();
  for (const auto& m : A.members()) {
    double v = 0.0;
    for (const auto& atom : mu.atoms) v += atom.weight * evaluate_monomial(m, atom.point);
    y.entries[m] = v;
  }
  return y;
}

MomentVector restrict_to(const MomentVector& y, const IndexSet& A) {
  MomentVector out;
  out.space = y.space;
  out.r = (A.algebraic_degree() + 1) / 2;
  out.rho = A.harmonic_degree();
  for (const auto& m : A.members()) out.entries[m] = y.at(m);
  return out;
}

LinearFunctionalSpec LinearFunctionalSpec::dirac(std::vector<double> x) {
  LinearFunctionalSpec spec;
  spec.terms.push_back({Term::Kind::Dirac, 1.0, std::move(x)});
  return spec;
}

LinearFunctionalSpec LinearFunctionalSpec::lebesgue() {
  LinearFunctionalSpec spec;
  spec.terms.push_back({Term::Kind::Lebesgue, 1.0, {}});
  return spec;
}

LinearFunctionalSpec LinearFunctionalSpec::weighted_sum(std::vector<Term> terms) {
  LinearFunctionalSpec spec;
  spec.terms = std::move(terms);
  return spec;
}

void validate(const LinearFunctionalSpec& spec, int n) {
  if (spec.terms.empty()) throw std::invalid_argument("functional has no terms");
  for (const auto& term : spec.terms) {
    if (term.kind == LinearFunctionalSpec::Term::Kind::Dirac) {
      if (static_cast<int>(term.x.size()) != n) {
        throw std::invalid_argument("dirac point has wrong dimension");
      }
      for (double xi : term.x) {
        if (!(xi >= 0.0 && xi < 1.0)) {
          throw std::invalid_argument("dirac point must lie in [0,1)^n");
        }
      }
    }
  }
}

bool is_lattice_rational(const std::vector<double>& x, int max_denominator) {
  for (double xi : x) {
    bool ok = false;
    for (int q = 1; q <= max_denominator; ++q) {
      const double scaled = xi * q;
      if (scaled == std::nearbyint(scaled)) {
        ok = true;
        break;
      }
    }
    if (!ok) return false;
  }
  return true;
}

double functional_moment(const LinearFunctionalSpec& spec, const FreqIndex& a) {
  double z = 0.0;
  for (const auto& term : spec.terms) {
    switch (term.kind) {
      case LinearFunctionalSpec::Term::Kind::Dirac: {
        if (static_cast<int>(term.x.size()) != a.dim()) {
          throw std::invalid_argument("dirac point dimension mismatch");
        }
        double phase = 0.0;
        for (int i = 0; i < a.dim(); ++i) phase += a.coords[i] * term.x[i];
        z += term.coeff * std::cos(2.0 * std::numbers::pi * phase);
        break;
      }
      case LinearFunctionalSpec::Term::Kind::Lebesgue:
        if (a.sup_norm() == 0) z += term.coeff;
        break;
    }
  }
  return z;
}

void validate(const AlgebraicProblem& prob) {
  validate(prob.space);
  validate(prob.functional, prob.space.n);
  const std::size_t n_vars = prob.derivatives.size() + 1;
  int total_degree = 0;
  for (const auto& term : prob.integrand) {
    if (term.powers.size() != n_vars) {
      throw std::invalid_argument("integrand term has wrong variable count");
    }
    int d = 0;
    for (int p : term.powers) {
      if (p < 0) throw std::invalid_argument("negative exponent in integrand");
      d += p;
    }
    total_degree = std::max(total_degree, d);
  }
  if (total_degree < 1) {
    throw std::invalid_argument("integrand must have degree >= 1");
  }
  for (const auto& b : prob.derivatives) {
    if (static_cast<int>(b.size()) != prob.space.n) {
      throw std::invalid_argument("derivative multi-index has wrong dimension");
    }
    int order = 0;
    for (int bi : b) {
      if (bi < 0) throw std::invalid_argument("negative derivative order");
      order += bi;
    }
    if (order > prob.space.m) {
      throw std::invalid_argument("derivative order exceeds the smoothness order m");
    }
  }
}

namespace {

// One factor of an expanded integrand monomial: the derivative multi-index
// applied to a basis element, with its cos/sin class from |b| mod 4.
struct Factor {
  std::vector<int> b;
  bool is_sin = false;
  double sign = 1.0;
};

double derivative_amplitude(const std::vector<int>& b, const FreqIndex& a) {
  double amp = 1.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    amp *= ipow(2.0 * std::numbers::pi * a.coords[i], b[i]);
  }
  return amp;
}

}  // namespace

FourierPolynomial compile_algebraic(const AlgebraicProblem& prob, int rho,
                                    std::size_t op_cap) {
  validate(prob);
  if (rho < 0) throw std::invalid_argument("harmonic truncation must be >= 0");

  const auto window = frequency_window(prob.space.n, rho);
  const std::size_t N = window.size();
  std::map<FreqIndex, double> z_cache;
  auto z_of = [&](const FreqIndex& a) {
    auto it = z_cache.find(a);
    if (it != z_cache.end()) return it->second;
    const double z = functional_moment(prob.functional, a);
    z_cache.emplace(a, z);
    return z;
  };

  FourierPolynomial q(prob.space);
  const std::vector<int> no_derivative(prob.space.n, 0);

  for (const auto& term : prob.integrand) {
    std::vector<Factor> factors;
    int sin_count = 0;
    for (std::size_t j = 0; j < term.powers.size(); ++j) {
      const auto& b = (j == 0) ? no_derivative : prob.derivatives[j - 1];
      int order = 0;
      for (int bi : b) order += bi;
      Factor f;
      f.b = b;
      switch (order % 4) {
        case 0: f.is_sin = false; f.sign = 1.0; break;
        case 1: f.is_sin = true;  f.sign = -1.0; break;
        case 2: f.is_sin = false; f.sign = -1.0; break;
        case 3: f.is_sin = true;  f.sign = 1.0; break;
      }
      for (int rep = 0; rep < term.powers[j]; ++rep) {
        factors.push_back(f);
        sin_count += f.is_sin ? 1 : 0;
      }
    }
    const int d = static_cast<int>(factors.size());
    if (d == 0) {
      q.add_term(Monomial{}, term.coeff);
      continue;
    }
    if (sin_count % 2 != 0) {
      throw std::invalid_argument(
          "integrand term with odd total derivative order is not representable "
          "in real mode; only even-parity derivative monomials are supported");
    }

    double ops = ipow(2.0, d);
    for (int i = 0; i < d; ++i) ops *= static_cast<double>(N);
    if (ops > static_cast<double>(op_cap)) {
      std::ostringstream msg;
      msg << "algebraic expansion needs about " << ops
          << " operations, above the cap of " << op_cap
          << "; reduce rho or the integrand degree";
      throw SizeCapError(msg.str());
    }

    const double sin_parity_sign = (sin_count / 2) % 2 == 0 ? 1.0 : -1.0;
    const double half_pow = ipow(0.5, d);

    std::vector<std::size_t> assign(d, 0);
    std::vector<FreqIndex> entries(d);
    while (true) {
      double amplitude = term.coeff * half_pow * sin_parity_sign;
      for (int f = 0; f < d; ++f) {
        const FreqIndex& a = window[assign[f]];
        amplitude *= factors[f].sign * derivative_amplitude(factors[f].b, a);
        entries[f] = a;
      }
      if (amplitude != 0.0) {
        const Monomial mono = canonicalize(entries);
        double total = 0.0;
        FreqIndex freq(std::vector<int>(prob.space.n, 0));
        for (std::uint32_t mask = 0; mask < (1u << d); ++mask) {
          std::fill(freq.coords.begin(), freq.coords.end(), 0);
          double sign_product = 1.0;
          for (int f = 0; f < d; ++f) {
            const int s = (mask >> f) & 1u ? -1 : 1;
            if (factors[f].is_sin) sign_product *= s;
            const FreqIndex& a = window[assign[f]];
            for (int i = 0; i < prob.space.n; ++i) freq.coords[i] += s * a.coords[i];
          }
          total += sign_product * z_of(freq);
        }
        if (total != 0.0) q.add_term(mono, amplitude * total);
      }
      int f = d - 1;
      while (f >= 0 && assign[f] + 1 == N) assign[f--] = 0;
      if (f < 0) break;
      ++assign[f];
    }
  }
  return q;
}

double synthesize(const CoefficientPoint& c, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != c.space().n) {
    throw std::invalid_argument("evaluation point has wrong dimension");
  }
  double value = 0.0;
  for (const auto& [a, ca] : c.values()) {
    double phase = 0.0;
    for (int i = 0; i < c.space().n; ++i) phase += a.coords[i] * x[i];
    value += ca * std::cos(2.0 * std::numbers::pi * phase);
  }
  return value;
}

}  // namespace sobomos
