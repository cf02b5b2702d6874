#include "sobomos/innercone.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

namespace sobomos {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Deterministic standard Gaussian stream (Box-Muller over mt19937_64).
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // in (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace

double ReferenceMoments::at(const Monomial& m) const {
  auto it = index.find(m);
  if (it == index.end()) {
    throw MissingMomentError("missing reference moment " + to_text(m));
  }
  return estimate[it->second];
}

double ReferenceMoments::std_error_of(const Monomial& m) const {
  auto it = index.find(m);
  if (it == index.end()) {
    throw MissingMomentError("missing reference moment " + to_text(m));
  }
  return std_error[it->second];
}

ReferenceMoments estimate_reference_moments(const SobolevSpace& space, int rho,
                                            int max_degree, std::int64_t samples,
                                            std::uint64_t seed) {
  validate(space);
  if (rho < 0) throw std::invalid_argument("rho must be >= 0");
  if (max_degree < 0) throw std::invalid_argument("max_degree must be >= 0");
  if (samples < 1000) throw std::invalid_argument("need at least 1000 samples");

  const auto window = frequency_window(space.n, rho);
  const int N = static_cast<int>(window.size());
  MonomialEvalPlan plan(window, max_degree);
  const int B = static_cast<int>(plan.basis().size());

  VectorXd inv_sqrt_w(N);
  for (int i = 0; i < N; ++i) inv_sqrt_w[i] = 1.0 / std::sqrt(weight(space, window[i]));

  VectorXd sum = VectorXd::Zero(B);
  VectorXd sum_sq = VectorXd::Zero(B);
  std::vector<bool> even(B);
  for (int i = 0; i < B; ++i) even[i] = plan.basis()[i].algebraic_degree() % 2 == 0;

  GaussianStream gauss(seed);
  VectorXd point(N), values;
  std::int64_t accepted = 0;
  for (std::int64_t s = 0; s < samples; ++s) {
    double norm_sq = 0.0;
    for (int i = 0; i < N; ++i) {
      const double g = gauss.next();
      norm_sq += g * g;  // sum w_a c_a^2 with c_a = g / sqrt(w_a)
      point[i] = g * inv_sqrt_w[i];
    }
    if (norm_sq > 1.0) continue;
    ++accepted;
    plan.evaluate(point, values);
    for (int i = 0; i < B; ++i) {
      if (!even[i]) continue;
      sum[i] += values[i];
      sum_sq[i] += values[i] * values[i];
    }
  }

  if (accepted < 2 ||
      static_cast<double>(accepted) / static_cast<double>(samples) < 1e-4) {
    std::ostringstream msg;
    msg << "only " << accepted << " of " << samples
        << " draws landed in the ellipsoid; reduce rho or rescale the reference "
           "variance";
    throw std::runtime_error(msg.str());
  }

  ReferenceMoments ref;
  ref.space = space;
  ref.rho = rho;
  ref.max_degree = max_degree;
  ref.samples = samples;
  ref.seed = seed;
  ref.accepted = accepted;
  ref.basis = plan.basis();
  ref.estimate = VectorXd::Zero(B);
  ref.std_error = VectorXd::Zero(B);
  const double inv_acc = 1.0 / static_cast<double>(accepted);
  for (int i = 0; i < B; ++i) {
    if (!even[i]) continue;  // exact zero by sign symmetry of gamma and E
    ref.estimate[i] = sum[i] * inv_acc;
    const double var =
        std::max(0.0, (sum_sq[i] - sum[i] * sum[i] * inv_acc) / (accepted - 1));
    ref.std_error[i] = std::sqrt(var * inv_acc);
  }
  for (int i = 0; i < B; ++i) ref.index[ref.basis[i]] = i;
  return ref;
}

ReferenceMoments load_reference_cache(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open reference cache " + path);
  nlohmann::json j;
  in >> j;
  ReferenceMoments ref;
  ref.space = {j.at("n").get<int>(), j.at("m").get<int>()};
  ref.rho = j.at("rho").get<int>();
  ref.max_degree = j.at("max_degree").get<int>();
  ref.samples = j.at("samples").get<std::int64_t>();
  ref.seed = j.at("seed").get<std::uint64_t>();
  ref.accepted = j.at("accepted").get<std::int64_t>();
  const auto& entries = j.at("entries");
  ref.estimate = VectorXd::Zero(static_cast<Eigen::Index>(entries.size()));
  ref.std_error = VectorXd::Zero(static_cast<Eigen::Index>(entries.size()));
  int i = 0;
  for (const auto& je : entries) {
    ref.basis.push_back(
        monomial_from_text(je.at("monomial").get<std::string>(), ref.space.n));
    ref.estimate[i] = je.at("estimate").get<double>();
    ref.std_error[i] = je.at("std_error").get<double>();
    ref.index[ref.basis.back()] = i;
    ++i;
  }
  return ref;
}

void save_reference_cache(const ReferenceMoments& ref, const std::string& path) {
  nlohmann::json j;
  j["n"] = ref.space.n;
  j["m"] = ref.space.m;
  j["rho"] = ref.rho;
  j["max_degree"] = ref.max_degree;
  j["samples"] = ref.samples;
  j["seed"] = ref.seed;
  j["accepted"] = ref.accepted;
  j["entries"] = nlohmann::json::array();
  for (std::size_t i = 0; i < ref.basis.size(); ++i) {
    j["entries"].push_back({{"monomial", to_text(ref.basis[i])},
                            {"estimate", ref.estimate[static_cast<Eigen::Index>(i)]},
                            {"std_error", ref.std_error[static_cast<Eigen::Index>(i)]}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write reference cache " + path);
  out << j.dump(1) << "\n";
}

namespace {

// Accumulates, for one Gram variable, the reference-moment contraction of
// c^extra * c^{b_i u b_j} * slack_part.
struct Contraction {
  double value = 0.0;
  std::map<Monomial, double> coeff_by_entry;  // for error propagation
};

Contraction contract(const ReferenceMoments& ref, const Monomial& base,
                     const FourierPolynomial* slack) {
  Contraction out;
  if (slack == nullptr) {
    out.value = ref.at(base);
    out.coeff_by_entry[base] += 1.0;
    return out;
  }
  for (const auto& [bg, g] : slack->terms()) {
    const Monomial key = unite(base, bg);
    out.value += g * ref.at(key);
    out.coeff_by_entry[key] += g;
  }
  return out;
}

}  // namespace

InnerRelaxation build_inner(const FourierPolynomial& objective, int r, int rho,
                            const ReferenceMoments& reference, std::size_t cap) {
  if (r < 1) throw std::invalid_argument("inner relaxation needs r >= 1");
  if (rho < 0) throw std::invalid_argument("rho must be >= 0");
  if (!(objective.space() == reference.space)) {
    throw std::invalid_argument("objective and reference moments disagree on the space");
  }
  if (reference.rho != rho) {
    throw std::invalid_argument("reference moments were sampled at a different rho");
  }
  if (objective.harmonic_degree() > rho) {
    throw std::invalid_argument("objective harmonic degree exceeds rho");
  }
  const int d_obj = objective.algebraic_degree();
  const int needed = std::max(2 * r + d_obj, 2 * (r - 1) + 2 + d_obj);
  if (reference.max_degree < needed) {
    std::ostringstream msg;
    msg << "reference moments cover degree " << reference.max_degree << " but degree "
        << needed << " is needed at r=" << r;
    throw std::invalid_argument(msg.str());
  }

  InnerRelaxation rel;
  rel.space = objective.space();
  rel.r = r;
  rel.rho = rho;
  rel.objective = objective;
  const auto window = frequency_window(rel.space.n, rho);
  rel.slack = ellipsoid_slack(rel.space, window);
  rel.gram_basis = enumerate_monomials(window, r, cap);
  rel.gram_basis_loc = enumerate_monomials(window, r - 1, cap);
  rel.reference = reference;

  const int s0 = rel.g0_size();
  const int s1 = rel.g1_size();
  const int n0 = s0 * (s0 + 1) / 2;
  const int n1 = s1 * (s1 + 1) / 2;

  SdpProblem sdp;
  sdp.variable_count = n0 + n1;
  sdp.objective = VectorXd::Zero(sdp.variable_count);

  SdpProblem::Block g0_block, g1_block;
  g0_block.size = s0;
  g1_block.size = s1;

  SdpProblem::Equality normalization;
  normalization.rhs = 1.0;

  auto process = [&](bool localized) {
    const auto& basis = localized ? rel.gram_basis_loc : rel.gram_basis;
    const int offset = localized ? n0 : 0;
    const FourierPolynomial* slack = localized ? &rel.slack : nullptr;
    auto& block = localized ? g1_block : g0_block;
    int var = offset;
    for (int i = 0; i < static_cast<int>(basis.size()); ++i) {
      for (int j = i; j < static_cast<int>(basis.size()); ++j, ++var) {
        block.terms.push_back({var, i, j, 1.0});
        const double mult = i == j ? 1.0 : 2.0;
        const Monomial pair = unite(basis[i], basis[j]);
        const Contraction norm_c = contract(rel.reference, pair, slack);
        if (norm_c.value != 0.0) {
          normalization.coeffs.emplace_back(var, mult * norm_c.value);
        }
        double obj = 0.0;
        for (const auto& [m, coeff] : objective.terms()) {
          obj += coeff * contract(rel.reference, unite(pair, m), slack).value;
        }
        sdp.objective[var] = mult * obj;
      }
    }
  };
  process(false);
  process(true);

  sdp.blocks.push_back(std::move(g0_block));
  sdp.blocks.push_back(std::move(g1_block));
  sdp.equalities.push_back(std::move(normalization));
  rel.sdp = std::move(sdp);
  return rel;
}

namespace {

MatrixXd unpack_gram(const VectorXd& x, int offset, int s) {
  MatrixXd G(s, s);
  int var = offset;
  for (int i = 0; i < s; ++i) {
    for (int j = i; j < s; ++j, ++var) {
      G(i, j) = G(j, i) = x[var];
    }
  }
  return G;
}

}  // namespace

InnerResult solve_inner(const InnerRelaxation& relaxation, double tol, int max_iter) {
  SolveOptions options;
  options.tol = tol;
  options.max_iter = max_iter;
  SdpSolution sol = solve(relaxation.sdp, options);
  if (sol.status != SdpStatus::Optimal) {
    throw SolveError(std::string("inner relaxation did not reach an optimal status: ") +
                     to_string(sol.status));
  }
  InnerResult result;
  result.value = sol.objective;
  const int s0 = relaxation.g0_size();
  const int s1 = relaxation.g1_size();
  result.gram0 = unpack_gram(sol.x, 0, s0);
  result.gram1 = unpack_gram(sol.x, s0 * (s0 + 1) / 2, s1);

  // Monte Carlo error of the value: group the objective by reference entry and
  // combine the per-entry standard errors at the solved density.
  std::map<Monomial, double> total_coeff;
  auto accumulate = [&](const std::vector<Monomial>& basis, const MatrixXd& G,
                        const FourierPolynomial* slack) {
    for (int i = 0; i < static_cast<int>(basis.size()); ++i) {
      for (int j = i; j < static_cast<int>(basis.size()); ++j) {
        const double mult = (i == j ? 1.0 : 2.0) * G(i, j);
        if (mult == 0.0) continue;
        const Monomial pair = unite(basis[i], basis[j]);
        for (const auto& [m, coeff] : relaxation.objective.terms()) {
          const Contraction c = contract(relaxation.reference, unite(pair, m), slack);
          for (const auto& [entry, w] : c.coeff_by_entry) {
            total_coeff[entry] += mult * coeff * w;
          }
        }
      }
    }
  };
  accumulate(relaxation.gram_basis, result.gram0, nullptr);
  accumulate(relaxation.gram_basis_loc, result.gram1, &relaxation.slack);
  double var = 0.0;
  for (const auto& [entry, coeff] : total_coeff) {
    const double se = relaxation.reference.std_error_of(entry);
    var += coeff * coeff * se * se;
  }
  result.value_std_error = std::sqrt(var);
  result.certificate = std::move(sol);
  return result;
}

Eigen::VectorXd inner_moment_coefficients(const InnerRelaxation& relaxation,
                                          const Monomial& ba) {
  VectorXd coeffs = VectorXd::Zero(relaxation.sdp.variable_count);
  const int s0 = relaxation.g0_size();
  auto fill = [&](const std::vector<Monomial>& basis, int offset,
                  const FourierPolynomial* slack) {
    int var = offset;
    for (int i = 0; i < static_cast<int>(basis.size()); ++i) {
      for (int j = i; j < static_cast<int>(basis.size()); ++j, ++var) {
        const double mult = i == j ? 1.0 : 2.0;
        coeffs[var] =
            mult *
            contract(relaxation.reference, unite(unite(basis[i], basis[j]), ba), slack)
                .value;
      }
    }
  };
  fill(relaxation.gram_basis, 0, nullptr);
  fill(relaxation.gram_basis_loc, s0 * (s0 + 1) / 2, &relaxation.slack);
  return coeffs;
}

double inner_moment_of(const InnerRelaxation& relaxation, const MatrixXd& G0,
                       const MatrixXd& G1, const Monomial& ba, double* std_error) {
  double value = 0.0;
  std::map<Monomial, double> coeffs;
  auto accumulate = [&](const std::vector<Monomial>& basis, const MatrixXd& G,
                        const FourierPolynomial* slack) {
    for (int i = 0; i < static_cast<int>(basis.size()); ++i) {
      for (int j = i; j < static_cast<int>(basis.size()); ++j) {
        const double mult = (i == j ? 1.0 : 2.0) * G(i, j);
        if (mult == 0.0) continue;
        const Contraction c =
            contract(relaxation.reference, unite(unite(basis[i], basis[j]), ba), slack);
        value += mult * c.value;
        if (std_error != nullptr) {
          for (const auto& [entry, w] : c.coeff_by_entry) coeffs[entry] += mult * w;
        }
      }
    }
  };
  accumulate(relaxation.gram_basis, G0, nullptr);
  accumulate(relaxation.gram_basis_loc, G1, &relaxation.slack);
  if (std_error != nullptr) {
    double var = 0.0;
    for (const auto& [entry, w] : coeffs) {
      const double se = relaxation.reference.std_error_of(entry);
      var += w * w * se * se;
    }
    *std_error = std::sqrt(var);
  }
  return value;
}

MomentVector inner_moments(const InnerRelaxation& relaxation, const MatrixXd& G0,
                           const MatrixXd& G1, int max_degree,
                           std::map<Monomial, double>* y_err) {
  MomentVector y;
  y.space = relaxation.space;
  y.r = (max_degree + 1) / 2;
  y.rho = relaxation.rho;
  const auto window = frequency_window(relaxation.space.n, relaxation.rho);
  for (const auto& ba : enumerate_monomials(window, max_degree)) {
    double err = 0.0;
    y.entries[ba] = inner_moment_of(relaxation, G0, G1, ba,
                                    y_err != nullptr ? &err : nullptr);
    if (y_err != nullptr) (*y_err)[ba] = err;
  }
  return y;
}

}  // namespace sobomos
