#include "sobomos/momentcone.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sobomos {

using Eigen::MatrixXd;

Eigen::MatrixXd moment_matrix(const MomentVector& y, const std::vector<FreqIndex>& vars,
                              int r) {
  if (r < 0) throw std::invalid_argument("moment matrix needs r >= 0");
  const auto basis = enumerate_monomials(vars, r);
  const int K = static_cast<int>(basis.size());
  MatrixXd M(K, K);
  for (int i = 0; i < K; ++i) {
    for (int j = i; j < K; ++j) {
      M(i, j) = M(j, i) = y.at(unite(basis[i], basis[j]));
    }
  }
  return M;
}

Eigen::MatrixXd moment_matrix(const MomentVector& y, int r, int rho) {
  return moment_matrix(y, frequency_window(y.space.n, rho), r);
}

Eigen::MatrixXd localizing_matrix(const MomentVector& y, const std::vector<FreqIndex>& vars,
                                  int r, const FourierPolynomial& slack) {
  if (r < 1) throw std::invalid_argument("localizing matrix needs r >= 1");
  const auto basis = enumerate_monomials(vars, r - 1);
  const int K = static_cast<int>(basis.size());
  MatrixXd M(K, K);
  for (int i = 0; i < K; ++i) {
    for (int j = i; j < K; ++j) {
      const Monomial base = unite(basis[i], basis[j]);
      double v = 0.0;
      for (const auto& [bg, g] : slack.terms()) v += g * y.at(unite(base, bg));
      M(i, j) = M(j, i) = v;
    }
  }
  return M;
}

Eigen::MatrixXd localizing_matrix(const MomentVector& y, int r, int rho,
                                  const SobolevSpace& space) {
  const auto vars = frequency_window(space.n, rho);
  return localizing_matrix(y, vars, r, ellipsoid_slack(space, vars));
}

OuterRelaxation build_outer_instance(const PopInstance& instance, int r,
                                     std::size_t cap) {
  validate(instance.space);
  const int d_obj = instance.objective.algebraic_degree();
  if (r < 1 || 2 * r < d_obj) {
    std::ostringstream msg;
    msg << "relaxation degree r=" << r << " too small for an objective of degree "
        << d_obj;
    throw std::invalid_argument(msg.str());
  }
  if (instance.slack.algebraic_degree() > 2) {
    throw std::invalid_argument("slack polynomial must be quadratic");
  }

  OuterRelaxation rel;
  rel.space = instance.space;
  rel.vars = instance.vars;
  rel.r = r;
  rel.objective = instance.objective;
  rel.slack = instance.slack;
  rel.variable_monomials = enumerate_monomials(instance.vars.vars, 2 * r, cap);
  rel.basis = enumerate_monomials(instance.vars.vars, r, cap);
  rel.basis_loc = enumerate_monomials(instance.vars.vars, r - 1, cap);
  for (std::size_t i = 0; i < rel.variable_monomials.size(); ++i) {
    rel.index_of[rel.variable_monomials[i]] = static_cast<int>(i);
  }
  int rho = 0;
  for (const auto& a : instance.vars.vars) rho = std::max(rho, a.sup_norm());
  rel.rho = rho;

  auto var_index = [&rel](const Monomial& m) {
    auto it = rel.index_of.find(m);
    if (it == rel.index_of.end()) {
      throw std::logic_error("monomial " + to_text(m) + " missing from the variable set");
    }
    return it->second;
  };

  SdpProblem sdp;
  sdp.variable_count = static_cast<int>(rel.variable_monomials.size());
  sdp.objective = Eigen::VectorXd::Zero(sdp.variable_count);
  for (const auto& [m, coeff] : instance.objective.terms()) {
    sdp.objective[var_index(m)] += coeff;
  }

  SdpProblem::Block moment_block;
  moment_block.size = static_cast<int>(rel.basis.size());
  for (int i = 0; i < moment_block.size; ++i) {
    for (int j = i; j < moment_block.size; ++j) {
      moment_block.terms.push_back(
          {var_index(unite(rel.basis[i], rel.basis[j])), i, j, 1.0});
    }
  }
  sdp.blocks.push_back(std::move(moment_block));

  SdpProblem::Block loc_block;
  loc_block.size = static_cast<int>(rel.basis_loc.size());
  for (int i = 0; i < loc_block.size; ++i) {
    for (int j = i; j < loc_block.size; ++j) {
      const Monomial base = unite(rel.basis_loc[i], rel.basis_loc[j]);
      std::map<int, double> coeffs;
      for (const auto& [bg, g] : instance.slack.terms()) {
        coeffs[var_index(unite(base, bg))] += g;
      }
      for (const auto& [k, v] : coeffs) {
        if (v != 0.0) loc_block.terms.push_back({k, i, j, v});
      }
    }
  }
  sdp.blocks.push_back(std::move(loc_block));

  sdp.equalities.push_back({{{var_index(Monomial{}), 1.0}}, 1.0});
  rel.sdp = std::move(sdp);
  return rel;
}

OuterRelaxation build_outer(const FourierPolynomial& objective, int r, int rho,
                            std::size_t cap) {
  if (rho < 0) throw std::invalid_argument("rho must be >= 0");
  if (objective.harmonic_degree() > rho) {
    std::ostringstream msg;
    msg << "objective has harmonic degree " << objective.harmonic_degree()
        << ", above the requested rho=" << rho;
    throw std::invalid_argument(msg.str());
  }
  PopInstance instance;
  instance.space = objective.space();
  instance.vars.vars = objective.support_frequencies();
  instance.objective = objective;
  instance.slack = ellipsoid_slack(objective.space(), instance.vars.vars);
  auto rel = build_outer_instance(instance, r, cap);
  rel.rho = rho;
  return rel;
}

OuterResult solve_outer(const OuterRelaxation& relaxation, double tol, int max_iter) {
  SolveOptions options;
  options.tol = tol;
  options.max_iter = max_iter;
  SdpSolution sol = solve(relaxation.sdp, options);
  if (sol.status != SdpStatus::Optimal) {
    throw SolveError(std::string("outer relaxation did not reach an optimal status: ") +
                     to_string(sol.status));
  }
  OuterResult result;
  result.value = sol.objective;
  result.y.space = relaxation.space;
  result.y.r = relaxation.r;
  result.y.rho = relaxation.rho;
  for (std::size_t i = 0; i < relaxation.variable_monomials.size(); ++i) {
    result.y.entries[relaxation.variable_monomials[i]] = sol.x[static_cast<Eigen::Index>(i)];
  }
  result.certificate = std::move(sol);
  return result;
}

}  // namespace sobomos
