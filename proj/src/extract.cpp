#include "sobomos/extract.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "sobomos/momentcone.hpp"

namespace sobomos {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

int numerical_rank(const MatrixXd& M, double rank_tol) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(M, Eigen::EigenvaluesOnly);
  const VectorXd mags = eig.eigenvalues().cwiseAbs();
  const double top = mags.maxCoeff();
  if (top <= 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < mags.size(); ++i) {
    if (mags[i] > rank_tol * top) ++rank;
  }
  return rank;
}

ExtractionReport failure(int rank, std::string why) {
  ExtractionReport report;
  report.flat = false;
  report.rank = rank;
  report.diagnostics = std::move(why);
  return report;
}

}  // namespace

std::pair<bool, int> check_flat(const MomentVector& y, const std::vector<FreqIndex>& vars,
                                int r, double rank_tol) {
  if (r < 1) throw std::invalid_argument("flatness check needs r >= 1");
  const MatrixXd M = moment_matrix(y, vars, r);
  const auto basis_small = enumerate_monomials(vars, r - 1);
  const int K1 = static_cast<int>(basis_small.size());
  const int rank_full = numerical_rank(M, rank_tol);
  const int rank_small = numerical_rank(M.topLeftCorner(K1, K1), rank_tol);
  return {rank_full == rank_small, rank_full};
}

std::pair<bool, int> check_flat(const MomentVector& y, int r, int rho, double rank_tol) {
  return check_flat(y, frequency_window(y.space.n, rho), r, rank_tol);
}

ExtractionReport extract_atoms(const MomentVector& y, const std::vector<FreqIndex>& vars,
                               int r, const FourierPolynomial& membership_slack,
                               const SobolevSpace& atom_space,
                               const ExtractionOptions& options) {
  if (r < 1) throw std::invalid_argument("extraction needs r >= 1");
  const auto basis = enumerate_monomials(vars, r);
  const auto basis_small = enumerate_monomials(vars, r - 1);
  const int K = static_cast<int>(basis.size());
  const int K1 = static_cast<int>(basis_small.size());
  const int V = static_cast<int>(vars.size());

  const MatrixXd M = moment_matrix(y, vars, r);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(M);
  const VectorXd vals = eig.eigenvalues();
  const double top = vals.cwiseAbs().maxCoeff();
  const double threshold = options.rank_tol * std::max(top, 1e-300);

  if (vals.minCoeff() < -threshold) {
    return failure(0, "moment matrix is not positive semidefinite");
  }
  std::vector<int> kept;
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (vals[i] > threshold) kept.push_back(static_cast<int>(i));
  }
  const int s = static_cast<int>(kept.size());
  const int rank_small = numerical_rank(M.topLeftCorner(K1, K1), options.rank_tol);
  if (s != rank_small) {
    std::ostringstream msg;
    msg << "rank " << s << " at degree " << r << " vs " << rank_small << " at degree "
        << r - 1 << ": not flat";
    return failure(s, msg.str());
  }

  ExtractionReport report;
  report.rank = s;
  if (s == 0) {
    // Zero moment vector: the empty measure reproduces it.
    report.flat = true;
    report.residual = 0.0;
    for (const auto& [m, v] : y.entries) report.residual = std::max(report.residual, std::abs(v));
    return report;
  }

  // Rank factor M = F F^T, rows indexed by basis monomials.
  MatrixXd F(K, s);
  for (int j = 0; j < s; ++j) {
    F.col(j) = eig.eigenvectors().col(kept[j]) * std::sqrt(vals[kept[j]]);
  }

  // Pivot rows among degree <= r-1 monomials; flatness makes them span.
  Eigen::ColPivHouseholderQR<MatrixXd> qr(F.topRows(K1).transpose());
  if (qr.rank() < s) {
    return failure(s, "column space has no basis among low-degree rows");
  }
  std::vector<int> pivots(s);
  for (int j = 0; j < s; ++j) pivots[j] = qr.colsPermutation().indices()[j];
  std::sort(pivots.begin(), pivots.end());

  MatrixXd P(s, s);
  for (int j = 0; j < s; ++j) P.row(j) = F.row(pivots[j]);
  // Shift rows are expressed in the pivot rows: N = Rows * P^{-1}, solved as
  // P^T N^T = Rows^T.
  Eigen::ColPivHouseholderQR<MatrixXd> ptfac(P.transpose());
  if (!ptfac.isInvertible()) {
    return failure(s, "pivot submatrix is numerically singular");
  }

  std::map<Monomial, int> row_of;
  for (int i = 0; i < K; ++i) row_of[basis[i]] = i;

  // Shift operator per variable: N_v maps the pivot basis to itself through
  // multiplication by c_v.
  std::vector<MatrixXd> shift(V);
  for (int v = 0; v < V; ++v) {
    MatrixXd rows(s, s);
    for (int j = 0; j < s; ++j) {
      auto entries = basis[pivots[j]].entries();
      entries.push_back(vars[v]);
      const auto it = row_of.find(Monomial(std::move(entries)));
      if (it == row_of.end()) {
        return failure(s, "shifted pivot monomial left the truncated basis");
      }
      rows.row(j) = F.row(it->second);
    }
    shift[v] = ptfac.solve(rows.transpose()).transpose();
  }

  // Joint diagonalization through a seeded random convex combination.
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unif(0.2, 1.0);
  VectorXd lambda(V);
  for (int v = 0; v < V; ++v) lambda[v] = unif(rng);
  lambda /= lambda.sum();

  MatrixXd atom_coords(s, V);  // one atom per row
  if (V > 0) {
    MatrixXd N = MatrixXd::Zero(s, s);
    for (int v = 0; v < V; ++v) N += lambda[v] * shift[v];
    Eigen::RealSchur<MatrixXd> schur(N);
    if (schur.info() != Eigen::Success) {
      return failure(s, "Schur decomposition failed");
    }
    const MatrixXd T = schur.matrixT();
    double offdiag = 0.0;
    for (int i = 0; i + 1 < s; ++i) offdiag = std::max(offdiag, std::abs(T(i + 1, i)));
    const double tscale = std::max(1.0, T.cwiseAbs().maxCoeff());
    if (offdiag > 1e-7 * tscale) {
      return failure(s, "shift operator has complex eigenvalues; eigenbasis ill-conditioned");
    }
    const MatrixXd U = schur.matrixU();
    for (int j = 0; j < s; ++j) {
      for (int v = 0; v < V; ++v) {
        atom_coords(j, v) = U.col(j).dot(shift[v] * U.col(j));
      }
    }
  }

  // Weights by least squares over every indexed moment.
  std::vector<Monomial> keys;
  keys.reserve(y.entries.size());
  for (const auto& [m, val] : y.entries) keys.push_back(m);
  MonomialEvalPlan plan(vars, 2 * r);
  std::map<Monomial, int> plan_index;
  for (std::size_t i = 0; i < plan.basis().size(); ++i) {
    plan_index[plan.basis()[i]] = static_cast<int>(i);
  }
  MatrixXd A(static_cast<int>(keys.size()), s);
  VectorXd b(static_cast<int>(keys.size()));
  MatrixXd atom_monomials(s, static_cast<int>(plan.basis().size()));
  VectorXd monomial_values;
  for (int j = 0; j < s; ++j) {
    plan.evaluate(atom_coords.row(j).transpose(), monomial_values);
    atom_monomials.row(j) = monomial_values.transpose();
  }
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto it = plan_index.find(keys[i]);
    if (it == plan_index.end()) {
      return failure(s, "moment vector indexes a monomial outside degree 2r");
    }
    for (int j = 0; j < s; ++j) A(static_cast<int>(i), j) = atom_monomials(j, it->second);
    b[static_cast<int>(i)] = y.entries.at(keys[i]);
  }
  const VectorXd w = A.colPivHouseholderQr().solve(b);

  double residual = (A * w - b).cwiseAbs().maxCoeff();
  report.residual = residual;
  if (residual > options.residual_tol * std::max(1.0, b.cwiseAbs().maxCoeff())) {
    std::ostringstream msg;
    msg << "atom moments deviate by " << residual << ", above the tolerance";
    return failure(s, msg.str());
  }
  const double mass = y.contains(Monomial{}) ? y.at(Monomial{}) : w.sum();
  if (std::abs(w.sum() - mass) > 1e-6 * std::max(1.0, std::abs(mass))) {
    return failure(s, "atom weights do not add up to the total mass");
  }

  std::vector<int> order(s);
  for (int j = 0; j < s; ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&](int a2, int b2) {
    for (int v = 0; v < V; ++v) {
      if (atom_coords(a2, v) != atom_coords(b2, v)) {
        return atom_coords(a2, v) < atom_coords(b2, v);
      }
    }
    return false;
  });

  for (int idx : order) {
    if (!(w[idx] > 0.0)) {
      return failure(s, "extraction produced a non-positive weight");
    }
    std::map<FreqIndex, double> values;
    for (int v = 0; v < V; ++v) values[vars[v]] = atom_coords(idx, v);
    CoefficientPoint point(atom_space, std::move(values));
    // Membership in the feasible set, via the instance slack.
    double slack_value = 0.0;
    for (const auto& [m, coeff] : membership_slack.terms()) {
      double term = coeff;
      for (const auto& a : m.entries()) {
        auto it = std::lower_bound(vars.begin(), vars.end(), a);
        if (it == vars.end() || !(*it == a)) {
          term = 0.0;
          break;
        }
        term *= atom_coords(idx, static_cast<int>(it - vars.begin()));
      }
      slack_value += term;
    }
    if (slack_value < -options.membership_tol) {
      std::ostringstream msg;
      msg << "extracted atom violates the constraint by " << -slack_value;
      return failure(s, msg.str());
    }
    report.atoms.atoms.push_back({w[idx], std::move(point)});
  }
  report.flat = true;
  return report;
}

ExtractionReport extract_atoms(const MomentVector& y, int r, int rho,
                               const ExtractionOptions& options) {
  const auto vars = frequency_window(y.space.n, rho);
  return extract_atoms(y, vars, r, ellipsoid_slack(y.space, vars), y.space, options);
}

Eigen::MatrixXd atoms_to_functions(const ExtractionReport& report,
                                   const std::vector<std::vector<double>>& grid) {
  if (report.atoms.atoms.empty()) {
    throw std::invalid_argument("no atoms to synthesize");
  }
  MatrixXd out(static_cast<int>(report.atoms.atoms.size()), static_cast<int>(grid.size()));
  for (std::size_t i = 0; i < report.atoms.atoms.size(); ++i) {
    for (std::size_t j = 0; j < grid.size(); ++j) {
      out(static_cast<int>(i), static_cast<int>(j)) =
          synthesize(report.atoms.atoms[i].point, grid[j]);
    }
  }
  return out;
}

}  // namespace sobomos
