#include "sobomos/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace sobomos {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void SdpProblem::validate() const {
  if (variable_count < 1) throw std::invalid_argument("SDP needs at least one variable");
  if (objective.size() != variable_count) {
    throw std::invalid_argument("objective length does not match variable count");
  }
  if (blocks.empty()) throw std::invalid_argument("SDP needs at least one block");
  for (const auto& block : blocks) {
    if (block.size < 1) throw std::invalid_argument("block size must be >= 1");
    for (const auto& e : block.constant) {
      if (e.row < 0 || e.col < e.row || e.col >= block.size) {
        throw std::invalid_argument("constant entry outside the upper triangle");
      }
    }
    for (const auto& e : block.terms) {
      if (e.var < 0 || e.var >= variable_count) {
        throw std::invalid_argument("term references an unknown variable");
      }
      if (e.row < 0 || e.col < e.row || e.col >= block.size) {
        throw std::invalid_argument("term entry outside the upper triangle");
      }
    }
  }
  for (const auto& eq : equalities) {
    if (eq.coeffs.empty()) throw std::invalid_argument("equality with no coefficients");
    for (const auto& [k, v] : eq.coeffs) {
      if (k < 0 || k >= variable_count) {
        throw std::invalid_argument("equality references an unknown variable");
      }
    }
  }
}

MatrixXd SdpProblem::block_value(int l, const VectorXd& x) const {
  const auto& block = blocks[l];
  MatrixXd S = MatrixXd::Zero(block.size, block.size);
  for (const auto& e : block.constant) {
    S(e.row, e.col) += e.value;
    if (e.row != e.col) S(e.col, e.row) += e.value;
  }
  for (const auto& e : block.terms) {
    S(e.row, e.col) += x[e.var] * e.value;
    if (e.row != e.col) S(e.col, e.row) += x[e.var] * e.value;
  }
  return S;
}

const char* to_string(SdpStatus status) {
  switch (status) {
    case SdpStatus::Optimal: return "optimal";
    case SdpStatus::MaxIter: return "max_iter";
    case SdpStatus::InfeasibleSuspect: return "infeasible_suspect";
  }
  return "unknown";
}

namespace {

// Per-block problem data with entries grouped by variable.
struct BlockData {
  int size = 0;
  MatrixXd C;
  std::vector<std::vector<SdpProblem::MatEntry>> per_var;  // length K
  std::vector<int> active;                                 // vars with entries
};

// Per-block Nesterov-Todd scaling state.
struct Scaling {
  MatrixXd Whalf, Winvhalf, Winv;
  MatrixXd Qv;
  VectorXd dv;  // eigenvalues of V = W^{-1/2} S W^{-1/2}
};

MatrixXd sym(const MatrixXd& M) { return 0.5 * (M + M.transpose()); }

// <A_k, M> with A_k given by symmetric upper-triangle entries.
double sparse_inner(const std::vector<SdpProblem::MatEntry>& entries, const MatrixXd& M) {
  double s = 0.0;
  for (const auto& e : entries) {
    s += (e.row == e.col ? 1.0 : 2.0) * e.value * M(e.row, e.col);
  }
  return s;
}

void add_sparse(MatrixXd& M, const std::vector<SdpProblem::MatEntry>& entries, double scale) {
  for (const auto& e : entries) {
    M(e.row, e.col) += scale * e.value;
    if (e.row != e.col) M(e.col, e.row) += scale * e.value;
  }
}

// Largest step alpha with X + alpha*D still positive definite, capped at 1.
double max_step(const MatrixXd& X, const MatrixXd& D) {
  Eigen::LLT<MatrixXd> llt(X);
  if (llt.info() != Eigen::Success) return 0.0;
  const MatrixXd L = llt.matrixL();
  MatrixXd B = L.template triangularView<Eigen::Lower>().solve(D);
  B = L.template triangularView<Eigen::Lower>().solve(B.transpose().eval());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sym(B), Eigen::EigenvaluesOnly);
  const double lambda_min = eig.eigenvalues().minCoeff();
  if (lambda_min >= 0.0) return 1.0;
  return std::min(1.0, -1.0 / lambda_min);
}

MatrixXd psd_power(const MatrixXd& M, double p, double floor_ratio = 1e-14) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sym(M));
  VectorXd vals = eig.eigenvalues();
  const double top = std::max(vals.maxCoeff(), 1e-300);
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    vals[i] = std::pow(std::max(vals[i], floor_ratio * top), p);
  }
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

std::string diagnostics_line(int iter, double mu, double rp, double rd, double gap) {
  std::ostringstream os;
  os << "iter=" << iter << " mu=" << mu << " primal_res=" << rp << " dual_res=" << rd
     << " relgap=" << gap;
  return os.str();
}

}  // namespace

SdpSolution solve(const SdpProblem& problem, const SolveOptions& options) {
  problem.validate();
  if (!(options.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");

  const int K = problem.variable_count;
  const int L = static_cast<int>(problem.blocks.size());
  const int J = static_cast<int>(problem.equalities.size());

  // Scale the objective and each block so entries are O(1); undone on return.
  const double cscale = std::max(1.0, problem.objective.cwiseAbs().maxCoeff());
  VectorXd c = problem.objective / cscale;

  std::vector<BlockData> data(L);
  std::vector<double> block_scale(L, 1.0);
  for (int l = 0; l < L; ++l) {
    const auto& block = problem.blocks[l];
    double s = 1.0;
    for (const auto& e : block.constant) s = std::max(s, std::abs(e.value));
    for (const auto& e : block.terms) s = std::max(s, std::abs(e.value));
    block_scale[l] = s;
    data[l].size = block.size;
    data[l].C = MatrixXd::Zero(block.size, block.size);
    for (const auto& e : block.constant) {
      data[l].C(e.row, e.col) += e.value / s;
      if (e.row != e.col) data[l].C(e.col, e.row) += e.value / s;
    }
    data[l].per_var.resize(K);
    for (const auto& e : block.terms) {
      data[l].per_var[e.var].push_back({e.row, e.col, e.value / s});
    }
    for (int k = 0; k < K; ++k) {
      if (!data[l].per_var[k].empty()) data[l].active.push_back(k);
    }
  }

  MatrixXd G = MatrixXd::Zero(J, K);
  VectorXd h = VectorXd::Zero(J);
  for (int j = 0; j < J; ++j) {
    for (const auto& [k, v] : problem.equalities[j].coeffs) G(j, k) += v;
    h[j] = problem.equalities[j].rhs;
  }

  const double dim_total = [&] {
    double d = 0;
    for (const auto& b : data) d += b.size;
    return d;
  }();

  // Identity-scaled start.
  double cnorm = std::max(1.0, c.norm());
  double Cnorm = 1.0;
  for (const auto& b : data) Cnorm = std::max(Cnorm, b.C.norm() / std::sqrt(b.size));
  const double tau_p = 10.0 * Cnorm;
  const double tau_d = 10.0 * cnorm;

  VectorXd x = VectorXd::Zero(K);
  VectorXd lam = VectorXd::Zero(J);
  std::vector<MatrixXd> S(L), Z(L);
  for (int l = 0; l < L; ++l) {
    S[l] = tau_p * MatrixXd::Identity(data[l].size, data[l].size);
    Z[l] = tau_d * MatrixXd::Identity(data[l].size, data[l].size);
  }

  auto apply_A = [&](int l, const VectorXd& v) {
    MatrixXd M = MatrixXd::Zero(data[l].size, data[l].size);
    for (int k : data[l].active) add_sparse(M, data[l].per_var[k], v[k]);
    return M;
  };
  auto adjoint_add = [&](int l, const MatrixXd& M, VectorXd& out) {
    for (int k : data[l].active) out[k] += sparse_inner(data[l].per_var[k], M);
  };

  SdpStatus status = SdpStatus::MaxIter;
  int iter = 0;
  int stall_count = 0;
  double mu = 0.0, relgap = 0.0, rp_norm = 0.0, rd_norm = 0.0;

  std::vector<MatrixXd> rp(L);
  std::vector<Scaling> sc(L);
  std::vector<MatrixXd> dS(L), dZ(L), dS_aff(L), dZ_aff(L), Rhat(L);
  VectorXd dx(K), dlam(J);

  for (iter = 0; iter < options.max_iter; ++iter) {
    // Residuals and convergence bookkeeping.
    rp_norm = 0.0;
    for (int l = 0; l < L; ++l) {
      rp[l] = data[l].C + apply_A(l, x) - S[l];
      rp_norm = std::max(rp_norm, rp[l].norm() / (1.0 + data[l].C.norm()));
    }
    VectorXd re = h - G * x;
    if (J > 0) {
      rp_norm = std::max(rp_norm, re.cwiseAbs().maxCoeff() /
                                      (1.0 + h.cwiseAbs().maxCoeff()));
    }
    VectorXd rd = c;
    for (int l = 0; l < L; ++l) adjoint_add(l, -Z[l], rd);
    if (J > 0) rd -= G.transpose() * lam;
    rd_norm = rd.cwiseAbs().maxCoeff() / (1.0 + c.cwiseAbs().maxCoeff());

    double gap_inner = 0.0;
    double dual_obj = J > 0 ? h.dot(lam) : 0.0;
    for (int l = 0; l < L; ++l) {
      gap_inner += S[l].cwiseProduct(Z[l]).sum();
      dual_obj -= data[l].C.cwiseProduct(Z[l]).sum();
    }
    mu = gap_inner / dim_total;
    const double primal_obj = c.dot(x);
    relgap = std::max(gap_inner, std::abs(primal_obj - dual_obj)) /
             (1.0 + std::abs(primal_obj) + std::abs(dual_obj));

    if (relgap <= options.tol && rp_norm <= options.tol && rd_norm <= options.tol) {
      status = SdpStatus::Optimal;
      break;
    }
    if (dual_obj > 1e10 * (1.0 + std::abs(primal_obj)) && rp_norm > options.tol) {
      status = SdpStatus::InfeasibleSuspect;
      break;
    }

    // Nesterov-Todd scaling per block: W Z W = S.
    for (int l = 0; l < L; ++l) {
      const MatrixXd Shalf = psd_power(S[l], 0.5);
      const MatrixXd Minvhalf = psd_power(Shalf * Z[l] * Shalf, -0.5);
      const MatrixXd W = sym(Shalf * Minvhalf * Shalf);
      sc[l].Whalf = psd_power(W, 0.5);
      sc[l].Winvhalf = psd_power(W, -0.5);
      sc[l].Winv = sc[l].Winvhalf * sc[l].Winvhalf;
      Eigen::SelfAdjointEigenSolver<MatrixXd> eig(
          sym(sc[l].Winvhalf * S[l] * sc[l].Winvhalf));
      sc[l].Qv = eig.eigenvectors();
      sc[l].dv = eig.eigenvalues().cwiseMax(1e-300);
    }

    // Schur complement H_kk' = sum_l <A_lk, W^-1 A_lk' W^-1>.
    MatrixXd H = MatrixXd::Zero(K, K);
    for (int l = 0; l < L; ++l) {
      const MatrixXd& U = sc[l].Winv;
      MatrixXd T(data[l].size, data[l].size);
      for (int k : data[l].active) {
        T.setZero();
        for (const auto& e : data[l].per_var[k]) {
          T.noalias() += e.value * U.col(e.row) * U.row(e.col);
          if (e.row != e.col) T.noalias() += e.value * U.col(e.col) * U.row(e.row);
        }
        for (int k2 : data[l].active) {
          if (k2 < k) continue;
          H(k, k2) += sparse_inner(data[l].per_var[k2], sym(T));
        }
      }
    }
    H = H.selfadjointView<Eigen::Upper>();

    Eigen::LDLT<MatrixXd> hfac;
    double ridge = 0.0;
    const double hscale = std::max(1.0, H.diagonal().maxCoeff());
    for (int attempt = 0; attempt < 4; ++attempt) {
      hfac.compute(H + ridge * hscale * MatrixXd::Identity(K, K));
      VectorXd probe = hfac.solve(VectorXd::Ones(K));
      if (hfac.info() == Eigen::Success && probe.allFinite()) break;
      ridge = ridge == 0.0 ? 1e-13 : ridge * 1e3;
      if (attempt == 3) {
        throw SolveError("Schur complement factorization broke down",
                         diagnostics_line(iter, mu, rp_norm, rd_norm, relgap));
      }
    }
    MatrixXd HinvGt;
    Eigen::LDLT<MatrixXd> eqfac;
    if (J > 0) {
      HinvGt = hfac.solve(G.transpose());
      eqfac.compute(G * HinvGt);
    }

    auto newton_pass = [&](double sigma_mu, const std::vector<MatrixXd>* corr) {
      VectorXd rhs1 = -rd;
      for (int l = 0; l < L; ++l) {
        // Centering rhs sigma*mu*I - V^2 - corr, solved through the Lyapunov
        // operator of V in its eigenbasis.
        const int s = data[l].size;
        MatrixXd Mtil = MatrixXd::Zero(s, s);
        Mtil.diagonal() = sigma_mu * VectorXd::Ones(s) - sc[l].dv.cwiseProduct(sc[l].dv);
        if (corr) {
          Mtil -= sc[l].Qv.transpose() * (*corr)[l] * sc[l].Qv;
        }
        for (int i = 0; i < s; ++i) {
          for (int j2 = 0; j2 < s; ++j2) {
            Mtil(i, j2) = 2.0 * Mtil(i, j2) / (sc[l].dv[i] + sc[l].dv[j2]);
          }
        }
        Rhat[l] = sym(sc[l].Qv * Mtil * sc[l].Qv.transpose());
        const MatrixXd E = sc[l].Winvhalf * Rhat[l] * sc[l].Winvhalf -
                           sc[l].Winv * rp[l] * sc[l].Winv;
        adjoint_add(l, sym(E), rhs1);
      }
      if (J > 0) {
        const VectorXd t1 = hfac.solve(rhs1);
        dlam = eqfac.solve(re - G * t1);
        dx = t1 + HinvGt * dlam;
      } else {
        dx = hfac.solve(rhs1);
      }
      if (!dx.allFinite()) {
        throw SolveError("Newton direction is not finite",
                         diagnostics_line(iter, mu, rp_norm, rd_norm, relgap));
      }
      for (int l = 0; l < L; ++l) {
        dS[l] = apply_A(l, dx) + rp[l];
        dZ[l] = sym(sc[l].Winvhalf * Rhat[l] * sc[l].Winvhalf -
                    sc[l].Winv * dS[l] * sc[l].Winv);
      }
    };

    // Predictor.
    newton_pass(0.0, nullptr);
    double ap = 1.0, ad = 1.0;
    for (int l = 0; l < L; ++l) {
      ap = std::min(ap, max_step(S[l], dS[l]));
      ad = std::min(ad, max_step(Z[l], dZ[l]));
    }
    double gap_aff = 0.0;
    for (int l = 0; l < L; ++l) {
      gap_aff += (S[l] + ap * dS[l]).cwiseProduct(Z[l] + ad * dZ[l]).sum();
    }
    const double mu_aff = std::max(gap_aff / dim_total, 0.0);
    double sigma = std::pow(mu_aff / mu, 3.0);
    sigma = std::clamp(sigma, 1e-8, 1.0 - 1e-8);
    if (stall_count >= 2) sigma = std::max(sigma, 0.5);

    // Corrector with the second-order term in the scaled space.
    std::vector<MatrixXd> corr(L);
    for (int l = 0; l < L; ++l) {
      dS_aff[l] = sc[l].Winvhalf * dS[l] * sc[l].Winvhalf;
      dZ_aff[l] = sc[l].Whalf * dZ[l] * sc[l].Whalf;
      corr[l] = sym(dZ_aff[l] * dS_aff[l]);
    }
    newton_pass(sigma * mu, &corr);

    ap = 1.0;
    ad = 1.0;
    for (int l = 0; l < L; ++l) {
      ap = std::min(ap, 0.98 * max_step(S[l], dS[l]));
      ad = std::min(ad, 0.98 * max_step(Z[l], dZ[l]));
    }
    ap = std::min(ap, 1.0);
    ad = std::min(ad, 1.0);
    if (std::min(ap, ad) < 1e-4) {
      ++stall_count;
      if (stall_count > 8) {
        throw SolveError("interior-point iteration stalled",
                         diagnostics_line(iter, mu, rp_norm, rd_norm, relgap));
      }
    } else {
      stall_count = 0;
    }

    x += ap * dx;
    for (int l = 0; l < L; ++l) {
      S[l] = sym(S[l] + ap * dS[l]);
      Z[l] = sym(Z[l] + ad * dZ[l]);
    }
    if (J > 0) lam += ad * dlam;
  }

  // Report in the original (unscaled) data.
  SdpSolution sol;
  sol.x = x;
  sol.status = status;
  sol.iterations = iter;
  sol.eq_dual = cscale * lam;
  sol.block_primal.resize(L);
  sol.block_dual.resize(L);
  double gap_inner = 0.0;
  double primal_obj = problem.objective.dot(x);
  double dual_obj = 0.0;
  for (int j = 0; j < J; ++j) dual_obj += problem.equalities[j].rhs * sol.eq_dual[j];
  sol.primal_residual = 0.0;
  for (int l = 0; l < L; ++l) {
    sol.block_primal[l] = block_scale[l] * S[l];
    sol.block_dual[l] = (cscale / block_scale[l]) * Z[l];
    const MatrixXd Sx = problem.block_value(l, x);
    sol.primal_residual =
        std::max(sol.primal_residual, (Sx - sol.block_primal[l]).norm() /
                                          (1.0 + block_scale[l] * data[l].C.norm()));
    gap_inner += sol.block_primal[l].cwiseProduct(sol.block_dual[l]).sum();
    dual_obj -= (block_scale[l] * data[l].C).cwiseProduct(sol.block_dual[l]).sum();
  }
  if (J > 0) {
    VectorXd re = h - G * x;
    sol.primal_residual = std::max(
        sol.primal_residual, re.cwiseAbs().maxCoeff() / (1.0 + h.cwiseAbs().maxCoeff()));
  }
  VectorXd rd = problem.objective;
  for (int l = 0; l < L; ++l) {
    for (int k : data[l].active) {
      // adjoint in original scaling
      double v = 0.0;
      for (const auto& e : data[l].per_var[k]) {
        v += (e.row == e.col ? 1.0 : 2.0) * (e.value * block_scale[l]) *
             sol.block_dual[l](e.row, e.col);
      }
      rd[k] -= v;
    }
  }
  if (J > 0) rd -= G.transpose() * sol.eq_dual;
  sol.dual_residual =
      rd.cwiseAbs().maxCoeff() / (1.0 + problem.objective.cwiseAbs().maxCoeff());
  sol.objective = primal_obj;
  sol.gap = std::max(gap_inner, std::abs(primal_obj - dual_obj)) /
            (1.0 + std::abs(primal_obj) + std::abs(dual_obj));
  return sol;
}

nlohmann::json sdp_to_json(const SdpProblem& problem) {
  nlohmann::json j;
  j["variables"] = problem.variable_count;
  j["objective"] = std::vector<double>(problem.objective.data(),
                                       problem.objective.data() + problem.objective.size());
  j["blocks"] = nlohmann::json::array();
  for (const auto& block : problem.blocks) {
    nlohmann::json jb;
    jb["size"] = block.size;
    jb["constant"] = nlohmann::json::array();
    for (const auto& e : block.constant) {
      jb["constant"].push_back({{"row", e.row}, {"col", e.col}, {"value", e.value}});
    }
    jb["terms"] = nlohmann::json::array();
    for (const auto& e : block.terms) {
      jb["terms"].push_back(
          {{"var", e.var}, {"row", e.row}, {"col", e.col}, {"value", e.value}});
    }
    j["blocks"].push_back(std::move(jb));
  }
  j["equalities"] = nlohmann::json::array();
  for (const auto& eq : problem.equalities) {
    nlohmann::json je;
    je["rhs"] = eq.rhs;
    je["coeffs"] = nlohmann::json::array();
    for (const auto& [k, v] : eq.coeffs) {
      je["coeffs"].push_back({{"var", k}, {"value", v}});
    }
    j["equalities"].push_back(std::move(je));
  }
  return j;
}

SdpProblem sdp_from_json(const nlohmann::json& j) {
  SdpProblem p;
  p.variable_count = j.at("variables").get<int>();
  const auto obj = j.at("objective").get<std::vector<double>>();
  p.objective = Eigen::Map<const VectorXd>(obj.data(), static_cast<Eigen::Index>(obj.size()));
  for (const auto& jb : j.at("blocks")) {
    SdpProblem::Block block;
    block.size = jb.at("size").get<int>();
    for (const auto& je : jb.at("constant")) {
      block.constant.push_back({je.at("row").get<int>(), je.at("col").get<int>(),
                                je.at("value").get<double>()});
    }
    for (const auto& je : jb.at("terms")) {
      block.terms.push_back({je.at("var").get<int>(), je.at("row").get<int>(),
                             je.at("col").get<int>(), je.at("value").get<double>()});
    }
    p.blocks.push_back(std::move(block));
  }
  for (const auto& je : j.at("equalities")) {
    SdpProblem::Equality eq;
    eq.rhs = je.at("rhs").get<double>();
    for (const auto& jc : je.at("coeffs")) {
      eq.coeffs.emplace_back(jc.at("var").get<int>(), jc.at("value").get<double>());
    }
    p.equalities.push_back(std::move(eq));
  }
  p.validate();
  return p;
}

}  // namespace sobomos
