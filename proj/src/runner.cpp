#include "sobomos/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sobomos/extract.hpp"
#include "sobomos/innercone.hpp"
#include "sobomos/momentcone.hpp"

namespace sobomos {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

json real(double v) { return round_result(v); }

FourierPolynomial parse_harmonic_objective(const json& j, const SobolevSpace& space) {
  FourierPolynomial p(space);
  for (const auto& term : j) {
    const auto text = term.at("monomial").get<std::string>();
    p.add_term(monomial_from_text(text, space.n), term.at("coeff").get<double>());
  }
  return p;
}

LinearFunctionalSpec parse_functional(const json& j, int n) {
  auto parse_term = [n](const json& jt) {
    LinearFunctionalSpec::Term term;
    const auto kind = jt.at("kind").get<std::string>();
    if (kind == "dirac") {
      term.kind = LinearFunctionalSpec::Term::Kind::Dirac;
      term.x = jt.at("x").get<std::vector<double>>();
    } else if (kind == "lebesgue") {
      term.kind = LinearFunctionalSpec::Term::Kind::Lebesgue;
    } else {
      throw ProblemParseError("unknown functional kind '" + kind + "'");
    }
    if (jt.contains("coeff")) term.coeff = jt.at("coeff").get<double>();
    return term;
  };
  LinearFunctionalSpec spec;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "weighted_sum") {
    for (const auto& jt : j.at("terms")) spec.terms.push_back(parse_term(jt));
  } else {
    spec.terms.push_back(parse_term(j));
  }
  validate(spec, n);
  for (const auto& term : spec.terms) {
    if (term.kind == LinearFunctionalSpec::Term::Kind::Dirac &&
        !is_lattice_rational(term.x)) {
      std::cerr << "warning: dirac point is not lattice-rational; compiled "
                   "coefficients will not be exactly reproducible\n";
    }
  }
  return spec;
}

}  // namespace

double round_result(double v) {
  if (!std::isfinite(v)) return v;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::strtod(buf, nullptr);
}

ProblemFile parse_problem(const json& j) {
  ProblemFile file;
  file.raw = j;
  const auto type = j.at("type").get<std::string>();
  file.space = {j.at("n").get<int>(), j.at("m").get<int>()};
  validate(file.space);
  if (type == "harmonic") {
    file.type = ProblemFile::Type::Harmonic;
    file.harmonic = parse_harmonic_objective(j.at("objective"), file.space);
  } else if (type == "algebraic") {
    file.type = ProblemFile::Type::Algebraic;
    AlgebraicProblem prob;
    prob.space = file.space;
    prob.functional = parse_functional(j.at("functional"), file.space.n);
    if (j.contains("derivatives")) {
      prob.derivatives = j.at("derivatives").get<std::vector<std::vector<int>>>();
    }
    for (const auto& jt : j.at("integrand")) {
      prob.integrand.push_back(
          {jt.at("powers").get<std::vector<int>>(), jt.at("coeff").get<double>()});
    }
    validate(prob);
    file.algebraic = std::move(prob);
  } else if (type == "kernel") {
    file.type = ProblemFile::Type::Kernel;
    KernelProblem prob;
    prob.space = file.space;
    prob.points = j.at("points").get<std::vector<std::vector<double>>>();
    for (const auto& jt : j.at("objective")) {
      prob.objective.push_back(
          {jt.at("powers").get<std::vector<int>>(), jt.at("coeff").get<double>()});
    }
    if (j.contains("radius") && !j.at("radius").is_null()) {
      prob.radius = j.at("radius").get<double>();
    }
    validate(prob);
    file.kernel = std::move(prob);
  } else {
    throw ProblemParseError("unknown problem type '" + type + "'");
  }
  return file;
}

ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ProblemParseError("cannot open problem file " + path);
  json j;
  try {
    in >> j;
    return parse_problem(j);
  } catch (const json::exception& e) {
    throw ProblemParseError("bad problem file " + path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ProblemParseError("bad problem file " + path + ": " + e.what());
  }
}

void validate(const RunConfig& config) {
  if (config.problem_path.empty()) {
    throw ProblemParseError("a problem file is required");
  }
  if (config.r < 1) throw ProblemParseError("r must be >= 1");
  if (!(config.tol > 0.0 && config.tol <= 1e-2)) {
    throw ProblemParseError("tol must lie in (0, 1e-2]");
  }
  if (config.r_sweep) {
    if (config.r_sweep->first < 1 || config.r_sweep->second < config.r_sweep->first) {
      throw ProblemParseError("bad r sweep range");
    }
    if (config.out_path.empty()) {
      throw ProblemParseError("--r-sweep needs --out for the CSV");
    }
  }
  if (config.command == RunConfig::Command::Certify && config.moments_path.empty()) {
    throw ProblemParseError("certify needs a moments file");
  }
  if (config.command == RunConfig::Command::SampleReference) {
    if (config.rho < 0) throw ProblemParseError("sample-reference needs --rho");
    if (config.max_degree < 0) throw ProblemParseError("sample-reference needs --max-degree");
    if (config.ref_cache.empty() && config.out_path.empty()) {
      throw ProblemParseError("sample-reference needs --ref-cache or --out");
    }
  }
  if (config.samples < 1000) throw ProblemParseError("samples must be >= 1000");
}

namespace {

struct Timings {
  Clock::time_point start = Clock::now();
  double solve_ms = 0.0;
  double sample_ms = 0.0;
};

json atoms_json(const ExtractionReport& report) {
  json out = json::array();
  for (const auto& atom : report.atoms.atoms) {
    json coeffs = json::array();
    for (const auto& [a, v] : atom.point.values()) {
      coeffs.push_back({to_text(a), real(v)});
    }
    out.push_back({{"weight", real(atom.weight)}, {"coefficients", std::move(coeffs)}});
  }
  return out;
}

json moments_json(const MomentVector& y) {
  json out = json::object();
  for (const auto& [m, v] : y.entries) out[to_text(m)] = real(v);
  return out;
}

json solver_json(const SdpSolution& sol) {
  return {{"iterations", sol.iterations},
          {"gap", real(sol.gap)},
          {"primal_residual", real(sol.primal_residual)},
          {"dual_residual", real(sol.dual_residual)},
          {"status", to_string(sol.status)}};
}

void write_function_csvs(const RunConfig& config, const Eigen::MatrixXd& values,
                         const std::vector<std::vector<double>>& grid) {
  const std::filesystem::path base(config.out_path);
  for (int a = 0; a < values.rows(); ++a) {
    std::filesystem::path path = base;
    path.replace_extension("");
    path += "_atom" + std::to_string(a) + ".csv";
    std::ofstream out(path);
    out << "x,f\n";
    for (int g = 0; g < values.cols(); ++g) {
      char line[64];
      std::snprintf(line, sizeof line, "%.12g,%.12g\n", grid[g][0], values(a, g));
      out << line;
    }
  }
}

std::vector<std::vector<double>> uniform_grid(int n, int count) {
  if (n != 1) {
    throw ProblemParseError("--grid currently supports one-dimensional problems only");
  }
  std::vector<std::vector<double>> grid;
  for (int i = 0; i < count; ++i) {
    grid.push_back({static_cast<double>(i) / count});
  }
  return grid;
}

// Resolves the reference moments for the inner route: explicit cache file,
// cache directory from SOBOMOS_REF_CACHE, or a fresh in-memory estimate.
ReferenceMoments resolve_reference(const RunConfig& config, const SobolevSpace& space,
                                   int rho, int needed_degree, Timings& timings) {
  std::string path = config.ref_cache;
  if (path.empty()) {
    if (const char* dir = std::getenv("SOBOMOS_REF_CACHE"); dir != nullptr && *dir) {
      std::ostringstream name;
      name << "sobomos-ref-n" << space.n << "-m" << space.m << "-rho" << rho << "-d"
           << needed_degree << "-s" << config.samples << "-seed" << config.seed
           << ".json";
      path = (std::filesystem::path(dir) / name.str()).string();
    }
  }
  if (!path.empty() && std::filesystem::exists(path)) {
    ReferenceMoments ref = load_reference_cache(path);
    if (ref.space == space && ref.rho == rho && ref.max_degree >= needed_degree &&
        ref.samples == config.samples && ref.seed == config.seed) {
      return ref;
    }
    std::cerr << "warning: reference cache " << path
              << " does not match the request; resampling\n";
  }
  const auto t0 = Clock::now();
  ReferenceMoments ref =
      estimate_reference_moments(space, rho, needed_degree, config.samples, config.seed);
  timings.sample_ms += ms_since(t0);
  if (!path.empty()) save_reference_cache(ref, path);
  return ref;
}

// The objective in relaxation variables, plus the rho actually used.
std::pair<FourierPolynomial, int> resolve_objective(const RunConfig& config,
                                                    const ProblemFile& problem) {
  if (problem.type == ProblemFile::Type::Harmonic) {
    const auto& p = *problem.harmonic;
    const int rho = config.rho >= 0 ? config.rho : p.harmonic_degree();
    return {p, rho};
  }
  if (problem.type == ProblemFile::Type::Algebraic) {
    if (config.rho < 0) {
      throw ProblemParseError("algebraic problems need an explicit --rho truncation");
    }
    return {compile_algebraic(*problem.algebraic, config.rho), config.rho};
  }
  throw ProblemParseError("kernel problems are solved with solve-kernel");
}

json run_outer_level(const RunConfig& config, const FourierPolynomial& objective, int r,
                     int rho, Timings& timings, bool want_atoms) {
  const OuterRelaxation relaxation = build_outer(objective, r, rho);
  if (!config.dump_sdp_path.empty()) {
    std::ofstream out(config.dump_sdp_path);
    if (!out) throw ProblemParseError("cannot write " + config.dump_sdp_path);
    out << sdp_to_json(relaxation.sdp).dump(1) << "\n";
  }
  const auto t0 = Clock::now();
  const OuterResult result = solve_outer(relaxation, config.tol, config.max_iter);
  timings.solve_ms += ms_since(t0);

  json level;
  level["r"] = r;
  level["rho"] = rho;
  level["value"] = real(result.value);
  level["status"] = to_string(result.certificate.status);
  level["solver"] = solver_json(result.certificate);
  level["moments"] = moments_json(result.y);
  if (want_atoms) {
    ExtractionOptions options;
    const ExtractionReport report = extract_atoms(
        result.y, relaxation.vars.vars, r, relaxation.slack, relaxation.space, options);
    level["flat"] = report.flat;
    level["rank"] = report.rank;
    level["residual"] = real(report.residual);
    level["no_certificate"] = !report.flat;
    if (report.flat) {
      level["atoms"] = atoms_json(report);
    } else {
      level["diagnostics"] = report.diagnostics;
    }
    if (report.flat && config.grid > 0 && !report.atoms.atoms.empty() &&
        !config.out_path.empty()) {
      const auto grid = uniform_grid(objective.space().n, config.grid);
      write_function_csvs(config, atoms_to_functions(report, grid), grid);
    }
  }
  return level;
}

json run_inner_level(const RunConfig& config, const FourierPolynomial& objective, int r,
                     int rho, const ReferenceMoments& reference, Timings& timings) {
  const InnerRelaxation relaxation = build_inner(objective, r, rho, reference);
  const auto t0 = Clock::now();
  const InnerResult result = solve_inner(relaxation, config.tol, config.max_iter);
  timings.solve_ms += ms_since(t0);
  json level;
  level["r"] = r;
  level["rho"] = rho;
  level["value"] = real(result.value);
  level["value_std_error"] = real(result.value_std_error);
  level["status"] = to_string(result.certificate.status);
  level["solver"] = solver_json(result.certificate);
  return level;
}

void write_sweep_csv(const RunConfig& config, const json& levels, const char* value_key) {
  std::filesystem::path path(config.out_path);
  path.replace_extension("");
  path += "_sweep.csv";
  std::ofstream out(path);
  out << "r,value\n";
  for (const auto& level : levels) {
    char line[64];
    std::snprintf(line, sizeof line, "%d,%.12g\n", level.at("r").get<int>(),
                  level.at(value_key).get<double>());
    out << line;
  }
}

json certify_report(const RunConfig& config, const ProblemFile& problem, Timings& timings) {
  std::ifstream in(config.moments_path);
  if (!in) throw ProblemParseError("cannot open moments file " + config.moments_path);
  json jy;
  try {
    in >> jy;
  } catch (const json::exception& e) {
    throw ProblemParseError(std::string("bad moments file: ") + e.what());
  }
  const SobolevSpace space{jy.at("n").get<int>(), jy.at("m").get<int>()};
  if (!(space == problem.space)) {
    throw ProblemParseError("moments file and problem file disagree on the space");
  }
  MomentVector y;
  y.space = space;
  for (const auto& je : jy.at("entries")) {
    y.entries[monomial_from_text(je.at("monomial").get<std::string>(), space.n)] =
        je.at("value").get<double>();
  }
  int rho = config.rho;
  if (rho < 0) {
    rho = 0;
    for (const auto& [m, v] : y.entries) rho = std::max(rho, m.harmonic_degree());
  }
  const int r = config.r;
  y.r = r;
  y.rho = rho;

  // Outer membership: both matrices must be PSD.
  const auto window = frequency_window(space.n, rho);
  std::vector<Monomial> missing;
  for (const auto& m : enumerate_monomials(window, 2 * r)) {
    if (!y.contains(m)) missing.push_back(m);
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "moments file lacks " << missing.size() << " required entries:";
    for (std::size_t i = 0; i < missing.size() && i < 12; ++i) {
      msg << ' ' << to_text(missing[i]);
    }
    if (missing.size() > 12) msg << " ...";
    throw ProblemParseError(msg.str());
  }

  json report;
  report["r"] = r;
  report["rho"] = rho;
  const Eigen::MatrixXd M = moment_matrix(y, window, r);
  const Eigen::MatrixXd Mloc = localizing_matrix(y, window, r, ellipsoid_slack(space, window));
  const auto basis = enumerate_monomials(window, r);
  const auto basis_loc = enumerate_monomials(window, r - 1);

  bool outer_pass = true;
  auto check_block = [&](const Eigen::MatrixXd& block, const std::vector<Monomial>& bas,
                         const char* name) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(block);
    const double min_eig = eig.eigenvalues().minCoeff();
    report[name]["min_eigenvalue"] = real(min_eig);
    if (min_eig < -1e-9) {
      outer_pass = false;
      // The eigenvector is a separating functional: the square of the
      // polynomial it indexes has negative value against y.
      json direction = json::array();
      const auto v = eig.eigenvectors().col(0);
      for (std::size_t i = 0; i < bas.size(); ++i) {
        direction.push_back({to_text(bas[i]), real(v[static_cast<Eigen::Index>(i)])});
      }
      report[name]["separating_direction"] = std::move(direction);
    }
  };
  check_block(M, basis, "moment_block");
  check_block(Mloc, basis_loc, "localizing_block");
  report["outer"] = outer_pass ? "pass" : "fail";

  // Inner certificate: a density in the truncated quadratic module whose
  // moments match the given entries within Monte Carlo tolerance.
  int max_entry_degree = 0;
  for (const auto& [m, v] : y.entries) {
    max_entry_degree = std::max(max_entry_degree, m.algebraic_degree());
  }
  const int needed = max_entry_degree + 2 * r;
  const ReferenceMoments reference =
      resolve_reference(config, space, rho, needed, timings);
  const InnerRelaxation shape =
      build_inner(FourierPolynomial::constant(space, 1.0), r, rho, reference);

  SdpProblem feas;
  feas.variable_count = shape.sdp.variable_count + 1;
  const int t_var = shape.sdp.variable_count;
  feas.objective = Eigen::VectorXd::Zero(feas.variable_count);
  feas.objective[t_var] = 1.0;
  feas.blocks = shape.sdp.blocks;  // the two Gram blocks
  SdpProblem::Block t_block;
  t_block.size = 1;
  t_block.terms.push_back({t_var, 0, 0, 1.0});
  feas.blocks.push_back(std::move(t_block));
  for (const auto& [m, value] : y.entries) {
    const Eigen::VectorXd coeffs = inner_moment_coefficients(shape, m);
    SdpProblem::Block plus, minus;
    plus.size = minus.size = 1;
    plus.constant.push_back({0, 0, value});
    minus.constant.push_back({0, 0, -value});
    plus.terms.push_back({t_var, 0, 0, 1.0});
    minus.terms.push_back({t_var, 0, 0, 1.0});
    for (int k = 0; k < coeffs.size(); ++k) {
      if (coeffs[k] == 0.0) continue;
      plus.terms.push_back({k, 0, 0, -coeffs[k]});
      minus.terms.push_back({k, 0, 0, coeffs[k]});
    }
    feas.blocks.push_back(std::move(plus));
    feas.blocks.push_back(std::move(minus));
  }

  const auto t0 = Clock::now();
  SolveOptions options;
  options.tol = config.tol;
  options.max_iter = config.max_iter;
  const SdpSolution sol = solve(feas, options);
  timings.solve_ms += ms_since(t0);
  if (sol.status != SdpStatus::Optimal) {
    report["inner"] = "inconclusive";
    report["inner_detail"] = std::string("feasibility SDP status: ") + to_string(sol.status);
    return report;
  }
  const int s0 = shape.g0_size();
  Eigen::MatrixXd G0(s0, s0), G1(shape.g1_size(), shape.g1_size());
  {
    int var = 0;
    for (int i = 0; i < s0; ++i) {
      for (int j = i; j < s0; ++j, ++var) G0(i, j) = G0(j, i) = sol.x[var];
    }
    for (int i = 0; i < shape.g1_size(); ++i) {
      for (int j = i; j < shape.g1_size(); ++j, ++var) G1(i, j) = G1(j, i) = sol.x[var];
    }
  }
  bool inner_pass = true;
  double worst_ratio = 0.0;
  double max_violation = 0.0;
  for (const auto& [m, value] : y.entries) {
    double se = 0.0;
    const double fitted = inner_moment_of(shape, G0, G1, m, &se);
    const double violation = std::abs(fitted - value);
    const double allowance = 3.0 * se + 2.0 * config.tol * (1.0 + std::abs(value));
    max_violation = std::max(max_violation, violation);
    worst_ratio = std::max(worst_ratio, violation / std::max(allowance, 1e-300));
    if (violation > allowance) inner_pass = false;
  }
  report["inner"] = inner_pass ? "pass" : "inconclusive";
  report["inner_max_violation"] = real(max_violation);
  report["inner_worst_ratio"] = real(worst_ratio);
  return report;
}

json run_kernel(const RunConfig& config, const ProblemFile& problem, Timings& timings) {
  if (problem.type != ProblemFile::Type::Kernel) {
    throw ProblemParseError("solve-kernel needs a kernel problem file");
  }
  const PeriodicKernel kernel(problem.space, config.kernel_tol);
  std::vector<std::vector<double>> grid;
  if (config.grid > 0) grid = uniform_grid(problem.space.n, config.grid);

  const auto t0 = Clock::now();
  const KernelResult result =
      solve_kernel_pop(*problem.kernel, kernel, config.r, config.tol, grid);
  timings.solve_ms += ms_since(t0);

  json out;
  out["value"] = real(result.value);
  out["status"] = to_string(result.outer.certificate.status);
  out["solver"] = solver_json(result.outer.certificate);
  out["kernel"] = {{"lattice_cutoff", kernel.lattice_cutoff()},
                   {"tail_bound", real(kernel.tail_bound())}};
  json gram_json = json::array();
  for (int i = 0; i < result.gram.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < result.gram.cols(); ++j) row.push_back(real(result.gram(i, j)));
    gram_json.push_back(std::move(row));
  }
  out["gram"] = std::move(gram_json);
  out["flat"] = result.extraction.flat;
  out["rank"] = result.extraction.rank;
  out["residual"] = real(result.extraction.residual);
  out["no_certificate"] = !result.extraction.flat;
  if (result.extraction.flat) {
    json atoms = json::array();
    for (const auto& [weight, w] : result.atoms) {
      json coeffs = json::array();
      for (int j = 0; j < w.size(); ++j) {
        coeffs.push_back({"(" + std::to_string(j) + ")", real(w[j])});
      }
      atoms.push_back({{"weight", real(weight)}, {"coefficients", std::move(coeffs)}});
    }
    out["atoms"] = std::move(atoms);
    out["moments"] = moments_json(result.outer.y);
  } else {
    out["diagnostics"] = result.extraction.diagnostics;
  }
  if (!grid.empty() && result.extraction.flat && !config.out_path.empty() &&
      result.representer_values.size() > 0) {
    write_function_csvs(config, result.representer_values, grid);
  }
  return out;
}

}  // namespace

RunOutcome run(const RunConfig& config) {
  Timings timings;
  json results;
  results["command"] = [&] {
    switch (config.command) {
      case RunConfig::Command::SolveOuter: return "solve-outer";
      case RunConfig::Command::SolveInner: return "solve-inner";
      case RunConfig::Command::SolveKernel: return "solve-kernel";
      case RunConfig::Command::Certify: return "certify";
      case RunConfig::Command::SampleReference: return "sample-reference";
    }
    return "unknown";
  }();

  int exit_code = 0;
  try {
    validate(config);
    if (config.command == RunConfig::Command::SampleReference) {
      const ProblemFile problem = load_problem(config.problem_path);
      const auto t0 = Clock::now();
      const ReferenceMoments ref = estimate_reference_moments(
          problem.space, config.rho, config.max_degree, config.samples, config.seed);
      timings.sample_ms += ms_since(t0);
      const std::string path =
          config.ref_cache.empty() ? config.out_path : config.ref_cache;
      save_reference_cache(ref, path);
      results["cache_path"] = path;
      results["accepted"] = ref.accepted;
      results["samples"] = ref.samples;
      results["entries"] = ref.basis.size();
    } else {
      const ProblemFile problem = load_problem(config.problem_path);
      results["problem"] = problem.raw;
      results["tol"] = real(config.tol);
      results["seed"] = config.seed;

      switch (config.command) {
        case RunConfig::Command::SolveOuter: {
          const auto [objective, rho] = resolve_objective(config, problem);
          json levels = json::array();
          const int r_lo = config.r_sweep ? config.r_sweep->first : config.r;
          const int r_hi = config.r_sweep ? config.r_sweep->second : config.r;
          for (int r = r_lo; r <= r_hi; ++r) {
            levels.push_back(
                run_outer_level(config, objective, r, rho, timings, /*want_atoms=*/true));
          }
          const json& last = levels.back();
          for (const auto& [key, val] : last.items()) results[key] = val;
          if (config.r_sweep) {
            results["levels"] = levels;
            write_sweep_csv(config, levels, "value");
          }
          if (config.with_inner) {
            const int d_obj = objective.algebraic_degree();
            const int needed =
                std::max(2 * r_hi + d_obj, 2 * (r_hi - 1) + 2 + d_obj);
            const ReferenceMoments reference =
                resolve_reference(config, problem.space, rho, needed, timings);
            const json inner =
                run_inner_level(config, objective, r_hi, rho, reference, timings);
            results["bounds"] = {{"outer", last.at("value")},
                                 {"inner", inner.at("value")}};
            results["inner"] = inner;
          }
          break;
        }
        case RunConfig::Command::SolveInner: {
          const auto [objective, rho] = resolve_objective(config, problem);
          const int r_lo = config.r_sweep ? config.r_sweep->first : config.r;
          const int r_hi = config.r_sweep ? config.r_sweep->second : config.r;
          const int d_obj = objective.algebraic_degree();
          const int needed = std::max(2 * r_hi + d_obj, 2 * (r_hi - 1) + 2 + d_obj);
          const ReferenceMoments reference =
              resolve_reference(config, problem.space, rho, needed, timings);
          json levels = json::array();
          for (int r = r_lo; r <= r_hi; ++r) {
            levels.push_back(run_inner_level(config, objective, r, rho, reference, timings));
          }
          const json& last = levels.back();
          for (const auto& [key, val] : last.items()) results[key] = val;
          if (config.r_sweep) {
            results["levels"] = levels;
            write_sweep_csv(config, levels, "value");
          }
          if (config.with_outer) {
            const json outer = run_outer_level(config, objective, r_hi, rho, timings,
                                               /*want_atoms=*/false);
            results["bounds"] = {{"outer", outer.at("value")},
                                 {"inner", last.at("value")}};
          }
          break;
        }
        case RunConfig::Command::SolveKernel: {
          const json out = run_kernel(config, problem, timings);
          for (const auto& [key, val] : out.items()) results[key] = val;
          break;
        }
        case RunConfig::Command::Certify: {
          const json report = certify_report(config, problem, timings);
          for (const auto& [key, val] : report.items()) results[key] = val;
          break;
        }
        case RunConfig::Command::SampleReference:
          break;  // handled above
      }
    }
  } catch (const ProblemParseError& e) {
    results["error"] = e.what();
    exit_code = 2;
  } catch (const MissingMomentError& e) {
    results["error"] = e.what();
    exit_code = 2;
  } catch (const std::invalid_argument& e) {
    results["error"] = e.what();
    exit_code = 2;
  } catch (const SizeCapError& e) {
    results["error"] = e.what();
    exit_code = 2;
  } catch (const SolveError& e) {
    results["error"] = e.what();
    if (!e.diagnostics.empty()) results["diagnostics"] = e.diagnostics;
    exit_code = 3;
  } catch (const std::runtime_error& e) {
    results["error"] = e.what();
    exit_code = 3;
  }

  results["timings"] = {{"total_ms", ms_since(timings.start)},
                        {"solve_ms", timings.solve_ms},
                        {"sample_ms", timings.sample_ms}};
  if (!config.out_path.empty() && exit_code == 0 &&
      config.command != RunConfig::Command::SampleReference) {
    std::ofstream out(config.out_path);
    if (out) out << results.dump(1) << "\n";
  }
  return {exit_code, std::move(results)};
}

}  // namespace sobomos
