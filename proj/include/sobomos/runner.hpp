#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "sobomos/kernelpop.hpp"
#include "sobomos/model.hpp"

namespace sobomos {

struct ProblemParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parsed problem file: exactly one of the three payloads is set.
struct ProblemFile {
  enum class Type { Harmonic, Algebraic, Kernel };
  Type type = Type::Harmonic;
  SobolevSpace space;
  std::optional<FourierPolynomial> harmonic;
  std::optional<AlgebraicProblem> algebraic;
  std::optional<KernelProblem> kernel;
  nlohmann::json raw;
};

ProblemFile load_problem(const std::string& path);
ProblemFile parse_problem(const nlohmann::json& j);

struct RunConfig {
  enum class Command { SolveOuter, SolveInner, SolveKernel, Certify, SampleReference };
  Command command = Command::SolveOuter;
  std::string problem_path;
  std::string moments_path;  // certify input
  int r = 2;
  int rho = -1;  // -1: use the objective's harmonic degree
  double tol = 1e-8;
  int max_iter = 200;
  std::uint64_t seed = 42;
  std::int64_t samples = 1'000'000;
  int max_degree = -1;  // sample-reference
  std::string out_path;
  std::string ref_cache;
  std::optional<std::pair<int, int>> r_sweep;
  int grid = 0;
  std::string dump_sdp_path;
  double kernel_tol = 1e-7;
  bool with_inner = false;
  bool with_outer = false;
};

void validate(const RunConfig& config);

// Exit codes: 0 success (including bound-only outcomes), 2 parse/validation
// errors, 3 solver failures.
struct RunOutcome {
  int exit_code = 0;
  nlohmann::json results;
};

RunOutcome run(const RunConfig& config);

// Rounds to 12 significant digits for stable result files.
double round_result(double v);

}  // namespace sobomos
