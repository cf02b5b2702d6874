#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sobomos/runner.hpp"

namespace {

// Shared flags across the solve-and-certify subcommands.
void add_common(CLI::App* cmd, sobomos::RunConfig& config) {
  cmd->add_option("--problem", config.problem_path, "problem file (JSON)")->required();
  cmd->add_option("--r", config.r, "algebraic relaxation degree");
  cmd->add_option("--rho", config.rho, "harmonic degree / truncation");
  cmd->add_option("--tol", config.tol, "solver tolerance");
  cmd->add_option("--max-iter", config.max_iter, "interior-point iteration cap");
  cmd->add_option("--seed", config.seed, "random seed");
  cmd->add_option("--samples", config.samples, "Monte Carlo sample count");
  cmd->add_option("--out", config.out_path, "results JSON path");
  cmd->add_option("--ref-cache", config.ref_cache, "reference-moment cache file");
  cmd->add_option("--dump-sdp", config.dump_sdp_path, "write the assembled SDP as JSON");
}

void add_sweep(CLI::App* cmd, std::string& sweep_text) {
  cmd->add_option("--r-sweep", sweep_text, "degree sweep a..b (writes a CSV next to --out)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moment-SOS hierarchies for polynomial optimization on periodic "
               "Sobolev balls"};
  app.require_subcommand(1);

  sobomos::RunConfig config;
  std::string sweep_text;

  auto* solve_outer = app.add_subcommand("solve-outer", "lower-bound hierarchy");
  add_common(solve_outer, config);
  add_sweep(solve_outer, sweep_text);
  solve_outer->add_option("--grid", config.grid, "sample extracted functions on a grid");
  solve_outer->add_flag("--with-inner", config.with_inner, "also solve the inner SDP");

  auto* solve_inner = app.add_subcommand("solve-inner", "upper-bound hierarchy");
  add_common(solve_inner, config);
  add_sweep(solve_inner, sweep_text);
  solve_inner->add_flag("--with-outer", config.with_outer, "also solve the outer SDP");

  auto* solve_kernel = app.add_subcommand("solve-kernel", "representer-theorem route");
  add_common(solve_kernel, config);
  solve_kernel->add_option("--grid", config.grid, "sample representer functions on a grid");
  solve_kernel->add_option("--kernel-tol", config.kernel_tol, "kernel tail tolerance");

  auto* certify = app.add_subcommand("certify", "moment-cone membership of a vector");
  add_common(certify, config);
  certify->add_option("--moments", config.moments_path, "moments file (JSON)")->required();

  auto* sample = app.add_subcommand("sample-reference", "estimate reference moments");
  add_common(sample, config);
  sample->add_option("--max-degree", config.max_degree, "highest moment degree")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (solve_outer->parsed()) config.command = sobomos::RunConfig::Command::SolveOuter;
  if (solve_inner->parsed()) config.command = sobomos::RunConfig::Command::SolveInner;
  if (solve_kernel->parsed()) config.command = sobomos::RunConfig::Command::SolveKernel;
  if (certify->parsed()) config.command = sobomos::RunConfig::Command::Certify;
  if (sample->parsed()) config.command = sobomos::RunConfig::Command::SampleReference;

  if (!sweep_text.empty()) {
    const auto sep = sweep_text.find("..");
    if (sep == std::string::npos) {
      std::cerr << "bad --r-sweep value '" << sweep_text << "', expected a..b\n";
      return 2;
    }
    try {
      config.r_sweep = {std::stoi(sweep_text.substr(0, sep)),
                        std::stoi(sweep_text.substr(sep + 2))};
    } catch (const std::exception&) {
      std::cerr << "bad --r-sweep value '" << sweep_text << "'\n";
      return 2;
    }
  }

  const sobomos::RunOutcome outcome = sobomos::run(config);
  std::cout << outcome.results.dump(1) << "\n";
  return outcome.exit_code;
}
