// Command-line front end: generate, run, sweep, oracle-check, compare.

#include <charconv>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "locadmm/harness.hpp"
#include "locadmm/parallel.hpp"

namespace {

using namespace locadmm;

/// "auto" -> nullopt, otherwise a positive number.
std::optional<double> parse_auto(const std::string& text, const std::string& flag) {
  if (text == "auto") return std::nullopt;
  double value = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), value);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size()) {
    throw CLI::ValidationError(flag, "expected a number or 'auto', got '" + text + "'");
  }
  return value;
}

void add_run_flags(CLI::App* cmd, harness::RunConfig& rc) {
  cmd->add_option("--net", rc.net, "network file")->required();
  cmd->add_option("--algo", rc.algorithm, "full or lite")
      ->check(CLI::IsMember({"full", "lite"}));
  cmd->add_option("--iters", rc.iterations, "iterations")->check(CLI::PositiveNumber);
  cmd->add_option("--init", rc.init,
                  "zeros | uniform:LO,HI | uniform-positions:LO,HI | truth | file:PATH");
  cmd->add_option("--u0", rc.u0, "initial value of every u coordinate");
  cmd->add_option("--seed", rc.seed, "seed for random init (LOCADMM_SEED overrides)");
  cmd->add_option("--threads", rc.threads, "worker threads (default: all cores)");
  cmd->add_option("--rho-scale", rc.rho_scale, "multiplier on rho_min when rho is auto");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed range-based sensor localization"};
  app.require_subcommand(1);

  harness::GenerateConfig gen;
  std::string noise = "awgn";
  auto* generate = app.add_subcommand("generate", "synthesize a random geometric network");
  generate->add_option("--nodes", gen.nodes, "number of nodes")->required();
  generate->add_option("--anchors", gen.anchors, "number of anchors")->required();
  generate->add_option("--range", gen.range, "communication range")->required();
  generate->add_option("--area", gen.area, "side of the deployment square");
  generate->add_option("--dim", gen.dim, "spatial dimension")->check(CLI::Range(2, 3));
  generate->add_option("--sigma", gen.sigma, "noise level");
  generate->add_option("--noise", noise, "awgn or range")->check(CLI::IsMember({"awgn", "range"}));
  generate->add_option("--seed", gen.seed, "layout and noise seed (LOCADMM_SEED overrides)");
  generate->add_option("--out", gen.out, "output network file")->required();

  harness::RunConfig run_cfg;
  run_cfg.threads = default_thread_count();
  std::string run_c = "auto";
  std::string run_rho = "auto";
  auto* run = app.add_subcommand("run", "run a solver and export its trace");
  add_run_flags(run, run_cfg);
  run->add_option("--c", run_c, "penalty c or 'auto'");
  run->add_option("--rho", run_rho, "proximal penalty rho or 'auto'");
  run->add_option("--trace", run_cfg.trace, "trace CSV output");
  run->add_option("--estimates", run_cfg.estimates, "estimates file output");
  run->add_flag("--timing", run_cfg.timing, "fill the wall_ms column");

  harness::SweepConfig sweep_cfg;
  sweep_cfg.base.threads = default_thread_count();
  auto* sweep = app.add_subcommand("sweep", "grid over (c, rho) and seeds");
  add_run_flags(sweep, sweep_cfg.base);
  sweep->add_option("--c", sweep_cfg.c_values, "comma-separated c values")
      ->required()
      ->delimiter(',');
  sweep->add_option("--rho", sweep_cfg.rho_values, "comma-separated rho values")
      ->required()
      ->delimiter(',');
  sweep->add_option("--seeds", sweep_cfg.seeds, "comma-separated init seeds")->delimiter(',');
  sweep->add_option("--out", sweep_cfg.out, "per-cell summary CSV")->required();
  sweep->add_option("--runs-out", sweep_cfg.runs_out, "per-run CSV");

  harness::OracleCheckConfig oracle_cfg;
  auto* oracle = app.add_subcommand("oracle-check", "compare closed forms with dense solves");
  oracle->add_option("--net", oracle_cfg.net, "network file (at most 8 nodes)")->required();
  oracle->add_option("--trials", oracle_cfg.options.trials, "random trials")
      ->check(CLI::PositiveNumber);
  oracle->add_option("--seed", oracle_cfg.options.seed, "trial seed (LOCADMM_SEED overrides)");
  oracle->add_option("--c", oracle_cfg.options.c, "penalty c")->check(CLI::PositiveNumber);
  oracle->add_option("--rho", oracle_cfg.options.rho, "proximal penalty rho")
      ->check(CLI::PositiveNumber);

  harness::CompareConfig compare_cfg;
  auto* compare = app.add_subcommand("compare", "RMSE of an estimates file against a truth file");
  compare->add_option("--truth", compare_cfg.truth, "network file with true positions")->required();
  compare->add_option("--estimates", compare_cfg.estimates, "estimates file")->required();

  try {
    app.parse(argc, argv);
    if (*run) {
      run_cfg.c = parse_auto(run_c, "--c");
      run_cfg.rho = parse_auto(run_rho, "--rho");
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (*generate) {
    gen.noise = noise == "range" ? NoiseKind::RangeDependent : NoiseKind::AdditiveWhite;
    return harness::cmd_generate(gen, std::cout, std::cerr);
  }
  if (*run) return harness::cmd_run(run_cfg, std::cout, std::cerr);
  if (*sweep) return harness::cmd_sweep(sweep_cfg, std::cout, std::cerr);
  if (*oracle) return harness::cmd_oracle_check(oracle_cfg, std::cout, std::cerr);
  return harness::cmd_compare(compare_cfg, std::cout, std::cerr);
}
