#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "locadmm/diagnostics.hpp"
#include "locadmm/network.hpp"
#include "locadmm/oracle_check.hpp"
#include "locadmm/solver_full.hpp"

namespace locadmm::harness {

// Library side of the `locadmm` command line. Every cmd_* returns the
// process exit code and writes human-readable output to the given streams.

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitDiverged = 2;

/// LOCADMM_SEED, when set to an integer, replaces `flag_seed`.
std::uint64_t resolve_seed(std::uint64_t flag_seed);

struct GenerateConfig {
  int nodes = 0;
  int anchors = 0;
  double range = 0.0;
  double area = 1.0;
  int dim = 2;
  double sigma = 0.0;
  NoiseKind noise = NoiseKind::AdditiveWhite;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_generate(const GenerateConfig& config, std::ostream& out, std::ostream& err);

struct RunConfig {
  std::string net;
  std::string algorithm = "full";  // full | lite
  std::optional<double> c;         // nullopt = auto
  std::optional<double> rho;       // nullopt = auto
  double rho_scale = 1.0;          // multiplies rho_min when rho is auto
  int iterations = 1000;
  /// zeros | uniform:LO,HI | uniform-positions:LO,HI | truth | file:PATH
  std::string init = "zeros";
  double u0 = 0.0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool timing = false;
  std::string trace;      // CSV path, optional
  std::string estimates;  // network-schema path, optional
};

const char* const kTraceHeader = "t,rmse,S,U,P,F,L,potential,comm_scalars,wall_ms";

/// Shortest round-trip decimal representation.
std::string format_double(double value);
std::string trace_to_csv(const IterationTrace& trace);
std::string trace_meta_json(const IterationTrace& trace, int iterations);

struct RunOutcome {
  IterationTrace trace;
  std::vector<Point> estimates;
  bool diverged = false;
  std::string divergence;
  PenaltyParams params;
};

/// Resolves parameters and init, runs the chosen solver and records the
/// trace. NonFiniteValue is caught and reported through `diverged`.
RunOutcome execute_run(const NetworkInstance& instance, const RunConfig& config);

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err);

struct SweepConfig {
  RunConfig base;  // net, algorithm, iterations, init, u0, threads
  std::vector<double> c_values;
  std::vector<double> rho_values;
  std::vector<std::uint64_t> seeds;
  std::string out;       // one row per (c, rho) cell
  std::string runs_out;  // optional, one row per run
};

int cmd_sweep(const SweepConfig& config, std::ostream& out, std::ostream& err);

struct OracleCheckConfig {
  std::string net;
  OracleCheckOptions options;
};

int cmd_oracle_check(const OracleCheckConfig& config, std::ostream& out, std::ostream& err,
                     const ClosedForms& forms = {});

struct CompareConfig {
  std::string truth;      // network file with true pos
  std::string estimates;  // estimates file written by `run`
};

int cmd_compare(const CompareConfig& config, std::ostream& out, std::ostream& err);

}  // namespace locadmm::harness
