#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "locadmm/network.hpp"
#include "locadmm/solver_full.hpp"
#include "locadmm/structured_ops.hpp"

namespace locadmm {

/// Fast closed forms under test. Defaults are the library functions; tests
/// swap one out to confirm that the suite notices.
struct ClosedForms {
  std::function<NodeBlockVector(const NodeBlockVector&, std::span<const EdgeMessage>, int,
                                std::span<const int>, double, const std::optional<Point>&)>
      combine = combine_z;
  std::function<std::vector<NodeBlockVector>(std::span<const NodeBlockVector>,
                                             const NetworkGraph&)>
      project = project_consensus;
  std::function<NodeBlockVector(const NodeBlockVector&, double)> cBtB = apply_cBtB;
};

struct OracleCheckOptions {
  int trials = 20;
  std::uint64_t seed = 1;
  double c = 1.0;
  double rho = 1.0;
  bool operators = true;
  bool projections = true;
  bool diagnostics = true;
  bool trajectory = true;
  int trajectory_iterations = 20;
};

struct CheckResult {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return max_error <= tolerance; }
};

struct OracleReport {
  std::vector<CheckResult> checks;
  bool passed() const;
  /// Folds another report in, keeping the worst error per check name.
  void merge(const OracleReport& other);
};

inline constexpr int kMaxOracleNodes = 8;

/// Compares every closed form against the dense oracle on random inputs.
/// Throws InvalidParameter for instances with more than kMaxOracleNodes nodes.
OracleReport run_oracle_check(const NetworkGraph& graph, const MeasurementSet& measurements,
                              const OracleCheckOptions& options, const ClosedForms& forms = {});

}  // namespace locadmm
