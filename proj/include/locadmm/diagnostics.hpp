#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "locadmm/iterate.hpp"
#include "locadmm/network.hpp"
#include "locadmm/structured_ops.hpp"

namespace locadmm {

// Convergence measures evaluated on snapshots of the per-node iterates.
// `d` is always MeasurementSet::per_node(graph).

/// sum_i |grad_z F_i + A_i^T lambda_i|^2.
double stationarity_S(std::span<const NodeIterate> states, std::span<const Eigen::VectorXd> d);

/// sum_i |u_i - u_i^prev|^2.
double primal_diff_U(std::span<const NodeIterate> now, std::span<const NodeIterate> prev);

/// sum_i |A_i z_i|^2.
double feasibility_P(std::span<const NodeIterate> states);

/// Projected-gradient residual + feasibility + u difference. Zero exactly
/// at KKT points. `prev` supplies u^{t-1}.
double gap_F(std::span<const NodeIterate> states, std::span<const NodeIterate> prev,
             const NetworkGraph& graph, std::span<const Eigen::VectorXd> d);

/// sum_i F_i + <lambda_i, A_i z_i> + c/2 |A_i z_i|^2 (ball term is 0 on feasible u).
double augmented_lagrangian(std::span<const NodeIterate> states,
                            std::span<const Eigen::VectorXd> d, double c);

struct PotentialWeights {
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double c = 0.0;
  double rho = 0.0;
};

/// Lyapunov function at iteration t >= 1. `halfstep` is the z-tilde that
/// produced `now`.
double potential(std::span<const NodeIterate> now, std::span<const NodeIterate> prev,
                 std::span<const NodeBlockVector> halfstep, std::span<const Eigen::VectorXd> d,
                 const PotentialWeights& w);

/// Sufficient parameter choice that makes the potential non-increasing.
struct ParameterBounds {
  double kappa1_min = 0.0;
  double kappa2_min = 0.0;
  double rho_min = 0.0;
  int n_max = 0;
  int n_sum = 0;
  double d_max = 0.0;
  double tau_tilde_min = 0.0;
  int dim = 0;
  double c = 0.0;
};

/// All instance constants are taken from the graph and measurements.
ParameterBounds parameter_bounds(const NetworkGraph& graph, const MeasurementSet& measurements,
                                 double c);

/// m(T) = min_{1<=t<=T} F(t) and e(T) = m(T) (T - 1) for T >= 2.
struct EnvelopeReport {
  std::vector<double> envelope;  // e(T), index 0 is T = 2
  double epsilon2 = 0.0;         // max_T e(T)
  int violations = 0;
  bool bounded = true;
};

/// `gap[k]` is F(k + 1). A violation is a T in the second half of the run
/// with e(T) > (1 + tolerance) * max of e over the first half; values of F at
/// or below `floor` count as zero.
EnvelopeReport sublinear_envelope_check(std::span<const double> gap, double tolerance = 0.05,
                                        double floor = 1e-20);

struct TraceRow {
  int t = 0;
  std::optional<double> rmse;
  double S = 0.0;
  std::optional<double> U;
  double P = 0.0;
  std::optional<double> F;
  double L = 0.0;
  std::optional<double> potential;
  std::size_t comm_scalars = 0;
  std::optional<double> wall_ms;
};

struct TraceMeta {
  std::string algorithm;
  double c = 0.0;
  double rho = 0.0;
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  std::uint64_t seed = 0;
};

struct IterationTrace {
  TraceMeta meta;
  std::vector<TraceRow> rows;

  std::vector<double> column_F() const;  // F(1), F(2), ...
};

/// Builds an IterationTrace from a run's hook calls.
class TraceRecorder {
 public:
  TraceRecorder(const NetworkGraph& graph, const MeasurementSet& measurements, TraceMeta meta,
                std::optional<GroundTruth> truth = std::nullopt, bool timing = false);

  IterationHook hook();
  const IterationTrace& trace() const { return trace_; }
  IterationTrace take() { return std::move(trace_); }

 private:
  void record(const IterationView& view);

  const NetworkGraph& graph_;
  std::vector<Eigen::VectorXd> ranges_;
  std::optional<GroundTruth> truth_;
  bool timing_;
  IterationTrace trace_;
  std::chrono::steady_clock::time_point last_;
};

}  // namespace locadmm
