#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "locadmm/iterate.hpp"
#include "locadmm/network.hpp"
#include "locadmm/structured_ops.hpp"

namespace locadmm {

/// Distributed scaled proximal ADMM with explicit replicas (the full variant).
///
/// Each iteration is two bulk-synchronous phases:
///   1. every node computes z-tilde_i = W_i^{-1}(Q^T D u - A^T lambda + c B^T B z)
///      (p-tilde pinned to a_i on anchors) and posts (z-tilde^-_{i,j},
///      z-tilde^+_{i,j}) to each neighbor j;
///   2. every node combines its own half-step with the received payloads
///      (closed-form W-weighted projection onto the consensus set), then
///      updates u_i by a ball projection and lambda_i by a dual ascent step.

struct ZerosInit {};
struct UniformInit {
  double lo = -1.0;
  double hi = 1.0;
};
/// z^0 inside the consensus set: p_i = x_i, z^-_{i,j} = x_i, z^+_{i,j} = x_j.
struct PositionsInit {
  std::vector<Point> positions;
};

struct InitSpec {
  std::variant<ZerosInit, UniformInit, PositionsInit> z0 = ZerosInit{};
  /// u^0_{i,j} = u0 * 1; must lie in the unit ball.
  double u0 = 0.0;
};

/// lambda^0 = 0 always. Uniform draws every block coordinate i.i.d. in node
/// order (p, z^-, z^+), deterministic per seed.
std::vector<NodeIterate> init_full(const NetworkGraph& graph, const InitSpec& spec,
                                   std::uint64_t seed);

/// Replica payload sent from src to dst after the half-step.
struct EdgeMessage {
  int src = -1;
  int dst = -1;
  Point payload_minus;  // z-tilde^-_{src,dst}
  Point payload_plus;   // z-tilde^+_{src,dst}
};

NodeBlockVector local_halfstep(const NodeIterate& state, const Eigen::VectorXd& d, double c,
                               const std::optional<Point>& anchor);

/// `incoming[k]` must come from neighbors[k] and be addressed to `self`.
NodeBlockVector combine_z(const NodeBlockVector& tilde, std::span<const EdgeMessage> incoming,
                          int self, std::span<const int> neighbors, double c,
                          const std::optional<Point>& anchor);

EdgeField update_u(const EdgeField& u, const NodeBlockVector& z_new, const Eigen::VectorXd& d,
                   double rho);

EdgeField update_lambda(const EdgeField& lambda, const NodeBlockVector& z_new, double c);

/// Runs `options.iterations` rounds. The hook (if any) sees t = 0 and every
/// completed iteration. Throws NonFiniteValue when a coordinate blows up.
RunResult run_full(const NetworkGraph& graph, const MeasurementSet& measurements,
                   const PenaltyParams& params, std::vector<NodeIterate> init,
                   const RunOptions& options, const IterationHook& hook = {});

}  // namespace locadmm
