#pragma once

#include <span>
#include <vector>

#include "locadmm/iterate.hpp"
#include "locadmm/network.hpp"
#include "locadmm/structured_ops.hpp"

namespace locadmm {

/// Reduced-storage variant driven by the edge messages
///   alpha_{i,j} = lambda_{i,j} + c (p_i + z^-_{i,j}),
///   beta_{i,j}  = -d_ij u_{i,j} + p_i + z^+_{i,j}.
/// Replicas are never stored; they are implied by the last exchanged
/// (alpha, beta). Produces the same (p, u, lambda) sequence as run_full.
struct LiteNodeState {
  Point p;  // latest p; recomputed every step, so not part of the persistent state
  EdgeField u;
  EdgeField lambda;
  EdgeField alpha;
  EdgeField beta;
  Eigen::VectorXd d;
  double c = 0.0;
  double rho = 0.0;

  int dim() const { return static_cast<int>(u.rows()); }
  int degree() const { return static_cast<int>(u.cols()); }
  bool all_finite() const;
};

/// alpha_{src,dst} and beta_{src,dst}, sent at the start of an iteration.
struct LiteMessage {
  int src = -1;
  int dst = -1;
  Point alpha;
  Point beta;
};

/// Starts from z^0 in the consensus set built from `positions`
/// (p_i = x_i, z^-_{i,j} = x_i, z^+_{i,j} = x_j), lambda^0 = 0, u^0 = u0 * 1.
/// Throws InvalidInitSpec if a position is missing or malformed.
std::vector<LiteNodeState> init_lite(const NetworkGraph& graph, const MeasurementSet& measurements,
                                     const PenaltyParams& params, std::span<const Point> positions,
                                     double u0);

/// Starts from an arbitrary full iterate (z^0 need not be consensual).
std::vector<LiteNodeState> init_lite(const NetworkGraph& graph, const MeasurementSet& measurements,
                                     const PenaltyParams& params,
                                     std::span<const NodeIterate> state);

std::vector<LiteMessage> outgoing_lite(int self, const LiteNodeState& state,
                                       std::span<const int> neighbors);

/// One update of node `self` given alpha_{j,i}, beta_{j,i} from every
/// neighbor (`incoming[k]` from neighbors[k]). Reads only the input state.
LiteNodeState step_lite_node(const LiteNodeState& state, std::span<const LiteMessage> incoming,
                             int self, std::span<const int> neighbors,
                             const std::optional<Point>& anchor);

/// One synchronous iteration of the whole network, single-threaded.
std::vector<LiteNodeState> step_lite(const NetworkGraph& graph,
                                     std::span<const LiteNodeState> states);

/// Persistent node state as a flat list of 4 n N_i + N_i + 3 scalars:
/// [N_i, c, rho, d, vec(u), vec(lambda), vec(alpha), vec(beta)].
std::vector<double> serialize_lite(const LiteNodeState& state);
/// Inverse of serialize_lite; p comes back zero-filled.
LiteNodeState deserialize_lite(std::span<const double> data);

/// Replicas implied by the messages of the previous step:
/// z^-_{i,j} = (alpha_{i,j} + beta_{j,i}) / (2(c+1)),
/// z^+_{i,j} = (beta_{i,j} + alpha_{j,i}) / (2(c+1)).
NodeBlockVector reconstruct_z(const Point& p, const EdgeField& own_alpha, const EdgeField& own_beta,
                              std::span<const LiteMessage> incoming, double c);

/// Replicas recovered by inverting the alpha/beta definitions on a single
/// state. Used where no previous step exists (t = 0).
NodeIterate invert_state(const LiteNodeState& state);

/// Same contract as run_full. Hooks see reconstructed iterates; the
/// half-step is (p^{t}, alpha^{t-1} / (2c), beta^{t-1} / 2).
RunResult run_lite(const NetworkGraph& graph, std::vector<LiteNodeState> init,
                   const RunOptions& options, const IterationHook& hook = {});

}  // namespace locadmm
