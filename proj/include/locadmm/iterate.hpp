#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "locadmm/structured_ops.hpp"

namespace locadmm {

/// Primal-dual iterate of one node: replicas z_i, ball variables u_i and
/// multipliers lambda_i. Both solvers report their progress in this form.
struct NodeIterate {
  NodeBlockVector z;
  EdgeField u;
  EdgeField lambda;

  bool all_finite() const { return z.all_finite() && u.allFinite() && lambda.allFinite(); }
};

/// What a run loop hands to observers at each barrier.
///
/// `previous` and `halfstep` are empty at t = 0. `halfstep` holds the
/// unprojected z-tilde^t that produced `current`.
struct IterationView {
  int t = 0;
  std::span<const NodeIterate> current;
  std::span<const NodeIterate> previous;
  std::span<const NodeBlockVector> halfstep;
  /// Scalars sent over the network during this iteration (0 at t = 0).
  std::size_t comm_scalars = 0;
};

using IterationHook = std::function<void(const IterationView&)>;

struct RunOptions {
  int iterations = 1;
  unsigned threads = 1;
};

struct RunResult {
  std::vector<NodeIterate> final_state;
  std::vector<Point> estimates;
  std::size_t total_comm_scalars = 0;
};

inline std::vector<Point> positions_of(std::span<const NodeIterate> state) {
  std::vector<Point> out;
  out.reserve(state.size());
  for (const auto& node : state) out.push_back(node.z.p);
  return out;
}

}  // namespace locadmm
