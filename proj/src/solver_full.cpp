#include "locadmm/solver_full.hpp"

#include <cmath>
#include <random>
#include <string>
#include <utility>

#include "locadmm/errors.hpp"
#include "locadmm/parallel.hpp"

namespace locadmm {

namespace {

void check_u0(double u0, int dim) {
  if (!std::isfinite(u0) || std::abs(u0) * std::sqrt(static_cast<double>(dim)) > 1.0) {
    throw InvalidInitSpec("u0 * 1 must lie in the unit ball");
  }
}

struct InitBuilder {
  const NetworkGraph& graph;
  std::uint64_t seed;

  std::vector<NodeIterate> blank() const {
    std::vector<NodeIterate> out;
    out.reserve(graph.num_nodes());
    for (int i = 0; i < graph.num_nodes(); ++i) {
      const int deg = graph.degree(i);
      out.push_back({NodeBlockVector::zero(graph.dim(), deg),
                     EdgeField::Zero(graph.dim(), deg), EdgeField::Zero(graph.dim(), deg)});
    }
    return out;
  }

  std::vector<NodeIterate> operator()(const ZerosInit&) const { return blank(); }

  std::vector<NodeIterate> operator()(const UniformInit& spec) const {
    if (!(spec.lo < spec.hi) || !std::isfinite(spec.lo) || !std::isfinite(spec.hi)) {
      throw InvalidInitSpec("uniform init needs finite lo < hi");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> draw(spec.lo, spec.hi);
    auto out = blank();
    for (auto& node : out) {
      for (Eigen::Index k = 0; k < node.z.p.size(); ++k) node.z.p[k] = draw(rng);
      for (Eigen::Index k = 0; k < node.z.z_minus.size(); ++k) node.z.z_minus.data()[k] = draw(rng);
      for (Eigen::Index k = 0; k < node.z.z_plus.size(); ++k) node.z.z_plus.data()[k] = draw(rng);
    }
    return out;
  }

  std::vector<NodeIterate> operator()(const PositionsInit& spec) const {
    if (static_cast<int>(spec.positions.size()) != graph.num_nodes()) {
      throw InvalidInitSpec("positions init must cover every node");
    }
    for (const auto& x : spec.positions) {
      if (x.size() != graph.dim() || !x.allFinite()) {
        throw InvalidInitSpec("positions init has a malformed entry");
      }
    }
    auto out = blank();
    for (int i = 0; i < graph.num_nodes(); ++i) {
      const auto nbrs = graph.neighbors(i);
      out[i].z.p = spec.positions[i];
      for (std::size_t k = 0; k < nbrs.size(); ++k) {
        out[i].z.z_minus.col(static_cast<Eigen::Index>(k)) = spec.positions[i];
        out[i].z.z_plus.col(static_cast<Eigen::Index>(k)) = spec.positions[nbrs[k]];
      }
    }
    return out;
  }
};

void check_state_shapes(const NetworkGraph& graph, std::span<const NodeIterate> state) {
  if (static_cast<int>(state.size()) != graph.num_nodes()) {
    throw InvalidInitSpec("initial state must cover every node");
  }
  const int n = graph.dim();
  for (int i = 0; i < graph.num_nodes(); ++i) {
    const int deg = graph.degree(i);
    const NodeIterate& s = state[i];
    if (s.z.dim() != n || s.z.degree() != deg || s.z.z_plus.rows() != n ||
        s.z.z_plus.cols() != deg || s.u.rows() != n || s.u.cols() != deg ||
        s.lambda.rows() != n || s.lambda.cols() != deg) {
      throw InvalidInitSpec("initial state of node " + std::to_string(i) + " has the wrong shape");
    }
  }
}

}  // namespace

std::vector<NodeIterate> init_full(const NetworkGraph& graph, const InitSpec& spec,
                                   std::uint64_t seed) {
  check_u0(spec.u0, graph.dim());
  auto out = std::visit(InitBuilder{graph, seed}, spec.z0);
  for (auto& node : out) node.u.setConstant(spec.u0);
  return out;
}

NodeBlockVector local_halfstep(const NodeIterate& state, const Eigen::VectorXd& d, double c,
                               const std::optional<Point>& anchor) {
  const NodeBlockVector& z = state.z;
  const EdgeField du = state.u * d.asDiagonal();
  const double degree = z.degree();

  NodeBlockVector out;
  if (anchor) {
    out.p = *anchor;
  } else {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(z.dim());
    for (Eigen::Index k = 0; k < z.z_minus.cols(); ++k) {
      acc += du.col(k) - state.lambda.col(k) + c * (z.p + z.z_minus.col(k)) + z.p +
             z.z_plus.col(k);
    }
    out.p = acc / (2.0 * (c + 1.0) * degree);
  }
  out.z_minus = state.lambda / (2.0 * c) + 0.5 * (z.z_minus.colwise() + z.p);
  out.z_plus = -0.5 * du + 0.5 * (z.z_plus.colwise() + z.p);
  return out;
}

NodeBlockVector combine_z(const NodeBlockVector& tilde, std::span<const EdgeMessage> incoming,
                          int self, std::span<const int> neighbors, double c,
                          const std::optional<Point>& anchor) {
  if (incoming.size() != neighbors.size()) {
    throw MissingMessage("node " + std::to_string(self) + " expected " +
                         std::to_string(neighbors.size()) + " messages, got " +
                         std::to_string(incoming.size()));
  }
  NodeBlockVector out;
  out.p = anchor ? *anchor : tilde.p;
  out.z_minus.resize(tilde.z_minus.rows(), tilde.z_minus.cols());
  out.z_plus.resize(tilde.z_plus.rows(), tilde.z_plus.cols());
  for (std::size_t k = 0; k < neighbors.size(); ++k) {
    const EdgeMessage& msg = incoming[k];
    if (msg.src != neighbors[k] || msg.dst != self || msg.payload_minus.size() != tilde.dim() ||
        msg.payload_plus.size() != tilde.dim()) {
      throw MissingMessage("node " + std::to_string(self) + " has no valid message from " +
                           std::to_string(neighbors[k]));
    }
    const auto kk = static_cast<Eigen::Index>(k);
    // Written so that z^-_{i,j} here and z^+_{j,i} at the neighbor evaluate
    // the same expression on the same operands.
    out.z_minus.col(kk) = (c * tilde.z_minus.col(kk) + msg.payload_plus) / (c + 1.0);
    out.z_plus.col(kk) = (tilde.z_plus.col(kk) + c * msg.payload_minus) / (c + 1.0);
  }
  return out;
}

EdgeField update_u(const EdgeField& u, const NodeBlockVector& z_new, const Eigen::VectorXd& d,
                   double rho) {
  return project_ball(u + apply_Q(z_new) * (d / rho).asDiagonal());
}

EdgeField update_lambda(const EdgeField& lambda, const NodeBlockVector& z_new, double c) {
  return lambda + c * apply_A(z_new);
}

RunResult run_full(const NetworkGraph& graph, const MeasurementSet& measurements,
                   const PenaltyParams& params, std::vector<NodeIterate> init,
                   const RunOptions& options, const IterationHook& hook) {
  graph.require_solvable();
  params.validate();
  if (options.iterations < 0) throw InvalidParameter("iterations must be >= 0");
  check_state_shapes(graph, init);

  const int num_nodes = graph.num_nodes();
  const double c = params.c;
  const auto ranges = measurements.per_node(graph);

  // inbox[offsets[i] + k] holds the message from neighbors(i)[k] to i.
  std::vector<std::size_t> offsets(num_nodes + 1, 0);
  for (int i = 0; i < num_nodes; ++i) offsets[i + 1] = offsets[i] + graph.degree(i);
  std::vector<std::size_t> inbox_slot_at_neighbor(offsets.back());
  for (int i = 0; i < num_nodes; ++i) {
    const auto nbrs = graph.neighbors(i);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      inbox_slot_at_neighbor[offsets[i] + k] = offsets[nbrs[k]] + graph.neighbor_slot(nbrs[k], i);
    }
  }
  std::vector<EdgeMessage> inbox(offsets.back());

  BspExecutor executor(options.threads);
  std::vector<NodeIterate> current = std::move(init);
  std::vector<NodeIterate> previous;
  std::vector<NodeIterate> next(num_nodes);
  std::vector<NodeBlockVector> halfstep(num_nodes);

  if (hook) hook(IterationView{0, current, {}, {}, 0});

  std::size_t total_comm = 0;
  for (int t = 1; t <= options.iterations; ++t) {
    executor.for_each(num_nodes, [&](std::size_t idx) {
      const int i = static_cast<int>(idx);
      halfstep[i] = local_halfstep(current[i], ranges[i], c, graph.anchor(i));
      const auto nbrs = graph.neighbors(i);
      for (std::size_t k = 0; k < nbrs.size(); ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        inbox[inbox_slot_at_neighbor[offsets[i] + k]] =
            EdgeMessage{i, nbrs[k], halfstep[i].z_minus.col(kk), halfstep[i].z_plus.col(kk)};
      }
    });

    std::size_t comm = 0;
    for (const EdgeMessage& msg : inbox) {
      comm += static_cast<std::size_t>(msg.payload_minus.size() + msg.payload_plus.size());
    }
    total_comm += comm;

    executor.for_each(num_nodes, [&](std::size_t idx) {
      const int i = static_cast<int>(idx);
      const std::span<const EdgeMessage> received(inbox.data() + offsets[i],
                                                  offsets[i + 1] - offsets[i]);
      NodeIterate& out = next[i];
      out.z = combine_z(halfstep[i], received, i, graph.neighbors(i), c, graph.anchor(i));
      out.u = update_u(current[i].u, out.z, ranges[i], params.rho);
      out.lambda = update_lambda(current[i].lambda, out.z, c);
    });

    for (int i = 0; i < num_nodes; ++i) {
      if (!next[i].all_finite()) throw NonFiniteValue(t, i);
    }
    previous.swap(current);
    current.swap(next);
    if (next.size() != current.size()) next.resize(current.size());
    if (hook) hook(IterationView{t, current, previous, halfstep, comm});
  }

  RunResult result;
  result.estimates = positions_of(current);
  result.final_state = std::move(current);
  result.total_comm_scalars = total_comm;
  return result;
}

}  // namespace locadmm
