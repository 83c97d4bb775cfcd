#include "locadmm/solver_lite.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "locadmm/errors.hpp"
#include "locadmm/parallel.hpp"

namespace locadmm {

bool LiteNodeState::all_finite() const {
  return p.allFinite() && u.allFinite() && lambda.allFinite() && alpha.allFinite() &&
         beta.allFinite() && d.allFinite() && std::isfinite(c) && std::isfinite(rho);
}

namespace {

LiteNodeState from_iterate(const NodeIterate& s, const Eigen::VectorXd& d,
                           const PenaltyParams& params) {
  LiteNodeState out;
  out.p = s.z.p;
  out.u = s.u;
  out.lambda = s.lambda;
  out.alpha = s.lambda + params.c * (s.z.z_minus.colwise() + s.z.p);
  out.beta = -(s.u * d.asDiagonal()) + (s.z.z_plus.colwise() + s.z.p);
  out.d = d;
  out.c = params.c;
  out.rho = params.rho;
  return out;
}

void check_lite_states(const NetworkGraph& graph, std::span<const LiteNodeState> states) {
  if (static_cast<int>(states.size()) != graph.num_nodes()) {
    throw InvalidInitSpec("lite state must cover every node");
  }
  for (int i = 0; i < graph.num_nodes(); ++i) {
    const LiteNodeState& s = states[i];
    const int n = graph.dim();
    const int deg = graph.degree(i);
    const bool shaped = s.p.size() == n && s.u.rows() == n && s.u.cols() == deg &&
                        s.lambda.rows() == n && s.lambda.cols() == deg && s.alpha.rows() == n &&
                        s.alpha.cols() == deg && s.beta.rows() == n && s.beta.cols() == deg &&
                        s.d.size() == deg;
    if (!shaped) {
      throw InvalidInitSpec("lite state of node " + std::to_string(i) + " has the wrong shape");
    }
    PenaltyParams{s.c, s.rho}.validate();
    if (s.c != states[0].c || s.rho != states[0].rho) {
      throw InvalidParameter("all nodes must share c and rho");
    }
  }
}

void check_incoming(std::span<const LiteMessage> incoming, int self,
                    std::span<const int> neighbors, int dim) {
  if (incoming.size() != neighbors.size()) {
    throw MissingMessage("node " + std::to_string(self) + " expected " +
                         std::to_string(neighbors.size()) + " messages, got " +
                         std::to_string(incoming.size()));
  }
  for (std::size_t k = 0; k < neighbors.size(); ++k) {
    const LiteMessage& m = incoming[k];
    if (m.src != neighbors[k] || m.dst != self || m.alpha.size() != dim || m.beta.size() != dim) {
      throw MissingMessage("node " + std::to_string(self) + " has no valid message from " +
                           std::to_string(neighbors[k]));
    }
  }
}

}  // namespace

std::vector<LiteNodeState> init_lite(const NetworkGraph& graph, const MeasurementSet& measurements,
                                     const PenaltyParams& params, std::span<const Point> positions,
                                     double u0) {
  if (static_cast<int>(positions.size()) != graph.num_nodes()) {
    throw InvalidInitSpec("lite init needs a position for every node");
  }
  for (const auto& x : positions) {
    if (x.size() != graph.dim() || !x.allFinite()) {
      throw InvalidInitSpec("lite init has a malformed position");
    }
  }
  if (!std::isfinite(u0) || std::abs(u0) * std::sqrt(static_cast<double>(graph.dim())) > 1.0) {
    throw InvalidInitSpec("u0 * 1 must lie in the unit ball");
  }
  std::vector<NodeIterate> state;
  state.reserve(positions.size());
  for (int i = 0; i < graph.num_nodes(); ++i) {
    const auto nbrs = graph.neighbors(i);
    const int deg = graph.degree(i);
    NodeIterate s{NodeBlockVector::zero(graph.dim(), deg),
                  EdgeField::Constant(graph.dim(), deg, u0), EdgeField::Zero(graph.dim(), deg)};
    s.z.p = positions[i];
    for (int k = 0; k < deg; ++k) {
      s.z.z_minus.col(k) = positions[i];
      s.z.z_plus.col(k) = positions[nbrs[k]];
    }
    state.push_back(std::move(s));
  }
  return init_lite(graph, measurements, params, state);
}

std::vector<LiteNodeState> init_lite(const NetworkGraph& graph, const MeasurementSet& measurements,
                                     const PenaltyParams& params,
                                     std::span<const NodeIterate> state) {
  params.validate();
  if (static_cast<int>(state.size()) != graph.num_nodes()) {
    throw InvalidInitSpec("lite init needs a state for every node");
  }
  std::vector<LiteNodeState> out;
  out.reserve(state.size());
  for (int i = 0; i < graph.num_nodes(); ++i) {
    out.push_back(from_iterate(state[i], measurements.local(graph, i), params));
  }
  check_lite_states(graph, out);
  return out;
}

std::vector<LiteMessage> outgoing_lite(int self, const LiteNodeState& state,
                                       std::span<const int> neighbors) {
  std::vector<LiteMessage> out;
  out.reserve(neighbors.size());
  for (std::size_t k = 0; k < neighbors.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    out.push_back({self, neighbors[k], state.alpha.col(kk), state.beta.col(kk)});
  }
  return out;
}

LiteNodeState step_lite_node(const LiteNodeState& state, std::span<const LiteMessage> incoming,
                             int self, std::span<const int> neighbors,
                             const std::optional<Point>& anchor) {
  check_incoming(incoming, self, neighbors, state.dim());
  const double c = state.c;
  const double rho = state.rho;
  const int deg = state.degree();

  LiteNodeState next;
  next.d = state.d;
  next.c = c;
  next.rho = rho;

  if (anchor) {
    next.p = *anchor;
  } else {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(state.dim());
    for (int k = 0; k < deg; ++k) {
      acc += 2.0 * state.d[k] * state.u.col(k) - 2.0 * state.lambda.col(k) + state.alpha.col(k) +
             state.beta.col(k);
    }
    next.p = acc / (2.0 * (c + 1.0) * deg);
  }

  // Every right-hand side below reads `state` (iteration t) only.
  next.u.resize(state.dim(), deg);
  next.lambda.resize(state.dim(), deg);
  next.alpha.resize(state.dim(), deg);
  next.beta.resize(state.dim(), deg);
  for (int k = 0; k < deg; ++k) {
    const double d = state.d[k];
    const Eigen::VectorXd plus_pair = (state.beta.col(k) + incoming[k].alpha) / (2.0 * (c + 1.0));
    const Eigen::VectorXd minus_pair =
        (state.alpha.col(k) + incoming[k].beta) / (2.0 * (c + 1.0));
    next.u.col(k) = state.u.col(k) + (d / rho) * (next.p - plus_pair);
    next.beta.col(k) = plus_pair + next.p;  // u part added after projection
    next.alpha.col(k) = state.lambda.col(k) + 2.0 * c * next.p;
    next.lambda.col(k) = state.lambda.col(k) + c * (next.p - minus_pair);
  }
  next.u = project_ball(next.u);
  next.beta -= next.u * state.d.asDiagonal();
  return next;
}

std::vector<LiteNodeState> step_lite(const NetworkGraph& graph,
                                     std::span<const LiteNodeState> states) {
  check_lite_states(graph, states);
  std::vector<LiteNodeState> out;
  out.reserve(states.size());
  for (int i = 0; i < graph.num_nodes(); ++i) {
    const auto nbrs = graph.neighbors(i);
    std::vector<LiteMessage> incoming;
    incoming.reserve(nbrs.size());
    for (int j : nbrs) {
      const int slot = graph.neighbor_slot(j, i);
      incoming.push_back({j, i, states[j].alpha.col(slot), states[j].beta.col(slot)});
    }
    out.push_back(step_lite_node(states[i], incoming, i, nbrs, graph.anchor(i)));
  }
  return out;
}

std::vector<double> serialize_lite(const LiteNodeState& state) {
  const auto block = static_cast<std::size_t>(state.u.size());
  std::vector<double> out;
  out.reserve(4 * block + static_cast<std::size_t>(state.degree()) + 3);
  out.push_back(static_cast<double>(state.degree()));
  out.push_back(state.c);
  out.push_back(state.rho);
  out.insert(out.end(), state.d.data(), state.d.data() + state.d.size());
  for (const EdgeField* f : {&state.u, &state.lambda, &state.alpha, &state.beta}) {
    out.insert(out.end(), f->data(), f->data() + f->size());
  }
  return out;
}

LiteNodeState deserialize_lite(std::span<const double> data) {
  if (data.size() < 3) throw InvalidParameter("lite state record too short");
  const double deg_value = data[0];
  if (!(deg_value >= 1.0) || deg_value != std::floor(deg_value)) {
    throw InvalidParameter("lite state record has an invalid degree");
  }
  const auto deg = static_cast<std::size_t>(deg_value);
  if (data.size() < 3 + deg) throw InvalidParameter("lite state record too short");
  const std::size_t rest = data.size() - 3 - deg;
  if (rest == 0 || rest % (4 * deg) != 0) {
    throw InvalidParameter("lite state record has an inconsistent size");
  }
  const auto dim = static_cast<Eigen::Index>(rest / (4 * deg));
  const auto cols = static_cast<Eigen::Index>(deg);

  LiteNodeState s;
  s.c = data[1];
  s.rho = data[2];
  s.d = Eigen::Map<const Eigen::VectorXd>(data.data() + 3, cols);
  std::size_t offset = 3 + deg;
  for (EdgeField* f : {&s.u, &s.lambda, &s.alpha, &s.beta}) {
    *f = Eigen::Map<const Eigen::MatrixXd>(data.data() + offset, dim, cols);
    offset += static_cast<std::size_t>(dim) * deg;
  }
  s.p = Point::Zero(dim);
  return s;
}

NodeBlockVector reconstruct_z(const Point& p, const EdgeField& own_alpha, const EdgeField& own_beta,
                              std::span<const LiteMessage> incoming, double c) {
  NodeBlockVector z;
  z.p = p;
  z.z_minus.resize(own_alpha.rows(), own_alpha.cols());
  z.z_plus.resize(own_alpha.rows(), own_alpha.cols());
  for (Eigen::Index k = 0; k < own_alpha.cols(); ++k) {
    z.z_minus.col(k) = (own_alpha.col(k) + incoming[k].beta) / (2.0 * (c + 1.0));
    z.z_plus.col(k) = (own_beta.col(k) + incoming[k].alpha) / (2.0 * (c + 1.0));
  }
  return z;
}

NodeIterate invert_state(const LiteNodeState& state) {
  NodeIterate out;
  out.z.p = state.p;
  out.z.z_minus = ((state.alpha - state.lambda) / state.c).colwise() - state.p;
  out.z.z_plus = (state.beta + state.u * state.d.asDiagonal()).colwise() - state.p;
  out.u = state.u;
  out.lambda = state.lambda;
  return out;
}

RunResult run_lite(const NetworkGraph& graph, std::vector<LiteNodeState> init,
                   const RunOptions& options, const IterationHook& hook) {
  graph.require_solvable();
  if (options.iterations < 0) throw InvalidParameter("iterations must be >= 0");
  check_lite_states(graph, init);

  const int num_nodes = graph.num_nodes();
  std::vector<std::size_t> offsets(num_nodes + 1, 0);
  for (int i = 0; i < num_nodes; ++i) offsets[i + 1] = offsets[i] + graph.degree(i);
  std::vector<std::size_t> inbox_slot_at_neighbor(offsets.back());
  for (int i = 0; i < num_nodes; ++i) {
    const auto nbrs = graph.neighbors(i);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      inbox_slot_at_neighbor[offsets[i] + k] = offsets[nbrs[k]] + graph.neighbor_slot(nbrs[k], i);
    }
  }
  std::vector<LiteMessage> inbox(offsets.back());

  BspExecutor executor(options.threads);
  std::vector<LiteNodeState> current = std::move(init);
  std::vector<LiteNodeState> next(num_nodes);

  // Reconstructed views, only maintained when someone is watching.
  std::vector<NodeIterate> view_now;
  std::vector<NodeIterate> view_prev;
  std::vector<NodeBlockVector> view_half;
  if (hook) {
    view_now.reserve(num_nodes);
    for (const auto& s : current) view_now.push_back(invert_state(s));
    view_prev.resize(num_nodes);
    view_half.resize(num_nodes);
    hook(IterationView{0, view_now, {}, {}, 0});
  }

  std::size_t total_comm = 0;
  for (int t = 1; t <= options.iterations; ++t) {
    executor.for_each(num_nodes, [&](std::size_t idx) {
      const int i = static_cast<int>(idx);
      const auto nbrs = graph.neighbors(i);
      for (std::size_t k = 0; k < nbrs.size(); ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        inbox[inbox_slot_at_neighbor[offsets[i] + k]] =
            LiteMessage{i, nbrs[k], current[i].alpha.col(kk), current[i].beta.col(kk)};
      }
    });

    std::size_t comm = 0;
    for (const LiteMessage& msg : inbox) {
      comm += static_cast<std::size_t>(msg.alpha.size() + msg.beta.size());
    }
    total_comm += comm;

    executor.for_each(num_nodes, [&](std::size_t idx) {
      const int i = static_cast<int>(idx);
      const std::span<const LiteMessage> received(inbox.data() + offsets[i],
                                                  offsets[i + 1] - offsets[i]);
      next[i] = step_lite_node(current[i], received, i, graph.neighbors(i), graph.anchor(i));
      if (hook) {
        const LiteNodeState& old = current[i];
        view_prev[i] = std::move(view_now[i]);
        view_now[i].z = reconstruct_z(next[i].p, old.alpha, old.beta, received, old.c);
        view_now[i].u = next[i].u;
        view_now[i].lambda = next[i].lambda;
        view_half[i].p = next[i].p;
        view_half[i].z_minus = old.alpha / (2.0 * old.c);
        view_half[i].z_plus = old.beta / 2.0;
      }
    });

    for (int i = 0; i < num_nodes; ++i) {
      if (!next[i].all_finite()) throw NonFiniteValue(t, i);
    }
    current.swap(next);
    if (hook) hook(IterationView{t, view_now, view_prev, view_half, comm});
  }

  RunResult result;
  result.estimates.reserve(current.size());
  for (const auto& s : current) result.estimates.push_back(s.p);
  result.final_state.reserve(current.size());
  for (const auto& s : current) result.final_state.push_back(invert_state(s));
  result.total_comm_scalars = total_comm;
  return result;
}

}  // namespace locadmm
