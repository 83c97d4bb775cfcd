#include "locadmm/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "locadmm/errors.hpp"

namespace locadmm {

namespace {

bool connected_by_traversal(const std::vector<std::vector<int>>& neighbors) {
  const int n = static_cast<int>(neighbors.size());
  if (n == 0) return false;
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int visited = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : neighbors[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++visited;
        stack.push_back(w);
      }
    }
  }
  return visited == n;
}

}  // namespace

NetworkGraph::NetworkGraph(int dim, int num_nodes, std::vector<Edge> edges,
                           std::map<int, Point> anchors)
    : dim_(dim), neighbors_(num_nodes), anchor_positions_(num_nodes) {
  if (dim < 1) throw InvalidParameter("dimension must be positive");
  if (num_nodes < 1) throw InvalidParameter("graph needs at least one node");

  for (Edge& e : edges) {
    if (e.i == e.j) throw InvalidParameter("self loop at node " + std::to_string(e.i));
    if (e.i < 0 || e.j < 0 || e.i >= num_nodes || e.j >= num_nodes) {
      throw InvalidParameter("edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                             ") references an unknown node");
    }
    if (e.i > e.j) std::swap(e.i, e.j);
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw InvalidParameter("duplicate edge");
  }
  edges_ = std::move(edges);
  for (const Edge& e : edges_) {
    neighbors_[e.i].push_back(e.j);
    neighbors_[e.j].push_back(e.i);
  }
  for (auto& list : neighbors_) std::sort(list.begin(), list.end());

  for (auto& [id, pos] : anchors) {
    if (id < 0 || id >= num_nodes) {
      throw InvalidParameter("anchor id " + std::to_string(id) + " out of range");
    }
    if (pos.size() != dim) {
      throw InvalidParameter("anchor " + std::to_string(id) + " has wrong dimension");
    }
    anchor_positions_[id] = std::move(pos);
    anchor_ids_.push_back(id);
  }
  connected_ = connected_by_traversal(neighbors_);
}

int NetworkGraph::neighbor_slot(int i, int j) const {
  const auto& list = neighbors_.at(i);
  const auto it = std::lower_bound(list.begin(), list.end(), j);
  if (it == list.end() || *it != j) {
    throw MissingNode("node " + std::to_string(j) + " is not a neighbor of " + std::to_string(i));
  }
  return static_cast<int>(it - list.begin());
}

void NetworkGraph::require_solvable() const {
  if (!connected_) throw UnsolvableNetwork("graph is not connected");
  if (anchor_ids_.empty()) throw UnsolvableNetwork("graph has no anchor");
  for (int i = 0; i < num_nodes(); ++i) {
    if (neighbors_[i].empty()) {
      throw UnsolvableNetwork("node " + std::to_string(i) + " has no neighbor");
    }
  }
}

int NetworkGraph::max_degree() const {
  int best = 0;
  for (const auto& list : neighbors_) best = std::max(best, static_cast<int>(list.size()));
  return best;
}

int NetworkGraph::degree_sum() const { return 2 * static_cast<int>(edges_.size()); }

double NetworkGraph::average_degree() const {
  return static_cast<double>(degree_sum()) / static_cast<double>(num_nodes());
}

bool operator==(const NetworkGraph& a, const NetworkGraph& b) {
  if (a.dim_ != b.dim_ || a.edges_ != b.edges_ || a.anchor_ids_ != b.anchor_ids_ ||
      a.neighbors_.size() != b.neighbors_.size()) {
    return false;
  }
  for (int id : a.anchor_ids_) {
    if (*a.anchor_positions_[id] != *b.anchor_positions_[id]) return false;
  }
  return true;
}

void MeasurementSet::set(int i, int j, double d) {
  if (i == j) throw InvalidParameter("range on a self loop");
  if (!(d >= 0.0) || !std::isfinite(d)) throw InvalidParameter("range must be finite and >= 0");
  ranges_[{std::min(i, j), std::max(i, j)}] = d;
}

double MeasurementSet::at(int i, int j) const {
  const auto it = ranges_.find({std::min(i, j), std::max(i, j)});
  if (it == ranges_.end()) {
    throw MissingNode("no range for edge (" + std::to_string(i) + "," + std::to_string(j) + ")");
  }
  return it->second;
}

bool MeasurementSet::contains(int i, int j) const {
  return ranges_.count({std::min(i, j), std::max(i, j)}) > 0;
}

Eigen::VectorXd MeasurementSet::local(const NetworkGraph& graph, int i) const {
  const auto nbrs = graph.neighbors(i);
  Eigen::VectorXd d(static_cast<Eigen::Index>(nbrs.size()));
  for (std::size_t k = 0; k < nbrs.size(); ++k) d[static_cast<Eigen::Index>(k)] = at(i, nbrs[k]);
  return d;
}

std::vector<Eigen::VectorXd> MeasurementSet::per_node(const NetworkGraph& graph) const {
  std::vector<Eigen::VectorXd> out;
  out.reserve(graph.num_nodes());
  for (int i = 0; i < graph.num_nodes(); ++i) out.push_back(local(graph, i));
  return out;
}

double MeasurementSet::max_range() const {
  double best = 0.0;
  for (const auto& [edge, d] : ranges_) best = std::max(best, d);
  return best;
}

std::pair<NetworkGraph, GroundTruth> generate_rgg(const RggSpec& spec) {
  if (spec.num_nodes < 1) throw InvalidParameter("num_nodes must be positive");
  if (spec.num_anchors < 1) throw InvalidParameter("num_anchors must be positive");
  if (spec.num_anchors > spec.num_nodes) throw InvalidParameter("more anchors than nodes");
  if (spec.dim < 1) throw InvalidParameter("dim must be positive");
  if (!(spec.area_side > 0.0)) throw InvalidParameter("area_side must be positive");
  // Ranges beyond the diagonal are allowed and give the complete graph.
  if (!(spec.comm_range > 0.0) || !std::isfinite(spec.comm_range)) {
    throw InvalidParameter("comm_range must be positive and finite");
  }

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> coord(0.0, spec.area_side);
  const double range_sq = spec.comm_range * spec.comm_range;

  for (int attempt = 0; attempt < kMaxLayoutAttempts; ++attempt) {
    std::vector<Point> positions(spec.num_nodes, Point(spec.dim));
    for (auto& p : positions) {
      for (int k = 0; k < spec.dim; ++k) p[k] = coord(rng);
    }
    std::vector<Edge> edges;
    for (int i = 0; i < spec.num_nodes; ++i) {
      for (int j = i + 1; j < spec.num_nodes; ++j) {
        if ((positions[i] - positions[j]).squaredNorm() <= range_sq) edges.push_back({i, j});
      }
    }
    std::vector<std::vector<int>> adjacency(spec.num_nodes);
    for (const Edge& e : edges) {
      adjacency[e.i].push_back(e.j);
      adjacency[e.j].push_back(e.i);
    }
    if (!connected_by_traversal(adjacency)) continue;

    std::vector<int> order(spec.num_nodes);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::map<int, Point> anchors;
    for (int k = 0; k < spec.num_anchors; ++k) anchors.emplace(order[k], positions[order[k]]);

    NetworkGraph graph(spec.dim, spec.num_nodes, std::move(edges), std::move(anchors));
    return {std::move(graph), GroundTruth{std::move(positions)}};
  }
  throw ConnectivityFailure("no connected layout after " + std::to_string(kMaxLayoutAttempts) +
                            " attempts");
}

MeasurementSet measure(const GroundTruth& truth, const NetworkGraph& graph, const NoiseModel& model,
                       std::uint64_t seed) {
  if (!(model.sigma_add >= 0.0)) throw InvalidParameter("sigma_add must be >= 0");
  if (static_cast<int>(truth.positions.size()) < graph.num_nodes()) {
    throw MissingPosition("ground truth does not cover every node");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> standard(0.0, 1.0);
  MeasurementSet out;
  for (const Edge& e : graph.edges()) {
    const Point& pi = truth.positions[e.i];
    const Point& pj = truth.positions[e.j];
    if (pi.size() != graph.dim() || pj.size() != graph.dim()) {
      throw MissingPosition("position of wrong dimension on edge (" + std::to_string(e.i) + "," +
                            std::to_string(e.j) + ")");
    }
    const double length = (pi - pj).norm();
    const double scale = model.kind == NoiseKind::AdditiveWhite
                             ? model.sigma_add
                             : std::sqrt(model.sigma_add) * length;
    // Always draw so the stream position does not depend on sigma.
    const double w = standard(rng) * scale;
    out.set(e.i, e.j, std::max(0.0, length + w));
  }
  return out;
}

double rmse(std::span<const Point> estimates, const GroundTruth& truth, const NetworkGraph& graph) {
  const int free_nodes = graph.num_nodes() - graph.num_anchors();
  if (free_nodes <= 0) throw EmptyFreeSet("every node is an anchor");
  if (static_cast<int>(estimates.size()) < graph.num_nodes() ||
      static_cast<int>(truth.positions.size()) < graph.num_nodes()) {
    throw MissingPosition("estimates or truth do not cover every node");
  }
  double sum = 0.0;
  for (int i = 0; i < graph.num_nodes(); ++i) {
    if (graph.is_anchor(i)) continue;
    sum += (estimates[i] - truth.positions[i]).squaredNorm();
  }
  return std::sqrt(sum / free_nodes);
}

}  // namespace locadmm
