#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace locadmm {

using Point = Eigen::VectorXd;

/// Unordered edge stored with i < j.
struct Edge {
  int i;
  int j;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Undirected sensor graph with an anchor subset.
///
/// Neighbor lists are sorted ascending; every per-neighbor quantity in the
/// library (replicas, duals, ranges, messages) uses that order and is
/// addressed by the neighbor's "slot" k in `neighbors(i)`.
///
/// Construction only checks structural validity (ids in range, no self
/// loops, no duplicate edges, anchor dimensions). Connectivity and anchor
/// presence are reported by `is_connected()` / `num_anchors()` and enforced
/// by `require_solvable()`, so that a disconnected file can still be loaded.
class NetworkGraph {
 public:
  NetworkGraph() = default;
  NetworkGraph(int dim, int num_nodes, std::vector<Edge> edges, std::map<int, Point> anchors);

  int dim() const { return dim_; }
  int num_nodes() const { return static_cast<int>(neighbors_.size()); }
  int num_anchors() const { return static_cast<int>(anchor_ids_.size()); }

  std::span<const int> neighbors(int i) const { return neighbors_.at(i); }
  int degree(int i) const { return static_cast<int>(neighbors_.at(i).size()); }

  /// Position of j in neighbors(i); throws MissingNode when (i, j) is not an edge.
  int neighbor_slot(int i, int j) const;

  bool is_anchor(int i) const { return anchor_positions_.at(i).has_value(); }
  const std::optional<Point>& anchor(int i) const { return anchor_positions_.at(i); }
  const std::vector<int>& anchor_ids() const { return anchor_ids_; }

  /// Unordered edges, lexicographically sorted.
  const std::vector<Edge>& edges() const { return edges_; }

  bool is_connected() const { return connected_; }

  /// Throws UnsolvableNetwork unless connected, anchored and without isolated nodes.
  void require_solvable() const;

  int max_degree() const;
  int degree_sum() const;
  /// D_avg = (1/N) sum_i N_i.
  double average_degree() const;

  friend bool operator==(const NetworkGraph& a, const NetworkGraph& b);

 private:
  int dim_ = 0;
  std::vector<std::vector<int>> neighbors_;
  std::vector<std::optional<Point>> anchor_positions_;
  std::vector<int> anchor_ids_;
  std::vector<Edge> edges_;
  bool connected_ = false;
};

/// True node positions; anchors coincide with the graph's anchor positions.
struct GroundTruth {
  std::vector<Point> positions;
};

/// One range value per unordered edge, so d_ij = d_ji by construction.
class MeasurementSet {
 public:
  void set(int i, int j, double d);
  double at(int i, int j) const;
  bool contains(int i, int j) const;
  std::size_t size() const { return ranges_.size(); }
  const std::map<std::pair<int, int>, double>& values() const { return ranges_; }

  /// Ranges of node i in sorted-neighbor order; throws MissingNode for an absent edge.
  Eigen::VectorXd local(const NetworkGraph& graph, int i) const;
  std::vector<Eigen::VectorXd> per_node(const NetworkGraph& graph) const;

  double max_range() const;

  friend bool operator==(const MeasurementSet&, const MeasurementSet&) = default;

 private:
  std::map<std::pair<int, int>, double> ranges_;
};

enum class NoiseKind { AdditiveWhite, RangeDependent };

/// For AdditiveWhite, sigma_add is a standard deviation (distance units).
/// For RangeDependent, the variance of edge (i,j) is sigma_add * |p_i - p_j|^2.
struct NoiseModel {
  NoiseKind kind = NoiseKind::AdditiveWhite;
  double sigma_add = 0.0;
};

struct RggSpec {
  int num_nodes = 0;
  int num_anchors = 0;
  double comm_range = 0.0;
  double area_side = 1.0;
  int dim = 2;
  std::uint64_t seed = 0;
};

inline constexpr int kMaxLayoutAttempts = 1000;

/// Uniform random geometric graph over [0, side]^dim, resampled until connected.
std::pair<NetworkGraph, GroundTruth> generate_rgg(const RggSpec& spec);

/// Noisy ranges for every edge; negative draws are clamped to 0.
MeasurementSet measure(const GroundTruth& truth, const NetworkGraph& graph, const NoiseModel& model,
                       std::uint64_t seed);

/// sqrt( sum_{i not anchor} |est_i - p_i|^2 / (N - m) ).
double rmse(std::span<const Point> estimates, const GroundTruth& truth, const NetworkGraph& graph);

/// Everything a network file carries.
struct NetworkInstance {
  NetworkGraph graph;
  std::optional<GroundTruth> truth;
  MeasurementSet measurements;
  /// Set on load when the file describes a disconnected graph.
  bool disconnected_warning = false;
};

inline constexpr int kNetworkSchemaVersion = 1;

std::string network_to_json(const NetworkInstance& instance);
NetworkInstance network_from_json(const std::string& text);
void save_network(const std::string& path, const NetworkInstance& instance);
NetworkInstance load_network(const std::string& path);

}  // namespace locadmm
