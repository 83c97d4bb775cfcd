#pragma once

#include <initializer_list>
#include <map>
#include <vector>

#include <Eigen/Core>

#include "locadmm/network.hpp"

namespace locadmm::test {

inline Point pt(std::initializer_list<double> xs) {
  Point p(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) p(k++) = x;
  return p;
}

inline Eigen::MatrixXd cols(int rows, std::initializer_list<double> values) {
  std::vector<double> v(values);
  const int n = static_cast<int>(v.size()) / rows;
  Eigen::MatrixXd m(rows, n);
  for (int k = 0; k < n; ++k)
    for (int r = 0; r < rows; ++r) m(r, k) = v[k * rows + r];
  return m;
}

/// Noiseless instance built from explicit positions; measurements are exact.
inline NetworkInstance exact_instance(const std::vector<Point>& positions, std::vector<Edge> edges,
                                      const std::vector<int>& anchor_ids) {
  std::map<int, Point> anchors;
  for (int a : anchor_ids) anchors[a] = positions[a];
  NetworkInstance inst;
  inst.graph = NetworkGraph(static_cast<int>(positions[0].size()),
                            static_cast<int>(positions.size()), std::move(edges), anchors);
  inst.truth = GroundTruth{positions};
  inst.measurements = measure(*inst.truth, inst.graph, {}, 0);
  return inst;
}

/// Zero-noise triangle with two anchors.
inline NetworkInstance triangle() {
  return exact_instance({pt({0.0, 0.0}), pt({1.0, 0.0}), pt({0.3, 0.8})},
                        {{0, 1}, {0, 2}, {1, 2}}, {0, 1});
}

inline NetworkInstance synthetic(int nodes, int anchors, double range, NoiseModel noise,
                                 std::uint64_t seed) {
  auto [graph, truth] = generate_rgg({nodes, anchors, range, 1.0, 2, seed});
  NetworkInstance inst;
  inst.measurements = measure(truth, graph, noise, seed + 1);
  inst.graph = std::move(graph);
  inst.truth = std::move(truth);
  return inst;
}

}  // namespace locadmm::test

#include "locadmm/solver_full.hpp"

namespace locadmm::test {

/// z at the given positions with u_ij the unit direction p_i - p_j and
/// lambda = 0. With exact ranges this is a KKT point.
inline std::vector<NodeIterate> aligned_state(const NetworkGraph& graph,
                                              const std::vector<Point>& positions) {
  auto state = init_full(graph, InitSpec{PositionsInit{positions}, 0.0}, 0);
  for (int i = 0; i < graph.num_nodes(); ++i) {
    const auto nbrs = graph.neighbors(i);
    for (int k = 0; k < static_cast<int>(nbrs.size()); ++k) {
      const Point diff = positions[i] - positions[nbrs[k]];
      state[i].u.col(k) = diff / diff.norm();
    }
  }
  return state;
}

}  // namespace locadmm::test
