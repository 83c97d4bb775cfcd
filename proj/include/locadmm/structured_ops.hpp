#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "locadmm/network.hpp"

namespace locadmm {

/// Per-neighbor vectors held by one node: column k is the value for the
/// k-th entry of the node's sorted neighbor list. Used for u_i, lambda_i,
/// alpha_i, beta_i.
using EdgeField = Eigen::MatrixXd;

/// z_i = (p_i, z_i^-, z_i^+). Column k of z_minus / z_plus belongs to the
/// k-th sorted neighbor. `flatten()` stacks [p; vec(z^-); vec(z^+)], the
/// ordering of the dense Kronecker operators.
struct NodeBlockVector {
  Eigen::VectorXd p;
  Eigen::MatrixXd z_minus;
  Eigen::MatrixXd z_plus;

  static NodeBlockVector zero(int dim, int degree);

  int dim() const { return static_cast<int>(p.size()); }
  int degree() const { return static_cast<int>(z_minus.cols()); }
  Eigen::Index flat_size() const { return p.size() + z_minus.size() + z_plus.size(); }

  double squared_norm() const;
  double dot(const NodeBlockVector& other) const;
  bool all_finite() const;

  Eigen::VectorXd flatten() const;
  static NodeBlockVector unflatten(const Eigen::Ref<const Eigen::VectorXd>& flat, int dim,
                                   int degree);

  NodeBlockVector& operator+=(const NodeBlockVector& other);
  NodeBlockVector& operator-=(const NodeBlockVector& other);
  NodeBlockVector& operator*=(double s);
};

NodeBlockVector operator+(NodeBlockVector a, const NodeBlockVector& b);
NodeBlockVector operator-(NodeBlockVector a, const NodeBlockVector& b);
NodeBlockVector operator*(double s, NodeBlockVector a);

struct PenaltyParams {
  double c = 0.0;    // augmented-Lagrangian penalty
  double rho = 0.0;  // proximal penalty of the u-update
  /// Throws InvalidParameter unless both are finite and > 0.
  void validate() const;
};

// All operators below are matrix-free and cost O(n N_i).

/// Q_i v = vec(p - z^+_j).
EdgeField apply_Q(const NodeBlockVector& v);
/// A_i v = vec(p - z^-_j).
EdgeField apply_A(const NodeBlockVector& v);
/// A_i^T f = (sum_j f_j, -f_j, 0).
NodeBlockVector apply_At(const EdgeField& f);
/// Q_i^T D_i u = (sum_j d_j u_j, 0, -d_j u_j).
NodeBlockVector apply_Qt_D(const EdgeField& u, const Eigen::VectorXd& d);
/// c B_i^T B_i v with c B^T B = c|A^T A| + |Q^T Q|.
NodeBlockVector apply_cBtB(const NodeBlockVector& v, double c);
/// W_i v, W_i = 2 Diag((c+1) N_i, c 1, 1) (x) I_n.
NodeBlockVector apply_W(const NodeBlockVector& v, double c);
NodeBlockVector apply_W_inverse(const NodeBlockVector& v, double c);

/// Gradient of F_i in z: Q^T Q v - Q^T D u.
NodeBlockVector grad_F_z(const NodeBlockVector& v, const EdgeField& u, const Eigen::VectorXd& d);

/// F_i = 1/2 |Q v|^2 - <u, D Q v>.
double objective_F(const NodeBlockVector& v, const EdgeField& u, const Eigen::VectorXd& d);

/// sum_i sum_{j in N_i} 1/2 (|p_i - p_j| - d_ij)^2; every edge counted twice.
double objective_original(std::span<const Point> positions, const NetworkGraph& graph,
                          const MeasurementSet& measurements);

/// Column-wise projection onto the unit ball.
EdgeField project_ball(const EdgeField& f);

/// Euclidean projection of the stacked z onto {z^+_ij = z^-_ji} intersected
/// with the anchor set: anchors' p is replaced by a_i, free p is kept, and
/// each paired replica is set to the pair average.
std::vector<NodeBlockVector> project_consensus(std::span<const NodeBlockVector> values,
                                               const NetworkGraph& graph);

}  // namespace locadmm
