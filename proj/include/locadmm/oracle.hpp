#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "locadmm/iterate.hpp"
#include "locadmm/network.hpp"
#include "locadmm/structured_ops.hpp"

namespace locadmm::oracle {

// Dense reference implementations built from the literal Kronecker
// definitions. Meant for toy instances only; single-threaded.

/// Literal per-node matrices. Variables are ordered [p; vec(z^-); vec(z^+)].
struct DenseNode {
  Eigen::MatrixXd Q;     // [1, O, -I] (x) I_n
  Eigen::MatrixXd A;     // [1, -I, O] (x) I_n
  Eigen::MatrixXd E;     // [1, 0, 0] (x) I_n
  Eigen::MatrixXd D;     // Diag(d) (x) I_n
  Eigen::MatrixXd W;     // 2 Diag((c+1)N_i, c 1, 1) (x) I_n
  Eigen::MatrixXd cBtB;  // c|A^T A| + |Q^T Q|
  Eigen::MatrixXd AtA;
  Eigen::MatrixXd QtQ;
};

struct DenseInstance {
  int dim = 0;
  double c = 0.0;
  std::vector<DenseNode> nodes;
  std::vector<Eigen::Index> offsets;  // start of node i in the stacked vector
  Eigen::Index total = 0;
  /// Rows z^+_{i,j} - z^-_{j,i} = 0 for every ordered pair, then E_i z_i = a_i.
  Eigen::MatrixXd constraints;
  Eigen::VectorXd rhs;
};

/// Largest stacked dimension the dense solvers accept.
inline constexpr Eigen::Index kMaxDenseDimension = 1000;

DenseInstance build_dense(const NetworkGraph& graph, std::span<const Eigen::VectorXd> d, double c);

Eigen::VectorXd stack(std::span<const NodeBlockVector> blocks);
std::vector<NodeBlockVector> unstack(const Eigen::VectorXd& flat, const NetworkGraph& graph);
Eigen::VectorXd stack_fields(std::span<const EdgeField> fields);

/// The three dense projections of one instance, factored once and reused.
/// Holds references to `inst` and `graph`, which must outlive it.
class DenseProjector {
 public:
  DenseProjector(const DenseInstance& inst, const NetworkGraph& graph);

  /// W-weighted projection onto X intersected with Z via the KKT system.
  std::vector<NodeBlockVector> weighted_kkt(std::span<const NodeBlockVector> z_tilde) const;
  /// Same projection through a parameterization of the feasible set.
  std::vector<NodeBlockVector> weighted_substitution(
      std::span<const NodeBlockVector> z_tilde) const;
  /// Unweighted Euclidean projection.
  std::vector<NodeBlockVector> unweighted(std::span<const NodeBlockVector> values) const;

 private:
  struct Factors;
  const DenseInstance& inst_;
  const NetworkGraph& graph_;
  std::shared_ptr<const Factors> factors_;
};

/// argmin_z 1/2 |z - z_tilde|_W^2 on X intersected with Z, by a pivoted
/// solve of the KKT system. Throws SingularSystem if it is rank deficient.
std::vector<NodeBlockVector> solve_z_subproblem_dense(const DenseInstance& inst,
                                                      const NetworkGraph& graph,
                                                      std::span<const NodeBlockVector> z_tilde);

/// Same problem, solved by parameterizing the feasible set (shared replica
/// pairs and free positions) and solving the reduced normal equations.
std::vector<NodeBlockVector> solve_z_subproblem_substitution(
    const DenseInstance& inst, const NetworkGraph& graph, std::span<const NodeBlockVector> z_tilde);

/// Unweighted Euclidean projection onto X intersected with Z (KKT solve).
std::vector<NodeBlockVector> project_consensus_dense(const DenseInstance& inst,
                                                     const NetworkGraph& graph,
                                                     std::span<const NodeBlockVector> values);

/// Central differences.
Eigen::VectorXd finite_diff_grad(const std::function<double(const Eigen::VectorXd&)>& fn,
                                 const Eigen::VectorXd& point, double step);

// Diagnostics recomputed from the dense matrices.
double dense_S(const DenseInstance& inst, std::span<const NodeIterate> states);
double dense_U(std::span<const NodeIterate> now, std::span<const NodeIterate> prev);
double dense_P(const DenseInstance& inst, std::span<const NodeIterate> states);
double dense_F(const DenseInstance& inst, const NetworkGraph& graph,
               std::span<const NodeIterate> states, std::span<const NodeIterate> prev);
double dense_L(const DenseInstance& inst, std::span<const NodeIterate> states);
double dense_potential(const DenseInstance& inst, std::span<const NodeIterate> now,
                       std::span<const NodeIterate> prev,
                       std::span<const NodeBlockVector> halfstep, double kappa1, double kappa2,
                       double rho);

/// Half-step in dense form: W^{-1}(Q^T D u - A^T lambda + c B^T B z), p pinned on anchors.
std::vector<NodeBlockVector> dense_halfstep(const DenseInstance& inst, const NetworkGraph& graph,
                                            std::span<const NodeIterate> state);

/// The full algorithm written with dense matrices and a global KKT
/// projection. Returns the state after every iteration (index 0 = init).
std::vector<std::vector<NodeIterate>> run_dense_admm(const NetworkGraph& graph,
                                                     const MeasurementSet& measurements,
                                                     const PenaltyParams& params,
                                                     std::vector<NodeIterate> init, int iterations);

}  // namespace locadmm::oracle
