#include "locadmm/oracle.hpp"

#include <memory>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "locadmm/errors.hpp"

namespace locadmm::oracle {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kSingularRcond = 1e-13;

Index p_index(const DenseInstance& inst, int i) { return inst.offsets[i]; }
Index minus_index(const DenseInstance& inst, int i, int k) {
  return inst.offsets[i] + inst.dim * (1 + k);
}
Index plus_index(const DenseInstance& inst, const NetworkGraph& graph, int i, int k) {
  return inst.offsets[i] + inst.dim * (1 + graph.degree(i) + k);
}

void require_size(const DenseInstance& inst, const NetworkGraph& graph, std::size_t count) {
  if (static_cast<int>(count) != graph.num_nodes() ||
      static_cast<int>(inst.nodes.size()) != graph.num_nodes()) {
    throw MissingNode("dense oracle: node count mismatch");
  }
}

VectorXd flat_u(const NodeIterate& s) { return s.u.reshaped(); }
VectorXd flat_lambda(const NodeIterate& s) { return s.lambda.reshaped(); }

/// min 1/2 (z - target)^T M (z - target) s.t. C z = b, factored once.
class ConstrainedLs {
 public:
  ConstrainedLs(const MatrixXd& M, const MatrixXd& C) : M_(M), n_(M.rows()) {
    const Index m = C.rows();
    MatrixXd kkt = MatrixXd::Zero(n_ + m, n_ + m);
    kkt.topLeftCorner(n_, n_) = M;
    kkt.topRightCorner(n_, m) = C.transpose();
    kkt.bottomLeftCorner(m, n_) = C;
    lu_.compute(kkt);
    if (!(lu_.rcond() > kSingularRcond)) throw SingularSystem("KKT system is singular");
  }

  VectorXd solve(const VectorXd& target, const VectorXd& b) const {
    VectorXd rhs(n_ + b.size());
    rhs << M_ * target, b;
    return lu_.solve(rhs).head(n_);
  }

 private:
  MatrixXd M_;
  Index n_;
  Eigen::PartialPivLU<MatrixXd> lu_;
};

VectorXd constrained_ls(const MatrixXd& M, const VectorXd& target, const MatrixXd& C,
                        const VectorXd& b) {
  return ConstrainedLs(M, C).solve(target, b);
}

MatrixXd global_block_diag(const DenseInstance& inst, MatrixXd DenseNode::*member) {
  MatrixXd out = MatrixXd::Zero(inst.total, inst.total);
  for (std::size_t i = 0; i < inst.nodes.size(); ++i) {
    const MatrixXd& blk = inst.nodes[i].*member;
    out.block(inst.offsets[i], inst.offsets[i], blk.rows(), blk.cols()) = blk;
  }
  return out;
}

}  // namespace

DenseInstance build_dense(const NetworkGraph& graph, std::span<const Eigen::VectorXd> d, double c) {
  if (static_cast<int>(d.size()) != graph.num_nodes()) {
    throw MissingNode("dense oracle: ranges must cover every node");
  }
  DenseInstance inst;
  inst.dim = graph.dim();
  inst.c = c;
  const int n = graph.dim();
  const MatrixXd In = MatrixXd::Identity(n, n);

  for (int i = 0; i < graph.num_nodes(); ++i) {
    const int N = graph.degree(i);
    const MatrixXd ones = MatrixXd::Ones(N, 1);
    const MatrixXd I = MatrixXd::Identity(N, N);
    const MatrixXd O = MatrixXd::Zero(N, N);

    MatrixXd q(N, 2 * N + 1), a(N, 2 * N + 1), e = MatrixXd::Zero(1, 2 * N + 1);
    q << ones, O, -I;
    a << ones, -I, O;
    e(0, 0) = 1.0;
    VectorXd w(2 * N + 1);
    w << 2.0 * (c + 1.0) * N, VectorXd::Constant(N, 2.0 * c), VectorXd::Constant(N, 2.0);

    DenseNode node;
    node.Q = Eigen::kroneckerProduct(q, In);
    node.A = Eigen::kroneckerProduct(a, In);
    node.E = Eigen::kroneckerProduct(e, In);
    node.D = Eigen::kroneckerProduct(MatrixXd(d[i].asDiagonal()), In);
    node.W = Eigen::kroneckerProduct(MatrixXd(w.asDiagonal()), In);
    node.AtA = node.A.transpose() * node.A;
    node.QtQ = node.Q.transpose() * node.Q;
    node.cBtB = c * node.AtA.cwiseAbs() + node.QtQ.cwiseAbs();

    inst.offsets.push_back(inst.total);
    inst.total += node.W.rows();
    inst.nodes.push_back(std::move(node));
  }

  int rows = 0;
  for (int i = 0; i < graph.num_nodes(); ++i) rows += graph.degree(i) * n;
  rows += graph.num_anchors() * n;
  inst.constraints = MatrixXd::Zero(rows, inst.total);
  inst.rhs = VectorXd::Zero(rows);
  Index r = 0;
  for (int i = 0; i < graph.num_nodes(); ++i) {
    const auto nbrs = graph.neighbors(i);
    for (int k = 0; k < static_cast<int>(nbrs.size()); ++k) {
      const int j = nbrs[k];
      const int back = graph.neighbor_slot(j, i);
      for (int c_ = 0; c_ < n; ++c_, ++r) {
        inst.constraints(r, plus_index(inst, graph, i, k) + c_) = 1.0;
        inst.constraints(r, minus_index(inst, j, back) + c_) = -1.0;
      }
    }
  }
  for (int i : graph.anchor_ids()) {
    inst.constraints.block(r, inst.offsets[i], n, inst.nodes[i].E.cols()) = inst.nodes[i].E;
    inst.rhs.segment(r, n) = *graph.anchor(i);
    r += n;
  }
  return inst;
}

Eigen::VectorXd stack(std::span<const NodeBlockVector> blocks) {
  Index total = 0;
  for (const auto& b : blocks) total += b.flat_size();
  VectorXd out(total);
  Index at = 0;
  for (const auto& b : blocks) {
    out.segment(at, b.flat_size()) = b.flatten();
    at += b.flat_size();
  }
  return out;
}

std::vector<NodeBlockVector> unstack(const Eigen::VectorXd& flat, const NetworkGraph& graph) {
  std::vector<NodeBlockVector> out;
  Index at = 0;
  for (int i = 0; i < graph.num_nodes(); ++i) {
    const Index size = static_cast<Index>(graph.dim()) * (2 * graph.degree(i) + 1);
    out.push_back(NodeBlockVector::unflatten(flat.segment(at, size), graph.dim(), graph.degree(i)));
    at += size;
  }
  return out;
}

Eigen::VectorXd stack_fields(std::span<const EdgeField> fields) {
  Index total = 0;
  for (const auto& f : fields) total += f.size();
  VectorXd out(total);
  Index at = 0;
  for (const auto& f : fields) {
    out.segment(at, f.size()) = f.reshaped();
    at += f.size();
  }
  return out;
}

void require_dense_size(const DenseInstance& inst) {
  if (inst.total > kMaxDenseDimension) {
    throw InvalidParameter("dense oracle limited to " + std::to_string(kMaxDenseDimension) +
                           " variables");
  }
}

struct DenseProjector::Factors {
  ConstrainedLs weighted;
  ConstrainedLs unweighted;
  // z = N y + z0. Free unknowns: p of each non-anchor, and one vector per
  // ordered pair (i,j) shared by z^+_{i,j} and z^-_{j,i}.
  MatrixXd Nmat;
  VectorXd z0;
  MatrixXd NtW;
  Eigen::PartialPivLU<MatrixXd> normal;
};

DenseProjector::DenseProjector(const DenseInstance& inst, const NetworkGraph& graph)
    : inst_(inst), graph_(graph) {
  require_size(inst, graph, static_cast<std::size_t>(graph.num_nodes()));
  require_dense_size(inst);
  const MatrixXd W = global_block_diag(inst, &DenseNode::W);
  const MatrixXd I = MatrixXd::Identity(inst.total, inst.total);

  const int n = inst.dim;
  int unknowns = 0;
  for (int i = 0; i < graph.num_nodes(); ++i) {
    if (!graph.is_anchor(i)) unknowns += n;
    unknowns += graph.degree(i) * n;
  }
  MatrixXd Nmat = MatrixXd::Zero(inst.total, unknowns);
  VectorXd z0 = VectorXd::Zero(inst.total);
  Index col = 0;
  for (int i = 0; i < graph.num_nodes(); ++i) {
    if (graph.is_anchor(i)) {
      z0.segment(p_index(inst, i), n) = *graph.anchor(i);
    } else {
      for (int r = 0; r < n; ++r) Nmat(p_index(inst, i) + r, col++) = 1.0;
    }
  }
  for (int i = 0; i < graph.num_nodes(); ++i) {
    const auto nbrs = graph.neighbors(i);
    for (int k = 0; k < static_cast<int>(nbrs.size()); ++k) {
      const int back = graph.neighbor_slot(nbrs[k], i);
      for (int r = 0; r < n; ++r, ++col) {
        Nmat(plus_index(inst, graph, i, k) + r, col) = 1.0;
        Nmat(minus_index(inst, nbrs[k], back) + r, col) = 1.0;
      }
    }
  }
  MatrixXd NtW = Nmat.transpose() * W;
  Eigen::PartialPivLU<MatrixXd> normal(NtW * Nmat);
  if (!(normal.rcond() > kSingularRcond)) {
    throw SingularSystem("reduced normal equations are singular");
  }
  factors_ = std::make_shared<const Factors>(Factors{ConstrainedLs(W, inst.constraints),
                                                     ConstrainedLs(I, inst.constraints),
                                                     std::move(Nmat), std::move(z0),
                                                     std::move(NtW), std::move(normal)});
}

std::vector<NodeBlockVector> DenseProjector::weighted_kkt(
    std::span<const NodeBlockVector> z_tilde) const {
  require_size(inst_, graph_, z_tilde.size());
  return unstack(factors_->weighted.solve(stack(z_tilde), inst_.rhs), graph_);
}

std::vector<NodeBlockVector> DenseProjector::weighted_substitution(
    std::span<const NodeBlockVector> z_tilde) const {
  require_size(inst_, graph_, z_tilde.size());
  const Factors& f = *factors_;
  const VectorXd y = f.normal.solve(f.NtW * (stack(z_tilde) - f.z0));
  return unstack(f.Nmat * y + f.z0, graph_);
}

std::vector<NodeBlockVector> DenseProjector::unweighted(
    std::span<const NodeBlockVector> values) const {
  require_size(inst_, graph_, values.size());
  return unstack(factors_->unweighted.solve(stack(values), inst_.rhs), graph_);
}

std::vector<NodeBlockVector> solve_z_subproblem_dense(const DenseInstance& inst,
                                                      const NetworkGraph& graph,
                                                      std::span<const NodeBlockVector> z_tilde) {
  return DenseProjector(inst, graph).weighted_kkt(z_tilde);
}

std::vector<NodeBlockVector> solve_z_subproblem_substitution(
    const DenseInstance& inst, const NetworkGraph& graph,
    std::span<const NodeBlockVector> z_tilde) {
  return DenseProjector(inst, graph).weighted_substitution(z_tilde);
}

std::vector<NodeBlockVector> project_consensus_dense(const DenseInstance& inst,
                                                     const NetworkGraph& graph,
                                                     std::span<const NodeBlockVector> values) {
  return DenseProjector(inst, graph).unweighted(values);
}

Eigen::VectorXd finite_diff_grad(const std::function<double(const Eigen::VectorXd&)>& fn,
                                 const Eigen::VectorXd& point, double step) {
  if (!(step > 0.0)) throw InvalidParameter("finite difference step must be > 0");
  VectorXd grad(point.size());
  VectorXd probe = point;
  for (Index k = 0; k < point.size(); ++k) {
    probe[k] = point[k] + step;
    const double up = fn(probe);
    probe[k] = point[k] - step;
    const double down = fn(probe);
    probe[k] = point[k];
    grad[k] = (up - down) / (2.0 * step);
  }
  return grad;
}

double dense_S(const DenseInstance& inst, std::span<const NodeIterate> states) {
  double total = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const DenseNode& m = inst.nodes[i];
    const VectorXd z = states[i].z.flatten();
    const VectorXd g = m.QtQ * z - m.Q.transpose() * m.D * flat_u(states[i]) +
                       m.A.transpose() * flat_lambda(states[i]);
    total += g.squaredNorm();
  }
  return total;
}

double dense_U(std::span<const NodeIterate> now, std::span<const NodeIterate> prev) {
  double total = 0.0;
  for (std::size_t i = 0; i < now.size(); ++i) {
    total += (flat_u(now[i]) - flat_u(prev[i])).squaredNorm();
  }
  return total;
}

double dense_P(const DenseInstance& inst, std::span<const NodeIterate> states) {
  double total = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    total += (inst.nodes[i].A * states[i].z.flatten()).squaredNorm();
  }
  return total;
}

double dense_F(const DenseInstance& inst, const NetworkGraph& graph,
               std::span<const NodeIterate> states, std::span<const NodeIterate> prev) {
  require_size(inst, graph, states.size());
  VectorXd stepped(inst.total);
  VectorXd z(inst.total);
  for (std::size_t i = 0; i < states.size(); ++i) {
    const DenseNode& m = inst.nodes[i];
    const VectorXd zi = states[i].z.flatten();
    const VectorXd g = m.QtQ * zi - m.Q.transpose() * m.D * flat_u(states[i]) +
                       m.A.transpose() * flat_lambda(states[i]);
    z.segment(inst.offsets[i], zi.size()) = zi;
    stepped.segment(inst.offsets[i], zi.size()) = zi - g;
  }
  const MatrixXd I = MatrixXd::Identity(inst.total, inst.total);
  const VectorXd proj = constrained_ls(I, stepped, inst.constraints, inst.rhs);
  return (z - proj).squaredNorm() + dense_P(inst, states) + dense_U(states, prev);
}

double dense_L(const DenseInstance& inst, std::span<const NodeIterate> states) {
  double total = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const DenseNode& m = inst.nodes[i];
    const VectorXd z = states[i].z.flatten();
    const VectorXd qz = m.Q * z;
    const VectorXd az = m.A * z;
    total += 0.5 * qz.squaredNorm() - flat_u(states[i]).dot(m.D * qz) +
             flat_lambda(states[i]).dot(az) + 0.5 * inst.c * az.squaredNorm();
  }
  return total;
}

double dense_potential(const DenseInstance& inst, std::span<const NodeIterate> now,
                       std::span<const NodeIterate> prev,
                       std::span<const NodeBlockVector> halfstep, double kappa1, double kappa2,
                       double rho) {
  const double c = inst.c;
  double total = dense_L(inst, now);
  for (std::size_t i = 0; i < now.size(); ++i) {
    const DenseNode& m = inst.nodes[i];
    const VectorXd dz = now[i].z.flatten() - prev[i].z.flatten();
    const double bb = dz.dot((m.cBtB / c) * dz);
    total += (c / 2.0) * (kappa1 * (m.A * halfstep[i].flatten()).squaredNorm() +
                          kappa2 * (m.A * now[i].z.flatten()).squaredNorm() +
                          (rho / (2.0 * c)) * (flat_u(now[i]) - flat_u(prev[i])).squaredNorm() +
                          (kappa1 + kappa2) * bb);
  }
  return total;
}

std::vector<NodeBlockVector> dense_halfstep(const DenseInstance& inst, const NetworkGraph& graph,
                                            std::span<const NodeIterate> state) {
  require_size(inst, graph, state.size());
  std::vector<NodeBlockVector> out;
  for (int i = 0; i < graph.num_nodes(); ++i) {
    const DenseNode& m = inst.nodes[i];
    const VectorXd rhs = m.Q.transpose() * m.D * flat_u(state[i]) -
                         m.A.transpose() * flat_lambda(state[i]) +
                         m.cBtB * state[i].z.flatten();
    const VectorXd w = m.W.diagonal();
    NodeBlockVector z = NodeBlockVector::unflatten(rhs.cwiseQuotient(w), graph.dim(),
                                                   graph.degree(i));
    if (graph.is_anchor(i)) z.p = *graph.anchor(i);
    out.push_back(std::move(z));
  }
  return out;
}

std::vector<std::vector<NodeIterate>> run_dense_admm(const NetworkGraph& graph,
                                                     const MeasurementSet& measurements,
                                                     const PenaltyParams& params,
                                                     std::vector<NodeIterate> init,
                                                     int iterations) {
  params.validate();
  const auto d = measurements.per_node(graph);
  const DenseInstance inst = build_dense(graph, d, params.c);
  require_size(inst, graph, init.size());
  // The W-weighted projection has the same KKT matrix at every step.
  const DenseProjector projector(inst, graph);
  std::vector<std::vector<NodeIterate>> history;
  history.push_back(std::move(init));
  for (int t = 0; t < iterations; ++t) {
    const auto& cur = history.back();
    const auto tilde = dense_halfstep(inst, graph, cur);
    const auto z_next = projector.weighted_kkt(tilde);
    std::vector<NodeIterate> next;
    for (int i = 0; i < graph.num_nodes(); ++i) {
      const DenseNode& m = inst.nodes[i];
      const VectorXd z = z_next[i].flatten();
      const VectorXd u_step = flat_u(cur[i]) + (m.D * (m.Q * z)) / params.rho;
      EdgeField u = u_step.reshaped(graph.dim(), graph.degree(i));
      for (Index k = 0; k < u.cols(); ++k) {
        const double norm = u.col(k).norm();
        if (norm > 1.0) u.col(k) /= norm;
      }
      const VectorXd lam = flat_lambda(cur[i]) + params.c * (m.A * z);
      next.push_back({z_next[i], u, EdgeField(lam.reshaped(graph.dim(), graph.degree(i)))});
    }
    history.push_back(std::move(next));
  }
  return history;
}

}  // namespace locadmm::oracle
