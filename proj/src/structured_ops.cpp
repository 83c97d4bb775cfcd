#include "locadmm/structured_ops.hpp"

#include <cmath>
#include <string>

#include "locadmm/errors.hpp"

namespace locadmm {

NodeBlockVector NodeBlockVector::zero(int dim, int degree) {
  return {Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Zero(dim, degree),
          Eigen::MatrixXd::Zero(dim, degree)};
}

double NodeBlockVector::squared_norm() const {
  return p.squaredNorm() + z_minus.squaredNorm() + z_plus.squaredNorm();
}

double NodeBlockVector::dot(const NodeBlockVector& other) const {
  return p.dot(other.p) + (z_minus.array() * other.z_minus.array()).sum() +
         (z_plus.array() * other.z_plus.array()).sum();
}

bool NodeBlockVector::all_finite() const {
  return p.allFinite() && z_minus.allFinite() && z_plus.allFinite();
}

Eigen::VectorXd NodeBlockVector::flatten() const {
  Eigen::VectorXd flat(flat_size());
  flat.head(p.size()) = p;
  flat.segment(p.size(), z_minus.size()) = z_minus.reshaped();
  flat.tail(z_plus.size()) = z_plus.reshaped();
  return flat;
}

NodeBlockVector NodeBlockVector::unflatten(const Eigen::Ref<const Eigen::VectorXd>& flat, int dim,
                                           int degree) {
  if (flat.size() != static_cast<Eigen::Index>(dim) * (2 * degree + 1)) {
    throw InvalidParameter("flat block has wrong length");
  }
  NodeBlockVector v = zero(dim, degree);
  v.p = flat.head(dim);
  const Eigen::Index block = static_cast<Eigen::Index>(dim) * degree;
  v.z_minus.reshaped() = flat.segment(dim, block);
  v.z_plus.reshaped() = flat.tail(block);
  return v;
}

NodeBlockVector& NodeBlockVector::operator+=(const NodeBlockVector& other) {
  p += other.p;
  z_minus += other.z_minus;
  z_plus += other.z_plus;
  return *this;
}

NodeBlockVector& NodeBlockVector::operator-=(const NodeBlockVector& other) {
  p -= other.p;
  z_minus -= other.z_minus;
  z_plus -= other.z_plus;
  return *this;
}

NodeBlockVector& NodeBlockVector::operator*=(double s) {
  p *= s;
  z_minus *= s;
  z_plus *= s;
  return *this;
}

NodeBlockVector operator+(NodeBlockVector a, const NodeBlockVector& b) { return a += b; }
NodeBlockVector operator-(NodeBlockVector a, const NodeBlockVector& b) { return a -= b; }
NodeBlockVector operator*(double s, NodeBlockVector a) { return a *= s; }

void PenaltyParams::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw InvalidParameter("c must be finite and > 0");
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidParameter("rho must be finite and > 0");
}

EdgeField apply_Q(const NodeBlockVector& v) {
  return (-v.z_plus).colwise() + v.p;
}

EdgeField apply_A(const NodeBlockVector& v) {
  return (-v.z_minus).colwise() + v.p;
}

NodeBlockVector apply_At(const EdgeField& f) {
  NodeBlockVector out = NodeBlockVector::zero(static_cast<int>(f.rows()), static_cast<int>(f.cols()));
  out.p = f.rowwise().sum();
  out.z_minus = -f;
  return out;
}

NodeBlockVector apply_Qt_D(const EdgeField& u, const Eigen::VectorXd& d) {
  const EdgeField du = u * d.asDiagonal();
  NodeBlockVector out =
      NodeBlockVector::zero(static_cast<int>(u.rows()), static_cast<int>(u.cols()));
  out.p = du.rowwise().sum();
  out.z_plus = -du;
  return out;
}

NodeBlockVector apply_cBtB(const NodeBlockVector& v, double c) {
  const double degree = v.degree();
  NodeBlockVector out;
  out.p = (c + 1.0) * degree * v.p + c * v.z_minus.rowwise().sum() + v.z_plus.rowwise().sum();
  out.z_minus = c * (v.z_minus.colwise() + v.p);
  out.z_plus = v.z_plus.colwise() + v.p;
  return out;
}

NodeBlockVector apply_W(const NodeBlockVector& v, double c) {
  return {2.0 * (c + 1.0) * v.degree() * v.p, 2.0 * c * v.z_minus, 2.0 * v.z_plus};
}

NodeBlockVector apply_W_inverse(const NodeBlockVector& v, double c) {
  return {v.p / (2.0 * (c + 1.0) * v.degree()), v.z_minus / (2.0 * c), v.z_plus / 2.0};
}

NodeBlockVector grad_F_z(const NodeBlockVector& v, const EdgeField& u, const Eigen::VectorXd& d) {
  // Q^T (Q v - D u)
  const EdgeField residual = apply_Q(v) - u * d.asDiagonal();
  NodeBlockVector out = NodeBlockVector::zero(v.dim(), v.degree());
  out.p = residual.rowwise().sum();
  out.z_plus = -residual;
  return out;
}

double objective_F(const NodeBlockVector& v, const EdgeField& u, const Eigen::VectorXd& d) {
  const EdgeField qv = apply_Q(v);
  return 0.5 * qv.squaredNorm() - ((u * d.asDiagonal()).array() * qv.array()).sum();
}

double objective_original(std::span<const Point> positions, const NetworkGraph& graph,
                          const MeasurementSet& measurements) {
  if (static_cast<int>(positions.size()) < graph.num_nodes()) {
    throw MissingPosition("positions do not cover every node");
  }
  double total = 0.0;
  for (int i = 0; i < graph.num_nodes(); ++i) {
    for (int j : graph.neighbors(i)) {
      const double r = (positions[i] - positions[j]).norm() - measurements.at(i, j);
      total += 0.5 * r * r;
    }
  }
  return total;
}

EdgeField project_ball(const EdgeField& f) {
  EdgeField out = f;
  for (Eigen::Index k = 0; k < f.cols(); ++k) {
    const double norm = f.col(k).norm();
    if (norm > 1.0) out.col(k) /= norm;
  }
  return out;
}

std::vector<NodeBlockVector> project_consensus(std::span<const NodeBlockVector> values,
                                               const NetworkGraph& graph) {
  if (static_cast<int>(values.size()) != graph.num_nodes()) {
    throw MissingNode("projection needs a block for every node (got " +
                      std::to_string(values.size()) + ", expected " +
                      std::to_string(graph.num_nodes()) + ")");
  }
  std::vector<NodeBlockVector> out(values.begin(), values.end());
  for (int i = 0; i < graph.num_nodes(); ++i) {
    if (values[i].degree() != graph.degree(i) || values[i].dim() != graph.dim()) {
      throw MissingNode("block of node " + std::to_string(i) + " has the wrong shape");
    }
    if (graph.is_anchor(i)) out[i].p = *graph.anchor(i);
  }
  for (const Edge& e : graph.edges()) {
    const int ki = graph.neighbor_slot(e.i, e.j);
    const int kj = graph.neighbor_slot(e.j, e.i);
    // z^+_{i,j} pairs with z^-_{j,i}, and z^+_{j,i} with z^-_{i,j}.
    const Eigen::VectorXd a = 0.5 * (values[e.i].z_plus.col(ki) + values[e.j].z_minus.col(kj));
    const Eigen::VectorXd b = 0.5 * (values[e.j].z_plus.col(kj) + values[e.i].z_minus.col(ki));
    out[e.i].z_plus.col(ki) = a;
    out[e.j].z_minus.col(kj) = a;
    out[e.j].z_plus.col(kj) = b;
    out[e.i].z_minus.col(ki) = b;
  }
  return out;
}

}  // namespace locadmm
