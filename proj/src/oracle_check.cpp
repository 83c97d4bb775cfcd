#include "locadmm/oracle_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include <Eigen/Dense>

#include "locadmm/diagnostics.hpp"
#include "locadmm/errors.hpp"
#include "locadmm/oracle.hpp"

namespace locadmm {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class Checker {
 public:
  void add(const std::string& name, double tolerance, double error) {
    auto it = index_.find(name);
    if (it == index_.end()) {
      index_[name] = report_.checks.size();
      report_.checks.push_back({name, error, tolerance});
    } else {
      auto& check = report_.checks[it->second];
      check.max_error = std::max(check.max_error, error);
    }
  }

  /// |a - b|_inf scaled by max(1, |b|_inf).
  void vec(const std::string& name, double tolerance, const VectorXd& got, const VectorXd& want) {
    if (got.size() != want.size()) {
      add(name, tolerance, std::numeric_limits<double>::infinity());
      return;
    }
    const double scale = std::max(1.0, want.size() ? want.cwiseAbs().maxCoeff() : 0.0);
    const double err = got.size() ? (got - want).cwiseAbs().maxCoeff() / scale : 0.0;
    add(name, tolerance, std::isfinite(err) ? err : std::numeric_limits<double>::infinity());
  }

  void scalar(const std::string& name, double tolerance, double got, double want) {
    vec(name, tolerance, VectorXd::Constant(1, got), VectorXd::Constant(1, want));
  }

  OracleReport take() { return std::move(report_); }

 private:
  OracleReport report_;
  std::map<std::string, std::size_t> index_;
};

struct Sampler {
  std::mt19937_64 rng;
  std::uniform_real_distribution<double> unit{-1.0, 1.0};

  MatrixXd matrix(int rows, int cols) {
    MatrixXd m(rows, cols);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = unit(rng);
    return m;
  }
  NodeBlockVector block(int dim, int degree) {
    return {matrix(dim, 1).col(0), matrix(dim, degree), matrix(dim, degree)};
  }
  EdgeField ball_field(int dim, int degree) { return project_ball(matrix(dim, degree)); }
  NodeIterate iterate(int dim, int degree) {
    return {block(dim, degree), ball_field(dim, degree), matrix(dim, degree)};
  }
};

VectorXd flat(const EdgeField& f) { return f.reshaped(); }

std::vector<NodeIterate> random_state(Sampler& s, const NetworkGraph& graph) {
  std::vector<NodeIterate> out;
  for (int i = 0; i < graph.num_nodes(); ++i) out.push_back(s.iterate(graph.dim(), graph.degree(i)));
  return out;
}

void check_operators(Checker& ck, Sampler& s, const NetworkGraph& graph,
                     const std::vector<VectorXd>& d, const oracle::DenseInstance& inst,
                     const ClosedForms& forms, double c) {
  constexpr double tol = 1e-12;
  for (int i = 0; i < graph.num_nodes(); ++i) {
    const oracle::DenseNode& m = inst.nodes[i];
    const int n = graph.dim();
    const int deg = graph.degree(i);
    const NodeBlockVector v = s.block(n, deg);
    const EdgeField u = s.ball_field(n, deg);
    const EdgeField f = s.matrix(n, deg);
    const VectorXd x = v.flatten();

    ck.vec("apply_Q", tol, flat(apply_Q(v)), m.Q * x);
    ck.vec("apply_A", tol, flat(apply_A(v)), m.A * x);
    ck.vec("apply_At", tol, apply_At(f).flatten(), m.A.transpose() * flat(f));
    ck.vec("apply_Qt_D", tol, apply_Qt_D(u, d[i]).flatten(), m.Q.transpose() * m.D * flat(u));
    ck.vec("apply_cBtB", tol, forms.cBtB(v, c).flatten(), m.cBtB * x);
    ck.vec("apply_W", tol, apply_W(v, c).flatten(), m.W * x);
    ck.vec("apply_W_inverse", tol, apply_W_inverse(v, c).flatten(),
           m.W.diagonal().cwiseInverse().asDiagonal() * x);
    ck.vec("W_from_cBtB", tol, m.W.reshaped(),
           MatrixXd(m.cBtB + c * m.AtA + m.QtQ).reshaped());
    ck.vec("grad_F_z", tol, grad_F_z(v, u, d[i]).flatten(),
           m.QtQ * x - m.Q.transpose() * m.D * flat(u));
    const VectorXd qx = m.Q * x;
    ck.scalar("objective_F", tol, objective_F(v, u, d[i]),
              0.5 * qx.squaredNorm() - flat(u).dot(m.D * qx));

    const auto fn = [&](const VectorXd& y) {
      return objective_F(NodeBlockVector::unflatten(y, n, deg), u, d[i]);
    };
    ck.vec("grad_F_z_finite_diff", 1e-6, oracle::finite_diff_grad(fn, x, 1e-4),
           grad_F_z(v, u, d[i]).flatten());
  }

  const auto state = random_state(s, graph);
  const auto dense = oracle::dense_halfstep(inst, graph, state);
  for (int i = 0; i < graph.num_nodes(); ++i) {
    ck.vec("halfstep", tol, local_halfstep(state[i], d[i], c, graph.anchor(i)).flatten(),
           dense[i].flatten());
  }
}

void check_projections(Checker& ck, Sampler& s, const NetworkGraph& graph,
                       const oracle::DenseProjector& dense, const ClosedForms& forms, double c) {
  constexpr double tol = 1e-10;
  std::vector<NodeBlockVector> tilde;
  for (int i = 0; i < graph.num_nodes(); ++i) tilde.push_back(s.block(graph.dim(), graph.degree(i)));

  const auto kkt = dense.weighted_kkt(tilde);
  const auto sub = dense.weighted_substitution(tilde);
  ck.vec("kkt_vs_substitution", tol, oracle::stack(sub), oracle::stack(kkt));

  std::vector<NodeBlockVector> combined;
  for (int i = 0; i < graph.num_nodes(); ++i) {
    const auto nbrs = graph.neighbors(i);
    std::vector<EdgeMessage> incoming;
    for (int j : nbrs) {
      const int slot = graph.neighbor_slot(j, i);
      incoming.push_back({j, i, tilde[j].z_minus.col(slot), tilde[j].z_plus.col(slot)});
    }
    combined.push_back(forms.combine(tilde[i], incoming, i, nbrs, c, graph.anchor(i)));
  }
  ck.vec("combine_z", tol, oracle::stack(combined), oracle::stack(kkt));

  ck.vec("project_consensus", tol, oracle::stack(forms.project(tilde, graph)),
         oracle::stack(dense.unweighted(tilde)));
}

void check_diagnostics(Checker& ck, Sampler& s, const NetworkGraph& graph,
                       const MeasurementSet& measurements, const std::vector<VectorXd>& d,
                       const oracle::DenseInstance& inst, double c, double rho) {
  constexpr double tol = 1e-9;
  const auto now = random_state(s, graph);
  const auto prev = random_state(s, graph);
  std::vector<NodeBlockVector> half;
  for (int i = 0; i < graph.num_nodes(); ++i) half.push_back(s.block(graph.dim(), graph.degree(i)));

  ck.scalar("S", tol, stationarity_S(now, d), oracle::dense_S(inst, now));
  ck.scalar("U", tol, primal_diff_U(now, prev), oracle::dense_U(now, prev));
  ck.scalar("P", tol, feasibility_P(now), oracle::dense_P(inst, now));
  ck.scalar("F", tol, gap_F(now, prev, graph, d), oracle::dense_F(inst, graph, now, prev));
  ck.scalar("L", tol, augmented_lagrangian(now, d, c), oracle::dense_L(inst, now));
  const ParameterBounds b = parameter_bounds(graph, measurements, c);
  ck.scalar("potential", tol, potential(now, prev, half, d, {b.kappa1_min, b.kappa2_min, c, rho}),
            oracle::dense_potential(inst, now, prev, half, b.kappa1_min, b.kappa2_min, rho));
}

void check_trajectory(Checker& ck, const NetworkGraph& graph, const MeasurementSet& measurements,
                      const OracleCheckOptions& options, std::uint64_t seed) {
  const PenaltyParams params{options.c, options.rho};
  const auto init = init_full(graph, InitSpec{UniformInit{}, 0.0}, seed);
  const auto dense = oracle::run_dense_admm(graph, measurements, params, init,
                                            options.trajectory_iterations);
  std::vector<std::vector<NodeIterate>> fast;
  run_full(graph, measurements, params, init, {options.trajectory_iterations, 1},
           [&](const IterationView& v) { fast.emplace_back(v.current.begin(), v.current.end()); });
  for (std::size_t t = 0; t < dense.size() && t < fast.size(); ++t) {
    for (int i = 0; i < graph.num_nodes(); ++i) {
      ck.vec("trajectory", 1e-9, fast[t][i].z.flatten(), dense[t][i].z.flatten());
      ck.vec("trajectory", 1e-9, flat(fast[t][i].u), flat(dense[t][i].u));
      ck.vec("trajectory", 1e-9, flat(fast[t][i].lambda), flat(dense[t][i].lambda));
    }
  }
  if (fast.size() != dense.size()) ck.add("trajectory", 1e-9, std::numeric_limits<double>::infinity());
}

}  // namespace

bool OracleReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed(); });
}

void OracleReport::merge(const OracleReport& other) {
  for (const auto& check : other.checks) {
    auto it = std::find_if(checks.begin(), checks.end(),
                           [&](const CheckResult& c) { return c.name == check.name; });
    if (it == checks.end()) {
      checks.push_back(check);
    } else {
      it->max_error = std::max(it->max_error, check.max_error);
      it->tolerance = std::min(it->tolerance, check.tolerance);
    }
  }
}

OracleReport run_oracle_check(const NetworkGraph& graph, const MeasurementSet& measurements,
                              const OracleCheckOptions& options, const ClosedForms& forms) {
  if (graph.num_nodes() > kMaxOracleNodes) {
    throw InvalidParameter("oracle check is limited to " + std::to_string(kMaxOracleNodes) +
                           " nodes, instance has " + std::to_string(graph.num_nodes()));
  }
  for (int i = 0; i < graph.num_nodes(); ++i) {
    if (graph.degree(i) == 0) throw UnsolvableNetwork("oracle check needs every node to have a neighbor");
  }
  PenaltyParams{options.c, options.rho}.validate();
  const auto d = measurements.per_node(graph);
  const auto inst = oracle::build_dense(graph, d, options.c);

  Checker ck;
  Sampler sampler{std::mt19937_64(options.seed)};
  const oracle::DenseProjector projector(inst, graph);
  for (int trial = 0; trial < options.trials; ++trial) {
    if (options.operators) check_operators(ck, sampler, graph, d, inst, forms, options.c);
    if (options.projections) check_projections(ck, sampler, graph, projector, forms, options.c);
    if (options.diagnostics) {
      check_diagnostics(ck, sampler, graph, measurements, d, inst, options.c, options.rho);
    }
  }
  if (options.trajectory && graph.is_connected() && graph.num_anchors() > 0) {
    check_trajectory(ck, graph, measurements, options, options.seed);
  }
  return ck.take();
}

}  // namespace locadmm
