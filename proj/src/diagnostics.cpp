#include "locadmm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "locadmm/errors.hpp"

namespace locadmm {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw MissingNode(std::string(what) + ": node count mismatch");
}

NodeBlockVector residual_gradient(const NodeIterate& s, const Eigen::VectorXd& d) {
  return grad_F_z(s.z, s.u, d) + apply_At(s.lambda);
}

}  // namespace

double stationarity_S(std::span<const NodeIterate> states, std::span<const Eigen::VectorXd> d) {
  require_same_size(states.size(), d.size(), "stationarity_S");
  double total = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    total += residual_gradient(states[i], d[i]).squared_norm();
  }
  return total;
}

double primal_diff_U(std::span<const NodeIterate> now, std::span<const NodeIterate> prev) {
  require_same_size(now.size(), prev.size(), "primal_diff_U");
  double total = 0.0;
  for (std::size_t i = 0; i < now.size(); ++i) total += (now[i].u - prev[i].u).squaredNorm();
  return total;
}

double feasibility_P(std::span<const NodeIterate> states) {
  double total = 0.0;
  for (const auto& s : states) total += apply_A(s.z).squaredNorm();
  return total;
}

double gap_F(std::span<const NodeIterate> states, std::span<const NodeIterate> prev,
             const NetworkGraph& graph, std::span<const Eigen::VectorXd> d) {
  require_same_size(states.size(), d.size(), "gap_F");
  std::vector<NodeBlockVector> stepped;
  stepped.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    stepped.push_back(states[i].z - residual_gradient(states[i], d[i]));
  }
  const auto projected = project_consensus(stepped, graph);
  double total = primal_diff_U(states, prev) + feasibility_P(states);
  for (std::size_t i = 0; i < states.size(); ++i) {
    total += (states[i].z - projected[i]).squared_norm();
  }
  return total;
}

double augmented_lagrangian(std::span<const NodeIterate> states,
                            std::span<const Eigen::VectorXd> d, double c) {
  require_same_size(states.size(), d.size(), "augmented_lagrangian");
  double total = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const EdgeField az = apply_A(states[i].z);
    total += objective_F(states[i].z, states[i].u, d[i]) +
             (states[i].lambda.array() * az.array()).sum() + 0.5 * c * az.squaredNorm();
  }
  return total;
}

double potential(std::span<const NodeIterate> now, std::span<const NodeIterate> prev,
                 std::span<const NodeBlockVector> halfstep, std::span<const Eigen::VectorXd> d,
                 const PotentialWeights& w) {
  require_same_size(now.size(), prev.size(), "potential");
  require_same_size(now.size(), halfstep.size(), "potential");
  double total = augmented_lagrangian(now, d, w.c);
  for (std::size_t i = 0; i < now.size(); ++i) {
    const NodeBlockVector dz = now[i].z - prev[i].z;
    const double bb_norm = dz.dot(apply_cBtB(dz, w.c)) / w.c;
    total += 0.5 * w.c *
             (w.kappa1 * apply_A(halfstep[i]).squaredNorm() +
              w.kappa2 * apply_A(now[i].z).squaredNorm() +
              w.rho / (2.0 * w.c) * (now[i].u - prev[i].u).squaredNorm() +
              (w.kappa1 + w.kappa2) * bb_norm);
  }
  return total;
}

ParameterBounds parameter_bounds(const NetworkGraph& graph, const MeasurementSet& measurements,
                                 double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw InvalidParameter("c must be finite and > 0");
  ParameterBounds b;
  b.c = c;
  b.dim = graph.dim();
  b.n_max = graph.max_degree();
  b.n_sum = graph.degree_sum();
  b.d_max = measurements.max_range();
  b.tau_tilde_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < graph.num_nodes(); ++i) {
    const double ni = graph.degree(i);
    b.tau_tilde_min = std::min(b.tau_tilde_min, (c + 1) * (c + 1) * ni * ni + c * c * ni + ni);
  }
  if (!(b.tau_tilde_min > 0.0) || !std::isfinite(b.tau_tilde_min)) {
    throw UnsolvableNetwork("parameter bounds need every node to have a neighbor");
  }
  b.kappa1_min = 6.0 * (b.n_max + 1) * (1.0 + 1.0 / c);
  b.kappa2_min = b.n_sum * b.dim * (c + 1) * (c + 1) * (b.n_max + 1) * b.kappa1_min /
                 b.tau_tilde_min;
  b.rho_min = 4.0 * b.d_max * b.d_max * (b.kappa1_min + b.kappa2_min);
  return b;
}

EnvelopeReport sublinear_envelope_check(std::span<const double> gap, double tolerance,
                                        double floor) {
  EnvelopeReport report;
  double running_min = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < gap.size(); ++k) {
    const double value = gap[k] <= floor ? 0.0 : gap[k];
    running_min = std::min(running_min, value);
    const double T = static_cast<double>(k + 1);
    if (k >= 1) report.envelope.push_back(running_min * (T - 1.0));
  }
  if (report.envelope.empty()) return report;
  report.epsilon2 = *std::max_element(report.envelope.begin(), report.envelope.end());

  const std::size_t half = report.envelope.size() / 2;
  double early = 0.0;
  for (std::size_t k = 0; k < std::max<std::size_t>(half, 1); ++k) {
    early = std::max(early, report.envelope[k]);
  }
  for (std::size_t k = half; k < report.envelope.size(); ++k) {
    if (report.envelope[k] > (1.0 + tolerance) * early) ++report.violations;
  }
  report.bounded = report.violations == 0;
  return report;
}

std::vector<double> IterationTrace::column_F() const {
  std::vector<double> out;
  for (const auto& row : rows) {
    if (row.F) out.push_back(*row.F);
  }
  return out;
}

TraceRecorder::TraceRecorder(const NetworkGraph& graph, const MeasurementSet& measurements,
                             TraceMeta meta, std::optional<GroundTruth> truth, bool timing)
    : graph_(graph),
      ranges_(measurements.per_node(graph)),
      truth_(std::move(truth)),
      timing_(timing),
      last_(std::chrono::steady_clock::now()) {
  trace_.meta = std::move(meta);
}

IterationHook TraceRecorder::hook() {
  return [this](const IterationView& view) { record(view); };
}

void TraceRecorder::record(const IterationView& view) {
  TraceRow row;
  row.t = view.t;
  if (truth_) row.rmse = rmse(positions_of(view.current), *truth_, graph_);
  row.S = stationarity_S(view.current, ranges_);
  row.P = feasibility_P(view.current);
  row.L = augmented_lagrangian(view.current, ranges_, trace_.meta.c);
  row.comm_scalars = view.comm_scalars;
  if (!view.previous.empty()) {
    row.U = primal_diff_U(view.current, view.previous);
    row.F = gap_F(view.current, view.previous, graph_, ranges_);
    row.potential = potential(view.current, view.previous, view.halfstep, ranges_,
                              {trace_.meta.kappa1, trace_.meta.kappa2, trace_.meta.c,
                               trace_.meta.rho});
  }
  if (timing_) {
    const auto now = std::chrono::steady_clock::now();
    row.wall_ms = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
  }
  trace_.rows.push_back(row);
}

}  // namespace locadmm
