#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "locadmm/diagnostics.hpp"
#include "locadmm/errors.hpp"
#include "locadmm/oracle.hpp"
#include "locadmm/solver_full.hpp"
#include "test_util.hpp"

using namespace locadmm;
using locadmm::test::pt;

namespace {

std::vector<NodeBlockVector> blocks_of(const std::vector<NodeIterate>& s) {
  std::vector<NodeBlockVector> out;
  for (const auto& n : s) out.push_back(n.z);
  return out;
}

TEST(Gaps, VanishAtKktPoint) {
  const auto inst = test::triangle();
  const auto d = inst.measurements.per_node(inst.graph);
  const auto kkt = test::aligned_state(inst.graph, inst.truth->positions);
  EXPECT_LE(stationarity_S(kkt, d), 1e-16);
  EXPECT_EQ(feasibility_P(kkt), 0.0);
  EXPECT_EQ(primal_diff_U(kkt, kkt), 0.0);
  EXPECT_LE(gap_F(kkt, kkt, inst.graph, d), 1e-16);
}

TEST(Gaps, AllZeroStateWithZeroRanges) {
  const auto inst = test::exact_instance({pt({0.5, 0.5}), pt({0.5, 0.5}), pt({0.5, 0.5})},
                                         {{0, 1}, {1, 2}}, {});
  const auto d = inst.measurements.per_node(inst.graph);
  const auto zero = init_full(inst.graph, {}, 0);
  EXPECT_EQ(gap_F(zero, zero, inst.graph, d), 0.0);
  EXPECT_EQ(stationarity_S(zero, d), 0.0);
}

TEST(Gaps, NonzeroAwayFromKkt) {
  const auto inst = test::triangle();
  const auto d = inst.measurements.per_node(inst.graph);
  const auto a = init_full(inst.graph, {UniformInit{}, 0.5}, 1);
  const auto b = init_full(inst.graph, {UniformInit{}, 0.0}, 2);
  EXPECT_GT(feasibility_P(a), 0.0);
  EXPECT_GT(primal_diff_U(a, b), 0.0);
  EXPECT_GT(gap_F(a, b, inst.graph, d), 0.0);
  EXPECT_GT(stationarity_S(a, d), 0.0);
}

TEST(Gaps, DenseAgreement) {
  const auto inst = test::synthetic(6, 2, 0.7, {NoiseKind::AdditiveWhite, 0.05}, 14);
  const auto d = inst.measurements.per_node(inst.graph);
  const double c = 0.4;
  const auto dense = oracle::build_dense(inst.graph, d, c);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto now = init_full(inst.graph, {UniformInit{}, 0.5}, seed);
    const auto prev = init_full(inst.graph, {UniformInit{}, 0.0}, seed + 100);
    for (auto& n : now) n.lambda.setConstant(0.3 * static_cast<double>(seed));
    auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
    EXPECT_TRUE(near(stationarity_S(now, d), oracle::dense_S(dense, now)));
    EXPECT_TRUE(near(primal_diff_U(now, prev), oracle::dense_U(now, prev)));
    EXPECT_TRUE(near(feasibility_P(now), oracle::dense_P(dense, now)));
    EXPECT_TRUE(near(gap_F(now, prev, inst.graph, d), oracle::dense_F(dense, inst.graph, now, prev)));
    EXPECT_TRUE(near(augmented_lagrangian(now, d, c), oracle::dense_L(dense, now)));
    const auto half = blocks_of(prev);
    EXPECT_TRUE(near(potential(now, prev, half, d, {36, 576, c, 2.0}),
                     oracle::dense_potential(dense, now, prev, half, 36, 576, 2.0)));
  }
}

TEST(AugmentedLagrangian, FeasibleReducesToObjective) {
  const auto inst = test::synthetic(10, 2, 0.5, {NoiseKind::AdditiveWhite, 0.03}, 3);
  const auto d = inst.measurements.per_node(inst.graph);
  const auto state = init_full(inst.graph, {PositionsInit{inst.truth->positions}, 0.5}, 0);
  double sum_f = 0.0, sum_q = 0.0;
  for (int i = 0; i < inst.graph.num_nodes(); ++i) {
    sum_f += objective_F(state[i].z, state[i].u, d[i]);
    sum_q += 0.5 * apply_Q(state[i].z).squaredNorm();
  }
  EXPECT_NEAR(augmented_lagrangian(state, d, 0.7), sum_f, 1e-12);
  const auto zero_u = init_full(inst.graph, {PositionsInit{inst.truth->positions}, 0.0}, 0);
  EXPECT_NEAR(augmented_lagrangian(zero_u, d, 0.7), sum_q, 1e-12);
}

TEST(Potential, EqualsLagrangianWithoutDifferences) {
  const auto inst = test::synthetic(8, 2, 0.6, {}, 4);
  const auto d = inst.measurements.per_node(inst.graph);
  const auto state = init_full(inst.graph, {PositionsInit{inst.truth->positions}, 0.5}, 0);
  const auto half = blocks_of(state);
  EXPECT_DOUBLE_EQ(potential(state, state, half, d, {36, 576, 0.3, 50}),
                   augmented_lagrangian(state, d, 0.3));
}

TEST(ParameterBounds, PathExamples) {
  const auto inst = test::exact_instance({pt({0, 0}), pt({1, 0}), pt({2, 0})}, {{0, 1}, {1, 2}}, {0});
  const auto b = parameter_bounds(inst.graph, inst.measurements, 1.0);
  EXPECT_EQ(b.n_max, 2);
  EXPECT_EQ(b.n_sum, 4);
  EXPECT_DOUBLE_EQ(b.tau_tilde_min, 6.0);
  EXPECT_DOUBLE_EQ(b.kappa1_min, 36.0);
  EXPECT_DOUBLE_EQ(b.kappa2_min, 576.0);
  EXPECT_DOUBLE_EQ(b.d_max, 1.0);
  EXPECT_DOUBLE_EQ(b.rho_min, 2448.0);
  EXPECT_THROW(parameter_bounds(inst.graph, inst.measurements, 0.0), InvalidParameter);
}

TEST(Envelope, InverseDecayIsBounded) {
  std::vector<double> gap;
  for (int t = 1; t <= 1000; ++t) gap.push_back(1.0 / t);
  const auto r = sublinear_envelope_check(gap);
  EXPECT_TRUE(r.bounded);
  EXPECT_EQ(r.violations, 0);
  EXPECT_NEAR(r.epsilon2, 1.0, 0.01);
  EXPECT_EQ(r.envelope.size(), gap.size() - 1);
}

TEST(Envelope, ConstantGapGrows) {
  const std::vector<double> gap(200, 0.5);
  const auto r = sublinear_envelope_check(gap);
  EXPECT_FALSE(r.bounded);
  EXPECT_GT(r.violations, 0);
  EXPECT_NEAR(r.envelope.back(), 0.5 * 199, 1e-12);
}

TEST(Envelope, SolverRunOnTinyNetworkIsBounded) {
  const auto inst = test::exact_instance({pt({0, 0}), pt({1, 0}), pt({0.4, 0.7}), pt({0.9, 0.8})},
                                         {{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 3}}, {0, 1});
  std::vector<Point> start = inst.truth->positions;
  start[2] += pt({0.02, -0.01});
  start[3] += pt({-0.015, 0.02});
  TraceRecorder rec(inst.graph, inst.measurements, {"full", 0.1, 0.1, 0, 0, 0}, inst.truth);
  run_full(inst.graph, inst.measurements, {0.1, 0.1},
           init_full(inst.graph, {PositionsInit{start}, 0.0}, 0), {2000, 1}, rec.hook());
  const auto r = sublinear_envelope_check(rec.trace().column_F());
  EXPECT_TRUE(r.bounded);
}

TEST(TraceRecorder, RowsAndOptionalFields) {
  const auto inst = test::triangle();
  TraceRecorder rec(inst.graph, inst.measurements, {"full", 1.0, 1.0, 36, 576, 0}, inst.truth);
  run_full(inst.graph, inst.measurements, {1.0, 1.0}, init_full(inst.graph, {UniformInit{}, 0}, 1),
           {5, 1}, rec.hook());
  const auto trace = rec.take();
  ASSERT_EQ(trace.rows.size(), 6u);
  const auto& first = trace.rows[0];
  EXPECT_EQ(first.t, 0);
  EXPECT_TRUE(first.rmse.has_value());
  EXPECT_FALSE(first.U.has_value());
  EXPECT_FALSE(first.F.has_value());
  EXPECT_FALSE(first.potential.has_value());
  EXPECT_FALSE(first.wall_ms.has_value());
  EXPECT_EQ(first.comm_scalars, 0u);
  for (std::size_t t = 1; t < trace.rows.size(); ++t) {
    EXPECT_EQ(trace.rows[t].t, static_cast<int>(t));
    EXPECT_TRUE(trace.rows[t].U && trace.rows[t].F && trace.rows[t].potential);
    EXPECT_EQ(trace.rows[t].comm_scalars, 2u * 2u * 6u);
  }
  EXPECT_EQ(trace.column_F().size(), 5u);

  TraceRecorder no_truth(inst.graph, inst.measurements, {}, std::nullopt, true);
  run_full(inst.graph, inst.measurements, {1.0, 1.0}, init_full(inst.graph, {}, 0), {2, 1},
           no_truth.hook());
  EXPECT_FALSE(no_truth.trace().rows[1].rmse.has_value());
  EXPECT_TRUE(no_truth.trace().rows[1].wall_ms.has_value());
}

}  // namespace
