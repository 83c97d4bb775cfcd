#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "locadmm/errors.hpp"
#include "locadmm/solver_full.hpp"
#include "locadmm/solver_lite.hpp"
#include "test_util.hpp"

using namespace locadmm;
using locadmm::test::cols;
using locadmm::test::pt;

namespace {

/// 1-D pair: node 0 at x=1 (free), node 1 at x=3 (anchor).
NetworkInstance line_pair() {
  return test::exact_instance({pt({1.0}), pt({3.0})}, {{0, 1}}, {1});
}

TEST(InitLite, AlphaBetaFromPositions) {
  const auto inst = line_pair();
  MeasurementSet unit;
  unit.set(0, 1, 1.0);
  const auto s = init_lite(inst.graph, unit, {1.0, 1.0}, inst.truth->positions, 0.0);
  EXPECT_EQ(s[0].alpha, cols(1, {2}));
  EXPECT_EQ(s[0].beta, cols(1, {4}));
  EXPECT_EQ(s[0].d, pt({1}));
  EXPECT_TRUE(s[0].lambda.isZero(0.0));
}

TEST(InitLite, MissingPositions) {
  const auto inst = line_pair();
  EXPECT_THROW(init_lite(inst.graph, inst.measurements, {1, 1}, std::vector<Point>{pt({1})}, 0.0),
               InvalidInitSpec);
}

LiteNodeState scalar_state(double alpha, double beta) {
  LiteNodeState s;
  s.p = pt({0});
  s.u = cols(1, {0});
  s.lambda = cols(1, {0});
  s.alpha = cols(1, {alpha});
  s.beta = cols(1, {beta});
  s.d = pt({1});
  s.c = 1.0;
  s.rho = 1.0;
  return s;
}

TEST(StepLite, PositionUpdate) {
  const std::vector<int> nbrs{1};
  const std::vector<LiteMessage> in{{1, 0, pt({0.5}), pt({-2})}};
  const auto free = step_lite_node(scalar_state(2, 4), in, 0, nbrs, std::nullopt);
  EXPECT_DOUBLE_EQ(free.p(0), 1.5);
  const auto pinned = step_lite_node(scalar_state(2, 4), in, 0, nbrs, pt({0.7}));
  EXPECT_DOUBLE_EQ(pinned.p(0), 0.7);
}

TEST(StepLite, MissingMessage) {
  const std::vector<int> nbrs{1};
  EXPECT_THROW(step_lite_node(scalar_state(2, 4), {}, 0, nbrs, std::nullopt), MissingMessage);
  const std::vector<LiteMessage> stray{{2, 0, pt({0}), pt({0})}};
  EXPECT_THROW(step_lite_node(scalar_state(2, 4), stray, 0, nbrs, std::nullopt), MissingMessage);
}

TEST(StepLite, OutgoingMessagesAddressNeighbors) {
  const auto inst = test::triangle();
  const auto s = init_lite(inst.graph, inst.measurements, {1, 1}, inst.truth->positions, 0.5);
  const auto out = outgoing_lite(0, s[0], inst.graph.neighbors(0));
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[1].dst, 2);
  EXPECT_EQ(out[1].alpha, Point(s[0].alpha.col(1)));
  EXPECT_EQ(out[1].beta, Point(s[0].beta.col(1)));
}

TEST(Storage, SerializedSizeAndRoundTrip) {
  const auto inst = test::synthetic(15, 3, 0.45, {NoiseKind::AdditiveWhite, 0.01}, 2);
  const auto full = init_full(inst.graph, {UniformInit{}, 0.5}, 4);
  const auto states = init_lite(inst.graph, inst.measurements, {0.3, 0.7}, full);
  for (int i = 0; i < inst.graph.num_nodes(); ++i) {
    const auto data = serialize_lite(states[i]);
    const int n = inst.graph.dim(), deg = inst.graph.degree(i);
    EXPECT_EQ(data.size(), static_cast<std::size_t>(4 * n * deg + deg + 3));
    const auto back = deserialize_lite(data);
    EXPECT_EQ(back.u, states[i].u);
    EXPECT_EQ(back.lambda, states[i].lambda);
    EXPECT_EQ(back.alpha, states[i].alpha);
    EXPECT_EQ(back.beta, states[i].beta);
    EXPECT_EQ(back.d, states[i].d);
    EXPECT_EQ(back.c, 0.3);
    EXPECT_EQ(back.rho, 0.7);
  }
  const auto data = serialize_lite(states[0]);
  EXPECT_ANY_THROW(deserialize_lite(std::span<const double>(data).first(data.size() - 1)));
}

TEST(InvertState, RecoversFullIterate) {
  const auto inst = test::synthetic(10, 2, 0.6, {}, 5);
  const auto full = init_full(inst.graph, {UniformInit{-1, 1}, 0.5}, 9);
  const auto lite = init_lite(inst.graph, inst.measurements, {0.4, 1.0}, full);
  for (int i = 0; i < inst.graph.num_nodes(); ++i) {
    const auto back = invert_state(lite[i]);
    EXPECT_LE((back.z.flatten() - full[i].z.flatten()).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(back.u, full[i].u);
    EXPECT_EQ(back.lambda, full[i].lambda);
  }
}

double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

TEST(RunLite, MatchesFullFor200Iterations) {
  for (std::uint64_t seed : {3u, 4u}) {
    const auto inst = test::synthetic(18, 3, 0.45, {NoiseKind::RangeDependent, 0.02}, seed);
    const PenaltyParams params{0.11, 0.25};
    const auto full0 = init_full(inst.graph, {UniformInit{}, 0.5}, seed);
    std::vector<std::vector<NodeIterate>> a, b;
    auto rec = [](auto& log) {
      return [&log](const IterationView& v) { log.emplace_back(v.current.begin(), v.current.end()); };
    };
    run_full(inst.graph, inst.measurements, params, full0, {200, 1}, rec(a));
    run_lite(inst.graph, init_lite(inst.graph, inst.measurements, params, full0), {200, 1}, rec(b));
    ASSERT_EQ(a.size(), b.size());
    double worst = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
      for (int i = 0; i < inst.graph.num_nodes(); ++i) {
        worst = std::max(worst, rel_err(a[t][i].z.p, b[t][i].z.p));
        worst = std::max(worst, rel_err(a[t][i].u, b[t][i].u));
        worst = std::max(worst, rel_err(a[t][i].lambda, b[t][i].lambda));
        worst = std::max(worst, rel_err(a[t][i].z.flatten(), b[t][i].z.flatten()));
      }
    }
    EXPECT_LE(worst, 1e-9) << "seed " << seed;
  }
}

TEST(RunLite, HalfstepMatchesFull) {
  const auto inst = test::synthetic(8, 2, 0.6, {}, 7);
  const PenaltyParams params{0.5, 0.5};
  const auto full0 = init_full(inst.graph, {UniformInit{}, 0.0}, 1);
  std::vector<std::vector<NodeBlockVector>> a, b;
  auto rec = [](auto& log) {
    return [&log](const IterationView& v) {
      if (v.t > 0) log.emplace_back(v.halfstep.begin(), v.halfstep.end());
    };
  };
  run_full(inst.graph, inst.measurements, params, full0, {20, 1}, rec(a));
  run_lite(inst.graph, init_lite(inst.graph, inst.measurements, params, full0), {20, 1}, rec(b));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (int i = 0; i < inst.graph.num_nodes(); ++i) {
      EXPECT_LE(rel_err(a[t][i].flatten(), b[t][i].flatten()), 1e-10);
    }
  }
}

TEST(RunLite, TriangleAtTruthIsStationary) {
  const auto inst = test::triangle();
  const PenaltyParams params{1.0, 1.0};
  const auto full0 = test::aligned_state(inst.graph, inst.truth->positions);
  const auto r = run_lite(inst.graph, init_lite(inst.graph, inst.measurements, params, full0),
                          {50, 1});
  EXPECT_LE(rmse(r.estimates, *inst.truth, inst.graph), 1e-14);
}

TEST(RunLite, DeterministicAcrossThreads) {
  const auto inst = test::synthetic(25, 3, 0.4, {NoiseKind::AdditiveWhite, 0.02}, 15);
  const PenaltyParams params{0.2, 0.2};
  const auto init = init_lite(inst.graph, inst.measurements, params,
                              init_full(inst.graph, {UniformInit{}, 0.5}, 3));
  const auto one = run_lite(inst.graph, init, {80, 1});
  for (unsigned threads : {4u, 8u}) {
    const auto many = run_lite(inst.graph, init, {80, threads});
    for (int i = 0; i < inst.graph.num_nodes(); ++i) EXPECT_EQ(many.estimates[i], one.estimates[i]);
  }
}

TEST(RunLite, CommunicationIsAlphaBetaPerEdge) {
  const auto inst = test::synthetic(12, 3, 0.5, {}, 6);
  const PenaltyParams params{0.5, 0.5};
  const auto init = init_lite(inst.graph, inst.measurements, params, inst.truth->positions, 0.0);
  const auto r = run_lite(inst.graph, init, {3, 1});
  EXPECT_EQ(r.total_comm_scalars, 3u * 2u * 2u * inst.graph.degree_sum());
}

}  // namespace
