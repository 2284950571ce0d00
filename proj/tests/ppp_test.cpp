#include "delnet/ppp.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "delnet/graph.hpp"
#include "delnet/network.hpp"
#include "delnet/rng.hpp"
#include "delnet/tuning.hpp"

namespace delnet {
namespace {

PointStream edge_stream(int edge, std::vector<double> points) {
  PointStream s;
  s.clock = ClockId{ClockKind::comm, edge};
  s.points = std::move(points);
  return s;
}

TEST(PppSample, ValidatesRateAndStopsAtHorizon) {
  auto s = make_stream(1, StreamKind::comm_clock, 0);
  EXPECT_THROW(sample_ppp(0.0, 1.0, s), std::invalid_argument);
  EXPECT_THROW(sample_ppp(-1.0, 1.0, s), std::invalid_argument);

  auto s2 = make_stream(1, StreamKind::comm_clock, 1);
  const auto pts = sample_ppp(3.0, 10.0, s2);
  double prev = 0.0;
  for (double t : pts) {
    EXPECT_GT(t, prev);
    EXPECT_LE(t, 10.0);
    prev = t;
  }
}

TEST(PppSample, VanishingRateProducesNoPoints) {
  auto s = make_stream(2, StreamKind::comm_clock, 0);
  EXPECT_TRUE(sample_ppp(1e-12, 1.0, s).empty());
}

TEST(PppSample, GapMeanMatchesRate) {
  auto s = make_stream(3, StreamKind::comm_clock, 5);
  const auto pts = sample_ppp(10.0, 1000.0, s);
  ASSERT_GT(pts.size(), 8000u);
  double gap_sum = pts[0];
  for (std::size_t k = 1; k < pts.size(); ++k) gap_sum += pts[k] - pts[k - 1];
  const double mean = gap_sum / static_cast<double>(pts.size());
  EXPECT_GE(mean, 0.094);
  EXPECT_LE(mean, 0.106);
}

TEST(PppSample, IndependentStreamsSuperpose) {
  auto sa = make_stream(4, StreamKind::comm_clock, 0);
  auto sb = make_stream(4, StreamKind::comm_clock, 1);
  const auto a = sample_ppp(2.0, 1000.0, sa);
  const auto b = sample_ppp(3.0, 1000.0, sb);
  const double total = static_cast<double>(a.size() + b.size());
  EXPECT_NEAR(total, 5000.0, 3.0 * std::sqrt(5000.0));
}

TEST(PppWindow, HalfOpenConvention) {
  const std::vector<double> pts{1.0, 2.0, 3.0};
  EXPECT_EQ(window_count(pts, 3.0, 2.0), 2);  // [1,3) holds 1 and 2
  EXPECT_EQ(window_count(pts, 3.0, 0.0), 0);
  EXPECT_EQ(window_count(std::vector<double>{0.5}, 0.5, 1.0), 0);
  EXPECT_EQ(window_count(pts, 10.0, 1.0), 0);
  EXPECT_EQ(window_count(pts, 2.5, 10.0), 2);
}

TEST(PppGating, UnboundedCapsAcceptEverything) {
  Graph g(2, {{0, 1}});
  DelayProfile d{Eigen::VectorXd::Constant(1, 1.0), {}};
  CapacityProfile caps;  // all unbounded
  auto s = make_stream(5, StreamKind::comm_clock, 0);
  std::vector<PointStream> streams{edge_stream(0, sample_ppp(5.0, 50.0, s))};
  const auto decisions = gate_events(g, d, caps, streams, {});
  ASSERT_EQ(decisions.size(), streams[0].points.size());
  for (const auto& dec : decisions) {
    EXPECT_TRUE(dec.accepted);
    EXPECT_EQ(dec.violations, 0u);
  }
}

TEST(PppGating, SingleEdgeUnitCapHandExample) {
  Graph g(2, {{0, 1}});
  DelayProfile d{Eigen::VectorXd::Constant(1, 1.0), {}};
  CapacityProfile caps;
  caps.edge = {1};
  std::vector<PointStream> streams{edge_stream(0, {0.1, 0.5, 2.0})};
  const auto decisions = gate_events(g, d, caps, streams, {});
  ASSERT_EQ(decisions.size(), 3u);
  EXPECT_TRUE(decisions[0].accepted);
  EXPECT_FALSE(decisions[1].accepted);  // 0.1 still inside [-0.5, 0.5)
  EXPECT_TRUE(decisions[1].violates(CapViolation::edge));
  EXPECT_TRUE(decisions[2].accepted);   // window [1, 2) is clear
}

TEST(PppGating, NodeCapCouplesEdges) {
  // star with hub 0: hub node-comm cap 1 serializes the two edges
  Graph g(3, {{0, 1}, {0, 2}});
  DelayProfile d{Eigen::VectorXd::Constant(2, 1.0), {}};
  CapacityProfile caps;
  caps.node_comm = {1, CapacityProfile::unbounded, CapacityProfile::unbounded};
  std::vector<PointStream> streams{edge_stream(0, {0.1}),
                                   edge_stream(1, {0.3, 1.2})};
  const auto decisions = gate_events(g, d, caps, streams, {});
  ASSERT_EQ(decisions.size(), 3u);
  EXPECT_TRUE(decisions[0].accepted);   // edge 0 at 0.1
  EXPECT_FALSE(decisions[1].accepted);  // edge 1 at 0.3 blocked at the hub
  EXPECT_TRUE(decisions[1].violates(CapViolation::node_first));
  EXPECT_TRUE(decisions[2].accepted);   // 0.1 leaves the hub window by 1.2
}

TEST(PppGating, RejectedEventsConsumeNoCapacity) {
  // with base-count semantics the third event is blocked by the second
  // (rejected) one; with accepted-count semantics it passes
  Graph g(2, {{0, 1}});
  DelayProfile d{Eigen::VectorXd::Constant(1, 1.0), {}};
  CapacityProfile caps;
  caps.edge = {1};
  std::vector<PointStream> streams{edge_stream(0, {0.1, 0.5, 1.3})};

  const auto accepted_sem = gate_events(g, d, caps, streams, {});
  EXPECT_TRUE(accepted_sem[2].accepted);  // [0.3, 1.3) holds only rejected 0.5

  GatingOptions all_points;
  all_points.count_all_points = true;
  const auto base_sem = gate_events(g, d, caps, streams, all_points);
  EXPECT_FALSE(base_sem[2].accepted);
}

TEST(PppGating, CompClockUsesOwnBudget) {
  Graph g(2, {{0, 1}});
  DelayProfile d{Eigen::VectorXd::Constant(1, 0.5),
                 Eigen::Vector2d(2.0, 2.0)};
  CapacityProfile caps;
  caps.node_comp = {1, 1};
  PointStream comp;
  comp.clock = ClockId{ClockKind::comp, 0};
  comp.points = {0.2, 1.0, 2.5};
  std::vector<PointStream> streams{comp};
  const auto decisions = gate_events(g, d, caps, streams, {});
  ASSERT_EQ(decisions.size(), 3u);
  EXPECT_TRUE(decisions[0].accepted);
  EXPECT_FALSE(decisions[1].accepted);  // 0.2 in [-1, 1)
  EXPECT_TRUE(decisions[1].violates(CapViolation::comp));
  EXPECT_TRUE(decisions[2].accepted);   // window [0.5, 2.5) clear of accepts
}

TEST(PppGating, ReplayNeverExceedsCaps) {
  Graph g(3, {{0, 1}, {1, 2}, {0, 2}});
  DelayProfile d{Eigen::Vector3d(0.4, 0.7, 1.0), {}};
  CapacityProfile caps;
  caps.edge = {2, 2, 2};
  caps.node_comm = {3, 3, 3};
  std::vector<PointStream> streams;
  for (int e = 0; e < 3; ++e) {
    auto s = make_stream(6, StreamKind::comm_clock, e);
    streams.push_back(edge_stream(e, sample_ppp(4.0, 200.0, s)));
  }
  const auto decisions = gate_events(g, d, caps, streams, {});

  std::vector<std::vector<double>> edge_acc(3);
  std::vector<std::vector<double>> node_acc(3);
  for (const auto& dec : decisions) {
    if (!dec.accepted) continue;
    const int e = dec.clock.index;
    // caps must already hold BEFORE appending this accepted event
    EXPECT_LT(window_count(edge_acc[e], dec.time, d.edge[e]), 2);
    edge_acc[e].push_back(dec.time);
    for (int node : {g.edge(e).u, g.edge(e).v}) {
      EXPECT_LT(window_count(node_acc[node], dec.time,
                             d.node_comm_delay(g, node)),
                3);
      node_acc[node].push_back(dec.time);
    }
  }
}

TEST(PppGating, BoundaryIntensityKeepsAcceptanceAboveHalf) {
  // single edge driven exactly at the certified capacity boundary
  Graph g(2, {{0, 1}});
  const double tau = 0.5, q = 4.0;
  const double c = capacity_rate_constant();
  const double rate = q / (c * tau);
  DelayProfile d{Eigen::VectorXd::Constant(1, tau), {}};
  CapacityProfile caps;
  caps.edge = {static_cast<std::int64_t>(q)};
  caps.node_comm = {static_cast<std::int64_t>(q),
                    static_cast<std::int64_t>(q)};
  const double horizon = 1.2e5 / rate;
  auto s = make_stream(7, StreamKind::comm_clock, 0);
  std::vector<PointStream> streams{edge_stream(0, sample_ppp(rate, horizon, s))};
  const auto decisions = gate_events(g, d, caps, streams, {});
  ASSERT_GT(decisions.size(), 100000u);
  std::size_t accepted = 0;
  for (const auto& dec : decisions) accepted += dec.accepted;
  EXPECT_GE(static_cast<double>(accepted) / decisions.size(), 0.5);
}

TEST(PppTail, BoundFormulaAndDomain) {
  EXPECT_DOUBLE_EQ(poisson_tail_bound(1.0, 0.0), 1.0);
  EXPECT_NEAR(poisson_tail_bound(1.0, 1.0), std::exp(-0.5), 1e-15);
  EXPECT_THROW(poisson_tail_bound(-1.0, 0.5), std::invalid_argument);
  EXPECT_THROW(poisson_tail_bound(1.0, -1.0), std::invalid_argument);

  // Monte-Carlo check that the bound majorizes the true tail at mu=1, x=1
  auto s = make_stream(8, StreamKind::problem, 0);
  int hits = 0;
  const int trials = 100000;
  for (int k = 0; k < trials; ++k) {
    int z = 0;
    double t = s.next_exponential(1.0);
    while (t <= 1.0) {
      ++z;
      t += s.next_exponential(1.0);
    }
    hits += z >= 2;
  }
  const double p_hat = static_cast<double>(hits) / trials;
  EXPECT_NEAR(p_hat, 0.2642, 0.006);
  EXPECT_LE(p_hat, poisson_tail_bound(1.0, 1.0));
}

}  // namespace
}  // namespace delnet
