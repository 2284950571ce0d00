#include "delnet/problems.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <vector>

#include "delnet/graph.hpp"
#include "delnet/rng.hpp"

namespace delnet {
namespace {

std::vector<int> degrees(const Graph& g) {
  std::vector<int> out(g.node_count());
  for (int i = 0; i < g.node_count(); ++i) {
    out[i] = static_cast<int>(g.incident_edges(i).size());
  }
  return out;
}

TEST(ProblemsShapes, GeneratorsProduceTheExpectedTopologies) {
  const Graph ring = make_ring(5);
  EXPECT_EQ(ring.node_count(), 5);
  EXPECT_EQ(ring.edge_count(), 5);
  EXPECT_EQ(degrees(ring), (std::vector<int>{2, 2, 2, 2, 2}));

  const Graph line = make_line(5);
  EXPECT_EQ(line.edge_count(), 4);
  EXPECT_EQ(degrees(line), (std::vector<int>{1, 2, 2, 2, 1}));

  const Graph star = make_star(5);
  EXPECT_EQ(star.edge_count(), 4);
  EXPECT_EQ(degrees(star), (std::vector<int>{4, 1, 1, 1, 1}));

  const Graph grid = make_grid(2, 3);
  EXPECT_EQ(grid.node_count(), 6);
  EXPECT_EQ(grid.edge_count(), 7);
  EXPECT_EQ(degrees(grid), (std::vector<int>{2, 3, 2, 2, 3, 2}));

  EXPECT_THROW(make_ring(2), std::invalid_argument);
  EXPECT_THROW(make_line(1), std::invalid_argument);
  EXPECT_THROW(make_star(1), std::invalid_argument);
  EXPECT_THROW(make_grid(1, 1), std::invalid_argument);
}

TEST(ProblemsRandomGraph, SampledGraphsAreConnectedDenseAndReproducible) {
  const Graph g = make_erdos_renyi(30, 0.75, 5);
  EXPECT_EQ(g.node_count(), 30);
  // 435 candidate pairs at 0.75: mean 326.25, sd just over 9. Conditioning
  // on connectivity is negligible at this density.
  EXPECT_GE(g.edge_count(), 299);
  EXPECT_LE(g.edge_count(), 354);

  const Graph again = make_erdos_renyi(30, 0.75, 5);
  ASSERT_EQ(again.edge_count(), g.edge_count());
  for (int e = 0; e < g.edge_count(); ++e) {
    EXPECT_EQ(again.edge(e).u, g.edge(e).u);
    EXPECT_EQ(again.edge(e).v, g.edge(e).v);
  }

  const Graph full = make_erdos_renyi(2, 1.0, 9);
  EXPECT_EQ(full.edge_count(), 1);

  EXPECT_THROW(make_erdos_renyi(1, 0.5, 1), std::invalid_argument);
  EXPECT_THROW(make_erdos_renyi(5, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(make_erdos_renyi(5, 1.5, 1), std::invalid_argument);
}

TEST(ProblemsDelays, MixtureSamplingHitsTheStatedProportions) {
  const DelayMixture mix{{0.01, 1.0}, {0.9, 0.1}};
  mix.validate();

  const Graph g = make_ring(2000);
  const Eigen::VectorXd tau = sample_edge_delays(g, mix, 31);
  int slow = 0;
  for (int e = 0; e < tau.size(); ++e) {
    ASSERT_TRUE(tau[e] == 0.01 || tau[e] == 1.0);
    if (tau[e] == 1.0) ++slow;
  }
  // 3 sd of a Bernoulli(0.1) mean over 2000 draws is about 0.02.
  EXPECT_NEAR(slow / 2000.0, 0.1, 0.021);

  const Eigen::VectorXd rerun = sample_edge_delays(g, mix, 31);
  EXPECT_EQ((rerun - tau).lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(ProblemsDelays, MalformedMixturesAreRejected) {
  EXPECT_THROW(DelayMixture({}, {}).validate(), std::invalid_argument);
  EXPECT_THROW(DelayMixture({0.1, 0.2}, {1.0}).validate(),
               std::invalid_argument);
  EXPECT_THROW(DelayMixture({0.0, 1.0}, {0.5, 0.5}).validate(),
               std::invalid_argument);
  EXPECT_THROW(DelayMixture({0.1, 1.0}, {-0.2, 1.2}).validate(),
               std::invalid_argument);
  EXPECT_THROW(DelayMixture({0.1, 1.0}, {0.6, 0.6}).validate(),
               std::invalid_argument);
}

TEST(ProblemsQuadratics, GeneratedLocalsSitInTheConvexityWindow) {
  const auto locals = gen_quadratics(20, 3, 0.5, 2.0, 11);
  ASSERT_EQ(locals.size(), 20u);
  for (const auto& f : locals) {
    EXPECT_EQ(f.dim(), 3);
    EXPECT_EQ(f.sigma(), 0.5);
    EXPECT_GE(f.curvature(), 0.5);
    EXPECT_LE(f.curvature(), 2.0);
  }

  // Degenerate window: every curvature is pinned to sigma.
  for (const auto& f : gen_quadratics(5, 2, 1.5, 1.5, 12)) {
    EXPECT_EQ(f.curvature(), 1.5);
  }

  // The exact minimizer is the curvature-weighted mean of the centers.
  Eigen::VectorXd num = Eigen::VectorXd::Zero(3);
  double den = 0.0;
  for (const auto& f : locals) {
    num += f.curvature() * f.center();
    den += f.curvature();
  }
  EXPECT_LE((exact_minimizer(locals) - num / den).norm(), 1e-12);

  EXPECT_THROW(gen_quadratics(0, 3, 0.5, 2.0, 1), std::invalid_argument);
  EXPECT_THROW(gen_quadratics(5, 0, 0.5, 2.0, 1), std::invalid_argument);
  EXPECT_THROW(gen_quadratics(5, 3, 0.0, 2.0, 1), std::invalid_argument);
  EXPECT_THROW(gen_quadratics(5, 3, 2.0, 0.5, 1), std::invalid_argument);
}

TEST(ProblemsQuadratics, ConjugateMapRoundTripsOnGeneratedLocals) {
  const auto locals = gen_quadratics(6, 2, 0.8, 3.0, 21);
  auto stream = make_stream(22, StreamKind::problem, 0);
  for (const auto& f : locals) {
    for (int rep = 0; rep < 5; ++rep) {
      Eigen::VectorXd z(2);
      z << stream.next_normal(), stream.next_normal();
      const Eigen::VectorXd y = f.grad(z) - 0.5 * f.sigma() * z;
      EXPECT_LE((f.conj_grad_phi(y) - z).norm(), 1e-10);
    }
  }
}

}  // namespace
}  // namespace delnet
