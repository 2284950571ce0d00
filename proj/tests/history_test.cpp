#include "delnet/history.hpp"

#include <gtest/gtest.h>

#include <stdexcept>

namespace delnet {
namespace {

Eigen::VectorXd vec(double a, double b) {
  Eigen::VectorXd r(2);
  r << a, b;
  return r;
}

::testing::AssertionResult same(const Eigen::VectorXd& got,
                                const Eigen::VectorXd& want) {
  if (got.size() == want.size() && (got - want).squaredNorm() == 0.0) {
    return ::testing::AssertionSuccess();
  }
  return ::testing::AssertionFailure()
         << "got " << got.transpose() << ", want " << want.transpose();
}

TEST(HistoryBuffer, ReturnsLatestSnapshotAtOrBeforeQuery) {
  HistoryBuffer h(0.0, vec(1.0, 2.0));
  h.append(1.0, vec(3.0, 4.0));
  h.append(2.5, vec(5.0, 6.0));

  EXPECT_TRUE(same(h.read(-3.0), vec(1.0, 2.0)));  // before start
  EXPECT_TRUE(same(h.read(0.5), vec(1.0, 2.0)));
  EXPECT_TRUE(same(h.read(1.0), vec(3.0, 4.0)));   // inclusive at snapshot time
  EXPECT_TRUE(same(h.read(2.0), vec(3.0, 4.0)));
  EXPECT_TRUE(same(h.read(99.0), vec(5.0, 6.0)));
}

TEST(HistoryBuffer, RejectsNonIncreasingAppends) {
  HistoryBuffer h(0.0, vec(0.0, 0.0));
  h.append(1.0, vec(1.0, 1.0));
  EXPECT_THROW(h.append(1.0, vec(2.0, 2.0)), std::invalid_argument);
  EXPECT_THROW(h.append(0.5, vec(2.0, 2.0)), std::invalid_argument);
}

TEST(HistoryBuffer, DelayedReadSubtractsLag) {
  HistoryBuffer h(0.0, vec(1.0, 1.0));
  h.append(2.0, vec(7.0, 7.0));
  EXPECT_TRUE(same(read_delayed(h, 3.0, 2.0), vec(1.0, 1.0)));  // reads at 1
  EXPECT_TRUE(same(read_delayed(h, 3.0, 1.0), vec(7.0, 7.0)));  // reads at 2
  EXPECT_TRUE(same(read_delayed(h, 3.0, 0.0), vec(7.0, 7.0)));
}

TEST(HistoryBuffer, PruneKeepsFloorSnapshotAndGuardsEarlierReads) {
  HistoryBuffer h(0.0, vec(0.0, 0.0));
  for (int k = 1; k <= 200; ++k) {
    h.append(static_cast<double>(k), vec(k, k));
  }
  h.prune_before(150.0);
  // the snapshot in force at 150 must survive so reads at >= 150 still work
  EXPECT_TRUE(same(h.read(150.0), vec(150.0, 150.0)));
  EXPECT_TRUE(same(h.read(150.5), vec(150.0, 150.0)));
  EXPECT_TRUE(same(h.read(199.5), vec(199.0, 199.0)));
  EXPECT_THROW(h.read(10.0), std::logic_error);
}

TEST(HistoryBuffer, PruneThenAppendKeepsServingReads) {
  HistoryBuffer h(0.0, vec(0.0, 0.0));
  double t = 0.0;
  for (int round = 0; round < 50; ++round) {
    for (int k = 0; k < 100; ++k) {
      t += 0.25;
      h.append(t, vec(t, -t));
    }
    h.prune_before(t - 5.0);
    EXPECT_TRUE(same(h.read(t - 4.0), vec(t - 4.0, -(t - 4.0))));
  }
  // compaction must have kept the live window only
  EXPECT_LT(h.size(), 200u);
}

}  // namespace
}  // namespace delnet
