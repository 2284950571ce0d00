#pragma once

// Piecewise-constant history of one state block, supporting delayed reads.
//
// Snapshots are (time, value) pairs with strictly increasing times; the value
// at time t is the last snapshot at or before t. Reads earlier than the first
// snapshot return the initial value (the process is constant before start).
// Old snapshots may be pruned; reading below the prune horizon is an error.

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace delnet {

class HistoryBuffer {
 public:
  HistoryBuffer(double t0, Eigen::VectorXd initial) {
    snaps_.emplace_back(t0, std::move(initial));
  }

  void append(double t, Eigen::VectorXd v) {
    if (t <= snaps_.back().first) {
      throw std::invalid_argument("history: snapshot times must increase");
    }
    snaps_.emplace_back(t, std::move(v));
  }

  const Eigen::VectorXd& read(double t) const {
    if (t < pruned_to_) {
      throw std::logic_error("history: read below the prune horizon");
    }
    // Last snapshot with time <= t. Scan from the back first: reads cluster
    // near the current time.
    std::size_t hi = snaps_.size();
    if (t >= snaps_[hi - 1].first) return snaps_[hi - 1].second;
    std::size_t lo = begin_;
    while (hi - lo > 1) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (snaps_[mid].first <= t) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return snaps_[lo].second;
  }

  const Eigen::VectorXd& latest() const { return snaps_.back().second; }
  double latest_time() const { return snaps_.back().first; }

  // Forget snapshots strictly older than `t`, keeping the one that is in
  // force at `t` so reads at or after `t` stay valid.
  void prune_before(double t) {
    if (t <= pruned_to_) return;
    pruned_to_ = t;
    while (begin_ + 1 < snaps_.size() && snaps_[begin_ + 1].first <= t) {
      ++begin_;
    }
    if (begin_ > snaps_.size() / 2 && begin_ > 64) {
      snaps_.erase(snaps_.begin(), snaps_.begin() + begin_);
      begin_ = 0;
    }
  }

  double prune_horizon() const { return pruned_to_; }
  std::size_t size() const { return snaps_.size() - begin_; }

 private:
  std::vector<std::pair<double, Eigen::VectorXd>> snaps_;
  std::size_t begin_ = 0;
  double pruned_to_ = -std::numeric_limits<double>::infinity();
};

// Delayed read: the block's value as seen by an update at time t that reads
// with staleness tau.
inline const Eigen::VectorXd& read_delayed(const HistoryBuffer& h, double t,
                                           double tau) {
  return h.read(t - tau);
}

}  // namespace delnet
