#pragma once

// Run traces and the exponentially weighted accumulators used for
// certificates. State paths are piecewise constant (pure jump processes), so
// every time integral below is computed segment-exactly, with the running
// integral kept in e^{gamma (s - t)} form to avoid overflow at large
// gamma * t.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace delnet {

struct Trace {
  std::vector<double> times;  // sample grid
  std::map<std::string, std::vector<double>> series;

  bool diverged = false;
  double diverged_at = std::numeric_limits<double>::quiet_NaN();
  std::string note;
  std::vector<std::string> warnings;

  // Populated when state recording is requested: one (nodes x dim) matrix
  // per sample time.
  std::vector<Eigen::MatrixXd> sampled_states;
  Eigen::MatrixXd final_state;

  std::vector<double>& at(const std::string& name) { return series[name]; }

  const std::vector<double>& get(const std::string& name) const {
    const auto it = series.find(name);
    if (it == series.end()) {
      throw std::out_of_range("trace: no series named " + name);
    }
    return it->second;
  }

  bool has(const std::string& name) const { return series.count(name) != 0; }
};

// Running integral A(t) = int_0^t e^{gamma (s - t)} f(s) ds for a piecewise
// constant scalar f. The normalisation gamma * A(t) / (1 - e^{-gamma t})
// turns it into the exponentially weighted average of f over [0, t].
class ExpWeightedScalar {
 public:
  explicit ExpWeightedScalar(double gamma) : gamma_(gamma) {
    if (!(gamma > 0.0)) {
      throw std::invalid_argument("exp average: gamma must be > 0");
    }
  }

  // f == value on [from, to).
  void advance(double from, double to, double value) {
    if (to <= from) return;
    const double w = -std::expm1(-gamma_ * (to - from));  // 1 - e^{-g dt}
    acc_ = acc_ * (1.0 - w) + value * (w / gamma_);
    t_ = to;
  }

  double average() const {
    if (t_ <= 0.0) return 0.0;
    return gamma_ * acc_ / -std::expm1(-gamma_ * t_);
  }

  double time() const { return t_; }

 private:
  double gamma_;
  double acc_ = 0.0;
  double t_ = 0.0;
};

// Same recurrence for a matrix-valued path: yields the weighted trajectory
// average x~_t = gamma int_0^t e^{gamma s} x_s ds / (e^{gamma t} - 1).
class ExpWeightedState {
 public:
  ExpWeightedState(double gamma, const Eigen::MatrixXd& x0)
      : gamma_(gamma), acc_(Eigen::MatrixXd::Zero(x0.rows(), x0.cols())),
        x0_(x0) {
    if (!(gamma > 0.0)) {
      throw std::invalid_argument("exp average: gamma must be > 0");
    }
  }

  void advance(double from, double to, const Eigen::MatrixXd& value) {
    if (to <= from) return;
    const double w = -std::expm1(-gamma_ * (to - from));
    acc_ = acc_ * (1.0 - w) + value * (w / gamma_);
    t_ = to;
  }

  Eigen::MatrixXd average() const {
    if (t_ <= 0.0) return x0_;
    return gamma_ * acc_ / -std::expm1(-gamma_ * t_);
  }

 private:
  double gamma_;
  Eigen::MatrixXd acc_;
  Eigen::MatrixXd x0_;
  double t_ = 0.0;
};

// A recorded pure-jump path: value(t) is `initial` before the first jump and
// the value of the last jump at or before t afterwards.
struct PiecewisePath {
  Eigen::MatrixXd initial;
  std::vector<std::pair<double, Eigen::MatrixXd>> jumps;  // increasing times

  const Eigen::MatrixXd& value(double t) const {
    if (jumps.empty() || t < jumps.front().first) return initial;
    std::size_t lo = 0, hi = jumps.size();
    while (hi - lo > 1) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (jumps[mid].first <= t) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return jumps[lo].second;
  }
};

// Exponentially weighted trajectory average of a recorded path at time t,
// computed exactly segment by segment.
inline Eigen::MatrixXd ewa(const PiecewisePath& path, double gamma, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("ewa: t must be >= 0");
  ExpWeightedState acc(gamma, path.initial);
  double cursor = 0.0;
  const Eigen::MatrixXd* current = &path.initial;
  for (const auto& [tj, xj] : path.jumps) {
    if (tj >= t) break;
    acc.advance(cursor, tj, *current);
    cursor = tj;
    current = &xj;
  }
  acc.advance(cursor, t, *current);
  return acc.average();
}

// Squared Frobenius distance of a stacked state (rows = nodes) from the
// replicated row average.
inline double consensus_error(const Eigen::MatrixXd& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  return (x.rowwise() - mean).squaredNorm();
}

}  // namespace delnet
