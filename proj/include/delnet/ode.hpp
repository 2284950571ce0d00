#pragma once

// Deterministic mean dynamics.
//
// The expected trajectory of delayed pairwise averaging solves the delay
// differential equation
//   dy/dt = -sum_e K_e grad g_e(y(t - tau_e)),   g_e(x) = (1/2)||x_i - x_j||^2
// with y constant before time zero. It is integrated by the method of steps
// with classical RK4; delayed stage reads use cubic Hermite interpolation of
// the stored grid (value and derivative), which preserves the integrator's
// order. A delay-linearized companion,
//   (I - Lap(K tau)) dy/dt = -Lap(K) y,
// is valid while the delay-weighted step Laplacian has spectral radius
// below one.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "delnet/graph.hpp"
#include "delnet/rng.hpp"
#include "delnet/tuning.hpp"

namespace delnet {

// Uniform-grid trajectory on [0, horizon]; constant y0 before time zero.
struct OdeTrajectory {
  double dt = 0.0;
  Eigen::MatrixXd y0;                 // nodes x dim
  std::vector<Eigen::MatrixXd> grid;  // values at k * dt, k = 0..N
  bool diverged = false;              // non-finite state reached; grid truncated

  double horizon() const { return dt * (static_cast<double>(grid.size()) - 1.0); }

  // Linear interpolation between grid points; clamped at both ends.
  Eigen::MatrixXd value_at(double t) const {
    if (t <= 0.0) return y0;
    const double pos = t / dt;
    const auto k = static_cast<std::size_t>(pos);
    if (k + 1 >= grid.size()) return grid.back();
    const double w = pos - static_cast<double>(k);
    return (1.0 - w) * grid[k] + w * grid[k + 1];
  }
};

namespace detail {

// Dense history for the integrator: values and derivatives at grid points,
// interpolated with cubic Hermite polynomials (error O(dt^4), matching RK4).
class OdeHistory {
 public:
  OdeHistory(double dt, const Eigen::MatrixXd& y0) : dt_(dt), y0_(y0) {}

  void push(const Eigen::MatrixXd& y, const Eigen::MatrixXd& f) {
    ys_.push_back(y);
    fs_.push_back(f);
  }

  Eigen::MatrixXd read(double t) const {
    if (t <= 0.0) return y0_;
    const double pos = t / dt_;
    auto k = static_cast<std::size_t>(pos);
    if (k + 1 >= ys_.size()) {
      if (pos >= static_cast<double>(ys_.size()) - 1.0 + 1e-9) {
        throw std::logic_error("ode history: read beyond stored grid");
      }
      k = ys_.size() - 2;
    }
    const double s = pos - static_cast<double>(k);  // in [0, 1]
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    const double h10 = s3 - 2.0 * s2 + s;
    const double h01 = -2.0 * s3 + 3.0 * s2;
    const double h11 = s3 - s2;
    return h00 * ys_[k] + (h10 * dt_) * fs_[k] + h01 * ys_[k + 1] +
           (h11 * dt_) * fs_[k + 1];
  }

  const std::vector<Eigen::MatrixXd>& values() const { return ys_; }

 private:
  double dt_;
  Eigen::MatrixXd y0_;
  std::vector<Eigen::MatrixXd> ys_, fs_;
};

}  // namespace detail

inline void check_ode_grid(const Graph& g, const Eigen::VectorXd& K,
                           const Eigen::VectorXd& tau, double horizon,
                           double dt) {
  if (K.size() != g.edge_count() || tau.size() != g.edge_count()) {
    throw std::invalid_argument("ode: per-edge parameter count mismatch");
  }
  if (!(horizon > 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("ode: need horizon > 0 and dt > 0");
  }
  double min_pos = std::numeric_limits<double>::infinity();
  for (int e = 0; e < tau.size(); ++e) {
    if (!(tau[e] >= 0.0)) throw std::invalid_argument("ode: tau must be >= 0");
    if (tau[e] > 0.0) min_pos = std::min(min_pos, tau[e]);
  }
  if (std::isfinite(min_pos)) {
    if (dt > min_pos / 10.0 * (1.0 + 1e-12)) {
      throw std::invalid_argument(
          "ode: dt must be at most the smallest positive delay / 10");
    }
  } else {
    // No delays: bound dt by the stiffness of the drift instead.
    double max_deg = 0.0;
    for (int i = 0; i < g.node_count(); ++i) {
      double s = 0.0;
      for (int e : g.incident_edges(i)) s += K[e];
      max_deg = std::max(max_deg, s);
    }
    if (max_deg > 0.0 && dt > 1.0 / (10.0 * max_deg)) {
      throw std::invalid_argument("ode: dt too large for the drift scale");
    }
  }
}

// Integrate the delayed mean dynamics from constant pre-history y0.
inline OdeTrajectory integrate_delayed(const Graph& g,
                                       const Eigen::VectorXd& K,
                                       const Eigen::VectorXd& tau,
                                       const Eigen::MatrixXd& y0,
                                       double horizon, double dt) {
  check_ode_grid(g, K, tau, horizon, dt);
  if (y0.rows() != g.node_count()) {
    throw std::invalid_argument("ode: y0 must have one row per node");
  }
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));

  detail::OdeHistory hist(dt, y0);
  // Stage values enter only through zero-delay edges; delayed reads always
  // land in completed segments because dt <= tau_min / 10.
  auto rhs = [&](double t, const Eigen::MatrixXd& stage) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(y0.rows(), y0.cols());
    for (int e = 0; e < g.edge_count(); ++e) {
      if (K[e] == 0.0) continue;
      const auto& [i, j] = g.edge(e);
      const Eigen::MatrixXd z =
          tau[e] == 0.0 ? stage : hist.read(t - tau[e]);
      const Eigen::RowVectorXd diff = K[e] * (z.row(i) - z.row(j));
      out.row(i) -= diff;
      out.row(j) += diff;
    }
    return out;
  };

  OdeTrajectory traj;
  traj.dt = dt;
  traj.y0 = y0;
  Eigen::MatrixXd y = y0;
  traj.grid.push_back(y);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const Eigen::MatrixXd k1 = rhs(t, y);
    hist.push(y, k1);
    const Eigen::MatrixXd k2 = rhs(t + dt / 2.0, y + (dt / 2.0) * k1);
    const Eigen::MatrixXd k3 = rhs(t + dt / 2.0, y + (dt / 2.0) * k2);
    const Eigen::MatrixXd k4 = rhs(t + dt, y + dt * k3);
    y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    traj.grid.push_back(y);
    if (!y.allFinite()) {  // divergence is reported, not thrown
      traj.diverged = true;
      break;
    }
  }
  return traj;
}

// Integrate the delay-linearized dynamics; requires the stability
// certificate rho(Lap(K tau)) < 1.
inline OdeTrajectory integrate_linearized(const Graph& g,
                                          const Eigen::VectorXd& K,
                                          const Eigen::VectorXd& tau,
                                          const Eigen::MatrixXd& y0,
                                          double horizon, double dt) {
  check_ode_grid(g, K, tau, horizon, dt);
  if (y0.rows() != g.node_count()) {
    throw std::invalid_argument("ode: y0 must have one row per node");
  }
  const Eigen::VectorXd ktau = (K.array() * tau.array()).matrix();
  if (spectral_radius(g, ktau) >= 1.0) {
    throw std::invalid_argument(
        "ode: delay-weighted step Laplacian must have spectral radius < 1");
  }
  const int n = g.node_count();
  const Eigen::MatrixXd M =
      Eigen::MatrixXd::Identity(n, n) - laplacian(g, ktau);
  const Eigen::MatrixXd A = -M.llt().solve(laplacian(g, K));

  auto rhs = [&](const Eigen::MatrixXd& y) { return (A * y).eval(); };
  OdeTrajectory traj;
  traj.dt = dt;
  traj.y0 = y0;
  Eigen::MatrixXd y = y0;
  traj.grid.push_back(y);
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  for (std::size_t k = 0; k < steps; ++k) {
    const Eigen::MatrixXd k1 = rhs(y);
    const Eigen::MatrixXd k2 = rhs(y + (dt / 2.0) * k1);
    const Eigen::MatrixXd k3 = rhs(y + (dt / 2.0) * k2);
    const Eigen::MatrixXd k4 = rhs(y + dt * k3);
    y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    traj.grid.push_back(y);
    if (!y.allFinite()) {
      traj.diverged = true;
      break;
    }
  }
  return traj;
}

// Grid step satisfying the integrator preconditions for these parameters.
inline double default_ode_dt(const Graph& g, const Eigen::VectorXd& K,
                             const Eigen::VectorXd& tau, double horizon) {
  double min_pos = std::numeric_limits<double>::infinity();
  for (int e = 0; e < tau.size(); ++e) {
    if (tau[e] > 0.0) min_pos = std::min(min_pos, tau[e]);
  }
  double dt;
  if (std::isfinite(min_pos)) {
    dt = min_pos / 10.0;
  } else {
    double max_deg = 0.0;
    for (int i = 0; i < g.node_count(); ++i) {
      double s = 0.0;
      for (int e : g.incident_edges(i)) s += K[e];
      max_deg = std::max(max_deg, s);
    }
    dt = max_deg > 0.0 ? 1.0 / (10.0 * max_deg) : horizon / 100.0;
  }
  return std::min(dt, horizon / 100.0);
}

struct StabilityProbe {
  double rho = 0.0;          // certificate radius
  bool certified = false;    // rho < 1
  double decay_ratio = 0.0;  // final / initial distance to the mean
  bool decayed = false;      // decay_ratio <= 1e-3
  bool diverged = false;
};

// Integrate from a random non-consensus start and report the observed decay
// alongside the spectral certificate. The certificate is one-sided: rho >= 1
// does not imply instability, so a non-certified probe may still decay.
inline StabilityProbe stability_probe(const Graph& g, const Eigen::VectorXd& K,
                                      const Eigen::VectorXd& tau,
                                      double horizon,
                                      std::uint64_t seed = 1234,
                                      int dim = 1) {
  auto stream = make_stream(seed, StreamKind::initial_state, 0);
  Eigen::MatrixXd y0(g.node_count(), dim);
  for (int i = 0; i < y0.rows(); ++i) {
    for (int c = 0; c < dim; ++c) y0(i, c) = stream.next_normal();
  }
  const Eigen::RowVectorXd mean = y0.colwise().mean();
  const double initial = (y0.rowwise() - mean).norm();

  StabilityProbe out;
  const auto ms =
      certify_mean_stability(g, K, DelayProfile{tau, Eigen::VectorXd()});
  out.rho = ms.rho;
  out.certified = ms.stable;

  const double dt = default_ode_dt(g, K, tau, horizon);
  const auto traj = integrate_delayed(g, K, tau, y0, horizon, dt);
  if (traj.diverged) {
    out.diverged = true;
    return out;
  }
  out.decay_ratio = (traj.grid.back().rowwise() - mean).norm() / initial;
  out.decayed = out.decay_ratio <= 1e-3;
  return out;
}

}  // namespace delnet
