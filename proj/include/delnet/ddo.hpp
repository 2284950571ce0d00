#pragma once

// Decentralized optimization of sum_i f_i by dual coordinate updates.
//
// Every node keeps a pair (x_i, y_i), both started at zero. Communication
// events average the x variables exactly like pairwise gossip. A computation
// event at node i, with snapshots read at t - tau_i^comp, applies
//   g_i = (grad phi_i)^{-1}(y_i(t - tau)),   phi_i = f_i - (sigma/4)||.||^2
//   x_i <- x_i - (K_i / p_i) (x_i(t - tau) - g_i)
//   y_i <- y_i - (sigma K_i / (2 p_i)) (g_i - x_i(t - tau)).
// The running output of node i is x_i itself, and
// sum_i ((sigma/2) x_i + y_i) is conserved across all events. Together the
// two facts pin the only consensus rest point at the minimizer of sum f_i:
// consensus plus a settled conjugate map give y_i = grad f_i(x) - (sigma/2) x
// per node, and the conserved zero sum then reads sum_i grad f_i(x) = 0.

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "delnet/gossip.hpp"

namespace delnet {

// A sigma-strongly convex, smooth local objective. The conjugate gradient
// map is the only nontrivial requirement; the default solves the strongly
// convex subproblem by damped Newton with a halving line search.
class LocalFunction {
 public:
  virtual ~LocalFunction() = default;
  virtual int dim() const = 0;
  virtual double sigma() const = 0;       // strong convexity of f_i
  virtual double smoothness() const = 0;  // L_i
  virtual double value(const Eigen::VectorXd& z) const = 0;
  virtual Eigen::VectorXd grad(const Eigen::VectorXd& z) const = 0;
  virtual Eigen::MatrixXd hessian(const Eigen::VectorXd& z) const = 0;

  // z such that grad(f - (sigma/4)||.||^2)(z) = y, i.e. the gradient of the
  // convex conjugate of phi_i at y.
  virtual Eigen::VectorXd conj_grad_phi(const Eigen::VectorXd& y) const {
    // Minimize h(z) = f(z) - (sigma/4)||z||^2 - <y, z>; h is (sigma/2)-
    // strongly convex, so Newton with backtracking converges globally.
    const double half_sigma = sigma() / 2.0;
    auto h_val = [&](const Eigen::VectorXd& z) {
      return value(z) - 0.25 * sigma() * z.squaredNorm() - y.dot(z);
    };
    Eigen::VectorXd z = Eigen::VectorXd::Zero(dim());
    for (int iter = 0; iter < 200; ++iter) {
      const Eigen::VectorXd g = grad(z) - half_sigma * z - y;
      if (g.norm() <= 1e-10) return z;
      Eigen::MatrixXd H = hessian(z);
      H.diagonal().array() -= half_sigma;
      const Eigen::VectorXd dir = -H.ldlt().solve(g);
      // Inside the quadratic basin the objective decrease drops below
      // rounding noise and a line search can stall on a sub-ulp step;
      // the raw Newton step contracts the gradient there.
      if (dir.norm() <= 1e-7 * (1.0 + z.norm())) {
        z += dir;
        continue;
      }
      const double slope = g.dot(dir);
      const double h0 = h_val(z);
      double step = 1.0;
      while (step > 1e-14 && h_val(z + step * dir) > h0 + 1e-4 * step * slope) {
        step /= 2.0;
      }
      if (step <= 1e-14) {
        // Newton direction unusable; fall back to a safeguarded gradient step.
        z -= g / std::max(smoothness(), half_sigma);
      } else {
        z += step * dir;
      }
    }
    throw std::runtime_error(
        "conj_grad_phi: Newton did not converge in 200 iterations");
  }
};

// f_i(z) = (a/2) ||z - c||^2 with sigma <= a <= L; the conjugate gradient
// map is closed-form.
class QuadraticLocal final : public LocalFunction {
 public:
  QuadraticLocal(double a, Eigen::VectorXd c, double sigma)
      : a_(a), c_(std::move(c)), sigma_(sigma) {
    if (!(a >= sigma) || !(sigma > 0.0)) {
      throw std::invalid_argument("quadratic local: need 0 < sigma <= a");
    }
  }

  int dim() const override { return static_cast<int>(c_.size()); }
  double sigma() const override { return sigma_; }
  double smoothness() const override { return a_; }
  double curvature() const { return a_; }
  const Eigen::VectorXd& center() const { return c_; }

  double value(const Eigen::VectorXd& z) const override {
    return 0.5 * a_ * (z - c_).squaredNorm();
  }
  Eigen::VectorXd grad(const Eigen::VectorXd& z) const override {
    return a_ * (z - c_);
  }
  Eigen::MatrixXd hessian(const Eigen::VectorXd& z) const override {
    return a_ * Eigen::MatrixXd::Identity(z.size(), z.size());
  }
  Eigen::VectorXd conj_grad_phi(const Eigen::VectorXd& y) const override {
    return (y + a_ * c_) / (a_ - sigma_ / 2.0);
  }

 private:
  double a_;
  Eigen::VectorXd c_;
  double sigma_;
};

// Minimizer of sum_i (a_i/2)||z - c_i||^2: the curvature-weighted mean.
inline Eigen::VectorXd exact_minimizer(
    const std::vector<QuadraticLocal>& locals) {
  if (locals.empty()) {
    throw std::invalid_argument("exact_minimizer: no locals");
  }
  Eigen::VectorXd num = Eigen::VectorXd::Zero(locals[0].dim());
  double den = 0.0;
  for (const auto& f : locals) {
    num += f.curvature() * f.center();
    den += f.curvature();
  }
  return num / den;
}

struct DdoRunConfig {
  Eigen::VectorXd comm_step;  // K_e per edge
  Eigen::VectorXd comp_step;  // K_i per node
  double sigma = 1.0;
  double horizon = 0.0;
  std::vector<double> sample_times;
  std::uint64_t seed = 0;

  std::optional<double> gamma;
  std::optional<double> tau_max;
  std::optional<double> bound_prefactor;  // typically (L/sigma) ||xbar*||^2

  // Halve every update coefficient, communication and computation alike:
  // the more conservative scale the dual step-size bookkeeping suggests,
  // kept switchable for comparison runs.
  bool dual_consistent_scaling = false;
  GatingOptions gating;
  bool record_states = false;
  bool prune_history = true;
  double divergence_factor = 1e12;

  // The algorithm starts from x = y = 0; tests may inject another x start
  // to compare the pure communication dynamics against pairwise averaging.
  std::optional<Eigen::MatrixXd> x_start;
};

namespace detail {

class DdoModel {
 public:
  DdoModel(const NetworkSpec& net, const std::vector<const LocalFunction*>& f,
           const Eigen::VectorXd& minimizer, const DdoRunConfig& cfg)
      : net_(net), f_(f), cfg_(cfg) {
    const int n = net.graph.node_count();
    const int d = static_cast<int>(minimizer.size());
    if (static_cast<int>(f.size()) != n) {
      throw std::invalid_argument("run: one local function per node");
    }
    for (const auto* fi : f_) {
      if (fi->dim() != d) {
        throw std::invalid_argument("run: local dimension mismatch");
      }
    }
    if (cfg.comm_step.size() != net.graph.edge_count() ||
        cfg.comp_step.size() != n) {
      throw std::invalid_argument("run: step size count mismatch");
    }
    x_ = cfg.x_start.value_or(Eigen::MatrixXd::Zero(n, d));
    if (x_.rows() != n || x_.cols() != d) {
      throw std::invalid_argument("run: x start size mismatch");
    }
    y_ = Eigen::MatrixXd::Zero(n, d);
    target_ = minimizer.transpose().replicate(n, 1);
    x_history_.reserve(n);
    y_history_.reserve(n);
    for (int i = 0; i < n; ++i) {
      x_history_.emplace_back(0.0, x_.row(i).transpose());
      y_history_.emplace_back(0.0, Eigen::VectorXd::Zero(d));
    }
    sum0_ = 0.5 * cfg_.sigma * x_.colwise().sum() + y_.colwise().sum();
    err2_ = err2_exact();
  }

  const Eigen::MatrixXd& state() const { return x_; }
  double err2() const { return err2_; }
  // Output error: distance of the node states from the replicated minimizer.
  double err2_exact() const { return (x_ - target_).squaredNorm(); }
  double err2_of(const Eigen::MatrixXd& s) const {
    return (s - target_).squaredNorm();
  }
  void resync_err2(double v) { err2_ = v; }

  // sum_i ((sigma/2) x_i + y_i) is conserved across both event kinds; report
  // its drift relative to the current magnitude of the summands.
  double audit() const {
    const Eigen::RowVectorXd s =
        0.5 * cfg_.sigma * x_.colwise().sum() + y_.colwise().sum();
    double scale = 0.0;
    for (int i = 0; i < x_.rows(); ++i) {
      scale += 0.5 * cfg_.sigma * x_.row(i).norm() + y_.row(i).norm();
    }
    return (s - sum0_).norm() / std::max(scale, 1.0);
  }

  void apply(const GatingDecision& ev) {
    if (ev.clock.kind == ClockKind::comm) {
      comm_event(ev.clock.index, ev.time);
    } else {
      comp_event(ev.clock.index, ev.time);
    }
  }

  double event_energy(const GatingDecision& ev) const {
    return ev.clock.kind == ClockKind::comm
               ? net_.delays.edge[ev.clock.index]
               : net_.delays.comp_delay(ev.clock.index);
  }

  double max_delay() const { return net_.delays.max_delay(); }

  void prune(double before) {
    for (auto& h : x_history_) h.prune_before(before);
    for (auto& h : y_history_) h.prune_before(before);
  }

  void extra_sample_metrics(Trace&) {}

 private:
  void comm_event(int e, double now) {
    const auto& [i, j] = net_.graph.edge(e);
    const double read_time = now - net_.delays.edge[e];
    const double coeff = (cfg_.dual_consistent_scaling ? 0.5 : 1.0) *
                         cfg_.comm_step[e] / net_.comm_intensity[e];
    const Eigen::VectorXd xi = x_history_[i].read(read_time);
    const Eigen::VectorXd xj = x_history_[j].read(read_time);
    const double before = (x_.row(i) - target_.row(i)).squaredNorm() +
                          (x_.row(j) - target_.row(j)).squaredNorm();
    apply_pair_update(x_, i, j, coeff, xi, xj);
    const double after = (x_.row(i) - target_.row(i)).squaredNorm() +
                         (x_.row(j) - target_.row(j)).squaredNorm();
    err2_ += after - before;
    x_history_[i].append(now, x_.row(i).transpose());
    x_history_[j].append(now, x_.row(j).transpose());
  }

  void comp_event(int i, double now) {
    const double read_time = now - net_.delays.comp_delay(i);
    const double ratio = (cfg_.dual_consistent_scaling ? 0.5 : 1.0) *
                         cfg_.comp_step[i] / net_.comp_intensity[i];
    const Eigen::VectorXd y_read = y_history_[i].read(read_time);
    const Eigen::VectorXd x_read = x_history_[i].read(read_time);
    const Eigen::VectorXd g = f_[i]->conj_grad_phi(y_read);
    const double before = (x_.row(i) - target_.row(i)).squaredNorm();
    // x moves toward the conjugate point; y absorbs the opposite move at
    // weight sigma/2, keeping sum_i ((sigma/2) x_i + y_i) fixed. At the
    // joint rest point the conjugate map pins y_i to grad f_i(x) - (s/2) x,
    // and the conserved sum then forces sum_i grad f_i(x) = 0.
    x_.row(i) -= ratio * (x_read - g).transpose();
    y_.row(i) -= (0.5 * cfg_.sigma * ratio) * (g - x_read).transpose();
    const double after = (x_.row(i) - target_.row(i)).squaredNorm();
    err2_ += after - before;
    x_history_[i].append(now, x_.row(i).transpose());
    y_history_[i].append(now, y_.row(i).transpose());
  }

  const NetworkSpec& net_;
  const std::vector<const LocalFunction*>& f_;
  const DdoRunConfig& cfg_;
  Eigen::MatrixXd x_, y_, target_;
  Eigen::RowVectorXd sum0_;
  std::vector<HistoryBuffer> x_history_, y_history_;
  double err2_ = 0.0;
};

// Edge and computation clocks, merged and gated together.
inline std::vector<GatingDecision> sample_all_events(const NetworkSpec& net,
                                                     double horizon,
                                                     std::uint64_t seed,
                                                     const GatingOptions& gating) {
  std::vector<PointStream> streams;
  streams.reserve(net.graph.edge_count() + net.graph.node_count());
  for (int e = 0; e < net.graph.edge_count(); ++e) {
    auto stream = make_stream(seed, StreamKind::comm_clock, e);
    streams.push_back({{ClockKind::comm, e},
                       net.comm_intensity[e],
                       sample_ppp(net.comm_intensity[e], horizon, stream)});
  }
  for (int i = 0; i < net.graph.node_count(); ++i) {
    const double rate = net.comp_rate(i);
    if (rate <= 0.0) continue;
    auto stream = make_stream(seed, StreamKind::comp_clock, i);
    streams.push_back({{ClockKind::comp, i},
                       rate,
                       sample_ppp(rate, horizon, stream)});
  }
  return gate_events(net.graph, net.delays, net.caps, streams, gating);
}

}  // namespace detail

// Run dual decentralized optimization. `minimizer` is the point the node
// states x are measured against; for quadratic locals use exact_minimizer.
inline Trace run_ddo(const NetworkSpec& net,
                     const std::vector<const LocalFunction*>& locals,
                     const Eigen::VectorXd& minimizer,
                     const DdoRunConfig& cfg) {
  net.validate();
  detail::DdoModel model(net, locals, minimizer, cfg);
  detail::SimOptions opt;
  opt.sample_times = cfg.sample_times;
  opt.gamma = cfg.gamma;
  opt.divergence_factor = cfg.divergence_factor;
  opt.record_states = cfg.record_states;
  opt.prune_history = cfg.prune_history;
  if (cfg.gamma && cfg.tau_max && cfg.bound_prefactor) {
    const double gamma = *cfg.gamma;
    const double tau_max = *cfg.tau_max;
    const double prefactor = *cfg.bound_prefactor;
    opt.bound_at = [gamma, tau_max, prefactor](double t) {
      return t > 0.0 ? bound_curve(gamma, tau_max, prefactor, t) : prefactor;
    };
  }
  const auto events =
      detail::sample_all_events(net, cfg.horizon, cfg.seed, cfg.gating);
  Trace trace = detail::run_jump_process(model, events, opt);

  // The guarantees assume step sizes within the certified limits; flag
  // anything larger so oversized configurations are visible in the output.
  if (net.has_comp_clocks() && net.comp_intensity.minCoeff() > 0.0) {
    const auto limit =
        ddo_step_sizes(net.graph, net.delays, net.comm_intensity,
                       net.comp_intensity);
    for (int e = 0; e < cfg.comm_step.size(); ++e) {
      if (cfg.comm_step[e] > limit.comm[e] * (1.0 + 1e-9)) {
        trace.warnings.push_back("communication step above certified limit "
                                 "on edge " + std::to_string(e));
        break;
      }
    }
    for (int i = 0; i < cfg.comp_step.size(); ++i) {
      if (cfg.comp_step[i] > limit.comp[i] * (1.0 + 1e-9)) {
        trace.warnings.push_back("computation step above certified limit "
                                 "at node " + std::to_string(i));
        break;
      }
    }
  }
  return trace;
}

}  // namespace delnet
