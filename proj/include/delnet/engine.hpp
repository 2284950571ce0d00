#pragma once

// Generic continuized engine: block-coordinate updates driven by per-block
// Poisson clocks, where the update of block k at time t is computed from a
// snapshot of the whole state taken at t - tau_k. Specific algorithms
// (pairwise averaging, decentralized dual optimization) have their own
// dedicated loops; this engine exposes the abstract machine itself and the
// step-size rule that certifies it.

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "delnet/detail/jump_process.hpp"
#include "delnet/history.hpp"
#include "delnet/trace.hpp"

namespace delnet {

// Objective split into blocks. The engine only needs gradients of single
// blocks, each evaluated on a full (delayed) state snapshot.
class BlockObjective {
 public:
  virtual ~BlockObjective() = default;
  virtual int block_count() const = 0;
  virtual int block_dim(int k) const = 0;

  // Gradient of the objective with respect to block k at `snapshot`.
  virtual Eigen::VectorXd block_gradient(const Eigen::VectorXd& snapshot,
                                         int k) const = 0;

  virtual std::optional<Eigen::VectorXd> optimum() const {
    return std::nullopt;
  }
  virtual std::optional<double> value(const Eigen::VectorXd&) const {
    return std::nullopt;
  }
};

struct BlockEvent {
  double time = 0.0;
  int block = 0;
  bool accepted = true;
};

struct EngineRunConfig {
  Eigen::VectorXd step_sizes;       // eta_k per block
  Eigen::VectorXd block_delay;      // tau_k per block
  std::vector<double> sample_times;
  std::optional<double> gamma;
  double divergence_factor = 1e12;
  bool record_states = false;
  bool prune_history = true;
};

namespace detail {

class BlockEngineModel {
 public:
  BlockEngineModel(const BlockObjective& objective, const Eigen::VectorXd& x0,
                   const EngineRunConfig& cfg)
      : objective_(objective), cfg_(cfg), x_(x0) {
    const int blocks = objective.block_count();
    offsets_.resize(blocks + 1, 0);
    for (int k = 0; k < blocks; ++k) {
      offsets_[k + 1] = offsets_[k] + objective.block_dim(k);
    }
    if (x0.size() != offsets_.back()) {
      throw std::invalid_argument("engine: x0 size does not match blocks");
    }
    if (cfg.step_sizes.size() != blocks || cfg.block_delay.size() != blocks) {
      throw std::invalid_argument(
          "engine: per-block parameter count mismatch");
    }
    history_.reserve(blocks);
    for (int k = 0; k < blocks; ++k) {
      history_.emplace_back(0.0, x0.segment(offsets_[k], dim(k)));
    }
    target_ = objective.optimum().value_or(Eigen::VectorXd::Zero(x0.size()));
    err2_ = err2_exact();
  }

  const Eigen::MatrixXd& state() const {
    state_view_ = x_;
    return state_view_;
  }

  double err2() const { return err2_; }
  double err2_exact() const { return (x_ - target_).squaredNorm(); }
  double err2_of(const Eigen::MatrixXd& s) const {
    return (s.col(0) - target_).squaredNorm();
  }
  void resync_err2(double v) { err2_ = v; }

  // The engine has no conserved quantity of its own.
  double audit() const { return 0.0; }

  void apply(const BlockEvent& ev) {
    const int k = ev.block;
    const double read_at = ev.time - cfg_.block_delay[k];
    Eigen::VectorXd snapshot(x_.size());
    for (int l = 0; l < static_cast<int>(history_.size()); ++l) {
      snapshot.segment(offsets_[l], dim(l)) = history_[l].read(read_at);
    }
    const Eigen::VectorXd g = objective_.block_gradient(snapshot, k);
    auto block = x_.segment(offsets_[k], dim(k));
    const Eigen::VectorXd before = block - target_.segment(offsets_[k], dim(k));
    block -= cfg_.step_sizes[k] * g;
    const Eigen::VectorXd after = block - target_.segment(offsets_[k], dim(k));
    err2_ += after.squaredNorm() - before.squaredNorm();
    history_[k].append(ev.time, block);
  }

  double event_energy(const BlockEvent& ev) const {
    return cfg_.block_delay[ev.block];
  }

  double max_delay() const {
    return cfg_.block_delay.size() ? cfg_.block_delay.maxCoeff() : 0.0;
  }

  void prune(double before) {
    for (auto& h : history_) h.prune_before(before);
  }

  void extra_sample_metrics(Trace& trace) {
    if (const auto v = objective_.value(x_)) {
      double gap = *v;
      if (const auto opt = objective_.optimum()) {
        if (const auto vstar = objective_.value(*opt)) gap -= *vstar;
      }
      trace.at("gap").push_back(gap);
    }
  }

 private:
  int dim(int k) const { return offsets_[k + 1] - offsets_[k]; }

  const BlockObjective& objective_;
  const EngineRunConfig& cfg_;
  Eigen::VectorXd x_;
  Eigen::VectorXd target_;
  std::vector<HistoryBuffer> history_;
  std::vector<int> offsets_;
  double err2_ = 0.0;
  mutable Eigen::MatrixXd state_view_;
};

}  // namespace detail

// Run the engine over a time-sorted, already gated event sequence.
inline Trace run_engine(const BlockObjective& objective,
                        const std::vector<BlockEvent>& events,
                        const Eigen::VectorXd& x0,
                        const EngineRunConfig& cfg) {
  detail::BlockEngineModel model(objective, x0, cfg);
  detail::SimOptions opt;
  opt.sample_times = cfg.sample_times;
  opt.gamma = cfg.gamma;
  opt.divergence_factor = cfg.divergence_factor;
  opt.record_states = cfg.record_states;
  opt.prune_history = cfg.prune_history;
  return detail::run_jump_process(model, events, opt);
}

struct GenericStepSizes {
  Eigen::VectorXd K;    // certified per-block parameters
  Eigen::VectorXd eta;  // applied step sizes, eta_k = K_k / (p_k L_k)
};

// Per-block step sizes for the generic engine. p are clock intensities,
// tau read staleness, L block smoothness, M(k,l) the cross-block Lipschitz
// coupling (nonzero exactly on `neighbors`, which includes k itself whenever
// M(k,k) > 0):
//   K_k = p_k / (1 + sum_{l ~ k} p_l (tau_k M(k,l) + e tau_l M(l,k))
//                  / sqrt(L_k L_l))
inline GenericStepSizes generic_step_sizes(
    const Eigen::VectorXd& p, const Eigen::VectorXd& tau,
    const Eigen::VectorXd& L, const Eigen::MatrixXd& M,
    const std::vector<std::vector<int>>& neighbors) {
  const int blocks = static_cast<int>(p.size());
  if (tau.size() != blocks || L.size() != blocks || M.rows() != blocks ||
      M.cols() != blocks || static_cast<int>(neighbors.size()) != blocks) {
    throw std::invalid_argument("generic_step_sizes: size mismatch");
  }
  const double e = std::exp(1.0);
  GenericStepSizes out;
  out.K.resize(blocks);
  out.eta.resize(blocks);
  for (int k = 0; k < blocks; ++k) {
    if (!(p[k] > 0.0) || !(L[k] > 0.0) || !(tau[k] >= 0.0)) {
      throw std::invalid_argument(
          "generic_step_sizes: need p > 0, L > 0, tau >= 0");
    }
    double denom = 1.0;
    for (int l : neighbors[k]) {
      denom += p[l] * (tau[k] * M(k, l) + e * tau[l] * M(l, k)) /
               std::sqrt(L[k] * L[l]);
    }
    out.K[k] = p[k] / denom;
    out.eta[k] = out.K[k] / (p[k] * L[k]);
  }
  return out;
}

// Certified rate for the generic engine: gamma < min(sigma min_k eps_k K_k /
// L_k, 1 / tau_max). eps_k is the guaranteed acceptance fraction of block
// k's clock under gating (1 without capacities).
inline double generic_gamma(double sigma, const Eigen::VectorXd& eps,
                            const Eigen::VectorXd& K, const Eigen::VectorXd& L,
                            double tau_max) {
  if (eps.size() != K.size() || K.size() != L.size() || K.size() == 0) {
    throw std::invalid_argument("generic_gamma: size mismatch");
  }
  double lim = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K.size(); ++k) {
    lim = std::min(lim, sigma * eps[k] * K[k] / L[k]);
  }
  if (tau_max > 0.0) lim = std::min(lim, 1.0 / tau_max);
  return lim;
}

}  // namespace delnet
