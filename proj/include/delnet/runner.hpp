#pragma once

// Experiment driver: turns a parsed configuration into tuned parameters and
// one trace per seed. Seeds are distributed over a worker pool; each run is
// a pure function of (config, seed), so results are identical for any worker
// count and arrive in seed order.

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "delnet/config.hpp"
#include "delnet/csv.hpp"
#include "delnet/ddo.hpp"
#include "delnet/gossip.hpp"
#include "delnet/ode.hpp"
#include "delnet/sparsify.hpp"
#include "delnet/tuning.hpp"

namespace delnet {

struct ExperimentResult {
  std::string kind;  // csv kind column: gossip | ddo | ode | sparsify
  NetworkSpec net;
  TunedParameters tuned;
  double gamma = 0.0;  // rate the runs actually used
  double horizon = 0.0;
  std::vector<double> sample_times;
  std::vector<SeedRun> runs;  // one per seed, in config order
  bool any_diverged = false;
  Eigen::VectorXd minimizer;  // ddo only
};

namespace detail {

// Run one closure per seed on `workers` threads. Results land in a
// pre-sized vector indexed by seed position, so the schedule cannot change
// the output. The first exception, if any, is rethrown on the caller.
template <typename Fn>
inline void for_each_seed(std::size_t count, int workers, Fn&& fn) {
  if (workers < 1) workers = 1;
  if (workers == 1 || count <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (std::size_t k = next.fetch_add(1); k < count;
         k = next.fetch_add(1)) {
      try {
        fn(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int spawn = static_cast<int>(
      std::min(static_cast<std::size_t>(workers), count));
  pool.reserve(spawn);
  for (int w = 0; w < spawn; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline Trace ode_as_trace(const OdeTrajectory& path,
                          const std::vector<double>& times) {
  Trace tr;
  tr.times = times;
  auto& err2 = tr.series["err2"];
  err2.reserve(times.size());
  for (double t : times) err2.push_back(consensus_error(path.value_at(t)));
  tr.diverged = path.diverged;
  tr.final_state = path.grid.back();
  return tr;
}

inline Trace sparsify_as_trace(const SparsifyResult& res) {
  Trace tr;
  tr.times.reserve(res.history.size());
  for (std::size_t k = 0; k < res.history.size(); ++k) {
    tr.times.push_back(static_cast<double>(k));
  }
  tr.series["objective"] = res.history;
  return tr;
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       int workers = 1) {
  ExperimentResult out;
  out.net = cfg.build_network();
  const Graph& g = out.net.graph;

  if (cfg.algorithm == Algorithm::sparsify) {
    out.kind = "sparsify";
    SparsifyProblem prob{g, out.net.delays.edge, 0.0, {}};
    prob.omega = cfg.omega >= 0.0
                     ? cfg.omega
                     : default_omega(g, prob.tau, out.net.comm_intensity);
    const SparsifyResult res =
        sparsify_optimize(prob, out.net.comm_intensity, 500);
    out.runs.push_back({0, detail::sparsify_as_trace(res)});
    out.sample_times = out.runs[0].trace.times;
    return out;
  }

  std::vector<QuadraticLocal> locals;
  if (cfg.algorithm == Algorithm::ddo) {
    locals = cfg.locals.build(g);
    out.tuned = tune_ddo(out.net, cfg.locals.strong_convexity(),
                         cfg.locals.smoothness(), cfg.tuner.safety);
    out.minimizer = exact_minimizer(locals);
  } else {
    out.tuned = tune_gossip(out.net, cfg.tuner.safety);
  }
  out.gamma = cfg.tuner.gamma_override.value_or(out.tuned.gamma);
  out.horizon = cfg.horizon.resolve(out.gamma);
  out.sample_times = cfg.samples.resolve(out.horizon);
  out.runs.resize(cfg.seeds.size());

  if (cfg.algorithm == Algorithm::ode) {
    out.kind = "ode";
    const double dt =
        cfg.ode_dt > 0.0
            ? cfg.ode_dt
            : default_ode_dt(g, out.tuned.comm_step, out.net.delays.edge,
                             out.horizon);
    detail::for_each_seed(cfg.seeds.size(), workers, [&](std::size_t k) {
      const Eigen::MatrixXd y0 = cfg.x0.build(g, cfg.seeds[k]);
      const OdeTrajectory path = integrate_delayed(
          g, out.tuned.comm_step, out.net.delays.edge, y0, out.horizon, dt);
      out.runs[k] = {cfg.seeds[k], detail::ode_as_trace(path, out.sample_times)};
    });
  } else if (cfg.algorithm == Algorithm::gossip) {
    out.kind = "gossip";
    detail::for_each_seed(cfg.seeds.size(), workers, [&](std::size_t k) {
      GossipRunConfig rc;
      rc.comm_step = out.tuned.comm_step;
      rc.x0 = cfg.x0.build(g, cfg.seeds[k]);
      rc.horizon = out.horizon;
      rc.sample_times = out.sample_times;
      rc.seed = cfg.seeds[k];
      rc.gamma = out.gamma;
      rc.tau_max = out.tuned.tau_max;
      rc.dual_consistent_scaling = cfg.tuner.dual_consistent_scaling;
      rc.gating.count_all_points = cfg.tuner.count_all_points;
      if (cfg.mode == RunMode::protocol) {
        rc.mode = GossipMode::protocol;
        // The ping is a control message; it can never occupy the wire for
        // longer than the payload it schedules.
        rc.tau_ping = out.net.delays.edge.cwiseMin(cfg.tau_ping);
      }
      out.runs[k] = {cfg.seeds[k], run_gossip(out.net, rc)};
    });
  } else {
    out.kind = "ddo";
    std::vector<const LocalFunction*> fns;
    fns.reserve(locals.size());
    for (const auto& f : locals) fns.push_back(&f);
    detail::for_each_seed(cfg.seeds.size(), workers, [&](std::size_t k) {
      DdoRunConfig rc;
      rc.comm_step = out.tuned.comm_step;
      rc.comp_step = out.tuned.comp_step;
      rc.sigma = cfg.locals.strong_convexity();
      rc.horizon = out.horizon;
      rc.sample_times = out.sample_times;
      rc.seed = cfg.seeds[k];
      rc.gamma = out.gamma;
      rc.tau_max = out.tuned.tau_max;
      rc.dual_consistent_scaling = cfg.tuner.dual_consistent_scaling;
      rc.gating.count_all_points = cfg.tuner.count_all_points;
      double err0 = static_cast<double>(g.node_count()) *
                    out.minimizer.squaredNorm();
      if (cfg.x0.kind != "zero") {
        const Eigen::MatrixXd xs = cfg.x0.build(g, cfg.seeds[k]);
        err0 = (xs.rowwise() - out.minimizer.transpose()).squaredNorm();
        rc.x_start = xs;
      }
      rc.bound_prefactor = out.tuned.bound_prefactor_scale * err0;
      out.runs[k] = {cfg.seeds[k], run_ddo(out.net, fns, out.minimizer, rc)};
    });
  }
  for (const SeedRun& run : out.runs) {
    out.any_diverged = out.any_diverged || run.trace.diverged;
  }
  return out;
}

// Pointwise mean and standard error of one metric across the runs.
struct SeriesStats {
  std::vector<double> times;
  std::vector<double> mean;
  std::vector<double> se;
};

inline SeriesStats aggregate_metric(const std::vector<SeedRun>& runs,
                                    const std::string& metric) {
  if (runs.empty()) throw std::invalid_argument("aggregate: no runs");
  SeriesStats out;
  out.times = runs[0].trace.times;
  const std::size_t len = out.times.size();
  out.mean.assign(len, 0.0);
  out.se.assign(len, 0.0);
  for (const SeedRun& run : runs) {
    const auto& v = run.trace.get(metric);
    if (v.size() != len) {
      throw std::invalid_argument("aggregate: sample grids differ");
    }
    for (std::size_t k = 0; k < len; ++k) out.mean[k] += v[k];
  }
  const double n = static_cast<double>(runs.size());
  for (std::size_t k = 0; k < len; ++k) out.mean[k] /= n;
  if (runs.size() > 1) {
    for (const SeedRun& run : runs) {
      const auto& v = run.trace.get(metric);
      for (std::size_t k = 0; k < len; ++k) {
        const double d = v[k] - out.mean[k];
        out.se[k] += d * d;
      }
    }
    for (std::size_t k = 0; k < len; ++k) {
      out.se[k] = std::sqrt(out.se[k] / (n * (n - 1.0)));
    }
  }
  return out;
}

// Budget (eventually, once the curves leave their common start) at which
// err2 first falls to the target, log-interpolated between the bracketing
// samples; +inf when the run never gets there. "time" reads the sample grid
// itself, anything else a cumulative metric column. Comparing these
// crossings is the monotone-decay form of "lower error at the same budget":
// final-sample comparisons say nothing once both runs sit on the rounding
// floor.
inline double budget_to_target(const Trace& tr, const std::string& axis,
                               double target) {
  const auto& err = tr.get("err2");
  const auto& b = axis == "time" ? tr.times : tr.get(axis);
  for (std::size_t k = 0; k < err.size(); ++k) {
    if (err[k] > target) continue;
    if (k == 0) return b[0];
    const double e0 = std::max(err[k - 1], 1e-300);
    const double e1 = std::max(err[k], 1e-300);
    double s = (std::log(target) - std::log(e0)) / (std::log(e1) -
                                                    std::log(e0));
    if (!std::isfinite(s) || s < 0.0) s = 0.0;
    if (s > 1.0) s = 1.0;
    return b[k - 1] + s * (b[k] - b[k - 1]);
  }
  return std::numeric_limits<double>::infinity();
}

// Error level the budget race is scored at, relative to the starting error.
inline constexpr double kBraessTargetRatio = 1e-9;

struct BraessReport {
  SparsifyResult opt;
  PrunedGraph pruned;
  double omega = 0.0;
  int edges_before = 0;
  int edges_after = 0;
  double j_before = 0.0;
  double j_after = 0.0;
  ExperimentResult dense;
  ExperimentResult sparse;
  // Per-seed: pruned strictly better at the matched budget on each axis.
  std::vector<bool> time_win, updates_win, energy_win;
  int wins_all = 0;           // seeds won on all three axes at once
  double win_fraction = 0.0;  // wins_all / seeds
};

// Sparsify the instance, prune, and race dense vs pruned from the same
// starting states over the same horizon and seeds.
inline BraessReport run_braess(const ExperimentConfig& cfg, int workers = 1) {
  if (cfg.algorithm != Algorithm::gossip) {
    throw ConfigError("braess: expected a gossip experiment");
  }
  BraessReport rep;
  const NetworkSpec net = cfg.build_network();
  SparsifyProblem prob{net.graph, net.delays.edge, 0.0, {}};
  prob.omega = cfg.omega >= 0.0
                   ? cfg.omega
                   : default_omega(net.graph, prob.tau, net.comm_intensity);
  rep.omega = prob.omega;
  rep.opt = sparsify_optimize(prob, net.comm_intensity, 500);
  rep.pruned = prune_graph(net.graph, rep.opt.p, cfg.prune_threshold);
  rep.edges_before = net.graph.edge_count();
  rep.edges_after = rep.pruned.graph.edge_count();
  rep.j_before = sparsify_objective(prob, net.comm_intensity);
  rep.j_after = rep.opt.objective;

  rep.dense = run_experiment(cfg, workers);

  // The pruned instance keeps the surviving edges with their delays and the
  // optimized intensities, and replays the dense run's absolute schedule so
  // the two traces share a sample grid.
  ExperimentConfig sparse_cfg = cfg;
  sparse_cfg.graph.kind = "edges";
  sparse_cfg.graph.edges.clear();
  for (const Edge& e : rep.pruned.graph.edges()) {
    sparse_cfg.graph.edges.push_back({e.u, e.v});
  }
  sparse_cfg.graph.n = net.graph.node_count();
  sparse_cfg.delays.kind = "explicit";
  sparse_cfg.delays.edge.clear();
  sparse_cfg.intensities.kind = "explicit";
  sparse_cfg.intensities.edge.clear();
  for (std::size_t k = 0; k < rep.pruned.kept_edges.size(); ++k) {
    sparse_cfg.delays.edge.push_back(net.delays.edge[rep.pruned.kept_edges[k]]);
    sparse_cfg.intensities.edge.push_back(rep.pruned.p[k]);
  }
  sparse_cfg.horizon.kind = "absolute";
  sparse_cfg.horizon.value = rep.dense.horizon;
  sparse_cfg.samples.times = rep.dense.sample_times;
  sparse_cfg.samples.count = 0;
  rep.sparse = run_experiment(sparse_cfg, workers);

  const std::size_t seeds = cfg.seeds.size();
  rep.time_win.resize(seeds);
  rep.updates_win.resize(seeds);
  rep.energy_win.resize(seeds);
  for (std::size_t s = 0; s < seeds; ++s) {
    const Trace& dense = rep.dense.runs[s].trace;
    const Trace& sparse = rep.sparse.runs[s].trace;
    const double target = kBraessTargetRatio * dense.get("err2").front();
    rep.time_win[s] = budget_to_target(sparse, "time", target) <
                      budget_to_target(dense, "time", target);
    rep.updates_win[s] =
        budget_to_target(sparse, "updates_accepted", target) <
        budget_to_target(dense, "updates_accepted", target);
    rep.energy_win[s] = budget_to_target(sparse, "energy", target) <
                        budget_to_target(dense, "energy", target);
    if (rep.time_win[s] && rep.updates_win[s] && rep.energy_win[s]) {
      ++rep.wins_all;
    }
  }
  rep.win_fraction =
      seeds ? static_cast<double>(rep.wins_all) / static_cast<double>(seeds)
            : 0.0;
  return rep;
}

}  // namespace delnet
