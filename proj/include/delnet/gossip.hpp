#pragma once

// Pairwise averaging with communication delays.
//
// Oracle mode is the analyzed process: each edge carries a Poisson clock,
// and an event at time t on edge (i, j) applies
//   x_i <- x_i - (K_e / p_e) (x_i(t - tau_e) - x_j(t - tau_e))
//   x_j <- x_j - (K_e / p_e) (x_j(t - tau_e) - x_i(t - tau_e)).
// The two increments are exact negatives of each other, so the state sum is
// conserved to rounding.
//
// Protocol mode replaces the edge oracle with the implementable handshake:
// nodes wake on their own clocks, ping a random neighbor, synchronize after
// two ping delays, and exchange data that lands one edge delay later.
// Capacity budgets are enforced on the initiator, the responder, and the
// edge, with rejected handshakes costing nothing.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <queue>
#include <set>
#include <tuple>
#include <vector>

#include "delnet/detail/jump_process.hpp"
#include "delnet/history.hpp"
#include "delnet/network.hpp"
#include "delnet/ppp.hpp"
#include "delnet/rng.hpp"
#include "delnet/trace.hpp"
#include "delnet/tuning.hpp"

namespace delnet {

namespace detail {

// The two-sided update shared by every pairwise exchange in the library.
// Computing one difference and applying it with opposite signs keeps the
// row sum bitwise unchanged up to the two independent roundings.
inline void apply_pair_update(Eigen::MatrixXd& x, int i, int j, double coeff,
                              const Eigen::VectorXd& xi_read,
                              const Eigen::VectorXd& xj_read) {
  const Eigen::VectorXd step = coeff * (xi_read - xj_read);
  x.row(i) -= step.transpose();
  x.row(j) += step.transpose();
}

}  // namespace detail

enum class GossipMode { oracle, protocol };

struct GossipRunConfig {
  Eigen::VectorXd comm_step;  // K_e per edge
  Eigen::MatrixXd x0;         // nodes x dim
  double horizon = 0.0;
  std::vector<double> sample_times;
  std::uint64_t seed = 0;

  // Enables the weighted-average metrics and, with tau_max, the certified
  // bound column (prefactor ||x0 - xbar||^2).
  std::optional<double> gamma;
  std::optional<double> tau_max;

  // Apply K_e / (2 p_e) instead of K_e / p_e: the coefficient the dual-space
  // derivation prescribes, kept switchable for comparison runs.
  bool dual_consistent_scaling = false;

  GatingOptions gating;
  GossipMode mode = GossipMode::oracle;
  Eigen::VectorXd tau_ping;  // per edge; protocol mode only, <= tau_e

  bool record_states = false;
  bool prune_history = true;
  double divergence_factor = 1e12;
};

namespace detail {

// Event of the protocol schedule; oracle mode uses GatingDecision directly.
struct ExchangeEvent {
  double time = 0.0;        // when the update lands
  int edge = 0;
  double read_time = 0.0;   // when the exchanged snapshots were taken
  bool accepted = true;
};

class GossipModel {
 public:
  GossipModel(const NetworkSpec& net, const GossipRunConfig& cfg)
      : net_(net), cfg_(cfg), x_(cfg.x0) {
    const int n = net.graph.node_count();
    if (x_.rows() != n || x_.cols() < 1) {
      throw std::invalid_argument("run: x0 must have one row per node");
    }
    if (cfg.comm_step.size() != net.graph.edge_count()) {
      throw std::invalid_argument("run: step size count mismatch");
    }
    target_ = x_.colwise().mean().replicate(n, 1);
    sum0_ = x_.colwise().sum();
    sum0_norm_ = sum0_.norm();
    history_.reserve(n);
    for (int i = 0; i < n; ++i) {
      history_.emplace_back(0.0, x_.row(i).transpose());
    }
    err2_ = err2_exact();
  }

  const Eigen::MatrixXd& state() const { return x_; }
  double err2() const { return err2_; }
  double err2_exact() const { return (x_ - target_).squaredNorm(); }
  double err2_of(const Eigen::MatrixXd& s) const {
    return (s - target_).squaredNorm();
  }
  void resync_err2(double v) { err2_ = v; }

  // Relative drift of the state sum; the sum is the conserved quantity.
  double audit() const {
    const double drift = (x_.colwise().sum() - sum0_).norm();
    return drift / (sum0_norm_ > 0.0 ? sum0_norm_ : 1.0);
  }

  void apply(const GatingDecision& ev) {
    exchange(ev.clock.index, ev.time - net_.delays.edge[ev.clock.index],
             ev.time);
  }

  void apply(const ExchangeEvent& ev) {
    exchange(ev.edge, ev.read_time, ev.time);
  }

  double event_energy(const GatingDecision& ev) const {
    return net_.delays.edge[ev.clock.index];
  }

  // A completed handshake occupies the wire for the whole round trip.
  double event_energy(const ExchangeEvent& ev) const {
    return net_.delays.edge[ev.edge] + 2.0 * cfg_.tau_ping[ev.edge];
  }

  double max_delay() const {
    double m = net_.delays.max_delay();
    if (cfg_.mode == GossipMode::protocol && cfg_.tau_ping.size()) {
      m += 2.0 * cfg_.tau_ping.maxCoeff();
    }
    return m;
  }

  void prune(double before) {
    for (auto& h : history_) h.prune_before(before);
  }

  void extra_sample_metrics(Trace&) {}

 private:
  void exchange(int e, double read_time, double now) {
    const auto& [i, j] = net_.graph.edge(e);
    const double coeff = (cfg_.dual_consistent_scaling ? 0.5 : 1.0) *
                         cfg_.comm_step[e] / net_.comm_intensity[e];
    const Eigen::VectorXd xi = history_[i].read(read_time);
    const Eigen::VectorXd xj = history_[j].read(read_time);
    const double before = (x_.row(i) - target_.row(i)).squaredNorm() +
                          (x_.row(j) - target_.row(j)).squaredNorm();
    apply_pair_update(x_, i, j, coeff, xi, xj);
    const double after = (x_.row(i) - target_.row(i)).squaredNorm() +
                         (x_.row(j) - target_.row(j)).squaredNorm();
    err2_ += after - before;
    history_[i].append(now, x_.row(i).transpose());
    history_[j].append(now, x_.row(j).transpose());
  }

  const NetworkSpec& net_;
  const GossipRunConfig& cfg_;
  Eigen::MatrixXd x_;
  Eigen::MatrixXd target_;
  Eigen::RowVectorXd sum0_;
  double sum0_norm_ = 0.0;
  std::vector<HistoryBuffer> history_;
  double err2_ = 0.0;
};

// Sample every edge clock and gate it against the capacity budgets.
inline std::vector<GatingDecision> sample_comm_events(
    const NetworkSpec& net, double horizon, std::uint64_t seed,
    const GatingOptions& gating) {
  std::vector<PointStream> streams;
  streams.reserve(net.graph.edge_count());
  for (int e = 0; e < net.graph.edge_count(); ++e) {
    auto stream = make_stream(seed, StreamKind::comm_clock, e);
    streams.push_back({{ClockKind::comm, e},
                       net.comm_intensity[e],
                       sample_ppp(net.comm_intensity[e], horizon, stream)});
  }
  return gate_events(net.graph, net.delays, net.caps, streams, gating);
}

// Simulate the handshake bookkeeping. Capacity decisions depend only on
// event times, never on state values, so the schedule is resolved up front
// and the state loop replays it.
inline std::vector<ExchangeEvent> protocol_schedule(const NetworkSpec& net,
                                                    const GossipRunConfig& cfg) {
  const Graph& g = net.graph;
  const int n = g.node_count();
  if (cfg.tau_ping.size() != g.edge_count()) {
    throw std::invalid_argument("protocol: tau_ping count mismatch");
  }
  for (int e = 0; e < g.edge_count(); ++e) {
    if (!(cfg.tau_ping[e] >= 0.0) || cfg.tau_ping[e] > net.delays.edge[e]) {
      throw std::invalid_argument(
          "protocol: need 0 <= tau_ping <= tau per edge");
    }
  }

  enum class Phase { tick, ping_arrival, handshake };
  struct Action {
    double time;
    std::int64_t seq;
    Phase phase;
    int node = 0;   // initiator
    int edge = -1;
    double start = 0.0;
    bool operator>(const Action& o) const {
      return std::tie(time, seq) > std::tie(o.time, o.seq);
    }
  };
  std::priority_queue<Action, std::vector<Action>, std::greater<Action>> queue;
  std::int64_t seq = 0;

  // Node wake-ups: rate = half the total incident intensity, so that each
  // edge fires at its oracle rate when both endpoints initiate.
  struct Tick {
    double time;
    int node;
  };
  std::vector<Tick> ticks;
  for (int i = 0; i < n; ++i) {
    double rate = 0.0;
    for (int e : g.incident_edges(i)) rate += net.comm_intensity[e];
    rate /= 2.0;
    if (!(rate > 0.0)) continue;
    auto stream = make_stream(cfg.seed, StreamKind::node_clock, i);
    for (double t : sample_ppp(rate, cfg.horizon, stream)) {
      ticks.push_back({t, i});
    }
  }
  std::sort(ticks.begin(), ticks.end(), [](const Tick& a, const Tick& b) {
    return std::tie(a.time, a.node) < std::tie(b.time, b.node);
  });
  for (const auto& t : ticks) {
    queue.push({t.time, seq++, Phase::tick, t.node, -1, t.time});
  }

  std::vector<RngStream> choice;
  choice.reserve(n);
  for (int i = 0; i < n; ++i) {
    choice.push_back(make_stream(cfg.seed, StreamKind::choice, i));
  }

  // Request lists: communications a node is (provisionally) part of, by
  // start time; per-edge lists hold completed reservations only.
  std::vector<std::multiset<double>> node_list(n);
  std::vector<std::multiset<double>> edge_list(g.edge_count());

  auto node_ok = [&](int i, double t) {
    const double w = net.delays.node_comm_delay(g, i);
    const auto cap = net.caps.node_comm_cap(i);
    if (cap == CapacityProfile::unbounded || w == 0.0) return true;
    const auto lo = node_list[i].lower_bound(t - w);
    const auto hi = node_list[i].lower_bound(t);
    return std::distance(lo, hi) < cap;
  };
  auto edge_ok = [&](int e, double t) {
    const double w = net.delays.edge[e];
    const auto cap = net.caps.edge_cap(e);
    if (cap == CapacityProfile::unbounded || w == 0.0) return true;
    const auto lo = edge_list[e].lower_bound(t - w);
    const auto hi = edge_list[e].lower_bound(t);
    return std::distance(lo, hi) < cap;
  };

  std::vector<ExchangeEvent> schedule;
  while (!queue.empty()) {
    const Action a = queue.top();
    queue.pop();
    switch (a.phase) {
      case Phase::tick: {
        const int i = a.node;
        if (!node_ok(i, a.time)) {
          schedule.push_back({a.time, -1, a.time, false});
          break;
        }
        // Neighbor chosen proportionally to the edge intensities.
        double total = 0.0;
        for (int e : g.incident_edges(i)) total += net.comm_intensity[e];
        double u = choice[i].next_unit() * total;
        int e = g.incident_edges(i).back();
        for (int cand : g.incident_edges(i)) {
          u -= net.comm_intensity[cand];
          if (u <= 0.0) {
            e = cand;
            break;
          }
        }
        node_list[i].insert(a.time);
        queue.push({a.time + cfg.tau_ping[e], seq++, Phase::ping_arrival, i, e,
                    a.time});
        break;
      }
      case Phase::ping_arrival: {
        const int j = g.other_end(a.edge, a.node);
        if (!node_ok(j, a.time)) {
          node_list[a.node].erase(node_list[a.node].find(a.start));
          schedule.push_back({a.time, a.edge, a.time, false});
          break;
        }
        node_list[j].insert(a.time);
        queue.push({a.start + 2.0 * cfg.tau_ping[a.edge], seq++,
                    Phase::handshake, a.node, a.edge, a.start});
        break;
      }
      case Phase::handshake: {
        const int j = g.other_end(a.edge, a.node);
        if (!edge_ok(a.edge, a.time)) {
          node_list[a.node].erase(node_list[a.node].find(a.start));
          node_list[j].erase(
              node_list[j].find(a.start + cfg.tau_ping[a.edge]));
          schedule.push_back({a.time, a.edge, a.time, false});
          break;
        }
        edge_list[a.edge].insert(a.time);
        // Data snapshots are taken now and land one edge delay later.
        schedule.push_back(
            {a.time + net.delays.edge[a.edge], a.edge, a.time, true});
        break;
      }
    }
  }
  std::stable_sort(schedule.begin(), schedule.end(),
                   [](const ExchangeEvent& x, const ExchangeEvent& y) {
                     return x.time < y.time;
                   });
  // Updates landing after the horizon are dropped; their reservations were
  // still counted above.
  while (!schedule.empty() && schedule.back().time > cfg.horizon) {
    schedule.pop_back();
  }
  return schedule;
}

}  // namespace detail

inline Trace run_gossip(const NetworkSpec& net, const GossipRunConfig& cfg) {
  net.validate();
  detail::GossipModel model(net, cfg);
  detail::SimOptions opt;
  opt.sample_times = cfg.sample_times;
  opt.gamma = cfg.gamma;
  opt.divergence_factor = cfg.divergence_factor;
  opt.record_states = cfg.record_states;
  opt.prune_history = cfg.prune_history;
  if (cfg.gamma && cfg.tau_max) {
    const double prefactor = consensus_error(cfg.x0);
    const double gamma = *cfg.gamma;
    const double tau_max = *cfg.tau_max;
    opt.bound_at = [gamma, tau_max, prefactor](double t) {
      return t > 0.0 ? bound_curve(gamma, tau_max, prefactor, t)
                     : prefactor;
    };
  }
  if (cfg.mode == GossipMode::oracle) {
    const auto events =
        detail::sample_comm_events(net, cfg.horizon, cfg.seed, cfg.gating);
    return detail::run_jump_process(model, events, opt);
  }
  const auto events = detail::protocol_schedule(net, cfg);
  return detail::run_jump_process(model, events, opt);
}

// Consensus error of a recorded path at the given times.
inline std::vector<double> consensus_error_series(
    const PiecewisePath& path, const std::vector<double>& times) {
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(consensus_error(path.value(t)));
  return out;
}

}  // namespace delnet
