#pragma once

// Poisson clocks and capacity gating.
//
// Each edge and each computing node carries an independent Poisson clock.
// Capacity limits are enforced by gating: an event fires only if every
// sliding-window budget that covers it still has room. Windows are half-open
// [t - tau, t), and by default only previously accepted events count toward
// a budget; an accepted event is counted immediately.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <vector>

#include "delnet/network.hpp"
#include "delnet/rng.hpp"

namespace delnet {

enum class ClockKind : std::uint8_t { comm = 0, comp = 1 };

struct ClockId {
  ClockKind kind;
  int index;  // edge id for comm, node id for comp

  friend bool operator==(const ClockId& a, const ClockId& b) {
    return a.kind == b.kind && a.index == b.index;
  }
};

// Deterministic tie-break order for simultaneous events.
inline bool clock_before(const ClockId& a, const ClockId& b) {
  if (a.kind != b.kind) return a.kind < b.kind;
  return a.index < b.index;
}

struct PointStream {
  ClockId clock;
  double rate = 0.0;
  std::vector<double> points;  // strictly increasing, within [0, horizon]
};

// Homogeneous Poisson process on [0, horizon]: exponential gaps accumulated
// until the horizon is passed.
inline std::vector<double> sample_ppp(double rate, double horizon,
                                      RngStream& stream) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw std::invalid_argument("sample_ppp: rate must be finite, > 0");
  }
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("sample_ppp: horizon must be finite, >= 0");
  }
  std::vector<double> points;
  points.reserve(static_cast<std::size_t>(rate * horizon * 1.1) + 8);
  double t = stream.next_exponential(rate);
  while (t <= horizon) {
    points.push_back(t);
    t += stream.next_exponential(rate);
  }
  return points;
}

// Number of points in the half-open window [t - tau, t). tau = 0 gives 0.
inline std::int64_t window_count(const std::vector<double>& points, double t,
                                 double tau) {
  if (!(tau >= 0.0)) {
    throw std::invalid_argument("window_count: tau must be >= 0");
  }
  const auto lo = std::lower_bound(points.begin(), points.end(), t - tau);
  const auto hi = std::lower_bound(points.begin(), points.end(), t);
  return hi - lo;
}

// Why an event was rejected; a decision may carry several reasons.
enum class CapViolation : std::uint8_t {
  edge = 1 << 0,        // per-edge budget
  node_first = 1 << 1,  // communication budget at the smaller endpoint
  node_second = 1 << 2, // communication budget at the larger endpoint
  comp = 1 << 3,        // computation budget at the node
};

struct GatingDecision {
  double time = 0.0;
  ClockId clock{ClockKind::comm, 0};
  bool accepted = true;
  std::uint8_t violations = 0;

  bool violates(CapViolation v) const {
    return violations & static_cast<std::uint8_t>(v);
  }
};

struct GatingOptions {
  // When set, budgets count every clock point, accepted or not. The default
  // counts accepted events only.
  bool count_all_points = false;
};

// Merge the clock streams into one time-ordered event sequence and decide
// acceptance event by event. Three budget families are enforced:
//   - per edge:        accepted events on e within [t - tau_e, t)   < q_e
//   - per node (comm): accepted events touching i within
//                      [t - max_{e at i} tau_e, t)                  < q_i^comm
//   - per node (comp): accepted computations at i within
//                      [t - tau_i^comp, t)                          < q_i^comp
inline std::vector<GatingDecision> gate_events(
    const Graph& g, const DelayProfile& delays, const CapacityProfile& caps,
    const std::vector<PointStream>& streams, const GatingOptions& opt = {}) {
  delays.validate(g);
  caps.validate(g);

  struct Budget {
    double window = 0.0;
    std::int64_t cap = CapacityProfile::unbounded;
    std::deque<double> counted;
  };
  // Budget layout: [0, m) per-edge, [m, m+n) per-node comm, [m+n, m+2n) comp.
  const int m = g.edge_count();
  const int n = g.node_count();
  std::vector<Budget> budgets(m + 2 * n);
  for (int e = 0; e < m; ++e) {
    budgets[e].window = delays.edge[e];
    budgets[e].cap = caps.edge_cap(e);
  }
  for (int i = 0; i < n; ++i) {
    budgets[m + i].window = delays.node_comm_delay(g, i);
    budgets[m + i].cap = caps.node_comm_cap(i);
    budgets[m + n + i].window = delays.comp_delay(i);
    budgets[m + n + i].cap = caps.node_comp_cap(i);
  }

  struct Pending {
    double time;
    ClockId clock;
  };
  std::vector<Pending> merged;
  std::size_t total = 0;
  for (const auto& s : streams) total += s.points.size();
  merged.reserve(total);
  for (const auto& s : streams) {
    if (s.clock.kind == ClockKind::comm) {
      if (s.clock.index < 0 || s.clock.index >= m) {
        throw std::invalid_argument("gate_events: comm clock out of range");
      }
    } else if (s.clock.index < 0 || s.clock.index >= n) {
      throw std::invalid_argument("gate_events: comp clock out of range");
    }
    double prev = -1.0;
    for (double t : s.points) {
      if (t <= prev) {
        throw std::invalid_argument(
            "gate_events: stream points must be strictly increasing");
      }
      prev = t;
      merged.push_back({t, s.clock});
    }
  }
  std::sort(merged.begin(), merged.end(), [](const Pending& a, const Pending& b) {
    if (a.time != b.time) return a.time < b.time;
    return clock_before(a.clock, b.clock);
  });

  auto check = [&](int budget_id, double t) {
    auto& b = budgets[budget_id];
    while (!b.counted.empty() && b.counted.front() < t - b.window) {
      b.counted.pop_front();
    }
    // window = 0 means the budget can never be exceeded: [t, t) is empty.
    if (b.cap == CapacityProfile::unbounded || b.window == 0.0) return true;
    return static_cast<std::int64_t>(b.counted.size()) < b.cap;
  };

  std::vector<GatingDecision> out;
  out.reserve(merged.size());
  for (const auto& ev : merged) {
    GatingDecision d;
    d.time = ev.time;
    d.clock = ev.clock;
    int touched[3];
    int ntouched = 0;
    if (ev.clock.kind == ClockKind::comm) {
      const auto& e = g.edge(ev.clock.index);
      if (!check(ev.clock.index, ev.time)) {
        d.violations |= static_cast<std::uint8_t>(CapViolation::edge);
      }
      if (!check(m + e.u, ev.time)) {
        d.violations |= static_cast<std::uint8_t>(CapViolation::node_first);
      }
      if (!check(m + e.v, ev.time)) {
        d.violations |= static_cast<std::uint8_t>(CapViolation::node_second);
      }
      touched[ntouched++] = ev.clock.index;
      touched[ntouched++] = m + e.u;
      touched[ntouched++] = m + e.v;
    } else {
      if (!check(m + n + ev.clock.index, ev.time)) {
        d.violations |= static_cast<std::uint8_t>(CapViolation::comp);
      }
      touched[ntouched++] = m + n + ev.clock.index;
    }
    d.accepted = d.violations == 0;
    if (d.accepted || opt.count_all_points) {
      for (int k = 0; k < ntouched; ++k) {
        budgets[touched[k]].counted.push_back(ev.time);
      }
    }
    out.push_back(d);
  }
  return out;
}

// Upper bound on P(Z >= mu + x) for Z ~ Poisson(mu): exp(-x^2 / (mu + x)).
inline double poisson_tail_bound(double mu, double x) {
  if (!(mu >= 0.0)) {
    throw std::invalid_argument("poisson_tail_bound: mu must be >= 0");
  }
  if (!(mu + x > 0.0)) {
    throw std::invalid_argument("poisson_tail_bound: need mu + x > 0");
  }
  return std::exp(-x * x / (mu + x));
}

}  // namespace delnet
