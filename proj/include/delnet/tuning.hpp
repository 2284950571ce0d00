#pragma once

// Certified parameter selection.
//
// Step sizes, the rate gamma, and the error bound curve are computed from
// closed-form rules in the delays and clock intensities; a mean-dynamics
// stability certificate and a capacity feasibility report come with them.
// The step-size denominators sum over *neighboring* clocks: for an edge,
// every edge sharing an endpoint, itself included; for a computation clock,
// the edges at its node.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "delnet/network.hpp"

namespace delnet {

// Step sizes for pairwise averaging with delays:
//   K_e = p_e / (1 + sum_{f ~ e} p_f (tau_e + exp(1) tau_f)),  f ~ e incl. e.
inline Eigen::VectorXd gossip_step_sizes(const Graph& g,
                                         const DelayProfile& delays,
                                         const Eigen::VectorXd& p) {
  delays.validate(g);
  if (p.size() != g.edge_count()) {
    throw std::invalid_argument("step sizes: intensity count mismatch");
  }
  const double e1 = std::exp(1.0);
  Eigen::VectorXd K(g.edge_count());
  for (int e = 0; e < g.edge_count(); ++e) {
    double denom = 1.0;
    for (int f : g.edge_neighbors(e)) {
      denom += p[f] * (delays.edge[e] + e1 * delays.edge[f]);
    }
    K[e] = p[e] / denom;
  }
  return K;
}

struct DdoStepSizes {
  Eigen::VectorXd comm;  // K_e per edge
  Eigen::VectorXd comp;  // K_i per node
};

// Step sizes for dual decentralized optimization. Communication steps follow
// the pairwise rule above; computation steps couple to the edges at the node:
//   K_i = p_i / (1 + sum_{e at i} p_e (tau_i^comp + exp(1) tau_e)).
inline DdoStepSizes ddo_step_sizes(const Graph& g, const DelayProfile& delays,
                                   const Eigen::VectorXd& p_comm,
                                   const Eigen::VectorXd& p_comp) {
  delays.validate(g);
  if (p_comp.size() != g.node_count()) {
    throw std::invalid_argument("step sizes: comp intensity count mismatch");
  }
  DdoStepSizes out;
  out.comm = gossip_step_sizes(g, delays, p_comm);
  out.comp.resize(g.node_count());
  const double e1 = std::exp(1.0);
  for (int i = 0; i < g.node_count(); ++i) {
    if (!(p_comp[i] > 0.0)) {
      throw std::invalid_argument(
          "step sizes: computation intensities must be > 0");
    }
    double denom = 1.0;
    for (int e : g.incident_edges(i)) {
      denom += p_comm[e] * (delays.comp_delay(i) + e1 * delays.edge[e]);
    }
    out.comp[i] = p_comp[i] / denom;
  }
  return out;
}

// Largest certified rate for pairwise averaging:
//   gamma <= min(lambda2(Laplacian(K)) / 2, 1 / tau_max).
inline double gamma_gossip(const Graph& g, const Eigen::VectorXd& K,
                           double tau_max) {
  double lim = lambda2(g, K) / 2.0;
  if (tau_max > 0.0) lim = std::min(lim, 1.0 / tau_max);
  return lim;
}

// Largest certified rate for dual decentralized optimization. The spectral
// term is sigma / (4 L) times the connectivity of the communication steps;
// under capacity gating the guaranteed acceptance fraction halves it to
// sigma / (8 L).
inline double gamma_ddo(const Graph& g, const Eigen::VectorXd& K_comm,
                        double sigma, double L, double tau_max,
                        bool capacity_gated) {
  if (!(sigma > 0.0) || !(L >= sigma)) {
    throw std::invalid_argument("gamma: need 0 < sigma <= L");
  }
  const double c = capacity_gated ? sigma / (8.0 * L) : sigma / (4.0 * L);
  double lim = c * lambda2(g, K_comm);
  if (tau_max > 0.0) lim = std::min(lim, 1.0 / tau_max);
  return lim;
}

// Constant relating sustained intensity to window budgets: with
// c = 1 / (1 - sqrt(ln(6) / 2)), intensities obeying c p tau <= q keep the
// acceptance fraction of every clock at 1/2 or better.
inline double capacity_rate_constant() {
  return 1.0 / (1.0 - std::sqrt(std::log(6.0) / 2.0));
}

struct CapacityCheck {
  struct Row {
    std::string name;
    double lhs = 0.0;   // c * intensity * window
    double cap = 0.0;
    bool ok = true;
  };
  std::vector<Row> rows;
  bool feasible = true;
  double c = 0.0;
};

// Feasibility of the sustained-rate conditions, one row per bounded budget:
//   c p_e tau_e <= q_e,   c (sum_{e at i} p_e) tau_i^comm <= q_i^comm,
//   c p_i^comp tau_i^comp <= q_i^comp.
inline CapacityCheck capacity_feasible(const NetworkSpec& net) {
  net.validate();
  CapacityCheck out;
  out.c = capacity_rate_constant();
  const double rel_slack = 1.0 + 1e-12;
  auto push = [&](std::string name, double lhs, std::int64_t cap) {
    if (cap == CapacityProfile::unbounded) return;
    CapacityCheck::Row row;
    row.name = std::move(name);
    row.lhs = lhs;
    row.cap = static_cast<double>(cap);
    row.ok = lhs <= row.cap * rel_slack;
    out.feasible = out.feasible && row.ok;
    out.rows.push_back(std::move(row));
  };
  const Graph& g = net.graph;
  for (int e = 0; e < g.edge_count(); ++e) {
    push("edge " + std::to_string(g.edge(e).u) + "-" +
             std::to_string(g.edge(e).v),
         out.c * net.comm_intensity[e] * net.delays.edge[e], net.caps.edge_cap(e));
  }
  for (int i = 0; i < g.node_count(); ++i) {
    double rate = 0.0;
    for (int e : g.incident_edges(i)) rate += net.comm_intensity[e];
    push("node " + std::to_string(i) + " comm",
         out.c * rate * net.delays.node_comm_delay(g, i),
         net.caps.node_comm_cap(i));
    push("node " + std::to_string(i) + " comp",
         out.c * net.comp_rate(i) * net.delays.comp_delay(i),
         net.caps.node_comp_cap(i));
  }
  return out;
}

struct CapacityIntensities {
  Eigen::VectorXd comm;
  Eigen::VectorXd comp;
};

// Largest intensities of the shape p ~ 1/tau that satisfy every sustained-
// rate condition, never exceeding the unconstrained default 1/tau. For each
// edge the binding limit among its own budget and both endpoint budgets is
// taken; node budgets are split evenly across the node's edges.
inline CapacityIntensities max_capacity_intensities(
    const Graph& g, const DelayProfile& delays, const CapacityProfile& caps) {
  delays.validate(g);
  caps.validate(g);
  const double c = capacity_rate_constant();
  CapacityIntensities out;
  out.comm.resize(g.edge_count());
  auto node_limit = [&](int i) {
    // c * deg_i * p * tau_i^comm <= q_i^comm, solved for p.
    if (caps.node_comm_cap(i) == CapacityProfile::unbounded) {
      return std::numeric_limits<double>::infinity();
    }
    const double w = delays.node_comm_delay(g, i);
    if (w == 0.0) return std::numeric_limits<double>::infinity();
    return static_cast<double>(caps.node_comm_cap(i)) /
           (c * g.degree(i) * w);
  };
  for (int e = 0; e < g.edge_count(); ++e) {
    const double tau = delays.edge[e];
    if (!(tau > 0.0)) {
      throw std::invalid_argument(
          "capacity intensities: edge delays must be > 0");
    }
    double p = 1.0 / tau;
    if (caps.edge_cap(e) != CapacityProfile::unbounded) {
      p = std::min(p, static_cast<double>(caps.edge_cap(e)) / (c * tau));
    }
    p = std::min(p, node_limit(g.edge(e).u));
    p = std::min(p, node_limit(g.edge(e).v));
    out.comm[e] = p;
  }
  if (delays.comp.size() != 0) {
    out.comp.resize(g.node_count());
    for (int i = 0; i < g.node_count(); ++i) {
      const double tau = delays.comp[i];
      if (!(tau > 0.0)) {
        throw std::invalid_argument(
            "capacity intensities: computation delays must be > 0");
      }
      double p = 1.0 / tau;
      if (caps.node_comp_cap(i) != CapacityProfile::unbounded) {
        p = std::min(p, static_cast<double>(caps.node_comp_cap(i)) / (c * tau));
      }
      out.comp[i] = p;
    }
  }
  return out;
}

// Certified error curve: prefactor * e^{-gamma T / 2} (1 + tau_max / T) /
// (1 - gamma tau_max). Requires T > 0 and gamma tau_max < 1.
inline double bound_curve(double gamma, double tau_max, double prefactor,
                          double T) {
  if (!(T > 0.0)) {
    throw std::invalid_argument("bound_curve: T must be > 0");
  }
  if (!(gamma >= 0.0) || !(tau_max >= 0.0)) {
    throw std::invalid_argument("bound_curve: gamma, tau_max must be >= 0");
  }
  if (gamma * tau_max >= 1.0) {
    throw std::invalid_argument("bound_curve: need gamma * tau_max < 1");
  }
  return prefactor * std::exp(-gamma * T / 2.0) * (1.0 + tau_max / T) /
         (1.0 - gamma * tau_max);
}

struct MeanStability {
  double rho = 0.0;  // spectral radius of Laplacian(tau_e K_e)
  bool stable = false;
};

// Mean-dynamics stability certificate: the delay-weighted step Laplacian
// must have spectral radius below one.
inline MeanStability certify_mean_stability(const Graph& g,
                                            const Eigen::VectorXd& K,
                                            const DelayProfile& delays) {
  delays.validate(g);
  if (K.size() != g.edge_count()) {
    throw std::invalid_argument("mean stability: step size count mismatch");
  }
  MeanStability out;
  out.rho = spectral_radius(
      g, (K.array() * delays.edge.array()).matrix());
  out.stable = out.rho < 1.0;
  return out;
}

struct TunedParameters {
  Eigen::VectorXd comm_step;        // K_e
  Eigen::VectorXd comp_step;        // K_i (empty for pairwise averaging)
  double gamma = 0.0;               // rate actually used (safety applied)
  double gamma_limit = 0.0;         // certified supremum
  double tau_max = 0.0;
  double lambda2 = 0.0;             // connectivity of the comm steps
  double rho_mean = 0.0;
  bool mean_stable = false;
  CapacityCheck capacity;
  double bound_prefactor_scale = 1.0;  // 1 for averaging, L/sigma for dual
};

// gamma is taken strictly inside the certified range.
inline constexpr double kGammaSafety = 0.999;

inline TunedParameters tune_gossip(const NetworkSpec& net,
                                   double safety = kGammaSafety) {
  net.validate();
  TunedParameters out;
  out.comm_step = gossip_step_sizes(net.graph, net.delays, net.comm_intensity);
  out.tau_max = net.tau_max();
  out.lambda2 = lambda2(net.graph, out.comm_step);
  out.gamma_limit = gamma_gossip(net.graph, out.comm_step, out.tau_max);
  out.gamma = safety * out.gamma_limit;
  const auto ms = certify_mean_stability(net.graph, out.comm_step, net.delays);
  out.rho_mean = ms.rho;
  out.mean_stable = ms.stable;
  out.capacity = capacity_feasible(net);
  out.bound_prefactor_scale = 1.0;
  return out;
}

inline TunedParameters tune_ddo(const NetworkSpec& net, double sigma, double L,
                                double safety = kGammaSafety) {
  net.validate();
  if (!net.has_comp_clocks()) {
    throw std::invalid_argument("tune: computation intensities required");
  }
  TunedParameters out;
  const auto steps =
      ddo_step_sizes(net.graph, net.delays, net.comm_intensity,
                     net.comp_intensity);
  out.comm_step = steps.comm;
  out.comp_step = steps.comp;
  out.tau_max = net.tau_max();
  out.lambda2 = lambda2(net.graph, out.comm_step);
  const bool gated = net.caps.any_bounded();
  out.gamma_limit =
      gamma_ddo(net.graph, out.comm_step, sigma, L, out.tau_max, gated);
  out.gamma = safety * out.gamma_limit;
  const auto ms = certify_mean_stability(net.graph, out.comm_step, net.delays);
  out.rho_mean = ms.rho;
  out.mean_stable = ms.stable;
  out.capacity = capacity_feasible(net);
  out.bound_prefactor_scale = L / sigma;
  return out;
}

}  // namespace delnet
