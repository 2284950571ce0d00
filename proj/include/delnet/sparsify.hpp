#pragma once

// Delay-aware spectral sparsification.
//
// Over edge intensities p, maximize
//   J(p) = lambda2(Lap(K(p))) - omega * sum_e p_e tau_e
// where K(p) is the certified step-size rule. Slow edges earn little
// connectivity per unit of intensity spent, so the penalized optimum can
// drive their intensity to zero; pruning those edges then yields a smaller
// graph that mixes faster at equal budget.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "delnet/graph.hpp"
#include "delnet/tuning.hpp"

namespace delnet {

struct SparsifyProblem {
  Graph graph;
  Eigen::VectorXd tau;    // per-edge delay, all > 0
  double omega = 0.0;     // intensity-budget weight, >= 0
  Eigen::VectorXd p_cap;  // optional per-edge upper bounds; empty = unbounded

  void validate() const {
    if (tau.size() != graph.edge_count()) {
      throw std::invalid_argument("sparsify: delay count mismatch");
    }
    for (int e = 0; e < tau.size(); ++e) {
      if (!(tau[e] > 0.0) || !std::isfinite(tau[e])) {
        throw std::invalid_argument("sparsify: delays must be positive");
      }
    }
    if (!(omega >= 0.0)) {
      throw std::invalid_argument("sparsify: omega must be >= 0");
    }
    if (p_cap.size() != 0) {
      if (p_cap.size() != graph.edge_count()) {
        throw std::invalid_argument("sparsify: cap count mismatch");
      }
      for (int e = 0; e < p_cap.size(); ++e) {
        if (!(p_cap[e] > 0.0)) {
          throw std::invalid_argument("sparsify: caps must be positive");
        }
      }
    }
  }
};

namespace detail {

inline void check_intensities(const SparsifyProblem& prob,
                              const Eigen::VectorXd& p) {
  if (p.size() != prob.graph.edge_count()) {
    throw std::invalid_argument("sparsify: intensity count mismatch");
  }
  for (int e = 0; e < p.size(); ++e) {
    if (!(p[e] >= 0.0)) {
      throw std::invalid_argument("sparsify: intensities must be >= 0");
    }
  }
}

}  // namespace detail

inline double sparsify_objective(const SparsifyProblem& prob,
                                 const Eigen::VectorXd& p) {
  prob.validate();
  detail::check_intensities(prob, p);
  const Eigen::VectorXd K =
      gossip_step_sizes(prob.graph, DelayProfile{prob.tau, {}}, p);
  return lambda2(prob.graph, K) - prob.omega * p.dot(prob.tau);
}

struct SparsifyGradient {
  Eigen::VectorXd grad;
  bool degenerate = false;  // lambda2 nearly multiple; grad is a subgradient
};

// Analytic gradient. The eigenvalue term differentiates as
// (u_i - u_j)^2 per edge weight for the unit second eigenvector u, chained
// through the step-size rule:
//   dK_b/dp_a = [a = b]/D_b - p_b (tau_b + e tau_a) / D_b^2  for a ~ b,
// with D_b the rule's denominator. When the second eigenvalue is nearly
// multiple the eigenvector is not unique; the result is then one subgradient
// choice and is flagged.
inline SparsifyGradient sparsify_gradient(const SparsifyProblem& prob,
                                          const Eigen::VectorXd& p) {
  prob.validate();
  detail::check_intensities(prob, p);
  const Graph& g = prob.graph;
  const double e1 = std::exp(1.0);

  Eigen::VectorXd denom(g.edge_count());
  Eigen::VectorXd K(g.edge_count());
  for (int b = 0; b < g.edge_count(); ++b) {
    double d = 1.0;
    for (int f : g.edge_neighbors(b)) {
      d += p[f] * (prob.tau[b] + e1 * prob.tau[f]);
    }
    denom[b] = d;
    K[b] = p[b] / d;
  }

  const SpectralInfo si = spectral_info(g, K);
  const Eigen::VectorXd& u = si.fiedler;

  SparsifyGradient out;
  out.degenerate = si.gap <= 1e-8;
  out.grad = (-prob.omega) * prob.tau;
  for (int b = 0; b < g.edge_count(); ++b) {
    const auto& [i, j] = g.edge(b);
    const double du = u[i] - u[j];
    const double sens = du * du;  // d lambda2 / d K_b
    if (sens == 0.0) continue;
    const double inv = 1.0 / denom[b];
    for (int a : g.edge_neighbors(b)) {
      double dK = -p[b] * (prob.tau[b] + e1 * prob.tau[a]) * inv * inv;
      if (a == b) dK += inv;
      out.grad[a] += sens * dK;
    }
  }
  return out;
}

struct SparsifyResult {
  Eigen::VectorXd p;
  double objective = 0.0;
  std::vector<double> history;  // J after each accepted iterate, [0] = J(p0)
  int iterations = 0;
  bool converged = false;  // projected-gradient norm reached tol
};

// Projected gradient ascent over the box [0, cap] with backtracking line
// search: halve from step 1.0 until
//   J(p') >= J(p) + 1e-4 * <grad, p' - p>,  p' = project(p + alpha grad).
// Near-multiple lambda2 halves the starting step. Stops when the
// projected-gradient norm (unit-step gradient mapping) falls below tol.
inline SparsifyResult sparsify_optimize(const SparsifyProblem& prob,
                                        const Eigen::VectorXd& p0,
                                        int max_iters = 200,
                                        double tol = 1e-7) {
  prob.validate();
  detail::check_intensities(prob, p0);
  if (max_iters < 0) throw std::invalid_argument("sparsify: max_iters < 0");

  auto project = [&](const Eigen::VectorXd& q) {
    Eigen::VectorXd out = q.cwiseMax(0.0);
    if (prob.p_cap.size() != 0) out = out.cwiseMin(prob.p_cap);
    return out;
  };

  SparsifyResult res;
  res.p = project(p0);
  res.objective = sparsify_objective(prob, res.p);
  res.history.push_back(res.objective);

  for (int it = 0; it < max_iters; ++it) {
    const SparsifyGradient sg = sparsify_gradient(prob, res.p);
    const Eigen::VectorXd mapped = project(res.p + sg.grad) - res.p;
    if (mapped.norm() <= tol) {
      res.converged = true;
      break;
    }
    double alpha = sg.degenerate ? 0.5 : 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 50; ++bt) {
      const Eigen::VectorXd trial = project(res.p + alpha * sg.grad);
      const double gain = sg.grad.dot(trial - res.p);
      if (gain <= 0.0) break;  // box boundary blocks every ascent direction
      const double j_trial = sparsify_objective(prob, trial);
      if (j_trial >= res.objective + 1e-4 * gain) {
        res.p = trial;
        res.objective = j_trial;
        res.history.push_back(j_trial);
        res.iterations = it + 1;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;  // no admissible step; treat as converged-in-practice
  }
  return res;
}

// Weight making the two objective terms comparable at the starting point:
//   omega = 0.5 * lambda2(Lap(K(p0))) / sum_e p0_e tau_e.
inline double default_omega(const Graph& g, const Eigen::VectorXd& tau,
                            const Eigen::VectorXd& p0) {
  SparsifyProblem prob{g, tau, 0.0, {}};
  prob.validate();
  detail::check_intensities(prob, p0);
  const double budget = p0.dot(tau);
  if (!(budget > 0.0)) {
    throw std::invalid_argument("sparsify: p0 must carry positive budget");
  }
  const Eigen::VectorXd K = gossip_step_sizes(g, DelayProfile{tau, {}}, p0);
  return 0.5 * lambda2(g, K) / budget;
}

struct PrunedGraph {
  Graph graph;
  Eigen::VectorXd p;            // intensities of the kept edges
  std::vector<int> kept_edges;  // original edge ids, ascending
};

// Drop edges whose intensity fell below the threshold. Refuses to
// disconnect: certified rates need a connected graph.
inline PrunedGraph prune_graph(const Graph& g, const Eigen::VectorXd& p,
                               double threshold = 1e-6) {
  if (p.size() != g.edge_count()) {
    throw std::invalid_argument("prune: intensity count mismatch");
  }
  std::vector<std::pair<int, int>> kept;
  std::vector<int> ids;
  for (int e = 0; e < g.edge_count(); ++e) {
    if (p[e] >= threshold) {
      kept.push_back({g.edge(e).u, g.edge(e).v});
      ids.push_back(e);
    }
  }
  if (kept.empty()) {
    throw std::invalid_argument("prune: would remove every edge");
  }
  Graph pruned(g.node_count(), kept);  // throws if disconnected
  PrunedGraph out{std::move(pruned), Eigen::VectorXd(ids.size()), ids};
  for (std::size_t k = 0; k < ids.size(); ++k) out.p[k] = p[ids[k]];
  return out;
}

}  // namespace delnet
