#pragma once

// Undirected communication graphs and their spectral quantities.
//
// Edges are stored canonically as (min, max) pairs and indexed densely;
// per-edge data (delays, intensities, step sizes) lives in vectors aligned
// with that indexing. All spectral operations use a dense symmetric
// eigendecomposition: every target instance in this library is desk scale.

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace delnet {

struct Edge {
  int u;  // u < v
  int v;
};

class Graph {
 public:
  // Inert placeholder so graph-holding structs can be built field by field;
  // any real use is rejected by the consumers' validation.
  Graph() = default;

  Graph(int node_count, const std::vector<std::pair<int, int>>& edge_list)
      : n_(node_count) {
    if (node_count < 2) {
      throw std::invalid_argument("graph: need at least 2 nodes");
    }
    std::set<std::pair<int, int>> seen;
    edges_.reserve(edge_list.size());
    for (const auto& [a, b] : edge_list) {
      if (a < 0 || b < 0 || a >= n_ || b >= n_) {
        throw std::invalid_argument("graph: edge endpoint out of range");
      }
      if (a == b) {
        throw std::invalid_argument("graph: self-loops are not allowed");
      }
      const auto e = std::minmax(a, b);
      if (!seen.insert(e).second) {
        throw std::invalid_argument("graph: duplicate edge");
      }
      edges_.push_back({e.first, e.second});
    }
    incident_.assign(n_, {});
    for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
      incident_[edges_[e].u].push_back(e);
      incident_[edges_[e].v].push_back(e);
    }
    if (!is_connected()) {
      throw std::invalid_argument("graph: not connected");
    }
    edge_neighbors_.resize(edges_.size());
    for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
      auto& nb = edge_neighbors_[e];
      nb = incident_[edges_[e].u];
      nb.insert(nb.end(), incident_[edges_[e].v].begin(),
                incident_[edges_[e].v].end());
      std::sort(nb.begin(), nb.end());
      nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }
  }

  int node_count() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_[e]; }

  // Edge ids incident to a node, ascending.
  const std::vector<int>& incident_edges(int node) const {
    return incident_[node];
  }

  // Edge ids sharing at least one endpoint with e; includes e itself.
  const std::vector<int>& edge_neighbors(int e) const {
    return edge_neighbors_[e];
  }

  int degree(int node) const { return static_cast<int>(incident_[node].size()); }

  // Dense id of the edge joining a and b, or -1 if absent.
  int edge_index(int a, int b) const {
    const auto [lo, hi] = std::minmax(a, b);
    for (int e : incident_[lo]) {
      if (edges_[e].u == lo && edges_[e].v == hi) return e;
    }
    return -1;
  }

  int other_end(int e, int node) const {
    return edges_[e].u == node ? edges_[e].v : edges_[e].u;
  }

 private:
  bool is_connected() const {
    std::vector<char> vis(n_, 0);
    std::queue<int> q;
    q.push(0);
    vis[0] = 1;
    int count = 1;
    while (!q.empty()) {
      const int a = q.front();
      q.pop();
      for (int e : incident_[a]) {
        const int b = other_end(e, a);
        if (!vis[b]) {
          vis[b] = 1;
          ++count;
          q.push(b);
        }
      }
    }
    return count == n_;
  }

  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> incident_;
  std::vector<std::vector<int>> edge_neighbors_;
};

// Per-edge communication delays plus optional per-node computation delays.
// comp may be empty when the model has no computation clocks.
struct DelayProfile {
  Eigen::VectorXd edge;
  Eigen::VectorXd comp;

  void validate(const Graph& g) const {
    if (edge.size() != g.edge_count()) {
      throw std::invalid_argument("delays: edge delay count mismatch");
    }
    if (comp.size() != 0 && comp.size() != g.node_count()) {
      throw std::invalid_argument("delays: computation delay count mismatch");
    }
    for (int e = 0; e < edge.size(); ++e) {
      if (!(edge[e] >= 0.0) || !std::isfinite(edge[e])) {
        throw std::invalid_argument("delays: edge delays must be finite, >= 0");
      }
    }
    for (int i = 0; i < comp.size(); ++i) {
      if (!(comp[i] >= 0.0) || !std::isfinite(comp[i])) {
        throw std::invalid_argument(
            "delays: computation delays must be finite, >= 0");
      }
    }
  }

  double comp_delay(int node) const {
    return comp.size() == 0 ? 0.0 : comp[node];
  }

  // Largest delay incident to node i: the window length of its
  // per-node communication budget.
  double node_comm_delay(const Graph& g, int node) const {
    double m = 0.0;
    for (int e : g.incident_edges(node)) m = std::max(m, edge[e]);
    return m;
  }

  double max_delay() const {
    double m = 0.0;
    for (int e = 0; e < edge.size(); ++e) m = std::max(m, edge[e]);
    for (int i = 0; i < comp.size(); ++i) m = std::max(m, comp[i]);
    return m;
  }
};

// Weighted Laplacian: off-diagonal (i,j) = -w_e, diagonal = sum of incident.
inline Eigen::MatrixXd laplacian(const Graph& g, const Eigen::VectorXd& w) {
  if (w.size() != g.edge_count()) {
    throw std::invalid_argument("laplacian: weight count mismatch");
  }
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(g.node_count(), g.node_count());
  for (int e = 0; e < g.edge_count(); ++e) {
    const auto& [i, j] = g.edge(e);
    L(i, i) += w[e];
    L(j, j) += w[e];
    L(i, j) -= w[e];
    L(j, i) -= w[e];
  }
  return L;
}

struct SpectralInfo {
  double lambda2 = 0.0;        // second-smallest eigenvalue
  double lambda_max = 0.0;
  Eigen::VectorXd fiedler;     // unit eigenvector for lambda2
  double gap = 0.0;            // lambda3 - lambda2
};

// Full eigendecomposition of the weighted Laplacian. Tiny negative
// eigenvalues from roundoff are clamped to zero.
inline SpectralInfo spectral_info(const Graph& g, const Eigen::VectorXd& w) {
  const Eigen::MatrixXd L = laplacian(g, w);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("spectral_info: eigensolver failed");
  }
  SpectralInfo out;
  const auto& ev = es.eigenvalues();  // ascending
  out.lambda2 = std::max(0.0, ev[1]);
  out.lambda_max = std::max(0.0, ev[ev.size() - 1]);
  out.fiedler = es.eigenvectors().col(1);
  out.gap = ev.size() > 2 ? ev[2] - ev[1] : std::numeric_limits<double>::infinity();
  return out;
}

// Algebraic connectivity of the weighted graph; zero iff the subgraph of
// positively weighted edges is disconnected.
inline double lambda2(const Graph& g, const Eigen::VectorXd& w) {
  return spectral_info(g, w).lambda2;
}

inline double spectral_radius(const Graph& g, const Eigen::VectorXd& w) {
  return spectral_info(g, w).lambda_max;
}

// Worst-case end-to-end latency: computation delays at both endpoints plus
// the delay-weighted shortest path, maximised over all node pairs.
inline double time_diameter(const Graph& g, const DelayProfile& d) {
  d.validate(g);
  const int n = g.node_count();
  double best = 0.0;
  std::vector<double> dist(n);
  using Item = std::pair<double, int>;
  for (int s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(),
              std::numeric_limits<double>::infinity());
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    dist[s] = 0.0;
    pq.push({0.0, s});
    while (!pq.empty()) {
      const auto [du, a] = pq.top();
      pq.pop();
      if (du > dist[a]) continue;
      for (int e : g.incident_edges(a)) {
        const int b = g.other_end(e, a);
        const double nd = du + d.edge[e];
        if (nd < dist[b]) {
          dist[b] = nd;
          pq.push({nd, b});
        }
      }
    }
    for (int t = 0; t < n; ++t) {
      best = std::max(best, d.comp_delay(s) + d.comp_delay(t) + dist[t]);
    }
  }
  return best;
}

// Base graph extended with one virtual node per real node, joined by a
// virtual edge. Virtual edges model local computations as communications
// on the extended topology.
struct AugmentedGraph {
  Graph full;                          // 2n nodes, |E| + n edges
  std::vector<int> base_edge_index;    // base edge id -> edge id in `full`
  std::vector<int> virtual_edge_index; // node i -> edge id of (i, i + n)
  Eigen::VectorXd edge_delay;          // per full-graph edge; empty if the
                                       // base profile was not supplied

  int virtual_node(int i) const { return full.node_count() / 2 + i; }
};

inline AugmentedGraph augment(const Graph& g) {
  const int n = g.node_count();
  std::vector<std::pair<int, int>> edges;
  edges.reserve(g.edge_count() + n);
  for (const auto& e : g.edges()) edges.push_back({e.u, e.v});
  for (int i = 0; i < n; ++i) edges.push_back({i, n + i});
  AugmentedGraph out{Graph(2 * n, edges), {}, {}, {}};
  out.base_edge_index.resize(g.edge_count());
  out.virtual_edge_index.resize(n);
  for (int e = 0; e < g.edge_count(); ++e) out.base_edge_index[e] = e;
  for (int i = 0; i < n; ++i) out.virtual_edge_index[i] = g.edge_count() + i;
  return out;
}

// Virtual edges inherit the node's computation delay; base edges keep theirs.
inline AugmentedGraph augment(const Graph& g, const DelayProfile& d) {
  d.validate(g);
  AugmentedGraph out = augment(g);
  out.edge_delay.resize(out.full.edge_count());
  for (int e = 0; e < g.edge_count(); ++e) {
    out.edge_delay[out.base_edge_index[e]] = d.edge[e];
  }
  for (int i = 0; i < g.node_count(); ++i) {
    out.edge_delay[out.virtual_edge_index[i]] = d.comp_delay(i);
  }
  return out;
}

}  // namespace delnet
