#pragma once

// Graph, delay, and objective generators shared by tests and presets.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "delnet/ddo.hpp"
#include "delnet/graph.hpp"
#include "delnet/rng.hpp"

namespace delnet {

inline Graph make_ring(int n) {
  if (n < 3) throw std::invalid_argument("ring: need n >= 3");
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
  return Graph(n, edges);
}

inline Graph make_line(int n) {
  if (n < 2) throw std::invalid_argument("line: need n >= 2");
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return Graph(n, edges);
}

// Node 0 is the hub.
inline Graph make_star(int n) {
  if (n < 2) throw std::invalid_argument("star: need n >= 2");
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i < n; ++i) edges.push_back({0, i});
  return Graph(n, edges);
}

// rows x cols lattice, 4-neighbor connectivity, row-major node ids.
inline Graph make_grid(int rows, int cols) {
  if (rows < 1 || cols < 1 || rows * cols < 2) {
    throw std::invalid_argument("grid: need at least two nodes");
  }
  std::vector<std::pair<int, int>> edges;
  auto id = [&](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) edges.push_back({id(r, c), id(r, c + 1)});
      if (r + 1 < rows) edges.push_back({id(r, c), id(r + 1, c)});
    }
  }
  return Graph(rows * cols, edges);
}

// Connected sample by rejection; each attempt consumes fresh draws from the
// same stream, so the result is a deterministic function of the seed.
inline Graph make_erdos_renyi(int n, double edge_prob, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("erdos_renyi: need n >= 2");
  if (!(edge_prob > 0.0) || !(edge_prob <= 1.0)) {
    throw std::invalid_argument("erdos_renyi: need edge probability in (0, 1]");
  }
  auto stream = make_stream(seed, StreamKind::graph, 0);
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (stream.next_unit() < edge_prob) edges.push_back({i, j});
      }
    }
    try {
      return Graph(n, edges);
    } catch (const std::invalid_argument&) {
      // disconnected draw; resample
    }
  }
  throw std::runtime_error("erdos_renyi: no connected sample in 100 attempts");
}

// Finite mixture over positive delay values.
struct DelayMixture {
  std::vector<double> values;
  std::vector<double> probs;

  void validate() const {
    if (values.empty() || values.size() != probs.size()) {
      throw std::invalid_argument("delay mixture: values/probs mismatch");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (!(values[k] > 0.0)) {
        throw std::invalid_argument("delay mixture: values must be > 0");
      }
      if (!(probs[k] >= 0.0)) {
        throw std::invalid_argument("delay mixture: probs must be >= 0");
      }
      total += probs[k];
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw std::invalid_argument("delay mixture: probs must sum to 1");
    }
  }

  double sample(RngStream& stream) const {
    const double u = stream.next_unit();
    double acc = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
      acc += probs[k];
      if (u < acc) return values[k];
    }
    return values.back();
  }
};

// One delay draw per edge, in edge-id order.
inline Eigen::VectorXd sample_edge_delays(const Graph& g,
                                          const DelayMixture& mix,
                                          std::uint64_t seed) {
  mix.validate();
  auto stream = make_stream(seed, StreamKind::delays, 0);
  Eigen::VectorXd tau(g.edge_count());
  for (int e = 0; e < g.edge_count(); ++e) tau[e] = mix.sample(stream);
  return tau;
}

// Local quadratics (a_i/2)||z - c_i||^2 with a_i uniform in [sigma, L] and
// standard normal centers. Every instance is sigma-strongly convex and
// L-smooth by construction.
inline std::vector<QuadraticLocal> gen_quadratics(int n, int d, double sigma,
                                                  double L,
                                                  std::uint64_t seed) {
  if (n < 1 || d < 1) throw std::invalid_argument("quadratics: need n, d >= 1");
  if (!(sigma > 0.0) || !(L >= sigma)) {
    throw std::invalid_argument("quadratics: need 0 < sigma <= L");
  }
  auto stream = make_stream(seed, StreamKind::problem, 0);
  std::vector<QuadraticLocal> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double a = sigma + (L - sigma) * stream.next_unit();
    Eigen::VectorXd c(d);
    for (int k = 0; k < d; ++k) c[k] = stream.next_normal();
    out.emplace_back(a, std::move(c), sigma);
  }
  return out;
}

}  // namespace delnet
