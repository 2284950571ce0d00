#pragma once

// A complete instance description: topology, delay bounds, Poisson clock
// intensities, and optional capacity limits. Everything downstream (tuner,
// simulators, gating) consumes this one struct.

#include <cstdint>
#include <limits>
#include <stdexcept>

#include "delnet/graph.hpp"

namespace delnet {

// Capacity limits per Poisson window. A limit of `unbounded` (or an empty
// vector) disables the corresponding constraint family.
struct CapacityProfile {
  static constexpr std::int64_t unbounded =
      std::numeric_limits<std::int64_t>::max();

  std::vector<std::int64_t> edge;       // q_e: messages per edge window
  std::vector<std::int64_t> node_comm;  // q_i: messages a node takes part in
  std::vector<std::int64_t> node_comp;  // q_i: local computations

  bool any_bounded() const {
    auto bounded = [](const std::vector<std::int64_t>& v) {
      for (auto q : v)
        if (q != unbounded) return true;
      return false;
    };
    return bounded(edge) || bounded(node_comm) || bounded(node_comp);
  }

  std::int64_t edge_cap(int e) const {
    return edge.empty() ? unbounded : edge[e];
  }
  std::int64_t node_comm_cap(int i) const {
    return node_comm.empty() ? unbounded : node_comm[i];
  }
  std::int64_t node_comp_cap(int i) const {
    return node_comp.empty() ? unbounded : node_comp[i];
  }

  void validate(const Graph& g) const {
    if (!edge.empty() && static_cast<int>(edge.size()) != g.edge_count()) {
      throw std::invalid_argument("capacities: edge cap count mismatch");
    }
    if (!node_comm.empty() &&
        static_cast<int>(node_comm.size()) != g.node_count()) {
      throw std::invalid_argument("capacities: node comm cap count mismatch");
    }
    if (!node_comp.empty() &&
        static_cast<int>(node_comp.size()) != g.node_count()) {
      throw std::invalid_argument("capacities: node comp cap count mismatch");
    }
    auto positive = [](const std::vector<std::int64_t>& v, const char* what) {
      for (auto q : v) {
        if (q < 1) throw std::invalid_argument(std::string(what) + " cap < 1");
      }
    };
    positive(edge, "capacities: edge");
    positive(node_comm, "capacities: node comm");
    positive(node_comp, "capacities: node comp");
  }
};

struct NetworkSpec {
  Graph graph;
  DelayProfile delays;
  Eigen::VectorXd comm_intensity;  // per edge, > 0
  Eigen::VectorXd comp_intensity;  // per node, >= 0; empty when unused
  CapacityProfile caps;

  bool has_comp_clocks() const {
    return comp_intensity.size() != 0 && comp_intensity.maxCoeff() > 0.0;
  }

  double comp_rate(int i) const {
    return comp_intensity.size() == 0 ? 0.0 : comp_intensity[i];
  }

  // Largest delay that can separate a read from its write.
  double tau_max() const { return delays.max_delay(); }

  void validate() const {
    if (graph.node_count() < 2) {
      throw std::invalid_argument("network: graph not set");
    }
    delays.validate(graph);
    caps.validate(graph);
    if (comm_intensity.size() != graph.edge_count()) {
      throw std::invalid_argument("network: comm intensity count mismatch");
    }
    for (int e = 0; e < comm_intensity.size(); ++e) {
      if (!(comm_intensity[e] > 0.0) || !std::isfinite(comm_intensity[e])) {
        throw std::invalid_argument(
            "network: comm intensities must be finite, > 0");
      }
    }
    if (comp_intensity.size() != 0 &&
        comp_intensity.size() != graph.node_count()) {
      throw std::invalid_argument("network: comp intensity count mismatch");
    }
    for (int i = 0; i < comp_intensity.size(); ++i) {
      if (!(comp_intensity[i] >= 0.0) || !std::isfinite(comp_intensity[i])) {
        throw std::invalid_argument(
            "network: comp intensities must be finite, >= 0");
      }
    }
  }
};

}  // namespace delnet
