#pragma once

// Experiment configuration: a strict JSON schema and builders turning it
// into the concrete objects the runner consumes. Unknown keys anywhere are
// rejected so a typo cannot silently fall back to a default. Every run is a
// pure function of (config, seed).

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "delnet/graph.hpp"
#include "delnet/network.hpp"
#include "delnet/problems.hpp"
#include "delnet/rng.hpp"
#include "delnet/tuning.hpp"

namespace delnet {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

using Json = nlohmann::json;

[[noreturn]] inline void config_fail(const std::string& where,
                                     const std::string& what) {
  throw ConfigError(where + ": " + what);
}

inline void require_object(const Json& j, const std::string& where,
                           std::initializer_list<const char*> allowed) {
  if (!j.is_object()) config_fail(where, "expected an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed) {
      if (item.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) config_fail(where, "unknown key '" + item.key() + "'");
  }
}

inline const Json* find(const Json& j, const char* key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

inline double get_number(const Json& j, const std::string& where) {
  if (!j.is_number()) config_fail(where, "expected a number");
  return j.get<double>();
}

inline int get_int(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) config_fail(where, "expected an integer");
  return j.get<int>();
}

inline std::uint64_t get_seed(const Json& j, const std::string& where) {
  if (!j.is_number_unsigned() && !j.is_number_integer()) {
    config_fail(where, "expected a seed integer");
  }
  const auto v = j.get<std::int64_t>();
  if (v < 0) config_fail(where, "seed must be >= 0");
  return static_cast<std::uint64_t>(v);
}

inline bool get_bool(const Json& j, const std::string& where) {
  if (!j.is_boolean()) config_fail(where, "expected a boolean");
  return j.get<bool>();
}

inline std::string get_string(const Json& j, const std::string& where) {
  if (!j.is_string()) config_fail(where, "expected a string");
  return j.get<std::string>();
}

inline std::vector<double> get_number_list(const Json& j,
                                           const std::string& where) {
  if (!j.is_array()) config_fail(where, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) {
    out.push_back(get_number(j[k], where + "[" + std::to_string(k) + "]"));
  }
  return out;
}

// Scalar broadcast or explicit per-entry list.
inline Eigen::VectorXd get_broadcast(const Json& j, int count,
                                     const std::string& where) {
  if (j.is_number()) {
    return Eigen::VectorXd::Constant(count, get_number(j, where));
  }
  const std::vector<double> v = get_number_list(j, where);
  if (static_cast<int>(v.size()) != count) {
    config_fail(where, "expected " + std::to_string(count) + " entries, got " +
                           std::to_string(v.size()));
  }
  return Eigen::Map<const Eigen::VectorXd>(v.data(), count);
}

}  // namespace detail

enum class Algorithm { gossip, ddo, ode, sparsify };
enum class RunMode { oracle, protocol };

struct GraphSpec {
  std::string kind;  // ring | line | star | grid | erdos_renyi | edges
  int n = 0;
  int rows = 0, cols = 0;
  double prob = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::pair<int, int>> edges;

  Graph build() const {
    if (kind == "ring") return make_ring(n);
    if (kind == "line") return make_line(n);
    if (kind == "star") return make_star(n);
    if (kind == "grid") return make_grid(rows, cols);
    if (kind == "erdos_renyi") return make_erdos_renyi(n, prob, seed);
    return Graph(n, edges);  // kind == "edges", validated at parse time
  }
};

struct DelaySpec {
  std::string kind;  // constant | explicit | mixture
  double value = 0.0;
  std::vector<double> edge;
  DelayMixture mixture;
  std::uint64_t seed = 0;

  bool has_comp = false;  // computation delays, ddo only
  double comp_value = 0.0;
  std::vector<double> comp;

  Eigen::VectorXd build_edge(const Graph& g) const {
    if (kind == "constant") {
      return Eigen::VectorXd::Constant(g.edge_count(), value);
    }
    if (kind == "mixture") return sample_edge_delays(g, mixture, seed);
    if (static_cast<int>(edge.size()) != g.edge_count()) {
      throw ConfigError("delays.edge: expected one delay per edge");
    }
    return Eigen::Map<const Eigen::VectorXd>(
        edge.data(), static_cast<int>(edge.size()));
  }

  Eigen::VectorXd build_comp(const Graph& g) const {
    if (!has_comp) return {};
    if (!comp.empty()) {
      if (static_cast<int>(comp.size()) != g.node_count()) {
        throw ConfigError("delays.comp: expected one delay per node");
      }
      return Eigen::Map<const Eigen::VectorXd>(
          comp.data(), static_cast<int>(comp.size()));
    }
    return Eigen::VectorXd::Constant(g.node_count(), comp_value);
  }
};

struct IntensitySpec {
  std::string kind = "inverse_delay";  // inverse_delay | explicit | capacity
  std::vector<double> edge;
  std::vector<double> comp;
};

struct CapacitySpec {
  // Empty vectors mean unbounded; parse fills them from scalars or lists.
  std::vector<std::int64_t> edge;
  std::vector<std::int64_t> node_comm;
  std::vector<std::int64_t> node_comp;

  CapacityProfile build() const { return {edge, node_comm, node_comp}; }
  bool any() const {
    return !edge.empty() || !node_comm.empty() || !node_comp.empty();
  }
};

struct InitSpec {
  std::string kind = "zero";  // zero | dirac | gaussian | explicit
  int dim = 1;
  int node = 0;        // dirac
  double value = 1.0;  // dirac
  std::optional<std::uint64_t> seed;     // gaussian: fixed across runs if set
  std::vector<std::vector<double>> rows;  // explicit

  Eigen::MatrixXd build(const Graph& g, std::uint64_t run_seed) const {
    const int n = g.node_count();
    if (kind == "zero") return Eigen::MatrixXd::Zero(n, dim);
    if (kind == "dirac") {
      Eigen::MatrixXd x0 = Eigen::MatrixXd::Zero(n, dim);
      x0.row(node).setConstant(value);
      return x0;
    }
    if (kind == "gaussian") {
      auto stream =
          make_stream(seed ? *seed : run_seed, StreamKind::initial_state, 0);
      Eigen::MatrixXd x0(n, dim);
      for (int i = 0; i < n; ++i) {
        for (int c = 0; c < dim; ++c) x0(i, c) = stream.next_normal();
      }
      return x0;
    }
    Eigen::MatrixXd x0(n, dim);  // kind == "explicit", shape checked at parse
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < dim; ++c) x0(i, c) = rows[i][c];
    }
    return x0;
  }
};

struct LocalsSpec {
  std::string kind = "generate";  // generate | quadratic
  int dim = 1;
  double sigma = 1.0, L = 1.0;
  std::uint64_t seed = 0;
  std::vector<double> a;                  // quadratic: curvature per node
  std::vector<std::vector<double>> c;     // quadratic: center per node

  std::vector<QuadraticLocal> build(const Graph& g) const {
    if (kind == "generate") {
      return gen_quadratics(g.node_count(), dim, sigma, L, seed);
    }
    if (static_cast<int>(a.size()) != g.node_count()) {
      throw ConfigError("locals: expected one local objective per node");
    }
    const double sig = *std::min_element(a.begin(), a.end());
    std::vector<QuadraticLocal> out;
    out.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      out.emplace_back(
          a[i],
          Eigen::Map<const Eigen::VectorXd>(c[i].data(),
                                            static_cast<int>(c[i].size())),
          sig);
    }
    return out;
  }

  double strong_convexity() const {
    return kind == "generate" ? sigma
                              : *std::min_element(a.begin(), a.end());
  }
  double smoothness() const {
    return kind == "generate" ? L : *std::max_element(a.begin(), a.end());
  }
};

struct HorizonSpec {
  std::string kind = "absolute";  // absolute | per_gamma
  double value = 0.0;

  double resolve(double gamma) const {
    if (kind == "absolute") return value;
    if (!(gamma > 0.0)) {
      throw ConfigError("horizon: per_gamma needs a positive certified rate");
    }
    return value / gamma;
  }
};

struct SampleSpec {
  int count = 0;                // linear grid on [0, horizon] when set
  std::vector<double> times;    // explicit grid otherwise

  std::vector<double> resolve(double horizon) const {
    if (!times.empty()) return times;
    std::vector<double> out;
    out.reserve(count);
    for (int k = 0; k < count; ++k) {
      out.push_back(horizon * static_cast<double>(k) /
                    static_cast<double>(count - 1));
    }
    return out;
  }
};

struct TunerSpec {
  double safety = kGammaSafety;
  std::optional<double> gamma_override;
  bool dual_consistent_scaling = false;
  bool count_all_points = false;
};

struct ExperimentConfig {
  std::string name = "experiment";
  Algorithm algorithm = Algorithm::gossip;
  GraphSpec graph;
  DelaySpec delays;
  IntensitySpec intensities;
  CapacitySpec capacity;
  InitSpec x0;
  LocalsSpec locals;
  HorizonSpec horizon;
  SampleSpec samples;
  std::vector<std::uint64_t> seeds = {0};
  TunerSpec tuner;
  RunMode mode = RunMode::oracle;
  double tau_ping = 0.0;         // protocol mode: per-edge ping bound
  double omega = -1.0;           // sparsify weight; < 0 picks the default
  double prune_threshold = 1e-4;
  double ode_dt = 0.0;           // 0 picks the certified default

  // The full network instance, independent of the per-run seed.
  NetworkSpec build_network() const {
    NetworkSpec net;
    net.graph = graph.build();
    net.delays.edge = delays.build_edge(net.graph);
    net.delays.comp = delays.build_comp(net.graph);
    net.caps = capacity.build();
    if (intensities.kind == "inverse_delay") {
      net.comm_intensity = net.delays.edge.cwiseInverse();
      if (net.delays.comp.size() != 0) {
        net.comp_intensity = net.delays.comp.cwiseInverse();
      }
    } else if (intensities.kind == "capacity") {
      const CapacityIntensities ci =
          max_capacity_intensities(net.graph, net.delays, net.caps);
      net.comm_intensity = ci.comm;
      net.comp_intensity = ci.comp;
    } else {
      net.comm_intensity = Eigen::Map<const Eigen::VectorXd>(
          intensities.edge.data(), static_cast<int>(intensities.edge.size()));
      if (!intensities.comp.empty()) {
        net.comp_intensity = Eigen::Map<const Eigen::VectorXd>(
            intensities.comp.data(),
            static_cast<int>(intensities.comp.size()));
      }
    }
    net.validate();
    return net;
  }
};

namespace detail {

inline GraphSpec parse_graph(const Json& j) {
  require_object(j, "graph",
                 {"kind", "n", "rows", "cols", "prob", "seed", "edges"});
  GraphSpec out;
  const Json* kind = find(j, "kind");
  if (!kind) config_fail("graph", "missing 'kind'");
  out.kind = get_string(*kind, "graph.kind");
  if (out.kind == "ring" || out.kind == "line" || out.kind == "star" ||
      out.kind == "erdos_renyi") {
    const Json* n = find(j, "n");
    if (!n) config_fail("graph", "missing 'n'");
    out.n = get_int(*n, "graph.n");
  } else if (out.kind == "grid") {
    const Json* rows = find(j, "rows");
    const Json* cols = find(j, "cols");
    if (!rows || !cols) config_fail("graph", "grid needs 'rows' and 'cols'");
    out.rows = get_int(*rows, "graph.rows");
    out.cols = get_int(*cols, "graph.cols");
  } else if (out.kind == "edges") {
    const Json* edges = find(j, "edges");
    if (!edges || !edges->is_array() || edges->empty()) {
      config_fail("graph", "explicit graph needs a non-empty 'edges' array");
    }
    int max_node = 0;
    for (std::size_t k = 0; k < edges->size(); ++k) {
      const Json& pair = (*edges)[k];
      const std::string where = "graph.edges[" + std::to_string(k) + "]";
      if (!pair.is_array() || pair.size() != 2) {
        config_fail(where, "expected [u, v]");
      }
      const int u = get_int(pair[0], where);
      const int v = get_int(pair[1], where);
      out.edges.push_back({u, v});
      max_node = std::max({max_node, u, v});
    }
    out.n = max_node + 1;
    if (const Json* n = find(j, "n")) out.n = get_int(*n, "graph.n");
  } else {
    config_fail("graph.kind", "unknown graph kind '" + out.kind + "'");
  }
  if (out.kind == "erdos_renyi") {
    const Json* prob = find(j, "prob");
    if (!prob) config_fail("graph", "erdos_renyi needs 'prob'");
    out.prob = get_number(*prob, "graph.prob");
    if (const Json* seed = find(j, "seed")) {
      out.seed = get_seed(*seed, "graph.seed");
    }
  }
  return out;
}

inline DelaySpec parse_delays(const Json& j) {
  require_object(j, "delays", {"kind", "value", "edge", "values", "probs",
                               "seed", "comp", "comp_value"});
  DelaySpec out;
  const Json* kind = find(j, "kind");
  if (!kind) config_fail("delays", "missing 'kind'");
  out.kind = get_string(*kind, "delays.kind");
  if (out.kind == "constant") {
    const Json* value = find(j, "value");
    if (!value) config_fail("delays", "constant delays need 'value'");
    out.value = get_number(*value, "delays.value");
  } else if (out.kind == "explicit") {
    const Json* edge = find(j, "edge");
    if (!edge) config_fail("delays", "explicit delays need 'edge'");
    out.edge = get_number_list(*edge, "delays.edge");
  } else if (out.kind == "mixture") {
    const Json* values = find(j, "values");
    const Json* probs = find(j, "probs");
    if (!values || !probs) {
      config_fail("delays", "mixture needs 'values' and 'probs'");
    }
    out.mixture.values = get_number_list(*values, "delays.values");
    out.mixture.probs = get_number_list(*probs, "delays.probs");
    try {
      out.mixture.validate();
    } catch (const std::invalid_argument& err) {
      config_fail("delays", err.what());
    }
    if (const Json* seed = find(j, "seed")) {
      out.seed = get_seed(*seed, "delays.seed");
    }
  } else {
    config_fail("delays.kind", "unknown delay kind '" + out.kind + "'");
  }
  if (const Json* comp = find(j, "comp")) {
    out.has_comp = true;
    out.comp = get_number_list(*comp, "delays.comp");
  }
  if (const Json* comp_value = find(j, "comp_value")) {
    if (out.has_comp) config_fail("delays", "give 'comp' or 'comp_value'");
    out.has_comp = true;
    out.comp_value = get_number(*comp_value, "delays.comp_value");
  }
  return out;
}

inline IntensitySpec parse_intensities(const Json& j) {
  require_object(j, "intensities", {"kind", "edge", "comp"});
  IntensitySpec out;
  const Json* kind = find(j, "kind");
  if (!kind) config_fail("intensities", "missing 'kind'");
  out.kind = get_string(*kind, "intensities.kind");
  if (out.kind == "explicit") {
    const Json* edge = find(j, "edge");
    if (!edge) config_fail("intensities", "explicit intensities need 'edge'");
    out.edge = get_number_list(*edge, "intensities.edge");
    if (const Json* comp = find(j, "comp")) {
      out.comp = get_number_list(*comp, "intensities.comp");
    }
  } else if (out.kind != "inverse_delay" && out.kind != "capacity") {
    config_fail("intensities.kind", "unknown kind '" + out.kind + "'");
  }
  return out;
}

inline std::vector<std::int64_t> parse_caps(const Json& j, int count,
                                            const std::string& where) {
  std::vector<std::int64_t> out;
  if (j.is_number()) {
    out.assign(count, static_cast<std::int64_t>(get_int(j, where)));
    return out;
  }
  if (!j.is_array() || static_cast<int>(j.size()) != count) {
    config_fail(where, "expected a scalar or " + std::to_string(count) +
                           " entries");
  }
  for (std::size_t k = 0; k < j.size(); ++k) {
    out.push_back(get_int(j[k], where + "[" + std::to_string(k) + "]"));
  }
  return out;
}

inline InitSpec parse_x0(const Json& j) {
  require_object(j, "x0", {"kind", "dim", "node", "value", "seed", "rows"});
  InitSpec out;
  if (const Json* kind = find(j, "kind")) {
    out.kind = get_string(*kind, "x0.kind");
  }
  if (out.kind != "zero" && out.kind != "dirac" && out.kind != "gaussian" &&
      out.kind != "explicit") {
    config_fail("x0.kind", "unknown kind '" + out.kind + "'");
  }
  if (const Json* dim = find(j, "dim")) out.dim = get_int(*dim, "x0.dim");
  if (out.dim < 1) config_fail("x0.dim", "need dim >= 1");
  if (const Json* node = find(j, "node")) {
    out.node = get_int(*node, "x0.node");
  }
  if (const Json* value = find(j, "value")) {
    out.value = get_number(*value, "x0.value");
  }
  if (const Json* seed = find(j, "seed")) {
    out.seed = get_seed(*seed, "x0.seed");
  }
  if (out.kind == "explicit") {
    const Json* rows = find(j, "rows");
    if (!rows || !rows->is_array() || rows->empty()) {
      config_fail("x0", "explicit start needs a non-empty 'rows' array");
    }
    for (std::size_t i = 0; i < rows->size(); ++i) {
      out.rows.push_back(
          get_number_list((*rows)[i], "x0.rows[" + std::to_string(i) + "]"));
      if (out.rows.back().size() != out.rows.front().size()) {
        config_fail("x0.rows", "ragged rows");
      }
    }
    out.dim = static_cast<int>(out.rows.front().size());
  }
  return out;
}

inline LocalsSpec parse_locals(const Json& j) {
  require_object(j, "locals", {"kind", "dim", "sigma", "L", "seed", "a", "c"});
  LocalsSpec out;
  if (const Json* kind = find(j, "kind")) {
    out.kind = get_string(*kind, "locals.kind");
  }
  if (out.kind == "generate") {
    if (const Json* dim = find(j, "dim")) {
      out.dim = get_int(*dim, "locals.dim");
    }
    const Json* sigma = find(j, "sigma");
    const Json* L = find(j, "L");
    if (!sigma || !L) config_fail("locals", "generate needs 'sigma' and 'L'");
    out.sigma = get_number(*sigma, "locals.sigma");
    out.L = get_number(*L, "locals.L");
    if (const Json* seed = find(j, "seed")) {
      out.seed = get_seed(*seed, "locals.seed");
    }
  } else if (out.kind == "quadratic") {
    const Json* a = find(j, "a");
    const Json* c = find(j, "c");
    if (!a || !c) config_fail("locals", "quadratic needs 'a' and 'c'");
    out.a = get_number_list(*a, "locals.a");
    if (!c->is_array() || c->size() != out.a.size()) {
      config_fail("locals.c", "expected one center per curvature");
    }
    for (std::size_t i = 0; i < c->size(); ++i) {
      out.c.push_back(
          get_number_list((*c)[i], "locals.c[" + std::to_string(i) + "]"));
      if (out.c.back().size() != out.c.front().size()) {
        config_fail("locals.c", "ragged centers");
      }
    }
    out.dim = static_cast<int>(out.c.front().size());
  } else {
    config_fail("locals.kind", "unknown kind '" + out.kind + "'");
  }
  return out;
}

inline ExperimentConfig parse_config(const Json& j) {
  require_object(
      j, "config",
      {"name", "algorithm", "graph", "delays", "intensities", "capacity",
       "x0", "locals", "horizon", "samples", "seeds", "tuner", "mode",
       "tau_ping", "omega", "prune_threshold", "ode_dt"});
  ExperimentConfig out;
  if (const Json* name = find(j, "name")) {
    out.name = get_string(*name, "name");
  }

  const Json* algorithm = find(j, "algorithm");
  if (!algorithm) config_fail("config", "missing 'algorithm'");
  const std::string alg = get_string(*algorithm, "algorithm");
  if (alg == "gossip") {
    out.algorithm = Algorithm::gossip;
  } else if (alg == "ddo") {
    out.algorithm = Algorithm::ddo;
  } else if (alg == "ode") {
    out.algorithm = Algorithm::ode;
  } else if (alg == "sparsify") {
    out.algorithm = Algorithm::sparsify;
  } else {
    config_fail("algorithm", "unknown algorithm '" + alg + "'");
  }

  const Json* graph = find(j, "graph");
  if (!graph) config_fail("config", "missing 'graph'");
  out.graph = parse_graph(*graph);

  const Json* delays = find(j, "delays");
  if (!delays) config_fail("config", "missing 'delays'");
  out.delays = parse_delays(*delays);

  if (const Json* intensities = find(j, "intensities")) {
    out.intensities = parse_intensities(*intensities);
  }

  if (const Json* capacity = find(j, "capacity")) {
    require_object(*capacity, "capacity", {"edge", "node_comm", "node_comp"});
    // Counts are resolved against the built graph later; parse as lists or
    // scalars by building the graph once here for the counts.
    const Graph g = out.graph.build();
    if (const Json* edge = find(*capacity, "edge")) {
      out.capacity.edge = parse_caps(*edge, g.edge_count(), "capacity.edge");
    }
    if (const Json* nc = find(*capacity, "node_comm")) {
      out.capacity.node_comm =
          parse_caps(*nc, g.node_count(), "capacity.node_comm");
    }
    if (const Json* np = find(*capacity, "node_comp")) {
      out.capacity.node_comp =
          parse_caps(*np, g.node_count(), "capacity.node_comp");
    }
  }

  if (const Json* x0 = find(j, "x0")) out.x0 = parse_x0(*x0);
  if (const Json* locals = find(j, "locals")) {
    out.locals = parse_locals(*locals);
  } else if (out.algorithm == Algorithm::ddo) {
    config_fail("config", "ddo needs 'locals'");
  }

  const Json* horizon = find(j, "horizon");
  if (out.algorithm != Algorithm::sparsify) {
    if (!horizon) config_fail("config", "missing 'horizon'");
    require_object(*horizon, "horizon", {"kind", "value"});
    if (const Json* kind = find(*horizon, "kind")) {
      out.horizon.kind = get_string(*kind, "horizon.kind");
    }
    if (out.horizon.kind != "absolute" && out.horizon.kind != "per_gamma") {
      config_fail("horizon.kind", "unknown kind '" + out.horizon.kind + "'");
    }
    const Json* value = find(*horizon, "value");
    if (!value) config_fail("horizon", "missing 'value'");
    out.horizon.value = get_number(*value, "horizon.value");
    if (!(out.horizon.value > 0.0)) {
      config_fail("horizon.value", "must be > 0");
    }
  }

  if (const Json* samples = find(j, "samples")) {
    require_object(*samples, "samples", {"count", "times"});
    if (const Json* times = find(*samples, "times")) {
      out.samples.times = get_number_list(*times, "samples.times");
    } else if (const Json* count = find(*samples, "count")) {
      out.samples.count = get_int(*count, "samples.count");
      if (out.samples.count < 2) config_fail("samples.count", "need >= 2");
    } else {
      config_fail("samples", "need 'count' or 'times'");
    }
  } else {
    out.samples.count = 65;
  }

  if (const Json* seeds = find(j, "seeds")) {
    out.seeds.clear();
    if (seeds->is_array()) {
      for (std::size_t k = 0; k < seeds->size(); ++k) {
        out.seeds.push_back(
            get_seed((*seeds)[k], "seeds[" + std::to_string(k) + "]"));
      }
      if (out.seeds.empty()) config_fail("seeds", "need at least one seed");
    } else {
      const int n = get_int(*seeds, "seeds");
      if (n < 1) config_fail("seeds", "need at least one seed");
      for (int s = 0; s < n; ++s) {
        out.seeds.push_back(static_cast<std::uint64_t>(s));
      }
    }
  }

  if (const Json* tuner = find(j, "tuner")) {
    require_object(*tuner, "tuner",
                   {"safety", "gamma_override", "dual_consistent_scaling",
                    "count_all_points"});
    if (const Json* safety = find(*tuner, "safety")) {
      out.tuner.safety = get_number(*safety, "tuner.safety");
      if (!(out.tuner.safety > 0.0) || !(out.tuner.safety < 1.0)) {
        config_fail("tuner.safety", "must lie in (0, 1)");
      }
    }
    if (const Json* go = find(*tuner, "gamma_override")) {
      out.tuner.gamma_override = get_number(*go, "tuner.gamma_override");
    }
    if (const Json* dual = find(*tuner, "dual_consistent_scaling")) {
      out.tuner.dual_consistent_scaling =
          get_bool(*dual, "tuner.dual_consistent_scaling");
    }
    if (const Json* all = find(*tuner, "count_all_points")) {
      out.tuner.count_all_points = get_bool(*all, "tuner.count_all_points");
    }
  }

  if (const Json* mode = find(j, "mode")) {
    const std::string m = get_string(*mode, "mode");
    if (m == "oracle") {
      out.mode = RunMode::oracle;
    } else if (m == "protocol") {
      out.mode = RunMode::protocol;
    } else {
      config_fail("mode", "unknown mode '" + m + "'");
    }
  }
  if (const Json* ping = find(j, "tau_ping")) {
    out.tau_ping = get_number(*ping, "tau_ping");
    if (out.tau_ping < 0.0) config_fail("tau_ping", "must be >= 0");
  }
  if (const Json* omega = find(j, "omega")) {
    out.omega = get_number(*omega, "omega");
    if (!(out.omega >= 0.0)) config_fail("omega", "must be >= 0");
  }
  if (const Json* pt = find(j, "prune_threshold")) {
    out.prune_threshold = get_number(*pt, "prune_threshold");
    if (!(out.prune_threshold > 0.0)) {
      config_fail("prune_threshold", "must be > 0");
    }
  }
  if (const Json* dt = find(j, "ode_dt")) {
    out.ode_dt = get_number(*dt, "ode_dt");
    if (!(out.ode_dt > 0.0)) config_fail("ode_dt", "must be > 0");
  }
  return out;
}

}  // namespace detail

inline ExperimentConfig parse_config_text(const std::string& text) {
  detail::Json j;
  try {
    j = detail::Json::parse(text);
  } catch (const detail::Json::parse_error& err) {
    throw ConfigError(std::string("config: ") + err.what());
  }
  return detail::parse_config(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace delnet
