// Command-line entry point: tune parameters, run experiments to CSV and SVG,
// replot recorded traces, race a sparsified instance against the dense one,
// and report the latency diameter of an instance.
//
// Exit codes: 0 success, 2 configuration error, 3 certificate failure,
// 4 divergence.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "delnet/config.hpp"
#include "delnet/csv.hpp"
#include "delnet/runner.hpp"
#include "delnet/svg.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitCertificate = 3;
constexpr int kExitDivergence = 4;

std::string default_out_dir() {
  const char* env = std::getenv("DELNET_OUT");
  return env && *env ? env : ".";
}

// "12" -> seeds 0..11; "3,5,8" -> exactly those.
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  if (text.find(',') == std::string::npos) {
    std::size_t used = 0;
    const long long n = std::stoll(text, &used);
    if (used != text.size() || n < 1) {
      throw delnet::ConfigError("seeds: expected a count or a comma list");
    }
    for (long long s = 0; s < n; ++s) {
      out.push_back(static_cast<std::uint64_t>(s));
    }
    return out;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string tok =
        text.substr(start, comma == std::string::npos ? comma : comma - start);
    std::size_t used = 0;
    const long long s = std::stoll(tok, &used);
    if (used != tok.size() || s < 0) {
      throw delnet::ConfigError("seeds: bad entry '" + tok + "'");
    }
    out.push_back(static_cast<std::uint64_t>(s));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

struct CommonOptions {
  std::string config_path;
  std::string seeds;
  std::string out_dir = default_out_dir();
  std::string mode;
  int workers = 1;
};

delnet::ExperimentConfig load_with_overrides(const CommonOptions& opt) {
  delnet::ExperimentConfig cfg = delnet::load_config(opt.config_path);
  if (!opt.seeds.empty()) cfg.seeds = parse_seeds(opt.seeds);
  if (opt.mode == "oracle") {
    cfg.mode = delnet::RunMode::oracle;
  } else if (opt.mode == "protocol") {
    cfg.mode = delnet::RunMode::protocol;
  } else if (!opt.mode.empty()) {
    throw delnet::ConfigError("mode: expected 'oracle' or 'protocol'");
  }
  return cfg;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

int report_certificate(const delnet::TunedParameters& tp, double gamma) {
  int exit_code = kExitOk;
  std::cout << "lambda2         " << tp.lambda2 << "\n"
            << "tau_max         " << tp.tau_max << "\n"
            << "gamma_limit     " << tp.gamma_limit << "\n"
            << "gamma           " << gamma << "\n"
            << "rho_mean        " << tp.rho_mean
            << (tp.mean_stable ? "  (stable)" : "  (UNSTABLE)") << "\n";
  if (!tp.mean_stable) {
    std::cout << "certificate: mean dynamics not certified stable\n";
    exit_code = kExitCertificate;
  }
  if (gamma * tp.tau_max >= 1.0) {
    std::cout << "certificate: gamma * tau_max = " << gamma * tp.tau_max
              << " >= 1, rate not certified\n";
    exit_code = kExitCertificate;
  }
  if (!tp.capacity.rows.empty()) {
    std::cout << "capacity        "
              << (tp.capacity.feasible ? "feasible" : "INFEASIBLE") << "\n";
    for (const auto& row : tp.capacity.rows) {
      if (!tp.capacity.feasible) {
        std::cout << "  " << row.name << ": sustained " << row.lhs
                  << " vs budget " << row.cap << (row.ok ? "" : "  VIOLATED")
                  << "\n";
      }
    }
    if (!tp.capacity.feasible) exit_code = kExitCertificate;
  }
  return exit_code;
}

int cmd_tune(const CommonOptions& opt) {
  const auto cfg = load_with_overrides(opt);
  const delnet::NetworkSpec net = cfg.build_network();
  delnet::TunedParameters tp;
  if (cfg.algorithm == delnet::Algorithm::ddo) {
    tp = delnet::tune_ddo(net, cfg.locals.strong_convexity(),
                          cfg.locals.smoothness(), cfg.tuner.safety);
  } else {
    tp = delnet::tune_gossip(net, cfg.tuner.safety);
  }
  const double gamma = cfg.tuner.gamma_override.value_or(tp.gamma);

  std::cout << "instance        " << cfg.name << ": "
            << net.graph.node_count() << " nodes, " << net.graph.edge_count()
            << " edges\n";
  std::cout << "comm steps K_e\n";
  for (int e = 0; e < net.graph.edge_count(); ++e) {
    const auto& [u, v] = net.graph.edge(e);
    std::cout << "  (" << u << "," << v << ")  tau " << net.delays.edge[e]
              << "  p " << net.comm_intensity[e] << "  K " << tp.comm_step[e]
              << "\n";
  }
  if (tp.comp_step.size() != 0) {
    std::cout << "comp steps K_i\n";
    for (int i = 0; i < net.graph.node_count(); ++i) {
      std::cout << "  node " << i << "  K " << tp.comp_step[i] << "\n";
    }
  }
  return report_certificate(tp, gamma);
}

delnet::PlotSeries stats_series(const delnet::SeriesStats& st,
                                const std::string& label,
                                const std::vector<double>& xs, bool dashed) {
  delnet::PlotSeries s;
  s.label = label;
  s.x = xs;
  s.y = st.mean;
  if (!dashed) s.band = st.se;
  s.dashed = dashed;
  return s;
}

// x values for the requested axis: the sample grid itself, or the mean
// cumulative budget at each sample.
std::vector<double> axis_values(const std::vector<delnet::SeedRun>& runs,
                                const std::string& axis) {
  if (axis == "time") return runs[0].trace.times;
  const std::string metric = axis == "updates" ? "updates_accepted" : "energy";
  return delnet::aggregate_metric(runs, metric).mean;
}

delnet::PlotPanel result_panel(const delnet::ExperimentResult& res,
                               const std::string& metric,
                               const std::string& axis) {
  delnet::PlotPanel panel;
  panel.title = res.kind + ": " + metric;
  panel.x_label = axis;
  panel.y_label = metric;
  const std::vector<double> xs = axis_values(res.runs, axis);
  panel.series.push_back(
      stats_series(delnet::aggregate_metric(res.runs, metric), metric, xs,
                   false));
  if (metric == "err2" && res.runs[0].trace.has("bound_rhs")) {
    panel.series.push_back(stats_series(
        delnet::aggregate_metric(res.runs, "bound_rhs"), "bound", xs, true));
  }
  return panel;
}

int cmd_run(const CommonOptions& opt, const std::string& axis) {
  const auto cfg = load_with_overrides(opt);
  const auto res = delnet::run_experiment(cfg, opt.workers);

  std::filesystem::create_directories(opt.out_dir);
  const std::string stem = (std::filesystem::path(opt.out_dir) /
                            cfg.name).string();
  write_file(stem + ".csv", delnet::trace_csv_text(res.kind, res.runs));

  const std::string metric =
      res.kind == "sparsify" ? "objective" : "err2";
  delnet::PlotPanel panel = result_panel(res, metric, axis);
  if (res.kind == "sparsify") {
    panel.log_y = false;
    panel.x_label = "iteration";
  }
  write_file(stem + ".svg", delnet::svg_text({panel}));

  std::cout << "wrote " << stem << ".csv and " << stem << ".svg\n";
  int exit_code = kExitOk;
  if (res.kind != "sparsify") {
    exit_code = report_certificate(res.tuned, res.gamma);
    const auto err = delnet::aggregate_metric(res.runs, metric);
    std::cout << "horizon         " << res.horizon << "\n"
              << "seeds           " << res.runs.size() << "\n"
              << "final " << metric << "      " << err.mean.back() << " +- "
              << err.se.back() << "\n";
  } else {
    std::cout << "objective       " << res.runs[0].trace.get("objective").back()
              << " after " << res.sample_times.size() - 1 << " iterations\n";
  }
  if (res.any_diverged) {
    std::cout << "divergence detected; see the trace for the onset time\n";
    return kExitDivergence;
  }
  return exit_code;
}

// One recorded CSV, regrouped for aggregation.
struct LoadedCsv {
  std::string label;
  std::vector<delnet::SeedRun> runs;
};

LoadedCsv load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw delnet::ConfigError("plot: cannot open '" + path + "'");
  const auto rows = delnet::read_trace_csv(in);
  if (rows.empty()) throw delnet::ConfigError("plot: '" + path + "' is empty");

  LoadedCsv out;
  out.label = std::filesystem::path(path).stem().string();
  // Each seed's first metric defines its sample grid; every other series is
  // checked against that length below.
  std::map<std::uint64_t, delnet::Trace> traces;
  std::map<std::uint64_t, std::string> first_metric;
  for (const auto& row : rows) {
    delnet::Trace& tr = traces[row.seed];
    const auto it = first_metric.try_emplace(row.seed, row.metric).first;
    if (it->second == row.metric) tr.times.push_back(row.time);
    tr.series[row.metric].push_back(row.value);
  }
  for (auto& [seed, tr] : traces) {
    for (const auto& [name, values] : tr.series) {
      if (values.size() != tr.times.size()) {
        throw delnet::ConfigError("plot: '" + path +
                                  "' series lengths differ for seed " +
                                  std::to_string(seed));
      }
    }
    out.runs.push_back({seed, std::move(tr)});
  }
  return out;
}

int cmd_plot(const std::vector<std::string>& files, const std::string& metric,
             const std::string& axis, std::string out_path,
             const std::string& out_dir) {
  std::vector<LoadedCsv> loaded;
  loaded.reserve(files.size());
  for (const auto& f : files) loaded.push_back(load_csv(f));
  for (const auto& l : loaded) {
    if (!l.runs[0].trace.has(metric)) {
      throw delnet::ConfigError("plot: '" + l.label + "' has no metric '" +
                                metric + "'");
    }
    if (axis != "time") {
      const std::string budget =
          axis == "updates" ? "updates_accepted" : "energy";
      if (!l.runs[0].trace.has(budget)) {
        throw delnet::ConfigError("plot: '" + l.label + "' has no metric '" +
                                  budget + "' for that axis");
      }
    }
  }

  delnet::PlotPanel panel;
  panel.title = metric;
  panel.x_label = axis;
  panel.y_label = metric;
  for (const auto& l : loaded) {
    const auto xs = axis_values(l.runs, axis);
    panel.series.push_back(stats_series(
        delnet::aggregate_metric(l.runs, metric), l.label, xs, false));
    if (metric == "err2" && l.runs[0].trace.has("bound_rhs")) {
      panel.series.push_back(
          stats_series(delnet::aggregate_metric(l.runs, "bound_rhs"),
                       l.label + " bound", xs, true));
    }
  }
  if (out_path.empty()) {
    std::filesystem::create_directories(out_dir);
    out_path = (std::filesystem::path(out_dir) / "plot.svg").string();
  }
  write_file(out_path, delnet::svg_text({panel}));
  std::cout << "wrote " << out_path << "\n";
  return kExitOk;
}

int cmd_braess(const CommonOptions& opt) {
  const auto cfg = load_with_overrides(opt);
  delnet::BraessReport rep;
  try {
    rep = delnet::run_braess(cfg, opt.workers);
  } catch (const std::invalid_argument& err) {
    // Pruning refused: removing the low-intensity edges would disconnect the
    // graph (or erase it entirely), so there is no sparse instance to race.
    std::cout << "braess: refusing to prune: " << err.what() << "\n";
    return kExitCertificate;
  }

  std::cout << "omega           " << rep.omega << "\n"
            << "edges           " << rep.edges_before << " -> "
            << rep.edges_after << "\n"
            << "objective J     " << rep.j_before << " -> " << rep.j_after
            << "  (improvement " << rep.j_after - rep.j_before << ")\n";
  const auto dense_err = delnet::aggregate_metric(rep.dense.runs, "err2");
  const auto sparse_err = delnet::aggregate_metric(rep.sparse.runs, "err2");
  std::cout << "final err2      dense " << dense_err.mean.back()
            << "  pruned " << sparse_err.mean.back() << "\n";
  const auto count = [](const std::vector<bool>& wins) {
    int n = 0;
    for (bool w : wins) n += w ? 1 : 0;
    return n;
  };
  const int seeds = static_cast<int>(rep.time_win.size());
  std::cout << "pruned wins     time " << count(rep.time_win) << "/" << seeds
            << ", updates " << count(rep.updates_win) << "/" << seeds
            << ", energy " << count(rep.energy_win) << "/" << seeds
            << ", all three " << rep.wins_all << "/" << seeds << "\n";

  std::filesystem::create_directories(opt.out_dir);
  const auto out = [&](const std::string& name) {
    return (std::filesystem::path(opt.out_dir) / name).string();
  };
  write_file(out(cfg.name + "_dense.csv"),
             delnet::trace_csv_text("gossip", rep.dense.runs));
  write_file(out(cfg.name + "_pruned.csv"),
             delnet::trace_csv_text("gossip", rep.sparse.runs));

  std::vector<delnet::PlotPanel> panels;
  for (const std::string axis : {"time", "updates", "energy"}) {
    delnet::PlotPanel panel;
    panel.title = "err2 vs " + axis;
    panel.x_label = axis;
    panel.y_label = "err2";
    panel.series.push_back(stats_series(dense_err, "dense",
                                        axis_values(rep.dense.runs, axis),
                                        false));
    panel.series.push_back(stats_series(sparse_err, "pruned",
                                        axis_values(rep.sparse.runs, axis),
                                        false));
    panels.push_back(std::move(panel));
  }
  write_file(out(cfg.name + "_braess.svg"), delnet::svg_text(panels));
  std::cout << "wrote " << out(cfg.name + "_dense.csv") << ", "
            << out(cfg.name + "_pruned.csv") << ", "
            << out(cfg.name + "_braess.svg") << "\n";

  if (rep.dense.any_diverged || rep.sparse.any_diverged) {
    return kExitDivergence;
  }
  return kExitOk;
}

int cmd_diameter(const CommonOptions& opt) {
  const auto cfg = load_with_overrides(opt);
  const delnet::NetworkSpec net = cfg.build_network();
  std::cout << "D(tau) = " << delnet::time_diameter(net.graph, net.delays)
            << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"asynchronous gossip and decentralized optimization "
               "simulator with delay-aware tuning"};
  app.require_subcommand(1);

  CommonOptions opt;
  std::string axis = "time";
  std::string metric = "err2";
  std::string plot_out;
  std::vector<std::string> csv_files;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", opt.config_path,
                              "experiment configuration (json)");
    if (needs_config) c->required();
    sub->add_option("--seeds", opt.seeds, "seed count N or list s1,s2,...");
    sub->add_option("--out", opt.out_dir,
                    "output directory (default $DELNET_OUT or .)");
    sub->add_option("--mode", opt.mode, "oracle or protocol");
    sub->add_option("--workers", opt.workers, "worker threads");
  };

  auto* tune = app.add_subcommand("tune", "print tuned step sizes and the "
                                          "stability certificate");
  add_common(tune, true);

  auto* run = app.add_subcommand("run", "run the experiment; write CSV + SVG");
  add_common(run, true);
  run->add_option("--x-axis", axis, "time, updates, or energy");

  auto* plot = app.add_subcommand("plot", "replot recorded CSV traces");
  plot->add_option("files", csv_files, "trace CSV files")->required();
  plot->add_option("--metric", metric, "series to plot (default err2)");
  plot->add_option("--x-axis", axis, "time, updates, or energy");
  plot->add_option("--out", plot_out, "output SVG path");

  auto* braess = app.add_subcommand(
      "braess", "sparsify, prune, and race the pruned instance");
  add_common(braess, true);

  auto* diameter = app.add_subcommand(
      "diameter", "largest end-to-end latency over node pairs");
  add_common(diameter, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (axis != "time" && axis != "updates" && axis != "energy") {
    std::cerr << "x-axis: expected time, updates, or energy\n";
    return kExitConfig;
  }

  try {
    if (tune->parsed()) return cmd_tune(opt);
    if (run->parsed()) return cmd_run(opt, axis);
    if (plot->parsed()) {
      return cmd_plot(csv_files, metric, axis, plot_out, opt.out_dir);
    }
    if (braess->parsed()) return cmd_braess(opt);
    if (diameter->parsed()) return cmd_diameter(opt);
  } catch (const delnet::ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return kExitOk;
}
