// Smallest possible run: two nodes exchanging delayed pairwise updates,
// with the certified rate and its error bound printed alongside.

#include <cstdio>

#include "delnet/gossip.hpp"
#include "delnet/tuning.hpp"

int main() {
  using namespace delnet;

  NetworkSpec net;
  net.graph = Graph(2, {{0, 1}});
  net.delays = DelayProfile{Eigen::VectorXd::Constant(1, 0.5), {}};
  net.comm_intensity = Eigen::VectorXd::Constant(1, 2.0);

  const TunedParameters tp = tune_gossip(net);
  std::printf("K = %.6f  gamma = %.6f  (limit %.6f, tau_max %.2f)\n",
              tp.comm_step[0], tp.gamma, tp.gamma_limit, tp.tau_max);

  GossipRunConfig cfg;
  cfg.comm_step = tp.comm_step;
  cfg.x0 = Eigen::MatrixXd(2, 1);
  cfg.x0 << 0.0, 1.0;
  cfg.horizon = 80.0;
  cfg.seed = 7;
  cfg.gamma = tp.gamma;
  cfg.tau_max = tp.tau_max;
  for (double t = 0.0; t <= cfg.horizon; t += 8.0) {
    cfg.sample_times.push_back(t);
  }

  const Trace tr = run_gossip(net, cfg);
  std::printf("%10s %14s %14s\n", "time", "err2", "bound");
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    std::printf("%10.2f %14.6e %14.6e\n", tr.times[k], tr.get("err2")[k],
                tr.get("bound_rhs")[k]);
  }
  return 0;
}
