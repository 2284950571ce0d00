#pragma once

// Shared event loop for pure jump processes. A model owns the state and
// applies accepted events; the driver owns time: it advances the weighted
// accumulators segment by segment (the state is constant between events),
// emits samples, counts events and energy, watches for divergence, and
// triggers history pruning.
//
// Sample convention: the value recorded at sample time s is the state after
// every event with time <= s and before any later event.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "delnet/ppp.hpp"
#include "delnet/trace.hpp"

namespace delnet::detail {

struct SimOptions {
  std::vector<double> sample_times;        // ascending
  std::optional<double> gamma;             // enables weighted-average metrics
  std::function<double(double)> bound_at;  // optional certified bound curve
  double divergence_factor = 1e12;
  bool record_states = false;
  bool prune_history = true;
};

// Model contract:
//   const Eigen::MatrixXd& state() const
//   double err2() const                  incrementally maintained error
//   double err2_exact() const            full recomputation
//   double err2_of(const Eigen::MatrixXd&) const   error of a given state
//   void resync_err2(double)             reset the incremental value
//   double audit() const                 conserved-quantity drift (relative)
//   void apply(const Event&)             mutate state on an accepted event
//   double event_energy(const Event&)    delay cost of an accepted event
//   double max_delay() const
//   void prune(double before)
//   void extra_sample_metrics(Trace&)    append model-specific series values
template <class Model, class Event>
Trace run_jump_process(Model& model, const std::vector<Event>& events,
                       const SimOptions& opt) {
  Trace trace;
  trace.times = opt.sample_times;

  const double err2_0 = model.err2_exact();
  const double div_threshold =
      opt.divergence_factor *
      std::max(err2_0, std::numeric_limits<double>::min());

  std::optional<ExpWeightedScalar> err_avg;
  std::optional<ExpWeightedState> state_avg;
  if (opt.gamma) {
    err_avg.emplace(*opt.gamma);
    state_avg.emplace(*opt.gamma, model.state());
  }

  std::int64_t attempted = 0;
  std::int64_t accepted = 0;
  double energy = 0.0;
  double cursor = 0.0;
  double max_gap = 0.0;
  std::size_t next_sample = 0;
  std::int64_t since_prune = 0;

  auto emit_sample = [&](double s) {
    const double e2 = model.err2_exact();
    model.resync_err2(e2);
    trace.at("err2").push_back(e2);
    trace.at("energy").push_back(energy);
    trace.at("updates_attempted").push_back(static_cast<double>(attempted));
    trace.at("updates_accepted").push_back(static_cast<double>(accepted));
    trace.at("conserved_audit").push_back(model.audit());
    if (err_avg) {
      // Bring both averages up to s exactly before reading them.
      err_avg->advance(cursor, s, model.err2());
      state_avg->advance(cursor, s, model.state());
      cursor = s;
      trace.at("ewint").push_back(err_avg->average());
      const Eigen::MatrixXd avg = state_avg->average();
      trace.at("ewa_err2").push_back(model.err2_of(avg));
    }
    if (opt.bound_at) trace.at("bound_rhs").push_back(opt.bound_at(s));
    if (opt.record_states) trace.sampled_states.push_back(model.state());
    model.extra_sample_metrics(trace);
  };

  auto advance_to = [&](double t) {
    if (err_avg && t > cursor) {
      err_avg->advance(cursor, t, model.err2());
      state_avg->advance(cursor, t, model.state());
    }
    if (t > cursor) cursor = t;
  };

  double prev_time = 0.0;
  for (const auto& ev : events) {
    if (ev.time < prev_time) {
      throw std::invalid_argument("run: event times must be non-decreasing");
    }
    max_gap = std::max(max_gap, ev.time - prev_time);
    prev_time = ev.time;

    while (next_sample < opt.sample_times.size() &&
           opt.sample_times[next_sample] < ev.time) {
      const double s = opt.sample_times[next_sample];
      advance_to(s);
      emit_sample(s);
      ++next_sample;
    }
    advance_to(ev.time);

    ++attempted;
    if (ev.accepted) {
      ++accepted;
      energy += model.event_energy(ev);
      model.apply(ev);

      const double e2 = model.err2();
      if (!std::isfinite(e2) || e2 > div_threshold) {
        trace.diverged = true;
        trace.diverged_at = ev.time;
        trace.note = std::isfinite(e2)
                         ? "run aborted: squared error exceeded " +
                               std::to_string(opt.divergence_factor) +
                               " times its initial value"
                         : "run aborted: non-finite state";
        break;
      }
    }

    if (opt.prune_history && ++since_prune >= 4096) {
      since_prune = 0;
      const double margin = model.max_delay() + 2.0 * max_gap;
      model.prune(ev.time - margin);
    }
  }

  if (!trace.diverged) {
    while (next_sample < opt.sample_times.size()) {
      const double s = opt.sample_times[next_sample];
      advance_to(s);
      emit_sample(s);
      ++next_sample;
    }
  } else {
    // Keep only the samples that were actually reached.
    trace.times.resize(trace.get("err2").size());
    for (auto& entry : trace.series) {
      entry.second.resize(trace.times.size());
    }
  }

  trace.final_state = model.state();
  return trace;
}

}  // namespace delnet::detail
