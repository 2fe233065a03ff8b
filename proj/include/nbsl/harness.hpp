#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "nbsl/chain.hpp"
#include "nbsl/connectivity.hpp"
#include "nbsl/dynamics.hpp"
#include "nbsl/matrix.hpp"
#include "nbsl/rng.hpp"
#include "nbsl/world_model.hpp"

namespace nbsl {

enum class UpdateRule { standard, inertial, diffusion };

inline const char* to_string(UpdateRule r) {
  switch (r) {
    case UpdateRule::standard: return "standard";
    case UpdateRule::inertial: return "inertial";
    case UpdateRule::diffusion: return "diffusion";
  }
  return "?";
}

struct RecordOptions {
  std::size_t beliefs_every = 0;  // 0 = auto: every step for small runs, else every 10
  bool matrices = false;
  bool signals = false;
  bool diagnostics = true;
};

struct AnalysisOptions {
  double gamma = 0.0;            // gamma-epoch scan threshold; 0 disables
  std::size_t epoch_window = 0;  // window length B for the online epoch scan
  std::size_t usc_b = 0;
  double usc_delta = 0.0;
  std::size_t aps_period = 0;
  bool balance = false;
  bool feedback = false;
};

struct Scenario {
  std::string name;
  WorldModel world;
  ChainSpec chain;
  BeliefState priors;
  UpdateRule rule = UpdateRule::standard;
  LambdaSchedule lambda;  // used by the inertial rule
  bool allow_unit_inertia = false;
  std::size_t horizon = 1;
  RecordOptions record;
  AnalysisOptions analysis;

  std::size_t snapshot_stride() const {
    if (record.beliefs_every > 0) return record.beliefs_every;
    return world.agent_count() * world.state_count() <= 256 ? 1 : 10;
  }

  void validate() const {
    if (horizon < 1) throw std::invalid_argument("scenario: horizon must be >= 1");
    if (priors.agent_count() != world.agent_count() ||
        priors.state_count() != world.state_count())
      throw std::invalid_argument("scenario: prior dimensions do not match world");
    if (chain.agent_count() != world.agent_count())
      throw std::invalid_argument("scenario: chain dimension does not match world");
    if (rule == UpdateRule::inertial) {
      if (lambda.cycle.empty())
        throw std::invalid_argument("scenario: inertial rule needs a lambda schedule");
      for (const auto& v : lambda.cycle)
        if (v.size() != world.agent_count())
          throw std::invalid_argument("scenario: lambda size does not match agent count");
      if (!lambda.valid_range())
        throw std::invalid_argument("scenario: lambda outside [0,1]");
      if (lambda.max_value() >= 1.0 && !allow_unit_inertia)
        throw std::invalid_argument(
            "scenario: inertial rule with max lambda >= 1 defeats learning; set "
            "allow_unit_inertia to override");
    }
  }
};

struct MonitorCounts {
  std::size_t row_stochastic = 0;
  std::size_t ratio_bounds = 0;  // closed-form likelihood-ratio expectation bounds
  std::size_t influence = 0;

  std::size_t total() const { return row_stochastic + ratio_bounds + influence; }
};

// Everything recorded from one seeded trial. Identical (scenario, seed) pairs
// produce identical traces bit for bit.
struct TrialTrace {
  std::uint64_t seed = 0;
  std::size_t agents = 0;
  std::size_t states = 0;
  std::size_t true_state = 0;
  std::size_t horizon = 0;

  std::vector<std::size_t> snapshot_times;
  std::vector<BeliefState> beliefs;  // one per snapshot time

  std::vector<StochasticMatrix> matrix_log;           // A(0..horizon-1) when recorded
  std::vector<std::vector<std::size_t>> signal_log;   // signals consumed at each step

  // diagnostics (empty unless record.diagnostics)
  std::vector<double> residual_norm;                  // ||u(t)||_inf, one per step
  std::vector<std::vector<double>> span_by_state;     // per snapshot, per state
  std::vector<std::vector<double>> aps_weighted;      // per snapshot, per state: pi^T mu
  std::vector<double> aps_weighted_log_truth;         // pi^T log mu(theta*), -inf sentinel
  std::vector<double> forecast_error;                 // max_i,s |m_i(s) - l_i(s|theta*)|
  std::vector<std::size_t> epoch_starts;              // certified online epoch windows
  std::optional<std::size_t> initial_connectivity_time;

  double max_row_drift = 0.0;
  MonitorCounts violations;

  const BeliefState& final_beliefs() const { return beliefs.back(); }

  double min_truth_belief_at(std::size_t snapshot) const {
    double m = 1.0;
    for (const auto& row : beliefs[snapshot].rows) m = std::min(m, row[true_state]);
    return m;
  }
};

inline constexpr double kRatioBoundTol = 1e-9;

namespace detail {

inline double weighted_log_belief(std::span<const double> pi, std::span<const double> col) {
  double total = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    if (pi[i] == 0.0) continue;
    if (col[i] <= 0.0) return -std::numeric_limits<double>::infinity();
    total += pi[i] * std::log(col[i]);
  }
  return total;
}

}  // namespace detail

// Runs one seeded trial. Matrices and signals come from independent named
// substreams of the seed, so recording choices never perturb the draws. An
// absolute probability sequence, when supplied, adds the weighted-belief
// diagnostic series.
inline TrialTrace run_trial(const Scenario& scenario, std::uint64_t seed,
                            const ApsSequence* aps = nullptr) {
  scenario.validate();
  const WorldModel& world = scenario.world;
  const std::size_t n = world.agent_count();
  const std::size_t states = world.state_count();
  const std::size_t truth = world.true_state();
  const std::size_t stride = scenario.snapshot_stride();

  RngStream matrix_rng(seed, "matrix");
  RngStream signal_rng(seed, "signal");

  TrialTrace trace;
  trace.seed = seed;
  trace.agents = n;
  trace.states = states;
  trace.true_state = truth;
  trace.horizon = scenario.horizon;

  BeliefState state = scenario.priors;
  state.time = 0;

  const bool diag = scenario.record.diagnostics;
  auto snapshot = [&](const BeliefState& s) {
    trace.snapshot_times.push_back(s.time);
    trace.beliefs.push_back(s);
    if (!diag) return;
    std::vector<double> spans(states);
    for (std::size_t th = 0; th < states; ++th) spans[th] = diff_span(s.state_column(th));
    trace.span_by_state.push_back(std::move(spans));
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t sig = 0; sig < world.signal_count(i); ++sig)
        err = std::max(err, std::abs(one_step_forecast(world, i, s.rows[i], sig) -
                                     world.likelihood(i, truth, sig)));
    trace.forecast_error.push_back(err);
    if (aps) {
      const auto& pi = aps->at(s.time);
      std::vector<double> weighted(states, 0.0);
      for (std::size_t th = 0; th < states; ++th) {
        const std::vector<double> col = s.state_column(th);
        for (std::size_t i = 0; i < n; ++i) weighted[th] += pi[i] * col[i];
      }
      trace.aps_weighted.push_back(std::move(weighted));
      trace.aps_weighted_log_truth.push_back(
          detail::weighted_log_belief(pi, s.state_column(truth)));
    }
    // closed-form ratio-expectation bounds, checked at snapshot times
    const double k0 = 1.0 / world.min_likelihood() - 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& equivalent = world.theta_star_set(i);
      for (std::size_t th = 0; th < states; ++th) {
        const double g = likelihood_ratio_expectation(world, i, s.rows[i], th);
        if (g > k0 + kRatioBoundTol) ++trace.violations.ratio_bounds;
        if (std::binary_search(equivalent.begin(), equivalent.end(), th) &&
            g < -kRatioBoundTol)
          ++trace.violations.ratio_bounds;
      }
    }
  };
  snapshot(state);

  // running first column of A(t:0), for the initial-connectivity time
  std::vector<double> reach(n, 0.0);
  reach[0] = 1.0;
  bool reached_all = n == 1;
  if (reached_all) trace.initial_connectivity_time = 0;

  const bool scan_epochs =
      diag && scenario.analysis.gamma > 0.0 && scenario.analysis.epoch_window > 0;
  std::vector<StochasticMatrix> epoch_buffer;

  StepStats stats;
  for (std::size_t t = 0; t < scenario.horizon; ++t) {
    const StochasticMatrix a = scenario.chain.matrix_at(t, matrix_rng);
    const std::vector<std::size_t> signals = world.sample_signal(signal_rng);

    if (diag) {
      const std::vector<double> u = residual_u(world, state, a, signals);
      double norm = 0.0;
      for (const double v : u) norm = std::max(norm, std::abs(v));
      trace.residual_norm.push_back(norm);
    }

    StepStats step_stats;
    switch (scenario.rule) {
      case UpdateRule::standard:
        state = step_standard(world, state, a, signals, &step_stats);
        break;
      case UpdateRule::inertial:
        state = step_inertial(world, state, a, scenario.lambda.at(t), signals, &step_stats);
        break;
      case UpdateRule::diffusion:
        state = step_diffusion(world, state, a, signals, &step_stats);
        break;
    }
    if (step_stats.max_row_drift > kBeliefRowTol) ++trace.violations.row_stochastic;
    stats.max_row_drift = std::max(stats.max_row_drift, step_stats.max_row_drift);

    if (!reached_all) {
      reach = a.apply(reach);
      bool all = true;
      for (const double v : reach) all = all && v > 0.0;
      if (all) {
        reached_all = true;
        trace.initial_connectivity_time = t + 1;
      }
    }

    if (scenario.record.matrices) trace.matrix_log.push_back(a);
    if (scenario.record.signals) trace.signal_log.push_back(signals);

    if (scan_epochs) {
      epoch_buffer.push_back(a);
      const std::size_t B = scenario.analysis.epoch_window;
      // windows [kB, (k+1)B] need matrices kB .. (k+1)B inclusive
      if (epoch_buffer.size() == B + 1) {
        const std::size_t start = t - B;
        if (detect_gamma_epoch(epoch_buffer, start, world, scenario.analysis.gamma))
          trace.epoch_starts.push_back(start);
        epoch_buffer.erase(epoch_buffer.begin(),
                           epoch_buffer.begin() + static_cast<std::ptrdiff_t>(B));
      }
    }

    if ((t + 1) % stride == 0 || t + 1 == scenario.horizon) snapshot(state);
  }

  trace.max_row_drift = stats.max_row_drift;
  return trace;
}

// First recorded time with min_i mu_i(theta*) >= 1 - epsilon.
inline std::optional<std::size_t> learning_time(const TrialTrace& trace, double epsilon) {
  if (trace.beliefs.empty()) throw std::invalid_argument("learning_time: no recorded beliefs");
  for (std::size_t s = 0; s < trace.beliefs.size(); ++s)
    if (trace.min_truth_belief_at(s) >= 1.0 - epsilon) return trace.snapshot_times[s];
  return std::nullopt;
}

// diff_span of the theta column at each recorded time.
inline std::vector<double> disagreement_series(const TrialTrace& trace, std::size_t theta) {
  if (trace.beliefs.empty())
    throw std::invalid_argument("disagreement_series: no recorded beliefs");
  if (theta >= trace.states) throw std::invalid_argument("disagreement_series: bad state index");
  std::vector<double> out;
  out.reserve(trace.beliefs.size());
  for (const auto& b : trace.beliefs) out.push_back(diff_span(b.state_column(theta)));
  return out;
}

// First T with (A(T:0))_{i,0} > 0 for every agent i, recomputed from the
// matrix log (agent 0 is the designated positive-prior agent).
inline std::optional<std::size_t> initial_connectivity_time(const TrialTrace& trace) {
  if (trace.matrix_log.empty())
    throw std::invalid_argument("initial_connectivity_time: matrix log was not retained");
  std::vector<double> reach(trace.agents, 0.0);
  reach[0] = 1.0;
  if (trace.agents == 1) return 0;
  for (std::size_t t = 0; t < trace.matrix_log.size(); ++t) {
    reach = trace.matrix_log[t].apply(reach);
    bool all = true;
    for (const double v : reach) all = all && v > 0.0;
    if (all) return t + 1;
  }
  return std::nullopt;
}

struct LemmaMonitorReport {
  std::size_t samples = 0;
  std::size_t influence_checked = 0;
  std::size_t influence_violations = 0;
  std::size_t ratio_checked = 0;
  std::size_t ratio_violations = 0;
  std::size_t sandwich_checked = 0;
  std::size_t sandwich_violations = 0;
  std::size_t span_checked = 0;
  std::size_t span_violations = 0;
  std::size_t row_stochastic_violations = 0;

  std::size_t total_violations() const {
    return influence_violations + ratio_violations + sandwich_violations + span_violations +
           row_stochastic_violations;
  }
};

// Runs one trial with full logs and sweeps the inequality monitors over
// `samples` random probes each: the future-belief influence bound along the
// trajectory, the likelihood-ratio expectation bounds on visited belief
// states, the comparison-function sandwich, and monotonicity of the
// disagreement span under chain products.
inline LemmaMonitorReport run_lemma_monitors(const Scenario& scenario, std::uint64_t seed,
                                             std::size_t samples, std::size_t influence_B = 3) {
  Scenario probed = scenario;
  probed.record.matrices = true;
  probed.record.signals = true;
  probed.record.diagnostics = true;
  probed.record.beliefs_every = 1;
  const TrialTrace trace = run_trial(probed, seed);
  const WorldModel& world = scenario.world;
  const std::size_t n = world.agent_count();
  const std::size_t states = world.state_count();

  LemmaMonitorReport report;
  report.samples = samples;
  report.row_stochastic_violations = trace.violations.row_stochastic;
  RngStream probe(seed, "lemma-probe");

  const std::size_t T = trace.horizon;
  const double k0 = 1.0 / world.min_likelihood() - 1.0;
  for (std::size_t s = 0; s < samples; ++s) {
    // influence bound at a random (i, j, t, delta)
    if (T > influence_B) {
      const std::size_t delta = 1 + probe.uniform_index(influence_B);
      const std::size_t t = probe.uniform_index(T - delta);
      const std::size_t i = probe.uniform_index(n);
      const std::size_t j = probe.uniform_index(n);
      const auto check = influence_lower_bound(
          std::span<const StochasticMatrix>(trace.matrix_log).subspan(t, delta), world, i, j,
          delta, influence_B, trace.beliefs[t], trace.beliefs[t + delta]);
      ++report.influence_checked;
      if (!check.holds) ++report.influence_violations;
    }

    // ratio-expectation bounds at a random visited belief row
    {
      const std::size_t t = probe.uniform_index(trace.beliefs.size());
      const std::size_t i = probe.uniform_index(n);
      const std::size_t th = probe.uniform_index(states);
      const double g = likelihood_ratio_expectation(world, i, trace.beliefs[t].rows[i], th);
      ++report.ratio_checked;
      const auto& equivalent = world.theta_star_set(i);
      const bool in_class = std::binary_search(equivalent.begin(), equivalent.end(), th);
      if (g > k0 + kRatioBoundTol || (in_class && g < -kRatioBoundTol))
        ++report.ratio_violations;
    }

    // comparison sandwich on a random vector and stochastic weight vector
    {
      std::vector<double> x(n), pi(n);
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = 2.0 * probe.uniform01() - 1.0;
        pi[i] = 0.05 + probe.uniform01();
        sum += pi[i];
      }
      for (double& v : pi) v /= sum;
      double p_star = 1.0;
      for (const double v : pi) p_star = std::min(p_star, v);
      const double d = diff_span(x);
      const double v = comparison_function(x, pi);
      ++report.sandwich_checked;
      if (v < p_star / 2.0 * d * d - 1e-12 || v > d * d + 1e-12) ++report.sandwich_violations;
    }

    // span monotonicity under a product drawn from the trajectory
    if (!trace.matrix_log.empty()) {
      const std::size_t t1 = probe.uniform_index(trace.matrix_log.size());
      const std::size_t t2 = t1 + probe.uniform_index(trace.matrix_log.size() - t1) + 1;
      std::vector<double> x(n);
      for (double& v : x) v = probe.uniform01();
      const StochasticMatrix prod = backward_product(trace.matrix_log, t1, t2);
      ++report.span_checked;
      if (diff_span(prod.apply(x)) > diff_span(x) + 1e-12) ++report.span_violations;
    }
  }
  return report;
}

struct TrialSummary {
  std::uint64_t seed = 0;
  std::optional<std::size_t> learning_time;
  double final_min_truth = 0.0;
  double final_max_span = 0.0;  // max over states at the final snapshot
  double final_residual = 0.0;
  std::size_t epochs_detected = 0;
  MonitorCounts violations;
};

struct MonteCarloSummary {
  double epsilon = 0.0;
  std::vector<TrialSummary> per_seed;
  std::size_t learned_count = 0;
  double learned_fraction = 0.0;
  std::optional<double> median_learning_time;
  double mean_final_min_truth = 0.0;
  double max_final_span = 0.0;
  MonitorCounts violations;
};

inline TrialSummary summarize_trial(const TrialTrace& trace, double epsilon) {
  TrialSummary s;
  s.seed = trace.seed;
  s.learning_time = learning_time(trace, epsilon);
  s.final_min_truth = trace.min_truth_belief_at(trace.beliefs.size() - 1);
  for (std::size_t th = 0; th < trace.states; ++th)
    s.final_max_span =
        std::max(s.final_max_span, diff_span(trace.final_beliefs().state_column(th)));
  if (!trace.residual_norm.empty()) s.final_residual = trace.residual_norm.back();
  s.epochs_detected = trace.epoch_starts.size();
  s.violations = trace.violations;
  return s;
}

// Order-independent reduction over per-trial summaries.
inline MonteCarloSummary reduce_summaries(std::vector<TrialSummary> per_seed, double epsilon) {
  if (per_seed.empty()) throw std::invalid_argument("reduce_summaries: no trials");
  MonteCarloSummary summary;
  summary.epsilon = epsilon;
  summary.per_seed = std::move(per_seed);
  std::vector<double> times;
  for (const auto& r : summary.per_seed) {
    if (r.learning_time) {
      ++summary.learned_count;
      times.push_back(static_cast<double>(*r.learning_time));
    }
    summary.mean_final_min_truth += r.final_min_truth;
    summary.max_final_span = std::max(summary.max_final_span, r.final_max_span);
    summary.violations.row_stochastic += r.violations.row_stochastic;
    summary.violations.ratio_bounds += r.violations.ratio_bounds;
    summary.violations.influence += r.violations.influence;
  }
  summary.mean_final_min_truth /= static_cast<double>(summary.per_seed.size());
  summary.learned_fraction =
      static_cast<double>(summary.learned_count) / static_cast<double>(summary.per_seed.size());
  if (!times.empty()) {
    std::sort(times.begin(), times.end());
    const std::size_t mid = times.size() / 2;
    summary.median_learning_time =
        times.size() % 2 == 1 ? times[mid] : (times[mid - 1] + times[mid]) / 2.0;
  }
  return summary;
}

// Applies a function to the trace of every seed, in parallel. Results land in
// seed order regardless of scheduling.
template <typename F>
auto map_trials(const Scenario& scenario, std::span<const std::uint64_t> seeds,
                const ApsSequence* aps, std::size_t threads, F&& f)
    -> std::vector<decltype(f(std::declval<TrialTrace>()))> {
  if (seeds.empty()) throw std::invalid_argument("map_trials: no seeds");
  scenario.validate();
  if (threads == 0) threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  threads = std::min(threads, seeds.size());

  std::vector<decltype(f(std::declval<TrialTrace>()))> results(seeds.size());
  std::atomic<std::size_t> cursor{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t idx = cursor.fetch_add(1);
      if (idx >= seeds.size()) return;
      results[idx] = f(run_trial(scenario, seeds[idx], aps));
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::future<void>> futures;
    for (std::size_t w = 0; w < threads; ++w)
      futures.push_back(std::async(std::launch::async, worker));
    for (auto& fu : futures) fu.get();
  }
  return results;
}

// Runs one trial per seed (in parallel) and reduces the results with
// order-independent statistics.
inline MonteCarloSummary run_monte_carlo(const Scenario& scenario,
                                         std::span<const std::uint64_t> seeds, double epsilon,
                                         const ApsSequence* aps = nullptr,
                                         std::size_t threads = 0) {
  std::vector<TrialSummary> results = map_trials(
      scenario, seeds, aps, threads,
      [epsilon](const TrialTrace& trace) { return summarize_trial(trace, epsilon); });
  return reduce_summaries(std::move(results), epsilon);
}

}  // namespace nbsl
