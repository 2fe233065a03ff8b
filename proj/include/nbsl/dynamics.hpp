#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nbsl/matrix.hpp"
#include "nbsl/world_model.hpp"

namespace nbsl {

inline constexpr double kBeliefDriftRenorm = 1e-12;
inline constexpr double kBeliefRowTol = 1e-9;

// n x |Theta| row-stochastic matrix of beliefs; row i is agent i's probability
// distribution over states at `time`.
struct BeliefState {
  std::size_t time = 0;
  std::vector<std::vector<double>> rows;

  static BeliefState uniform(std::size_t agents, std::size_t states) {
    BeliefState b;
    b.rows.assign(agents, std::vector<double>(states, 1.0 / static_cast<double>(states)));
    return b;
  }

  static BeliefState degenerate(std::size_t agents, std::size_t states, std::size_t at) {
    if (at >= states) throw std::invalid_argument("degenerate belief: bad state index");
    BeliefState b;
    b.rows.assign(agents, std::vector<double>(states, 0.0));
    for (auto& r : b.rows) r[at] = 1.0;
    return b;
  }

  static BeliefState from_rows(std::vector<std::vector<double>> rows) {
    BeliefState b;
    b.rows = std::move(rows);
    for (std::size_t i = 0; i < b.rows.size(); ++i) {
      double sum = 0.0;
      for (const double p : b.rows[i]) {
        if (p < 0.0 || p > 1.0)
          throw std::invalid_argument("belief row " + std::to_string(i) + ": entry outside [0,1]");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kBeliefRowTol)
        throw std::invalid_argument("belief row " + std::to_string(i) + " sums to " +
                                    std::to_string(sum));
    }
    return b;
  }

  std::size_t agent_count() const { return rows.size(); }
  std::size_t state_count() const { return rows.empty() ? 0 : rows.front().size(); }

  // Column of beliefs in one state across agents.
  std::vector<double> state_column(std::size_t theta) const {
    std::vector<double> col(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) col[i] = rows[i][theta];
    return col;
  }
};

// Worst pre-renormalization row drift of a step, for audit.
struct StepStats {
  double max_row_drift = 0.0;
};

namespace detail {

inline void renormalize(std::vector<double>& row, StepStats* stats) {
  double sum = 0.0;
  for (const double p : row) sum += p;
  const double drift = std::abs(sum - 1.0);
  if (stats) stats->max_row_drift = std::max(stats->max_row_drift, drift);
  if (drift > kBeliefDriftRenorm)
    for (double& p : row) p /= sum;
}

}  // namespace detail

// Private-signal forecast m_{i,t}(s) = sum_theta l_i(s|theta) mu_i(theta).
inline double one_step_forecast(const WorldModel& world, std::size_t agent,
                                std::span<const double> row, std::size_t signal) {
  double m = 0.0;
  for (std::size_t th = 0; th < world.state_count(); ++th)
    m += world.likelihood(agent, th, signal) * row[th];
  return m;
}

// Posterior over states after one private signal. The denominator is the
// one-step forecast, bounded below by l0 > 0, so the update is always defined.
inline std::vector<double> bayesian_update_row(const WorldModel& world, std::size_t agent,
                                               std::span<const double> row, std::size_t signal) {
  const double m = one_step_forecast(world, agent, row, signal);
  std::vector<double> out(row.size());
  for (std::size_t th = 0; th < row.size(); ++th)
    out[th] = world.likelihood(agent, th, signal) * row[th] / m;
  return out;
}

// Query for the probability an agent assigns to observing a given signal
// string over the next k steps.
struct ForecastQuery {
  std::size_t agent = 0;
  std::vector<std::size_t> signals;  // s_1 ... s_k from the agent's own space

  std::size_t horizon() const { return signals.size(); }
};

// k-step-ahead forecast sum_theta prod_r l_i(s_r|theta) mu_i(theta).
inline double forecast(const WorldModel& world, std::span<const double> row,
                       const ForecastQuery& query) {
  if (query.signals.empty()) throw std::invalid_argument("forecast: horizon must be >= 1");
  for (const std::size_t s : query.signals)
    if (s >= world.signal_count(query.agent))
      throw std::invalid_argument("forecast: signal outside agent's space");
  double total = 0.0;
  for (std::size_t th = 0; th < world.state_count(); ++th) {
    double prod = row[th];
    for (const std::size_t s : query.signals) prod *= world.likelihood(query.agent, th, s);
    total += prod;
  }
  return total;
}

namespace detail {

inline void check_step_inputs(const WorldModel& world, const BeliefState& state,
                              const StochasticMatrix& a, std::span<const std::size_t> signals) {
  if (state.agent_count() != world.agent_count() || a.size() != world.agent_count() ||
      signals.size() != world.agent_count())
    throw std::invalid_argument("belief step: dimension mismatch");
  if (state.state_count() != world.state_count())
    throw std::invalid_argument("belief step: state count mismatch");
}

}  // namespace detail

// One step of the standard update: own Bayesian posterior weighted by the
// self-confidence a_ii, neighbors' previous beliefs weighted by a_ij. With
// a_ii = 0 the agent takes no Bayesian step at all.
inline BeliefState step_standard(const WorldModel& world, const BeliefState& state,
                                 const StochasticMatrix& a,
                                 std::span<const std::size_t> signals,
                                 StepStats* stats = nullptr) {
  detail::check_step_inputs(world, state, a, signals);
  const std::size_t n = state.agent_count();
  const std::size_t k = state.state_count();
  BeliefState next;
  next.time = state.time + 1;
  next.rows.assign(n, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    auto& row = next.rows[i];
    const double self = a(i, i);
    if (self > 0.0) {
      const std::vector<double> bu = bayesian_update_row(world, i, state.rows[i], signals[i]);
      for (std::size_t th = 0; th < k; ++th) row[th] = self * bu[th];
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || a(i, j) == 0.0) continue;
      for (std::size_t th = 0; th < k; ++th) row[th] += a(i, j) * state.rows[j][th];
    }
    detail::renormalize(row, stats);
  }
  return next;
}

// Inertial variant: the Bayesian term is replaced by a convex combination of
// the agent's previous belief (weight lambda_i) and the Bayesian posterior.
inline BeliefState step_inertial(const WorldModel& world, const BeliefState& state,
                                 const StochasticMatrix& a, std::span<const double> lambda,
                                 std::span<const std::size_t> signals,
                                 StepStats* stats = nullptr) {
  detail::check_step_inputs(world, state, a, signals);
  if (lambda.size() != state.agent_count())
    throw std::invalid_argument("step_inertial: lambda size mismatch");
  for (const double l : lambda)
    if (l < 0.0 || l > 1.0) throw std::invalid_argument("step_inertial: lambda outside [0,1]");
  const std::size_t n = state.agent_count();
  const std::size_t k = state.state_count();
  BeliefState next;
  next.time = state.time + 1;
  next.rows.assign(n, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    auto& row = next.rows[i];
    const double self = a(i, i);
    if (self > 0.0) {
      const std::vector<double> bu = bayesian_update_row(world, i, state.rows[i], signals[i]);
      for (std::size_t th = 0; th < k; ++th)
        row[th] = self * (lambda[i] * state.rows[i][th] + (1.0 - lambda[i]) * bu[th]);
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || a(i, j) == 0.0) continue;
      for (std::size_t th = 0; th < k; ++th) row[th] += a(i, j) * state.rows[j][th];
    }
    detail::renormalize(row, stats);
  }
  return next;
}

// Diffusion-adaptation variant: every agent mixes the *Bayesian updates* of
// all agents (own included), not their raw previous beliefs.
inline BeliefState step_diffusion(const WorldModel& world, const BeliefState& state,
                                  const StochasticMatrix& a,
                                  std::span<const std::size_t> signals,
                                  StepStats* stats = nullptr) {
  detail::check_step_inputs(world, state, a, signals);
  const std::size_t n = state.agent_count();
  const std::size_t k = state.state_count();
  std::vector<std::vector<double>> updates(n);
  for (std::size_t j = 0; j < n; ++j)
    updates[j] = bayesian_update_row(world, j, state.rows[j], signals[j]);
  BeliefState next;
  next.time = state.time + 1;
  next.rows.assign(n, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    auto& row = next.rows[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (a(i, j) == 0.0) continue;
      for (std::size_t th = 0; th < k; ++th) row[th] += a(i, j) * updates[j][th];
    }
    detail::renormalize(row, stats);
  }
  return next;
}

// The nonlinear correction u(t) making the true-state dynamics linear:
// mu_{t+1}(theta*) = A(t) mu_t(theta*) + u(t), entrywise
// u_i = a_ii (l_i(w_i|theta*) / m_i(w_i) - 1) mu_i(theta*).
inline std::vector<double> residual_u(const WorldModel& world, const BeliefState& state,
                                      const StochasticMatrix& a,
                                      std::span<const std::size_t> signals) {
  detail::check_step_inputs(world, state, a, signals);
  const std::size_t truth = world.true_state();
  std::vector<double> u(state.agent_count(), 0.0);
  for (std::size_t i = 0; i < state.agent_count(); ++i) {
    const double self = a(i, i);
    if (self == 0.0) continue;
    const double m = one_step_forecast(world, i, state.rows[i], signals[i]);
    const double ratio = world.likelihood(i, truth, signals[i]) / m;
    u[i] = self * (ratio - 1.0) * state.rows[i][truth];
  }
  return u;
}

// Closed-form conditional expectation of the likelihood ratio minus one:
// g = sum_s l_i(s|theta*) (l_i(s|theta) / m_i(s) - 1). Nonnegative whenever
// theta is observationally equivalent to the true state for agent i, and at
// most 1/l0 - 1 for every theta.
inline double likelihood_ratio_expectation(const WorldModel& world, std::size_t agent,
                                           std::span<const double> row, std::size_t theta) {
  const std::size_t truth = world.true_state();
  double g = 0.0;
  for (std::size_t s = 0; s < world.signal_count(agent); ++s) {
    const double m = one_step_forecast(world, agent, row, s);
    g += world.likelihood(agent, truth, s) * (world.likelihood(agent, theta, s) / m - 1.0);
  }
  return g;
}

struct InfluenceBoundCheck {
  std::vector<double> bound;   // per state
  std::vector<double> actual;  // per state
  bool holds = false;
  double min_margin = 0.0;  // min over states of actual - bound
};

inline constexpr double kInfluenceTol = 1e-9;

// Future-belief lower bound: mu_{j, t+delta}(theta) >=
// (A(t+delta : t))_{j,i} (l0/n)^B n mu_{i,t}(theta) for delta in [1, B].
// `window` holds A(t) ... A(t+delta-1); `at_t` and `at_t_plus_delta` are the
// belief states at the endpoints.
inline InfluenceBoundCheck influence_lower_bound(std::span<const StochasticMatrix> window,
                                                 const WorldModel& world, std::size_t i,
                                                 std::size_t j, std::size_t delta, std::size_t B,
                                                 const BeliefState& at_t,
                                                 const BeliefState& at_t_plus_delta) {
  if (delta == 0 || delta > B)
    throw std::invalid_argument("influence_lower_bound: need 1 <= delta <= B");
  if (window.size() < delta)
    throw std::invalid_argument("influence_lower_bound: window shorter than delta");
  const std::size_t n = world.agent_count();
  if (i >= n || j >= n) throw std::invalid_argument("influence_lower_bound: bad agent index");
  const StochasticMatrix product = backward_product(window, 0, delta);
  const double weight = product(j, i) *
                        std::pow(world.min_likelihood() / static_cast<double>(n),
                                 static_cast<double>(B)) *
                        static_cast<double>(n);
  InfluenceBoundCheck check;
  check.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t th = 0; th < world.state_count(); ++th) {
    check.bound.push_back(weight * at_t.rows[i][th]);
    check.actual.push_back(at_t_plus_delta.rows[j][th]);
    check.min_margin = std::min(check.min_margin, check.actual[th] - check.bound[th]);
  }
  check.holds = check.min_margin >= -kInfluenceTol;
  return check;
}

}  // namespace nbsl
