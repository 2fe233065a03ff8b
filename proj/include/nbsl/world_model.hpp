#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nbsl/rng.hpp"

namespace nbsl {

inline constexpr double kLikelihoodEqualityTol = 1e-12;
inline constexpr double kJointMarginalTol = 1e-9;

// Which states each agent can tell apart, plus the global picture.
struct EquivalenceStructure {
  std::vector<std::vector<std::size_t>> per_agent;  // Theta_i^*, sorted state indices
  std::vector<std::size_t> global;                  // Theta^* = intersection over agents
  bool identifiable = false;                        // Theta^* == {true state}
};

// Finite state space, per-agent finite signal spaces, and the conditional
// signal distributions. Immutable after construction; safe to share across
// parallel trials.
class WorldModel {
 public:
  struct AgentModel {
    std::vector<std::string> signals;
    // likelihoods[state][signal], each row a probability distribution
    std::vector<std::vector<double>> likelihoods;
  };

  // joint[state] is a distribution over the product signal space, agent 0
  // varying slowest. Optional; default is independent signals per agent.
  WorldModel(std::vector<std::string> states, std::size_t true_state,
             std::vector<AgentModel> agents,
             std::optional<std::vector<std::vector<double>>> joint = std::nullopt)
      : states_(std::move(states)),
        true_state_(true_state),
        agents_(std::move(agents)),
        joint_(std::move(joint)) {
    if (states_.empty()) throw std::invalid_argument("world: no states");
    if (true_state_ >= states_.size()) throw std::invalid_argument("world: bad true state index");
    if (agents_.empty()) throw std::invalid_argument("world: no agents");
    for (std::size_t i = 0; i < agents_.size(); ++i) validate_agent(i);
    if (joint_) validate_joint();
    compute_equivalence();
  }

  std::size_t agent_count() const { return agents_.size(); }
  std::size_t state_count() const { return states_.size(); }
  std::size_t true_state() const { return true_state_; }
  const std::string& state_label(std::size_t k) const { return states_[k]; }
  std::size_t signal_count(std::size_t agent) const { return agents_[agent].signals.size(); }
  const std::string& signal_label(std::size_t agent, std::size_t s) const {
    return agents_[agent].signals[s];
  }
  bool has_joint() const { return joint_.has_value(); }

  double likelihood(std::size_t agent, std::size_t state, std::size_t signal) const {
    return agents_[agent].likelihoods[state][signal];
  }
  std::span<const double> likelihood_row(std::size_t agent, std::size_t state) const {
    return agents_[agent].likelihoods[state];
  }

  // States observationally equivalent to the true state for one agent.
  const std::vector<std::size_t>& theta_star_set(std::size_t agent) const {
    if (agent >= agents_.size()) throw std::invalid_argument("theta_star_set: bad agent index");
    return equivalence_.per_agent[agent];
  }

  const EquivalenceStructure& equivalence() const { return equivalence_; }

  // True when the pooled signal structure of `agents` distinguishes everything
  // the whole population can, i.e. the intersection of their equivalence sets
  // collapses to Theta^*.
  bool is_self_sufficient(std::span<const std::size_t> agents) const {
    if (agents.empty())
      throw std::invalid_argument("is_self_sufficient: empty agent set has no intersection");
    std::vector<std::size_t> acc;
    bool first = true;
    for (const std::size_t a : agents) {
      if (a >= agents_.size()) throw std::invalid_argument("is_self_sufficient: bad agent index");
      if (first) {
        acc = equivalence_.per_agent[a];
        first = false;
        continue;
      }
      std::vector<std::size_t> next;
      std::set_intersection(acc.begin(), acc.end(), equivalence_.per_agent[a].begin(),
                            equivalence_.per_agent[a].end(), std::back_inserter(next));
      acc = std::move(next);
    }
    return acc == equivalence_.global;
  }

  bool is_identifiable() const { return equivalence_.identifiable; }

  // Smallest likelihood entry l0 across agents, states, and signals.
  double min_likelihood() const { return min_likelihood_; }

  // One signal per agent drawn from the true-state distribution.
  std::vector<std::size_t> sample_signal(RngStream& rng) const {
    std::vector<std::size_t> out(agents_.size());
    if (joint_) {
      std::size_t idx = rng.categorical((*joint_)[true_state_]);
      for (std::size_t i = agents_.size(); i-- > 0;) {
        const std::size_t k = agents_[i].signals.size();
        out[i] = idx % k;
        idx /= k;
      }
    } else {
      for (std::size_t i = 0; i < agents_.size(); ++i)
        out[i] = rng.categorical(agents_[i].likelihoods[true_state_]);
    }
    return out;
  }

 private:
  void validate_agent(std::size_t i) {
    auto& agent = agents_[i];
    if (agent.signals.empty())
      throw std::invalid_argument("world: agent " + std::to_string(i) + " has no signals");
    if (agent.likelihoods.size() != states_.size())
      throw std::invalid_argument("world: agent " + std::to_string(i) +
                                  " needs one likelihood row per state");
    for (std::size_t th = 0; th < states_.size(); ++th) {
      auto& row = agent.likelihoods[th];
      if (row.size() != agent.signals.size())
        throw std::invalid_argument("world: agent " + std::to_string(i) + " state " + states_[th] +
                                    ": likelihood row length mismatch");
      double sum = 0.0;
      for (const double p : row) {
        if (p <= 0.0)
          throw std::invalid_argument("world: agent " + std::to_string(i) + " state " +
                                      states_[th] +
                                      ": likelihoods must be strictly positive");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRowSumTolLoose)
        throw std::invalid_argument("world: agent " + std::to_string(i) + " state " + states_[th] +
                                    ": likelihood row sums to " + std::to_string(sum));
      for (double& p : row) p /= sum;  // exact-rational fixtures are unaffected
    }
  }

  void validate_joint() {
    std::size_t prod = 1;
    for (const auto& a : agents_) prod *= a.signals.size();
    if (joint_->size() != states_.size())
      throw std::invalid_argument("world: joint table needs one row per state");
    for (std::size_t th = 0; th < states_.size(); ++th) {
      const auto& row = (*joint_)[th];
      if (row.size() != prod)
        throw std::invalid_argument("world: joint row for state " + states_[th] +
                                    " has wrong length");
      double sum = 0.0;
      for (const double p : row) {
        if (p < 0.0) throw std::invalid_argument("world: joint table entry negative");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRowSumTolLoose)
        throw std::invalid_argument("world: joint row for state " + states_[th] + " sums to " +
                                    std::to_string(sum));
      // per-agent marginalization must reproduce the stored marginals
      for (std::size_t i = 0; i < agents_.size(); ++i) {
        std::vector<double> marginal(agents_[i].signals.size(), 0.0);
        std::size_t stride = 1;
        for (std::size_t j = i + 1; j < agents_.size(); ++j) stride *= agents_[j].signals.size();
        for (std::size_t idx = 0; idx < prod; ++idx)
          marginal[(idx / stride) % agents_[i].signals.size()] += row[idx];
        for (std::size_t s = 0; s < marginal.size(); ++s) {
          if (std::abs(marginal[s] - agents_[i].likelihoods[th][s]) > kJointMarginalTol)
            throw std::invalid_argument("world: joint table for state " + states_[th] +
                                        " disagrees with agent " + std::to_string(i) +
                                        " marginal");
        }
      }
    }
  }

  void compute_equivalence() {
    min_likelihood_ = 1.0;
    for (const auto& agent : agents_)
      for (const auto& row : agent.likelihoods)
        for (const double p : row) min_likelihood_ = std::min(min_likelihood_, p);

    equivalence_.per_agent.resize(agents_.size());
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      auto& set = equivalence_.per_agent[i];
      const auto& truth = agents_[i].likelihoods[true_state_];
      for (std::size_t th = 0; th < states_.size(); ++th) {
        bool equal = true;
        for (std::size_t s = 0; s < truth.size() && equal; ++s)
          equal = std::abs(agents_[i].likelihoods[th][s] - truth[s]) <= kLikelihoodEqualityTol;
        if (equal) set.push_back(th);
      }
    }
    equivalence_.global = equivalence_.per_agent[0];
    for (std::size_t i = 1; i < agents_.size(); ++i) {
      std::vector<std::size_t> next;
      std::set_intersection(equivalence_.global.begin(), equivalence_.global.end(),
                            equivalence_.per_agent[i].begin(), equivalence_.per_agent[i].end(),
                            std::back_inserter(next));
      equivalence_.global = std::move(next);
    }
    equivalence_.identifiable =
        equivalence_.global.size() == 1 && equivalence_.global[0] == true_state_;
  }

  static constexpr double kRowSumTolLoose = 1e-9;

  std::vector<std::string> states_;
  std::size_t true_state_;
  std::vector<AgentModel> agents_;
  std::optional<std::vector<std::vector<double>>> joint_;
  EquivalenceStructure equivalence_;
  double min_likelihood_ = 1.0;
};

}  // namespace nbsl
