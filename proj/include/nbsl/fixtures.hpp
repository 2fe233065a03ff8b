#pragma once

#include <span>
#include <string_view>

namespace nbsl {

struct Fixture {
  std::string_view name;
  std::string_view description;
  std::string_view json_text;
};

namespace fixture_detail {

// Two agents on the alternating pair of 2x2 matrices whose absolute
// probability sequence alternates [2/3 1/3] / [1/3 2/3].
inline constexpr std::string_view kExample1 = R"json({
  "name": "example1_2x2",
  "world": {
    "states": ["good", "bad"],
    "true_state": "good",
    "agents": [
      {"signals": ["high", "low"],
       "likelihoods": {"good": ["3/4", "1/4"], "bad": ["1/4", "3/4"]}},
      {"signals": ["high", "low"],
       "likelihoods": {"good": ["3/4", "1/4"], "bad": ["1/4", "3/4"]}}
    ]
  },
  "chain": {
    "kind": "periodic_deterministic",
    "matrices": [
      [["1", "0"], ["1/2", "1/2"]],
      [["1/2", "1/2"], ["0", "1"]]
    ]
  },
  "priors": "uniform",
  "rule": "standard",
  "horizon": 1000,
  "record": {"diagnostics": true},
  "analysis": {"aps_period": 2}
})json";

// Six agents whose connectivity bursts arrive at the powers of two: the pair
// {1,2} (0-based) jointly identifies the true state, as does {4,5}; agents 0
// and 3 are uninformative. Not B-connected for any B, yet learning occurs.
inline constexpr std::string_view kSixAgent = R"json({
  "name": "six_agent_aperiodic",
  "world": {
    "states": ["alpha", "beta", "gamma"],
    "true_state": "alpha",
    "agents": [
      {"signals": ["heads", "tails"],
       "likelihoods": {"alpha": ["1/2", "1/2"], "beta": ["1/2", "1/2"], "gamma": ["1/2", "1/2"]}},
      {"signals": ["heads", "tails"],
       "likelihoods": {"alpha": ["1/2", "1/2"], "beta": ["1/8", "7/8"], "gamma": ["1/2", "1/2"]}},
      {"signals": ["heads", "tails"],
       "likelihoods": {"alpha": ["1/2", "1/2"], "beta": ["1/2", "1/2"], "gamma": ["1/8", "7/8"]}},
      {"signals": ["heads", "tails"],
       "likelihoods": {"alpha": ["1/2", "1/2"], "beta": ["1/2", "1/2"], "gamma": ["1/2", "1/2"]}},
      {"signals": ["heads", "tails"],
       "likelihoods": {"alpha": ["1/2", "1/2"], "beta": ["1/8", "7/8"], "gamma": ["1/2", "1/2"]}},
      {"signals": ["heads", "tails"],
       "likelihoods": {"alpha": ["1/2", "1/2"], "beta": ["1/2", "1/2"], "gamma": ["1/8", "7/8"]}}
    ]
  },
  "chain": {
    "kind": "pow2_bursts",
    "initial": [
      ["1/6", "1/6", "1/6", "1/6", "1/6", "1/6"],
      ["1/6", "1/6", "1/6", "1/6", "1/6", "1/6"],
      ["1/6", "1/6", "1/6", "1/6", "1/6", "1/6"],
      ["1/6", "1/6", "1/6", "1/6", "1/6", "1/6"],
      ["1/6", "1/6", "1/6", "1/6", "1/6", "1/6"],
      ["1/6", "1/6", "1/6", "1/6", "1/6", "1/6"]
    ],
    "even_exponent": [
      ["1/3", "1/3", "1/3", "0", "0", "0"],
      ["1/8", "1/2", "3/8", "0", "0", "0"],
      ["1/4", "1/2", "1/4", "0", "0", "0"],
      ["0", "0", "0", "1/3", "1/3", "1/3"],
      ["0", "0", "0", "1/8", "3/8", "1/2"],
      ["0", "0", "0", "1/2", "1/4", "1/4"]
    ],
    "odd_exponent": [
      ["1/3", "0", "0", "0", "1/3", "1/3"],
      ["0", "3/8", "3/8", "1/4", "0", "0"],
      ["0", "1/6", "1/2", "1/3", "0", "0"],
      ["0", "1/3", "1/3", "1/3", "0", "0"],
      ["1/2", "0", "0", "0", "1/4", "1/4"],
      ["1/2", "0", "0", "0", "3/8", "1/8"]
    ]
  },
  "priors": "uniform",
  "rule": "standard",
  "horizon": 16384,
  "record": {"diagnostics": true},
  "analysis": {"gamma": "1/8"}
})json";

// Time-varying self-weight mixing A(t) = eta(t) A + (1 - eta(t)) I over a
// symmetric strongly connected base.
inline constexpr std::string_view kLiu14 = R"json({
  "name": "liu14",
  "world": {
    "states": ["good", "bad"],
    "true_state": "good",
    "agents": [
      {"signals": ["high", "low"],
       "likelihoods": {"good": ["3/4", "1/4"], "bad": ["1/4", "3/4"]}},
      {"signals": ["high", "low"],
       "likelihoods": {"good": ["3/4", "1/4"], "bad": ["1/4", "3/4"]}},
      {"signals": ["high", "low"],
       "likelihoods": {"good": ["3/4", "1/4"], "bad": ["1/4", "3/4"]}}
    ]
  },
  "chain": {
    "kind": "liu14",
    "base": [
      ["1/2", "1/4", "1/4"],
      ["1/4", "1/2", "1/4"],
      ["1/4", "1/4", "1/2"]
    ],
    "eta": {"kind": "cycle", "values": ["1", "1/2", "1/4"]}
  },
  "priors": "uniform",
  "rule": "standard",
  "horizon": 2000,
  "record": {"diagnostics": true},
  "analysis": {"aps_period": 3, "usc_b": 1, "usc_delta": "1/16", "balance": true, "feedback": true}
})json";

// Complete five-agent network with every link failing independently with
// probability 0.3 per step; failed mass returns to the diagonal.
inline constexpr std::string_view kLinkFailureK5 = R"json({
  "name": "link_failure_k5",
  "world": {
    "states": ["good", "bad"],
    "true_state": "good",
    "agents": [
      {"signals": ["high", "low"],
       "likelihoods": {"good": ["3/4", "1/4"], "bad": ["1/4", "3/4"]}},
      {"signals": ["high", "low"],
       "likelihoods": {"good": ["3/4", "1/4"], "bad": ["1/4", "3/4"]}},
      {"signals": ["high", "low"],
       "likelihoods": {"good": ["3/4", "1/4"], "bad": ["1/4", "3/4"]}},
      {"signals": ["high", "low"],
       "likelihoods": {"good": ["3/4", "1/4"], "bad": ["1/4", "3/4"]}},
      {"signals": ["high", "low"],
       "likelihoods": {"good": ["3/4", "1/4"], "bad": ["1/4", "3/4"]}}
    ]
  },
  "chain": {
    "kind": "link_failure",
    "base": [
      ["1/5", "1/5", "1/5", "1/5", "1/5"],
      ["1/5", "1/5", "1/5", "1/5", "1/5"],
      ["1/5", "1/5", "1/5", "1/5", "1/5"],
      ["1/5", "1/5", "1/5", "1/5", "1/5"],
      ["1/5", "1/5", "1/5", "1/5", "1/5"]
    ],
    "rho": 0.3
  },
  "priors": "uniform",
  "rule": "standard",
  "horizon": 5001,
  "record": {"diagnostics": true},
  "analysis": {"aps_period": 1}
})json";

inline constexpr Fixture kFixtures[] = {
    {"example1_2x2", "alternating 2x2 chain with the exact alternating social-power sequence",
     kExample1},
    {"six_agent_aperiodic",
     "six agents, connectivity bursts at powers of two, pairwise-identifying blocks", kSixAgent},
    {"liu14", "eta(t)-mixed strongly connected base with cycling mixing strength", kLiu14},
    {"link_failure_k5", "complete 5-agent network under independent 30% link failures",
     kLinkFailureK5},
};

}  // namespace fixture_detail

inline std::span<const Fixture> fixtures() { return fixture_detail::kFixtures; }

inline const Fixture* find_fixture(std::string_view name) {
  for (const Fixture& f : fixture_detail::kFixtures)
    if (f.name == name) return &f;
  return nullptr;
}

}  // namespace nbsl
