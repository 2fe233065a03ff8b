#include <doctest.h>

#include <vector>

#include "nbsl/harness.hpp"
#include "test_support.hpp"

using nbsl::BeliefState;
using nbsl::ChainSpec;
using nbsl::Scenario;
using nbsl::StochasticMatrix;
using nbsl::TrialTrace;
using nbsl::UpdateRule;

namespace {

Scenario small_scenario(std::size_t horizon = 50) {
  nbsl::WorldModel world = nbsl_test::binary_world(3);
  ChainSpec chain = ChainSpec::periodic({StochasticMatrix::uniform_mixing(3)});
  BeliefState priors = BeliefState::uniform(3, 2);
  return Scenario{"small", std::move(world), std::move(chain), std::move(priors),
                  UpdateRule::standard, {}, false, horizon, {}, {}};
}

Scenario six_agent_scenario(std::size_t horizon) {
  nbsl::WorldModel world = nbsl_test::six_agent_world();
  ChainSpec chain = nbsl_test::six_agent_chain();
  BeliefState priors = BeliefState::uniform(6, 3);
  Scenario s{"six-agent", std::move(world), std::move(chain), std::move(priors),
             UpdateRule::standard, {}, false, horizon, {}, {}};
  s.analysis.gamma = 0.125;
  return s;
}

}  // namespace

TEST_CASE("degenerate priors at the truth are absorbing") {
  Scenario s = small_scenario(100);
  s.priors = BeliefState::degenerate(3, 2, 0);
  const TrialTrace trace = nbsl::run_trial(s, 1);
  for (std::size_t k = 0; k < trace.beliefs.size(); ++k)
    CHECK(trace.min_truth_belief_at(k) == 1.0);
  CHECK(nbsl::learning_time(trace, 0.01) == 0);
}

TEST_CASE("identical scenario and seed reproduce the trace bit for bit") {
  Scenario s = six_agent_scenario(256);
  s.record.matrices = true;
  s.record.signals = true;
  s.analysis.epoch_window = 4;
  const TrialTrace a = nbsl::run_trial(s, 7);
  const TrialTrace b = nbsl::run_trial(s, 7);
  REQUIRE(a.beliefs.size() == b.beliefs.size());
  for (std::size_t k = 0; k < a.beliefs.size(); ++k) CHECK(a.beliefs[k].rows == b.beliefs[k].rows);
  CHECK(a.residual_norm == b.residual_norm);
  CHECK(a.signal_log == b.signal_log);
  for (std::size_t t = 0; t < a.matrix_log.size(); ++t)
    CHECK(a.matrix_log[t] == b.matrix_log[t]);
  CHECK(a.epoch_starts == b.epoch_starts);

  SUBCASE("recording extra series does not perturb the draws") {
    Scenario lean = six_agent_scenario(256);
    lean.record.matrices = false;
    lean.record.signals = false;
    const TrialTrace c = nbsl::run_trial(lean, 7);
    CHECK(c.final_beliefs().rows == a.final_beliefs().rows);
  }
}

TEST_CASE("random chains consume a dedicated substream") {
  nbsl::WorldModel world = nbsl_test::binary_world(5);
  ChainSpec chain = ChainSpec::link_failure(StochasticMatrix::uniform_mixing(5), 0.3);
  Scenario s{"lf", std::move(world), std::move(chain), BeliefState::uniform(5, 2),
             UpdateRule::standard, {}, false, 64, {}, {}};
  s.record.matrices = true;
  const TrialTrace a = nbsl::run_trial(s, 3);
  const TrialTrace b = nbsl::run_trial(s, 3);
  const TrialTrace other = nbsl::run_trial(s, 4);
  for (std::size_t t = 0; t < a.matrix_log.size(); ++t)
    CHECK(a.matrix_log[t] == b.matrix_log[t]);
  bool any_difference = false;
  for (std::size_t t = 0; t < a.matrix_log.size(); ++t)
    any_difference = any_difference || !(a.matrix_log[t] == other.matrix_log[t]);
  CHECK(any_difference);
}

TEST_CASE("learning_time scans the recorded series") {
  SUBCASE("beliefs stuck at one half never learn") {
    nbsl::WorldModel world = [] {
      std::vector<nbsl::WorldModel::AgentModel> agents{
          {{"s0", "s1"}, {{0.5, 0.5}, {0.5, 0.5}}}};
      return nbsl::WorldModel({"a", "b"}, 0, std::move(agents));
    }();
    Scenario s{"stuck", std::move(world), ChainSpec::periodic({StochasticMatrix::identity(1)}),
               BeliefState::uniform(1, 2), UpdateRule::standard, {}, false, 64, {}, {}};
    const TrialTrace trace = nbsl::run_trial(s, 1);
    CHECK_FALSE(nbsl::learning_time(trace, 0.01));
  }
  SUBCASE("matches an independent scan of the snapshots") {
    const Scenario s = small_scenario(200);
    const TrialTrace trace = nbsl::run_trial(s, 11);
    const auto fast = nbsl::learning_time(trace, 0.05);
    std::optional<std::size_t> slow;
    for (std::size_t k = 0; k < trace.beliefs.size() && !slow; ++k) {
      double lowest = 1.0;
      for (const auto& row : trace.beliefs[k].rows) lowest = std::min(lowest, row[0]);
      if (lowest >= 0.95) slow = trace.snapshot_times[k];
    }
    CHECK(fast == slow);
  }
}

TEST_CASE("disagreement series") {
  SUBCASE("uninformative world with equal rows stays at zero") {
    std::vector<nbsl::WorldModel::AgentModel> agents;
    for (int i = 0; i < 3; ++i)
      agents.push_back({{"s0", "s1"}, {{0.5, 0.5}, {0.5, 0.5}}});
    nbsl::WorldModel world({"a", "b"}, 0, std::move(agents));
    Scenario s{"flat", std::move(world),
               ChainSpec::periodic({StochasticMatrix::uniform_mixing(3)}),
               BeliefState::uniform(3, 2), UpdateRule::standard, {}, false, 32, {}, {}};
    const TrialTrace trace = nbsl::run_trial(s, 5);
    for (const double d : nbsl::disagreement_series(trace, 0)) CHECK(d == 0.0);
  }
  SUBCASE("equals diff_span of the snapshots") {
    const Scenario s = small_scenario(64);
    const TrialTrace trace = nbsl::run_trial(s, 2);
    const auto series = nbsl::disagreement_series(trace, 1);
    REQUIRE(series.size() == trace.beliefs.size());
    for (std::size_t k = 0; k < series.size(); ++k)
      CHECK(series[k] == nbsl::diff_span(trace.beliefs[k].state_column(1)));
  }
}

TEST_CASE("initial connectivity time") {
  SUBCASE("all-positive first matrix connects at once") {
    Scenario s = small_scenario(16);
    s.record.matrices = true;
    const TrialTrace trace = nbsl::run_trial(s, 1);
    CHECK(trace.initial_connectivity_time == 1);
    CHECK(nbsl::initial_connectivity_time(trace) == 1);
  }
  SUBCASE("identity chains never connect") {
    nbsl::WorldModel world = nbsl_test::binary_world(3);
    Scenario s{"eye", std::move(world), ChainSpec::periodic({StochasticMatrix::identity(3)}),
               BeliefState::uniform(3, 2), UpdateRule::standard, {}, false, 64, {}, {}};
    s.record.matrices = true;
    const TrialTrace trace = nbsl::run_trial(s, 1);
    CHECK_FALSE(trace.initial_connectivity_time);
    CHECK_FALSE(nbsl::initial_connectivity_time(trace));
  }
  SUBCASE("six-agent chain connects at time 1 through the uniform start") {
    Scenario s = six_agent_scenario(8);
    s.record.matrices = true;
    const TrialTrace trace = nbsl::run_trial(s, 1);
    CHECK(trace.initial_connectivity_time == 1);
    CHECK(nbsl::initial_connectivity_time(trace) == 1);
  }
  SUBCASE("the op needs the matrix log") {
    const TrialTrace trace = nbsl::run_trial(small_scenario(4), 1);
    CHECK_THROWS_AS(nbsl::initial_connectivity_time(trace), std::invalid_argument);
  }
}

TEST_CASE("epoch scan logs certified windows") {
  Scenario s = six_agent_scenario(16);
  s.analysis.epoch_window = 1;  // windows [k, k+1]
  const TrialTrace trace = nbsl::run_trial(s, 1);
  // bursts at t = 1, 2, 4, 8 certify windows starting there; identity-only
  // windows cannot certify because no singleton is self-sufficient
  for (const std::size_t start : trace.epoch_starts) {
    const bool burst = start == 0 || start == 1 || start == 2 || start == 4 || start == 8;
    CHECK(burst);
  }
  CHECK(std::find(trace.epoch_starts.begin(), trace.epoch_starts.end(), 4) !=
        trace.epoch_starts.end());
}

TEST_CASE("social-power weighted series") {
  // uniform social power for the complete mixing chain
  nbsl::ApsSequence aps;
  aps.phases = {{1.0 / 3, 1.0 / 3, 1.0 / 3}};
  aps.p_star = 1.0 / 3;

  nbsl::WorldModel world = nbsl_test::binary_world(3);
  ChainSpec chain = ChainSpec::periodic({StochasticMatrix::uniform_mixing(3)});
  // only agent 0 starts with any belief in the truth
  BeliefState priors = BeliefState::from_rows(
      {{0.5, 0.5}, {0.0, 1.0}, {0.0, 1.0}});
  Scenario s{"sentinel", std::move(world), std::move(chain), std::move(priors),
             UpdateRule::standard, {}, false, 50, {}, {}};
  const TrialTrace trace = nbsl::run_trial(s, 2, &aps);

  SUBCASE("weighted beliefs stay inside [0, 1]") {
    for (const auto& weighted : trace.aps_weighted)
      for (const double v : weighted) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
  }
  SUBCASE("weighted log belief uses the -inf sentinel until connectivity") {
    REQUIRE(trace.initial_connectivity_time == 1);
    CHECK(trace.aps_weighted_log_truth.front() == -std::numeric_limits<double>::infinity());
    // finite from the first snapshot at or after the connectivity time
    for (std::size_t k = 0; k < trace.snapshot_times.size(); ++k)
      if (trace.snapshot_times[k] >= *trace.initial_connectivity_time)
        CHECK(std::isfinite(trace.aps_weighted_log_truth[k]));
  }
}

TEST_CASE("monitored runs stay violation free") {
  Scenario s = six_agent_scenario(512);
  const TrialTrace trace = nbsl::run_trial(s, 3);
  CHECK(trace.violations.total() == 0);
  CHECK(trace.max_row_drift < 1e-12);
}

TEST_CASE("monte carlo aggregation") {
  const Scenario s = small_scenario(300);

  SUBCASE("single seed equals that trial's metrics") {
    const std::vector<std::uint64_t> seeds{9};
    const auto mc = nbsl::run_monte_carlo(s, seeds, 0.01);
    const auto trace = nbsl::run_trial(s, 9);
    const auto single = nbsl::summarize_trial(trace, 0.01);
    REQUIRE(mc.per_seed.size() == 1);
    CHECK(mc.per_seed[0].learning_time == single.learning_time);
    CHECK(mc.per_seed[0].final_min_truth == single.final_min_truth);
    CHECK(mc.learned_fraction == (single.learning_time ? 1.0 : 0.0));
  }
  SUBCASE("aggregate is order independent") {
    const std::vector<std::uint64_t> forward{1, 2, 3, 4, 5, 6};
    const std::vector<std::uint64_t> shuffled{4, 2, 6, 1, 5, 3};
    const auto a = nbsl::run_monte_carlo(s, forward, 0.01);
    const auto b = nbsl::run_monte_carlo(s, shuffled, 0.01);
    CHECK(a.learned_count == b.learned_count);
    CHECK(a.median_learning_time == b.median_learning_time);
    CHECK(a.mean_final_min_truth == doctest::Approx(b.mean_final_min_truth).epsilon(1e-15));
    CHECK(a.max_final_span == doctest::Approx(b.max_final_span).epsilon(1e-15));
  }
  SUBCASE("parallel and sequential runs agree") {
    const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8};
    const auto par = nbsl::run_monte_carlo(s, seeds, 0.01, nullptr, 4);
    const auto seq = nbsl::run_monte_carlo(s, seeds, 0.01, nullptr, 1);
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      CHECK(par.per_seed[k].seed == seq.per_seed[k].seed);
      CHECK(par.per_seed[k].final_min_truth == seq.per_seed[k].final_min_truth);
    }
  }
}

TEST_CASE("lemma monitors run clean on a healthy scenario") {
  Scenario s = small_scenario(200);
  const auto report = nbsl::run_lemma_monitors(s, 21, 500);
  CHECK(report.influence_checked > 0);
  CHECK(report.ratio_checked == 500);
  CHECK(report.total_violations() == 0);
}

TEST_CASE("scenario validation") {
  SUBCASE("inertial rule needs lambda below one") {
    Scenario s = small_scenario();
    s.rule = UpdateRule::inertial;
    s.lambda = nbsl::LambdaSchedule::constant({1.0, 0.5, 0.5});
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s.allow_unit_inertia = true;
    CHECK_NOTHROW(s.validate());
    s.allow_unit_inertia = false;
    s.lambda = nbsl::LambdaSchedule::constant({0.9, 0.5, 0.5});
    CHECK_NOTHROW(s.validate());
  }
  SUBCASE("dimension mismatches are rejected") {
    Scenario s = small_scenario();
    s.priors = BeliefState::uniform(4, 2);
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  }
}
