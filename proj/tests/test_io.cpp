#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "nbsl/fixtures.hpp"
#include "nbsl/results_io.hpp"
#include "nbsl/scenario_io.hpp"
#include "test_support.hpp"

using nbsl::parse_scenario_text;
using nbsl::Scenario;
using nbsl::ScenarioError;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("nbsl_test_" + tag);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("shipped fixtures parse") {
  SUBCASE("example1_2x2 reproduces the alternating chain") {
    const nbsl::Fixture* f = nbsl::find_fixture("example1_2x2");
    REQUIRE(f);
    const Scenario s = parse_scenario_text(std::string(f->json_text), "example1_2x2");
    CHECK(s.world.agent_count() == 2);
    CHECK(s.world.state_count() == 2);
    nbsl::RngStream rng(0, "matrix");
    CHECK(s.chain.matrix_at(0, rng) == nbsl_test::example_even_2x2());
    CHECK(s.chain.matrix_at(1, rng) == nbsl_test::example_odd_2x2());
    CHECK(s.chain.matrix_at(2, rng) == nbsl_test::example_even_2x2());
    CHECK(s.analysis.aps_period == 2);
  }
  SUBCASE("six_agent_aperiodic emits the even burst at t = 4") {
    const nbsl::Fixture* f = nbsl::find_fixture("six_agent_aperiodic");
    REQUIRE(f);
    const Scenario s = parse_scenario_text(std::string(f->json_text), "six_agent_aperiodic");
    CHECK(s.world.agent_count() == 6);
    CHECK(s.world.is_identifiable());
    CHECK(s.world.is_self_sufficient(std::vector<std::size_t>{1, 2}));
    CHECK(s.world.is_self_sufficient(std::vector<std::size_t>{4, 5}));
    nbsl::RngStream rng(0, "matrix");
    CHECK(s.chain.matrix_at(4, rng) == nbsl_test::six_agent_even());
    CHECK(s.chain.matrix_at(2, rng) == nbsl_test::six_agent_odd());
    CHECK(s.chain.matrix_at(5, rng) == nbsl::StochasticMatrix::identity(6));
    CHECK(s.horizon == 16384);
  }
  SUBCASE("every fixture parses and validates") {
    for (const nbsl::Fixture& f : nbsl::fixtures()) {
      const Scenario s = parse_scenario_text(std::string(f.json_text), std::string(f.name));
      CHECK(s.name == f.name);
      CHECK(s.horizon >= 1);
    }
  }
}

TEST_CASE("scenario parse errors carry locations") {
  SUBCASE("syntax errors report the byte offset") {
    CHECK_THROWS_WITH_AS(parse_scenario_text("{ not json", "bad"),
                         doctest::Contains("syntax error"), ScenarioError);
  }
  SUBCASE("bad likelihood row names the agent and state") {
    const std::string text = R"({
      "world": {
        "states": ["a", "b"],
        "true_state": "a",
        "agents": [
          {"signals": ["s0", "s1"], "likelihoods": {"a": [0.7, 0.5], "b": [0.5, 0.5]}}
        ]
      },
      "chain": {"kind": "periodic_deterministic", "matrices": [[[1.0, 0.0], [0.0, 1.0]]]},
      "priors": "uniform",
      "rule": "standard",
      "horizon": 10
    })";
    CHECK_THROWS_WITH_AS(parse_scenario_text(text, "doc"),
                         doctest::Contains("doc.world.agents[0].likelihoods.a"), ScenarioError);
  }
  SUBCASE("rational literals parse exactly") {
    const std::string text = R"({
      "world": {
        "states": ["a", "b"],
        "true_state": "a",
        "agents": [
          {"signals": ["s0", "s1", "s2"],
           "likelihoods": {"a": ["1/3", "1/3", "1/3"], "b": ["1/2", "1/4", "1/4"]}}
        ]
      },
      "chain": {"kind": "periodic_deterministic", "matrices": [[["1"]]]},
      "priors": "uniform",
      "rule": "standard",
      "horizon": 10
    })";
    const Scenario s = parse_scenario_text(text, "doc");
    CHECK(s.world.likelihood(0, 0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(s.world.likelihood(0, 1, 1) == 0.25);
  }
  SUBCASE("chain dimension mismatches are validation errors") {
    const std::string text = R"({
      "world": {
        "states": ["a", "b"],
        "true_state": "a",
        "agents": [
          {"signals": ["s0", "s1"], "likelihoods": {"a": [0.5, 0.5], "b": [0.25, 0.75]}},
          {"signals": ["s0", "s1"], "likelihoods": {"a": [0.5, 0.5], "b": [0.25, 0.75]}}
        ]
      },
      "chain": {"kind": "periodic_deterministic", "matrices": [[["1"]]]},
      "priors": "uniform",
      "rule": "standard",
      "horizon": 10
    })";
    CHECK_THROWS_WITH_AS(parse_scenario_text(text, "doc"),
                         doctest::Contains("chain dimension"), ScenarioError);
  }
  SUBCASE("noisy chains parse and keep both realizations stochastic") {
    const std::string text = R"({
      "world": {
        "states": ["a", "b"],
        "true_state": "a",
        "agents": [
          {"signals": ["s0", "s1"], "likelihoods": {"a": ["3/4", "1/4"], "b": ["1/4", "3/4"]}},
          {"signals": ["s0", "s1"], "likelihoods": {"a": ["3/4", "1/4"], "b": ["1/4", "3/4"]}}
        ]
      },
      "chain": {
        "kind": "noisy_example",
        "even": [["1", "0"], ["1/2", "1/2"]],
        "odd": [["1/2", "1/2"], ["0", "1"]],
        "noise": [["-1/2", "1/2"], ["0", "0"]]
      },
      "priors": "uniform",
      "rule": "standard",
      "horizon": 10
    })";
    const Scenario s = parse_scenario_text(text, "doc");
    CHECK(s.chain.kind() == nbsl::ChainSpec::Kind::noisy_example);
    nbsl::RngStream rng(0, "matrix");
    CHECK(s.chain.expected_at(1) == nbsl_test::example_odd_2x2());
  }
  SUBCASE("inertial rule parses lambda schedules") {
    const std::string text = R"({
      "world": {
        "states": ["a", "b"],
        "true_state": "a",
        "agents": [
          {"signals": ["s0", "s1"], "likelihoods": {"a": ["3/4", "1/4"], "b": ["1/4", "3/4"]}}
        ]
      },
      "chain": {"kind": "periodic_deterministic", "matrices": [[["1"]]]},
      "priors": "uniform",
      "rule": {"inertial": {"lambda": 0.5}},
      "horizon": 10
    })";
    const Scenario s = parse_scenario_text(text, "doc");
    CHECK(s.rule == nbsl::UpdateRule::inertial);
    CHECK(s.lambda.at(0) == std::vector<double>{0.5});
  }
}

TEST_CASE("series tables are stable and loss-free") {
  nbsl::SeriesTable table{"demo", {"time", "a", "b"}, {}};
  table.rows.push_back({0.0, 1.0 / 3.0, -std::numeric_limits<double>::infinity()});
  table.rows.push_back({1.0, 0.1234567890123456789, 2.0});
  const std::string csv = nbsl::to_csv(table);
  CHECK(csv.find("time,a,b\n") == 0);
  CHECK(csv.find("0.33333333333333331") != std::string::npos);  // 17 significant digits
  CHECK(csv.find("-inf") != std::string::npos);
}

TEST_CASE("write_results") {
  SUBCASE("empty bundle writes the summary and manifest only") {
    const auto dir = temp_dir("empty");
    nbsl::ResultBundle bundle;
    bundle.summary = {{"hello", 1}};
    const auto written = nbsl::write_results(bundle, dir);
    REQUIRE(written.size() == 2);
    CHECK(written[0].filename() == "summary.json");
    CHECK(written[1].filename() == "manifest.json");
    std::filesystem::remove_all(dir);
  }
  SUBCASE("three series yield three tables with stable names") {
    const auto dir = temp_dir("three");
    nbsl::ResultBundle bundle;
    bundle.summary = {{"n", 3}};
    for (const char* name : {"one", "two", "three"})
      bundle.series.push_back({name, {"time", "x"}, {{0.0, 1.0}}});
    const auto first = nbsl::write_results(bundle, dir);
    const auto second = nbsl::write_results(bundle, dir);
    REQUIRE(first.size() == second.size());
    for (std::size_t k = 0; k < first.size(); ++k) CHECK(first[k] == second[k]);
    CHECK(std::filesystem::exists(dir / "series_two.csv"));
    std::filesystem::remove_all(dir);
  }
  SUBCASE("summary round-trips unchanged") {
    const auto dir = temp_dir("roundtrip");
    nbsl::ResultBundle bundle;
    bundle.summary = {{"metrics", {{"learned", 0.9}, {"median", nullptr}}},
                      {"seeds", {1, 2, 3}},
                      {"name", "demo"}};
    bundle.certificates = {{"holds", true}};
    nbsl::write_results(bundle, dir);
    CHECK(nbsl::read_summary(dir / "summary.json") == bundle.summary);
    CHECK(nbsl::read_summary(dir / "certificates.json") == bundle.certificates);
    std::filesystem::remove_all(dir);
  }
}
