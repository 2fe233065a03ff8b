// Command-line front end: scenario simulation, connectivity certificates,
// absolute-probability-sequence solving, inequality monitors, and the shipped
// fixtures. Exit codes: 0 success, 2 validation failure, 3 certificate or
// assertion failure.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nbsl/fixtures.hpp"
#include "nbsl/results_io.hpp"
#include "nbsl/scenario_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitCertificate = 3;

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  const std::size_t dots = text.find("..");
  if (dots != std::string::npos) {
    const std::uint64_t a = std::stoull(text.substr(0, dots));
    const std::uint64_t b = std::stoull(text.substr(dots + 2));
    if (b < a) throw nbsl::ScenarioError("--seeds: range end before start");
    for (std::uint64_t s = a; s <= b; ++s) seeds.push_back(s);
    return seeds;
  }
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    if (!item.empty()) seeds.push_back(std::stoull(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (seeds.empty()) throw nbsl::ScenarioError("--seeds: no seeds given");
  return seeds;
}

std::vector<nbsl::StochasticMatrix> expected_chain(const nbsl::ChainSpec& chain,
                                                   std::size_t period) {
  std::vector<nbsl::StochasticMatrix> out;
  out.reserve(period);
  for (std::size_t t = 0; t < period; ++t) out.push_back(chain.expected_at(t));
  return out;
}

std::optional<nbsl::ApsSequence> scenario_aps(const nbsl::Scenario& scenario) {
  if (scenario.analysis.aps_period == 0) return std::nullopt;
  return nbsl::solve_aps_periodic(
      expected_chain(scenario.chain, scenario.analysis.aps_period));
}

int run_simulate(const std::string& path, const std::string& seeds_text, const std::string& out,
                 double epsilon, std::size_t threads) {
  const nbsl::Scenario scenario = nbsl::parse_scenario(path);
  const std::vector<std::uint64_t> seeds = parse_seeds(seeds_text);
  const std::optional<nbsl::ApsSequence> aps = scenario_aps(scenario);

  std::vector<nbsl::TrialTrace> traces =
      nbsl::map_trials(scenario, seeds, aps ? &*aps : nullptr, threads,
                       [](nbsl::TrialTrace trace) { return trace; });

  std::vector<nbsl::TrialSummary> per_seed;
  per_seed.reserve(traces.size());
  for (const auto& trace : traces) per_seed.push_back(nbsl::summarize_trial(trace, epsilon));
  const nbsl::MonteCarloSummary mc = nbsl::reduce_summaries(std::move(per_seed), epsilon);

  nbsl::ResultBundle bundle;
  bundle.summary = {{"command", "simulate"},
                    {"scenario", scenario.name},
                    {"seeds", seeds},
                    {"results", nbsl::to_json(mc)}};
  if (aps) bundle.summary["aps"] = nbsl::to_json(*aps);

  auto seed_column = [&](std::size_t idx) { return "seed" + std::to_string(seeds[idx]); };
  {
    nbsl::SeriesTable min_truth{"min_truth_belief", {"time"}, {}};
    nbsl::SeriesTable span{"disagreement", {"time"}, {}};
    for (std::size_t s = 0; s < traces.size(); ++s) {
      min_truth.columns.push_back(seed_column(s));
      span.columns.push_back(seed_column(s));
    }
    const auto& times_axis = traces.front().snapshot_times;
    for (std::size_t k = 0; k < times_axis.size(); ++k) {
      std::vector<double> row_belief{static_cast<double>(times_axis[k])};
      std::vector<double> row_span{static_cast<double>(times_axis[k])};
      for (const auto& trace : traces) {
        row_belief.push_back(trace.min_truth_belief_at(k));
        double worst = 0.0;
        for (std::size_t th = 0; th < trace.states; ++th)
          worst = std::max(worst, nbsl::diff_span(trace.beliefs[k].state_column(th)));
        row_span.push_back(worst);
      }
      min_truth.rows.push_back(std::move(row_belief));
      span.rows.push_back(std::move(row_span));
    }
    bundle.series.push_back(std::move(min_truth));
    bundle.series.push_back(std::move(span));
  }
  if (scenario.record.diagnostics && !traces.front().residual_norm.empty()) {
    nbsl::SeriesTable residual{"residual_norm", {"time"}, {}};
    for (std::size_t s = 0; s < traces.size(); ++s) residual.columns.push_back(seed_column(s));
    for (std::size_t t = 0; t < traces.front().residual_norm.size(); ++t) {
      std::vector<double> row{static_cast<double>(t)};
      for (const auto& trace : traces) row.push_back(trace.residual_norm[t]);
      residual.rows.push_back(std::move(row));
    }
    bundle.series.push_back(std::move(residual));
  }
  if (scenario.record.diagnostics && !traces.front().forecast_error.empty()) {
    nbsl::SeriesTable err{"forecast_error", {"time"}, {}};
    for (std::size_t s = 0; s < traces.size(); ++s) err.columns.push_back(seed_column(s));
    const auto& times_axis = traces.front().snapshot_times;
    for (std::size_t k = 0; k < times_axis.size(); ++k) {
      std::vector<double> row{static_cast<double>(times_axis[k])};
      for (const auto& trace : traces) row.push_back(trace.forecast_error[k]);
      err.rows.push_back(std::move(row));
    }
    bundle.series.push_back(std::move(err));
  }
  if (aps && !traces.front().aps_weighted.empty()) {
    nbsl::SeriesTable weighted{"aps_weighted_truth", {"time"}, {}};
    for (std::size_t s = 0; s < traces.size(); ++s) weighted.columns.push_back(seed_column(s));
    const auto& times_axis = traces.front().snapshot_times;
    for (std::size_t k = 0; k < times_axis.size(); ++k) {
      std::vector<double> row{static_cast<double>(times_axis[k])};
      for (const auto& trace : traces) row.push_back(trace.aps_weighted[k][trace.true_state]);
      weighted.rows.push_back(std::move(row));
    }
    bundle.series.push_back(std::move(weighted));
  }

  const auto written = nbsl::write_results(bundle, out);
  std::cout << "simulate: " << seeds.size() << " seeds, learned fraction "
            << mc.learned_fraction << "\n";
  for (const auto& p : written) std::cout << "  wrote " << p.string() << "\n";
  return kExitOk;
}

int run_check(const std::string& path, std::size_t t0, std::size_t t1, double gamma,
              std::vector<std::string> usc, bool balance, bool feedback,
              std::uint64_t seed, const std::string& out) {
  if (t0 >= t1) throw nbsl::ScenarioError("check: need window t0 < t1");
  const nbsl::Scenario scenario = nbsl::parse_scenario(path);

  // flags omitted on the command line fall back to the scenario's analysis block
  if (gamma <= 0.0) gamma = scenario.analysis.gamma;
  if (usc.empty() && scenario.analysis.usc_b > 0) {
    usc = {std::to_string(scenario.analysis.usc_b),
           std::to_string(scenario.analysis.usc_delta)};
  }
  balance = balance || scenario.analysis.balance;
  feedback = feedback || scenario.analysis.feedback;

  // walk the chain from t = 0 so random kinds reproduce the simulate draws
  nbsl::RngStream rng(seed, "matrix");
  std::vector<nbsl::StochasticMatrix> prefix;
  prefix.reserve(t1 + 1);
  for (std::size_t t = 0; t <= t1; ++t) prefix.push_back(scenario.chain.matrix_at(t, rng));
  const std::span<const nbsl::StochasticMatrix> window =
      std::span<const nbsl::StochasticMatrix>(prefix).subspan(t0, t1 - t0 + 1);

  nlohmann::json report{{"scenario", scenario.name},
                        {"window", {t0, t1}},
                        {"seed", seed}};
  bool certified = true;

  if (gamma > 0.0) {
    const auto cert = nbsl::detect_gamma_epoch(window, t0, scenario.world, gamma);
    if (cert) {
      report["gamma_epoch"] = nbsl::to_json(*cert);
    } else {
      report["gamma_epoch"] = nullptr;
      certified = false;
    }
  }
  if (!usc.empty()) {
    if (usc.size() != 2) throw nbsl::ScenarioError("check: --usc needs B and DELTA");
    const std::size_t B = std::stoull(usc[0]);
    const double delta = std::stod(usc[1]);
    if (B == 0 || window.size() % B != 0)
      throw nbsl::ScenarioError("check: window length must be a positive multiple of B");
    const nbsl::UscVerdict verdict = nbsl::check_usc(window, B, delta);
    report["usc"] = nbsl::to_json(verdict);
    certified = certified && verdict.holds;
  }
  if (balance) {
    double alpha = std::numeric_limits<double>::infinity();
    for (const auto& m : window) alpha = std::min(alpha, nbsl::max_balance_alpha(m));
    report["balance_alpha"] = alpha;
    certified = certified && alpha > 0.0;
  }
  if (feedback) {
    const double floor = nbsl::strong_feedback_floor(window);
    report["feedback_floor"] = floor;
    certified = certified && floor > 0.0;
  }
  report["certified"] = certified;

  std::cout << report.dump(2) << "\n";
  if (!out.empty()) {
    nbsl::ResultBundle bundle;
    bundle.summary = {{"command", "check"}, {"scenario", scenario.name}};
    bundle.certificates = report;
    // window matrices in long format, for debugging
    nbsl::SeriesTable matrices{"window_matrices", {"time", "row", "col", "value"}, {}};
    for (std::size_t t = t0; t <= t1; ++t) {
      const nbsl::StochasticMatrix& m = prefix[t];
      for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j)
          matrices.rows.push_back({static_cast<double>(t), static_cast<double>(i),
                                   static_cast<double>(j), m(i, j)});
    }
    bundle.series.push_back(std::move(matrices));
    nbsl::write_results(bundle, out);
  }
  return certified ? kExitOk : kExitCertificate;
}

int run_aps(const std::string& path, std::size_t period) {
  if (period == 0) throw nbsl::ScenarioError("aps: --period must be positive");
  const nbsl::Scenario scenario = nbsl::parse_scenario(path);
  const std::vector<nbsl::StochasticMatrix> chain = expected_chain(scenario.chain, period);
  const nbsl::ApsSequence aps = nbsl::solve_aps_periodic(chain);
  const nbsl::ApsCheck check = nbsl::verify_aps(aps, chain, 1e-10);
  for (std::size_t k = 0; k < aps.period(); ++k) {
    std::cout << "pi(" << k << ") =";
    for (const double v : aps.phases[k]) std::printf(" %.12g", v);
    std::cout << "\n";
  }
  std::printf("p_star = %.12g\n", aps.p_star);
  std::printf("verified: %s (max residual %.3g)\n", check.ok ? "yes" : "no",
              check.max_residual);
  return check.ok ? kExitOk : kExitCertificate;
}

int run_verify_lemmas(const std::string& path, std::uint64_t seed, std::size_t samples) {
  const nbsl::Scenario scenario = nbsl::parse_scenario(path);
  const nbsl::LemmaMonitorReport report = nbsl::run_lemma_monitors(scenario, seed, samples);
  std::cout << nbsl::to_json(report).dump(2) << "\n";
  return report.total_violations() == 0 ? kExitOk : kExitCertificate;
}

int run_fixtures(const std::string& action, const std::string& name) {
  if (action == "list") {
    for (const nbsl::Fixture& f : nbsl::fixtures())
      std::cout << f.name << "  -  " << f.description << "\n";
    return kExitOk;
  }
  if (action == "dump") {
    const nbsl::Fixture* f = nbsl::find_fixture(name);
    if (!f) throw nbsl::ScenarioError("fixtures: unknown fixture '" + name + "'");
    std::cout << f->json_text << "\n";
    return kExitOk;
  }
  throw nbsl::ScenarioError("fixtures: action must be 'list' or 'dump'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"social-learning simulation and connectivity-certificate toolkit"};
  app.require_subcommand(1);

  std::string scenario_path, seeds_text = "0", out_dir = "results";
  double epsilon = 0.01;
  std::size_t threads = 0;
  auto* simulate = app.add_subcommand("simulate", "run seeded Monte Carlo trials");
  simulate->add_option("scenario", scenario_path, "scenario file")->required();
  simulate->add_option("--seeds", seeds_text, "seed range a..b or comma list");
  simulate->add_option("--out", out_dir, "output directory");
  simulate->add_option("--epsilon", epsilon, "learning threshold (belief >= 1 - epsilon)");
  simulate->add_option("--threads", threads, "worker threads (0 = hardware)");

  std::string check_path, check_out;
  std::vector<std::size_t> window_args;
  double gamma = 0.0;
  std::vector<std::string> usc_args;
  bool balance = false, feedback = false;
  std::uint64_t check_seed = 0;
  auto* check = app.add_subcommand("check", "emit connectivity certificates for a window");
  check->add_option("scenario", check_path, "scenario file")->required();
  check->add_option("--window", window_args, "window start and end times t0 t1")
      ->expected(2)
      ->required();
  check->add_option("--gamma", gamma, "epoch threshold gamma");
  check->add_option("--usc", usc_args, "uniform strong connectivity: B DELTA")->expected(2);
  check->add_flag("--balance", balance, "report the worst balance coefficient");
  check->add_flag("--feedback", feedback, "report the self-confidence floor");
  check->add_option("--seed", check_seed, "seed for random chains");
  check->add_option("--out", check_out, "also write the report as a result bundle");

  std::string aps_path;
  std::size_t aps_period = 0;
  auto* aps = app.add_subcommand("aps", "solve the absolute probability sequence");
  aps->add_option("scenario", aps_path, "scenario file")->required();
  aps->add_option("--period", aps_period, "period of the expected chain")->required();

  std::string lemmas_path;
  std::uint64_t lemmas_seed = 0;
  std::size_t lemmas_samples = 10000;
  auto* lemmas = app.add_subcommand("verify-lemmas", "run one trial with inequality monitors");
  lemmas->add_option("scenario", lemmas_path, "scenario file")->required();
  lemmas->add_option("--seed", lemmas_seed, "trial seed");
  lemmas->add_option("--samples", lemmas_samples, "probes per monitor");

  std::string fixtures_action, fixtures_name;
  auto* fixtures_cmd = app.add_subcommand("fixtures", "list or dump shipped fixtures");
  fixtures_cmd->add_option("action", fixtures_action, "'list' or 'dump'")->required();
  fixtures_cmd->add_option("name", fixtures_name, "fixture name for 'dump'");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (simulate->parsed())
      return run_simulate(scenario_path, seeds_text, out_dir, epsilon, threads);
    if (check->parsed())
      return run_check(check_path, window_args[0], window_args[1], gamma, usc_args, balance,
                       feedback, check_seed, check_out);
    if (aps->parsed()) return run_aps(aps_path, aps_period);
    if (lemmas->parsed()) return run_verify_lemmas(lemmas_path, lemmas_seed, lemmas_samples);
    if (fixtures_cmd->parsed()) return run_fixtures(fixtures_action, fixtures_name);
  } catch (const nbsl::ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const nbsl::ApsError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCertificate;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
