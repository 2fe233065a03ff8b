#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nbsl/harness.hpp"

namespace nbsl {

// Parse or validation failure, addressed by field path (and byte offset for
// syntax errors).
struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace io_detail {

using nlohmann::json;

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
  throw ScenarioError(where + ": " + what);
}

// Numbers may be JSON numbers or rational strings like "1/3"; rationals are
// parsed exactly and divided once.
inline double parse_number(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    const std::size_t slash = s.find('/');
    try {
      if (slash == std::string::npos) {
        std::size_t used = 0;
        const double x = std::stod(s, &used);
        if (used != s.size()) fail(where, "trailing characters in number '" + s + "'");
        return x;
      }
      const double num = std::stod(s.substr(0, slash));
      const double den = std::stod(s.substr(slash + 1));
      if (den == 0.0) fail(where, "zero denominator in '" + s + "'");
      return num / den;
    } catch (const std::invalid_argument&) {
      fail(where, "not a number: '" + s + "'");
    } catch (const std::out_of_range&) {
      fail(where, "number out of range: '" + s + "'");
    }
  }
  fail(where, "expected a number or rational string");
}

inline std::vector<double> parse_vector(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t k = 0; k < v.size(); ++k)
    out.push_back(parse_number(v[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

inline std::vector<std::vector<double>> parse_rows(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) fail(where, "expected a non-empty array of rows");
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < v.size(); ++i)
    rows.push_back(parse_vector(v[i], where + "[" + std::to_string(i) + "]"));
  return rows;
}

inline StochasticMatrix parse_matrix(const json& v, const std::string& where) {
  const auto rows = parse_rows(v, where);
  const ValidationReport report = validate_stochastic(rows);
  if (!report.ok) {
    const auto& viol = report.violations.front();
    fail(where + "[" + std::to_string(viol.row) + "]",
         viol.has_negative ? "negative entry" : "row sums to " + std::to_string(viol.row_sum));
  }
  return StochasticMatrix::from_rows(rows);
}

inline const json& require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) fail(where, "missing field '" + key + "'");
  return obj.at(key);
}

inline ParamSchedule parse_param_schedule(const json& v, const std::string& where) {
  if (v.is_number() || v.is_string())
    return ParamSchedule::constant(parse_number(v, where));
  if (!v.is_object()) fail(where, "expected a number or a schedule object");
  const std::string kind = require(v, "kind", where).get<std::string>();
  if (kind == "constant")
    return ParamSchedule::constant(parse_number(require(v, "value", where), where + ".value"));
  if (kind == "cycle")
    return ParamSchedule::cycle(parse_vector(require(v, "values", where), where + ".values"));
  if (kind == "harmonic") return ParamSchedule::harmonic();
  fail(where + ".kind", "unknown schedule kind '" + kind + "'");
}

inline LambdaSchedule parse_lambda(const json& v, std::size_t agents, const std::string& where) {
  auto broadcast = [&](double x) { return std::vector<double>(agents, x); };
  if (v.is_number() || v.is_string())
    return LambdaSchedule::constant(broadcast(parse_number(v, where)));
  if (v.is_array()) {
    const std::vector<double> vals = parse_vector(v, where);
    if (vals.size() != agents) fail(where, "lambda vector length must equal agent count");
    return LambdaSchedule::constant(vals);
  }
  if (v.is_object()) {
    const std::string kind = require(v, "kind", where).get<std::string>();
    if (kind == "constant")
      return parse_lambda(require(v, "values", where), agents, where + ".values");
    if (kind == "cycle") {
      LambdaSchedule s;
      const json& arr = require(v, "values", where);
      if (!arr.is_array() || arr.empty()) fail(where + ".values", "expected non-empty array");
      for (std::size_t k = 0; k < arr.size(); ++k) {
        const std::string at = where + ".values[" + std::to_string(k) + "]";
        std::vector<double> vals =
            arr[k].is_array() ? parse_vector(arr[k], at) : broadcast(parse_number(arr[k], at));
        if (vals.size() != agents) fail(at, "lambda vector length must equal agent count");
        s.cycle.push_back(std::move(vals));
      }
      return s;
    }
    fail(where + ".kind", "unknown lambda schedule kind '" + kind + "'");
  }
  fail(where, "expected a number, array, or schedule object");
}

inline ChainSpec parse_chain(const json& v, const std::string& where) {
  const std::string kind = require(v, "kind", where).get<std::string>();
  try {
    if (kind == "periodic_deterministic") {
      const json& arr = require(v, "matrices", where);
      if (!arr.is_array() || arr.empty()) fail(where + ".matrices", "expected >= 1 matrix");
      std::vector<StochasticMatrix> ms;
      for (std::size_t k = 0; k < arr.size(); ++k)
        ms.push_back(parse_matrix(arr[k], where + ".matrices[" + std::to_string(k) + "]"));
      return ChainSpec::periodic(std::move(ms));
    }
    if (kind == "liu14") {
      return ChainSpec::liu14(
          parse_matrix(require(v, "base", where), where + ".base"),
          parse_param_schedule(require(v, "eta", where), where + ".eta"));
    }
    if (kind == "link_failure") {
      return ChainSpec::link_failure(
          parse_matrix(require(v, "base", where), where + ".base"),
          parse_number(require(v, "rho", where), where + ".rho"));
    }
    if (kind == "erdos_renyi") {
      return ChainSpec::erdos_renyi(
          require(v, "n", where).get<std::size_t>(),
          parse_param_schedule(require(v, "rho", where), where + ".rho"));
    }
    if (kind == "noisy_example") {
      return ChainSpec::noisy_example(
          parse_matrix(require(v, "even", where), where + ".even"),
          parse_matrix(require(v, "odd", where), where + ".odd"),
          parse_rows(require(v, "noise", where), where + ".noise"));
    }
    if (kind == "inertial_augmented") {
      ChainSpec inner = parse_chain(require(v, "inner", where), where + ".inner");
      const std::size_t agents = inner.agent_count();
      return ChainSpec::inertial_augmentation(
          std::move(inner), parse_lambda(require(v, "lambda", where), agents, where + ".lambda"));
    }
    if (kind == "diffusion_augmented") {
      return ChainSpec::diffusion_augmentation(
          parse_chain(require(v, "inner", where), where + ".inner"));
    }
    if (kind == "pow2_bursts") {
      return ChainSpec::pow2_bursts(
          parse_matrix(require(v, "initial", where), where + ".initial"),
          parse_matrix(require(v, "even_exponent", where), where + ".even_exponent"),
          parse_matrix(require(v, "odd_exponent", where), where + ".odd_exponent"));
    }
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }
  fail(where + ".kind", "unknown chain kind '" + kind + "'");
}

inline WorldModel parse_world(const json& v, const std::string& where) {
  std::vector<std::string> states;
  for (const auto& s : require(v, "states", where)) states.push_back(s.get<std::string>());
  const std::string truth = require(v, "true_state", where).get<std::string>();
  std::size_t true_idx = states.size();
  for (std::size_t k = 0; k < states.size(); ++k)
    if (states[k] == truth) true_idx = k;
  if (true_idx == states.size()) fail(where + ".true_state", "'" + truth + "' is not a state");

  const json& agents_json = require(v, "agents", where);
  if (!agents_json.is_array() || agents_json.empty())
    fail(where + ".agents", "expected >= 1 agent");
  std::vector<WorldModel::AgentModel> agents;
  for (std::size_t i = 0; i < agents_json.size(); ++i) {
    const std::string at = where + ".agents[" + std::to_string(i) + "]";
    WorldModel::AgentModel agent;
    for (const auto& s : require(agents_json[i], "signals", at))
      agent.signals.push_back(s.get<std::string>());
    const json& lik = require(agents_json[i], "likelihoods", at);
    agent.likelihoods.resize(states.size());
    for (std::size_t th = 0; th < states.size(); ++th) {
      const std::string row_at = at + ".likelihoods." + states[th];
      if (!lik.contains(states[th])) fail(row_at, "missing likelihood row");
      agent.likelihoods[th] = parse_vector(lik.at(states[th]), row_at);
      if (agent.likelihoods[th].size() != agent.signals.size())
        fail(row_at, "length must match the signal count");
      double sum = 0.0;
      for (const double p : agent.likelihoods[th]) sum += p;
      if (std::abs(sum - 1.0) > 1e-9)
        fail(row_at, "row sums to " + std::to_string(sum));
    }
    agents.push_back(std::move(agent));
  }

  std::optional<std::vector<std::vector<double>>> joint;
  if (v.contains("joint")) {
    const json& jt = v.at("joint");
    std::vector<std::vector<double>> table(states.size());
    for (std::size_t th = 0; th < states.size(); ++th) {
      const std::string at = where + ".joint." + states[th];
      if (!jt.contains(states[th])) fail(at, "missing joint row");
      table[th] = parse_vector(jt.at(states[th]), at);
    }
    joint = std::move(table);
  }

  try {
    return WorldModel(std::move(states), true_idx, std::move(agents), std::move(joint));
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }
}

inline BeliefState parse_priors(const json& v, const WorldModel& world,
                                const std::string& where) {
  const std::size_t n = world.agent_count();
  const std::size_t k = world.state_count();
  if (v.is_string()) {
    if (v.get<std::string>() == "uniform") return BeliefState::uniform(n, k);
    fail(where, "unknown prior preset '" + v.get<std::string>() + "'");
  }
  if (v.is_object() && v.contains("degenerate_at")) {
    const std::string label = v.at("degenerate_at").get<std::string>();
    for (std::size_t th = 0; th < k; ++th)
      if (world.state_label(th) == label) return BeliefState::degenerate(n, k, th);
    fail(where + ".degenerate_at", "'" + label + "' is not a state");
  }
  if (v.is_array()) {
    const auto rows = parse_rows(v, where);
    if (rows.size() != n) fail(where, "need one prior row per agent");
    try {
      return BeliefState::from_rows(rows);
    } catch (const std::invalid_argument& e) {
      fail(where, e.what());
    }
  }
  fail(where, "expected 'uniform', {degenerate_at: state}, or a matrix");
}

}  // namespace io_detail

inline Scenario parse_scenario_json(const nlohmann::json& doc, const std::string& source) {
  using io_detail::fail;
  using io_detail::require;
  using nlohmann::json;
  if (!doc.is_object()) fail(source, "scenario document must be an object");

  WorldModel world = io_detail::parse_world(require(doc, "world", source), source + ".world");
  ChainSpec chain = io_detail::parse_chain(require(doc, "chain", source), source + ".chain");
  BeliefState priors =
      io_detail::parse_priors(require(doc, "priors", source), world, source + ".priors");

  UpdateRule rule = UpdateRule::standard;
  LambdaSchedule lambda;
  const json& rule_json = require(doc, "rule", source);
  if (rule_json.is_string()) {
    const std::string r = rule_json.get<std::string>();
    if (r == "standard") {
      rule = UpdateRule::standard;
    } else if (r == "diffusion") {
      rule = UpdateRule::diffusion;
    } else {
      fail(source + ".rule", "unknown rule '" + r + "' (inertial needs a lambda schedule)");
    }
  } else if (rule_json.is_object() && rule_json.contains("inertial")) {
    rule = UpdateRule::inertial;
    lambda = io_detail::parse_lambda(require(rule_json.at("inertial"), "lambda",
                                             source + ".rule.inertial"),
                                     world.agent_count(), source + ".rule.inertial.lambda");
  } else {
    fail(source + ".rule", "expected 'standard', 'diffusion', or {inertial: {lambda: ...}}");
  }

  const json& horizon_json = require(doc, "horizon", source);
  if (!horizon_json.is_number_unsigned() || horizon_json.get<std::size_t>() == 0)
    fail(source + ".horizon", "expected a positive integer");

  RecordOptions record;
  if (doc.contains("record")) {
    const json& r = doc.at("record");
    record.beliefs_every = r.value("beliefs_every", std::size_t{0});
    record.matrices = r.value("matrices", false);
    record.signals = r.value("signals", false);
    record.diagnostics = r.value("diagnostics", true);
  }

  AnalysisOptions analysis;
  if (doc.contains("analysis")) {
    const json& a = doc.at("analysis");
    if (a.contains("gamma"))
      analysis.gamma = io_detail::parse_number(a.at("gamma"), source + ".analysis.gamma");
    analysis.epoch_window = a.value("epoch_window", std::size_t{0});
    analysis.usc_b = a.value("usc_b", std::size_t{0});
    if (a.contains("usc_delta"))
      analysis.usc_delta =
          io_detail::parse_number(a.at("usc_delta"), source + ".analysis.usc_delta");
    analysis.aps_period = a.value("aps_period", std::size_t{0});
    analysis.balance = a.value("balance", false);
    analysis.feedback = a.value("feedback", false);
  }

  Scenario scenario{doc.value("name", source),
                    std::move(world),
                    std::move(chain),
                    std::move(priors),
                    rule,
                    std::move(lambda),
                    doc.value("allow_unit_inertia", false),
                    horizon_json.get<std::size_t>(),
                    record,
                    analysis};
  try {
    scenario.validate();
  } catch (const std::invalid_argument& e) {
    fail(source, e.what());
  }
  return scenario;
}

inline Scenario parse_scenario_text(const std::string& text, const std::string& source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError(source + ": syntax error at byte " + std::to_string(e.byte) + ": " +
                        e.what());
  }
  return parse_scenario_json(doc, source);
}

inline Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario_text(buffer.str(), path);
}

}  // namespace nbsl
