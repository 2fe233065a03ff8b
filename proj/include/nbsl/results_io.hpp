#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nbsl/harness.hpp"

namespace nbsl {

// Plot-ready flat table: one header row, time in the first column, one series
// per remaining column.
struct SeriesTable {
  std::string name;                      // file stem, e.g. "residual_norm"
  std::vector<std::string> columns;      // ["time", ...]
  std::vector<std::vector<double>> rows;
};

struct ResultBundle {
  nlohmann::json summary;
  std::vector<SeriesTable> series;
  nlohmann::json certificates;  // written only when non-null
};

namespace io_detail {

// Shortest round-trip formatting so identical runs emit identical bytes.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace io_detail

inline std::string to_csv(const SeriesTable& table) {
  std::ostringstream out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out << ',';
    out << table.columns[c];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size())
      throw std::invalid_argument("series table '" + table.name + "': ragged row");
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      out << io_detail::format_double(row[c]);
    }
    out << '\n';
  }
  return out.str();
}

// Writes summary, one CSV per series, the certificates report when present,
// and a manifest naming everything. File names are deterministic.
inline std::vector<std::filesystem::path> write_results(const ResultBundle& bundle,
                                                        const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("write_results: cannot create " + out_dir.string() + ": " +
                                   ec.message());

  auto write_file = [&](const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("write_results: cannot open " + p.string());
    out << text;
    if (!out) throw std::runtime_error("write_results: write failed for " + p.string());
  };

  std::vector<fs::path> written;
  const fs::path summary_path = out_dir / "summary.json";
  write_file(summary_path, bundle.summary.dump(2) + "\n");
  written.push_back(summary_path);

  for (const auto& table : bundle.series) {
    const fs::path p = out_dir / ("series_" + table.name + ".csv");
    write_file(p, to_csv(table));
    written.push_back(p);
  }

  if (!bundle.certificates.is_null()) {
    const fs::path p = out_dir / "certificates.json";
    write_file(p, bundle.certificates.dump(2) + "\n");
    written.push_back(p);
  }

  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& p : written) manifest.push_back(p.filename().string());
  const fs::path manifest_path = out_dir / "manifest.json";
  write_file(manifest_path, manifest.dump(2) + "\n");
  written.push_back(manifest_path);
  return written;
}

inline nlohmann::json read_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_summary: cannot open " + path.string());
  return nlohmann::json::parse(in);
}

// ---------------------------------------------------------------------------
// json views of toolkit results

inline nlohmann::json to_json(const MonitorCounts& v) {
  return {{"row_stochastic", v.row_stochastic},
          {"ratio_bounds", v.ratio_bounds},
          {"influence", v.influence}};
}

inline nlohmann::json to_json(const TrialSummary& t) {
  nlohmann::json j{{"seed", t.seed},
                   {"final_min_truth", t.final_min_truth},
                   {"final_max_span", t.final_max_span},
                   {"final_residual", t.final_residual},
                   {"epochs_detected", t.epochs_detected},
                   {"violations", to_json(t.violations)}};
  if (t.learning_time)
    j["learning_time"] = *t.learning_time;
  else
    j["learning_time"] = nullptr;
  return j;
}

inline nlohmann::json to_json(const MonteCarloSummary& s) {
  nlohmann::json per_seed = nlohmann::json::array();
  for (const auto& t : s.per_seed) per_seed.push_back(to_json(t));
  nlohmann::json j{{"epsilon", s.epsilon},
                   {"seeds", s.per_seed.size()},
                   {"learned_count", s.learned_count},
                   {"learned_fraction", s.learned_fraction},
                   {"mean_final_min_truth", s.mean_final_min_truth},
                   {"max_final_span", s.max_final_span},
                   {"violations", to_json(s.violations)},
                   {"per_seed", std::move(per_seed)}};
  if (s.median_learning_time)
    j["median_learning_time"] = *s.median_learning_time;
  else
    j["median_learning_time"] = nullptr;
  return j;
}

inline nlohmann::json to_json(const EpochCertificate& c) {
  nlohmann::json witnesses = nlohmann::json::array();
  for (std::size_t i = 0; i < c.witnesses.size(); ++i) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& w : c.witnesses[i])
      entries.push_back({{"agent", w.agent},
                         {"time", w.time},
                         {"self_confidence", w.self_confidence},
                         {"influence", w.influence}});
    witnesses.push_back({{"agent", i}, {"witnesses", std::move(entries)}});
  }
  return {{"t_start", c.t_start},
          {"t_end", c.t_end},
          {"gamma", c.gamma},
          {"per_agent", std::move(witnesses)}};
}

inline nlohmann::json to_json(const UscVerdict& v) {
  nlohmann::json j{{"holds", v.holds},
                   {"window_length", v.window_length},
                   {"entry_floor", v.entry_floor}};
  if (v.first_failure)
    j["first_failure"] = {{"window", v.first_failure->first},
                          {"reason", to_string(v.first_failure->second)}};
  else
    j["first_failure"] = nullptr;
  return j;
}

inline nlohmann::json to_json(const ApsSequence& aps) {
  return {{"period", aps.period()}, {"phases", aps.phases}, {"p_star", aps.p_star}};
}

inline nlohmann::json to_json(const LemmaMonitorReport& r) {
  return {{"samples", r.samples},
          {"influence", {{"checked", r.influence_checked}, {"violations", r.influence_violations}}},
          {"ratio_bounds", {{"checked", r.ratio_checked}, {"violations", r.ratio_violations}}},
          {"comparison_sandwich",
           {{"checked", r.sandwich_checked}, {"violations", r.sandwich_violations}}},
          {"span_monotone", {{"checked", r.span_checked}, {"violations", r.span_violations}}},
          {"row_stochastic_violations", r.row_stochastic_violations},
          {"total_violations", r.total_violations()}};
}

}  // namespace nbsl
