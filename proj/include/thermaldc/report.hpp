#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "config_json.hpp"
#include "engine.hpp"
#include "error.hpp"
#include "trace.hpp"

namespace thermaldc::io {

inline constexpr const char* tool_version = "0.1.0";

inline const char* const summary_header =
    "replicate,seed,total_energy_kwh,svr,migrations,temp_mean_c,temp_max_c,tasks_arrived,tasks_completed";
inline const char* const per_step_header =
    "step,clock_s,host_id,temp_c,power_w,energy_j_cum,migrations_cum,svr_cum";

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw Error("format_double: conversion failed");
  return std::string(buf, ptr);
}

inline double parse_double(std::string_view s, const std::string& where, std::size_t line) {
  s = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError(where, line, "expected a number, got '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline std::string summary_line(const engine::SummaryRow& r) {
  std::string s = r.replicate;
  s += ',' + std::to_string(r.seed);
  for (double v : {r.total_energy_kwh, r.svr, r.migrations, r.temp_mean_c, r.temp_max_c, r.tasks_arrived,
                   r.tasks_completed})
    s += ',' + format_double(v);
  return s;
}

inline std::string summary_csv(const std::vector<engine::SummaryRow>& rows) {
  std::string out = summary_header;
  out += '\n';
  for (const auto& r : rows) out += summary_line(r) + '\n';
  return out;
}

inline std::string per_step_csv(const std::vector<engine::StepRow>& rows) {
  std::string out = per_step_header;
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.step) + ',' + std::to_string(r.clock_s) + ',' + std::to_string(r.host_id) + ',' +
           format_double(r.temp_c) + ',' + format_double(r.power_w) + ',' + format_double(r.energy_j_cum) + ',' +
           std::to_string(r.migrations_cum) + ',' + format_double(r.svr_cum) + '\n';
  }
  return out;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string manifest_json(const DataCenterConfig& cfg, const engine::RunResult& run) {
  nlohmann::ordered_json m;
  m["tool"] = "thermaldc";
  m["tool_version"] = tool_version;
  m["seed"] = cfg.seed;
  m["config_digest"] = config::digest(cfg);
  m["policy"] = cfg.policy;
  m["thermal_mode"] = config::to_string(cfg.thermal_mode);
  m["replicates"] = cfg.replicates;
  m["interval_s"] = cfg.interval_s;
  m["horizon_s"] = cfg.horizon_s;
  m["lambda_per_interval"] = engine::Simulation::derived_lambda(cfg);
  auto& reps = m["replicate_runs"] = nlohmann::ordered_json::array();
  for (const auto& r : run.replicates)
    reps.push_back({{"seed", r.seed}, {"event_hash", config::hex64(r.event_hash)}});
  return m.dump(2) + "\n";
}

struct ReportPaths {
  std::filesystem::path summary;
  std::vector<std::filesystem::path> per_step;
  std::filesystem::path manifest;
};

/// Writes summary.csv, per_step.csv (replicate 0; per_step_rK.csv for the
/// others) and run_manifest.json into `dir`, creating it if needed.
inline ReportPaths write_report(const DataCenterConfig& cfg, const engine::RunResult& run,
                                const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  ReportPaths p;
  p.summary = dir / "summary.csv";
  write_file(p.summary, summary_csv(run.summary));
  for (std::size_t r = 0; r < run.replicates.size(); ++r) {
    auto path = dir / (r == 0 ? std::string("per_step.csv") : "per_step_r" + std::to_string(r) + ".csv");
    write_file(path, per_step_csv(run.replicates[r].rows));
    p.per_step.push_back(path);
  }
  p.manifest = dir / "run_manifest.json";
  write_file(p.manifest, manifest_json(cfg, run));
  return p;
}

namespace detail {

inline std::vector<std::string> csv_lines(const std::string& text, const std::string& where,
                                          std::string_view header) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  if (lines.empty() || trim(lines.front()) != header) throw SchemaError(where + ": expected header '" + std::string(header) + "'");
  return lines;
}

} // namespace detail

inline std::vector<engine::SummaryRow> read_summary(const std::filesystem::path& path) {
  const auto where = path.filename().string();
  const auto lines = detail::csv_lines(read_file(path), where, summary_header);
  std::vector<engine::SummaryRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto f = split_csv(lines[i]);
    if (f.size() != 9) throw ParseError(where, i + 1, "expected 9 fields");
    engine::SummaryRow r;
    r.replicate = std::string(trim(f[0]));
    const auto seed = trim(f[1]);
    auto [ptr, ec] = std::from_chars(seed.data(), seed.data() + seed.size(), r.seed);
    if (ec != std::errc{} || ptr != seed.data() + seed.size()) throw ParseError(where, i + 1, "bad seed");
    r.total_energy_kwh = parse_double(f[2], where, i + 1);
    r.svr = parse_double(f[3], where, i + 1);
    r.migrations = parse_double(f[4], where, i + 1);
    r.temp_mean_c = parse_double(f[5], where, i + 1);
    r.temp_max_c = parse_double(f[6], where, i + 1);
    r.tasks_arrived = parse_double(f[7], where, i + 1);
    r.tasks_completed = parse_double(f[8], where, i + 1);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::vector<engine::StepRow> read_per_step(const std::filesystem::path& path) {
  const auto where = path.filename().string();
  const auto lines = detail::csv_lines(read_file(path), where, per_step_header);
  std::vector<engine::StepRow> rows;
  auto to_int = [&](std::string_view s, std::size_t line) {
    return static_cast<std::int64_t>(std::llround(parse_double(s, where, line)));
  };
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto f = split_csv(lines[i]);
    if (f.size() != 8) throw ParseError(where, i + 1, "expected 8 fields");
    engine::StepRow r;
    r.step = to_int(f[0], i + 1);
    r.clock_s = to_int(f[1], i + 1);
    r.host_id = to_int(f[2], i + 1);
    r.temp_c = parse_double(f[3], where, i + 1);
    r.power_w = parse_double(f[4], where, i + 1);
    r.energy_j_cum = parse_double(f[5], where, i + 1);
    r.migrations_cum = to_int(f[6], i + 1);
    r.svr_cum = parse_double(f[7], where, i + 1);
    rows.push_back(r);
  }
  return rows;
}

/// Aggregates recomputed from a per-step CSV.
struct StepSummary {
  std::int64_t steps = 0;
  std::size_t hosts = 0;
  double total_energy_kwh = 0.0;
  double svr = 0.0;
  std::int64_t migrations = 0;
  double temp_mean_c = 0.0;
  double temp_max_c = 0.0;
};

inline StepSummary summarize_steps(const std::vector<engine::StepRow>& rows) {
  StepSummary s;
  if (rows.empty()) return s;
  std::int64_t last = rows.front().step;
  for (const auto& r : rows) last = std::max(last, r.step);
  std::vector<HostId> hosts;
  double sum = 0.0;
  s.temp_max_c = rows.front().temp_c;
  for (const auto& r : rows) {
    sum += r.temp_c;
    s.temp_max_c = std::max(s.temp_max_c, r.temp_c);
    if (r.step == last) {
      s.total_energy_kwh += r.energy_j_cum / 3.6e6;
      s.migrations = r.migrations_cum;
      s.svr = r.svr_cum;
      hosts.push_back(r.host_id);
    }
  }
  s.temp_mean_c = sum / static_cast<double>(rows.size());
  s.steps = last + 1;
  s.hosts = hosts.size();
  return s;
}

inline std::string step_summary_csv(const std::vector<std::pair<std::string, StepSummary>>& items) {
  std::string out = "file,steps,hosts,total_energy_kwh,svr,migrations,temp_mean_c,temp_max_c\n";
  for (const auto& [name, s] : items) {
    out += name + ',' + std::to_string(s.steps) + ',' + std::to_string(s.hosts) + ',' +
           format_double(s.total_energy_kwh) + ',' + format_double(s.svr) + ',' + std::to_string(s.migrations) +
           ',' + format_double(s.temp_mean_c) + ',' + format_double(s.temp_max_c) + '\n';
  }
  return out;
}

} // namespace thermaldc::io
