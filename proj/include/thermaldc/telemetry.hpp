#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "energy.hpp"
#include "error.hpp"
#include "fan.hpp"
#include "params.hpp"
#include "report.hpp"
#include "rng.hpp"
#include "thermal.hpp"
#include "trace.hpp"

namespace thermaldc::predictor {

inline constexpr std::size_t feature_count = 9;
using Features = std::array<double, feature_count>;

struct TelemetryRecord {
  std::string server_id;
  std::int64_t timestamp_s = 0;
  FanSpeeds fan_rpm{};
  double system_pct = 0.0;
  double memory_pct = 0.0;
  double cpu_pct = 0.0;
  double io_pct = 0.0;
  double cpu_temp_c = 0.0;

  /// f1..f5, system, memory, cpu, io.
  Features features() const {
    return {fan_rpm[0], fan_rpm[1], fan_rpm[2], fan_rpm[3], fan_rpm[4], system_pct, memory_pct, cpu_pct, io_pct};
  }
  double avg_util_pct() const { return (system_pct + memory_pct + cpu_pct + io_pct) / 4.0; }

  bool operator==(const TelemetryRecord&) const = default;
};

inline const char* const telemetry_header =
    "server_id,timestamp,f1,f2,f3,f4,f5,system_pct,memory_pct,cpu_pct,io_pct,cpu_temp_c";

/// Accepts H:MM:SS (hours unbounded) or a plain count of seconds.
inline std::int64_t parse_timestamp(std::string_view s, const std::string& where, std::size_t line) {
  s = io::trim(s);
  auto bad = [&] { return ParseError(where, line, "bad timestamp '" + std::string(s) + "'"); };
  std::int64_t parts[3] = {0, 0, 0};
  std::size_t n = 0;
  std::size_t pos = 0;
  while (true) {
    const auto colon = s.find(':', pos);
    const auto field = s.substr(pos, colon == std::string_view::npos ? std::string_view::npos : colon - pos);
    if (n == 3 || field.empty()) throw bad();
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), parts[n]);
    if (ec != std::errc{} || ptr != field.data() + field.size() || parts[n] < 0) throw bad();
    ++n;
    if (colon == std::string_view::npos) break;
    pos = colon + 1;
  }
  if (n == 1) return parts[0];
  if (n != 3 || parts[1] > 59 || parts[2] > 59) throw bad();
  return parts[0] * 3600 + parts[1] * 60 + parts[2];
}

inline std::string format_timestamp(std::int64_t s) {
  const auto h = s / 3600, m = s / 60 % 60, sec = s % 60;
  std::string out = std::to_string(h) + ':';
  if (m < 10) out += '0';
  out += std::to_string(m) + ':';
  if (sec < 10) out += '0';
  return out + std::to_string(sec);
}

/// Parses the telemetry CSV. The header must contain every column (any
/// order); fan speeds must be ≥ 0, percents in [0, 100], and timestamps must
/// increase strictly per server.
inline std::vector<TelemetryRecord> parse_telemetry_csv(std::istream& in, const std::string& where) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(where + ": missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = io::split_csv(line);
  const auto expected = io::split_csv(telemetry_header);
  std::array<std::size_t, 12> col{};
  for (std::size_t k = 0; k < expected.size(); ++k) {
    auto it = std::find_if(header.begin(), header.end(), [&](std::string_view h) { return io::trim(h) == expected[k]; });
    if (it == header.end()) throw SchemaError(where + ": missing column '" + std::string(expected[k]) + "'");
    col[k] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<TelemetryRecord> out;
  std::map<std::string, std::int64_t> last_ts;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (io::trim(line).empty()) continue;
    const auto f = io::split_csv(line);
    if (f.size() != header.size())
      throw ParseError(where, line_no, "expected " + std::to_string(header.size()) + " fields");
    TelemetryRecord r;
    r.server_id = std::string(io::trim(f[col[0]]));
    if (r.server_id.empty()) throw ParseError(where, line_no, "empty server_id");
    r.timestamp_s = parse_timestamp(f[col[1]], where, line_no);
    for (std::size_t k = 0; k < fan_count; ++k) {
      r.fan_rpm[k] = io::parse_double(f[col[2 + k]], where, line_no);
      if (!(r.fan_rpm[k] >= 0.0) || !std::isfinite(r.fan_rpm[k]))
        throw ParseError(where, line_no, "fan speed must be >= 0");
    }
    double* pct[] = {&r.system_pct, &r.memory_pct, &r.cpu_pct, &r.io_pct};
    for (std::size_t k = 0; k < 4; ++k) {
      *pct[k] = io::parse_double(f[col[7 + k]], where, line_no);
      if (!(*pct[k] >= 0.0 && *pct[k] <= 100.0))
        throw ParseError(where, line_no, std::string(expected[7 + k]) + " must be in [0, 100]");
    }
    r.cpu_temp_c = io::parse_double(f[col[11]], where, line_no);
    if (!std::isfinite(r.cpu_temp_c)) throw ParseError(where, line_no, "cpu_temp_c must be finite");
    auto [it, fresh] = last_ts.emplace(r.server_id, r.timestamp_s);
    if (!fresh) {
      if (r.timestamp_s <= it->second)
        throw ParseError(where, line_no, "timestamps of server " + r.server_id + " must increase");
      it->second = r.timestamp_s;
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<TelemetryRecord> load_telemetry(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open telemetry file: " + path.string());
  return parse_telemetry_csv(in, path.filename().string());
}

inline std::string telemetry_csv(const std::vector<TelemetryRecord>& records) {
  std::string out = telemetry_header;
  out += '\n';
  for (const auto& r : records) {
    out += r.server_id + ',' + format_timestamp(r.timestamp_s);
    for (double v : r.fan_rpm) out += ',' + io::format_double(v);
    for (double v : {r.system_pct, r.memory_pct, r.cpu_pct, r.io_pct, r.cpu_temp_c}) out += ',' + io::format_double(v);
    out += '\n';
  }
  return out;
}

/// Records grouped per server, each group in file order.
inline std::vector<std::vector<TelemetryRecord>> by_server(const std::vector<TelemetryRecord>& records) {
  std::vector<std::vector<TelemetryRecord>> out;
  std::map<std::string, std::size_t> index;
  for (const auto& r : records) {
    auto [it, fresh] = index.emplace(r.server_id, out.size());
    if (fresh) out.emplace_back();
    out[it->second].push_back(r);
  }
  return out;
}

struct SyntheticTelemetryConfig {
  std::size_t records = 1200;
  std::int64_t spacing_s = 300;
  std::string server_id = "S1";
  FanModel fan;
  PowerParams power;
  ThermalParams thermal;
  int cores = 4;
  double util_noise_pct = 1.0;
  double temp_noise_c = 1.0;
};

/// Telemetry of one server. Utilizations follow bounded random walks; the
/// CPU temperature follows the RC model driven by the processor's dynamic
/// power; fan speeds scatter around α · average utilization · temperature.
inline std::vector<TelemetryRecord> synthetic_telemetry(const SyntheticTelemetryConfig& cfg, std::uint64_t seed) {
  Rng walk(seed, Stream::workload_size);
  Rng fans(seed, Stream::fans);
  std::array<double, 4> util = {60.0, 65.0, 50.0, 60.0};
  double temp = cfg.thermal.t_initial_c;
  std::vector<TelemetryRecord> out;
  out.reserve(cfg.records);
  for (std::size_t i = 0; i < cfg.records; ++i) {
    for (auto& u : util) u = std::clamp(u + walk.uniform(-8.0, 8.0), 20.0, 95.0);
    const double p = energy::dynamic_processor_power(cfg.power, cfg.cores, util[2] / 100.0);
    temp = thermal::cpu_temperature(p, cfg.thermal, ThermalMode::time_dependent,
                                    static_cast<double>(cfg.spacing_s), temp);

    TelemetryRecord r;
    r.server_id = cfg.server_id;
    r.timestamp_s = static_cast<std::int64_t>(i) * cfg.spacing_s;
    double* pct[] = {&r.system_pct, &r.memory_pct, &r.cpu_pct, &r.io_pct};
    for (std::size_t k = 0; k < 4; ++k)
      *pct[k] = std::clamp(util[k] + walk.uniform(-cfg.util_noise_pct, cfg.util_noise_pct), 0.0, 100.0);
    r.cpu_temp_c = temp + walk.uniform(-cfg.temp_noise_c, cfg.temp_noise_c);
    const double avg = r.avg_util_pct();
    r.fan_rpm = sample_fan_speeds(fan_rpm(avg, r.cpu_temp_c, cfg.fan), fan_rpm_band(avg, r.cpu_temp_c, cfg.fan), fans);
    out.push_back(std::move(r));
  }
  return out;
}

} // namespace thermaldc::predictor
