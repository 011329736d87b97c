#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace thermaldc::io {

/// CPU utilization of one PlanetLab VM, percent, one sample per 300 s.
struct UtilizationTrace {
  std::string vm_label;
  std::vector<double> samples;
  std::int64_t spacing_s = 300;
  /// Number of samples that were outside [0, 100] and got clamped.
  std::size_t clamped = 0;

  std::int64_t duration_s() const noexcept { return spacing_s * static_cast<std::int64_t>(samples.size()); }
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Parses the integer-per-line format. Blank lines are skipped; anything
/// else that is not an integer is a ParseError at its line.
inline UtilizationTrace parse_planetlab_trace(std::istream& in, const std::string& label) {
  UtilizationTrace t;
  t.vm_label = label;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto s = trim(line);
    if (s.empty()) continue;
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
      throw ParseError(label, line_no, "expected an integer utilization, got '" + std::string(s) + "'");
    double pct = static_cast<double>(v);
    if (pct < 0.0 || pct > 100.0) {
      pct = pct < 0.0 ? 0.0 : 100.0;
      ++t.clamped;
    }
    t.samples.push_back(pct);
  }
  if (t.samples.empty()) throw ParseError(label, line_no, "trace contains no samples");
  return t;
}

inline UtilizationTrace load_planetlab_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace file: " + path.string());
  return parse_planetlab_trace(in, path.filename().string());
}

} // namespace thermaldc::io
