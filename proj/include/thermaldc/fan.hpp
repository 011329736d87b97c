#pragma once

#include <array>

#include "error.hpp"
#include "rng.hpp"

namespace thermaldc::predictor {

struct FanModel {
  double alpha = 1.5;      // RPM per °C
  double d_util_pct = 1.0; // precision of the average utilization
  double d_temp_c = 1.0;   // precision of the temperature

  bool operator==(const FanModel&) const = default;
};

inline constexpr std::size_t fan_count = 5;
using FanSpeeds = std::array<double, fan_count>;

/// RPM = α · average utilization · temperature.
inline double fan_rpm(double avg_util_pct, double temp_c, const FanModel& fm = {}) {
  if (avg_util_pct < 0.0 || temp_c < 0.0) throw DomainError("fan_rpm: inputs must be >= 0");
  return fm.alpha * avg_util_pct * temp_c;
}

/// Width of the band fan speeds scatter in, from the measurement precisions.
inline double fan_rpm_band(double avg_util_pct, double temp_c, const FanModel& fm = {}) {
  return fm.alpha * (fm.d_util_pct * temp_c + avg_util_pct * fm.d_temp_c);
}

inline FanSpeeds sample_fan_speeds(double rpm, double band, Rng& rng) {
  if (!(band >= 0.0)) throw DomainError("sample_fan_speeds: band must be >= 0");
  FanSpeeds out{};
  for (auto& f : out) f = band == 0.0 ? rpm : rng.uniform(rpm - 0.5 * band, rpm + 0.5 * band);
  return out;
}

} // namespace thermaldc::predictor
