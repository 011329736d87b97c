#pragma once

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "model.hpp"
#include "params.hpp"

namespace thermaldc::thermal {

/// CPU temperature of the RC/CRAC model.
///
/// paper_literal:   P·R + T_inlet + T_initial·e^(−R·C)
/// time_dependent:  P·R + T_inlet + (T_initial − P·R − T_inlet)·e^(−dt/(R·C))
///
/// In time-dependent mode `t_initial_c` is the temperature at the start of the
/// interval and the result is the temperature `dt_s` seconds later.
inline double cpu_temperature(double p_watts, const ThermalParams& tp, ThermalMode mode, double dt_s,
                              double t_initial_c) {
  if (!(p_watts >= 0.0)) throw DomainError("cpu_temperature: power must be >= 0");
  const double steady = p_watts * tp.r_kw + tp.t_inlet_c;
  if (mode == ThermalMode::paper_literal) return steady + t_initial_c * std::exp(-tp.r_kw * tp.c_jk);
  if (!(dt_s > 0.0)) throw DomainError("cpu_temperature: dt must be > 0 in time-dependent mode");
  if (std::isinf(dt_s)) return steady;
  return steady + (t_initial_c - steady) * std::exp(-dt_s / (tp.r_kw * tp.c_jk));
}

inline double cpu_temperature(double p_watts, const ThermalParams& tp, ThermalMode mode, double dt_s) {
  return cpu_temperature(p_watts, tp, mode, dt_s, tp.t_initial_c);
}

/// Temperature the host would reach with `vm_power_w` more dynamic power,
/// minus the temperature it reaches without it (ΔT of the VM on that host).
/// In time-dependent mode the host's current temperature is the start state.
inline double vm_delta_temperature(const HostState& host, double vm_power_w, ThermalMode mode, double dt_s) {
  if (!(vm_power_w >= 0.0)) throw DomainError("vm_delta_temperature: power must be >= 0");
  const auto& tp = host.spec.thermal;
  const double start = mode == ThermalMode::time_dependent ? host.current_temp_c : tp.t_initial_c;
  return cpu_temperature(host.dynamic_power_w + vm_power_w, tp, mode, dt_s, start) -
         cpu_temperature(host.dynamic_power_w, tp, mode, dt_s, start);
}

/// Raw ΔT thresholds: high = T_over − T_danger, low = ½·T_normal − T_danger.
struct RawThresholds {
  double theta_vh_c;
  double theta_vl_c;
};

inline RawThresholds raw_vm_thresholds(const ThermalParams& tp) {
  return {tp.t_over_c - tp.t_danger_c, 0.5 * tp.t_normal_c - tp.t_danger_c};
}

/// Raw thresholds ordered so that theta_low ≤ theta_high.
inline VmThresholds vm_thresholds(const ThermalParams& tp) {
  const auto raw = raw_vm_thresholds(tp);
  return {std::min(raw.theta_vh_c, raw.theta_vl_c), std::max(raw.theta_vh_c, raw.theta_vl_c)};
}

/// Strict comparisons: a ΔT equal to either threshold is warm.
inline ThermalClass classify_vm(double delta_t_c, const VmThresholds& th) {
  if (delta_t_c > th.theta_high_c) return ThermalClass::hot;
  if (delta_t_c < th.theta_low_c) return ThermalClass::cold;
  return ThermalClass::warm;
}

} // namespace thermaldc::thermal
