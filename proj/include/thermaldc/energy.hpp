#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "error.hpp"
#include "params.hpp"

// Host power model. Everything here is instantaneous power in watts; the
// engine integrates watts over an interval into joules.
namespace thermaldc::energy {

/// Component tree of one host's power draw.
struct EnergyBreakdown {
  double processor_w = 0.0;
  double storage_w = 0.0;
  double memory_w = 0.0;
  double network_w = 0.0;
  double extra_w = 0.0;
  double computing_w = 0.0;
  double cooling_w = 0.0;
  double total_w = 0.0;
};

/// Average of the linear C·V²·f model and the quadratic μ₁u + μ₂u² model.
inline double dynamic_power(double u, const DynamicEnergyParams& p) {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("dynamic_power: utilization must be in [0, 1]");
  const double linear = p.capacitance_f * p.voltage_v * p.voltage_v * p.frequency_hz;
  const double nonlinear = p.mu1 * u + p.mu2 * u * u;
  return (linear + nonlinear) / 2.0;
}

struct CoreDraw {
  double dynamic_w = 0.0;
  double short_circuit_w = 0.0;
  double leakage_w = 0.0;
  double idle_w = 0.0;
};

inline double processor_power(std::span<const CoreDraw> cores) {
  double sum = 0.0;
  for (const auto& c : cores) sum += c.dynamic_w + c.short_circuit_w + c.leakage_w + c.idle_w;
  return sum;
}

/// Per-subsystem activity of a host over one interval. A core with
/// utilization 0 is idle; an idle subsystem draws only its idle term.
struct Activity {
  std::vector<double> core_util;
  bool storage_active = false;
};

inline Activity uniform_activity(int cores, double util, bool storage_active) {
  return Activity{std::vector<double>(static_cast<std::size_t>(cores), util), storage_active};
}

/// Per-core draws under `activity`: active cores pay dynamic + short-circuit
/// + leakage, idle cores pay only the idle term.
inline std::vector<CoreDraw> core_draws(const PowerParams& p, const Activity& activity) {
  std::vector<CoreDraw> out;
  out.reserve(activity.core_util.size());
  for (double u : activity.core_util) {
    if (u > 0.0)
      out.push_back({dynamic_power(u, p.dyn), p.short_circuit_w, p.leakage_w, 0.0});
    else
      out.push_back({0.0, 0.0, 0.0, p.idle_w});
  }
  return out;
}

inline double storage_power(const StoragePower& s, bool active) {
  return active ? s.read_w + s.write_w : s.idle_w;
}

inline double memory_power(const MemoryPower& m) { return m.sram_w + m.dram_w; }

inline double network_power(const NetworkPower& n) {
  return n.router_w + n.gateway_w + n.lan_card_w + n.switch_w;
}

inline double extra_power(const ExtraPower& e) {
  return e.motherboard_w + e.connector_w * e.connector_ports;
}

/// Computing subsystems only; cooling and the totals are left at zero.
inline EnergyBreakdown computing_power(const PowerParams& p, const Activity& activity) {
  EnergyBreakdown b;
  const auto cores = core_draws(p, activity);
  b.processor_w = processor_power(cores);
  b.storage_w = storage_power(p.storage, activity.storage_active);
  b.memory_w = memory_power(p.memory);
  b.network_w = network_power(p.network);
  b.extra_w = extra_power(p.extra);
  b.computing_w = b.processor_w + b.storage_w + b.memory_w + b.network_w + b.extra_w;
  return b;
}

inline double cooling_power(double ac_w, double compressor_w, double fan_w) {
  if (ac_w < 0.0 || compressor_w < 0.0 || fan_w < 0.0)
    throw DomainError("cooling_power: inputs must be >= 0");
  return ac_w + compressor_w + fan_w;
}

inline double cooling_power(const CoolingPower& c) {
  return cooling_power(c.ac_w, c.compressor_w, c.fan_w);
}

/// Breakdown with only the two top-level terms set.
inline EnergyBreakdown total_power(double computing_w, double cooling_w) {
  EnergyBreakdown b;
  b.computing_w = computing_w;
  b.cooling_w = cooling_w;
  b.total_w = computing_w + cooling_w;
  return b;
}

/// Full tree for one host.
inline EnergyBreakdown host_power(const PowerParams& p, const Activity& activity) {
  EnergyBreakdown b = computing_power(p, activity);
  b.cooling_w = cooling_power(p.cooling);
  b.total_w = b.computing_w + b.cooling_w;
  return b;
}

/// Sum of the processor dynamic terms only (the heat source of the RC model).
inline double dynamic_processor_power(const PowerParams& p, int cores, double util) {
  if (util <= 0.0) return 0.0;
  return cores * dynamic_power(std::min(util, 1.0), p.dyn);
}

} // namespace thermaldc::energy
