#pragma once

namespace thermaldc {

/// Linear (C·V²·f) and quadratic (μ₁·u + μ₂·u²) dynamic power coefficients of one core.
struct DynamicEnergyParams {
  double capacitance_f = 1.0e-9;
  double voltage_v = 1.2;
  double frequency_hz = 2.0e9;
  double mu1 = 120.0;
  double mu2 = 60.0;

  bool operator==(const DynamicEnergyParams&) const = default;
};

struct StoragePower {
  double read_w = 50.0;
  double write_w = 60.0;
  double idle_w = 35.0;

  bool operator==(const StoragePower&) const = default;
};

struct MemoryPower {
  double sram_w = 5.0;
  double dram_w = 15.0;

  bool operator==(const MemoryPower&) const = default;
};

struct NetworkPower {
  double router_w = 20.0;
  double gateway_w = 15.0;
  double lan_card_w = 15.0;
  double switch_w = 20.0;

  bool operator==(const NetworkPower&) const = default;
};

struct ExtraPower {
  double motherboard_w = 10.0;
  double connector_w = 1.5;
  int connector_ports = 4;

  bool operator==(const ExtraPower&) const = default;
};

struct CoolingPower {
  double ac_w = 200.0;
  double compressor_w = 150.0;
  double fan_w = 50.0;

  bool operator==(const CoolingPower&) const = default;
};

/// Per-host power draw parameters. Core draws are per core; every other
/// subsystem is per host. Defaults are the "table4" preset.
struct PowerParams {
  double short_circuit_w = 2.0;
  double leakage_w = 5.0;
  double idle_w = 30.0;
  StoragePower storage;
  MemoryPower memory;
  NetworkPower network;
  ExtraPower extra;
  CoolingPower cooling;
  DynamicEnergyParams dyn;

  bool operator==(const PowerParams&) const = default;
};

enum class ThermalMode { paper_literal, time_dependent };

/// RC/CRAC thermal constants of a host plus the host temperature thresholds.
/// Defaults are the "paper" preset.
struct ThermalParams {
  double r_kw = 0.12;       // thermal resistance, K/W
  double c_jk = 1000.0;     // heat capacity, J/K
  double t_inlet_c = 25.0;  // CRAC supply (inlet) temperature
  double t_initial_c = 17.0;
  double t_over_c = 79.0;
  double t_danger_c = 70.0;
  double t_normal_c = 29.0;
  double theta_cl_c = 29.0;
  double theta_ch_c = 70.0;

  bool operator==(const ThermalParams&) const = default;
};

} // namespace thermaldc
