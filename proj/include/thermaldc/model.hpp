#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "error.hpp"
#include "params.hpp"

namespace thermaldc {

using HostId = std::int64_t;
using VmId = std::int64_t;
using WorkloadId = std::int64_t;

/// Seconds since simulation start. The engine only ever advances by whole intervals.
using Seconds = std::int64_t;

struct HostSpec {
  HostId id = 0;
  int cores = 4;
  double mips_per_core = 2000.0;
  double ram_mb = 8192.0;
  double bandwidth_bps = 1.0e9;
  ThermalParams thermal;
  PowerParams power;
  /// Temperature at t = 0; defaults to thermal.t_initial_c.
  std::optional<double> initial_temp_c;

  double capacity_mips() const noexcept { return cores * mips_per_core; }

  bool operator==(const HostSpec&) const = default;
};

/// Utilization of a VM in the units its defining formula emits: `resource`
/// is a fraction in [0, 1], the other three are percentages in [0, 100].
struct UtilizationSnapshot {
  double resource = 0.0;
  double memory_pct = 0.0;
  double disk_pct = 0.0;
  double network_pct = 0.0;

  bool operator==(const UtilizationSnapshot&) const = default;
};

enum class ThermalClass { unclassified, hot, warm, cold };

inline const char* to_string(ThermalClass c) noexcept {
  switch (c) {
  case ThermalClass::hot: return "hot";
  case ThermalClass::warm: return "warm";
  case ThermalClass::cold: return "cold";
  default: return "unclassified";
  }
}

struct VmSpec {
  VmId id = 0;
  double mips = 500.0;
  double ram_mb = 1024.0;
  double bandwidth_bps = 1.0e8;
  double storage_mb = 20480.0;
  /// Background CPU load (fraction of `mips`) the VM exercises with no tasks.
  double base_util = 0.0;
  std::optional<HostId> host_id;

  bool operator==(const VmSpec&) const = default;
};

struct VmState {
  VmSpec spec;
  UtilizationSnapshot util;
  std::optional<HostId> host_id;
  ThermalClass thermal_class = ThermalClass::unclassified;
  double delta_t_c = 0.0;
  /// CPU demand in MIPS (background load plus running tasks).
  double demand_mips = 0.0;
  /// Marginal dynamic power the VM adds to its host (or the reference host).
  double power_w = 0.0;
  /// Remaining migration pause, seconds.
  double downtime_s = 0.0;

  double demand_fraction() const noexcept {
    return spec.mips > 0.0 ? std::min(1.0, demand_mips / spec.mips) : 0.0;
  }
};

struct HostState {
  HostSpec spec;
  double current_temp_c = 0.0;
  std::vector<VmId> placed_vms;
  double reserved_mips = 0.0;
  double reserved_ram_mb = 0.0;
  /// CPU utilization fraction over the last interval.
  double utilization = 0.0;
  /// Processor dynamic power over the last interval; the P of the RC model.
  double dynamic_power_w = 0.0;

  double residual_mips() const noexcept { return spec.capacity_mips() - reserved_mips; }
  double residual_ram_mb() const noexcept { return spec.ram_mb - reserved_ram_mb; }
  bool fits(const VmSpec& vm) const noexcept {
    return vm.mips <= residual_mips() + 1e-9 && vm.ram_mb <= residual_ram_mb() + 1e-9;
  }
};

struct Workload {
  WorkloadId id = 0;
  double length_mi = 0.0;
  double mips_requested = 0.0;
  double file_size_mb = 0.0;
  double output_size_mb = 0.0;
  double ram_mb = 0.0;
  double cost_cd = 0.0;
  Seconds arrival_s = 0;
  std::optional<VmId> assigned_vm;
  std::optional<double> start_s;
  std::optional<double> finish_s;
  /// Replayed CPU-utilization samples (percent of peak_mips, one per interval);
  /// null for synthetic tasks, which always demand mips_requested.
  std::shared_ptr<const std::vector<double>> trace;
  double peak_mips = 0.0;

  /// CPU demand during the `offset`-th interval since the task started.
  double demand_mips(std::size_t offset) const noexcept {
    if (!trace) return mips_requested;
    if (offset < trace->size()) return (*trace)[offset] / 100.0 * peak_mips;
    return mips_requested;
  }
};

/// Distributions of synthetic workloads. Base values scale by a uniform
/// factor in [1 + lo, 1 + hi].
struct WorkloadGenConfig {
  std::int64_t count = 500;
  /// Expected arrivals per interval; derived as count / step_count when unset.
  std::optional<double> lambda_per_interval;
  double size_base_mi = 10000.0;
  double size_lo = 0.10, size_hi = 0.30;
  double file_base_mb = 300.0;
  double file_lo = 0.15, file_hi = 0.40;
  double output_base_mb = 300.0;
  double output_lo = 0.15, output_hi = 0.50;
  double cost_lo = 3.0, cost_hi = 5.0;
  double mips_lo = 100.0, mips_hi = 500.0;
  double ram_lo_mb = 128.0, ram_hi_mb = 512.0;

  bool operator==(const WorkloadGenConfig&) const = default;
};

struct VmThresholds {
  double theta_low_c = 0.0;
  double theta_high_c = 0.0;

  bool operator==(const VmThresholds&) const = default;
};

struct DataCenterConfig {
  std::vector<HostSpec> hosts;
  std::vector<VmSpec> vms;
  Seconds interval_s = 300;
  Seconds horizon_s = 172800;
  std::uint64_t seed = 1;
  std::string policy = "thermal+utilization";
  ThermalMode thermal_mode = ThermalMode::paper_literal;
  double sla_slack = 0.10;
  int replicates = 10;
  WorkloadGenConfig workload;
  /// PlanetLab utilization files replayed as additional workloads.
  std::vector<std::string> traces;
  double trace_peak_mips = 500.0;
  /// Overrides the ΔT thresholds derived from the host thermal constants.
  std::optional<VmThresholds> vm_thresholds;

  std::int64_t step_count() const noexcept { return interval_s > 0 ? horizon_s / interval_s : 0; }

  bool operator==(const DataCenterConfig&) const = default;
};

/// Small datacenter: 4 hosts (4 cores × 2000 MIPS, 8 GB, 1 Gbit/s) and
/// 12 unplaced VMs (500 MIPS, 1 GB, 100 Mbit/s).
inline DataCenterConfig default_config() {
  DataCenterConfig cfg;
  for (HostId h = 0; h < 4; ++h) {
    HostSpec hs;
    hs.id = h;
    cfg.hosts.push_back(hs);
  }
  for (VmId v = 0; v < 12; ++v) {
    VmSpec vs;
    vs.id = v;
    cfg.vms.push_back(vs);
  }
  return cfg;
}

namespace detail {

inline void require(bool ok, const std::string& field, const std::string& reason) {
  if (!ok) throw InvalidConfig(field, reason);
}

inline bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

inline void validate_power(const PowerParams& p, const std::string& at) {
  const double leaves[] = {p.short_circuit_w, p.leakage_w, p.idle_w,
                           p.storage.read_w, p.storage.write_w, p.storage.idle_w,
                           p.memory.sram_w, p.memory.dram_w,
                           p.network.router_w, p.network.gateway_w, p.network.lan_card_w, p.network.switch_w,
                           p.extra.motherboard_w, p.extra.connector_w,
                           p.cooling.ac_w, p.cooling.compressor_w, p.cooling.fan_w,
                           p.dyn.capacitance_f, p.dyn.voltage_v, p.dyn.frequency_hz, p.dyn.mu1, p.dyn.mu2};
  for (double v : leaves) require(finite_nonneg(v), at + ".power", "all power parameters must be >= 0");
  require(p.extra.connector_ports >= 0, at + ".power.extra.connector_ports", "must be >= 0");
}

inline void validate_thermal(const ThermalParams& t, const std::string& at) {
  require(std::isfinite(t.r_kw) && t.r_kw > 0.0, at + ".thermal.r_kw", "must be > 0");
  require(std::isfinite(t.c_jk) && t.c_jk > 0.0, at + ".thermal.c_jk", "must be > 0");
  require(t.t_normal_c < t.t_danger_c && t.t_danger_c < t.t_over_c, at + ".thermal",
          "requires t_normal_c < t_danger_c < t_over_c");
  require(t.theta_cl_c <= t.theta_ch_c, at + ".thermal", "requires theta_cl_c <= theta_ch_c");
}

} // namespace detail

/// Checks every invariant of `cfg` and returns a copy with defaults filled in.
/// Throws InvalidConfig naming the first offending field.
inline HostState make_host_state(const HostSpec& h) {
  HostState hs;
  hs.spec = h;
  return hs;
}

inline DataCenterConfig validate_config(DataCenterConfig cfg) {
  using detail::require;
  require(cfg.interval_s > 0, "interval_s", "must be > 0");
  require(cfg.horizon_s > 0, "horizon_s", "must be > 0");
  require(cfg.horizon_s % cfg.interval_s == 0, "horizon_s", "must be a multiple of interval_s");
  require(std::isfinite(cfg.sla_slack) && cfg.sla_slack >= 0.0, "sla_slack", "must be >= 0");
  require(cfg.replicates >= 1, "replicates", "must be >= 1");
  require(!cfg.policy.empty(), "policy", "must not be empty");
  require(!cfg.hosts.empty(), "hosts", "at least one host is required");

  const auto& w = cfg.workload;
  require(w.count >= 0, "workload.count", "must be >= 0");
  require(!w.lambda_per_interval || (std::isfinite(*w.lambda_per_interval) && *w.lambda_per_interval >= 0.0),
          "workload.lambda_per_interval", "must be >= 0");
  require(w.size_base_mi > 0.0 && w.size_lo <= w.size_hi && w.size_lo > -1.0, "workload.size", "invalid range");
  require(w.file_base_mb >= 0.0 && w.file_lo <= w.file_hi, "workload.file", "invalid range");
  require(w.output_base_mb >= 0.0 && w.output_lo <= w.output_hi, "workload.output", "invalid range");
  require(w.cost_lo >= 0.0 && w.cost_lo <= w.cost_hi, "workload.cost", "invalid range");
  require(w.mips_lo > 0.0 && w.mips_lo <= w.mips_hi, "workload.mips", "invalid range");
  require(w.ram_lo_mb >= 0.0 && w.ram_lo_mb <= w.ram_hi_mb, "workload.ram", "invalid range");
  require(cfg.trace_peak_mips > 0.0, "trace_peak_mips", "must be > 0");
  if (cfg.vm_thresholds)
    require(cfg.vm_thresholds->theta_low_c <= cfg.vm_thresholds->theta_high_c, "vm_thresholds",
            "theta_low_c must be <= theta_high_c");

  std::unordered_map<HostId, HostState> hosts;
  for (std::size_t i = 0; i < cfg.hosts.size(); ++i) {
    auto& h = cfg.hosts[i];
    const std::string at = "hosts[" + std::to_string(i) + "]";
    require(h.cores >= 1, at + ".cores", "must be >= 1");
    require(h.mips_per_core > 0.0, at + ".mips_per_core", "must be > 0");
    require(h.ram_mb > 0.0, at + ".ram_mb", "must be > 0");
    require(h.bandwidth_bps > 0.0, at + ".bandwidth_bps", "must be > 0");
    detail::validate_power(h.power, at);
    detail::validate_thermal(h.thermal, at);
    if (!h.initial_temp_c) h.initial_temp_c = h.thermal.t_initial_c;
    require(std::isfinite(*h.initial_temp_c), at + ".initial_temp_c", "must be finite");
    require(hosts.emplace(h.id, make_host_state(h)).second, at + ".id", "duplicate host id");
  }

  std::set<VmId> vm_ids;
  for (std::size_t i = 0; i < cfg.vms.size(); ++i) {
    const auto& v = cfg.vms[i];
    const std::string at = "vms[" + std::to_string(i) + "]";
    require(v.mips > 0.0, at + ".mips", "must be > 0");
    require(v.ram_mb >= 0.0, at + ".ram_mb", "must be >= 0");
    require(v.bandwidth_bps > 0.0, at + ".bandwidth_bps", "must be > 0");
    require(v.storage_mb > 0.0, at + ".storage_mb", "must be > 0");
    require(v.base_util >= 0.0 && v.base_util <= 1.0, at + ".base_util", "must be in [0, 1]");
    require(vm_ids.insert(v.id).second, at + ".id", "duplicate vm id");
    if (v.host_id) {
      auto it = hosts.find(*v.host_id);
      require(it != hosts.end(), at + ".host_id", "references an unknown host");
      require(it->second.fits(v), at + ".host_id", "host capacity exceeded by initial placement");
      it->second.reserved_mips += v.mips;
      it->second.reserved_ram_mb += v.ram_mb;
    }
  }
  return cfg;
}

} // namespace thermaldc
