#pragma once

// Reference implementations for the tests. Only plain data types are shared
// with the library.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <thermaldc/thermaldc.hpp>

namespace oracle {

using namespace thermaldc;

// Host power straight from the parameter table.
inline double host_watts(const PowerParams& p, int cores, double util, bool storage_active) {
  double watts = 0.0;
  for (int c = 0; c < cores; ++c) {
    if (util > 0.0) {
      const double lin = p.dyn.capacitance_f * p.dyn.voltage_v * p.dyn.voltage_v * p.dyn.frequency_hz;
      watts += 0.5 * (lin + p.dyn.mu1 * util + p.dyn.mu2 * util * util);
      watts += p.short_circuit_w + p.leakage_w;
    } else {
      watts += p.idle_w;
    }
  }
  watts += storage_active ? p.storage.read_w + p.storage.write_w : p.storage.idle_w;
  watts += p.memory.sram_w + p.memory.dram_w;
  watts += p.network.router_w + p.network.gateway_w + p.network.lan_card_w + p.network.switch_w;
  watts += p.extra.motherboard_w + p.extra.connector_w * p.extra.connector_ports;
  watts += p.cooling.ac_w + p.cooling.compressor_w + p.cooling.fan_w;
  return watts;
}

inline double processor_dynamic_watts(const PowerParams& p, int cores, double util) {
  if (util <= 0.0) return 0.0;
  if (util > 1.0) util = 1.0;
  const double lin = p.dyn.capacitance_f * p.dyn.voltage_v * p.dyn.voltage_v * p.dyn.frequency_hz;
  return cores * 0.5 * (lin + p.dyn.mu1 * util + p.dyn.mu2 * util * util);
}

// ---------------------------------------------------------------------------
// Workload mapping, step by step:
//   UtilizationSort(list, vm, decreasing):
//     if vm: sort list by E_Total increasing
//     sort list by R_Utilization (direction), ties by M, then D, then N
//   T' = UtilizationSort(T, false, false); V' = UtilizationSort(V, true, true)
//   for t in T': for v in V': if t suitable for v: schedule t on v; break
// Sorting is an insertion sort, which is stable by construction.

struct Item {
  std::int64_t id;
  double e_total;
  double r, m, d, n;
  double mips, ram, bw; // demand (tasks) or residual (VMs)
};

inline bool before_by_chain(const Item& a, const Item& b, bool decreasing) {
  const double ka[4] = {a.r, a.m, a.d, a.n};
  const double kb[4] = {b.r, b.m, b.d, b.n};
  for (int i = 0; i < 4; ++i) {
    if (ka[i] == kb[i]) continue;
    return decreasing ? ka[i] > kb[i] : ka[i] < kb[i];
  }
  return false;
}

template <class Before>
void insertion_sort(std::vector<Item>& v, Before before) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    Item x = v[i];
    std::size_t j = i;
    while (j > 0 && before(x, v[j - 1])) {
      v[j] = v[j - 1];
      --j;
    }
    v[j] = x;
  }
}

inline std::vector<Item> utilization_sort(std::vector<Item> list, bool vm, bool decreasing) {
  if (vm) insertion_sort(list, [](const Item& a, const Item& b) { return a.e_total < b.e_total; });
  insertion_sort(list, [&](const Item& a, const Item& b) { return before_by_chain(a, b, decreasing); });
  return list;
}

struct Mapping {
  std::vector<std::pair<std::int64_t, std::int64_t>> assigned;
  std::vector<std::int64_t> unassigned;
};

inline Mapping map_tasks(const std::vector<Item>& tasks, const std::vector<Item>& vms) {
  const auto t_sorted = utilization_sort(tasks, false, false);
  auto v_sorted = utilization_sort(vms, true, true);
  Mapping out;
  for (const auto& t : t_sorted) {
    bool done = false;
    for (auto& v : v_sorted) {
      const bool suitable = t.mips <= v.mips + 1e-9 && t.ram <= v.ram + 1e-9 && t.bw <= v.bw + 1e-9;
      if (!suitable) continue;
      out.assigned.emplace_back(t.id, v.id);
      v.mips -= t.mips;
      v.ram -= t.ram;
      v.bw -= t.bw;
      done = true;
      break;
    }
    if (!done) out.unassigned.push_back(t.id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Thermal-aware placement, step by step:
//   classify every waiting VM: ΔT > θ_high → hot, ΔT < θ_low → cold, else warm
//   repeat:
//     among hosts that can take some queued VM, pick the one farthest below
//     T_over (smallest id on ties)
//     if temp > θ_ch: try cold, warm, hot
//     else if temp < θ_cl: try hot, warm, cold
//     else: try warm, then cold if temp is in the upper half of the band,
//           hot otherwise, then the remaining queue
//     take the first VM (FIFO) of the first non-exhausted queue that fits
//     allocate it; predicted temp += its ΔT on that host
//   until the queues are empty or no host can take any VM

struct OHost {
  std::int64_t id;
  int cores;
  double capacity_mips;
  double ram;
  double used_mips, used_ram;
  double util;
  double temp;
  ThermalParams tp;
  PowerParams pp;
};

struct OVm {
  std::int64_t id;
  double mips, ram, demand;
  double delta_t;
};

struct OPlacement {
  std::int64_t vm, host;
};

inline double predicted_rise(const OHost& h, double vm_watts, ThermalMode mode, double dt) {
  // The temperature model is affine in power with slope R (paper-literal) or
  // R·(1 − e^(−dt/RC)) (time-dependent).
  const double r = h.tp.r_kw;
  if (mode == ThermalMode::paper_literal) return vm_watts * r;
  return vm_watts * r * (1.0 - std::exp(-dt / (r * h.tp.c_jk)));
}

inline std::vector<OPlacement> thermal_round(std::vector<OHost> hosts, const std::vector<OVm>& vms,
                                             double theta_low, double theta_high, ThermalMode mode, double dt) {
  std::vector<OVm> hot, warm, cold;
  for (const auto& v : vms) {
    if (v.delta_t > theta_high)
      hot.push_back(v);
    else if (v.delta_t < theta_low)
      cold.push_back(v);
    else
      warm.push_back(v);
  }
  auto fits = [](const OHost& h, const OVm& v) {
    return v.mips <= h.capacity_mips - h.used_mips + 1e-9 && v.ram <= h.ram - h.used_ram + 1e-9;
  };
  auto any_fit = [&](const OHost& h) {
    if (!(h.capacity_mips - h.used_mips > 0.0)) return false;
    for (auto* q : {&hot, &warm, &cold})
      for (const auto& v : *q)
        if (fits(h, v)) return true;
    return false;
  };

  std::vector<OPlacement> out;
  while (!hot.empty() || !warm.empty() || !cold.empty()) {
    OHost* best = nullptr;
    for (auto& h : hosts) {
      if (!any_fit(h)) continue;
      if (!best) {
        best = &h;
        continue;
      }
      const double hb = best->tp.t_over_c - best->temp, hh = h.tp.t_over_c - h.temp;
      if (hh > hb || (hh == hb && h.id < best->id)) best = &h;
    }
    if (!best) break;
    OHost& h = *best;

    std::vector<std::vector<OVm>*> order;
    if (h.temp > h.tp.theta_ch_c) {
      order = {&cold, &warm, &hot};
    } else if (h.temp < h.tp.theta_cl_c) {
      order = {&hot, &warm, &cold};
    } else if (h.temp >= (h.tp.theta_cl_c + h.tp.theta_ch_c) / 2.0) {
      order = {&warm, &cold, &hot};
    } else {
      order = {&warm, &hot, &cold};
    }
    std::optional<OVm> chosen;
    for (auto* q : order) {
      for (std::size_t i = 0; i < q->size(); ++i) {
        if (fits(h, (*q)[i])) {
          chosen = (*q)[i];
          q->erase(q->begin() + static_cast<std::ptrdiff_t>(i));
          break;
        }
      }
      if (chosen) break;
    }
    const OVm& v = *chosen;
    const double before = h.util;
    const double after = std::min(1.0, std::max(0.0, before + v.demand / h.capacity_mips));
    const double watts =
        processor_dynamic_watts(h.pp, h.cores, after) - processor_dynamic_watts(h.pp, h.cores, before);
    h.temp += predicted_rise(h, watts, mode, dt);
    h.util = after;
    h.used_mips += v.mips;
    h.used_ram += v.ram;
    out.push_back({v.id, h.id});
  }
  return out;
}

} // namespace oracle
