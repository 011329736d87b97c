#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "error.hpp"
#include "model.hpp"

namespace thermaldc::utilization {

class EmptyLedger : public EmptyInput {
public:
  EmptyLedger() : EmptyInput("resource ledger is empty") {}
};

struct LedgerEntry {
  double busy_s = 0.0;
  double uptime_s = 0.0;
};

using ResourceLedger = std::vector<LedgerEntry>;

struct ResourceUtilization {
  double raw_sum = 0.0; // Σ busy/uptime, may exceed 1 with several resources
  double mean = 0.0;    // raw_sum / n, in [0, 1]
};

inline ResourceUtilization resource_utilization(std::span<const LedgerEntry> ledger) {
  if (ledger.empty()) throw EmptyLedger();
  double sum = 0.0;
  for (const auto& e : ledger) {
    if (!(e.uptime_s > 0.0) || e.busy_s < 0.0 || e.busy_s > e.uptime_s)
      throw DomainError("resource_utilization: requires 0 <= busy_s <= uptime_s and uptime_s > 0");
    sum += e.busy_s / e.uptime_s;
  }
  return {sum, sum / static_cast<double>(ledger.size())};
}

/// Percent of physical memory not reclaimable as free, buffers or cache.
inline double memory_utilization(double total_mb, double free_mb, double buffers_mb, double cache_mb) {
  if (!(total_mb > 0.0)) throw DomainError("memory_utilization: total must be > 0");
  const double reclaimable = free_mb + buffers_mb + cache_mb;
  if (free_mb < 0.0 || buffers_mb < 0.0 || cache_mb < 0.0 || reclaimable > total_mb)
    throw DomainError("memory_utilization: free + buffers + cache must lie in [0, total]");
  return (total_mb - reclaimable) / total_mb * 100.0;
}

inline double disk_utilization(double used, double size) {
  if (!(size > 0.0)) throw DomainError("disk_utilization: size must be > 0");
  if (used < 0.0 || used > size) throw DomainError("disk_utilization: used must lie in [0, size]");
  return used / size * 100.0;
}

/// Allocation-unit form; the unit size cancels, so it agrees with disk_utilization.
inline double disk_utilization_au(double alloc_units, double used_units, double size_units) {
  if (!(alloc_units > 0.0)) throw DomainError("disk_utilization_au: allocation unit must be > 0");
  if (!(size_units > 0.0)) throw DomainError("disk_utilization_au: size must be > 0");
  if (used_units < 0.0 || used_units > size_units)
    throw DomainError("disk_utilization_au: used must lie in [0, size]");
  return (alloc_units * used_units) / (alloc_units * size_units) * 100.0;
}

struct NetworkUtilization {
  double percent = 0.0;
  bool clamped = false; // true when the raw value exceeded 100 %
};

inline NetworkUtilization network_utilization(double data_bits, double bandwidth_bps, double interval_s) {
  if (!(bandwidth_bps > 0.0) || !(interval_s > 0.0))
    throw DomainError("network_utilization: bandwidth and interval must be > 0");
  if (data_bits < 0.0) throw DomainError("network_utilization: data must be >= 0");
  const double pct = data_bits / (bandwidth_bps * interval_s) * 100.0;
  if (pct > 100.0) return {100.0, true};
  return {pct, false};
}

/// Ordering keys of one item. `e_total_w` is only consulted for VMs.
struct SortKey {
  double e_total_w = 0.0;
  UtilizationSnapshot util;
};

/// UtilizationSort. VMs are first ordered by E_Total ascending, then stably
/// by R_Utilization in the requested direction; ties on R are broken by
/// memory, disk, then network utilization, each in the same direction.
/// `key` maps an item to its SortKey. The result is a permutation of `items`.
template <class T, class KeyFn>
std::vector<T> utilization_sort(std::vector<T> items, bool is_vm, bool decreasing, KeyFn key) {
  if (is_vm) {
    std::stable_sort(items.begin(), items.end(),
                     [&](const T& a, const T& b) { return key(a).e_total_w < key(b).e_total_w; });
  }
  auto chain = [&](const T& x) {
    const SortKey k = key(x);
    return std::make_tuple(k.util.resource, k.util.memory_pct, k.util.disk_pct, k.util.network_pct);
  };
  if (decreasing)
    std::stable_sort(items.begin(), items.end(), [&](const T& a, const T& b) { return chain(b) < chain(a); });
  else
    std::stable_sort(items.begin(), items.end(), [&](const T& a, const T& b) { return chain(a) < chain(b); });
  return items;
}

/// A task's resource demand plus its estimated utilization (the sort key).
struct TaskDemand {
  WorkloadId id = 0;
  double mips = 0.0;
  double ram_mb = 0.0;
  double bandwidth_bps = 0.0;
  UtilizationSnapshot est;
};

/// A VM's sort keys and what it can still accept.
struct VmCapacity {
  VmId id = 0;
  double e_total_w = 0.0;
  UtilizationSnapshot util;
  double residual_mips = 0.0;
  double residual_ram_mb = 0.0;
  double residual_bandwidth_bps = 0.0;
};

struct Assignment {
  std::vector<std::pair<WorkloadId, VmId>> assigned;
  std::vector<WorkloadId> unassigned;

  bool operator==(const Assignment&) const = default;
};

using Suitability = std::function<bool(const TaskDemand&, const VmCapacity&)>;

/// Capacity feasibility: MIPS, RAM and bandwidth all fit the VM's residuals.
inline bool capacity_fits(const TaskDemand& t, const VmCapacity& v) {
  constexpr double eps = 1e-9;
  return t.mips <= v.residual_mips + eps && t.ram_mb <= v.residual_ram_mb + eps &&
         t.bandwidth_bps <= v.residual_bandwidth_bps + eps;
}

inline void reserve(VmCapacity& v, const TaskDemand& t) {
  v.residual_mips -= t.mips;
  v.residual_ram_mb -= t.ram_mb;
  v.residual_bandwidth_bps -= t.bandwidth_bps;
}

inline SortKey task_key(const TaskDemand& t) { return {0.0, t.est}; }
inline SortKey vm_key(const VmCapacity& v) { return {v.e_total_w, v.util}; }

/// Greedy mapping: tasks by increasing estimated utilization, VMs by
/// decreasing utilization; each task goes to the first suitable VM and that
/// VM's residuals shrink. The VM order is fixed once at the start.
inline Assignment map_workloads(std::vector<TaskDemand> tasks, std::vector<VmCapacity> vms,
                                const Suitability& suitable = capacity_fits) {
  const auto task_order = utilization_sort(std::move(tasks), false, false, task_key);
  auto vm_order = utilization_sort(std::move(vms), true, true, vm_key);
  Assignment out;
  for (const auto& t : task_order) {
    bool placed = false;
    for (auto& v : vm_order) {
      if (suitable(t, v)) {
        out.assigned.emplace_back(t.id, v.id);
        reserve(v, t);
        placed = true;
        break;
      }
    }
    if (!placed) out.unassigned.push_back(t.id);
  }
  return out;
}

/// First-come first-served: tasks in the given (arrival) order, VMs in the
/// given order, first VM with capacity wins.
inline Assignment first_fit_workloads(std::span<const TaskDemand> tasks, std::vector<VmCapacity> vms,
                                      const Suitability& suitable = capacity_fits) {
  Assignment out;
  for (const auto& t : tasks) {
    auto it = std::find_if(vms.begin(), vms.end(), [&](const VmCapacity& v) { return suitable(t, v); });
    if (it == vms.end()) {
      out.unassigned.push_back(t.id);
      continue;
    }
    out.assigned.emplace_back(t.id, it->id);
    reserve(*it, t);
  }
  return out;
}

/// Bandwidth a task needs to move its input and output files within one interval.
inline double task_bandwidth_bps(const Workload& w, double interval_s) {
  return (w.file_size_mb + w.output_size_mb) * 8.0e6 / interval_s;
}

/// Mean capacities of the VM class, used to express task demand as utilization.
struct VmClassMeans {
  double mips = 1.0;
  double ram_mb = 1.0;
  double storage_mb = 1.0;
  double bandwidth_bps = 1.0;
};

inline VmClassMeans vm_class_means(std::span<const VmSpec> vms) {
  if (vms.empty()) return {};
  VmClassMeans m{0.0, 0.0, 0.0, 0.0};
  for (const auto& v : vms) {
    m.mips += v.mips;
    m.ram_mb += v.ram_mb;
    m.storage_mb += v.storage_mb;
    m.bandwidth_bps += v.bandwidth_bps;
  }
  const double n = static_cast<double>(vms.size());
  m.mips /= n;
  m.ram_mb /= n;
  m.storage_mb /= n;
  m.bandwidth_bps /= n;
  if (m.ram_mb <= 0.0) m.ram_mb = 1.0;
  return m;
}

/// Estimated utilization a task would impose on an average VM.
inline TaskDemand task_demand(const Workload& w, const VmClassMeans& means, double interval_s) {
  TaskDemand t;
  t.id = w.id;
  t.mips = w.mips_requested;
  t.ram_mb = w.ram_mb;
  t.bandwidth_bps = task_bandwidth_bps(w, interval_s);
  t.est.resource = std::clamp(w.mips_requested / means.mips, 0.0, 1.0);
  t.est.memory_pct = std::clamp(w.ram_mb / means.ram_mb * 100.0, 0.0, 100.0);
  t.est.disk_pct = std::clamp(w.file_size_mb / means.storage_mb * 100.0, 0.0, 100.0);
  t.est.network_pct = std::clamp(t.bandwidth_bps / means.bandwidth_bps * 100.0, 0.0, 100.0);
  return t;
}

} // namespace thermaldc::utilization
