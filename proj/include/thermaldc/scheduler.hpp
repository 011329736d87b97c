#pragma once

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "energy.hpp"
#include "error.hpp"
#include "model.hpp"
#include "thermal.hpp"
#include "utilization.hpp"

namespace thermaldc::scheduler {

struct QueueSet {
  std::deque<VmId> q_hot;
  std::deque<VmId> q_warm;
  std::deque<VmId> q_cold;
  std::deque<VmId> waiting;

  std::size_t classified() const noexcept { return q_hot.size() + q_warm.size() + q_cold.size(); }
  bool empty() const noexcept { return q_hot.empty() && q_warm.empty() && q_cold.empty(); }

  std::deque<VmId>& queue(ThermalClass c) {
    switch (c) {
    case ThermalClass::hot: return q_hot;
    case ThermalClass::cold: return q_cold;
    default: return q_warm;
    }
  }

  bool operator==(const QueueSet&) const = default;
};

struct PlacementAction {
  enum class Kind { allocate, migrate, none };

  Kind kind = Kind::none;
  VmId vm_id = 0;
  std::optional<HostId> src_host;
  HostId dst_host = 0;

  bool operator==(const PlacementAction&) const = default;
};

/// Everything a policy may look at. Unplaced VMs (new requests and VMs
/// evicted from an overheated host) are listed in `waiting` in FIFO order;
/// an evicted VM's former host is kept in `previous_host` and its capacity
/// has already been released on that host.
struct DatacenterSnapshot {
  std::vector<HostState> hosts;
  std::vector<VmState> vms;
  std::deque<VmId> waiting;
  std::unordered_map<VmId, HostId> previous_host;
  ThermalMode mode = ThermalMode::paper_literal;
  double interval_s = 300.0;
  std::optional<VmThresholds> vm_thresholds;

  const VmState& vm(VmId id) const {
    auto it = std::find_if(vms.begin(), vms.end(), [&](const VmState& v) { return v.spec.id == id; });
    if (it == vms.end()) throw Error("snapshot: unknown vm " + std::to_string(id));
    return *it;
  }

  VmThresholds thresholds() const {
    if (vm_thresholds) return *vm_thresholds;
    return thermal::vm_thresholds(hosts.empty() ? ThermalParams{} : hosts.front().spec.thermal);
  }
};

/// Marginal processor dynamic power of running `vm` on `host` at the host's
/// current utilization.
inline double vm_power_on(const HostState& host, const VmState& vm) {
  const double cap = host.spec.capacity_mips();
  const double before = std::clamp(host.utilization, 0.0, 1.0);
  const double after = std::clamp(host.utilization + vm.demand_mips / cap, 0.0, 1.0);
  const auto& p = host.spec.power;
  return energy::dynamic_processor_power(p, host.spec.cores, after) -
         energy::dynamic_processor_power(p, host.spec.cores, before);
}

/// Hosts ordered by thermal headroom (T_over − current temperature),
/// largest first; ties by host id.
inline std::vector<std::size_t> headroom_order(std::span<const HostState> hosts,
                                               std::span<const double> temps) {
  std::vector<std::size_t> idx(hosts.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double ha = hosts[a].spec.thermal.t_over_c - temps[a];
    const double hb = hosts[b].spec.thermal.t_over_c - temps[b];
    if (ha != hb) return ha > hb;
    return hosts[a].spec.id < hosts[b].spec.id;
  });
  return idx;
}

/// Enqueues each VM (in the given order) to the queue of its class.
/// Each VM's `delta_t_c` must already be computed.
inline QueueSet classify_and_enqueue(std::span<const VmState> vms, const VmThresholds& th) {
  QueueSet qs;
  for (const auto& v : vms) qs.queue(thermal::classify_vm(v.delta_t_c, th)).push_back(v.spec.id);
  return qs;
}

/// Queue preference for a host at `host_temp_c`.
inline std::array<ThermalClass, 3> queue_preference(double host_temp_c, const ThermalParams& tp) {
  using C = ThermalClass;
  if (host_temp_c > tp.theta_ch_c) return {C::cold, C::warm, C::hot};
  if (host_temp_c < tp.theta_cl_c) return {C::hot, C::warm, C::cold};
  const double mid = 0.5 * (tp.theta_cl_c + tp.theta_ch_c);
  if (host_temp_c >= mid) return {C::warm, C::cold, C::hot};
  return {C::warm, C::hot, C::cold};
}

using VmFilter = std::function<bool(VmId)>;

/// Dequeues the VM for a host: hot host → cold first, cold host → hot first,
/// otherwise warm first. Within a queue the first VM (FIFO) accepted by
/// `accept` is taken. Returns nullopt iff no queued VM is acceptable.
inline std::optional<VmId> select_vm_for_host(double host_temp_c, const ThermalParams& tp, QueueSet& qs,
                                              const VmFilter& accept = {}) {
  for (ThermalClass c : queue_preference(host_temp_c, tp)) {
    auto& q = qs.queue(c);
    for (auto it = q.begin(); it != q.end(); ++it) {
      if (!accept || accept(*it)) {
        const VmId id = *it;
        q.erase(it);
        return id;
      }
    }
  }
  return std::nullopt;
}

namespace detail {

inline PlacementAction make_action(const DatacenterSnapshot& snap, VmId vm, HostId dst) {
  PlacementAction a;
  a.vm_id = vm;
  a.dst_host = dst;
  auto prev = snap.previous_host.find(vm);
  if (prev == snap.previous_host.end()) {
    a.kind = PlacementAction::Kind::allocate;
  } else {
    a.src_host = prev->second;
    a.kind = prev->second == dst ? PlacementAction::Kind::none : PlacementAction::Kind::migrate;
  }
  return a;
}

} // namespace detail

/// One thermal-aware scheduling round. Repeatedly takes the host with the
/// largest predicted headroom that can still accept a queued VM, selects a VM
/// for it via select_vm_for_host, and raises the host's predicted temperature
/// by that VM's ΔT. Stops when the queues are empty or nothing fits.
/// VMs left in `qs` were not placed.
inline std::vector<PlacementAction> schedule_round(const DatacenterSnapshot& snap, QueueSet& qs) {
  std::vector<PlacementAction> actions;
  std::vector<HostState> hosts = snap.hosts;
  std::vector<double> temps;
  temps.reserve(hosts.size());
  for (const auto& h : hosts) temps.push_back(h.current_temp_c);

  std::unordered_map<VmId, const VmState*> by_id;
  for (const auto& v : snap.vms) by_id.emplace(v.spec.id, &v);

  while (!qs.empty()) {
    bool placed = false;
    for (std::size_t i : headroom_order(hosts, temps)) {
      auto& host = hosts[i];
      if (host.residual_mips() <= 0.0 || host.residual_ram_mb() < 0.0) continue;
      auto fits = [&](VmId id) { return host.fits(by_id.at(id)->spec); };
      auto pick = select_vm_for_host(temps[i], host.spec.thermal, qs, fits);
      if (!pick) continue;
      const VmState& vm = *by_id.at(*pick);
      const double p = vm_power_on(host, vm);
      HostState predicted = host;
      predicted.current_temp_c = temps[i];
      temps[i] += thermal::vm_delta_temperature(predicted, p, snap.mode, snap.interval_s);
      host.dynamic_power_w += p;
      host.utilization = std::min(1.0, host.utilization + vm.demand_mips / host.spec.capacity_mips());
      host.reserved_mips += vm.spec.mips;
      host.reserved_ram_mb += vm.spec.ram_mb;
      actions.push_back(detail::make_action(snap, *pick, host.spec.id));
      placed = true;
      break;
    }
    if (!placed) break;
  }
  return actions;
}

/// First-fit VM placement: waiting VMs in FIFO order, hosts in listed order.
inline std::vector<PlacementAction> first_fit_vms(const DatacenterSnapshot& snap) {
  std::vector<PlacementAction> actions;
  std::vector<HostState> hosts = snap.hosts;
  for (VmId id : snap.waiting) {
    const VmState& vm = snap.vm(id);
    auto it = std::find_if(hosts.begin(), hosts.end(), [&](const HostState& h) { return h.fits(vm.spec); });
    if (it == hosts.end()) continue;
    it->reserved_mips += vm.spec.mips;
    it->reserved_ram_mb += vm.spec.ram_mb;
    actions.push_back(detail::make_action(snap, id, it->spec.id));
  }
  return actions;
}

/// Thermal-aware placement of every waiting VM: classify, then schedule_round.
inline std::vector<PlacementAction> thermal_schedule(const DatacenterSnapshot& snap) {
  std::vector<VmState> waiting;
  waiting.reserve(snap.waiting.size());
  for (VmId id : snap.waiting) waiting.push_back(snap.vm(id));
  QueueSet qs = classify_and_enqueue(waiting, snap.thresholds());
  return schedule_round(snap, qs);
}

/// A scheduling policy: VM→host placement plus task→VM mapping.
class Policy {
public:
  virtual ~Policy() = default;

  virtual std::string name() const = 0;

  /// Placement actions for the snapshot's waiting VMs; each action must be
  /// feasible when the list is applied in order.
  virtual std::vector<PlacementAction> schedule(const DatacenterSnapshot& snap) = 0;

  /// Task→VM mapping. `tasks` are in arrival order. Default: first fit.
  virtual utilization::Assignment map_tasks(std::span<const utilization::TaskDemand> tasks,
                                            std::vector<utilization::VmCapacity> vms) {
    return utilization::first_fit_workloads(tasks, std::move(vms));
  }

  /// Whether VMs on a host above T_over are re-queued before each round.
  virtual bool evicts_overheated() const { return false; }
};

class FcfsPolicy : public Policy {
public:
  std::string name() const override { return "fcfs"; }
  std::vector<PlacementAction> schedule(const DatacenterSnapshot& snap) override { return first_fit_vms(snap); }
};

class UtilizationPolicy : public Policy {
public:
  std::string name() const override { return "utilization"; }
  std::vector<PlacementAction> schedule(const DatacenterSnapshot& snap) override { return first_fit_vms(snap); }
  utilization::Assignment map_tasks(std::span<const utilization::TaskDemand> tasks,
                                    std::vector<utilization::VmCapacity> vms) override {
    return utilization::map_workloads({tasks.begin(), tasks.end()}, std::move(vms));
  }
};

class ThermalPolicy : public Policy {
public:
  std::string name() const override { return "thermal"; }
  std::vector<PlacementAction> schedule(const DatacenterSnapshot& snap) override { return thermal_schedule(snap); }
  bool evicts_overheated() const override { return true; }
};

class ThermalUtilizationPolicy : public ThermalPolicy {
public:
  std::string name() const override { return "thermal+utilization"; }
  utilization::Assignment map_tasks(std::span<const utilization::TaskDemand> tasks,
                                    std::vector<utilization::VmCapacity> vms) override {
    return utilization::map_workloads({tasks.begin(), tasks.end()}, std::move(vms));
  }
};

/// Name → policy table with the four built-ins pre-registered.
class PolicyRegistry {
public:
  PolicyRegistry() {
    register_policy("fcfs", std::make_shared<FcfsPolicy>());
    register_policy("utilization", std::make_shared<UtilizationPolicy>());
    register_policy("thermal", std::make_shared<ThermalPolicy>());
    register_policy("thermal+utilization", std::make_shared<ThermalUtilizationPolicy>());
  }

  void register_policy(const std::string& name, std::shared_ptr<Policy> policy) {
    if (!policy) throw Error("register_policy: null policy");
    if (!policies_.emplace(name, std::move(policy)).second) throw DuplicatePolicy(name);
  }

  bool contains(const std::string& name) const { return policies_.count(name) != 0; }

  Policy& get(const std::string& name) const {
    auto it = policies_.find(name);
    if (it == policies_.end()) throw UnknownPolicy(name);
    return *it->second;
  }

  std::vector<PlacementAction> run_policy(const std::string& name, const DatacenterSnapshot& snap) const {
    return get(name).schedule(snap);
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [n, _] : policies_) out.push_back(n);
    return out;
  }

private:
  std::map<std::string, std::shared_ptr<Policy>> policies_;
};

} // namespace thermaldc::scheduler
