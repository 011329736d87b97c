#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "config_json.hpp"
#include "energy.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "scheduler.hpp"
#include "thermal.hpp"
#include "trace.hpp"
#include "utilization.hpp"
#include "workload.hpp"

namespace thermaldc::engine {

struct Event {
  Seconds clock_s = 0;
  std::string kind;
  std::int64_t subject = 0;
  std::string detail;

  bool operator==(const Event&) const = default;
};

/// One row of the per-step CSV.
struct StepRow {
  std::int64_t step = 0;
  Seconds clock_s = 0;
  HostId host_id = 0;
  double temp_c = 0.0;
  double power_w = 0.0;
  double energy_j_cum = 0.0; // per host
  std::int64_t migrations_cum = 0;
  double svr_cum = 0.0;

  bool operator==(const StepRow&) const = default;
};

struct SimulationReport {
  std::uint64_t seed = 0;
  std::string config_digest;
  double lambda_per_interval = 0.0;
  double energy_j = 0.0;
  double total_energy_kwh = 0.0;
  double svr = 0.0;
  std::int64_t migrations = 0;
  double temp_mean_c = 0.0;
  double temp_max_c = 0.0;
  std::vector<HostId> host_ids;
  /// temp_series[h][k]: temperature of host h after step k.
  std::vector<std::vector<double>> temp_series;
  std::vector<StepRow> rows;
  std::int64_t tasks_arrived = 0;
  std::int64_t tasks_completed = 0;
  std::int64_t sla_violations = 0;
  std::vector<Event> events;
  std::uint64_t event_hash = 0;
};

/// Task violates its SLA iff it finishes after arrival + nominal·(1 + slack),
/// where nominal = length / requested MIPS. Unfinished tasks are violations.
inline bool check_sla(const Workload& task, double sla_slack) {
  if (!task.finish_s) return true;
  const double nominal = task.length_mi / task.mips_requested;
  return *task.finish_s > static_cast<double>(task.arrival_s) + nominal * (1.0 + sla_slack);
}

/// Memory-copy time of a live migration: RAM image over the host link.
inline double migration_downtime(const VmSpec& vm, double host_bandwidth_bps) {
  if (!(host_bandwidth_bps > 0.0)) throw DomainError("migration_downtime: bandwidth must be > 0");
  return vm.ram_mb * 8.0e6 / host_bandwidth_bps;
}

/// Turns replayed traces into workloads that start at t = 0. A trace's
/// length is the work it represents at `peak_mips`, and its requested MIPS
/// is the mean demand, so the nominal duration equals the trace duration.
inline std::vector<Workload> trace_workloads(const std::vector<io::UtilizationTrace>& traces, double peak_mips,
                                             Seconds interval_s, WorkloadId first_id, double ram_mb) {
  std::vector<Workload> out;
  for (const auto& t : traces) {
    double length = 0.0;
    for (double s : t.samples) length += s / 100.0 * peak_mips * static_cast<double>(interval_s);
    if (!(length > 0.0)) continue;
    Workload w;
    w.id = first_id++;
    w.length_mi = length;
    w.mips_requested = length / (static_cast<double>(t.samples.size()) * static_cast<double>(interval_s));
    w.ram_mb = ram_mb;
    w.arrival_s = 0;
    w.peak_mips = peak_mips;
    w.trace = std::make_shared<const std::vector<double>>(t.samples);
    out.push_back(std::move(w));
  }
  return out;
}

/// Mutable state of one replica.
struct SimulationState {
  Seconds clock_s = 0;
  std::int64_t step = 0;
  std::vector<HostState> hosts;
  std::vector<VmState> vms;
  std::vector<Workload> workloads; // ordered by arrival
  std::size_t next_arrival = 0;
  std::deque<std::size_t> pending;
  std::vector<std::size_t> running;
  std::int64_t completed = 0;
  std::vector<double> remaining_mi;
  std::vector<std::int64_t> start_step;
  std::deque<VmId> waiting;
  std::unordered_map<VmId, HostId> previous_host;
  scheduler::QueueSet queues;
  double energy_j = 0.0;
  std::vector<double> host_energy_j;
  std::int64_t migrations = 0;
  std::int64_t sla_violations = 0;
  std::vector<std::vector<double>> temp_series;
  std::vector<std::vector<double>> power_series;
  std::vector<std::vector<double>> util_series;
  std::vector<std::vector<bool>> storage_series;

  std::int64_t arrived() const noexcept { return static_cast<std::int64_t>(next_arrival); }
};

/// Single-threaded deterministic simulation of one replica.
///
/// Each step, in order: release arrivals; map pending tasks onto VMs; compute
/// every VM's ΔT and run the policy's VM placement (migrations counted when a
/// VM changes host); integrate host power over the interval; update host
/// temperatures; advance running tasks and test SLAs; advance the clock.
class Simulation {
public:
  /// `cfg` must already be validated. `workloads` must be sorted by arrival.
  Simulation(DataCenterConfig cfg, std::vector<Workload> workloads, scheduler::Policy& policy)
      : cfg_(std::move(cfg)), policy_(policy) {
    init(std::move(workloads));
  }

  /// Generates synthetic workloads (and trace workloads) from `cfg`.
  Simulation(const DataCenterConfig& cfg, scheduler::Policy& policy)
      : Simulation(cfg, make_workloads(cfg), policy) {}

  static double derived_lambda(const DataCenterConfig& cfg) {
    if (cfg.workload.lambda_per_interval) return *cfg.workload.lambda_per_interval;
    const auto steps = cfg.step_count();
    return steps > 0 ? static_cast<double>(cfg.workload.count) / static_cast<double>(steps) : 0.0;
  }

  static std::vector<Workload> make_workloads(const DataCenterConfig& cfg) {
    WorkloadGenConfig wg = cfg.workload;
    wg.lambda_per_interval = derived_lambda(cfg);
    Rng sizes(cfg.seed, Stream::workload_size);
    Rng arrivals(cfg.seed, Stream::arrivals);
    auto out = io::generate_workloads(wg, sizes, arrivals, wg.count, cfg.interval_s);
    if (!cfg.traces.empty()) {
      std::vector<io::UtilizationTrace> traces;
      for (const auto& p : cfg.traces) traces.push_back(io::load_planetlab_trace(p));
      auto extra = trace_workloads(traces, cfg.trace_peak_mips, cfg.interval_s,
                                   static_cast<WorkloadId>(out.size()), wg.ram_lo_mb);
      out.insert(out.end(), extra.begin(), extra.end());
      std::stable_sort(out.begin(), out.end(),
                       [](const Workload& a, const Workload& b) { return a.arrival_s < b.arrival_s; });
    }
    return out;
  }

  bool done() const noexcept { return s_.step >= cfg_.step_count(); }
  const SimulationState& state() const noexcept { return s_; }
  const std::vector<Event>& events() const noexcept { return events_; }
  const DataCenterConfig& config() const noexcept { return cfg_; }

  void step() {
    const Seconds t0 = s_.clock_s;
    release_arrivals(t0);
    map_pending(t0);
    place_vms(t0);
    const auto grants = integrate_power();
    update_temperatures();
    advance_tasks(t0, grants);
    s_.clock_s += cfg_.interval_s;
    ++s_.step;
    record_rows();
  }

  SimulationReport run() {
    while (!done()) step();
    return finish();
  }

  /// Closes the run: tasks still pending or running count as SLA violations.
  SimulationReport finish() {
    const std::int64_t unfinished = static_cast<std::int64_t>(s_.pending.size() + s_.running.size());
    for (std::size_t i : s_.pending) add_event(s_.clock_s, "sla_violation", s_.workloads[i].id, "unfinished");
    for (std::size_t i : s_.running) add_event(s_.clock_s, "sla_violation", s_.workloads[i].id, "unfinished");
    s_.sla_violations += unfinished;

    SimulationReport r;
    r.seed = cfg_.seed;
    r.config_digest = config::digest(cfg_);
    r.lambda_per_interval = derived_lambda(cfg_);
    r.energy_j = s_.energy_j;
    r.total_energy_kwh = s_.energy_j / 3.6e6;
    r.tasks_arrived = s_.arrived();
    r.tasks_completed = s_.completed;
    r.sla_violations = s_.sla_violations;
    r.svr = r.tasks_arrived > 0 ? static_cast<double>(s_.sla_violations) / static_cast<double>(r.tasks_arrived)
                                : 0.0;
    r.migrations = s_.migrations;
    for (const auto& h : s_.hosts) r.host_ids.push_back(h.spec.id);
    r.temp_series = s_.temp_series;
    double sum = 0.0;
    std::size_t n = 0;
    r.temp_max_c = -INFINITY;
    for (const auto& series : s_.temp_series)
      for (double t : series) {
        sum += t;
        ++n;
        r.temp_max_c = std::max(r.temp_max_c, t);
      }
    r.temp_mean_c = n > 0 ? sum / static_cast<double>(n) : 0.0;
    if (n == 0) r.temp_max_c = 0.0;

    if (!rows_.empty()) {
      const auto last = rows_.back().step;
      for (auto it = rows_.rbegin(); it != rows_.rend() && it->step == last; ++it) it->svr_cum = r.svr;
    }
    r.rows = rows_;
    r.events = events_;
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& e : events_) {
      h = config::fnv1a64(std::to_string(e.clock_s) + '|' + e.kind + '|' + std::to_string(e.subject) + '|' +
                              e.detail + '\n',
                          h);
    }
    r.event_hash = h;
    return r;
  }

private:
  struct VmGrant {
    double vm_factor = 1.0;   // share of task demand the VM can serve
    double host_factor = 1.0; // share of VM demand the host can serve
    double active_s = 0.0;    // seconds of the interval the VM ran
    double downtime_s = 0.0;  // seconds paused at the start of the interval
    double granted_mips = 0.0;
  };

  void init(std::vector<Workload> workloads) {
    s_.workloads = std::move(workloads);
    s_.remaining_mi.resize(s_.workloads.size());
    s_.start_step.assign(s_.workloads.size(), 0);
    for (std::size_t i = 0; i < s_.workloads.size(); ++i) s_.remaining_mi[i] = s_.workloads[i].length_mi;

    for (const auto& h : cfg_.hosts) {
      HostState hs;
      hs.spec = h;
      hs.current_temp_c = h.initial_temp_c.value_or(h.thermal.t_initial_c);
      host_index_.emplace(h.id, s_.hosts.size());
      s_.hosts.push_back(std::move(hs));
    }
    s_.host_energy_j.assign(s_.hosts.size(), 0.0);
    s_.temp_series.assign(s_.hosts.size(), {});
    s_.power_series.assign(s_.hosts.size(), {});
    s_.util_series.assign(s_.hosts.size(), {});
    s_.storage_series.assign(s_.hosts.size(), {});
    vm_tasks_.assign(cfg_.vms.size(), {});
    for (const auto& v : cfg_.vms) {
      VmState vs;
      vs.spec = v;
      vm_index_.emplace(v.id, s_.vms.size());
      s_.vms.push_back(vs);
      auto& placed = s_.vms.back();
      if (v.host_id) {
        place(placed, host(*v.host_id));
      } else {
        s_.waiting.push_back(v.id);
      }
    }
    refresh_vm_demand();
    refresh_host_load();
    // Initial allocation before the first interval.
    place_vms(0);
  }

  HostState& host(HostId id) { return s_.hosts[host_index_.at(id)]; }
  VmState& vm(VmId id) { return s_.vms[vm_index_.at(id)]; }
  const VmState& vm(VmId id) const { return s_.vms[vm_index_.at(id)]; }

  void add_event(Seconds t, std::string kind, std::int64_t subject, std::string detail = {}) {
    events_.push_back({t, std::move(kind), subject, std::move(detail)});
  }

  void place(VmState& v, HostState& h) {
    v.host_id = h.spec.id;
    h.placed_vms.push_back(v.spec.id);
    h.reserved_mips += v.spec.mips;
    h.reserved_ram_mb += v.spec.ram_mb;
  }

  void unplace(VmState& v) {
    if (!v.host_id) return;
    auto& h = host(*v.host_id);
    h.placed_vms.erase(std::remove(h.placed_vms.begin(), h.placed_vms.end(), v.spec.id), h.placed_vms.end());
    h.reserved_mips -= v.spec.mips;
    h.reserved_ram_mb -= v.spec.ram_mb;
    v.host_id.reset();
  }

  double task_demand(std::size_t task) const {
    const auto offset = static_cast<std::size_t>(s_.step - s_.start_step[task]);
    return s_.workloads[task].demand_mips(offset);
  }

  void release_arrivals(Seconds t0) {
    while (s_.next_arrival < s_.workloads.size() && s_.workloads[s_.next_arrival].arrival_s <= t0)
      s_.pending.push_back(s_.next_arrival++);
  }

  void map_pending(Seconds t0) {
    if (s_.pending.empty()) return;
    const auto means = utilization::vm_class_means(cfg_.vms);
    const auto interval = static_cast<double>(cfg_.interval_s);

    std::vector<utilization::TaskDemand> tasks;
    tasks.reserve(s_.pending.size());
    std::unordered_map<WorkloadId, std::size_t> by_id;
    for (std::size_t i : s_.pending) {
      tasks.push_back(utilization::task_demand(s_.workloads[i], means, interval));
      by_id.emplace(s_.workloads[i].id, i);
    }

    std::vector<utilization::VmCapacity> vms;
    for (std::size_t vi = 0; vi < s_.vms.size(); ++vi) {
      const auto& v = s_.vms[vi];
      if (!v.host_id) continue;
      utilization::VmCapacity c;
      c.id = v.spec.id;
      c.e_total_w = v.power_w;
      c.util = v.util;
      c.residual_mips = v.spec.mips * (1.0 - v.spec.base_util);
      c.residual_ram_mb = v.spec.ram_mb;
      c.residual_bandwidth_bps = v.spec.bandwidth_bps;
      for (std::size_t t : vm_tasks_[vi]) {
        const auto& w = s_.workloads[t];
        c.residual_mips -= w.mips_requested;
        c.residual_ram_mb -= w.ram_mb;
        c.residual_bandwidth_bps -= utilization::task_bandwidth_bps(w, interval);
      }
      vms.push_back(c);
    }
    if (vms.empty()) return;

    const auto assignment = policy_.map_tasks(tasks, std::move(vms));
    std::vector<bool> assigned(s_.workloads.size(), false);
    for (const auto& [wid, vid] : assignment.assigned) {
      const std::size_t t = by_id.at(wid);
      const std::size_t vi = vm_index_.at(vid);
      if (!s_.vms[vi].host_id || assigned[t]) continue;
      auto& w = s_.workloads[t];
      w.assigned_vm = vid;
      w.start_s = static_cast<double>(t0);
      s_.start_step[t] = s_.step;
      vm_tasks_[vi].push_back(t);
      s_.running.push_back(t);
      assigned[t] = true;
    }
    std::deque<std::size_t> still;
    for (std::size_t i : s_.pending)
      if (!assigned[i]) still.push_back(i);
    s_.pending = std::move(still);
  }

  void refresh_vm_demand() {
    for (std::size_t vi = 0; vi < s_.vms.size(); ++vi) {
      auto& v = s_.vms[vi];
      double d = v.spec.base_util * v.spec.mips;
      for (std::size_t t : vm_tasks_[vi]) d += task_demand(t);
      v.demand_mips = d;
    }
  }

  void refresh_host_load() {
    for (auto& h : s_.hosts) {
      double d = 0.0;
      for (VmId id : h.placed_vms) {
        const auto& v = vm(id);
        d += std::min(v.demand_mips, v.spec.mips);
      }
      h.utilization = std::min(1.0, d / h.spec.capacity_mips());
      h.dynamic_power_w = energy::dynamic_processor_power(h.spec.power, h.spec.cores, h.utilization);
    }
  }

  VmThresholds thresholds() const {
    if (cfg_.vm_thresholds) return *cfg_.vm_thresholds;
    return thermal::vm_thresholds(s_.hosts.front().spec.thermal);
  }

  /// The host an unplaced VM is evaluated against: most thermal headroom.
  const HostState& reference_host() const {
    const HostState* best = &s_.hosts.front();
    for (const auto& h : s_.hosts) {
      const double hb = best->spec.thermal.t_over_c - best->current_temp_c;
      const double hh = h.spec.thermal.t_over_c - h.current_temp_c;
      if (hh > hb || (hh == hb && h.spec.id < best->spec.id)) best = &h;
    }
    return *best;
  }

  void compute_vm_thermal() {
    const auto th = thresholds();
    const auto dt = static_cast<double>(cfg_.interval_s);
    for (auto& v : s_.vms) {
      const HostState& h = v.host_id ? host(*v.host_id) : reference_host();
      if (v.host_id) {
        // Power the VM contributes at the host's current load.
        HostState without = h;
        without.utilization = std::max(0.0, h.utilization - std::min(v.demand_mips, v.spec.mips) / h.spec.capacity_mips());
        v.power_w = scheduler::vm_power_on(without, v);
        without.dynamic_power_w = energy::dynamic_processor_power(h.spec.power, h.spec.cores, without.utilization);
        v.delta_t_c = thermal::vm_delta_temperature(without, v.power_w, cfg_.thermal_mode, dt);
      } else {
        v.power_w = scheduler::vm_power_on(h, v);
        v.delta_t_c = thermal::vm_delta_temperature(h, v.power_w, cfg_.thermal_mode, dt);
      }
      v.thermal_class = thermal::classify_vm(v.delta_t_c, th);
    }
  }

  void place_vms(Seconds t0) {
    refresh_vm_demand();
    refresh_host_load();
    compute_vm_thermal();

    std::vector<HostId> overheated;
    if (policy_.evicts_overheated()) {
      for (auto& h : s_.hosts) {
        if (!(h.current_temp_c > h.spec.thermal.t_over_c) || h.placed_vms.empty()) continue;
        overheated.push_back(h.spec.id);
        std::vector<VmId> order = h.placed_vms;
        std::stable_sort(order.begin(), order.end(), [&](VmId a, VmId b) {
          const auto &va = vm(a), &vb = vm(b);
          if (va.delta_t_c != vb.delta_t_c) return va.delta_t_c > vb.delta_t_c;
          return a < b;
        });
        double excess = h.current_temp_c - h.spec.thermal.t_over_c;
        for (VmId id : order) {
          auto& v = vm(id);
          excess -= v.delta_t_c;
          s_.previous_host[id] = h.spec.id;
          unplace(v);
          s_.waiting.push_back(id);
          add_event(t0, "evict", id, "host " + std::to_string(h.spec.id));
          if (excess <= 0.0) break;
        }
      }
      if (!overheated.empty()) {
        refresh_host_load();
        compute_vm_thermal();
      }
    }

    if (!s_.waiting.empty()) {
      scheduler::DatacenterSnapshot snap;
      snap.hosts = s_.hosts;
      snap.vms = s_.vms;
      snap.waiting = s_.waiting;
      snap.previous_host = s_.previous_host;
      snap.mode = cfg_.thermal_mode;
      snap.interval_s = static_cast<double>(cfg_.interval_s);
      snap.vm_thresholds = thresholds();

      std::vector<VmState> waiting_vms;
      for (VmId id : s_.waiting) waiting_vms.push_back(vm(id));
      s_.queues = scheduler::classify_and_enqueue(waiting_vms, snap.thresholds());

      apply(policy_.schedule(snap), t0);
    } else {
      s_.queues = {};
    }

    for (HostId id : overheated) {
      const bool relieved = std::any_of(s_.vms.begin(), s_.vms.end(), [&](const VmState& v) {
        auto it = s_.previous_host.find(v.spec.id);
        return v.host_id && *v.host_id != id && it != s_.previous_host.end() && it->second == id;
      });
      if (!relieved) add_event(t0, "overheat-unresolved", id);
    }
    // Only VMs still waiting keep a former host.
    for (auto it = s_.previous_host.begin(); it != s_.previous_host.end();) {
      if (vm(it->first).host_id)
        it = s_.previous_host.erase(it);
      else
        ++it;
    }
    refresh_host_load();
    compute_vm_thermal();
  }

  void apply(const std::vector<scheduler::PlacementAction>& actions, Seconds t0) {
    using Kind = scheduler::PlacementAction::Kind;
    for (const auto& a : actions) {
      auto it = vm_index_.find(a.vm_id);
      if (it == vm_index_.end() || !host_index_.count(a.dst_host)) {
        add_event(t0, "invalid_action", a.vm_id);
        continue;
      }
      auto& v = s_.vms[it->second];
      auto& dst = host(a.dst_host);
      if (v.host_id || !dst.fits(v.spec)) {
        add_event(t0, "infeasible_action", a.vm_id, "host " + std::to_string(a.dst_host));
        continue;
      }
      const auto prev = s_.previous_host.find(v.spec.id);
      const bool moved = prev != s_.previous_host.end() && prev->second != a.dst_host;
      place(v, dst);
      s_.waiting.erase(std::find(s_.waiting.begin(), s_.waiting.end(), v.spec.id));
      if (moved) {
        ++s_.migrations;
        v.downtime_s += migration_downtime(v.spec, host(prev->second).spec.bandwidth_bps);
        add_event(t0, "migrate", v.spec.id,
                  std::to_string(prev->second) + "->" + std::to_string(a.dst_host));
      } else {
        add_event(t0, a.kind == Kind::none ? "reinstate" : "allocate", v.spec.id,
                  "host " + std::to_string(a.dst_host));
      }
    }
  }

  std::vector<VmGrant> integrate_power() {
    const auto interval = static_cast<double>(cfg_.interval_s);
    refresh_vm_demand();
    std::vector<VmGrant> grants(s_.vms.size());
    for (std::size_t hi = 0; hi < s_.hosts.size(); ++hi) {
      auto& h = s_.hosts[hi];
      double served = 0.0;
      for (VmId id : h.placed_vms) {
        const auto& v = vm(id);
        served += std::min(v.demand_mips, v.spec.mips);
      }
      const double cap = h.spec.capacity_mips();
      const double host_factor = served > cap ? cap / served : 1.0;

      double busy_mips_s = 0.0;
      bool storage_active = false;
      for (VmId id : h.placed_vms) {
        const std::size_t vi = vm_index_.at(id);
        auto& v = s_.vms[vi];
        VmGrant g;
        g.vm_factor = v.demand_mips > v.spec.mips ? v.spec.mips / v.demand_mips : 1.0;
        g.host_factor = host_factor;
        g.downtime_s = std::min(v.downtime_s, interval);
        v.downtime_s -= g.downtime_s;
        g.active_s = interval - g.downtime_s;
        g.granted_mips = std::min(v.demand_mips, v.spec.mips) * host_factor;
        busy_mips_s += g.granted_mips * g.active_s;
        if (!vm_tasks_[vi].empty()) storage_active = true;
        grants[vi] = g;
      }
      h.utilization = std::min(1.0, busy_mips_s / (cap * interval));
      const auto b = energy::host_power(h.spec.power,
                                        energy::uniform_activity(h.spec.cores, h.utilization, storage_active));
      h.dynamic_power_w = energy::dynamic_processor_power(h.spec.power, h.spec.cores, h.utilization);
      const double joules = b.total_w * interval;
      s_.energy_j += joules;
      s_.host_energy_j[hi] += joules;
      s_.power_series[hi].push_back(b.total_w);
      s_.util_series[hi].push_back(h.utilization);
      s_.storage_series[hi].push_back(storage_active);
    }
    return grants;
  }

  void update_temperatures() {
    const auto dt = static_cast<double>(cfg_.interval_s);
    for (std::size_t hi = 0; hi < s_.hosts.size(); ++hi) {
      auto& h = s_.hosts[hi];
      const double start =
          cfg_.thermal_mode == ThermalMode::time_dependent ? h.current_temp_c : h.spec.thermal.t_initial_c;
      h.current_temp_c = thermal::cpu_temperature(h.dynamic_power_w, h.spec.thermal, cfg_.thermal_mode, dt, start);
      s_.temp_series[hi].push_back(h.current_temp_c);
    }
  }

  void advance_tasks(Seconds t0, const std::vector<VmGrant>& grants) {
    const auto interval = static_cast<double>(cfg_.interval_s);
    std::vector<bool> finished(s_.workloads.size(), false);
    for (std::size_t vi = 0; vi < s_.vms.size(); ++vi) {
      auto& v = s_.vms[vi];
      const auto& g = grants[vi];
      const bool placed = v.host_id.has_value();
      double ram = 0.0, disk = 0.0, bits = 0.0;
      for (std::size_t t : vm_tasks_[vi]) {
        auto& w = s_.workloads[t];
        ram += w.ram_mb;
        disk += w.file_size_mb;
        bits += utilization::task_bandwidth_bps(w, interval) * interval;
        if (!placed) continue;
        const double rate = task_demand(t) * g.vm_factor * g.host_factor;
        const double work = rate * g.active_s;
        double& rem = s_.remaining_mi[t];
        if (rate > 0.0 && rem <= work * (1.0 + 1e-12) + 1e-9) {
          w.finish_s = static_cast<double>(t0) + g.downtime_s + rem / rate;
          rem = 0.0;
          finished[t] = true;
          ++s_.completed;
          if (check_sla(w, cfg_.sla_slack)) {
            ++s_.sla_violations;
            add_event(t0, "sla_violation", w.id);
          }
        } else {
          rem -= work;
        }
      }
      update_vm_utilization(v, placed ? g.granted_mips * g.active_s / interval : 0.0, ram, disk, bits, t0);
      auto& list = vm_tasks_[vi];
      list.erase(std::remove_if(list.begin(), list.end(), [&](std::size_t t) { return finished[t]; }), list.end());
    }
    s_.running.erase(std::remove_if(s_.running.begin(), s_.running.end(), [&](std::size_t t) { return finished[t]; }),
                     s_.running.end());
  }

  void update_vm_utilization(VmState& v, double avg_granted_mips, double ram_mb, double disk_mb, double bits,
                             Seconds t0) {
    const auto interval = static_cast<double>(cfg_.interval_s);
    const utilization::LedgerEntry busy{std::min(avg_granted_mips / v.spec.mips, 1.0) * interval, interval};
    v.util.resource = utilization::resource_utilization(std::span(&busy, 1)).mean;
    const double free_mb = std::max(0.0, v.spec.ram_mb - ram_mb);
    v.util.memory_pct = v.spec.ram_mb > 0.0 ? utilization::memory_utilization(v.spec.ram_mb, free_mb, 0.0, 0.0) : 0.0;
    v.util.disk_pct = utilization::disk_utilization(std::min(disk_mb, v.spec.storage_mb), v.spec.storage_mb);
    const auto net = utilization::network_utilization(bits, v.spec.bandwidth_bps, interval);
    v.util.network_pct = net.percent;
    if (net.clamped) add_event(t0, "network_clamped", v.spec.id);
  }

  void record_rows() {
    const double svr = s_.completed > 0 ? static_cast<double>(s_.sla_violations) / static_cast<double>(s_.completed)
                                        : 0.0;
    for (std::size_t hi = 0; hi < s_.hosts.size(); ++hi) {
      rows_.push_back({s_.step - 1, s_.clock_s, s_.hosts[hi].spec.id, s_.hosts[hi].current_temp_c,
                       s_.power_series[hi].back(), s_.host_energy_j[hi], s_.migrations, svr});
    }
  }

  DataCenterConfig cfg_;
  scheduler::Policy& policy_;
  SimulationState s_;
  std::unordered_map<HostId, std::size_t> host_index_;
  std::unordered_map<VmId, std::size_t> vm_index_;
  std::vector<std::vector<std::size_t>> vm_tasks_;
  std::vector<StepRow> rows_;
  std::vector<Event> events_;
};

/// One summary row; the mean row averages the replicate rows.
struct SummaryRow {
  std::string replicate;
  std::uint64_t seed = 0;
  double total_energy_kwh = 0.0;
  double svr = 0.0;
  double migrations = 0.0;
  double temp_mean_c = 0.0;
  double temp_max_c = 0.0;
  double tasks_arrived = 0.0;
  double tasks_completed = 0.0;

  bool operator==(const SummaryRow&) const = default;
};

inline SummaryRow summarize(const SimulationReport& r, std::size_t replicate) {
  return {std::to_string(replicate),
          r.seed,
          r.total_energy_kwh,
          r.svr,
          static_cast<double>(r.migrations),
          r.temp_mean_c,
          r.temp_max_c,
          static_cast<double>(r.tasks_arrived),
          static_cast<double>(r.tasks_completed)};
}

inline SummaryRow mean_row(const std::vector<SummaryRow>& rows) {
  SummaryRow m;
  m.replicate = "mean";
  if (rows.empty()) return m;
  m.seed = rows.front().seed;
  for (const auto& r : rows) {
    m.total_energy_kwh += r.total_energy_kwh;
    m.svr += r.svr;
    m.migrations += r.migrations;
    m.temp_mean_c += r.temp_mean_c;
    m.temp_max_c += r.temp_max_c;
    m.tasks_arrived += r.tasks_arrived;
    m.tasks_completed += r.tasks_completed;
  }
  const double n = static_cast<double>(rows.size());
  m.total_energy_kwh /= n;
  m.svr /= n;
  m.migrations /= n;
  m.temp_mean_c /= n;
  m.temp_max_c /= n;
  m.tasks_arrived /= n;
  m.tasks_completed /= n;
  return m;
}

struct RunResult {
  std::vector<SimulationReport> replicates;
  std::vector<SummaryRow> summary; // one per replicate, then the mean row
};

/// Runs `cfg.replicates` replicas with seeds seed, seed+1, ... and merges
/// them in replicate order.
inline RunResult run(const DataCenterConfig& raw, const scheduler::PolicyRegistry& registry = {}) {
  const DataCenterConfig cfg = validate_config(raw);
  auto& policy = registry.get(cfg.policy);
  RunResult out;
  for (int r = 0; r < cfg.replicates; ++r) {
    DataCenterConfig rc = cfg;
    rc.seed = cfg.seed + static_cast<std::uint64_t>(r);
    Simulation sim(rc, policy);
    out.replicates.push_back(sim.run());
    out.summary.push_back(summarize(out.replicates.back(), static_cast<std::size_t>(r)));
  }
  out.summary.push_back(mean_row(out.summary));
  return out;
}

} // namespace thermaldc::engine
