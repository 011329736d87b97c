#include <algorithm>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include <thermaldc/thermaldc.hpp>

#include "support/gen.hpp"
#include "support/oracles.hpp"

using namespace thermaldc;
using namespace thermaldc::scheduler;

namespace {

VmState vm(VmId id, double delta_t, double mips = 500, double ram = 1024) {
  VmState v;
  v.spec.id = id;
  v.spec.mips = mips;
  v.spec.ram_mb = ram;
  v.demand_mips = mips;
  v.delta_t_c = delta_t;
  return v;
}

HostState host(HostId id, double temp) {
  HostState h;
  h.spec.id = id;
  h.current_temp_c = temp;
  return h;
}

} // namespace

TEST(ClassifyAndEnqueue, PartitionsInOrder) {
  const std::vector<VmState> vms{vm(1, 12), vm(2, 0), vm(3, -60), vm(4, 9), vm(5, 30)};
  const auto qs = classify_and_enqueue(vms, {-55.5, 9.0});
  EXPECT_EQ(qs.q_hot, (std::deque<VmId>{1, 5}));
  EXPECT_EQ(qs.q_warm, (std::deque<VmId>{2, 4}));
  EXPECT_EQ(qs.q_cold, (std::deque<VmId>{3}));
  EXPECT_EQ(qs.classified(), vms.size());
}

TEST(ClassifyAndEnqueue, EveryVmInExactlyOneQueue) {
  Rng r(3);
  for (int i = 0; i < 500; ++i) {
    std::vector<VmState> vms;
    for (std::int64_t k = 0; k < r.uniform_int(0, 12); ++k) vms.push_back(vm(k, gen::grid(r, -4, 1, 8)));
    const VmThresholds th{gen::grid(r, -2, 1, 2), gen::grid(r, 0, 1, 2)};
    const auto qs = classify_and_enqueue(vms, th);
    ASSERT_EQ(qs.classified(), vms.size());
    std::map<VmId, int> seen;
    for (auto* q : {&qs.q_hot, &qs.q_warm, &qs.q_cold}) {
      for (VmId id : *q) ++seen[id];
      ASSERT_TRUE(std::is_sorted(q->begin(), q->end()));
    }
    for (const auto& v : vms) {
      ASSERT_EQ(seen[v.spec.id], 1);
      const auto want = thermal::classify_vm(v.delta_t_c, th);
      const auto& q = want == ThermalClass::hot ? qs.q_hot : want == ThermalClass::cold ? qs.q_cold : qs.q_warm;
      ASSERT_NE(std::find(q.begin(), q.end(), v.spec.id), q.end());
    }
  }
}

TEST(SelectVmForHost, HotHostTakesColdFirst) {
  ThermalParams tp;
  QueueSet qs;
  qs.q_hot = {1};
  qs.q_warm = {2};
  qs.q_cold = {3, 4};
  EXPECT_EQ(select_vm_for_host(75.0, tp, qs), 3);
  EXPECT_EQ(select_vm_for_host(75.0, tp, qs), 4);
  EXPECT_EQ(select_vm_for_host(75.0, tp, qs), 2);
  EXPECT_EQ(select_vm_for_host(75.0, tp, qs), 1);
  EXPECT_EQ(select_vm_for_host(75.0, tp, qs), std::nullopt);
}

TEST(SelectVmForHost, ColdHostTakesHotFirst) {
  ThermalParams tp;
  QueueSet qs;
  qs.q_hot = {1};
  qs.q_warm = {2};
  qs.q_cold = {3};
  EXPECT_EQ(select_vm_for_host(20.0, tp, qs), 1);
  EXPECT_EQ(select_vm_for_host(20.0, tp, qs), 2);
}

TEST(SelectVmForHost, MidBandPrefersWarm) {
  ThermalParams tp;
  QueueSet a;
  a.q_hot = {1};
  a.q_cold = {3};
  QueueSet b = a;
  EXPECT_EQ(select_vm_for_host(60.0, tp, a), 3);
  EXPECT_EQ(select_vm_for_host(40.0, tp, b), 1);
  QueueSet c;
  c.q_hot = {1};
  c.q_warm = {2};
  EXPECT_EQ(select_vm_for_host(50.0, tp, c), 2);
}

TEST(SelectVmForHost, SkipsUnacceptable) {
  ThermalParams tp;
  QueueSet qs;
  qs.q_cold = {3, 4};
  qs.q_warm = {5};
  EXPECT_EQ(select_vm_for_host(75.0, tp, qs, [](VmId id) { return id != 3; }), 4);
  EXPECT_EQ(qs.q_cold, std::deque<VmId>{3});
  EXPECT_EQ(select_vm_for_host(75.0, tp, qs, [](VmId) { return false; }), std::nullopt);
  EXPECT_EQ(qs.classified(), 2u);
}

TEST(SelectVmForHost, NeverAggravates) {
  Rng r(5);
  for (int i = 0; i < 500; ++i) {
    ThermalParams tp;
    QueueSet qs;
    for (VmId id = 0; id < r.uniform_int(0, 9); ++id)
      qs.queue(static_cast<ThermalClass>(r.uniform_int(1, 3))).push_back(id);
    std::set<VmId> ok;
    for (VmId id = 0; id < 9; ++id)
      if (r.uniform01() < 0.6) ok.insert(id);
    const double temp = r.uniform(0, 100);
    const QueueSet before = qs;
    const auto got = select_vm_for_host(temp, tp, qs, [&](VmId id) { return ok.count(id) > 0; });
    auto has_ok = [&](const std::deque<VmId>& q) {
      return std::any_of(q.begin(), q.end(), [&](VmId id) { return ok.count(id) > 0; });
    };
    if (!got) {
      ASSERT_FALSE(has_ok(before.q_hot) || has_ok(before.q_warm) || has_ok(before.q_cold));
      continue;
    }
    const bool was_hot = std::count(before.q_hot.begin(), before.q_hot.end(), *got) > 0;
    const bool was_cold = std::count(before.q_cold.begin(), before.q_cold.end(), *got) > 0;
    if (temp > tp.theta_ch_c && was_hot) {
      ASSERT_FALSE(has_ok(before.q_cold) || has_ok(before.q_warm));
    }
    if (temp < tp.theta_cl_c && was_cold) {
      ASSERT_FALSE(has_ok(before.q_hot) || has_ok(before.q_warm));
    }
  }
}

TEST(ScheduleRound, CoolerHostFirst) {
  DatacenterSnapshot snap;
  snap.hosts = {host(0, 60.0), host(1, 40.0)};
  snap.vms = {vm(7, 20.0)};
  snap.waiting = {7};
  QueueSet qs = classify_and_enqueue(snap.vms, {-55.5, 9.0});
  const auto acts = schedule_round(snap, qs);
  ASSERT_EQ(acts.size(), 1u);
  EXPECT_EQ(acts[0].dst_host, 1);
  EXPECT_EQ(acts[0].kind, PlacementAction::Kind::allocate);
  EXPECT_TRUE(qs.empty());
}

TEST(ScheduleRound, TooLargeVmStaysQueued) {
  DatacenterSnapshot snap;
  snap.hosts = {host(0, 30.0)};
  snap.vms = {vm(1, 0.0, 9000.0), vm(2, 0.0)};
  snap.waiting = {1, 2};
  QueueSet qs = classify_and_enqueue(snap.vms, {-55.5, 9.0});
  const auto acts = schedule_round(snap, qs);
  ASSERT_EQ(acts.size(), 1u);
  EXPECT_EQ(acts[0].vm_id, 2);
  EXPECT_EQ(qs.q_warm, std::deque<VmId>{1});
}

TEST(ScheduleRound, EvictedVmMigrates) {
  DatacenterSnapshot snap;
  snap.hosts = {host(0, 85.0), host(1, 30.0)};
  snap.vms = {vm(4, 0.0)};
  snap.waiting = {4};
  snap.previous_host[4] = 0;
  const auto acts = thermal_schedule(snap);
  ASSERT_EQ(acts.size(), 1u);
  EXPECT_EQ(acts[0].kind, PlacementAction::Kind::migrate);
  EXPECT_EQ(acts[0].src_host, std::optional<HostId>(0));
  EXPECT_EQ(acts[0].dst_host, 1);
}

TEST(ScheduleRound, NeverExceedsCapacity) {
  Rng r(9);
  for (int i = 0; i < 500; ++i) {
    const auto c = gen::placement_case(r, 4, 10);
    const auto acts = thermal_schedule(c.snap);
    std::map<HostId, std::pair<double, double>> used;
    for (const auto& h : c.snap.hosts) used[h.spec.id] = {h.reserved_mips, h.reserved_ram_mb};
    std::set<VmId> placed;
    for (const auto& a : acts) {
      ASSERT_TRUE(placed.insert(a.vm_id).second);
      const auto& v = c.snap.vm(a.vm_id);
      used[a.dst_host].first += v.spec.mips;
      used[a.dst_host].second += v.spec.ram_mb;
    }
    for (const auto& h : c.snap.hosts) {
      ASSERT_LE(used[h.spec.id].first, h.spec.capacity_mips() + 1e-6);
      ASSERT_LE(used[h.spec.id].second, h.spec.ram_mb + 1e-6);
    }
  }
}

TEST(ScheduleRound, MatchesReference) {
  Rng r(13);
  for (int i = 0; i < 300; ++i) {
    const auto c = gen::placement_case(r, 4, 10);
    const auto got = thermal_schedule(c.snap);
    const auto want = oracle::thermal_round(c.hosts, c.vms, c.th.theta_low_c, c.th.theta_high_c, c.snap.mode,
                                            c.snap.interval_s);
    ASSERT_EQ(got.size(), want.size()) << "case " << i;
    for (std::size_t k = 0; k < got.size(); ++k) {
      ASSERT_EQ(got[k].vm_id, want[k].vm) << "case " << i << " action " << k;
      ASSERT_EQ(got[k].dst_host, want[k].host) << "case " << i << " action " << k;
    }
  }
}

TEST(FirstFitVms, FillsInOrderUntilFull) {
  DatacenterSnapshot snap;
  snap.hosts = {host(0, 30), host(1, 30)};
  for (VmId id = 0; id < 40; ++id) {
    snap.vms.push_back(vm(id, 0.0, 2000.0, 1024.0));
    snap.waiting.push_back(id);
  }
  const auto acts = first_fit_vms(snap);
  ASSERT_EQ(acts.size(), 8u);
  for (std::size_t k = 0; k < acts.size(); ++k) {
    EXPECT_EQ(acts[k].vm_id, static_cast<VmId>(k));
    EXPECT_EQ(acts[k].dst_host, k < 4 ? 0 : 1);
  }
}

namespace {
class FixedPolicy : public Policy {
public:
  std::string name() const override { return "fixed"; }
  std::vector<PlacementAction> schedule(const DatacenterSnapshot&) override {
    PlacementAction a;
    a.kind = PlacementAction::Kind::allocate;
    a.vm_id = 42;
    a.dst_host = 3;
    return {a};
  }
};
} // namespace

TEST(PolicyRegistry, BuiltinsAndLookup) {
  PolicyRegistry reg;
  for (const char* n : {"fcfs", "utilization", "thermal", "thermal+utilization"}) {
    ASSERT_TRUE(reg.contains(n));
    EXPECT_EQ(reg.get(n).name(), n);
  }
  EXPECT_TRUE(reg.get("thermal").evicts_overheated());
  EXPECT_FALSE(reg.get("fcfs").evicts_overheated());
  EXPECT_THROW(reg.get("nope"), UnknownPolicy);
  EXPECT_THROW(reg.register_policy("fcfs", std::make_shared<FcfsPolicy>()), DuplicatePolicy);
}

TEST(PolicyRegistry, CustomPolicyDelegates) {
  PolicyRegistry reg;
  reg.register_policy("fixed", std::make_shared<FixedPolicy>());
  DatacenterSnapshot snap;
  const auto acts = reg.run_policy("fixed", snap);
  ASSERT_EQ(acts.size(), 1u);
  EXPECT_EQ(acts[0].vm_id, 42);
  EXPECT_EQ(acts[0].dst_host, 3);
}
