#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include <thermaldc/thermaldc.hpp>

#include "support/oracles.hpp"

using namespace thermaldc;
namespace fs = std::filesystem;

namespace {

DataCenterConfig bare(int hosts, Seconds horizon = 300) {
  DataCenterConfig cfg;
  for (HostId h = 0; h < hosts; ++h) {
    HostSpec hs;
    hs.id = h;
    cfg.hosts.push_back(hs);
  }
  cfg.horizon_s = horizon;
  cfg.replicates = 1;
  cfg.workload.count = 0;
  return validate_config(cfg);
}

Workload task(WorkloadId id, double length, double mips, Seconds arrival = 0) {
  Workload w;
  w.id = id;
  w.length_mi = length;
  w.mips_requested = mips;
  w.ram_mb = 128;
  w.arrival_s = arrival;
  return w;
}

DataCenterConfig small(std::uint64_t seed, const std::string& policy) {
  auto cfg = default_config();
  cfg.seed = seed;
  cfg.policy = policy;
  cfg.horizon_s = 300 * 48;
  cfg.replicates = 2;
  cfg.workload.count = 120;
  return validate_config(cfg);
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("thermaldc_engine_" + name);
  fs::remove_all(p);
  return p;
}

} // namespace

TEST(CheckSla, Examples) {
  auto w = task(0, 300000, 500);
  EXPECT_TRUE(engine::check_sla(w, 0.1));
  w.finish_s = 700.0;
  EXPECT_TRUE(engine::check_sla(w, 0.1));
  w.finish_s = 660.0;
  EXPECT_FALSE(engine::check_sla(w, 0.1));
  w.finish_s = 600.0;
  EXPECT_FALSE(engine::check_sla(w, 0.0));
  w.finish_s = 600.5;
  EXPECT_TRUE(engine::check_sla(w, 0.0));
}

TEST(MigrationDowntime, Examples) {
  VmSpec v;
  v.ram_mb = 1024;
  EXPECT_DOUBLE_EQ(engine::migration_downtime(v, 1e9), 8.192);
  v.ram_mb = 0;
  EXPECT_EQ(engine::migration_downtime(v, 1e9), 0.0);
  EXPECT_THROW(engine::migration_downtime(v, 0.0), DomainError);
  Rng r(1);
  for (int i = 0; i < 100; ++i) {
    VmSpec a, b;
    a.ram_mb = r.uniform(0, 16384);
    b.ram_mb = 2.0 * a.ram_mb;
    const double bw = r.uniform(1e6, 1e10);
    EXPECT_NEAR(engine::migration_downtime(b, bw), 2.0 * engine::migration_downtime(a, bw), 1e-9);
  }
}

TEST(Simulation, IdleHostPaysBaseline) {
  const auto cfg = bare(1);
  scheduler::FcfsPolicy p;
  engine::Simulation sim(cfg, {}, p);
  const auto rep = sim.run();
  const auto& h = cfg.hosts[0];
  EXPECT_DOUBLE_EQ(rep.energy_j, oracle::host_watts(h.power, h.cores, 0.0, false) * 300.0);
  EXPECT_EQ(rep.svr, 0.0);
  EXPECT_EQ(rep.migrations, 0);
  ASSERT_EQ(rep.rows.size(), 1u);
  EXPECT_EQ(rep.rows[0].clock_s, 300);
}

TEST(Simulation, TaskFinishesAtNominalTime) {
  auto cfg = bare(1, 900);
  VmSpec v;
  v.id = 0;
  v.mips = 500;
  v.host_id = 0;
  cfg.vms.push_back(v);
  cfg = validate_config(cfg);
  scheduler::FcfsPolicy p;
  engine::Simulation sim(cfg, {task(0, 300000, 500)}, p);
  const auto rep = sim.run();
  const auto& w = sim.state().workloads[0];
  ASSERT_TRUE(w.finish_s.has_value());
  EXPECT_DOUBLE_EQ(*w.finish_s, 600.0);
  EXPECT_EQ(rep.tasks_completed, 1);
  EXPECT_EQ(rep.sla_violations, 0);
}

TEST(Simulation, EvictionFromOverheatedHostMigratesOnce) {
  auto cfg = bare(2, 900);
  cfg.thermal_mode = ThermalMode::time_dependent;
  cfg.hosts[0].initial_temp_c = 90.0;
  VmSpec v;
  v.id = 0;
  v.base_util = 0.5;
  v.host_id = 0;
  cfg.vms.push_back(v);
  cfg = validate_config(cfg);
  scheduler::ThermalPolicy p;
  engine::Simulation sim(cfg, {}, p);
  ASSERT_EQ(sim.state().migrations, 1);
  EXPECT_EQ(sim.state().vms[0].host_id, std::optional<HostId>(1));
  EXPECT_DOUBLE_EQ(sim.state().vms[0].downtime_s, 8.192);
  sim.step();
  EXPECT_EQ(sim.state().vms[0].downtime_s, 0.0);
  const auto rep = sim.run();
  EXPECT_EQ(rep.migrations, 1);
  const auto n = std::count_if(rep.events.begin(), rep.events.end(), [](const auto& e) { return e.kind == "migrate"; });
  EXPECT_EQ(n, 1);
}

TEST(Simulation, NonThermalPolicyDoesNotEvict) {
  auto cfg = bare(2, 900);
  cfg.thermal_mode = ThermalMode::time_dependent;
  cfg.hosts[0].initial_temp_c = 90.0;
  VmSpec v;
  v.id = 0;
  v.host_id = 0;
  cfg.vms.push_back(v);
  cfg = validate_config(cfg);
  scheduler::FcfsPolicy p;
  engine::Simulation sim(cfg, {}, p);
  EXPECT_EQ(sim.run().migrations, 0);
}

TEST(Simulation, EmptyRun) {
  auto cfg = bare(3);
  const auto result = engine::run(cfg);
  ASSERT_EQ(result.replicates.size(), 1u);
  EXPECT_EQ(result.replicates[0].svr, 0.0);
  EXPECT_EQ(result.replicates[0].migrations, 0);
  EXPECT_EQ(result.replicates[0].rows.size(), 3u);
  EXPECT_EQ(result.summary.size(), 2u);
}

TEST(Simulation, UnknownPolicy) {
  auto cfg = bare(1);
  cfg.policy = "nope";
  EXPECT_THROW(engine::run(cfg), UnknownPolicy);
}

TEST(Simulation, Deterministic) {
  for (const char* pol : {"fcfs", "thermal+utilization"}) {
    const auto cfg = small(7, pol);
    const auto a = engine::run(cfg), b = engine::run(cfg);
    ASSERT_EQ(io::summary_csv(a.summary), io::summary_csv(b.summary));
    for (std::size_t r = 0; r < a.replicates.size(); ++r) {
      ASSERT_EQ(io::per_step_csv(a.replicates[r].rows), io::per_step_csv(b.replicates[r].rows));
      ASSERT_EQ(a.replicates[r].event_hash, b.replicates[r].event_hash);
    }
  }
}

TEST(Simulation, MeanRowIsReplicateMean) {
  const auto res = engine::run(small(3, "thermal+utilization"));
  ASSERT_EQ(res.summary.size(), 3u);
  const auto& m = res.summary.back();
  EXPECT_EQ(m.replicate, "mean");
  const auto& a = res.summary[0];
  const auto& b = res.summary[1];
  EXPECT_NEAR(m.total_energy_kwh, (a.total_energy_kwh + b.total_energy_kwh) / 2, 1e-12);
  EXPECT_NEAR(m.svr, (a.svr + b.svr) / 2, 1e-12);
  EXPECT_NEAR(m.temp_mean_c, (a.temp_mean_c + b.temp_mean_c) / 2, 1e-12);
  EXPECT_EQ(a.seed + 1, b.seed);
}

TEST(Simulation, TasksConservedAndSvrBounded) {
  for (const char* pol : {"fcfs", "utilization", "thermal", "thermal+utilization"}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      auto cfg = small(seed, pol);
      cfg.replicates = 1;
      const auto rep = engine::run(cfg).replicates[0];
      EXPECT_LE(rep.tasks_completed, rep.tasks_arrived);
      EXPECT_LE(rep.tasks_arrived, cfg.workload.count);
      EXPECT_GE(rep.svr, 0.0);
      EXPECT_LE(rep.svr, 1.0);
      EXPECT_GE(rep.sla_violations, rep.tasks_arrived - rep.tasks_completed);
    }
  }
}

TEST(Simulation, EnergyMatchesRecomputation) {
  auto cfg = small(11, "thermal+utilization");
  scheduler::ThermalUtilizationPolicy p;
  engine::Simulation sim(cfg, p);
  const auto rep = sim.run();
  const auto& s = sim.state();
  double joules = 0.0;
  for (std::size_t h = 0; h < s.hosts.size(); ++h) {
    const auto& spec = s.hosts[h].spec;
    ASSERT_EQ(s.power_series[h].size(), static_cast<std::size_t>(cfg.step_count()));
    for (std::size_t k = 0; k < s.power_series[h].size(); ++k) {
      const double want = oracle::host_watts(spec.power, spec.cores, s.util_series[h][k], s.storage_series[h][k]);
      ASSERT_NEAR(s.power_series[h][k], want, 1e-9 * want);
      joules += want * static_cast<double>(cfg.interval_s);
    }
  }
  EXPECT_NEAR(rep.energy_j, joules, 1e-9 * joules);
  EXPECT_NEAR(rep.total_energy_kwh, joules / 3.6e6, 1e-9 * joules / 3.6e6);
}

TEST(Simulation, TraceWorkloads) {
  io::UtilizationTrace t;
  t.samples = {50, 100};
  const auto ws = engine::trace_workloads({t}, 400.0, 300, 9, 256.0);
  ASSERT_EQ(ws.size(), 1u);
  EXPECT_EQ(ws[0].id, 9);
  EXPECT_DOUBLE_EQ(ws[0].length_mi, 0.5 * 400 * 300 + 400 * 300);
  EXPECT_DOUBLE_EQ(ws[0].mips_requested, 300.0);
  EXPECT_DOUBLE_EQ(ws[0].demand_mips(0), 200.0);
  EXPECT_DOUBLE_EQ(ws[0].demand_mips(1), 400.0);
  io::UtilizationTrace idle;
  idle.samples = {0, 0};
  EXPECT_TRUE(engine::trace_workloads({idle}, 400.0, 300, 0, 256.0).empty());
}

TEST(Report, RoundTrip) {
  const auto cfg = small(5, "thermal");
  const auto res = engine::run(cfg);
  const auto dir = scratch("roundtrip");
  const auto paths = io::write_report(cfg, res, dir);
  ASSERT_EQ(paths.per_step.size(), 2u);
  EXPECT_EQ(io::read_summary(paths.summary), res.summary);
  EXPECT_EQ(io::read_per_step(paths.per_step[0]), res.replicates[0].rows);
  EXPECT_EQ(io::read_per_step(paths.per_step[1]), res.replicates[1].rows);
  const auto s = io::summarize_steps(res.replicates[0].rows);
  EXPECT_NEAR(s.total_energy_kwh, res.replicates[0].total_energy_kwh, 1e-9);
  EXPECT_EQ(s.svr, res.replicates[0].svr);
  EXPECT_EQ(s.migrations, res.replicates[0].migrations);
  EXPECT_NEAR(s.temp_mean_c, res.replicates[0].temp_mean_c, 1e-9);
  const auto manifest = io::read_file(paths.manifest);
  EXPECT_NE(manifest.find("\"lambda_per_interval\""), std::string::npos);
  EXPECT_NE(manifest.find(config::digest(cfg)), std::string::npos);
  fs::remove_all(dir);
}

TEST(Report, Errors) {
  const auto dir = scratch("errors");
  fs::create_directories(dir);
  io::write_file(dir / "blocker", "x");
  const auto cfg = bare(1);
  EXPECT_THROW(io::write_report(cfg, engine::run(cfg), dir / "blocker" / "out"), IoError);
  io::write_file(dir / "bad.csv", "not,the,header\n");
  EXPECT_THROW(io::read_summary(dir / "bad.csv"), SchemaError);
  EXPECT_THROW(io::read_per_step(dir / "missing.csv"), IoError);
  fs::remove_all(dir);
}
