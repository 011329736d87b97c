#pragma once

#include <cstdint>
#include <optional>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>

#include <json.hpp>

#include "error.hpp"
#include "model.hpp"
#include "rng.hpp"

// JSON form of DataCenterConfig. Field names match the struct members.
// Unknown keys are rejected.
namespace thermaldc::config {

using nlohmann::json;

inline const char* to_string(ThermalMode m) {
  return m == ThermalMode::time_dependent ? "time-dependent" : "paper-literal";
}

inline ThermalMode thermal_mode_from_string(const std::string& s) {
  if (s == "paper-literal") return ThermalMode::paper_literal;
  if (s == "time-dependent") return ThermalMode::time_dependent;
  throw InvalidConfig("thermal_mode", "expected \"paper-literal\" or \"time-dependent\", got \"" + s + "\"");
}

/// Named parameter sets.
inline PowerParams power_preset(const std::string& name) {
  if (name == "table4") return PowerParams{};
  throw InvalidConfig("power", "unknown preset \"" + name + "\"");
}

inline ThermalParams thermal_preset(const std::string& name) {
  if (name == "paper") return ThermalParams{};
  throw InvalidConfig("thermal", "unknown preset \"" + name + "\"");
}

namespace detail {

/// Reads members of one JSON object and remembers which keys were used.
class ObjectReader {
public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InvalidConfig(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    out = convert<T>(j_.at(key), field(key));
  }

  template <class T>
  void get(const std::string& key, std::optional<T>& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    if (j_.at(key).is_null()) {
      out.reset();
      return;
    }
    out = convert<T>(j_.at(key), field(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw InvalidConfig(field(it.key()), "unknown key");
  }

  template <class T>
  static T convert(const json& v, const std::string& at) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw InvalidConfig(at, "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw InvalidConfig(at, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw InvalidConfig(at, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned()) return static_cast<T>(v.get<std::uint64_t>());
        const auto s = v.get<std::int64_t>();
        if (s < 0) throw InvalidConfig(at, "expected a non-negative integer");
        return static_cast<T>(s);
      } else {
        return static_cast<T>(v.get<std::int64_t>());
      }
    } else {
      if (!v.is_number()) throw InvalidConfig(at, "expected a number");
      return v.get<T>();
    }
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline json to_json(const DynamicEnergyParams& d) {
  return {{"capacitance_f", d.capacitance_f}, {"voltage_v", d.voltage_v}, {"frequency_hz", d.frequency_hz},
          {"mu1", d.mu1}, {"mu2", d.mu2}};
}

inline json to_json(const PowerParams& p) {
  return {{"short_circuit_w", p.short_circuit_w},
          {"leakage_w", p.leakage_w},
          {"idle_w", p.idle_w},
          {"storage", {{"read_w", p.storage.read_w}, {"write_w", p.storage.write_w}, {"idle_w", p.storage.idle_w}}},
          {"memory", {{"sram_w", p.memory.sram_w}, {"dram_w", p.memory.dram_w}}},
          {"network",
           {{"router_w", p.network.router_w},
            {"gateway_w", p.network.gateway_w},
            {"lan_card_w", p.network.lan_card_w},
            {"switch_w", p.network.switch_w}}},
          {"extra",
           {{"motherboard_w", p.extra.motherboard_w},
            {"connector_w", p.extra.connector_w},
            {"connector_ports", p.extra.connector_ports}}},
          {"cooling", {{"ac_w", p.cooling.ac_w}, {"compressor_w", p.cooling.compressor_w}, {"fan_w", p.cooling.fan_w}}},
          {"dyn", to_json(p.dyn)}};
}

inline json to_json(const ThermalParams& t) {
  return {{"r_kw", t.r_kw},           {"c_jk", t.c_jk},           {"t_inlet_c", t.t_inlet_c},
          {"t_initial_c", t.t_initial_c}, {"t_over_c", t.t_over_c}, {"t_danger_c", t.t_danger_c},
          {"t_normal_c", t.t_normal_c}, {"theta_cl_c", t.theta_cl_c}, {"theta_ch_c", t.theta_ch_c}};
}

inline PowerParams parse_power(const json& j, const std::string& at, PowerParams p) {
  if (j.is_string()) return power_preset(j.get<std::string>());
  ObjectReader r(j, at);
  if (r.has("preset")) p = power_preset(ObjectReader::convert<std::string>(r.raw("preset"), r.field("preset")));
  r.get("short_circuit_w", p.short_circuit_w);
  r.get("leakage_w", p.leakage_w);
  r.get("idle_w", p.idle_w);
  if (r.has("storage")) {
    ObjectReader s(r.raw("storage"), r.field("storage"));
    s.get("read_w", p.storage.read_w);
    s.get("write_w", p.storage.write_w);
    s.get("idle_w", p.storage.idle_w);
    s.finish();
  }
  if (r.has("memory")) {
    ObjectReader s(r.raw("memory"), r.field("memory"));
    s.get("sram_w", p.memory.sram_w);
    s.get("dram_w", p.memory.dram_w);
    s.finish();
  }
  if (r.has("network")) {
    ObjectReader s(r.raw("network"), r.field("network"));
    s.get("router_w", p.network.router_w);
    s.get("gateway_w", p.network.gateway_w);
    s.get("lan_card_w", p.network.lan_card_w);
    s.get("switch_w", p.network.switch_w);
    s.finish();
  }
  if (r.has("extra")) {
    ObjectReader s(r.raw("extra"), r.field("extra"));
    s.get("motherboard_w", p.extra.motherboard_w);
    s.get("connector_w", p.extra.connector_w);
    s.get("connector_ports", p.extra.connector_ports);
    s.finish();
  }
  if (r.has("cooling")) {
    ObjectReader s(r.raw("cooling"), r.field("cooling"));
    s.get("ac_w", p.cooling.ac_w);
    s.get("compressor_w", p.cooling.compressor_w);
    s.get("fan_w", p.cooling.fan_w);
    s.finish();
  }
  if (r.has("dyn")) {
    ObjectReader s(r.raw("dyn"), r.field("dyn"));
    s.get("capacitance_f", p.dyn.capacitance_f);
    s.get("voltage_v", p.dyn.voltage_v);
    s.get("frequency_hz", p.dyn.frequency_hz);
    s.get("mu1", p.dyn.mu1);
    s.get("mu2", p.dyn.mu2);
    s.finish();
  }
  r.finish();
  return p;
}

inline ThermalParams parse_thermal(const json& j, const std::string& at, ThermalParams t) {
  if (j.is_string()) return thermal_preset(j.get<std::string>());
  ObjectReader r(j, at);
  if (r.has("preset")) t = thermal_preset(ObjectReader::convert<std::string>(r.raw("preset"), r.field("preset")));
  r.get("r_kw", t.r_kw);
  r.get("c_jk", t.c_jk);
  r.get("t_inlet_c", t.t_inlet_c);
  r.get("t_initial_c", t.t_initial_c);
  r.get("t_over_c", t.t_over_c);
  r.get("t_danger_c", t.t_danger_c);
  r.get("t_normal_c", t.t_normal_c);
  r.get("theta_cl_c", t.theta_cl_c);
  r.get("theta_ch_c", t.theta_ch_c);
  r.finish();
  return t;
}

inline json to_json(const HostSpec& h) {
  json j = {{"id", h.id},
            {"cores", h.cores},
            {"mips_per_core", h.mips_per_core},
            {"ram_mb", h.ram_mb},
            {"bandwidth_bps", h.bandwidth_bps},
            {"thermal", to_json(h.thermal)},
            {"power", to_json(h.power)}};
  if (h.initial_temp_c) j["initial_temp_c"] = *h.initial_temp_c;
  return j;
}

inline json to_json(const VmSpec& v) {
  json j = {{"id", v.id},
            {"mips", v.mips},
            {"ram_mb", v.ram_mb},
            {"bandwidth_bps", v.bandwidth_bps},
            {"storage_mb", v.storage_mb},
            {"base_util", v.base_util}};
  if (v.host_id) j["host_id"] = *v.host_id;
  return j;
}

inline json to_json(const WorkloadGenConfig& w) {
  json j = {{"count", w.count},         {"size_base_mi", w.size_base_mi}, {"size_lo", w.size_lo},
            {"size_hi", w.size_hi},     {"file_base_mb", w.file_base_mb}, {"file_lo", w.file_lo},
            {"file_hi", w.file_hi},     {"output_base_mb", w.output_base_mb}, {"output_lo", w.output_lo},
            {"output_hi", w.output_hi}, {"cost_lo", w.cost_lo},           {"cost_hi", w.cost_hi},
            {"mips_lo", w.mips_lo},     {"mips_hi", w.mips_hi},           {"ram_lo_mb", w.ram_lo_mb},
            {"ram_hi_mb", w.ram_hi_mb}};
  if (w.lambda_per_interval) j["lambda_per_interval"] = *w.lambda_per_interval;
  return j;
}

inline WorkloadGenConfig parse_workload(const json& j, const std::string& at) {
  WorkloadGenConfig w;
  ObjectReader r(j, at);
  r.get("count", w.count);
  r.get("lambda_per_interval", w.lambda_per_interval);
  r.get("size_base_mi", w.size_base_mi);
  r.get("size_lo", w.size_lo);
  r.get("size_hi", w.size_hi);
  r.get("file_base_mb", w.file_base_mb);
  r.get("file_lo", w.file_lo);
  r.get("file_hi", w.file_hi);
  r.get("output_base_mb", w.output_base_mb);
  r.get("output_lo", w.output_lo);
  r.get("output_hi", w.output_hi);
  r.get("cost_lo", w.cost_lo);
  r.get("cost_hi", w.cost_hi);
  r.get("mips_lo", w.mips_lo);
  r.get("mips_hi", w.mips_hi);
  r.get("ram_lo_mb", w.ram_lo_mb);
  r.get("ram_hi_mb", w.ram_hi_mb);
  r.finish();
  return w;
}

} // namespace detail

/// Heterogeneous datacenter shaped after the large-scale parameter table:
/// VMs draw 100–4000 MIPS and 2048–12576 MB; hosts draw their initial
/// temperature from 12–22 °C and inlet temperature from 15–40 °C.
inline void apply_scale(DataCenterConfig& cfg, std::int64_t n_hosts, std::int64_t n_vms,
                        const PowerParams& power, const ThermalParams& thermal) {
  if (n_hosts < 1) throw InvalidConfig("scale.hosts", "must be >= 1");
  if (n_vms < 0) throw InvalidConfig("scale.vms", "must be >= 0");
  Rng rng(cfg.seed, Stream::scale);
  cfg.hosts.clear();
  cfg.vms.clear();
  for (std::int64_t i = 0; i < n_hosts; ++i) {
    HostSpec h;
    h.id = i;
    h.cores = 4;
    h.mips_per_core = 2000.0;
    h.ram_mb = 32768.0;
    h.bandwidth_bps = 1.0e9;
    h.power = power;
    h.thermal = thermal;
    h.thermal.t_initial_c = rng.uniform(12.0, 22.0);
    h.thermal.t_inlet_c = rng.uniform(15.0, 40.0);
    cfg.hosts.push_back(h);
  }
  for (std::int64_t i = 0; i < n_vms; ++i) {
    VmSpec v;
    v.id = i;
    v.mips = static_cast<double>(rng.uniform_int(100, 4000));
    v.ram_mb = static_cast<double>(rng.uniform_int(2048, 12576));
    cfg.vms.push_back(v);
  }
}

inline json to_json(const DataCenterConfig& cfg) {
  json hosts = json::array();
  for (const auto& h : cfg.hosts) hosts.push_back(detail::to_json(h));
  json vms = json::array();
  for (const auto& v : cfg.vms) vms.push_back(detail::to_json(v));
  json j = {{"hosts", hosts},
            {"vms", vms},
            {"interval_s", cfg.interval_s},
            {"horizon_s", cfg.horizon_s},
            {"seed", cfg.seed},
            {"policy", cfg.policy},
            {"thermal_mode", to_string(cfg.thermal_mode)},
            {"sla_slack", cfg.sla_slack},
            {"replicates", cfg.replicates},
            {"workload", detail::to_json(cfg.workload)},
            {"traces", cfg.traces},
            {"trace_peak_mips", cfg.trace_peak_mips}};
  if (cfg.vm_thresholds)
    j["vm_thresholds"] = {{"theta_low_c", cfg.vm_thresholds->theta_low_c},
                          {"theta_high_c", cfg.vm_thresholds->theta_high_c}};
  return j;
}

/// Builds a config from JSON. Omitted hosts/vms fall back to the 4-host,
/// 12-VM default datacenter; top-level "power" and "thermal" apply to every
/// host that does not carry its own. Does not validate invariants.
inline DataCenterConfig from_json(const json& j) {
  using detail::ObjectReader;
  ObjectReader r(j, "");
  DataCenterConfig cfg = default_config();
  r.get("interval_s", cfg.interval_s);
  r.get("horizon_s", cfg.horizon_s);
  r.get("seed", cfg.seed);
  r.get("policy", cfg.policy);
  if (r.has("thermal_mode"))
    cfg.thermal_mode = thermal_mode_from_string(ObjectReader::convert<std::string>(r.raw("thermal_mode"), "thermal_mode"));
  r.get("sla_slack", cfg.sla_slack);
  r.get("replicates", cfg.replicates);
  r.get("trace_peak_mips", cfg.trace_peak_mips);
  if (r.has("traces")) {
    const json& t = r.raw("traces");
    if (!t.is_array()) throw InvalidConfig("traces", "expected an array of paths");
    cfg.traces.clear();
    for (std::size_t i = 0; i < t.size(); ++i)
      cfg.traces.push_back(ObjectReader::convert<std::string>(t[i], "traces[" + std::to_string(i) + "]"));
  }
  if (r.has("workload")) cfg.workload = detail::parse_workload(r.raw("workload"), "workload");
  if (r.has("vm_thresholds")) {
    ObjectReader s(r.raw("vm_thresholds"), "vm_thresholds");
    VmThresholds th;
    s.get("theta_low_c", th.theta_low_c);
    s.get("theta_high_c", th.theta_high_c);
    s.finish();
    cfg.vm_thresholds = th;
  }

  PowerParams power;
  ThermalParams thermal;
  if (r.has("power")) power = detail::parse_power(r.raw("power"), "power", power);
  if (r.has("thermal")) thermal = detail::parse_thermal(r.raw("thermal"), "thermal", thermal);
  for (auto& h : cfg.hosts) {
    h.power = power;
    h.thermal = thermal;
  }

  if (r.has("scale")) {
    if (r.has("hosts") || r.has("vms")) throw InvalidConfig("scale", "cannot be combined with hosts/vms");
    ObjectReader s(r.raw("scale"), "scale");
    std::int64_t n_hosts = 120, n_vms = 360;
    s.get("hosts", n_hosts);
    s.get("vms", n_vms);
    s.finish();
    apply_scale(cfg, n_hosts, n_vms, power, thermal);
  }

  if (r.has("hosts")) {
    const json& hs = r.raw("hosts");
    if (!hs.is_array()) throw InvalidConfig("hosts", "expected an array");
    cfg.hosts.clear();
    for (std::size_t i = 0; i < hs.size(); ++i) {
      const std::string at = "hosts[" + std::to_string(i) + "]";
      ObjectReader h(hs[i], at);
      HostSpec spec;
      spec.id = static_cast<HostId>(i);
      spec.power = power;
      spec.thermal = thermal;
      h.get("id", spec.id);
      h.get("cores", spec.cores);
      h.get("mips_per_core", spec.mips_per_core);
      h.get("ram_mb", spec.ram_mb);
      h.get("bandwidth_bps", spec.bandwidth_bps);
      h.get("initial_temp_c", spec.initial_temp_c);
      if (h.has("power")) spec.power = detail::parse_power(h.raw("power"), at + ".power", power);
      if (h.has("thermal")) spec.thermal = detail::parse_thermal(h.raw("thermal"), at + ".thermal", thermal);
      h.finish();
      cfg.hosts.push_back(spec);
    }
  }
  if (r.has("vms")) {
    const json& vs = r.raw("vms");
    if (!vs.is_array()) throw InvalidConfig("vms", "expected an array");
    cfg.vms.clear();
    for (std::size_t i = 0; i < vs.size(); ++i) {
      ObjectReader v(vs[i], "vms[" + std::to_string(i) + "]");
      VmSpec spec;
      spec.id = static_cast<VmId>(i);
      v.get("id", spec.id);
      v.get("mips", spec.mips);
      v.get("ram_mb", spec.ram_mb);
      v.get("bandwidth_bps", spec.bandwidth_bps);
      v.get("storage_mb", spec.storage_mb);
      v.get("base_util", spec.base_util);
      v.get("host_id", spec.host_id);
      v.finish();
      cfg.vms.push_back(spec);
    }
  }
  r.finish();
  return cfg;
}

inline DataCenterConfig parse(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidConfig("<json>", e.what());
  }
  return from_json(j);
}

inline DataCenterConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto cfg = parse(ss.str());
  // Trace paths are relative to the config file.
  for (auto& t : cfg.traces) {
    const std::filesystem::path tp(t);
    if (tp.is_relative()) t = (path.parent_path() / tp).lexically_normal().string();
  }
  return cfg;
}

inline std::string serialize(const DataCenterConfig& cfg) { return to_json(cfg).dump(2); }

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Stable digest of the canonical (key-sorted, compact) JSON form.
inline std::string digest(const DataCenterConfig& cfg) { return hex64(fnv1a64(to_json(cfg).dump())); }

} // namespace thermaldc::config
