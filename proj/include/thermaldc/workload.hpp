#pragma once

#include <cstdint>
#include <vector>

#include "model.hpp"
#include "rng.hpp"

namespace thermaldc {

namespace engine {

/// Number of arrivals in one interval, Poisson with mean `lambda`.
inline std::uint64_t poisson_arrivals(double lambda, Rng& rng) {
  if (!(lambda >= 0.0)) throw DomainError("poisson_arrivals: lambda must be >= 0");
  return rng.poisson(lambda);
}

} // namespace engine

namespace io {

/// Draws `count` synthetic workloads. Sizes and costs come from `sizes`;
/// arrival instants from `arrivals` as Poisson(λ) counts per interval
/// (λ ≤ 0 puts every workload at t = 0). Output is ordered by arrival, then id.
inline std::vector<Workload> generate_workloads(const WorkloadGenConfig& cfg, Rng& sizes, Rng& arrivals,
                                                std::int64_t count, Seconds interval_s = 300) {
  std::vector<Workload> out;
  if (count <= 0) return out;
  out.reserve(static_cast<std::size_t>(count));
  const double lambda = cfg.lambda_per_interval.value_or(0.0);

  Seconds slot = 0;
  std::uint64_t left_in_slot = lambda > 0.0 ? engine::poisson_arrivals(lambda, arrivals) : UINT64_MAX;
  for (std::int64_t i = 0; i < count; ++i) {
    while (left_in_slot == 0) {
      ++slot;
      left_in_slot = engine::poisson_arrivals(lambda, arrivals);
    }
    --left_in_slot;

    Workload w;
    w.id = i;
    w.length_mi = cfg.size_base_mi * (1.0 + sizes.uniform(cfg.size_lo, cfg.size_hi));
    w.file_size_mb = cfg.file_base_mb * (1.0 + sizes.uniform(cfg.file_lo, cfg.file_hi));
    w.output_size_mb = cfg.output_base_mb * (1.0 + sizes.uniform(cfg.output_lo, cfg.output_hi));
    w.cost_cd = sizes.uniform(cfg.cost_lo, cfg.cost_hi);
    w.mips_requested = sizes.uniform(cfg.mips_lo, cfg.mips_hi);
    w.ram_mb = sizes.uniform(cfg.ram_lo_mb, cfg.ram_hi_mb);
    w.arrival_s = slot * interval_s;
    out.push_back(std::move(w));
  }
  return out;
}

inline std::vector<Workload> generate_workloads(const WorkloadGenConfig& cfg, Rng& rng, std::int64_t count,
                                                Seconds interval_s = 300) {
  return generate_workloads(cfg, rng, rng, count, interval_s);
}

} // namespace io
} // namespace thermaldc
