#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ladder/arch.hpp"
#include "ladder/cost_model.hpp"
#include "ladder/model.hpp"

namespace ladder {

// Per-module compute time model: FLOPs(module) / throughput_per_rank +
// kernel_overhead, or fixed per-module times for analytic regimes.
// Prefill attention carries the quadratic score term; decode attention
// reads the cache linearly in its length.
struct ComputeModel {
  double throughput_flops_per_rank = 2e14;
  double kernel_overhead_s = 5e-6;
  bool use_fixed = false;
  int64_t fixed_attn_ns = 0;
  int64_t fixed_mlp_ns = 0;

  static ComputeModel fixed_module_ns(int64_t attn_ns, int64_t mlp_ns);

  static double attn_flops(const ModelConfig& cfg, int world, int64_t batch, int64_t chunk,
                           int64_t cached_before);
  static double mlp_flops(const ModelConfig& cfg, int world, int64_t batch, int64_t chunk);

  int64_t attn_time_ns(const ModelConfig& cfg, int world, int64_t batch, int64_t chunk,
                       int64_t cached_before) const;
  int64_t mlp_time_ns(const ModelConfig& cfg, int world, int64_t batch, int64_t chunk) const;

  void validate() const;
};

struct SimStats {
  int64_t prefill_ns = 0;
  int64_t decode_ns = 0;
  int64_t total_ns = 0;
  double tokens_per_second = 0.0;  // aggregate: batch * gen_len / total
  int64_t collective_count = 0;
  int64_t sum_collective_cost_ns = 0;
};

// Deterministic event-driven execution of the engine schedules on a
// virtual int64-ns clock. Layer tags in cfg select the per-layer schedule;
// upper_bound forces the standard compute schedule with all collectives
// removed. Generation = one prefill pass over prompt_len plus
// (gen_len - 1) single-token decode passes. Collectives serialize on one
// virtual comm lane and are free at world 1.
SimStats simulate(const ModelConfig& cfg, bool upper_bound, int world, int64_t batch,
                  int64_t prompt_len, int gen_len, const ComputeModel& cm, const CostModel& cost);

// Closed-form per-module steady-state time (ns) for uniform module costs;
// the analytic cross-check of the event engine.
double steady_state_module_ns(ArchSpec::Kind arch, double m_attn_ns, double m_mlp_ns,
                              double c_ns);

struct SweepRow {
  std::string variant;
  int world = 1;
  int64_t batch = 1;
  int64_t prompt_len = 0;
  int gen_len = 0;
  double prefill_ms = 0.0;
  double decode_ms = 0.0;
  double tok_per_s = 0.0;
  double speedup_vs_standard = 1.0;
};

// Cartesian product over worlds x batches, one row per variant; each
// (world, batch) cell is normalized against its own standard run.
std::vector<SweepRow> sweep(const ModelConfig& base, const std::vector<ArchSpec>& variants,
                            const std::vector<int>& worlds, const std::vector<int64_t>& batches,
                            int64_t prompt_len, int gen_len, const ComputeModel& cm,
                            const CostModel& cost);

// Non-dominated rows under (completion latency, throughput per rank).
std::vector<SweepRow> pareto_front(const std::vector<SweepRow>& rows);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
void write_sweep_markdown(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace ladder
