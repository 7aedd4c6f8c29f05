#pragma once

#include <cstdint>
#include <vector>

#include "ladder/cost_model.hpp"
#include "ladder/costsim.hpp"
#include "ladder/fabric.hpp"
#include "ladder/model.hpp"
#include "ladder/shard.hpp"
#include "ladder/trace.hpp"

namespace ladder {

struct EngineOptions {
  int world = 1;
  CostModel cost;        // cost.mode selects wallclock vs simulated timing
  ComputeModel compute;  // virtual module durations (simulated mode only)
  bool upper_bound = false;  // standard schedule, all collectives removed
  bool record_trace = false;
  bool record_step_logits = false;
  int64_t max_seq_len = 0;  // 0 = size the KV cache to prompt + new tokens
};

struct PhaseMetrics {
  double prefill_s = 0.0;
  double decode_s = 0.0;
  double tokens_per_second = 0.0;  // batch * n_new / (prefill + decode)
};

struct GenerateResult {
  std::vector<std::vector<int32_t>> tokens;  // per batch element
  Tensor prefill_logits;                     // [batch*prompt_len, vocab], rank 0
  std::vector<Tensor> step_logits;           // per generated token: [batch, vocab]
  bool logits_valid = true;                  // false for upper-bound runs
  PhaseMetrics metrics;
  std::vector<TraceEvent> trace;
  int64_t collective_count = 0;
  int64_t sum_collective_cost_ns = 0;
  int max_outstanding = 0;        // peak in-flight collectives on any rank
  int64_t total_virtual_ns = 0;   // simulated mode end-to-end virtual time
};

// Per-rank state threaded across ladder layers; mirrors the five-slot
// schedule signature (residual, attn_out, mlp_out, attn_work, mlp_work):
// each pending update travels inside its handle and wait() yields it.
struct RankLayerState {
  Tensor residual;
  Handle attn_work;
  Handle mlp_work;
};

// Distributed executor: runs the sharded model across `world` rank threads
// under the schedule selected by the config's per-layer variant tags
// (upper_bound forces the standard schedule with collectives removed).
// Logits are independent of the cost model and timing mode; at world 1
// they are bitwise equal to the single-threaded reference forwards.
class Engine {
 public:
  Engine(ModelConfig cfg, const Weights& weights, EngineOptions opts);

  // Greedy generation. One prompt per batch element; all prompts must
  // share one length. n_new_tokens = 1 token sampled from prefill +
  // (n_new_tokens - 1) decode steps.
  GenerateResult generate(const std::vector<std::vector<int32_t>>& prompts, int n_new_tokens);

  const ModelConfig& config() const { return cfg_; }
  const EngineOptions& options() const { return opts_; }

 private:
  ModelConfig cfg_;
  EngineOptions opts_;
  std::vector<ShardedWeights> shards_;
};

}  // namespace ladder
