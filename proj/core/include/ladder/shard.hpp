#pragma once

#include <vector>

#include "ladder/model.hpp"
#include "ladder/modules.hpp"

namespace ladder {

struct ShardSpec {
  int world_size = 1;
  int rank = 0;
};

// One rank's partition of the model. Attention and MLP projections are
// split Megatron-style: wq/wk/wv/wgate/wup by output columns (attention
// splits are head-aligned), wo/wdown by the matching input rows. Norm
// gains, the embedding, and the LM head are replicated.
struct ShardedWeights {
  ShardSpec spec;
  AttnGeometry local_geom;  // per-rank head counts
  int local_d_ff = 0;
  Tensor token_embedding;
  std::vector<LayerWeights> layers;
  Tensor final_norm_gain;
  Tensor lm_head;
};

// Throws ConfigError naming the offending dimension if the config cannot
// split `world_size` ways.
void validate_shardable(const ModelConfig& cfg, int world_size);

std::vector<ShardedWeights> shard_weights(const ModelConfig& cfg, const Weights& w,
                                          int world_size);

// Exact inverse of shard_weights; order-insensitive (shards are matched by
// rank id) and bitwise.
Weights unshard(const ModelConfig& cfg, const std::vector<ShardedWeights>& shards);

}  // namespace ladder
