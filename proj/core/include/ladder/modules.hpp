#pragma once

#include <cstdint>
#include <vector>

#include "ladder/model.hpp"
#include "ladder/tensor.hpp"

namespace ladder {

// Head geometry of one executing context (dense model or one TP rank).
struct AttnGeometry {
  int n_heads = 0;
  int n_kv_heads = 0;
  int head_dim = 0;
  float rope_base = 10000.0f;
};

// One attention module on a chunk: qkv projections, rope, KV-cache append,
// grouped-query causal attention, output projection. x_normed is the
// already-normalized input [batch*s, d_model]; the result is a partial sum
// when lw holds a column/row shard.
Tensor attention_module(const Tensor& x_normed, const LayerWeights& lw, const AttnGeometry& g,
                        KVCache& kv, int layer, int64_t start_pos, int64_t batch);

// SwiGLU MLP: down(silu(gate(x)) * up(x)).
Tensor mlp_module(const Tensor& x_normed, const LayerWeights& lw);

}  // namespace ladder
