#include "ladder/modules.hpp"

#include <cmath>
#include <numeric>

#include "ladder/kernels.hpp"

namespace ladder {

Tensor attention_module(const Tensor& x_normed, const LayerWeights& lw, const AttnGeometry& g,
                        KVCache& kv, int layer, int64_t start_pos, int64_t batch) {
  const int64_t s = x_normed.rows() / batch;
  std::vector<int64_t> positions(static_cast<size_t>(s));
  std::iota(positions.begin(), positions.end(), start_pos);

  Tensor q = matmul(x_normed, lw.wq);
  Tensor k = matmul(x_normed, lw.wk);
  Tensor v = matmul(x_normed, lw.wv);
  q = rope_apply(q, positions, g.head_dim, g.rope_base, batch);
  k = rope_apply(k, positions, g.head_dim, g.rope_base, batch);

  // K/V land in the cache before any collective runs on the output
  // projection: they are head-sharded and rank-local.
  kv.append(layer, k, v);
  Tensor keys = kv.keys(layer);
  Tensor values = kv.values(layer);

  const float scale = 1.0f / std::sqrt(static_cast<float>(g.head_dim));
  Tensor ctx = causal_attention(q, keys, values, g.n_heads, g.n_kv_heads, scale, batch);
  return matmul(ctx, lw.wo);
}

Tensor mlp_module(const Tensor& x_normed, const LayerWeights& lw) {
  Tensor gate = silu(matmul(x_normed, lw.wgate));
  Tensor up = matmul(x_normed, lw.wup);
  return matmul(mul(gate, up), lw.wdown);
}

}  // namespace ladder
