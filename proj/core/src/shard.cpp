#include "ladder/shard.hpp"

#include <algorithm>
#include <cstring>

#include "ladder/errors.hpp"

namespace ladder {

namespace {

// Columns [c0, c0+cn) of src.
Tensor slice_cols(const Tensor& src, int64_t c0, int64_t cn) {
  const int64_t rows = src.dim(0), cols = src.dim(1);
  Tensor out = Tensor::zeros({rows, cn});
  for (int64_t r = 0; r < rows; ++r) {
    std::memcpy(out.row(r), src.row(r) + c0, sizeof(float) * static_cast<size_t>(cn));
  }
  (void)cols;
  return out;
}

// Rows [r0, r0+rn) of src.
Tensor slice_rows(const Tensor& src, int64_t r0, int64_t rn) {
  const int64_t cols = src.dim(1);
  Tensor out = Tensor::zeros({rn, cols});
  std::memcpy(out.data(), src.row(r0), sizeof(float) * static_cast<size_t>(rn * cols));
  return out;
}

void paste_cols(Tensor& dst, const Tensor& src, int64_t c0) {
  for (int64_t r = 0; r < src.dim(0); ++r) {
    std::memcpy(dst.row(r) + c0, src.row(r), sizeof(float) * static_cast<size_t>(src.dim(1)));
  }
}

void paste_rows(Tensor& dst, const Tensor& src, int64_t r0) {
  std::memcpy(dst.row(r0), src.data(), sizeof(float) * static_cast<size_t>(src.numel()));
}

}  // namespace

void validate_shardable(const ModelConfig& cfg, int world_size) {
  cfg.validate();
  if (world_size <= 0) throw ConfigError("world_size must be positive");
  if (cfg.n_heads % world_size != 0) {
    throw ConfigError("n_heads = " + std::to_string(cfg.n_heads) + " not divisible by world " +
                      std::to_string(world_size));
  }
  if (cfg.n_kv_heads % world_size != 0) {
    throw ConfigError("n_kv_heads = " + std::to_string(cfg.n_kv_heads) +
                      " not divisible by world " + std::to_string(world_size));
  }
  if (cfg.d_ff % world_size != 0) {
    throw ConfigError("d_ff = " + std::to_string(cfg.d_ff) + " not divisible by world " +
                      std::to_string(world_size));
  }
}

std::vector<ShardedWeights> shard_weights(const ModelConfig& cfg, const Weights& w,
                                          int world_size) {
  validate_shardable(cfg, world_size);
  validate_weights(cfg, w);

  const int lh = cfg.n_heads / world_size;       // local query heads
  const int lkv = cfg.n_kv_heads / world_size;   // local kv heads
  const int lff = cfg.d_ff / world_size;
  const int64_t hd = cfg.head_dim;

  std::vector<ShardedWeights> out;
  out.reserve(static_cast<size_t>(world_size));
  for (int r = 0; r < world_size; ++r) {
    ShardedWeights sw;
    sw.spec = ShardSpec{world_size, r};
    sw.local_geom = AttnGeometry{lh, lkv, cfg.head_dim, cfg.rope_base};
    sw.local_d_ff = lff;
    sw.token_embedding = w.token_embedding;
    sw.final_norm_gain = w.final_norm_gain;
    sw.lm_head = w.lm_head;
    sw.layers.resize(w.layers.size());
    for (size_t l = 0; l < w.layers.size(); ++l) {
      const LayerWeights& src = w.layers[l];
      LayerWeights& dst = sw.layers[l];
      dst.attn_norm_gain = src.attn_norm_gain;
      dst.mlp_norm_gain = src.mlp_norm_gain;
      // head-aligned contiguous column blocks in rank order
      dst.wq = slice_cols(src.wq, static_cast<int64_t>(r) * lh * hd, static_cast<int64_t>(lh) * hd);
      dst.wk =
          slice_cols(src.wk, static_cast<int64_t>(r) * lkv * hd, static_cast<int64_t>(lkv) * hd);
      dst.wv =
          slice_cols(src.wv, static_cast<int64_t>(r) * lkv * hd, static_cast<int64_t>(lkv) * hd);
      dst.wo = slice_rows(src.wo, static_cast<int64_t>(r) * lh * hd, static_cast<int64_t>(lh) * hd);
      dst.wgate = slice_cols(src.wgate, static_cast<int64_t>(r) * lff, lff);
      dst.wup = slice_cols(src.wup, static_cast<int64_t>(r) * lff, lff);
      dst.wdown = slice_rows(src.wdown, static_cast<int64_t>(r) * lff, lff);
    }
    out.push_back(std::move(sw));
  }
  return out;
}

Weights unshard(const ModelConfig& cfg, const std::vector<ShardedWeights>& shards) {
  if (shards.empty()) throw ConfigError("unshard: empty shard set");
  const int world = shards.front().spec.world_size;
  if (static_cast<int>(shards.size()) != world) {
    throw ConfigError("unshard: got " + std::to_string(shards.size()) + " shards for world " +
                      std::to_string(world));
  }
  validate_shardable(cfg, world);

  // Reassembly is by rank id, insensitive to input order.
  std::vector<const ShardedWeights*> by_rank(static_cast<size_t>(world), nullptr);
  for (const ShardedWeights& s : shards) {
    if (s.spec.world_size != world || s.spec.rank < 0 || s.spec.rank >= world) {
      throw ConfigError("unshard: inconsistent shard spec");
    }
    if (by_rank[static_cast<size_t>(s.spec.rank)]) {
      throw ConfigError("unshard: duplicate rank " + std::to_string(s.spec.rank));
    }
    by_rank[static_cast<size_t>(s.spec.rank)] = &s;
  }

  const int lh = cfg.n_heads / world;
  const int lkv = cfg.n_kv_heads / world;
  const int lff = cfg.d_ff / world;
  const int64_t hd = cfg.head_dim;
  const int64_t qd = static_cast<int64_t>(cfg.n_heads) * hd;
  const int64_t kvd = static_cast<int64_t>(cfg.n_kv_heads) * hd;

  Weights w;
  w.token_embedding = by_rank[0]->token_embedding;
  w.final_norm_gain = by_rank[0]->final_norm_gain;
  w.lm_head = by_rank[0]->lm_head;
  w.layers.resize(static_cast<size_t>(cfg.n_layers));
  for (size_t l = 0; l < w.layers.size(); ++l) {
    LayerWeights& dst = w.layers[l];
    dst.attn_norm_gain = by_rank[0]->layers[l].attn_norm_gain;
    dst.mlp_norm_gain = by_rank[0]->layers[l].mlp_norm_gain;
    dst.wq = Tensor::zeros({cfg.d_model, qd});
    dst.wk = Tensor::zeros({cfg.d_model, kvd});
    dst.wv = Tensor::zeros({cfg.d_model, kvd});
    dst.wo = Tensor::zeros({qd, cfg.d_model});
    dst.wgate = Tensor::zeros({cfg.d_model, cfg.d_ff});
    dst.wup = Tensor::zeros({cfg.d_model, cfg.d_ff});
    dst.wdown = Tensor::zeros({cfg.d_ff, cfg.d_model});
    for (int r = 0; r < world; ++r) {
      const LayerWeights& src = by_rank[static_cast<size_t>(r)]->layers[l];
      paste_cols(dst.wq, src.wq, static_cast<int64_t>(r) * lh * hd);
      paste_cols(dst.wk, src.wk, static_cast<int64_t>(r) * lkv * hd);
      paste_cols(dst.wv, src.wv, static_cast<int64_t>(r) * lkv * hd);
      paste_rows(dst.wo, src.wo, static_cast<int64_t>(r) * lh * hd);
      paste_cols(dst.wgate, src.wgate, static_cast<int64_t>(r) * lff);
      paste_cols(dst.wup, src.wup, static_cast<int64_t>(r) * lff);
      paste_rows(dst.wdown, src.wdown, static_cast<int64_t>(r) * lff);
    }
  }
  validate_weights(cfg, w);
  return w;
}

}  // namespace ladder
