#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ladder/tensor.hpp"

namespace ladder {

enum class LayerVariant { Standard, Ladder, ParallelAttnMlp };

std::string variant_name(LayerVariant v);
LayerVariant variant_from_name(const std::string& name);

struct ModelConfig {
  int n_layers = 0;
  int d_model = 0;
  int n_heads = 0;
  int n_kv_heads = 0;
  int head_dim = 0;
  int d_ff = 0;
  int64_t vocab_size = 0;
  float rope_base = 10000.0f;
  float norm_eps = 1e-5f;
  std::vector<LayerVariant> variant_per_layer;

  void validate() const;
  float attn_scale() const;
  bool all_variants(LayerVariant v) const;
  ModelConfig with_uniform_variant(LayerVariant v) const;
  // Last k layers Ladder, the rest Standard.
  ModelConfig with_ladder_suffix(int k) const;
};

struct LayerWeights {
  Tensor attn_norm_gain;  // [d_model]
  Tensor wq;              // [d_model, n_heads*head_dim]
  Tensor wk;              // [d_model, n_kv_heads*head_dim]
  Tensor wv;              // [d_model, n_kv_heads*head_dim]
  Tensor wo;              // [n_heads*head_dim, d_model]
  Tensor mlp_norm_gain;   // [d_model]; for ParallelAttnMlp layers the
                          // attention gain is the single shared norm
  Tensor wgate;           // [d_model, d_ff]
  Tensor wup;             // [d_model, d_ff]
  Tensor wdown;           // [d_ff, d_model]
};

struct Weights {
  Tensor token_embedding;  // [vocab, d_model]
  std::vector<LayerWeights> layers;
  Tensor final_norm_gain;  // [d_model]
  Tensor lm_head;          // [d_model, vocab]
};

Weights init_random_weights(const ModelConfig& cfg, uint64_t seed);
void validate_weights(const ModelConfig& cfg, const Weights& w);

// Per-layer key/value cache. Rows are laid out [batch, max_len, width] so
// a batch element's history is contiguous; length is per layer and
// monotonically nondecreasing within a generation.
class KVCache {
 public:
  KVCache(int n_layers, int64_t batch, int64_t max_len, int n_kv_heads, int head_dim);

  // k_chunk/v_chunk: [batch*s, n_kv_heads*head_dim], appended at the
  // current length of `layer`.
  void append(int layer, const Tensor& k_chunk, const Tensor& v_chunk);
  // Contiguous [batch*len, width] copies of the filled prefix.
  Tensor keys(int layer) const;
  Tensor values(int layer) const;

  int64_t len(int layer) const { return len_[static_cast<size_t>(layer)]; }
  int64_t capacity() const { return max_len_; }
  int64_t batch() const { return batch_; }

 private:
  int64_t batch_ = 1;
  int64_t max_len_ = 0;
  int64_t width_ = 0;
  std::vector<int64_t> len_;
  std::vector<Tensor> k_, v_;
};

// Optional instrumentation for reference forwards: captures each module's
// update tensor, the residual after the update, and the update-to-residual
// norm ratio diagnostic.
struct ForwardProbe {
  std::vector<Tensor> module_update;
  std::vector<Tensor> residual_after;
  std::vector<double> update_residual_ratio;
};

// Single-threaded reference forwards (ground truth for the engine). Each
// runs one full pass over `token_ids` and returns logits [len, vocab].
// The uniform-variant forwards are independent straight loops; the hybrid
// forward is the general per-layer dispatcher.
Tensor reference_forward_standard(const ModelConfig& cfg, const Weights& w,
                                  const std::vector<int32_t>& token_ids);
Tensor reference_forward_ladder(const ModelConfig& cfg, const Weights& w,
                                const std::vector<int32_t>& token_ids,
                                ForwardProbe* probe = nullptr);
Tensor reference_forward_parallel(const ModelConfig& cfg, const Weights& w,
                                  const std::vector<int32_t>& token_ids);
Tensor reference_forward_hybrid(const ModelConfig& cfg, const Weights& w,
                                const std::vector<int32_t>& token_ids,
                                ForwardProbe* probe = nullptr);

// Incremental chunk forward through the per-layer dispatcher; drives the
// KV-cache decode path. start_pos is the absolute position of the first
// chunk token; ids length must equal the chunk length.
Tensor reference_forward_chunk(const ModelConfig& cfg, const Weights& w, KVCache& kv,
                               const std::vector<int32_t>& ids_chunk, int64_t start_pos,
                               ForwardProbe* probe = nullptr);

struct ReferenceGeneration {
  std::vector<int32_t> tokens;       // generated ids (first comes from prefill)
  std::vector<Tensor> step_logits;   // last-position logits per generated token
};

// Greedy KV-cache generation: prefill once, then token-by-token decode.
ReferenceGeneration reference_generate(const ModelConfig& cfg, const Weights& w,
                                       const std::vector<int32_t>& prompt, int n_new_tokens);

}  // namespace ladder
