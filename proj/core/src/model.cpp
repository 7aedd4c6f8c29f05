#include "ladder/model.hpp"

#include <cmath>
#include <cstring>

#include "ladder/errors.hpp"
#include "ladder/kernels.hpp"
#include "ladder/modules.hpp"
#include "ladder/rng.hpp"

namespace ladder {

std::string variant_name(LayerVariant v) {
  switch (v) {
    case LayerVariant::Standard: return "standard";
    case LayerVariant::Ladder: return "ladder";
    case LayerVariant::ParallelAttnMlp: return "parallel";
  }
  return "?";
}

LayerVariant variant_from_name(const std::string& name) {
  if (name == "standard") return LayerVariant::Standard;
  if (name == "ladder") return LayerVariant::Ladder;
  if (name == "parallel") return LayerVariant::ParallelAttnMlp;
  throw ConfigError("unknown layer variant '" + name + "'");
}

void ModelConfig::validate() const {
  if (n_layers <= 0) throw ConfigError("n_layers must be positive");
  if (d_model <= 0 || n_heads <= 0 || n_kv_heads <= 0 || head_dim <= 0 || d_ff <= 0 ||
      vocab_size <= 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (n_heads * head_dim != d_model) {
    throw ConfigError("n_heads*head_dim = " + std::to_string(n_heads * head_dim) +
                      " must equal d_model = " + std::to_string(d_model));
  }
  if (n_heads % n_kv_heads != 0) {
    throw ConfigError("n_heads = " + std::to_string(n_heads) +
                      " not divisible by n_kv_heads = " + std::to_string(n_kv_heads));
  }
  if (head_dim % 2 != 0) throw ConfigError("head_dim must be even for rope");
  if (!(norm_eps > 0.0f)) throw ConfigError("norm_eps must be positive");
  if (!(rope_base > 0.0f)) throw ConfigError("rope_base must be positive");
  if (variant_per_layer.size() != static_cast<size_t>(n_layers)) {
    throw ConfigError("variant_per_layer has " + std::to_string(variant_per_layer.size()) +
                      " entries for " + std::to_string(n_layers) + " layers");
  }
}

float ModelConfig::attn_scale() const { return 1.0f / std::sqrt(static_cast<float>(head_dim)); }

bool ModelConfig::all_variants(LayerVariant v) const {
  for (LayerVariant lv : variant_per_layer) {
    if (lv != v) return false;
  }
  return true;
}

ModelConfig ModelConfig::with_uniform_variant(LayerVariant v) const {
  ModelConfig out = *this;
  out.variant_per_layer.assign(static_cast<size_t>(n_layers), v);
  return out;
}

ModelConfig ModelConfig::with_ladder_suffix(int k) const {
  if (k < 0 || k > n_layers) {
    throw ConfigError("hybrid ladder suffix " + std::to_string(k) + " out of range [0, " +
                      std::to_string(n_layers) + "]");
  }
  ModelConfig out = with_uniform_variant(LayerVariant::Standard);
  for (int l = n_layers - k; l < n_layers; ++l) {
    out.variant_per_layer[static_cast<size_t>(l)] = LayerVariant::Ladder;
  }
  return out;
}

namespace {

Tensor random_matrix(Rng& rng, int64_t rows, int64_t cols, float stddev) {
  Tensor t = Tensor::zeros({rows, cols});
  for (int64_t i = 0; i < t.numel(); ++i) t.data()[i] = rng.next_normal(stddev);
  return t;
}

void check_shape(const Tensor& t, const std::vector<int64_t>& want, const std::string& name) {
  if (t.shape() != want) {
    throw ConfigError("weight " + name + " has shape " + t.shape_str() + ", expected " +
                      shape_str(want));
  }
  if (!t.all_finite()) throw ConfigError("weight " + name + " contains non-finite values");
}

Tensor last_row(const Tensor& t) {
  Tensor out = Tensor::zeros({1, t.cols()});
  std::memcpy(out.data(), t.row(t.rows() - 1), sizeof(float) * static_cast<size_t>(t.cols()));
  return out;
}

}  // namespace

Weights init_random_weights(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const float proj_std = 1.0f / std::sqrt(static_cast<float>(cfg.d_model));
  const int64_t qd = static_cast<int64_t>(cfg.n_heads) * cfg.head_dim;
  const int64_t kvd = static_cast<int64_t>(cfg.n_kv_heads) * cfg.head_dim;

  Weights w;
  w.token_embedding = random_matrix(rng, cfg.vocab_size, cfg.d_model, 1.0f);
  w.layers.resize(static_cast<size_t>(cfg.n_layers));
  for (auto& lw : w.layers) {
    lw.attn_norm_gain = Tensor::full({cfg.d_model}, 1.0f);
    lw.wq = random_matrix(rng, cfg.d_model, qd, proj_std);
    lw.wk = random_matrix(rng, cfg.d_model, kvd, proj_std);
    lw.wv = random_matrix(rng, cfg.d_model, kvd, proj_std);
    lw.wo = random_matrix(rng, qd, cfg.d_model, proj_std);
    lw.mlp_norm_gain = Tensor::full({cfg.d_model}, 1.0f);
    lw.wgate = random_matrix(rng, cfg.d_model, cfg.d_ff, proj_std);
    lw.wup = random_matrix(rng, cfg.d_model, cfg.d_ff, proj_std);
    lw.wdown = random_matrix(rng, cfg.d_ff, cfg.d_model, proj_std);
  }
  w.final_norm_gain = Tensor::full({cfg.d_model}, 1.0f);
  w.lm_head = random_matrix(rng, cfg.d_model, cfg.vocab_size, proj_std);
  return w;
}

void validate_weights(const ModelConfig& cfg, const Weights& w) {
  cfg.validate();
  const int64_t d = cfg.d_model;
  const int64_t qd = static_cast<int64_t>(cfg.n_heads) * cfg.head_dim;
  const int64_t kvd = static_cast<int64_t>(cfg.n_kv_heads) * cfg.head_dim;
  check_shape(w.token_embedding, {cfg.vocab_size, d}, "token_embedding");
  if (w.layers.size() != static_cast<size_t>(cfg.n_layers)) {
    throw ConfigError("weights hold " + std::to_string(w.layers.size()) + " layers, config has " +
                      std::to_string(cfg.n_layers));
  }
  for (size_t l = 0; l < w.layers.size(); ++l) {
    const LayerWeights& lw = w.layers[l];
    const std::string p = "layers." + std::to_string(l) + ".";
    check_shape(lw.attn_norm_gain, {d}, p + "attn_norm_gain");
    check_shape(lw.wq, {d, qd}, p + "wq");
    check_shape(lw.wk, {d, kvd}, p + "wk");
    check_shape(lw.wv, {d, kvd}, p + "wv");
    check_shape(lw.wo, {qd, d}, p + "wo");
    check_shape(lw.mlp_norm_gain, {d}, p + "mlp_norm_gain");
    check_shape(lw.wgate, {d, cfg.d_ff}, p + "wgate");
    check_shape(lw.wup, {d, cfg.d_ff}, p + "wup");
    check_shape(lw.wdown, {cfg.d_ff, d}, p + "wdown");
  }
  check_shape(w.final_norm_gain, {d}, "final_norm_gain");
  check_shape(w.lm_head, {d, cfg.vocab_size}, "lm_head");
}

KVCache::KVCache(int n_layers, int64_t batch, int64_t max_len, int n_kv_heads, int head_dim)
    : batch_(batch),
      max_len_(max_len),
      width_(static_cast<int64_t>(n_kv_heads) * head_dim),
      len_(static_cast<size_t>(n_layers), 0) {
  if (n_layers <= 0 || batch <= 0 || max_len <= 0 || width_ <= 0) {
    throw ConfigError("invalid KV cache geometry");
  }
  k_.reserve(static_cast<size_t>(n_layers));
  v_.reserve(static_cast<size_t>(n_layers));
  for (int l = 0; l < n_layers; ++l) {
    k_.push_back(Tensor::zeros({batch_ * max_len_, width_}));
    v_.push_back(Tensor::zeros({batch_ * max_len_, width_}));
  }
}

void KVCache::append(int layer, const Tensor& k_chunk, const Tensor& v_chunk) {
  auto li = static_cast<size_t>(layer);
  if (li >= k_.size()) throw ConfigError("kv append: layer out of range");
  if (k_chunk.cols() != width_ || !k_chunk.same_shape(v_chunk)) {
    throw ShapeError("kv append: chunk shape " + k_chunk.shape_str() + " incompatible with width " +
                     std::to_string(width_));
  }
  if (k_chunk.rows() % batch_ != 0) throw ShapeError("kv append: rows not divisible by batch");
  const int64_t s = k_chunk.rows() / batch_;
  if (len_[li] + s > max_len_) {
    throw ConfigError("kv cache capacity exceeded: len " + std::to_string(len_[li]) + " + " +
                      std::to_string(s) + " > " + std::to_string(max_len_));
  }
  for (int64_t b = 0; b < batch_; ++b) {
    float* kd = k_[li].row(b * max_len_ + len_[li]);
    float* vd = v_[li].row(b * max_len_ + len_[li]);
    std::memcpy(kd, k_chunk.row(b * s), sizeof(float) * static_cast<size_t>(s * width_));
    std::memcpy(vd, v_chunk.row(b * s), sizeof(float) * static_cast<size_t>(s * width_));
  }
  len_[li] += s;
}

Tensor KVCache::keys(int layer) const {
  auto li = static_cast<size_t>(layer);
  const int64_t len = len_[li];
  Tensor out = Tensor::zeros({batch_ * len, width_});
  for (int64_t b = 0; b < batch_; ++b) {
    std::memcpy(out.row(b * len), k_[li].row(b * max_len_),
                sizeof(float) * static_cast<size_t>(len * width_));
  }
  return out;
}

Tensor KVCache::values(int layer) const {
  auto li = static_cast<size_t>(layer);
  const int64_t len = len_[li];
  Tensor out = Tensor::zeros({batch_ * len, width_});
  for (int64_t b = 0; b < batch_; ++b) {
    std::memcpy(out.row(b * len), v_[li].row(b * max_len_),
                sizeof(float) * static_cast<size_t>(len * width_));
  }
  return out;
}

namespace {

AttnGeometry dense_geometry(const ModelConfig& cfg) {
  return AttnGeometry{cfg.n_heads, cfg.n_kv_heads, cfg.head_dim, cfg.rope_base};
}

void probe_record(ForwardProbe* probe, const Tensor& update, const Tensor& before,
                  const Tensor& after) {
  if (!probe) return;
  probe->module_update.push_back(update);
  probe->residual_after.push_back(after);
  const double denom = l2_norm(before);
  probe->update_residual_ratio.push_back(denom > 0.0 ? l2_norm(update) / denom : 0.0);
}

Tensor head_logits(const ModelConfig& cfg, const Weights& w, const Tensor& x) {
  return matmul(rmsnorm(x, w.final_norm_gain, cfg.norm_eps), w.lm_head);
}

void require_uniform(const ModelConfig& cfg, LayerVariant v, const char* fn) {
  if (!cfg.all_variants(v)) {
    throw ConfigError(std::string(fn) + " requires every layer variant to be " + variant_name(v));
  }
}

}  // namespace

Tensor reference_forward_standard(const ModelConfig& cfg, const Weights& w,
                                  const std::vector<int32_t>& token_ids) {
  cfg.validate();
  require_uniform(cfg, LayerVariant::Standard, "reference_forward_standard");
  const AttnGeometry g = dense_geometry(cfg);
  KVCache kv(cfg.n_layers, 1, static_cast<int64_t>(token_ids.size()), cfg.n_kv_heads,
             cfg.head_dim);
  Tensor x = embed_lookup(w.token_embedding, token_ids);
  for (int l = 0; l < cfg.n_layers; ++l) {
    const LayerWeights& lw = w.layers[static_cast<size_t>(l)];
    Tensor u = attention_module(rmsnorm(x, lw.attn_norm_gain, cfg.norm_eps), lw, g, kv, l, 0, 1);
    x = add(u, x);
    u = mlp_module(rmsnorm(x, lw.mlp_norm_gain, cfg.norm_eps), lw);
    x = add(u, x);
  }
  return head_logits(cfg, w, x);
}

Tensor reference_forward_ladder(const ModelConfig& cfg, const Weights& w,
                                const std::vector<int32_t>& token_ids, ForwardProbe* probe) {
  cfg.validate();
  require_uniform(cfg, LayerVariant::Ladder, "reference_forward_ladder");
  const AttnGeometry g = dense_geometry(cfg);
  KVCache kv(cfg.n_layers, 1, static_cast<int64_t>(token_ids.size()), cfg.n_kv_heads,
             cfg.head_dim);
  Tensor cur = embed_lookup(w.token_embedding, token_ids);
  if (probe) probe->module_update.reserve(static_cast<size_t>(2 * cfg.n_layers));
  // Module i reads the residual from two modules back; at entry the
  // boundary convention is stale = cur.
  Tensor stale = cur;
  for (int l = 0; l < cfg.n_layers; ++l) {
    const LayerWeights& lw = w.layers[static_cast<size_t>(l)];
    Tensor u =
        attention_module(rmsnorm(stale, lw.attn_norm_gain, cfg.norm_eps), lw, g, kv, l, 0, 1);
    Tensor next = add(u, cur);
    probe_record(probe, u, cur, next);
    stale = cur;
    cur = next;

    u = mlp_module(rmsnorm(stale, lw.mlp_norm_gain, cfg.norm_eps), lw);
    next = add(u, cur);
    probe_record(probe, u, cur, next);
    stale = cur;
    cur = next;
  }
  return head_logits(cfg, w, cur);
}

Tensor reference_forward_parallel(const ModelConfig& cfg, const Weights& w,
                                  const std::vector<int32_t>& token_ids) {
  cfg.validate();
  require_uniform(cfg, LayerVariant::ParallelAttnMlp, "reference_forward_parallel");
  const AttnGeometry g = dense_geometry(cfg);
  KVCache kv(cfg.n_layers, 1, static_cast<int64_t>(token_ids.size()), cfg.n_kv_heads,
             cfg.head_dim);
  Tensor x = embed_lookup(w.token_embedding, token_ids);
  for (int l = 0; l < cfg.n_layers; ++l) {
    const LayerWeights& lw = w.layers[static_cast<size_t>(l)];
    // One shared pre-norm feeds both branches; the branch sum is the
    // single reduced update of the layer.
    Tensor n = rmsnorm(x, lw.attn_norm_gain, cfg.norm_eps);
    Tensor u = add(attention_module(n, lw, g, kv, l, 0, 1), mlp_module(n, lw));
    x = add(u, x);
  }
  return head_logits(cfg, w, x);
}

Tensor reference_forward_chunk(const ModelConfig& cfg, const Weights& w, KVCache& kv,
                               const std::vector<int32_t>& ids_chunk, int64_t start_pos,
                               ForwardProbe* probe) {
  cfg.validate();
  const AttnGeometry g = dense_geometry(cfg);
  Tensor cur = embed_lookup(w.token_embedding, ids_chunk);
  if (probe && probe->residual_after.empty()) probe->update_residual_ratio.reserve(16);

  int l = 0;
  while (l < cfg.n_layers) {
    const LayerVariant v = cfg.variant_per_layer[static_cast<size_t>(l)];
    if (v == LayerVariant::Standard) {
      const LayerWeights& lw = w.layers[static_cast<size_t>(l)];
      Tensor u = attention_module(rmsnorm(cur, lw.attn_norm_gain, cfg.norm_eps), lw, g, kv, l,
                                  start_pos, 1);
      Tensor next = add(u, cur);
      probe_record(probe, u, cur, next);
      cur = next;
      u = mlp_module(rmsnorm(cur, lw.mlp_norm_gain, cfg.norm_eps), lw);
      next = add(u, cur);
      probe_record(probe, u, cur, next);
      cur = next;
      ++l;
    } else if (v == LayerVariant::ParallelAttnMlp) {
      const LayerWeights& lw = w.layers[static_cast<size_t>(l)];
      Tensor n = rmsnorm(cur, lw.attn_norm_gain, cfg.norm_eps);
      Tensor u = add(attention_module(n, lw, g, kv, l, start_pos, 1), mlp_module(n, lw));
      Tensor next = add(u, cur);
      probe_record(probe, u, cur, next);
      cur = next;
      ++l;
    } else {
      // Consecutive Ladder run: stale input restarts at the run entry
      // (both pending updates conceptually zero).
      int run_end = l;
      while (run_end < cfg.n_layers &&
             cfg.variant_per_layer[static_cast<size_t>(run_end)] == LayerVariant::Ladder) {
        ++run_end;
      }
      Tensor stale = cur;
      for (; l < run_end; ++l) {
        const LayerWeights& lw = w.layers[static_cast<size_t>(l)];
        Tensor u = attention_module(rmsnorm(stale, lw.attn_norm_gain, cfg.norm_eps), lw, g, kv, l,
                                    start_pos, 1);
        Tensor next = add(u, cur);
        probe_record(probe, u, cur, next);
        stale = cur;
        cur = next;

        u = mlp_module(rmsnorm(stale, lw.mlp_norm_gain, cfg.norm_eps), lw);
        next = add(u, cur);
        probe_record(probe, u, cur, next);
        stale = cur;
        cur = next;
      }
    }
  }
  return head_logits(cfg, w, cur);
}

Tensor reference_forward_hybrid(const ModelConfig& cfg, const Weights& w,
                                const std::vector<int32_t>& token_ids, ForwardProbe* probe) {
  KVCache kv(cfg.n_layers, 1, static_cast<int64_t>(token_ids.size()), cfg.n_kv_heads,
             cfg.head_dim);
  return reference_forward_chunk(cfg, w, kv, token_ids, 0, probe);
}

ReferenceGeneration reference_generate(const ModelConfig& cfg, const Weights& w,
                                       const std::vector<int32_t>& prompt, int n_new_tokens) {
  cfg.validate();
  if (prompt.empty()) throw ConfigError("empty prompt");
  ReferenceGeneration out;
  KVCache kv(cfg.n_layers, 1, static_cast<int64_t>(prompt.size()) + n_new_tokens, cfg.n_kv_heads,
             cfg.head_dim);
  Tensor logits = reference_forward_chunk(cfg, w, kv, prompt, 0);
  if (n_new_tokens == 0) return out;
  int32_t tok = argmax_last(logits);
  out.tokens.push_back(tok);
  out.step_logits.push_back(last_row(logits));
  for (int i = 1; i < n_new_tokens; ++i) {
    const int64_t pos = static_cast<int64_t>(prompt.size()) + i - 1;
    logits = reference_forward_chunk(cfg, w, kv, {tok}, pos);
    tok = argmax_last(logits);
    out.tokens.push_back(tok);
    out.step_logits.push_back(last_row(logits));
  }
  return out;
}

}  // namespace ladder
