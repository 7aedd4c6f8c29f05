#include "ladder/presets.hpp"

#include "ladder/errors.hpp"

namespace ladder {

namespace {

ModelConfig make(int layers, int d_model, int heads, int kv_heads, int d_ff, int64_t vocab) {
  ModelConfig cfg;
  cfg.n_layers = layers;
  cfg.d_model = d_model;
  cfg.n_heads = heads;
  cfg.n_kv_heads = kv_heads;
  cfg.head_dim = d_model / heads;
  cfg.d_ff = d_ff;
  cfg.vocab_size = vocab;
  cfg.variant_per_layer.assign(static_cast<size_t>(layers), LayerVariant::Standard);
  cfg.validate();
  return cfg;
}

}  // namespace

ModelConfig preset(const std::string& name) {
  if (name == "tiny") return make(2, 64, 8, 4, 256, 256);
  if (name == "small") return make(8, 256, 8, 8, 1024, 1024);
  if (name == "1b") return make(16, 2048, 32, 8, 8192, 128256);
  if (name == "3b") return make(28, 3072, 24, 8, 8192, 128256);
  if (name == "8b") return make(32, 4096, 32, 8, 14336, 128256);
  throw ConfigError("unknown preset '" + name + "' (want tiny|small|1b|3b|8b)");
}

std::vector<std::string> preset_names() { return {"tiny", "small", "1b", "3b", "8b"}; }

}  // namespace ladder
