#include "ladder/weights_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <vector>

#include <json.hpp>

#include "ladder/errors.hpp"

namespace ladder {

namespace {

using nlohmann::json;

// Visit tensors in canonical file order.
void for_each_tensor(const Weights& w,
                     const std::function<void(const std::string&, const Tensor&)>& fn) {
  fn("token_embedding", w.token_embedding);
  for (size_t l = 0; l < w.layers.size(); ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    const LayerWeights& lw = w.layers[l];
    fn(p + "attn_norm_gain", lw.attn_norm_gain);
    fn(p + "wq", lw.wq);
    fn(p + "wk", lw.wk);
    fn(p + "wv", lw.wv);
    fn(p + "wo", lw.wo);
    fn(p + "mlp_norm_gain", lw.mlp_norm_gain);
    fn(p + "wgate", lw.wgate);
    fn(p + "wup", lw.wup);
    fn(p + "wdown", lw.wdown);
  }
  fn("final_norm_gain", w.final_norm_gain);
  fn("lm_head", w.lm_head);
}

void for_each_tensor_mut(Weights& w,
                         const std::function<void(const std::string&, Tensor&)>& fn) {
  fn("token_embedding", w.token_embedding);
  for (size_t l = 0; l < w.layers.size(); ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    LayerWeights& lw = w.layers[l];
    fn(p + "attn_norm_gain", lw.attn_norm_gain);
    fn(p + "wq", lw.wq);
    fn(p + "wk", lw.wk);
    fn(p + "wv", lw.wv);
    fn(p + "wo", lw.wo);
    fn(p + "mlp_norm_gain", lw.mlp_norm_gain);
    fn(p + "wgate", lw.wgate);
    fn(p + "wup", lw.wup);
    fn(p + "wdown", lw.wdown);
  }
  fn("final_norm_gain", w.final_norm_gain);
  fn("lm_head", w.lm_head);
}

}  // namespace

void save_weights(const std::string& path, const ModelConfig& cfg, const Weights& w) {
  validate_weights(cfg, w);
  json manifest = json::object();
  uint64_t offset = 0;
  for_each_tensor(w, [&](const std::string& name, const Tensor& t) {
    const uint64_t bytes = static_cast<uint64_t>(t.numel()) * sizeof(float);
    manifest[name] = {{"shape", t.shape()}, {"offset", offset}, {"length", bytes}};
    offset += bytes;
  });
  const std::string mtext = manifest.dump();

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  uint64_t mlen = mtext.size();
  char len_le[8];
  for (int i = 0; i < 8; ++i) len_le[i] = static_cast<char>((mlen >> (8 * i)) & 0xff);
  f.write(len_le, 8);
  f.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
  for_each_tensor(w, [&](const std::string&, const Tensor& t) {
    f.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(float)));
  });
  if (!f) throw IoError("short write to '" + path + "'");
}

Weights load_weights(const std::string& path, const ModelConfig& cfg) {
  cfg.validate();
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::vector<char> raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (raw.size() < 8) throw IoError("'" + path + "': truncated at byte 0 (missing header)");
  uint64_t mlen = 0;
  for (int i = 0; i < 8; ++i) mlen |= static_cast<uint64_t>(static_cast<unsigned char>(raw[i])) << (8 * i);
  if (8 + mlen > raw.size()) {
    throw IoError("'" + path + "': manifest of " + std::to_string(mlen) +
                  " bytes exceeds file size at byte 8");
  }
  json manifest;
  try {
    manifest = json::parse(raw.begin() + 8, raw.begin() + 8 + static_cast<std::ptrdiff_t>(mlen));
  } catch (const json::parse_error& e) {
    // e.byte is relative to the manifest text
    throw IoError("'" + path + "': manifest parse error at byte " + std::to_string(8 + e.byte) +
                  ": " + e.what());
  }
  const uint64_t blob_base = 8 + mlen;

  Weights w;
  w.layers.resize(static_cast<size_t>(cfg.n_layers));
  for_each_tensor_mut(w, [&](const std::string& name, Tensor& t) {
    auto it = manifest.find(name);
    if (it == manifest.end()) throw IoError("'" + path + "': manifest missing tensor '" + name + "'");
    std::vector<int64_t> shape = it->at("shape").get<std::vector<int64_t>>();
    const uint64_t off = it->at("offset").get<uint64_t>();
    const uint64_t len = it->at("length").get<uint64_t>();
    const int64_t n = shape_numel(shape);
    if (len != static_cast<uint64_t>(n) * sizeof(float)) {
      throw IoError("'" + path + "': tensor '" + name + "' length " + std::to_string(len) +
                    " does not match shape " + shape_str(shape));
    }
    if (blob_base + off + len > raw.size()) {
      throw IoError("'" + path + "': tensor '" + name + "' extends past end of file at byte " +
                    std::to_string(blob_base + off));
    }
    std::vector<float> data(static_cast<size_t>(n));
    std::memcpy(data.data(), raw.data() + blob_base + off, static_cast<size_t>(len));
    t = Tensor(std::move(shape), std::move(data));
  });
  validate_weights(cfg, w);
  return w;
}

std::string config_to_json(const ModelConfig& cfg) {
  json j;
  j["n_layers"] = cfg.n_layers;
  j["d_model"] = cfg.d_model;
  j["n_heads"] = cfg.n_heads;
  j["n_kv_heads"] = cfg.n_kv_heads;
  j["head_dim"] = cfg.head_dim;
  j["d_ff"] = cfg.d_ff;
  j["vocab_size"] = cfg.vocab_size;
  j["rope_base"] = cfg.rope_base;
  j["norm_eps"] = cfg.norm_eps;
  json variants = json::array();
  for (LayerVariant v : cfg.variant_per_layer) variants.push_back(variant_name(v));
  j["variant_per_layer"] = variants;
  return j.dump(2);
}

ModelConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError("config parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  ModelConfig cfg;
  try {
    cfg.n_layers = j.at("n_layers").get<int>();
    cfg.d_model = j.at("d_model").get<int>();
    cfg.n_heads = j.at("n_heads").get<int>();
    cfg.n_kv_heads = j.at("n_kv_heads").get<int>();
    cfg.head_dim = j.at("head_dim").get<int>();
    cfg.d_ff = j.at("d_ff").get<int>();
    cfg.vocab_size = j.at("vocab_size").get<int64_t>();
    cfg.rope_base = j.value("rope_base", 10000.0f);
    cfg.norm_eps = j.value("norm_eps", 1e-5f);
    if (j.contains("variant_per_layer")) {
      for (const auto& v : j.at("variant_per_layer")) {
        cfg.variant_per_layer.push_back(variant_from_name(v.get<std::string>()));
      }
    } else {
      cfg.variant_per_layer.assign(static_cast<size_t>(cfg.n_layers), LayerVariant::Standard);
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("config field error: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

void save_config(const std::string& path, const ModelConfig& cfg) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << config_to_json(cfg) << "\n";
}

ModelConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return config_from_json(text);
}

}  // namespace ladder
