#pragma once

#include <string>

#include "ladder/model.hpp"

namespace ladder {

// Weight file container: an 8-byte little-endian manifest length, the
// UTF-8 JSON manifest (tensor name -> {shape, offset, length}), then the
// concatenated little-endian float32 blobs. Offsets are relative to the
// start of the blob section.
void save_weights(const std::string& path, const ModelConfig& cfg, const Weights& w);
Weights load_weights(const std::string& path, const ModelConfig& cfg);

// Model config as a standalone JSON document.
void save_config(const std::string& path, const ModelConfig& cfg);
ModelConfig load_config(const std::string& path);

std::string config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const std::string& text);

}  // namespace ladder
