#pragma once

#include <string>
#include <vector>

#include "ladder/model.hpp"

namespace ladder {

// Named model shapes. tiny/small are engine-scale; 1b/3b/8b are
// simulator-scale stand-ins with layer/width taken from public
// Llama-family shapes (presets, not measurements). All default to
// Standard layers; select an architecture via ArchSpec::configure.
ModelConfig preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace ladder
