#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ladder {

// Demo-only byte-level tokenizer: token id = byte value (vocab >= 256).
std::vector<int32_t> byte_tokenize(const std::string& text);
// Printable bytes verbatim, everything else as \xNN.
std::string byte_detokenize(const std::vector<int32_t>& ids);

}  // namespace ladder
