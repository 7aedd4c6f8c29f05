#include "ladder/bytetok.hpp"

#include <cstdio>

#include "ladder/errors.hpp"

namespace ladder {

std::vector<int32_t> byte_tokenize(const std::string& text) {
  std::vector<int32_t> out;
  out.reserve(text.size());
  for (unsigned char c : text) out.push_back(static_cast<int32_t>(c));
  return out;
}

std::string byte_detokenize(const std::vector<int32_t>& ids) {
  std::string out;
  for (int32_t id : ids) {
    if (id < 0 || id > 255) throw ConfigError("byte token id out of range: " + std::to_string(id));
    const unsigned char c = static_cast<unsigned char>(id);
    if (c >= 0x20 && c < 0x7f) {
      out.push_back(static_cast<char>(c));
    } else {
      char buf[8];
      std::snprintf(buf, sizeof(buf), "\\x%02x", c);
      out += buf;
    }
  }
  return out;
}

}  // namespace ladder
