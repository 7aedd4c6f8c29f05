#pragma once

#include <string>
#include <vector>

#include "ladder/model.hpp"

namespace ladder {

// Execution architectures:
//   standard    — blocking all-reduce after every module (2 per layer)
//   ladder      — handle-overlapped stale-input schedule (2 async per layer)
//   parallel    — fused attention+MLP with one all-reduce per layer
//   upper-bound — standard compute schedule with every collective removed;
//                 timing-only, numerically invalid by design
//   hybrid:k    — last k layers ladder, the rest standard
struct ArchSpec {
  enum class Kind { Standard, Ladder, Parallel, UpperBound, Hybrid };

  Kind kind = Kind::Standard;
  int hybrid_k = 0;

  std::string label() const;
  bool upper_bound() const { return kind == Kind::UpperBound; }
  // Returns the base config with this architecture's per-layer tags.
  ModelConfig configure(const ModelConfig& base) const;
};

ArchSpec arch_from_string(const std::string& s);
std::vector<ArchSpec> parse_arch_list(const std::string& comma_separated);

}  // namespace ladder
