#include "ladder/cost_model.hpp"

#include <cmath>

#include "ladder/errors.hpp"

namespace ladder {

std::string timing_mode_name(TimingMode m) {
  return m == TimingMode::Wallclock ? "wallclock" : "simulated";
}

TimingMode timing_mode_from_name(const std::string& name) {
  if (name == "wallclock") return TimingMode::Wallclock;
  if (name == "simulated") return TimingMode::Simulated;
  throw ConfigError("unknown timing mode '" + name + "'");
}

int64_t CostModel::cost_ns(int64_t bytes) const {
  validate();
  const double mult = p2p_enabled ? 1.0 : p2p_disabled_multiplier;
  const double ns = (base_latency_us * 1000.0 + per_byte_ns * static_cast<double>(bytes)) * mult;
  return static_cast<int64_t>(std::llround(ns));
}

void CostModel::validate() const {
  if (base_latency_us < 0.0 || per_byte_ns < 0.0) {
    throw ConfigError("cost model terms must be non-negative");
  }
  if (p2p_disabled_multiplier < 1.0) {
    throw ConfigError("p2p_disabled_multiplier must be >= 1");
  }
}

}  // namespace ladder
