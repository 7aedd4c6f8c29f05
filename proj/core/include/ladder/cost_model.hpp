#pragma once

#include <cstdint>
#include <string>

namespace ladder {

// Wallclock: real blocking delays against a monotonic clock (measures
// genuine overlap). Simulated: virtual int64 nanosecond clock advanced
// deterministically (exact numbers).
enum class TimingMode { Wallclock, Simulated };

std::string timing_mode_name(TimingMode m);
TimingMode timing_mode_from_name(const std::string& name);

// Alpha-beta collective cost with a P2P-disabled slowdown multiplier:
// cost(bytes) = (base_latency_us * 1000 + per_byte_ns * bytes)
//               * (p2p_enabled ? 1 : p2p_disabled_multiplier).
struct CostModel {
  double base_latency_us = 0.0;
  double per_byte_ns = 0.0;
  bool p2p_enabled = true;
  double p2p_disabled_multiplier = 4.0;
  TimingMode mode = TimingMode::Simulated;

  int64_t cost_ns(int64_t bytes) const;
  void validate() const;
};

}  // namespace ladder
