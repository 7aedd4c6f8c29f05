#pragma once

#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <string>
#include <vector>

namespace ladder {

enum class Lane { Compute, Communication };

std::string lane_name(Lane lane);

// One timed event on one rank. Timestamps are monotonic-clock ns in
// wallclock mode and virtual ns in simulated mode. Compute events on a
// rank never overlap each other; communication events may overlap compute
// on the same rank.
struct TraceEvent {
  int rank = 0;
  std::string name;
  Lane lane = Lane::Compute;
  int64_t start_ns = 0;
  int64_t end_ns = 0;
};

// Append-only event sink, safe for concurrent rank writers.
class TraceSink {
 public:
  void record(TraceEvent ev);
  std::vector<TraceEvent> snapshot() const;
  size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<TraceEvent> events_;
};

// Newline-delimited JSON records {rank, name, lane, start_ns, end_ns}.
void write_trace_ndjson(std::ostream& os, const std::vector<TraceEvent>& events);

// Chrome trace-event JSON ("X" complete events, ts/dur in microseconds,
// pid = rank, tid = lane) for chrome://tracing and Perfetto.
void write_trace_chrome(std::ostream& os, const std::vector<TraceEvent>& events);

// True if the two half-open intervals intersect with positive length.
bool events_overlap(const TraceEvent& a, const TraceEvent& b);

}  // namespace ladder
