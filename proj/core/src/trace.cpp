#include "ladder/trace.hpp"

#include <algorithm>
#include <ostream>

#include <json.hpp>

namespace ladder {

std::string lane_name(Lane lane) {
  return lane == Lane::Compute ? "compute" : "communication";
}

void TraceSink::record(TraceEvent ev) {
  std::lock_guard<std::mutex> lk(mu_);
  events_.push_back(std::move(ev));
}

std::vector<TraceEvent> TraceSink::snapshot() const {
  std::lock_guard<std::mutex> lk(mu_);
  return events_;
}

size_t TraceSink::size() const {
  std::lock_guard<std::mutex> lk(mu_);
  return events_.size();
}

void write_trace_ndjson(std::ostream& os, const std::vector<TraceEvent>& events) {
  for (const TraceEvent& ev : events) {
    nlohmann::json j;
    j["rank"] = ev.rank;
    j["name"] = ev.name;
    j["lane"] = lane_name(ev.lane);
    j["start_ns"] = ev.start_ns;
    j["end_ns"] = ev.end_ns;
    os << j.dump() << "\n";
  }
}

void write_trace_chrome(std::ostream& os, const std::vector<TraceEvent>& events) {
  nlohmann::json arr = nlohmann::json::array();
  for (const TraceEvent& ev : events) {
    nlohmann::json j;
    j["name"] = ev.name;
    j["ph"] = "X";
    j["pid"] = ev.rank;
    j["tid"] = lane_name(ev.lane);
    j["ts"] = static_cast<double>(ev.start_ns) / 1000.0;
    j["dur"] = static_cast<double>(ev.end_ns - ev.start_ns) / 1000.0;
    arr.push_back(std::move(j));
  }
  os << arr.dump(1) << "\n";
}

bool events_overlap(const TraceEvent& a, const TraceEvent& b) {
  const int64_t start = std::max(a.start_ns, b.start_ns);
  const int64_t end = std::min(a.end_ns, b.end_ns);
  return end > start;
}

}  // namespace ladder
