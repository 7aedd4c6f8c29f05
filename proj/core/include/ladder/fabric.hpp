#pragma once

#include <cstdint>
#include <memory>

#include "ladder/cost_model.hpp"
#include "ladder/tensor.hpp"

namespace ladder {

namespace detail {
struct FabricState;
struct ReduceOp;
}  // namespace detail

// Ticket for one in-flight all-reduce of one rank. wait() blocks only the
// calling rank, returns the reduced tensor, and is idempotent. A no-op
// handle (world 1 or a model-entry boundary slot) completes immediately
// with its payload and carries no cost.
class Handle {
 public:
  Handle() = default;

  static Handle immediate(Tensor payload);

  bool valid() const { return noop_ || op_ != nullptr; }
  bool is_noop() const { return noop_; }

  Tensor wait();

  // Timestamps of the underlying collective; meaningful after wait().
  // Wall times are monotonic-clock ns, virtual times are simulated-clock ns.
  int64_t issue_wall_ns() const;
  int64_t completion_wall_ns() const;
  int64_t issue_virtual_ns() const;
  int64_t completion_virtual_ns() const;

 private:
  friend class Fabric;
  std::shared_ptr<detail::FabricState> fab_;
  std::shared_ptr<detail::ReduceOp> op_;
  int rank_ = 0;
  bool noop_ = false;
  bool waited_ = false;
  Tensor result_;
};

// In-process collective fabric connecting `world_size` rank contexts.
// Reductions are elementwise sums in ascending rank order (deterministic
// regardless of scheduling) and execute on a fabric-owned thread; cost
// injection delays only completion visibility, never the numeric result.
//
// Completion timing:
//   wallclock  — deadline = last contribution arrival + cost(bytes);
//                in-flight collectives do not contend with each other.
//   simulated  — collectives serialize on a single virtual comm lane
//                (one in flight at a time, as on a single collective
//                stream): completion = max(lane_free, latest issue) + cost.
// Both modes clamp completions to per-rank FIFO order.
class Fabric {
 public:
  Fabric(int world_size, CostModel cost);
  ~Fabric();

  Fabric(const Fabric&) = delete;
  Fabric& operator=(const Fabric&) = delete;

  int world_size() const;
  const CostModel& cost_model() const;

  // Returns immediately; all ranks must eventually call with identically
  // shaped tensors for the same per-rank sequence number. issue_virtual_ns
  // is the caller's virtual clock (simulated mode; ignored in wallclock).
  Handle all_reduce_async(int rank, Tensor local, int64_t issue_virtual_ns = 0);

  // Equivalent to wait(all_reduce_async(...)) with no intervening compute.
  Tensor all_reduce_sync(int rank, Tensor local, int64_t issue_virtual_ns = 0);

  // Returns only after all ranks enter.
  void barrier(int rank);
  // Barrier that also joins virtual clocks: returns max over ranks' now.
  int64_t barrier_virtual(int rank, int64_t now_virtual_ns);

  // Marks the fabric down; pending and future waits fail with FabricError.
  void shutdown();

  // Introspection for tests and trace assertions.
  int64_t collective_count() const;
  int64_t sum_collective_cost_ns() const;
  int max_outstanding(int rank) const;

 private:
  std::shared_ptr<detail::FabricState> state_;
};

}  // namespace ladder
