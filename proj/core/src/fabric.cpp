#include "ladder/fabric.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "ladder/errors.hpp"
#include "ladder/kernels.hpp"

namespace ladder {

namespace {
int64_t steady_now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}
}  // namespace

namespace detail {

struct ReduceOp {
  int64_t seq = 0;
  std::vector<int64_t> shape;
  std::vector<Tensor> contrib;
  std::vector<int64_t> issue_wall;
  std::vector<int64_t> issue_virtual;
  std::vector<char> rank_arrived;
  std::vector<char> rank_waited;
  int arrived = 0;
  int waited = 0;
  bool ready = false;
  Tensor reduced;
  int64_t cost_ns = 0;
  int64_t completion_wall = 0;
  int64_t completion_virtual = 0;
};

struct FabricState {
  std::mutex mu;
  std::condition_variable cv;

  int world = 1;
  CostModel cost;

  bool poisoned = false;
  std::string poison_msg;

  std::unordered_map<int64_t, std::shared_ptr<ReduceOp>> ops;
  std::vector<int64_t> next_seq;

  // simulated-mode serial comm lane
  int64_t lane_free_virtual = 0;
  // per-rank FIFO clamps (all ranks share every collective, so one clamp)
  int64_t last_completion_wall = 0;
  int64_t last_completion_virtual = 0;

  std::vector<int> outstanding;
  std::vector<int> max_outstanding;
  int64_t collective_count = 0;
  int64_t sum_cost_ns = 0;

  // barrier
  int64_t barrier_epoch = 0;
  int barrier_arrived = 0;
  int64_t barrier_max_virtual = 0;
  int64_t barrier_release_virtual = 0;

  // reduction worker
  std::deque<std::shared_ptr<ReduceOp>> work;
  bool stop_worker = false;
  std::thread worker;

  void poison_locked(const std::string& msg) {
    if (!poisoned) {
      poisoned = true;
      poison_msg = msg;
    }
    cv.notify_all();
  }
};

}  // namespace detail

using detail::FabricState;
using detail::ReduceOp;

static void reduce_worker(std::shared_ptr<FabricState> st) {
  std::unique_lock<std::mutex> lk(st->mu);
  for (;;) {
    st->cv.wait(lk, [&] { return st->stop_worker || !st->work.empty(); });
    if (st->work.empty()) {
      if (st->stop_worker) return;
      continue;
    }
    std::shared_ptr<ReduceOp> op = st->work.front();
    st->work.pop_front();
    lk.unlock();
    // Sum in ascending rank order; contributions are frozen once the op is
    // fully arrived, so this runs without the lock.
    Tensor acc = op->contrib[0];
    for (size_t r = 1; r < op->contrib.size(); ++r) acc = add(acc, op->contrib[r]);
    op->contrib.clear();
    lk.lock();
    op->reduced = std::move(acc);
    op->ready = true;
    st->cv.notify_all();
  }
}

Handle Handle::immediate(Tensor payload) {
  Handle h;
  h.noop_ = true;
  h.waited_ = true;
  h.result_ = std::move(payload);
  return h;
}

Tensor Handle::wait() {
  if (noop_) return result_;
  if (!op_) throw FabricError("wait on invalid handle");
  if (waited_) return result_;
  std::shared_ptr<FabricState> st = fab_;
  int64_t deadline = 0;
  {
    std::unique_lock<std::mutex> lk(st->mu);
    st->cv.wait(lk, [&] { return op_->ready || st->poisoned; });
    if (st->poisoned && !op_->ready) throw FabricError(st->poison_msg);
    if (!op_->rank_waited[static_cast<size_t>(rank_)]) {
      op_->rank_waited[static_cast<size_t>(rank_)] = 1;
      op_->waited++;
      st->outstanding[static_cast<size_t>(rank_)]--;
      if (op_->waited == st->world) st->ops.erase(op_->seq);
    }
    result_ = op_->reduced;
    deadline = op_->completion_wall;
  }
  waited_ = true;
  if (st->cost.mode == TimingMode::Wallclock) {
    // Block the caller until the injected completion time.
    std::this_thread::sleep_until(std::chrono::steady_clock::time_point(
        std::chrono::nanoseconds(deadline)));
  }
  return result_;
}

int64_t Handle::issue_wall_ns() const {
  return noop_ ? 0 : op_->issue_wall[static_cast<size_t>(rank_)];
}
int64_t Handle::completion_wall_ns() const { return noop_ ? 0 : op_->completion_wall; }
int64_t Handle::issue_virtual_ns() const {
  return noop_ ? 0 : op_->issue_virtual[static_cast<size_t>(rank_)];
}
int64_t Handle::completion_virtual_ns() const { return noop_ ? 0 : op_->completion_virtual; }

Fabric::Fabric(int world_size, CostModel cost) : state_(std::make_shared<FabricState>()) {
  if (world_size <= 0) throw ConfigError("world_size must be positive");
  cost.validate();
  state_->world = world_size;
  state_->cost = cost;
  state_->next_seq.assign(static_cast<size_t>(world_size), 0);
  state_->outstanding.assign(static_cast<size_t>(world_size), 0);
  state_->max_outstanding.assign(static_cast<size_t>(world_size), 0);
  if (world_size > 1) {
    state_->worker = std::thread(reduce_worker, state_);
  }
}

Fabric::~Fabric() {
  {
    std::lock_guard<std::mutex> lk(state_->mu);
    if (!state_->ops.empty()) {
      state_->poison_locked("fabric shut down with collectives pending");
    }
    state_->stop_worker = true;
    state_->cv.notify_all();
  }
  if (state_->worker.joinable()) state_->worker.join();
}

int Fabric::world_size() const { return state_->world; }
const CostModel& Fabric::cost_model() const { return state_->cost; }

Handle Fabric::all_reduce_async(int rank, Tensor local, int64_t issue_virtual_ns) {
  FabricState& st = *state_;
  if (rank < 0 || rank >= st.world) throw ConfigError("rank out of range");
  if (st.world == 1) return Handle::immediate(std::move(local));

  std::lock_guard<std::mutex> lk(st.mu);
  if (st.poisoned) throw FabricError(st.poison_msg);

  const int64_t seq = st.next_seq[static_cast<size_t>(rank)]++;
  std::shared_ptr<ReduceOp>& slot = st.ops[seq];
  if (!slot) {
    slot = std::make_shared<ReduceOp>();
    slot->seq = seq;
    slot->shape = local.shape();
    slot->contrib.resize(static_cast<size_t>(st.world));
    slot->issue_wall.assign(static_cast<size_t>(st.world), 0);
    slot->issue_virtual.assign(static_cast<size_t>(st.world), 0);
    slot->rank_arrived.assign(static_cast<size_t>(st.world), 0);
    slot->rank_waited.assign(static_cast<size_t>(st.world), 0);
  }
  std::shared_ptr<ReduceOp> op = slot;
  if (op->shape != local.shape()) {
    st.poison_locked("all-reduce shape mismatch at collective " + std::to_string(seq) + ": " +
                     shape_str(op->shape) + " vs " + local.shape_str() + " from rank " +
                     std::to_string(rank));
    throw FabricError(st.poison_msg);
  }
  if (op->rank_arrived[static_cast<size_t>(rank)]) {
    throw FabricError("rank " + std::to_string(rank) + " double-issued collective " +
                      std::to_string(seq));
  }
  const int64_t bytes = local.numel() * static_cast<int64_t>(sizeof(float));
  op->rank_arrived[static_cast<size_t>(rank)] = 1;
  op->contrib[static_cast<size_t>(rank)] = std::move(local);
  op->issue_wall[static_cast<size_t>(rank)] = steady_now_ns();
  op->issue_virtual[static_cast<size_t>(rank)] = issue_virtual_ns;
  op->arrived++;

  st.outstanding[static_cast<size_t>(rank)]++;
  st.max_outstanding[static_cast<size_t>(rank)] =
      std::max(st.max_outstanding[static_cast<size_t>(rank)],
               st.outstanding[static_cast<size_t>(rank)]);

  if (op->arrived == st.world) {
    op->cost_ns = st.cost.cost_ns(bytes);
    st.collective_count++;
    st.sum_cost_ns += op->cost_ns;

    const int64_t max_issue_wall = *std::max_element(op->issue_wall.begin(), op->issue_wall.end());
    const int64_t max_issue_virtual =
        *std::max_element(op->issue_virtual.begin(), op->issue_virtual.end());

    int64_t wall = max_issue_wall + (st.cost.mode == TimingMode::Wallclock ? op->cost_ns : 0);
    op->completion_wall = std::max(wall, st.last_completion_wall);
    st.last_completion_wall = op->completion_wall;

    int64_t virt = std::max(st.lane_free_virtual, max_issue_virtual) + op->cost_ns;
    op->completion_virtual = std::max(virt, st.last_completion_virtual);
    st.lane_free_virtual = op->completion_virtual;
    st.last_completion_virtual = op->completion_virtual;

    st.work.push_back(op);
    st.cv.notify_all();
  }

  Handle h;
  h.fab_ = state_;
  h.op_ = op;
  h.rank_ = rank;
  return h;
}

Tensor Fabric::all_reduce_sync(int rank, Tensor local, int64_t issue_virtual_ns) {
  return all_reduce_async(rank, std::move(local), issue_virtual_ns).wait();
}

void Fabric::barrier(int rank) { (void)barrier_virtual(rank, 0); }

int64_t Fabric::barrier_virtual(int rank, int64_t now_virtual_ns) {
  FabricState& st = *state_;
  if (rank < 0 || rank >= st.world) throw ConfigError("rank out of range");
  if (st.world == 1) return now_virtual_ns;
  std::unique_lock<std::mutex> lk(st.mu);
  if (st.poisoned) throw FabricError(st.poison_msg);
  const int64_t my_epoch = st.barrier_epoch;
  st.barrier_max_virtual = std::max(st.barrier_max_virtual, now_virtual_ns);
  if (++st.barrier_arrived == st.world) {
    st.barrier_release_virtual = st.barrier_max_virtual;
    st.barrier_max_virtual = 0;
    st.barrier_arrived = 0;
    st.barrier_epoch++;
    st.cv.notify_all();
  } else {
    st.cv.wait(lk, [&] { return st.barrier_epoch != my_epoch || st.poisoned; });
    if (st.poisoned) throw FabricError(st.poison_msg);
  }
  return st.barrier_release_virtual;
}

void Fabric::shutdown() {
  std::lock_guard<std::mutex> lk(state_->mu);
  state_->poison_locked(state_->ops.empty() ? "fabric shut down"
                                            : "fabric shut down with collectives pending");
}

int64_t Fabric::collective_count() const {
  std::lock_guard<std::mutex> lk(state_->mu);
  return state_->collective_count;
}

int64_t Fabric::sum_collective_cost_ns() const {
  std::lock_guard<std::mutex> lk(state_->mu);
  return state_->sum_cost_ns;
}

int Fabric::max_outstanding(int rank) const {
  std::lock_guard<std::mutex> lk(state_->mu);
  return state_->max_outstanding.at(static_cast<size_t>(rank));
}

}  // namespace ladder
