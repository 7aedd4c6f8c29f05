#include "ladder/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <exception>
#include <string>
#include <thread>

#include "ladder/errors.hpp"
#include "ladder/kernels.hpp"
#include "ladder/modules.hpp"

namespace ladder {

namespace {

int64_t steady_now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// One rank's execution context for a generate() call.
struct RankCtx {
  int rank = 0;
  const ModelConfig* cfg = nullptr;
  const ShardedWeights* shard = nullptr;
  const EngineOptions* opts = nullptr;
  Fabric* fabric = nullptr;
  TraceSink* sink = nullptr;
  KVCache* kv = nullptr;
  int64_t batch = 1;

  bool simulated = false;
  int64_t vclock = 0;  // virtual ns (simulated mode)

  // outputs
  Tensor prefill_logits;
  std::vector<Tensor> step_logits;
  std::vector<std::vector<int32_t>> tokens;
  int64_t prefill_wall_ns = 0, decode_wall_ns = 0;
  int64_t prefill_virtual_ns = 0, decode_virtual_ns = 0;

  void trace(const char* what, int layer, const char* suffix, Lane lane, int64_t start,
             int64_t end) {
    if (!sink) return;
    std::string name = what;
    if (layer >= 0) name += " L" + std::to_string(layer);
    if (suffix) name += suffix;
    sink->record(TraceEvent{rank, std::move(name), lane, start, end});
  }
};

// Runs fn as one compute event; in simulated mode the virtual clock
// advances by the modeled duration instead of measured time.
template <typename Fn>
Tensor timed_compute(RankCtx& c, const char* what, int layer, int64_t modeled_ns, Fn&& fn) {
  if (c.simulated) {
    Tensor out = fn();
    const int64_t start = c.vclock;
    c.vclock += modeled_ns;
    c.trace(what, layer, nullptr, Lane::Compute, start, c.vclock);
    return out;
  }
  const int64_t start = steady_now_ns();
  Tensor out = fn();
  c.trace(what, layer, nullptr, Lane::Compute, start, steady_now_ns());
  return out;
}

// Waits a pending collective, folds its update into the residual, records
// the communication event, and advances the virtual clock.
void wait_and_fold(RankCtx& c, Tensor& residual, Handle& h, int layer, const char* suffix) {
  if (!h.valid()) return;
  if (h.is_noop()) {
    // world-1 or boundary handle: completes immediately with its payload
    Tensor update = h.wait();
    if (update.numel() > 0) residual = add(residual, update);
    return;
  }
  Tensor update = h.wait();
  if (c.simulated) {
    c.trace("allreduce", layer, suffix, Lane::Communication, h.issue_virtual_ns(),
            h.completion_virtual_ns());
    c.vclock = std::max(c.vclock, h.completion_virtual_ns());
  } else {
    c.trace("allreduce", layer, suffix, Lane::Communication, h.issue_wall_ns(),
            h.completion_wall_ns());
  }
  residual = add(residual, update);
}

Handle issue(RankCtx& c, Tensor partial) {
  if (c.opts->upper_bound) {
    // communication-free upper bound: local partial stands in for the
    // reduced value; numerics invalid by design
    return Handle::immediate(std::move(partial));
  }
  return c.fabric->all_reduce_async(c.rank, std::move(partial), c.vclock);
}

// One forward pass over a chunk (prefill: the prompt; decode: one token
// per batch element). Returns logits [batch*s, vocab].
Tensor forward_pass(RankCtx& c, const std::vector<int32_t>& chunk_ids, int64_t start_pos) {
  const ModelConfig& cfg = *c.cfg;
  const ShardedWeights& sw = *c.shard;
  const int64_t s = static_cast<int64_t>(chunk_ids.size()) / c.batch;
  const int64_t ma = c.simulated ? c.opts->compute.attn_time_ns(cfg, c.opts->world, c.batch, s,
                                                                start_pos)
                                 : 0;
  const int64_t mm =
      c.simulated ? c.opts->compute.mlp_time_ns(cfg, c.opts->world, c.batch, s) : 0;

  Tensor x = timed_compute(c, "embed", -1, 0,
                           [&] { return embed_lookup(sw.token_embedding, chunk_ids); });

  int l = 0;
  while (l < cfg.n_layers) {
    const LayerVariant v = c.opts->upper_bound
                               ? LayerVariant::Standard
                               : cfg.variant_per_layer[static_cast<size_t>(l)];
    const LayerWeights& lw = sw.layers[static_cast<size_t>(l)];
    if (v == LayerVariant::Standard) {
      Tensor partial = timed_compute(c, "attn_compute", l, ma, [&] {
        return attention_module(rmsnorm(x, lw.attn_norm_gain, cfg.norm_eps), lw, sw.local_geom,
                                *c.kv, l, start_pos, c.batch);
      });
      Handle h = issue(c, std::move(partial));
      wait_and_fold(c, x, h, l, ".attn");

      partial = timed_compute(c, "mlp_compute", l, mm, [&] {
        return mlp_module(rmsnorm(x, lw.mlp_norm_gain, cfg.norm_eps), lw);
      });
      h = issue(c, std::move(partial));
      wait_and_fold(c, x, h, l, ".mlp");
      ++l;
    } else if (v == LayerVariant::ParallelAttnMlp) {
      // shared pre-norm, branch partials summed locally, one collective
      Tensor partial = timed_compute(c, "fused_compute", l, ma + mm, [&] {
        Tensor n = rmsnorm(x, lw.attn_norm_gain, cfg.norm_eps);
        return add(attention_module(n, lw, sw.local_geom, *c.kv, l, start_pos, c.batch),
                   mlp_module(n, lw));
      });
      Handle h = issue(c, std::move(partial));
      wait_and_fold(c, x, h, l, ".fused");
      ++l;
    } else {
      // ladder run: five-slot schedule, pending work waited two module
      // slots after issue, drained at the run boundary
      int run_end = l;
      while (run_end < cfg.n_layers &&
             cfg.variant_per_layer[static_cast<size_t>(run_end)] == LayerVariant::Ladder) {
        ++run_end;
      }
      RankLayerState st;
      st.residual = std::move(x);
      st.attn_work = Handle::immediate(Tensor());
      st.mlp_work = Handle::immediate(Tensor());
      int attn_issue_layer = -1, mlp_issue_layer = -1;
      for (; l < run_end; ++l) {
        const LayerWeights& llw = sw.layers[static_cast<size_t>(l)];
        wait_and_fold(c, st.residual, st.attn_work, attn_issue_layer, ".attn");
        Tensor partial = timed_compute(c, "attn_compute", l, ma, [&] {
          return attention_module(rmsnorm(st.residual, llw.attn_norm_gain, cfg.norm_eps), llw,
                                  sw.local_geom, *c.kv, l, start_pos, c.batch);
        });
        st.attn_work = issue(c, std::move(partial));
        attn_issue_layer = l;

        wait_and_fold(c, st.residual, st.mlp_work, mlp_issue_layer, ".mlp");
        partial = timed_compute(c, "mlp_compute", l, mm, [&] {
          return mlp_module(rmsnorm(st.residual, llw.mlp_norm_gain, cfg.norm_eps), llw);
        });
        st.mlp_work = issue(c, std::move(partial));
        mlp_issue_layer = l;
      }
      wait_and_fold(c, st.residual, st.attn_work, attn_issue_layer, ".attn");
      wait_and_fold(c, st.residual, st.mlp_work, mlp_issue_layer, ".mlp");
      x = std::move(st.residual);
    }
  }
  return timed_compute(c, "lm_head", -1, 0, [&] {
    return matmul(rmsnorm(x, sw.final_norm_gain, cfg.norm_eps), sw.lm_head);
  });
}

void rank_main(RankCtx& c, const std::vector<std::vector<int32_t>>& prompts, int n_new) {
  const int64_t prompt_len = static_cast<int64_t>(prompts[0].size());
  std::vector<int32_t> flat;
  flat.reserve(static_cast<size_t>(c.batch * prompt_len));
  for (const auto& p : prompts) flat.insert(flat.end(), p.begin(), p.end());

  c.fabric->barrier(c.rank);
  const int64_t wall0 = steady_now_ns();

  Tensor logits = forward_pass(c, flat, 0);
  c.prefill_wall_ns = steady_now_ns() - wall0;
  c.prefill_virtual_ns = c.vclock;
  if (c.rank == 0) c.prefill_logits = logits;

  c.tokens.assign(static_cast<size_t>(c.batch), {});
  if (n_new == 0) return;

  auto sample = [&](const Tensor& lg, int64_t s) {
    // greedy per batch element from its last position
    std::vector<int32_t> out(static_cast<size_t>(c.batch));
    Tensor rows = Tensor::zeros({c.batch, lg.cols()});
    for (int64_t b = 0; b < c.batch; ++b) {
      const float* r = lg.row(b * s + (s - 1));
      std::memcpy(rows.row(b), r, sizeof(float) * static_cast<size_t>(lg.cols()));
    }
    std::vector<int32_t> ids = argmax_rows(rows);
    for (int64_t b = 0; b < c.batch; ++b) out[static_cast<size_t>(b)] = ids[static_cast<size_t>(b)];
    if (c.rank == 0 && c.opts->record_step_logits) c.step_logits.push_back(std::move(rows));
    return out;
  };

  std::vector<int32_t> cur = sample(logits, prompt_len);
  for (int64_t b = 0; b < c.batch; ++b) c.tokens[static_cast<size_t>(b)].push_back(cur[static_cast<size_t>(b)]);

  // phase boundary: align ranks so decode latency is attributed cleanly
  c.vclock = c.fabric->barrier_virtual(c.rank, c.vclock);
  const int64_t decode_wall0 = steady_now_ns();
  const int64_t decode_virtual0 = c.vclock;

  for (int step = 1; step < n_new; ++step) {
    const int64_t pos = prompt_len + step - 1;
    logits = forward_pass(c, cur, pos);
    cur = sample(logits, 1);
    for (int64_t b = 0; b < c.batch; ++b) {
      c.tokens[static_cast<size_t>(b)].push_back(cur[static_cast<size_t>(b)]);
    }
  }
  c.decode_wall_ns = steady_now_ns() - decode_wall0;
  c.decode_virtual_ns = c.vclock - decode_virtual0;
}

}  // namespace

Engine::Engine(ModelConfig cfg, const Weights& weights, EngineOptions opts)
    : cfg_(std::move(cfg)), opts_(opts) {
  cfg_.validate();
  opts_.cost.validate();
  opts_.compute.validate();
  validate_weights(cfg_, weights);
  shards_ = shard_weights(cfg_, weights, opts_.world);
}

GenerateResult Engine::generate(const std::vector<std::vector<int32_t>>& prompts,
                                int n_new_tokens) {
  if (prompts.empty() || prompts[0].empty()) throw ConfigError("empty prompt");
  const int64_t prompt_len = static_cast<int64_t>(prompts[0].size());
  for (const auto& p : prompts) {
    if (static_cast<int64_t>(p.size()) != prompt_len) {
      throw ConfigError("all batch prompts must share one length");
    }
  }
  if (n_new_tokens < 0) throw ConfigError("n_new_tokens must be >= 0");
  const int64_t need = prompt_len + n_new_tokens;
  if (opts_.max_seq_len > 0 && need > opts_.max_seq_len) {
    throw ConfigError("kv cache capacity " + std::to_string(opts_.max_seq_len) +
                      " < prompt + new tokens = " + std::to_string(need));
  }
  const int64_t cache_len = opts_.max_seq_len > 0 ? opts_.max_seq_len : need;
  const int64_t batch = static_cast<int64_t>(prompts.size());
  const int world = opts_.world;

  Fabric fabric(world, opts_.cost);
  TraceSink sink;
  const bool simulated = opts_.cost.mode == TimingMode::Simulated;

  std::vector<RankCtx> ctxs(static_cast<size_t>(world));
  std::vector<KVCache> caches;
  caches.reserve(static_cast<size_t>(world));
  for (int r = 0; r < world; ++r) {
    caches.emplace_back(cfg_.n_layers, batch, cache_len, shards_[static_cast<size_t>(r)].local_geom.n_kv_heads,
                        cfg_.head_dim);
  }
  std::vector<std::exception_ptr> errors(static_cast<size_t>(world));
  std::vector<std::thread> threads;
  threads.reserve(static_cast<size_t>(world));
  for (int r = 0; r < world; ++r) {
    RankCtx& c = ctxs[static_cast<size_t>(r)];
    c.rank = r;
    c.cfg = &cfg_;
    c.shard = &shards_[static_cast<size_t>(r)];
    c.opts = &opts_;
    c.fabric = &fabric;
    c.sink = opts_.record_trace ? &sink : nullptr;
    c.kv = &caches[static_cast<size_t>(r)];
    c.batch = batch;
    c.simulated = simulated;
    threads.emplace_back([&, r] {
      try {
        rank_main(ctxs[static_cast<size_t>(r)], prompts, n_new_tokens);
      } catch (...) {
        errors[static_cast<size_t>(r)] = std::current_exception();
        fabric.shutdown();  // unblock peers
      }
    });
  }
  for (auto& t : threads) t.join();
  // prefer the root cause over secondary FabricErrors from poisoned peers
  std::exception_ptr first;
  for (const auto& e : errors) {
    if (!e) continue;
    if (!first) first = e;
    try {
      std::rethrow_exception(e);
    } catch (const FabricError&) {
    } catch (...) {
      first = e;
      break;
    }
  }
  if (first) std::rethrow_exception(first);

  GenerateResult out;
  out.tokens = std::move(ctxs[0].tokens);
  out.prefill_logits = std::move(ctxs[0].prefill_logits);
  out.step_logits = std::move(ctxs[0].step_logits);
  out.logits_valid = !opts_.upper_bound;
  out.trace = sink.snapshot();
  out.collective_count = fabric.collective_count();
  out.sum_collective_cost_ns = fabric.sum_collective_cost_ns();
  for (int r = 0; r < world; ++r) {
    out.max_outstanding = std::max(out.max_outstanding, fabric.max_outstanding(r));
  }

  int64_t prefill_ns = 0, decode_ns = 0, total_virtual = 0;
  for (const RankCtx& c : ctxs) {
    if (simulated) {
      prefill_ns = std::max(prefill_ns, c.prefill_virtual_ns);
      decode_ns = std::max(decode_ns, c.decode_virtual_ns);
      total_virtual = std::max(total_virtual, c.vclock);
    } else {
      prefill_ns = std::max(prefill_ns, c.prefill_wall_ns);
      decode_ns = std::max(decode_ns, c.decode_wall_ns);
    }
  }
  out.total_virtual_ns = total_virtual;
  out.metrics.prefill_s = prefill_ns * 1e-9;
  out.metrics.decode_s = decode_ns * 1e-9;
  const double total_s = out.metrics.prefill_s + out.metrics.decode_s;
  if (n_new_tokens > 0 && total_s > 0.0) {
    out.metrics.tokens_per_second = static_cast<double>(batch) * n_new_tokens / total_s;
  }
  return out;
}

}  // namespace ladder
