#include "ladder/costsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

#include "ladder/errors.hpp"

namespace ladder {

ComputeModel ComputeModel::fixed_module_ns(int64_t attn_ns, int64_t mlp_ns) {
  ComputeModel cm;
  cm.use_fixed = true;
  cm.fixed_attn_ns = attn_ns;
  cm.fixed_mlp_ns = mlp_ns;
  return cm;
}

void ComputeModel::validate() const {
  if (use_fixed) {
    if (fixed_attn_ns < 0 || fixed_mlp_ns < 0) throw ConfigError("fixed module times must be >= 0");
    return;
  }
  if (!(throughput_flops_per_rank > 0.0)) throw ConfigError("throughput_per_rank must be positive");
  if (kernel_overhead_s < 0.0) throw ConfigError("kernel_overhead must be >= 0");
}

double ComputeModel::attn_flops(const ModelConfig& cfg, int world, int64_t batch, int64_t chunk,
                                int64_t cached_before) {
  const double d = cfg.d_model;
  const double qd = static_cast<double>(cfg.n_heads) * cfg.head_dim;
  const double kvd = static_cast<double>(cfg.n_kv_heads) * cfg.head_dim;
  const double rows = static_cast<double>(batch) * static_cast<double>(chunk);
  // projections (2 flops per MAC), sharded across ranks
  double f = 2.0 * rows * d * (qd + 2.0 * kvd) / world;  // q,k,v
  f += 2.0 * rows * qd / world * d;                      // output projection
  // scores + weighted sum: query i sees cached_before + i + 1 positions.
  // chunk=prompt gives the quadratic prefill term; chunk=1 is linear in
  // the cache length.
  const double pairs = static_cast<double>(batch) *
                       (static_cast<double>(chunk) * static_cast<double>(cached_before) +
                        static_cast<double>(chunk) * (static_cast<double>(chunk) + 1.0) / 2.0);
  f += pairs * (static_cast<double>(cfg.n_heads) / world) * cfg.head_dim * 4.0;
  return f;
}

double ComputeModel::mlp_flops(const ModelConfig& cfg, int world, int64_t batch, int64_t chunk) {
  const double rows = static_cast<double>(batch) * static_cast<double>(chunk);
  // gate, up, down projections
  return 3.0 * 2.0 * rows * cfg.d_model * (static_cast<double>(cfg.d_ff) / world);
}

int64_t ComputeModel::attn_time_ns(const ModelConfig& cfg, int world, int64_t batch, int64_t chunk,
                                   int64_t cached_before) const {
  if (use_fixed) return fixed_attn_ns;
  const double s = attn_flops(cfg, world, batch, chunk, cached_before) / throughput_flops_per_rank +
                   kernel_overhead_s;
  return std::llround(s * 1e9);
}

int64_t ComputeModel::mlp_time_ns(const ModelConfig& cfg, int world, int64_t batch,
                                  int64_t chunk) const {
  if (use_fixed) return fixed_mlp_ns;
  const double s =
      mlp_flops(cfg, world, batch, chunk) / throughput_flops_per_rank + kernel_overhead_s;
  return std::llround(s * 1e9);
}

namespace {

struct SimCtx {
  int64_t now = 0;
  int64_t lane_free = 0;
  int64_t count = 0;
  int64_t sum_cost = 0;
};

// Completion time of a collective issued at t; identity (returns t) when
// the pass runs without collectives.
int64_t issue_collective(SimCtx& ctx, int64_t t, int64_t c, bool enabled) {
  if (!enabled) return t;
  const int64_t comp = std::max(ctx.lane_free, t) + c;
  ctx.lane_free = comp;
  ctx.count++;
  ctx.sum_cost += c;
  return comp;
}

// One forward pass (prefill chunk or one decode token). Embedding, final
// norm, head and sampling carry zero virtual cost; module compute and
// collectives are the modeled quantities.
void simulate_pass(const ModelConfig& cfg, bool upper_bound, int world, int64_t batch,
                   int64_t chunk, int64_t cached_before, const ComputeModel& cm,
                   const CostModel& cost, SimCtx& ctx) {
  const bool collectives = world > 1 && !upper_bound;
  const int64_t bytes = batch * chunk * cfg.d_model * static_cast<int64_t>(sizeof(float));
  const int64_t c = collectives ? cost.cost_ns(bytes) : 0;
  const int64_t ma = cm.attn_time_ns(cfg, world, batch, chunk, cached_before);
  const int64_t mm = cm.mlp_time_ns(cfg, world, batch, chunk);

  int l = 0;
  while (l < cfg.n_layers) {
    const LayerVariant v =
        upper_bound ? LayerVariant::Standard : cfg.variant_per_layer[static_cast<size_t>(l)];
    if (v == LayerVariant::Standard) {
      ctx.now += ma;
      ctx.now = std::max(ctx.now, issue_collective(ctx, ctx.now, c, collectives));
      ctx.now += mm;
      ctx.now = std::max(ctx.now, issue_collective(ctx, ctx.now, c, collectives));
      ++l;
    } else if (v == LayerVariant::ParallelAttnMlp) {
      ctx.now += ma + mm;
      ctx.now = std::max(ctx.now, issue_collective(ctx, ctx.now, c, collectives));
      ++l;
    } else {
      // Consecutive ladder run: module k's collective is waited two
      // module slots later; pending handles drain at the run boundary.
      int run_end = l;
      while (run_end < cfg.n_layers &&
             cfg.variant_per_layer[static_cast<size_t>(run_end)] == LayerVariant::Ladder) {
        ++run_end;
      }
      int64_t pend_attn = -1;
      int64_t pend_mlp = -1;
      for (; l < run_end; ++l) {
        if (pend_attn >= 0) ctx.now = std::max(ctx.now, pend_attn);
        ctx.now += ma;
        pend_attn = issue_collective(ctx, ctx.now, c, collectives);
        if (pend_mlp >= 0) ctx.now = std::max(ctx.now, pend_mlp);
        ctx.now += mm;
        pend_mlp = issue_collective(ctx, ctx.now, c, collectives);
      }
      ctx.now = std::max(ctx.now, pend_attn);
      ctx.now = std::max(ctx.now, pend_mlp);
    }
  }
}

}  // namespace

SimStats simulate(const ModelConfig& cfg, bool upper_bound, int world, int64_t batch,
                  int64_t prompt_len, int gen_len, const ComputeModel& cm, const CostModel& cost) {
  cfg.validate();
  cm.validate();
  cost.validate();
  if (world < 1) throw ConfigError("world must be >= 1");
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (prompt_len < 1) throw ConfigError("prompt_len must be >= 1");
  if (gen_len < 0) throw ConfigError("gen_len must be >= 0");

  SimCtx ctx;
  simulate_pass(cfg, upper_bound, world, batch, prompt_len, 0, cm, cost, ctx);
  SimStats out;
  out.prefill_ns = ctx.now;
  for (int i = 1; i < gen_len; ++i) {
    simulate_pass(cfg, upper_bound, world, batch, 1, prompt_len + i - 1, cm, cost, ctx);
  }
  out.decode_ns = ctx.now - out.prefill_ns;
  out.total_ns = ctx.now;
  out.collective_count = ctx.count;
  out.sum_collective_cost_ns = ctx.sum_cost;
  if (gen_len > 0 && out.total_ns > 0) {
    out.tokens_per_second = static_cast<double>(batch) * gen_len / (out.total_ns * 1e-9);
  }
  return out;
}

double steady_state_module_ns(ArchSpec::Kind arch, double m_attn_ns, double m_mlp_ns,
                              double c_ns) {
  const double a = m_attn_ns, b = m_mlp_ns, c = c_ns;
  switch (arch) {
    case ArchSpec::Kind::Standard:
      return (a + b) / 2.0 + c;
    case ArchSpec::Kind::Parallel:
      return (a + b + c) / 2.0;
    case ArchSpec::Kind::UpperBound:
      return (a + b) / 2.0;
    case ArchSpec::Kind::Ladder:
    case ArchSpec::Kind::Hybrid: {
      // Recurrence per module k (a/b alternating, serial comm lane):
      //   end_k  = max(end_{k-1}, done_{k-2}) + m_k
      //   done_k = max(done_{k-1}, end_k) + c
      // The steady per-layer period P is bounded by the compute chain
      // (P >= a+b), the comm lane (P >= 2c), and the issue->wait chains
      // of each module slot (P >= c+a and P >= c+b); the largest bound is
      // attained. Uniform case a=b=m reduces to max(m, c) per module.
      const double period = std::max({a + b, 2.0 * c, c + a, c + b});
      return period / 2.0;
    }
  }
  throw ConfigError("bad arch kind");
}

std::vector<SweepRow> sweep(const ModelConfig& base, const std::vector<ArchSpec>& variants,
                            const std::vector<int>& worlds, const std::vector<int64_t>& batches,
                            int64_t prompt_len, int gen_len, const ComputeModel& cm,
                            const CostModel& cost) {
  std::vector<SweepRow> rows;
  for (int world : worlds) {
    for (int64_t batch : batches) {
      const ModelConfig std_cfg = ArchSpec{}.configure(base);
      const SimStats std_stats =
          simulate(std_cfg, false, world, batch, prompt_len, gen_len, cm, cost);
      for (const ArchSpec& arch : variants) {
        const ModelConfig cfg = arch.configure(base);
        const SimStats s =
            simulate(cfg, arch.upper_bound(), world, batch, prompt_len, gen_len, cm, cost);
        SweepRow row;
        row.variant = arch.label();
        row.world = world;
        row.batch = batch;
        row.prompt_len = prompt_len;
        row.gen_len = gen_len;
        row.prefill_ms = s.prefill_ns * 1e-6;
        row.decode_ms = s.decode_ns * 1e-6;
        row.tok_per_s = s.tokens_per_second;
        row.speedup_vs_standard =
            (arch.kind == ArchSpec::Kind::Standard)
                ? 1.0
                : (std_stats.total_ns > 0
                       ? static_cast<double>(std_stats.total_ns) / static_cast<double>(s.total_ns)
                       : 1.0);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::vector<SweepRow> pareto_front(const std::vector<SweepRow>& rows) {
  auto latency = [](const SweepRow& r) { return r.prefill_ms + r.decode_ms; };
  auto thr_per_rank = [](const SweepRow& r) { return r.tok_per_s / r.world; };
  std::vector<SweepRow> out;
  for (size_t i = 0; i < rows.size(); ++i) {
    bool dominated = false;
    for (size_t j = 0; j < rows.size() && !dominated; ++j) {
      if (i == j) continue;
      const bool no_worse = latency(rows[j]) <= latency(rows[i]) &&
                            thr_per_rank(rows[j]) >= thr_per_rank(rows[i]);
      const bool strictly_better = latency(rows[j]) < latency(rows[i]) ||
                                   thr_per_rank(rows[j]) > thr_per_rank(rows[i]);
      dominated = no_worse && strictly_better;
    }
    if (!dominated) out.push_back(rows[i]);
  }
  return out;
}

namespace {
std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}
}  // namespace

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "variant,world,batch,prompt_len,gen_len,prefill_ms,decode_ms,tok_per_s,"
        "speedup_vs_standard\n";
  for (const SweepRow& r : rows) {
    os << r.variant << "," << r.world << "," << r.batch << "," << r.prompt_len << "," << r.gen_len
       << "," << fmt(r.prefill_ms) << "," << fmt(r.decode_ms) << "," << fmt(r.tok_per_s) << ","
       << fmt(r.speedup_vs_standard) << "\n";
  }
}

void write_sweep_markdown(std::ostream& os, const std::vector<SweepRow>& rows) {
  std::map<std::pair<int, int64_t>, std::vector<const SweepRow*>> groups;
  for (const SweepRow& r : rows) groups[{r.world, r.batch}].push_back(&r);
  for (const auto& [key, group] : groups) {
    os << "### world=" << key.first << " batch=" << key.second << "\n\n";
    os << "| variant | prefill_ms | decode_ms | tok/s | speedup_vs_standard |\n";
    os << "|---|---:|---:|---:|---:|\n";
    for (const SweepRow* r : group) {
      os << "| " << r->variant << " | " << fmt(r->prefill_ms) << " | " << fmt(r->decode_ms)
         << " | " << fmt(r->tok_per_s) << " | " << fmt(r->speedup_vs_standard) << " |\n";
    }
    os << "\n";
  }
}

}  // namespace ladder
