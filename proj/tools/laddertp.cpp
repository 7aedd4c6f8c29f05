// laddertp: tensor-parallel transformer runtime driver.
//
// Subcommands: generate (greedy decode + phase metrics), bench (wallclock
// medians over repeats), simulate (cost-model sweeps, markdown tables,
// Pareto front), verify (full invariant suite), trace (event trace export).

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ladder/arch.hpp"
#include "ladder/bytetok.hpp"
#include "ladder/costsim.hpp"
#include "ladder/engine.hpp"
#include "ladder/errors.hpp"
#include "ladder/kernels.hpp"
#include "ladder/model.hpp"
#include "ladder/presets.hpp"
#include "ladder/rng.hpp"
#include "ladder/trace.hpp"
#include "ladder/verify.hpp"
#include "ladder/weights_io.hpp"

namespace {

using ladder::ArchSpec;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitVerificationFailure = 1;
constexpr int kExitUsage = 2;

struct RunConfig {
  std::string arch = "ladder";
  std::string preset_name = "tiny";
  std::string model_config_path;
  std::string weights_path;
  int world = 1;
  int64_t batch = 1;
  int64_t prompt_len = 1024;
  int gen_len = 512;
  std::string mode = "simulated";
  double base_latency_us = 0.0;
  double per_byte_ns = 0.0;
  bool p2p_disabled = false;
  double p2p_multiplier = 4.0;
  uint64_t seed = 0;
  double throughput_per_rank = 2e14;
  double kernel_overhead_us = 5.0;
  double fixed_module_us = 0.0;  // > 0: uniform fixed module time
};

// Binds options to JSON config keys; file values apply only where the
// flag was not given on the command line.
struct JsonBinder {
  struct Entry {
    std::string key;
    CLI::Option* opt;
    std::function<void(const json&)> set;
  };
  std::vector<Entry> entries;

  template <typename T>
  void bind(CLI::Option* opt, const std::string& key, T& target) {
    entries.push_back({key, opt, [&target](const json& v) { target = v.get<T>(); }});
  }
  void apply(const std::string& path) {
    if (path.empty()) return;
    std::ifstream f(path);
    if (!f) throw ladder::IoError("cannot open config '" + path + "'");
    json j;
    try {
      j = json::parse(f);
    } catch (const json::parse_error& e) {
      throw ladder::IoError("config '" + path + "' parse error at byte " + std::to_string(e.byte));
    }
    for (auto& e : entries) {
      if (e.opt->count() == 0 && j.contains(e.key)) e.set(j.at(e.key));
    }
  }
};

struct CommonFlags {
  RunConfig cfg;
  std::string config_path;
  JsonBinder binder;
};

void add_run_options(CLI::App* cmd, CommonFlags& cf) {
  RunConfig& c = cf.cfg;
  JsonBinder& b = cf.binder;
  b.bind(cmd->add_option("--arch", c.arch,
                         "standard|ladder|parallel|upper-bound|hybrid:<k> (last k layers ladder)"),
         "arch", c.arch);
  b.bind(cmd->add_option("--preset", c.preset_name, "model preset: tiny|small|1b|3b|8b"), "preset",
         c.preset_name);
  b.bind(cmd->add_option("--model-config", c.model_config_path,
                         "model config JSON path (overrides --preset)"),
         "model_config", c.model_config_path);
  b.bind(cmd->add_option("--weights", c.weights_path, "weight file (default: seeded random init)"),
         "weights", c.weights_path);
  b.bind(cmd->add_option("--world", c.world, "tensor-parallel world size"), "world", c.world);
  b.bind(cmd->add_option("--batch", c.batch, "batch size (prompt replicated)"), "batch", c.batch);
  b.bind(cmd->add_option("--prompt-len", c.prompt_len, "prompt length"), "prompt_len",
         c.prompt_len);
  b.bind(cmd->add_option("--gen-len", c.gen_len, "generated tokens"), "gen_len", c.gen_len);
  b.bind(cmd->add_option("--mode", c.mode, "timing mode: wallclock|simulated"), "mode", c.mode);
  b.bind(cmd->add_option("--base-latency-us", c.base_latency_us, "collective base latency (us)"),
         "base_latency_us", c.base_latency_us);
  b.bind(cmd->add_option("--per-byte-ns", c.per_byte_ns, "collective per-byte cost (ns)"),
         "per_byte_ns", c.per_byte_ns);
  b.bind(cmd->add_flag("--p2p-disabled", c.p2p_disabled,
                       "apply the P2P-disabled slowdown multiplier"),
         "p2p_disabled", c.p2p_disabled);
  b.bind(cmd->add_option("--p2p-multiplier", c.p2p_multiplier,
                         "slowdown multiplier when P2P is disabled"),
         "p2p_multiplier", c.p2p_multiplier);
  b.bind(cmd->add_option("--seed", c.seed, "weights/prompt seed"), "seed", c.seed);
  b.bind(cmd->add_option("--throughput-per-rank", c.throughput_per_rank,
                         "compute model: flops/s per rank (simulated)"),
         "throughput_per_rank", c.throughput_per_rank);
  b.bind(cmd->add_option("--kernel-overhead-us", c.kernel_overhead_us,
                         "compute model: per-module overhead (us)"),
         "kernel_overhead_us", c.kernel_overhead_us);
  b.bind(cmd->add_option("--fixed-module-us", c.fixed_module_us,
                         "compute model: fixed per-module time (us), overrides flops model"),
         "fixed_module_us", c.fixed_module_us);
  cmd->add_option("--config", cf.config_path, "JSON file with defaults for the flags above");
}

ladder::CostModel cost_from(const RunConfig& c) {
  ladder::CostModel cost;
  cost.base_latency_us = c.base_latency_us;
  cost.per_byte_ns = c.per_byte_ns;
  cost.p2p_enabled = !c.p2p_disabled;
  cost.p2p_disabled_multiplier = c.p2p_multiplier;
  cost.mode = ladder::timing_mode_from_name(c.mode);
  return cost;
}

ladder::ComputeModel compute_from(const RunConfig& c) {
  if (c.fixed_module_us > 0.0) {
    const int64_t ns = static_cast<int64_t>(c.fixed_module_us * 1000.0);
    return ladder::ComputeModel::fixed_module_ns(ns, ns);
  }
  ladder::ComputeModel cm;
  cm.throughput_flops_per_rank = c.throughput_per_rank;
  cm.kernel_overhead_s = c.kernel_overhead_us * 1e-6;
  return cm;
}

ladder::ModelConfig base_config(const RunConfig& c) {
  if (!c.model_config_path.empty()) return ladder::load_config(c.model_config_path);
  return ladder::preset(c.preset_name);
}

struct PreparedRun {
  ladder::ModelConfig cfg;
  ladder::Weights weights;
  ArchSpec arch;
};

PreparedRun prepare(const RunConfig& c) {
  PreparedRun out;
  out.arch = ladder::arch_from_string(c.arch);
  out.cfg = out.arch.configure(base_config(c));
  out.weights = c.weights_path.empty()
                    ? ladder::init_random_weights(out.cfg, c.seed)
                    : ladder::load_weights(c.weights_path, out.cfg);
  return out;
}

std::vector<std::vector<int32_t>> make_prompts(const RunConfig& c,
                                               const ladder::ModelConfig& cfg,
                                               const std::vector<int32_t>& explicit_ids) {
  std::vector<int32_t> one;
  if (!explicit_ids.empty()) {
    one = explicit_ids;
  } else {
    ladder::Rng rng(c.seed + 0x9e37ull);
    one.resize(static_cast<size_t>(c.prompt_len));
    for (auto& t : one) {
      t = static_cast<int32_t>(rng.next_below(static_cast<uint64_t>(cfg.vocab_size)));
    }
  }
  return std::vector<std::vector<int32_t>>(static_cast<size_t>(c.batch), one);
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoi(tok));
  }
  if (out.empty()) throw ladder::ConfigError("empty list '" + s + "'");
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw ladder::IoError("cannot open '" + path + "' for writing");
  f << content;
}

void dump_trace(const std::string& ndjson_path, const std::string& chrome_path,
                const std::vector<ladder::TraceEvent>& trace) {
  if (!ndjson_path.empty()) {
    std::ostringstream os;
    ladder::write_trace_ndjson(os, trace);
    write_file(ndjson_path, os.str());
  }
  if (!chrome_path.empty()) {
    std::ostringstream os;
    ladder::write_trace_chrome(os, trace);
    write_file(chrome_path, os.str());
  }
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// ---------------------------------------------------------------- generate

int cmd_generate(const RunConfig& rc, const std::string& prompt_text,
                 const std::string& prompt_ids_csv, bool verify_logits, bool diagnostics,
                 const std::string& trace_out, const std::string& chrome_out,
                 const std::string& save_prefix) {
  PreparedRun run = prepare(rc);

  std::vector<int32_t> explicit_ids;
  if (!prompt_text.empty()) {
    if (run.cfg.vocab_size < 256) {
      throw ladder::ConfigError("--prompt-text needs vocab >= 256 (byte tokenizer)");
    }
    explicit_ids = ladder::byte_tokenize(prompt_text);
  } else if (!prompt_ids_csv.empty()) {
    for (int v : parse_int_list(prompt_ids_csv)) explicit_ids.push_back(v);
  }
  const auto prompts = make_prompts(rc, run.cfg, explicit_ids);

  if (!save_prefix.empty()) {
    ladder::save_weights(save_prefix + ".ltw", run.cfg, run.weights);
    ladder::save_config(save_prefix + ".json", run.cfg);
    std::cout << "saved " << save_prefix << ".ltw / " << save_prefix << ".json\n";
  }

  ladder::EngineOptions opts;
  opts.world = rc.world;
  opts.cost = cost_from(rc);
  opts.compute = compute_from(rc);
  opts.upper_bound = run.arch.upper_bound();
  opts.record_trace = !trace_out.empty() || !chrome_out.empty();
  ladder::Engine engine(run.cfg, run.weights, opts);
  ladder::GenerateResult res = engine.generate(prompts, rc.gen_len);

  std::cout << "arch=" << run.arch.label() << " world=" << rc.world << " batch=" << rc.batch
            << " prompt=" << prompts[0].size() << " gen=" << rc.gen_len << " mode=" << rc.mode
            << "\n";
  if (!res.logits_valid) {
    std::cout << "note: upper-bound run; logits/tokens are timing-only and numerically invalid\n";
  }
  for (size_t b = 0; b < res.tokens.size(); ++b) {
    std::cout << "tokens[" << b << "]:";
    for (int32_t t : res.tokens[b]) std::cout << " " << t;
    std::cout << "\n";
    if (!prompt_text.empty() && res.logits_valid) {
      std::cout << "text[" << b << "]: " << ladder::byte_detokenize(res.tokens[b]) << "\n";
    }
  }
  std::cout << "prefill_s=" << fmt(res.metrics.prefill_s)
            << " decode_s=" << fmt(res.metrics.decode_s)
            << " tok_per_s=" << fmt(res.metrics.tokens_per_second) << "\n";
  dump_trace(trace_out, chrome_out, res.trace);

  if (diagnostics) {
    ladder::ForwardProbe probe;
    ladder::reference_forward_hybrid(run.cfg, run.weights, prompts[0], &probe);
    std::cout << "module update/residual ratios:";
    for (double r : probe.update_residual_ratio) std::cout << " " << fmt(r);
    std::cout << "\n";
  }

  if (verify_logits) {
    ladder::KVCache kv(run.cfg.n_layers, 1, static_cast<int64_t>(prompts[0].size()),
                       run.cfg.n_kv_heads, run.cfg.head_dim);
    const ladder::Tensor ref =
        ladder::reference_forward_chunk(run.cfg, run.weights, kv, prompts[0], 0);
    // engine prefill logits cover batch*prompt rows; compare batch 0
    ladder::Tensor got = ladder::Tensor::zeros(ref.shape());
    for (int64_t i = 0; i < ref.rows(); ++i) {
      for (int64_t j = 0; j < ref.cols(); ++j) got.at(i, j) = res.prefill_logits.at(i, j);
    }
    const float diff = ladder::max_abs_diff(got, ref);
    const float tol = rc.world == 1 ? 0.0f : 1e-4f;
    if (diff > tol) {
      std::cout << "verify-logits: FAIL (max abs diff " << diff << " > " << tol << ")\n";
      return kExitVerificationFailure;
    }
    std::cout << "verify-logits: OK (max abs diff " << diff << ")\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- bench

int cmd_bench(const RunConfig& rc, const std::string& archs_csv, int repeats, int warmup,
              const std::string& csv_out) {
  if (repeats < 1) throw ladder::ConfigError("--repeats must be >= 1");
  const auto archs = ladder::parse_arch_list(archs_csv.empty() ? rc.arch : archs_csv);
  const ladder::ModelConfig base = base_config(rc);

  std::ostringstream csv;
  csv << "arch,world,batch,prompt_len,gen_len,mode,repeats,prefill_ms,decode_ms,tok_per_s\n";
  for (const ArchSpec& arch : archs) {
    const ladder::ModelConfig cfg = arch.configure(base);
    const ladder::Weights w = ladder::init_random_weights(cfg, rc.seed);
    const auto prompts = make_prompts(rc, cfg, {});
    ladder::EngineOptions opts;
    opts.world = rc.world;
    opts.cost = cost_from(rc);
    opts.compute = compute_from(rc);
    opts.upper_bound = arch.upper_bound();
    ladder::Engine engine(cfg, w, opts);

    for (int i = 0; i < warmup; ++i) engine.generate(prompts, rc.gen_len);
    std::vector<double> prefill, decode, tps;
    for (int i = 0; i < repeats; ++i) {
      const auto res = engine.generate(prompts, rc.gen_len);
      prefill.push_back(res.metrics.prefill_s * 1e3);
      decode.push_back(res.metrics.decode_s * 1e3);
      tps.push_back(res.metrics.tokens_per_second);
    }
    csv << arch.label() << "," << rc.world << "," << rc.batch << "," << rc.prompt_len << ","
        << rc.gen_len << "," << rc.mode << "," << repeats << "," << fmt(median(prefill)) << ","
        << fmt(median(decode)) << "," << fmt(median(tps)) << "\n";
  }
  if (csv_out.empty()) {
    std::cout << csv.str();
  } else {
    write_file(csv_out, csv.str());
    std::cout << "wrote " << csv_out << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const RunConfig& rc, const std::string& variants_csv, const std::string& worlds_csv,
                 const std::string& batches_csv, const std::string& csv_out,
                 const std::string& markdown_out, const std::string& pareto_out) {
  const auto variants = ladder::parse_arch_list(variants_csv);
  const auto worlds = parse_int_list(worlds_csv);
  std::vector<int64_t> batches;
  for (int b : parse_int_list(batches_csv)) batches.push_back(b);

  const ladder::ModelConfig base = base_config(rc);
  const auto rows = ladder::sweep(base, variants, worlds, batches, rc.prompt_len, rc.gen_len,
                                  compute_from(rc), cost_from(rc));

  std::ostringstream csv;
  ladder::write_sweep_csv(csv, rows);
  if (csv_out.empty()) {
    std::cout << csv.str();
  } else {
    write_file(csv_out, csv.str());
    std::cout << "wrote " << csv_out << "\n";
  }
  if (!markdown_out.empty()) {
    std::ostringstream md;
    ladder::write_sweep_markdown(md, rows);
    write_file(markdown_out, md.str());
    std::cout << "wrote " << markdown_out << "\n";
  }
  if (!pareto_out.empty()) {
    // per-variant front over the (world, batch) grid
    std::vector<ladder::SweepRow> front;
    for (const ArchSpec& arch : variants) {
      std::vector<ladder::SweepRow> group;
      for (const auto& r : rows) {
        if (r.variant == arch.label()) group.push_back(r);
      }
      for (auto& r : ladder::pareto_front(group)) front.push_back(std::move(r));
    }
    std::ostringstream os;
    ladder::write_sweep_csv(os, front);
    write_file(pareto_out, os.str());
    std::cout << "wrote " << pareto_out << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- trace

int cmd_trace(const RunConfig& rc, const std::string& out_path, const std::string& chrome_out) {
  PreparedRun run = prepare(rc);
  const auto prompts = make_prompts(rc, run.cfg, {});
  ladder::EngineOptions opts;
  opts.world = rc.world;
  opts.cost = cost_from(rc);
  opts.compute = compute_from(rc);
  opts.upper_bound = run.arch.upper_bound();
  opts.record_trace = true;
  ladder::Engine engine(run.cfg, run.weights, opts);
  const auto res = engine.generate(prompts, rc.gen_len);
  dump_trace(out_path, chrome_out, res.trace);
  std::cout << "wrote " << out_path << " (" << res.trace.size() << " events)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"laddertp: tensor-parallel transformer runtime, cost simulator and benchmarks"};
  app.require_subcommand(1);

  // generate
  auto gf = std::make_shared<CommonFlags>();
  std::string prompt_text, prompt_ids;
  bool verify_logits = false, diagnostics = false;
  std::string gtrace, gchrome, save_prefix;
  CLI::App* gen = app.add_subcommand("generate", "greedy generation with phase metrics");
  add_run_options(gen, *gf);
  gen->add_option("--prompt-text", prompt_text, "prompt as text (byte tokenizer, demo)");
  gen->add_option("--prompt-ids", prompt_ids, "prompt as comma-separated token ids");
  CLI::Option* vl = gen->add_flag("--verify-logits", verify_logits,
                                  "check engine logits against the reference forward");
  gen->add_flag("--diagnostics", diagnostics, "print per-module update/residual norm ratios");
  gen->add_option("--trace-out", gtrace, "write NDJSON trace");
  gen->add_option("--chrome-out", gchrome, "write Chrome trace JSON");
  gen->add_option("--save-weights", save_prefix, "save weights+config under this prefix");

  // bench
  auto bf = std::make_shared<CommonFlags>();
  bf->cfg.mode = "wallclock";
  std::string bench_archs = "standard,ladder";
  int repeats = 5, warmup = 2;
  std::string bench_csv;
  CLI::App* bench = app.add_subcommand("bench", "median latency over repeats with warmup");
  add_run_options(bench, *bf);
  bench->add_option("--archs", bench_archs, "comma-separated arch list");
  bench->add_option("--repeats", repeats, "measured repeats (median reported)");
  bench->add_option("--warmup", warmup, "warmup runs");
  bench->add_option("--csv-out", bench_csv, "CSV output path (default stdout)");

  // simulate
  auto sf = std::make_shared<CommonFlags>();
  sf->cfg.preset_name = "8b";
  std::string variants = "standard,ladder,parallel,upper-bound";
  std::string worlds = "1,2,4,8", batches = "1,4,16,64";
  std::string sim_csv, sim_md, sim_pareto;
  CLI::App* sim = app.add_subcommand("simulate", "cost-model sweep: CSV, markdown, Pareto front");
  add_run_options(sim, *sf);
  sim->add_option("--variants", variants, "comma-separated arch list");
  sim->add_option("--worlds", worlds, "comma-separated world sizes");
  sim->add_option("--batches", batches, "comma-separated batch sizes");
  sim->add_option("--csv-out", sim_csv, "sweep CSV path (default stdout)");
  sim->add_option("--markdown-out", sim_md, "markdown tables path");
  sim->add_option("--pareto-out", sim_pareto, "Pareto front CSV path");

  // verify
  CLI::App* verify = app.add_subcommand("verify", "run the full equivalence/invariant suite");

  // trace
  auto tf = std::make_shared<CommonFlags>();
  std::string trace_out = "trace.ndjson", trace_chrome;
  CLI::App* trace = app.add_subcommand("trace", "run once and export the event trace");
  add_run_options(trace, *tf);
  trace->add_option("--out", trace_out, "NDJSON trace path");
  trace->add_option("--chrome-out", trace_chrome, "Chrome trace JSON path");

  try {
    app.parse(argc, argv);

    for (CommonFlags* cf : {gf.get(), bf.get(), sf.get(), tf.get()}) {
      cf->binder.apply(cf->config_path);
    }
    if (*vl && gf->cfg.arch == "upper-bound") {
      std::cerr << "usage error: --verify-logits is meaningless for the numerically-invalid "
                   "upper-bound arch\n";
      return kExitUsage;
    }

    if (gen->parsed()) {
      return cmd_generate(gf->cfg, prompt_text, prompt_ids, verify_logits, diagnostics, gtrace,
                          gchrome, save_prefix);
    }
    if (bench->parsed()) return cmd_bench(bf->cfg, bench_archs, repeats, warmup, bench_csv);
    if (sim->parsed()) {
      return cmd_simulate(sf->cfg, variants, worlds, batches, sim_csv, sim_md, sim_pareto);
    }
    if (verify->parsed()) {
      const auto results = ladder::run_acceptance_checks(&std::cout);
      return ladder::all_passed(results) ? kExitOk : kExitVerificationFailure;
    }
    if (trace->parsed()) return cmd_trace(tf->cfg, trace_out, trace_chrome);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const ladder::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ladder::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitVerificationFailure;
  }
}
