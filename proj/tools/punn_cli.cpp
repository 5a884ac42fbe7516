// punn: evolutionary product-unit network classifier with distributed
// experiment execution. Subcommands: train, grid, bench, worker, dispatch,
// stats.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "punn/builtin_data.hpp"
#include "punn/cluster.hpp"
#include "punn/dataset.hpp"
#include "punn/errors.hpp"
#include "punn/evolution.hpp"
#include "punn/grid.hpp"
#include "punn/protocol.hpp"
#include "punn/results.hpp"
#include "punn/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIngest = 2;
constexpr int kExitProtocol = 3;
constexpr int kExitPrecondition = 4;

constexpr std::size_t kInlineSplitLimit = 8u << 20;

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", std::localtime(&now));
  return buf;
}

fs::path ensure_out_dir(std::string out, const std::string& command) {
  if (out.empty()) out = "runs/" + command + "-" + timestamp() + "-" + std::to_string(::getpid());
  fs::create_directories(out);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw punn::IngestError("cannot write " + path.string());
  f << text;
}

// ---- dataset / configuration plumbing --------------------------------------

struct DataOptions {
  std::string data_path;
  std::string schema_path;
  std::string split_path;  // pre-serialized split; bypasses csv+schema
  double train_ratio = 0.75;
  std::uint64_t split_seed = 1;
};

void add_data_options(CLI::App* cmd, DataOptions& opt) {
  cmd->add_option("--data", opt.data_path, "dataset CSV (comma or semicolon delimited)");
  cmd->add_option("--schema", opt.schema_path, "dataset schema JSON");
  cmd->add_option("--split", opt.split_path, "pre-serialized split JSON (instead of --data/--schema)");
  cmd->add_option("--train-ratio", opt.train_ratio, "train share of the hold-out split")
      ->capture_default_str();
  cmd->add_option("--split-seed", opt.split_seed, "seed for the stratified split")
      ->capture_default_str();
}

punn::SplitDataset load_split(const DataOptions& opt) {
  if (!opt.split_path.empty()) return punn::SplitDataset::load(opt.split_path);
  if (opt.data_path.empty() || opt.schema_path.empty())
    throw punn::IngestError("need --data and --schema (or --split)");
  const punn::DatasetSchema schema = punn::DatasetSchema::load(opt.schema_path);
  const punn::RawDataset raw = punn::load_csv(opt.data_path, schema);
  return punn::SplitDataset::make(raw, opt.train_ratio, opt.split_seed);
}

// Everything needed to reproduce the run from the echoed header.
json input_provenance(const DataOptions& opt) {
  json j;
  if (!opt.split_path.empty()) {
    j["split"] = opt.split_path;
  } else {
    j["data"] = opt.data_path;
    j["schema"] = opt.schema_path;
    j["train_ratio"] = opt.train_ratio;
    j["split_seed"] = opt.split_seed;
  }
  return j;
}

struct ConfigOverrides {
  std::optional<int> neu, gen, pop, window, nodes_min, nodes_max;
  std::optional<double> alpha1, alpha2, factor, weight_min, weight_max, coeff_min, coeff_max;
  std::optional<double> input_pct, output_pct;
  bool full_output = false;
  std::string config_file;
};

void add_config_options(CLI::App* cmd, ConfigOverrides& o) {
  cmd->add_option("--config", o.config_file, "EA parameter JSON file (flags take precedence)");
  cmd->add_option("--neu", o.neu, "maximum hidden nodes");
  cmd->add_option("--gen", o.gen, "maximum generations");
  cmd->add_option("--alpha2", o.alpha2, "initial output-layer mutation deviation");
  cmd->add_option("--alpha1", o.alpha1, "initial input-layer mutation deviation");
  cmd->add_option("--pop", o.pop, "population size");
  cmd->add_option("--one-fifth-window", o.window, "generations per variance update");
  cmd->add_option("--one-fifth-factor", o.factor, "variance adaptation factor");
  cmd->add_option("--weight-min", o.weight_min, "input-layer init range lower bound");
  cmd->add_option("--weight-max", o.weight_max, "input-layer init range upper bound");
  cmd->add_option("--coeff-min", o.coeff_min, "output-layer init range lower bound");
  cmd->add_option("--coeff-max", o.coeff_max, "output-layer init range upper bound");
  cmd->add_option("--input-mutation-pct", o.input_pct, "share of input links mutated");
  cmd->add_option("--output-mutation-pct", o.output_pct, "share of output parameters mutated");
  cmd->add_option("--nodes-min", o.nodes_min, "min nodes per structural node operator");
  cmd->add_option("--nodes-max", o.nodes_max, "max nodes per structural node operator");
  cmd->add_flag("--full-output", o.full_output, "use l output nodes instead of l-1");
}

// Resolution order: command-line flags > config file > published defaults.
punn::BaseConfig resolve_base(const std::string& dataset_name, const ConfigOverrides& o) {
  punn::BaseConfig base;
  try {
    base = punn::base_config_for(dataset_name);
  } catch (const std::invalid_argument&) {
    if (!o.neu || !o.gen)
      throw std::invalid_argument("dataset '" + dataset_name +
                                  "' has no published base configuration; pass --neu and --gen");
    base.dataset = dataset_name;
  }
  if (!o.config_file.empty()) {
    std::ifstream f(o.config_file);
    if (!f) throw punn::IngestError("cannot open config file " + o.config_file);
    json j;
    try {
      f >> j;
      base.common = punn::EAParams::from_json(j);
    } catch (const json::exception& e) {
      throw punn::IngestError("config file " + o.config_file + ": " + e.what());
    }
    base.neu = base.common.max_hidden;
    base.gen = base.common.max_generations;
    base.alpha2 = base.common.alpha2_init;
  }
  if (o.neu) base.neu = *o.neu;
  if (o.gen) base.gen = *o.gen;
  if (o.alpha2) base.alpha2 = *o.alpha2;
  if (o.alpha1) base.common.alpha1_init = *o.alpha1;
  if (o.pop) base.common.population_size = *o.pop;
  if (o.window) base.common.one_fifth_window = *o.window;
  if (o.factor) base.common.one_fifth_factor = *o.factor;
  if (o.weight_min) base.common.weight_init_min = *o.weight_min;
  if (o.weight_max) base.common.weight_init_max = *o.weight_max;
  if (o.coeff_min) base.common.coeff_init_min = *o.coeff_min;
  if (o.coeff_max) base.common.coeff_init_max = *o.coeff_max;
  if (o.input_pct) base.common.input_link_mutation_pct = *o.input_pct;
  if (o.output_pct) base.common.output_link_mutation_pct = *o.output_pct;
  if (o.nodes_min) base.common.nodes_per_op_min = *o.nodes_min;
  if (o.nodes_max) base.common.nodes_per_op_max = *o.nodes_max;
  if (o.full_output) base.common.full_output_layer = true;
  return base;
}

punn::ExperimentConfig base_as_config(const punn::BaseConfig& base) {
  punn::ExperimentConfig cfg;
  cfg.label = "1";
  cfg.dataset = base.dataset;
  cfg.params = base.common;
  cfg.params.max_hidden = base.neu;
  cfg.params.max_generations = base.gen;
  if (base.alpha2) cfg.params.alpha2_init = *base.alpha2;
  cfg.params.validate();
  return cfg;
}

void echo_effective_config(const fs::path& out_dir, const json& effective) {
  const std::string text = effective.dump(2);
  std::cout << "effective configuration:\n" << text << "\n";
  write_text(out_dir / "effective_config.json", text + "\n");
}

std::string trace_csv(const punn::EvolutionTrace& trace) {
  std::ostringstream os;
  os << "generation,best_fitness,mean_fitness,best_train_ccr,alpha1,alpha2,success_ratio\n";
  for (const auto& r : trace) {
    os << r.generation << ',' << punn::format_double(r.best_fitness) << ','
       << punn::format_double(r.mean_fitness) << ',' << punn::format_double(r.best_train_ccr)
       << ',' << punn::format_double(r.alpha1) << ',' << punn::format_double(r.alpha2) << ','
       << punn::format_double(r.success_ratio) << '\n';
  }
  return os.str();
}

// ---- worker endpoints -------------------------------------------------------

std::string self_binary_path() {
  char buf[4096];
  const ssize_t n = ::readlink("/proc/self/exe", buf, sizeof(buf) - 1);
  if (n <= 0) throw punn::ProtocolError("cannot resolve own binary path for local workers");
  buf[n] = '\0';
  return buf;
}

struct WorkerFlags {
  std::vector<std::string> endpoints;
  int local_workers = 0;
};

void add_worker_flags(CLI::App* cmd, WorkerFlags& w) {
  cmd->add_option("--workers", w.endpoints, "worker endpoints host:port")->delimiter(',');
  cmd->add_option("--local-workers", w.local_workers,
                  "spawn this many local worker subprocesses");
}

// ---- subcommand payloads ----------------------------------------------------

struct RunContext {
  DataOptions data;
  ConfigOverrides overrides;
  std::string dataset_name;  // optional override of the schema/split name
  std::string out_dir;
};

int cmd_train(const RunContext& ctx, std::uint64_t seed) {
  const fs::path out = ensure_out_dir(ctx.out_dir, "train");
  const punn::SplitDataset split = load_split(ctx.data);
  const std::string name = ctx.dataset_name.empty() ? split.name : ctx.dataset_name;
  const punn::BaseConfig base = resolve_base(name, ctx.overrides);
  const punn::ExperimentConfig config = base_as_config(base);

  json effective{{"command", "train"},      {"dataset", name},
                 {"seed", seed},            {"train_patterns", split.train.size()},
                 {"test_patterns", split.test.size()}, {"config", config.to_json()},
                 {"input", input_provenance(ctx.data)}};
  echo_effective_config(out, effective);

  const punn::RunResult result = punn::run_ea(config.params, split, seed);

  punn::RunRow row;
  row.dataset = name;
  row.config_label = config.label;
  row.seed = seed;
  row.train_ccr = result.train_ccr;
  row.test_ccr = result.test_ccr;
  row.connections = result.connections;
  row.topology = result.topology;
  row.seconds = result.seconds;
  punn::write_result_file((out / "result.csv").string(), {row});
  write_text(out / "trace.csv", trace_csv(result.trace));

  std::printf("train %s seed %llu: topology %s, train CCR %.4f, test CCR %.4f, "
              "%d connections, %.2fs\n",
              name.c_str(), static_cast<unsigned long long>(seed), result.topology.c_str(),
              result.train_ccr, result.test_ccr, result.connections, result.seconds);
  std::printf("results in %s\n", out.string().c_str());
  return kExitOk;
}

struct GridSummaryRow {
  std::string label;
  std::string topology;
  int n = 0;
  double mean = 0, stddev = 0, best = 0, worst = 0;
  double mean_connections = 0;
  bool degenerate = false;  // single run: no std
};

int cmd_grid(const RunContext& ctx, int mode, int runs, std::uint64_t master_seed,
             const WorkerFlags& workers_flags) {
  const fs::path out = ensure_out_dir(ctx.out_dir, "grid");
  const punn::SplitDataset split = load_split(ctx.data);
  const std::string name = ctx.dataset_name.empty() ? split.name : ctx.dataset_name;
  punn::BaseConfig base = resolve_base(name, ctx.overrides);

  const std::vector<punn::ExperimentConfig> grid =
      mode == 3 ? punn::expand_grid_3param(base) : punn::expand_grid_2param(base);

  json effective{{"command", "grid"},   {"dataset", name},     {"mode", mode},
                 {"runs_per_config", runs}, {"master_seed", master_seed},
                 {"input", input_provenance(ctx.data)}, {"configs", json::array()}};
  for (const auto& cfg : grid) effective["configs"].push_back(cfg.to_json());
  echo_effective_config(out, effective);

  const std::string split_json = split.to_json_string();
  const fs::path split_file = out / "split.json";
  write_text(split_file, split_json + "\n");

  // Per-config independent seed streams; run i of config c gets
  // master + c*1000003 + i so configs never share seeds.
  const auto config_seed = [&](std::size_t c, int i) {
    return master_seed + static_cast<std::uint64_t>(c) * 1000003ULL +
           static_cast<std::uint64_t>(i);
  };

  std::vector<std::vector<punn::RunSummaryRow>> per_config(grid.size());

  const bool distributed = !workers_flags.endpoints.empty() || workers_flags.local_workers > 0;
  if (distributed) {
    std::vector<punn::JobSpec> jobs;
    for (std::size_t c = 0; c < grid.size(); ++c) {
      punn::JobSpec spec;
      spec.job_id = static_cast<int>(c);
      spec.config = grid[c];
      for (int i = 0; i < runs; ++i) spec.runs.emplace_back(i, config_seed(c, i));
      if (split_json.size() <= kInlineSplitLimit)
        spec.split_inline = split_json;
      else
        spec.split_path = fs::absolute(split_file).string();
      spec.protocol_version = punn::kProtocolVersion;
      jobs.push_back(std::move(spec));
    }

    punn::LocalWorkerPool local(workers_flags.local_workers > 0 ? self_binary_path() : "");
    std::vector<std::string> endpoints = workers_flags.endpoints;
    if (workers_flags.local_workers > 0) endpoints = local.acquire(workers_flags.local_workers);

    const punn::DispatchOutcome outcome = punn::dispatch(endpoints, jobs);
    for (std::size_t c = 0; c < grid.size(); ++c) {
      if (outcome.jobs[c].failed)
        throw punn::ProtocolError("grid config " + grid[c].label + ": " + outcome.jobs[c].error);
      per_config[c] = outcome.jobs[c].runs;
    }
  } else {
    for (std::size_t c = 0; c < grid.size(); ++c) {
      for (int i = 0; i < runs; ++i) {
        const std::uint64_t seed = config_seed(c, i);
        const punn::RunResult r = punn::run_ea(grid[c].params, split, seed);
        punn::RunSummaryRow row{i, seed, r.train_ccr, r.test_ccr, r.connections, r.topology,
                                r.seconds};
        per_config[c].push_back(std::move(row));
      }
      std::printf("config %s done (%d runs)\n", grid[c].label.c_str(), runs);
    }
  }

  // Result rows + Table-6-style summary.
  std::vector<punn::RunRow> rows;
  std::vector<GridSummaryRow> summaries;
  const int n_outputs = base.common.full_output_layer ? split.n_classes : split.n_classes - 1;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    for (const auto& r : per_config[c]) rows.push_back(punn::to_run_row(r, name, grid[c].label));

    GridSummaryRow s;
    s.label = grid[c].label;
    s.topology = std::to_string(split.n_features()) + ":" + std::to_string(grid[c].neu()) + ":" +
                 std::to_string(n_outputs);
    s.n = static_cast<int>(per_config[c].size());
    std::vector<double> ccrs, conns;
    for (const auto& r : per_config[c]) {
      ccrs.push_back(r.test_ccr);
      conns.push_back(r.connections);
    }
    if (s.n >= 2) {
      const punn::RunSummary sum = punn::summarize(ccrs);
      s.mean = sum.mean;
      s.stddev = sum.stddev;
      s.best = sum.best;
      s.worst = sum.worst;
    } else if (s.n == 1) {
      s.degenerate = true;
      s.mean = s.best = s.worst = ccrs.front();
    }
    for (double v : conns) s.mean_connections += v;
    if (s.n > 0) s.mean_connections /= s.n;
    summaries.push_back(std::move(s));
  }
  punn::write_result_file((out / "results.csv").string(), rows);

  // Best configuration: highest mean test CCR, ties by lower mean connections.
  std::size_t best_index = 0;
  for (std::size_t c = 1; c < summaries.size(); ++c) {
    if (summaries[c].mean > summaries[best_index].mean ||
        (summaries[c].mean == summaries[best_index].mean &&
         summaries[c].mean_connections < summaries[best_index].mean_connections))
      best_index = c;
  }

  std::ostringstream table;
  table << "dataset: " << name << "  grid: " << mode << "-parameter  runs per config: " << runs
        << "  master seed: " << master_seed << "\n\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-8s %-10s %-10s %-10s %-10s %-10s\n", "config", "topology",
                "mean", "std", "best", "worst");
  table << line;
  for (std::size_t c = 0; c < summaries.size(); ++c) {
    const auto& s = summaries[c];
    if (s.degenerate)
      std::snprintf(line, sizeof(line), "%-8s %-10s %-10.4f %-10s %-10.4f %-10.4f%s\n",
                    s.label.c_str(), s.topology.c_str(), s.mean, "-", s.best, s.worst,
                    c == best_index ? "  *best*" : "");
    else
      std::snprintf(line, sizeof(line), "%-8s %-10s %-10.4f %-10.4f %-10.4f %-10.4f%s\n",
                    s.label.c_str(), s.topology.c_str(), s.mean, s.stddev, s.best, s.worst,
                    c == best_index ? "  *best*" : "");
    table << line;
  }
  std::snprintf(line, sizeof(line), "\nbest configuration: %s (mean test CCR %.4f)\n",
                summaries[best_index].label.c_str(), summaries[best_index].mean);
  table << line;

  const std::string text = table.str();
  write_text(out / "summary.txt", text);
  std::fputs(text.c_str(), stdout);
  std::printf("results in %s\n", out.string().c_str());
  return kExitOk;
}

int cmd_bench(const RunContext& ctx, int total_runs, const std::vector<int>& p_list,
              std::uint64_t master_seed, const WorkerFlags& workers_flags,
              const std::string& grid_label, int grid_mode) {
  const fs::path out = ensure_out_dir(ctx.out_dir, "bench");
  const punn::SplitDataset split = load_split(ctx.data);
  const std::string name = ctx.dataset_name.empty() ? split.name : ctx.dataset_name;
  punn::BaseConfig base = resolve_base(name, ctx.overrides);

  punn::ExperimentConfig config;
  if (grid_label.empty()) {
    config = base_as_config(base);
  } else {
    const auto grid =
        grid_mode == 3 ? punn::expand_grid_3param(base) : punn::expand_grid_2param(base);
    const auto it = std::find_if(grid.begin(), grid.end(),
                                 [&](const auto& c) { return c.label == grid_label; });
    if (it == grid.end())
      throw std::invalid_argument("bench: no grid config labeled '" + grid_label + "'");
    config = *it;
  }

  json effective{{"command", "bench"},        {"dataset", name},
                 {"total_runs", total_runs},  {"p_list", p_list},
                 {"master_seed", master_seed}, {"config", config.to_json()},
                 {"input", input_provenance(ctx.data)}};
  echo_effective_config(out, effective);

  const fs::path split_file = out / "split.json";
  split.save(split_file.string());

  const bool local = workers_flags.local_workers > 0 ||
                     (workers_flags.endpoints.empty() && workers_flags.local_workers == 0);
  punn::BenchReport report;
  if (!workers_flags.endpoints.empty()) {
    punn::FixedWorkers source(workers_flags.endpoints);
    report = punn::bench(config, fs::absolute(split_file).string(), total_runs, p_list, source,
                         master_seed);
  } else if (local) {
    punn::LocalWorkerPool source(self_binary_path());
    report = punn::bench(config, fs::absolute(split_file).string(), total_runs, p_list, source,
                         master_seed);
  }

  std::ostringstream csv;
  report.write_csv(csv);
  write_text(out / "bench.csv", csv.str());
  write_text(out / "bench.json", report.to_json().dump(2) + "\n");

  for (const auto& entry : report.entries) {
    if (entry.failed) {
      std::printf("P=%d FAILED: %s\n", entry.p, entry.error.c_str());
      continue;
    }
    std::printf("P=%d  Tp=%.2fs  S=%s  E=%s\n", entry.p, entry.tp_seconds,
                punn::format_ratio_4dp(entry.s).c_str(), punn::format_ratio_4dp(entry.e).c_str());
    if (entry.p == 1 && !entry.rows.empty()) {
      std::vector<punn::RunRow> rows;
      for (const auto& r : entry.rows) rows.push_back(punn::to_run_row(r, name, config.label));
      punn::write_result_file((out / "results.csv").string(), rows);
    }
  }
  std::printf("efficiency-optimal node count: P=%d\n", report.optimal_p);
  std::printf("results in %s\n", out.string().c_str());

  for (const auto& entry : report.entries)
    if (entry.failed) return kExitProtocol;  // partial report already written
  return kExitOk;
}

int cmd_worker(const std::string& listen, const std::string& id, int max_connections) {
  const auto [host, port] = punn::parse_endpoint(listen);
  punn::WorkerOptions options;
  options.host = host;
  options.port = port;
  options.worker_id = id;
  options.max_connections = max_connections;
  punn::serve_worker(options);
  return kExitOk;
}

int cmd_dispatch(const std::string& jobs_path, const WorkerFlags& workers_flags,
                 const std::string& out_dir) {
  const fs::path out = ensure_out_dir(out_dir, "dispatch");
  std::ifstream f(jobs_path);
  if (!f) throw punn::IngestError("cannot open jobs file " + jobs_path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw punn::IngestError(std::string("jobs file: ") + e.what());
  }
  std::vector<punn::JobSpec> jobs;
  try {
    for (const auto& spec : j) jobs.push_back(punn::JobSpec::from_json(spec));
  } catch (const json::exception& e) {
    throw punn::IngestError(std::string("jobs file: ") + e.what());
  }

  punn::LocalWorkerPool local(workers_flags.local_workers > 0 ? self_binary_path() : "");
  std::vector<std::string> endpoints = workers_flags.endpoints;
  if (workers_flags.local_workers > 0) endpoints = local.acquire(workers_flags.local_workers);
  if (endpoints.empty()) throw std::invalid_argument("dispatch: need --workers or --local-workers");

  const punn::DispatchOutcome outcome = punn::dispatch(endpoints, jobs);

  json status{{"master_seconds", outcome.master_seconds}, {"jobs", json::array()}};
  std::vector<punn::RunRow> rows;
  bool any_failed = false;
  for (std::size_t i = 0; i < outcome.jobs.size(); ++i) {
    const auto& job = outcome.jobs[i];
    json js{{"job_id", job.job_id}, {"failed", job.failed}};
    if (job.failed) {
      any_failed = true;
      js["error"] = job.error;
    } else {
      js["worker_id"] = job.worker_id;
      js["worker_seconds"] = job.worker_seconds;
      for (const auto& r : job.runs)
        rows.push_back(punn::to_run_row(r, jobs[i].config.dataset, jobs[i].config.label));
    }
    status["jobs"].push_back(std::move(js));
  }
  punn::write_result_file((out / "results.csv").string(), rows);
  write_text(out / "dispatch.json", status.dump(2) + "\n");
  std::printf("dispatch: %zu jobs, %.2fs master wall clock, results in %s\n", jobs.size(),
              outcome.master_seconds, out.string().c_str());
  if (any_failed) {
    for (const auto& job : outcome.jobs)
      if (job.failed) std::fprintf(stderr, "job %d failed: %s\n", job.job_id, job.error.c_str());
    return kExitProtocol;
  }
  return kExitOk;
}

int cmd_stats(const std::string& base_path, const std::string& best_path,
              const std::string& out_dir) {
  const fs::path out = ensure_out_dir(out_dir, "stats");
  const auto load_runs = [](const std::string& path) {
    const std::vector<punn::RunRow> rows = punn::read_result_file(path);
    if (rows.empty()) throw punn::IngestError("results: " + path + " has no rows");
    punn::ConfigRuns runs;
    runs.dataset = rows.front().dataset;
    for (const auto& r : rows) {
      if (r.dataset != runs.dataset)
        throw punn::IngestError("results: " + path + " mixes datasets");
      runs.ccr.push_back(r.test_ccr);
      runs.connections.push_back(r.connections);
    }
    return runs;
  };

  const punn::ConfigRuns base = load_runs(base_path);
  const punn::ConfigRuns best = load_runs(best_path);
  const punn::ComparisonReport report = punn::compare_configs(base, best);

  const std::string narrative = report.narrative();
  write_text(out / "report.txt", narrative);
  write_text(out / "outcomes.json", report.to_json().dump(2) + "\n");

  std::ostringstream csv;
  csv << "metric,test,statistic,p_value,significant_05,significant_01\n";
  for (const auto& m : report.metrics) {
    const auto emit = [&](const std::string& test, const punn::TestOutcome& t) {
      csv << m.metric << ',' << test << ',' << punn::format_double(t.statistic) << ','
          << punn::format_double(t.p_value) << ',' << (t.significant_05 ? 1 : 0) << ','
          << (t.significant_01 ? 1 : 0) << '\n';
    };
    emit("ks_base", m.ks_base);
    emit("ks_best", m.ks_best);
    emit("levene", m.levene_test);
    emit(m.equal_variances_assumed ? "t_student" : "t_welch", m.mean_test);
  }
  write_text(out / "outcomes.csv", csv.str());

  std::fputs(narrative.c_str(), stdout);
  std::printf("results in %s\n", out.string().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evolutionary product-unit network classifier"};
  app.require_subcommand(1);

  // train
  RunContext train_ctx;
  std::uint64_t train_seed = 1;
  CLI::App* train = app.add_subcommand("train", "single seeded EA run");
  add_data_options(train, train_ctx.data);
  add_config_options(train, train_ctx.overrides);
  train->add_option("--name", train_ctx.dataset_name, "override dataset name");
  train->add_option("--seed", train_seed, "run seed")->capture_default_str();
  train->add_option("--out", train_ctx.out_dir, "output directory");

  // grid
  RunContext grid_ctx;
  int grid_mode = 3, grid_runs = 30;
  std::uint64_t grid_seed = 1;
  WorkerFlags grid_workers;
  CLI::App* grid = app.add_subcommand("grid", "8-configuration experimental-design distribution");
  add_data_options(grid, grid_ctx.data);
  add_config_options(grid, grid_ctx.overrides);
  add_worker_flags(grid, grid_workers);
  grid->add_option("--name", grid_ctx.dataset_name, "override dataset name");
  grid->add_option("--mode", grid_mode, "distributed parameter count (2 or 3)")
      ->check(CLI::IsMember({2, 3}))
      ->capture_default_str();
  grid->add_option("--runs", grid_runs, "runs per configuration")->capture_default_str();
  grid->add_option("--master-seed", grid_seed, "master seed")->capture_default_str();
  grid->add_option("--out", grid_ctx.out_dir, "output directory");

  // bench
  RunContext bench_ctx;
  int bench_runs = 32;
  std::vector<int> bench_p{1, 2, 4, 8};
  std::uint64_t bench_seed = 1;
  WorkerFlags bench_workers;
  std::string bench_grid_label;
  int bench_grid_mode = 3;
  CLI::App* bench = app.add_subcommand("bench", "processing-distribution speedup/efficiency");
  add_data_options(bench, bench_ctx.data);
  add_config_options(bench, bench_ctx.overrides);
  add_worker_flags(bench, bench_workers);
  bench->add_option("--name", bench_ctx.dataset_name, "override dataset name");
  bench->add_option("--runs", bench_runs, "total runs per measurement")->capture_default_str();
  bench->add_option("--p-list", bench_p, "node counts to measure")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--master-seed", bench_seed, "master seed")->capture_default_str();
  bench->add_option("--grid-config", bench_grid_label, "run this grid cell (e.g. 2 or 4*)");
  bench->add_option("--grid-mode", bench_grid_mode, "grid type for --grid-config")
      ->check(CLI::IsMember({2, 3}));
  bench->add_option("--out", bench_ctx.out_dir, "output directory");

  // worker
  std::string worker_listen = "127.0.0.1:0";
  std::string worker_id;
  int worker_max_conn = 0;
  CLI::App* worker = app.add_subcommand("worker", "serve jobs over TCP");
  worker->add_option("--listen", worker_listen, "host:port (port 0 = ephemeral)")
      ->capture_default_str();
  worker->add_option("--id", worker_id, "worker id reported in results");
  worker->add_option("--max-connections", worker_max_conn, "serve N connections, then exit");

  // dispatch
  std::string dispatch_jobs, dispatch_out;
  WorkerFlags dispatch_workers;
  CLI::App* dispatch = app.add_subcommand("dispatch", "send a jobs file to workers");
  dispatch->add_option("--jobs", dispatch_jobs, "JSON array of job specs")->required();
  add_worker_flags(dispatch, dispatch_workers);
  dispatch->add_option("--out", dispatch_out, "output directory");

  // stats
  std::string stats_base, stats_best, stats_out;
  CLI::App* stats = app.add_subcommand("stats", "base-vs-best statistical comparison");
  stats->add_option("--base", stats_base, "base configuration results CSV")->required();
  stats->add_option("--best", stats_best, "best configuration results CSV")->required();
  stats->add_option("--out", stats_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(train_ctx, train_seed);
    if (grid->parsed()) return cmd_grid(grid_ctx, grid_mode, grid_runs, grid_seed, grid_workers);
    if (bench->parsed())
      return cmd_bench(bench_ctx, bench_runs, bench_p, bench_seed, bench_workers,
                       bench_grid_label, bench_grid_mode);
    if (worker->parsed()) return cmd_worker(worker_listen, worker_id, worker_max_conn);
    if (dispatch->parsed()) return cmd_dispatch(dispatch_jobs, dispatch_workers, dispatch_out);
    if (stats->parsed()) return cmd_stats(stats_base, stats_best, stats_out);
  } catch (const punn::IngestError& e) {
    std::fprintf(stderr, "ingestion error: %s\n", e.what());
    return kExitIngest;
  } catch (const punn::ProtocolError& e) {
    std::fprintf(stderr, "protocol error: %s\n", e.what());
    return kExitProtocol;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "precondition error: %s\n", e.what());
    return kExitPrecondition;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "precondition error: %s\n", e.what());
    return kExitPrecondition;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
