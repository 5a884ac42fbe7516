#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "punn/dataset.hpp"
#include "punn/grid.hpp"
#include "punn/results.hpp"

namespace punn {

// Unit of master->worker work: one experiment configuration plus the seeds
// the worker must run. The split is referenced by path (a file the worker
// can read) or embedded inline for small sets.
struct JobSpec {
  int job_id = 0;
  ExperimentConfig config;
  std::vector<std::pair<int, std::uint64_t>> runs;  // (run index, seed)
  std::string split_path;
  std::string split_inline;  // serialized SplitDataset; takes precedence when non-empty
  int protocol_version;

  nlohmann::json to_json() const;
  static JobSpec from_json(const nlohmann::json& j);
};

struct RunSummaryRow {
  int run_index = 0;
  std::uint64_t seed = 0;
  double train_ccr = 0.0;
  double test_ccr = 0.0;
  int connections = 0;
  std::string topology;
  double seconds = 0.0;

  nlohmann::json to_json() const;
  static RunSummaryRow from_json(const nlohmann::json& j);
};

struct JobResult {
  int job_id = -1;
  std::string worker_id;
  std::vector<RunSummaryRow> runs;
  double worker_seconds = 0.0;
  bool failed = false;
  std::string error;
};

struct WorkerOptions {
  std::string host = "127.0.0.1";
  int port = 0;            // 0 picks an ephemeral port
  std::string worker_id;   // default "<host>:<port>/<pid>"
  bool announce = true;    // print "LISTENING <host>:<port>" on stdout
  int max_connections = 0; // 0 = serve forever
  std::function<void(int)> on_listen;  // called with the bound port
};

// Accepts one connection at a time; per JOB message executes the assigned
// runs sequentially and streams one RESULT per run followed by DONE.
// Protocol-version mismatch or a malformed message gets an ERROR reply and
// the connection is closed.
void serve_worker(const WorkerOptions& options);

struct DispatchOptions {
  double connect_timeout_seconds = 5.0;
};

struct DispatchOutcome {
  std::vector<JobResult> jobs;            // one per input job, same order
  double master_seconds = 0.0;            // first send to last DONE
  std::vector<std::string> worker_errors; // per endpoint; empty string = healthy
};

// Runs the job queue across the given workers concurrently (one job per
// worker at a time). Worker failures mark the affected job failed; nothing
// is retried and nothing is lost silently.
DispatchOutcome dispatch(const std::vector<std::string>& endpoints,
                         const std::vector<JobSpec>& jobs, const DispatchOptions& options = {});

// S = T1/Tp. Throws std::invalid_argument for non-positive times.
double speedup(double t1, double tp);

// E = S/P.
double efficiency(double s, int p);

// Four decimals, truncated toward zero (the convention the published
// speedup/efficiency table uses; 349/177 -> "1.9717").
std::string format_ratio_4dp(double v);

struct BenchEntry {
  int p = 1;
  double tp_seconds = 0.0;
  double s = 0.0;
  double e = 0.0;
  bool failed = false;
  std::string error;
  std::vector<RunSummaryRow> rows;  // aggregated in run-index order
};

struct BenchReport {
  std::string dataset;
  std::string config_label;
  int total_runs = 0;
  std::uint64_t master_seed = 0;
  std::vector<BenchEntry> entries;
  int optimal_p = 1;  // highest efficiency among successful entries

  void write_csv(std::ostream& out) const;  // columns P,Tp_seconds,S,E
  nlohmann::json to_json() const;
};

// Supplies worker endpoints for each bench measurement.
class WorkerSource {
 public:
  virtual ~WorkerSource() = default;
  virtual std::vector<std::string> acquire(int p) = 0;
  virtual void release() {}
};

// A fixed endpoint list; acquire(p) hands out the first p.
class FixedWorkers : public WorkerSource {
 public:
  explicit FixedWorkers(std::vector<std::string> endpoints) : endpoints_(std::move(endpoints)) {}
  std::vector<std::string> acquire(int p) override;

 private:
  std::vector<std::string> endpoints_;
};

// Local cluster emulation: spawns worker subprocesses of the given binary
// ("<binary> worker --listen 127.0.0.1:0") and reads their announced ports.
class LocalWorkerPool : public WorkerSource {
 public:
  explicit LocalWorkerPool(std::string worker_binary) : binary_(std::move(worker_binary)) {}
  ~LocalWorkerPool() override;
  std::vector<std::string> acquire(int p) override;
  void release() override;

 private:
  std::string binary_;
  std::vector<int> pids_;
};

// Runs total_runs of one configuration for every P in p_list (P=1 is always
// included as the baseline), measures the master wall clock, and derives
// speedup and efficiency per P.
BenchReport bench(const ExperimentConfig& config, const std::string& split_path, int total_runs,
                  std::vector<int> p_list, WorkerSource& workers, std::uint64_t master_seed,
                  const DispatchOptions& options = {});

// RunSummaryRow -> result-file row.
RunRow to_run_row(const RunSummaryRow& r, const std::string& dataset,
                  const std::string& config_label);

}  // namespace punn
