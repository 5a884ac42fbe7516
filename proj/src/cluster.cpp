#include "punn/cluster.hpp"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "punn/errors.hpp"
#include "punn/evolution.hpp"
#include "punn/protocol.hpp"

namespace punn {

namespace {

using nlohmann::json;

json runs_to_json(const std::vector<std::pair<int, std::uint64_t>>& runs) {
  json arr = json::array();
  for (const auto& [index, seed] : runs) arr.push_back({{"run_index", index}, {"seed", seed}});
  return arr;
}

std::vector<std::pair<int, std::uint64_t>> runs_from_json(const json& arr) {
  std::vector<std::pair<int, std::uint64_t>> runs;
  for (const auto& r : arr)
    runs.emplace_back(r.at("run_index").get<int>(), r.at("seed").get<std::uint64_t>());
  return runs;
}

}  // namespace

json JobSpec::to_json() const {
  json j;
  j["job_id"] = job_id;
  j["config"] = config.to_json();
  j["runs"] = runs_to_json(runs);
  j["protocol_version"] = protocol_version;
  if (!split_inline.empty())
    j["split_inline"] = split_inline;
  else
    j["split_path"] = split_path;
  return j;
}

JobSpec JobSpec::from_json(const json& j) {
  JobSpec spec;
  spec.job_id = j.at("job_id").get<int>();
  spec.config = ExperimentConfig::from_json(j.at("config"));
  spec.runs = runs_from_json(j.at("runs"));
  spec.protocol_version = j.at("protocol_version").get<int>();
  if (j.contains("split_inline")) spec.split_inline = j["split_inline"].get<std::string>();
  if (j.contains("split_path")) spec.split_path = j["split_path"].get<std::string>();
  return spec;
}

json RunSummaryRow::to_json() const {
  return json{{"run_index", run_index},     {"seed", seed},
              {"train_ccr", train_ccr},     {"test_ccr", test_ccr},
              {"connections", connections}, {"topology", topology},
              {"seconds", seconds}};
}

RunSummaryRow RunSummaryRow::from_json(const json& j) {
  RunSummaryRow r;
  r.run_index = j.at("run_index").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.train_ccr = j.at("train_ccr").get<double>();
  r.test_ccr = j.at("test_ccr").get<double>();
  r.connections = j.at("connections").get<int>();
  r.topology = j.at("topology").get<std::string>();
  r.seconds = j.at("seconds").get<double>();
  return r;
}

RunRow to_run_row(const RunSummaryRow& r, const std::string& dataset,
                  const std::string& config_label) {
  RunRow row;
  row.dataset = dataset;
  row.config_label = config_label;
  row.seed = r.seed;
  row.train_ccr = r.train_ccr;
  row.test_ccr = r.test_ccr;
  row.connections = r.connections;
  row.topology = r.topology;
  row.seconds = r.seconds;
  return row;
}

// ---- worker ----------------------------------------------------------------

namespace {

// Executes one JOB on an open connection. Throws ProtocolError / IngestError
// upward; the caller turns that into an ERROR reply.
void execute_job(Socket& sock, const json& msg, const std::string& worker_id,
                 std::map<std::string, SplitDataset>& split_cache) {
  const JobSpec spec = JobSpec::from_json(msg.at("job"));
  if (spec.protocol_version != kProtocolVersion)
    throw ProtocolError("job " + std::to_string(spec.job_id) + ": protocol version " +
                        std::to_string(spec.protocol_version) + " != " +
                        std::to_string(kProtocolVersion));
  if (spec.runs.empty())
    throw ProtocolError("job " + std::to_string(spec.job_id) + ": empty run list");

  const SplitDataset* data = nullptr;
  SplitDataset inline_data;
  if (!spec.split_inline.empty()) {
    inline_data = SplitDataset::from_json_string(spec.split_inline);
    data = &inline_data;
  } else {
    auto it = split_cache.find(spec.split_path);
    if (it == split_cache.end())
      it = split_cache.emplace(spec.split_path, SplitDataset::load(spec.split_path)).first;
    data = &it->second;
  }

  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& [run_index, seed] : spec.runs) {
    const RunResult result = run_ea(spec.config.params, *data, seed);
    RunSummaryRow row;
    row.run_index = run_index;
    row.seed = seed;
    row.train_ccr = result.train_ccr;
    row.test_ccr = result.test_ccr;
    row.connections = result.connections;
    row.topology = result.topology;
    row.seconds = result.seconds;
    send_message(sock, json{{"type", "RESULT"},
                            {"job_id", spec.job_id},
                            {"worker_id", worker_id},
                            {"run", row.to_json()}});
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  send_message(sock, json{{"type", "DONE"},
                          {"job_id", spec.job_id},
                          {"worker_id", worker_id},
                          {"worker_seconds", elapsed}});
}

void handle_connection(Socket& sock, const std::string& worker_id,
                       std::map<std::string, SplitDataset>& split_cache) {
  const auto fail = [&](const std::string& text, int job_id = -1) {
    try {
      send_message(sock, make_error(text, job_id));
    } catch (const ProtocolError&) {
      // peer already gone
    }
  };

  try {
    const auto hello = recv_message(sock);
    if (!hello) return;
    if ((*hello)["type"] != "HELLO" || !hello->contains("version")) {
      fail("expected HELLO");
      return;
    }
    if ((*hello)["version"].get<int>() != kProtocolVersion) {
      fail("protocol version mismatch: worker speaks " + std::to_string(kProtocolVersion));
      return;
    }
    send_message(sock, make_hello());

    while (true) {
      const auto msg = recv_message(sock);
      if (!msg) return;  // peer finished
      if ((*msg)["type"] != "JOB") {
        fail("expected JOB, got " + (*msg)["type"].get<std::string>());
        return;
      }
      int job_id = -1;
      try {
        if (msg->contains("job") && (*msg)["job"].contains("job_id"))
          job_id = (*msg)["job"]["job_id"].get<int>();
        execute_job(sock, *msg, worker_id, split_cache);
      } catch (const std::exception& e) {
        fail(e.what(), job_id);
        return;
      }
    }
  } catch (const ProtocolError& e) {
    fail(std::string("malformed message: ") + e.what());
  }
}

}  // namespace

void serve_worker(const WorkerOptions& options) {
  ListenSocket listener(options.host, options.port);
  const std::string endpoint = options.host + ":" + std::to_string(listener.bound_port());
  const std::string worker_id = options.worker_id.empty()
                                    ? endpoint + "/" + std::to_string(::getpid())
                                    : options.worker_id;
  if (options.announce) {
    std::printf("LISTENING %s\n", endpoint.c_str());
    std::fflush(stdout);
  }
  if (options.on_listen) options.on_listen(listener.bound_port());

  std::map<std::string, SplitDataset> split_cache;
  int served = 0;
  while (options.max_connections == 0 || served < options.max_connections) {
    Socket conn = listener.accept();
    handle_connection(conn, worker_id, split_cache);
    ++served;
  }
}

// ---- master ----------------------------------------------------------------

DispatchOutcome dispatch(const std::vector<std::string>& endpoints,
                         const std::vector<JobSpec>& jobs, const DispatchOptions& options) {
  if (endpoints.empty()) throw std::invalid_argument("dispatch: no worker endpoints");

  DispatchOutcome outcome;
  outcome.jobs.resize(jobs.size());
  outcome.worker_errors.assign(endpoints.size(), "");
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    outcome.jobs[i].job_id = jobs[i].job_id;
    outcome.jobs[i].failed = true;
    outcome.jobs[i].error = "not assigned (no healthy worker reached it)";
  }

  std::mutex mu;
  std::size_t next_job = 0;

  const auto worker_loop = [&](std::size_t worker_index) {
    const std::string& endpoint = endpoints[worker_index];
    Socket sock;
    try {
      const auto [host, port] = parse_endpoint(endpoint);
      sock = Socket::connect(host, port, options.connect_timeout_seconds);
      send_message(sock, make_hello());
      const auto reply = recv_message(sock);
      if (!reply) throw ProtocolError("connection closed during handshake");
      if ((*reply)["type"] == "ERROR")
        throw ProtocolError((*reply)["message"].get<std::string>());
      if ((*reply)["type"] != "HELLO" || (*reply)["version"].get<int>() != kProtocolVersion)
        throw ProtocolError("unexpected handshake reply");
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(mu);
      outcome.worker_errors[worker_index] = e.what();
      return;  // never consumed a job; others drain the queue
    }

    while (true) {
      std::size_t j;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next_job >= jobs.size()) return;
        j = next_job++;
      }
      JobResult result;
      result.job_id = jobs[j].job_id;
      try {
        send_message(sock, json{{"type", "JOB"}, {"job", jobs[j].to_json()}});
        while (true) {
          const auto msg = recv_message(sock);
          if (!msg) throw ProtocolError("connection closed before DONE");
          const std::string type = (*msg)["type"].get<std::string>();
          if (type == "RESULT") {
            result.worker_id = (*msg)["worker_id"].get<std::string>();
            result.runs.push_back(RunSummaryRow::from_json((*msg)["run"]));
          } else if (type == "DONE") {
            result.worker_seconds = (*msg)["worker_seconds"].get<double>();
            if (result.runs.size() != jobs[j].runs.size())
              throw ProtocolError("DONE after " + std::to_string(result.runs.size()) +
                                  " results, expected " + std::to_string(jobs[j].runs.size()));
            break;
          } else if (type == "ERROR") {
            throw ProtocolError("worker error: " + (*msg)["message"].get<std::string>());
          } else {
            throw ProtocolError("unexpected message type " + type);
          }
        }
      } catch (const std::exception& e) {
        result.failed = true;
        result.error = e.what();
        {
          std::lock_guard<std::mutex> lock(mu);
          outcome.jobs[j] = std::move(result);
          outcome.worker_errors[worker_index] = e.what();
        }
        return;  // connection state unknown; stop using this worker
      }
      std::lock_guard<std::mutex> lock(mu);
      outcome.jobs[j] = std::move(result);
    }
  };

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::thread> threads;
  threads.reserve(endpoints.size());
  for (std::size_t w = 0; w < endpoints.size(); ++w) threads.emplace_back(worker_loop, w);
  for (auto& t : threads) t.join();
  outcome.master_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return outcome;
}

double speedup(double t1, double tp) {
  if (!(t1 > 0.0) || !(tp > 0.0)) throw std::invalid_argument("speedup: times must be > 0");
  return t1 / tp;
}

double efficiency(double s, int p) {
  if (!(s > 0.0)) throw std::invalid_argument("efficiency: speedup must be > 0");
  if (p < 1) throw std::invalid_argument("efficiency: processor count must be >= 1");
  return s / static_cast<double>(p);
}

std::string format_ratio_4dp(double v) {
  if (!(v >= 0.0)) throw std::invalid_argument("format_ratio_4dp: value must be >= 0");
  const long long scaled = static_cast<long long>(v * 10000.0);  // truncates
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%lld.%04lld", scaled / 10000, scaled % 10000);
  return buf;
}

// ---- bench ------------------------------------------------------------------

std::vector<std::string> FixedWorkers::acquire(int p) {
  if (p > static_cast<int>(endpoints_.size()))
    throw std::invalid_argument("bench: need " + std::to_string(p) + " workers, have " +
                                std::to_string(endpoints_.size()));
  return {endpoints_.begin(), endpoints_.begin() + p};
}

LocalWorkerPool::~LocalWorkerPool() { release(); }

std::vector<std::string> LocalWorkerPool::acquire(int p) {
  release();
  std::vector<std::string> endpoints;
  for (int i = 0; i < p; ++i) {
    int fds[2];
    if (::pipe(fds) != 0) throw ProtocolError("local pool: pipe failed");
    const pid_t pid = ::fork();
    if (pid < 0) {
      ::close(fds[0]);
      ::close(fds[1]);
      throw ProtocolError("local pool: fork failed");
    }
    if (pid == 0) {
      ::dup2(fds[1], STDOUT_FILENO);
      ::close(fds[0]);
      ::close(fds[1]);
      ::execl(binary_.c_str(), binary_.c_str(), "worker", "--listen", "127.0.0.1:0",
              static_cast<char*>(nullptr));
      std::perror("execl");
      ::_exit(127);
    }
    ::close(fds[1]);
    pids_.push_back(pid);

    // First stdout line announces the bound endpoint.
    std::string line;
    char c;
    while (true) {
      const ssize_t n = ::read(fds[0], &c, 1);
      if (n <= 0 || c == '\n') break;
      line.push_back(c);
      if (line.size() > 256) break;
    }
    ::close(fds[0]);
    const std::string prefix = "LISTENING ";
    if (line.rfind(prefix, 0) != 0)
      throw ProtocolError("local pool: worker did not announce an endpoint (got '" + line + "')");
    endpoints.push_back(line.substr(prefix.size()));
  }
  return endpoints;
}

void LocalWorkerPool::release() {
  for (int pid : pids_) {
    ::kill(pid, SIGTERM);
    int status = 0;
    ::waitpid(pid, &status, 0);
  }
  pids_.clear();
}

BenchReport bench(const ExperimentConfig& config, const std::string& split_path, int total_runs,
                  std::vector<int> p_list, WorkerSource& workers, std::uint64_t master_seed,
                  const DispatchOptions& options) {
  if (total_runs < 1) throw std::invalid_argument("bench: total_runs must be >= 1");
  p_list.push_back(1);  // baseline is always measured
  std::sort(p_list.begin(), p_list.end());
  p_list.erase(std::unique(p_list.begin(), p_list.end()), p_list.end());
  if (p_list.front() < 1) throw std::invalid_argument("bench: processor counts must be >= 1");

  BenchReport report;
  report.dataset = config.dataset;
  report.config_label = config.label;
  report.total_runs = total_runs;
  report.master_seed = master_seed;

  for (int p : p_list) {
    BenchEntry entry;
    entry.p = p;
    try {
      const std::vector<RunAssignment> assignments = split_runs(total_runs, p, master_seed);
      std::vector<JobSpec> jobs;
      jobs.reserve(assignments.size());
      for (const auto& a : assignments) {
        JobSpec spec;
        spec.job_id = a.worker_index;
        spec.config = config;
        spec.runs = a.runs;
        spec.split_path = split_path;
        spec.protocol_version = kProtocolVersion;
        jobs.push_back(std::move(spec));
      }
      const std::vector<std::string> endpoints = workers.acquire(p);
      const DispatchOutcome outcome = dispatch(endpoints, jobs, options);
      workers.release();

      entry.tp_seconds = outcome.master_seconds;
      for (const auto& job : outcome.jobs) {
        if (job.failed) {
          entry.failed = true;
          if (!entry.error.empty()) entry.error += "; ";
          entry.error += "job " + std::to_string(job.job_id) + ": " + job.error;
        } else {
          entry.rows.insert(entry.rows.end(), job.runs.begin(), job.runs.end());
        }
      }
      std::sort(entry.rows.begin(), entry.rows.end(),
                [](const RunSummaryRow& a, const RunSummaryRow& b) {
                  return a.run_index < b.run_index;
                });
    } catch (const std::exception& e) {
      workers.release();
      entry.failed = true;
      entry.error = e.what();
    }
    report.entries.push_back(std::move(entry));
  }

  // Speedup/efficiency against the P=1 baseline.
  const BenchEntry& baseline = report.entries.front();
  if (!baseline.failed) {
    double best_e = 0.0;
    for (auto& entry : report.entries) {
      if (entry.failed) continue;
      entry.s = speedup(baseline.tp_seconds, entry.tp_seconds);
      entry.e = efficiency(entry.s, entry.p);
      if (entry.e > best_e) {
        best_e = entry.e;
        report.optimal_p = entry.p;
      }
    }
  }
  return report;
}

void BenchReport::write_csv(std::ostream& out) const {
  out << "P,Tp_seconds,S,E\n";
  for (const auto& e : entries) {
    if (e.failed) {
      out << e.p << ",FAILED,," << '\n';
      continue;
    }
    out << e.p << ',' << format_double(e.tp_seconds) << ',' << format_double(e.s) << ','
        << format_double(e.e) << '\n';
  }
}

json BenchReport::to_json() const {
  json j;
  j["dataset"] = dataset;
  j["config"] = config_label;
  j["total_runs"] = total_runs;
  j["master_seed"] = master_seed;
  j["optimal_p"] = optimal_p;
  j["entries"] = json::array();
  for (const auto& e : entries) {
    json entry{{"p", e.p}, {"failed", e.failed}};
    if (e.failed) {
      entry["error"] = e.error;
    } else {
      entry["tp_seconds"] = e.tp_seconds;
      entry["speedup"] = e.s;
      entry["efficiency"] = e.e;
      entry["speedup_4dp"] = format_ratio_4dp(e.s);
      entry["efficiency_4dp"] = format_ratio_4dp(e.e);
    }
    j["entries"].push_back(std::move(entry));
  }
  return j;
}

}  // namespace punn
