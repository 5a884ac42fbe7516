#include "punn/grid.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace punn {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

int scaled_gen(int gen) { return static_cast<int>(std::lround(0.8 * gen)); }

ExperimentConfig make_config(const BaseConfig& base, std::string label, int neu, int gen,
                             std::optional<double> alpha2) {
  ExperimentConfig cfg;
  cfg.label = std::move(label);
  cfg.dataset = base.dataset;
  cfg.params = base.common;
  cfg.params.max_hidden = neu;
  cfg.params.max_generations = gen;
  if (alpha2) cfg.params.alpha2_init = *alpha2;
  cfg.params.validate();
  return cfg;
}

}  // namespace

BaseConfig base_config_for(const std::string& dataset_name) {
  BaseConfig base;
  base.dataset = dataset_name;
  const std::string name = lower(dataset_name);
  if (name == "balance") {
    base.neu = 5;
    base.gen = 150;
    base.alpha2 = 1.0;
  } else if (name == "cancer") {
    base.neu = 2;
    base.gen = 100;
    base.alpha2 = 1.0;
  } else if (name == "pima") {
    base.neu = 3;
    base.gen = 120;
    base.alpha2 = 1.0;
  } else if (name == "hypothyroid") {
    base.neu = 3;
    base.gen = 500;
  } else if (name == "waveform") {
    base.neu = 3;
    base.gen = 500;
  } else {
    throw std::invalid_argument("base_config_for: unknown dataset '" + dataset_name +
                                "' (supply neu/gen explicitly)");
  }
  return base;
}

nlohmann::json ExperimentConfig::to_json() const {
  return nlohmann::json{{"label", label}, {"dataset", dataset}, {"params", params.to_json()}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.label = j.at("label").get<std::string>();
  cfg.dataset = j.at("dataset").get<std::string>();
  cfg.params = EAParams::from_json(j.at("params"));
  return cfg;
}

std::vector<ExperimentConfig> expand_grid_3param(const BaseConfig& base) {
  if (!base.alpha2)
    throw std::invalid_argument(
        "expand_grid_3param: base has no alpha2; use the 2-parameter grid");
  const int neu = base.neu;
  const int gen = base.gen;
  const int gen8 = scaled_gen(gen);
  const double a2 = *base.alpha2;
  const double a2h = 1.5 * a2;

  std::vector<ExperimentConfig> grid;
  grid.push_back(make_config(base, "1", neu, gen, a2));
  grid.push_back(make_config(base, "2", neu + 1, gen, a2));
  grid.push_back(make_config(base, "3", neu, gen, a2h));
  grid.push_back(make_config(base, "4", neu + 1, gen, a2h));
  grid.push_back(make_config(base, "5", neu, gen8, a2));
  grid.push_back(make_config(base, "6", neu + 1, gen8, a2));
  grid.push_back(make_config(base, "7", neu, gen8, a2h));
  grid.push_back(make_config(base, "8", neu + 1, gen8, a2h));
  return grid;
}

std::vector<ExperimentConfig> expand_grid_2param(const BaseConfig& base) {
  const int neu = base.neu;
  const int gen = base.gen;
  const int gen8 = scaled_gen(gen);

  std::vector<ExperimentConfig> grid;
  for (int i = 0; i < 8; ++i) {
    const int cfg_neu = neu + (i % 4);
    const int cfg_gen = i < 4 ? gen : gen8;
    grid.push_back(make_config(base, std::to_string(i + 1) + "*", cfg_neu, cfg_gen, base.alpha2));
  }
  return grid;
}

std::vector<RunAssignment> split_runs(int total_runs, int workers, std::uint64_t master_seed) {
  if (total_runs < 1) throw std::invalid_argument("split_runs: total_runs must be >= 1");
  if (workers < 1) throw std::invalid_argument("split_runs: workers must be >= 1");

  const int used = std::min(workers, total_runs);
  const int base_size = total_runs / used;
  const int remainder = total_runs % used;

  std::vector<RunAssignment> out;
  out.reserve(used);
  int next = 0;
  for (int w = 0; w < used; ++w) {
    RunAssignment a;
    a.worker_index = w;
    const int size = base_size + (w < remainder ? 1 : 0);
    a.runs.reserve(size);
    for (int r = 0; r < size; ++r, ++next)
      a.runs.emplace_back(next, master_seed + static_cast<std::uint64_t>(next));
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace punn
