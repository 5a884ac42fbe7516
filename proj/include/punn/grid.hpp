#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "punn/evolution.hpp"

namespace punn {

// Base configuration a node grid is derived from: hidden-node budget (neu),
// generation budget (gen) and, for the 3-parameter grid, the output-layer
// mutation variance (alpha2).
struct BaseConfig {
  std::string dataset;
  int neu = 1;
  int gen = 1;
  std::optional<double> alpha2;
  EAParams common;  // everything else
};

// Published base values: Balance (5, 150, 1), Cancer (2, 100, 1),
// Pima (3, 120, 1), Hypothyroid (3, 500, -), Waveform (3, 500, -).
// Throws std::invalid_argument for an unknown dataset name.
BaseConfig base_config_for(const std::string& dataset_name);

// One grid cell, fully resolved. `label` is "1".."8" for the 3-parameter
// grid and "1*".."8*" for the 2-parameter grid.
struct ExperimentConfig {
  std::string label = "1";
  std::string dataset;
  EAParams params;  // neu/gen/alpha2 resolved into max_hidden/max_generations/alpha2_init

  int neu() const { return params.max_hidden; }
  int gen() const { return params.max_generations; }
  double alpha2() const { return params.alpha2_init; }

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
};

// 8-cell grid crossing (neu | neu+1) x (gen | 0.8*gen) x (alpha2 | 1.5*alpha2):
//   cfg:    1    2     3    4     5    6     7    8
//   neu:    n    n+1   n    n+1   n    n+1   n    n+1
//   gen:    g    g     g    g     .8g  .8g   .8g  .8g
//   a2:     a    a     1.5a 1.5a  a    a     1.5a 1.5a
// Requires alpha2 in the base; throws std::invalid_argument pointing at the
// 2-parameter grid otherwise.
std::vector<ExperimentConfig> expand_grid_3param(const BaseConfig& base);

// 8-cell grid crossing neu+{0,1,2,3} x (gen | 0.8*gen):
//   cfg:    1*   2*    3*   4*    5*   6*    7*   8*
//   neu:    n    n+1   n+2  n+3   n    n+1   n+2  n+3
//   gen:    g    g     g    g     .8g  .8g   .8g  .8g
std::vector<ExperimentConfig> expand_grid_2param(const BaseConfig& base);

// Contiguous near-equal blocks of (run index, seed); run i always carries
// seed master_seed + i, so the result set does not depend on worker count.
struct RunAssignment {
  int worker_index = 0;
  std::vector<std::pair<int, std::uint64_t>> runs;
};

std::vector<RunAssignment> split_runs(int total_runs, int workers, std::uint64_t master_seed);

}  // namespace punn
