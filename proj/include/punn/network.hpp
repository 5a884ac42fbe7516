#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "punn/dataset.hpp"

namespace punn {

// Product-unit network: one hidden layer of product units
//   h_m(x) = prod_i x_i^(w_mi)   over the node's connected inputs,
// and a linear output layer
//   f_j(x) = b_j + sum_m beta_jm * h_m(x)
// feeding a softmax. With the reference-class parameterization the network
// carries l-1 output nodes and f_l = 0; a full output layer (l nodes) is
// also supported.
//
// Connectivity is sparse: hidden nodes hold {input index -> exponent},
// output nodes hold a bias plus {hidden index -> coefficient}. Ordered maps
// keep iteration deterministic.

struct HiddenNode {
  std::map<int, double> exponents;
};

struct OutputNode {
  double bias = 0.0;
  std::map<int, double> coeffs;
};

struct PUNetwork {
  int n_inputs = 0;
  int n_classes = 0;
  std::vector<HiddenNode> hidden;
  std::vector<OutputNode> outputs;

  bool reference_class() const {
    return static_cast<int>(outputs.size()) == n_classes - 1;
  }

  // "inputs:hidden:outputs", e.g. "4:5:2"
  std::string topology() const;

  // Throws std::invalid_argument when a structural invariant is broken:
  // out-of-range connection index, non-finite parameter, hidden count outside
  // [1, max_hidden], an input-less hidden node, or an output layer that is
  // neither l-1 nor l wide.
  void check_valid(int max_hidden) const;
};

// h_m(x) per hidden node. Every connected x_i must be > 0 (the [1,2]
// normalization guarantees it); a non-positive component signals
// un-normalized data and raises std::domain_error.
std::vector<double> hidden_outputs(const PUNetwork& net, std::span<const double> x);

// f_j(x) for j = 1..l. In reference-class mode the last entry is 0.
std::vector<double> raw_outputs(const PUNetwork& net, std::span<const double> x);

// Max-shifted softmax; sums to 1, every component in (0,1).
std::vector<double> softmax(std::span<const double> f);

// Mean cross-entropy l(R) over a partition, computed in the stable
// log-sum-exp form. Throws std::invalid_argument on an empty partition.
double cross_entropy(const PUNetwork& net, const Partition& part);

// A(R) = 1 / (1 + error). Throws std::invalid_argument for error < 0.
double fitness_from_error(double error);

// Correct classification rate in percent; argmax ties resolve to the lowest
// class index. Throws std::invalid_argument on an empty partition.
double ccr(const PUNetwork& net, const Partition& part);

// Input->hidden links + hidden->output links + output biases.
int count_connections(const PUNetwork& net);

}  // namespace punn
