#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "punn/network.hpp"
#include "punn/random.hpp"

namespace punn {

// Evolutionary-programming parameters. Defaults are the common experimental
// configuration: population 1000, init ranges [-5,5], parametric mutation on
// the best 10% / structural on the remaining 90%, alpha1=0.5 / alpha2=1,
// 30% / 5% link mutation rates, 1..2 nodes per structural node operator.
struct EAParams {
  int population_size = 1000;
  int max_generations = 100;  // gen
  int max_hidden = 3;         // neu
  double weight_init_min = -5.0;
  double weight_init_max = 5.0;
  double coeff_init_min = -5.0;
  double coeff_init_max = 5.0;
  double parametric_fraction = 0.10;
  double structural_fraction = 0.90;
  double alpha1_init = 0.5;
  double alpha2_init = 1.0;
  double input_link_mutation_pct = 0.30;
  double output_link_mutation_pct = 0.05;
  int nodes_per_op_min = 1;
  int nodes_per_op_max = 2;
  int one_fifth_window = 10;
  double one_fifth_factor = 0.85;
  bool full_output_layer = false;  // l output nodes instead of l-1

  void validate() const;  // throws std::invalid_argument
  nlohmann::json to_json() const;
  static EAParams from_json(const nlohmann::json& j);
};

struct Individual {
  PUNetwork net;
  double error = 0.0;    // cached l(R)
  double fitness = 0.0;  // cached A(R) = 1/(1+error)
};

struct GenerationRecord {
  int generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  double best_train_ccr = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double success_ratio = 0.0;  // parametric successes / attempts this generation
};

using EvolutionTrace = std::vector<GenerationRecord>;

struct RunResult {
  Individual best;
  double train_ccr = 0.0;
  double test_ccr = 0.0;
  int connections = 0;
  std::string topology;
  double seconds = 0.0;
  std::uint64_t seed = 0;
  EvolutionTrace trace;
};

// Evaluates the network on the train partition and caches error/fitness.
// Non-finite cross-entropy (overflowing exponents) is treated as a huge
// error, which keeps fitness in (0,1] and lets selection cull the network.
void evaluate_individual(Individual& ind, const Partition& train);

// Fresh random population: hidden count uniform in [1, neu], every hidden
// node wired to a non-empty random input subset, outputs to a random hidden
// subset plus bias. Fitness is cached against `train`.
std::vector<Individual> init_population(const EAParams& params, const Partition& train, Rng& rng);

// T(R) = 1 - A(R).
double temperature(const Individual& ind);

// In-place Gaussian perturbation used by parametric mutation: a fraction of
// input exponents gets sigma_in noise, a fraction of output parameters
// (biases included) gets sigma_out noise. Draw order is fixed: input-link
// selection (partial Fisher-Yates over links in hidden-major map order), one
// normal draw per selected link, then the same for output parameters
// (bias first, then coefficients, output-major).
void perturb_parameters(PUNetwork& net, double input_fraction, double output_fraction,
                        double sigma_in, double sigma_out, Rng& rng);

struct MutationOutcome {
  bool accepted = false;  // candidate kept (fitness did not worsen)
  bool improved = false;  // fitness strictly increased
};

// Simulated-annealing parametric step: perturb with standard deviations
// alpha1*T(R) and alpha2*T(R), keep the candidate only if fitness does not
// worsen. T(R)=0 is an exact no-op.
MutationOutcome parametric_mutation(Individual& ind, double alpha1, double alpha2,
                                    const EAParams& params, const Partition& train, Rng& rng);

// Rechenberg 1/5 rule: grow alpha when more than a fifth of mutations
// succeed, shrink below a fifth, hold at exactly a fifth.
double update_variance_one_fifth(double success_ratio, double alpha, double factor);

// Node addition, node deletion, connection addition and connection deletion,
// attempted sequentially, each firing with probability T(R); when none fires
// one is picked uniformly. Infeasible operations are skipped. The mutated
// network always satisfies the structural invariants; fitness is recomputed.
void structural_mutation(Individual& ind, const EAParams& params, const Partition& train,
                         Rng& rng);

struct GenerationStats {
  int parametric_attempts = 0;
  int parametric_successes = 0;
};

// One generation: sort by fitness, copy the best 10% over the worst 10%,
// parametric-mutate the best 10% (the single best individual is exempt),
// structural-mutate the remaining 90%. Each slot draws from its own RNG
// stream derived from gen_seed, so evaluation order cannot change results.
GenerationStats evolve_generation(std::vector<Individual>& population, const EAParams& params,
                                  const Partition& train, double alpha1, double alpha2,
                                  std::uint64_t gen_seed);

// Full seeded run: init, max_generations updates, variance adaptation every
// one_fifth_window generations, final train/test evaluation of the best
// individual. trace[0] records the initial population.
RunResult run_ea(const EAParams& params, const SplitDataset& data, std::uint64_t seed);

}  // namespace punn
