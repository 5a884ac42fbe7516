#include "punn/evolution.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "json.hpp"

namespace punn {

namespace {

constexpr double kHugeError = 1e300;

double uniform_in(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

bool coin(Rng& rng) { return uniform_in(rng, 0.0, 1.0) < 0.5; }

// First k of 0..n-1 by partial Fisher-Yates; deterministic for a given rng.
// Selecting the whole pool consumes no draws, so a full-pool perturbation is
// reproducible from the bare Gaussian stream.
std::vector<int> choose_k(Rng& rng, int n, int k) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  if (k >= n) return idx;
  for (int j = 0; j < k; ++j) std::swap(idx[j], idx[j + uniform_int(rng, 0, n - 1 - j)]);
  idx.resize(k);
  return idx;
}

// Random non-empty input subset with fresh exponents.
HiddenNode random_hidden_node(Rng& rng, int n_inputs, const EAParams& p) {
  HiddenNode node;
  while (node.exponents.empty()) {
    for (int i = 0; i < n_inputs; ++i)
      if (coin(rng)) node.exponents[i] = uniform_in(rng, p.weight_init_min, p.weight_init_max);
  }
  return node;
}

struct LinkRef {
  int node;
  int key;  // input index (hidden side) or hidden index (output side); -1 = bias
};

std::vector<LinkRef> input_links(const PUNetwork& net) {
  std::vector<LinkRef> refs;
  for (int m = 0; m < static_cast<int>(net.hidden.size()); ++m)
    for (const auto& [i, w] : net.hidden[m].exponents) refs.push_back({m, i});
  return refs;
}

std::vector<LinkRef> output_params(const PUNetwork& net) {
  std::vector<LinkRef> refs;
  for (int j = 0; j < static_cast<int>(net.outputs.size()); ++j) {
    refs.push_back({j, -1});
    for (const auto& [m, b] : net.outputs[j].coeffs) refs.push_back({j, m});
  }
  return refs;
}

int count_to_mutate(std::size_t pool, double fraction) {
  if (pool == 0) return 0;
  return std::max(1, static_cast<int>(std::lround(fraction * static_cast<double>(pool))));
}

// ---- structural operators -------------------------------------------------

void op_add_nodes(PUNetwork& net, const EAParams& p, Rng& rng) {
  const int room = p.max_hidden - static_cast<int>(net.hidden.size());
  if (room <= 0) return;
  int count = uniform_int(rng, p.nodes_per_op_min, p.nodes_per_op_max);
  count = std::min(count, room);
  for (int t = 0; t < count; ++t) {
    net.hidden.push_back(random_hidden_node(rng, net.n_inputs, p));
    const int m = static_cast<int>(net.hidden.size()) - 1;
    for (auto& out : net.outputs)
      if (coin(rng)) out.coeffs[m] = uniform_in(rng, p.coeff_init_min, p.coeff_init_max);
  }
}

void op_delete_nodes(PUNetwork& net, const EAParams& p, Rng& rng) {
  const int h = static_cast<int>(net.hidden.size());
  if (h <= 1) return;
  int count = uniform_int(rng, p.nodes_per_op_min, p.nodes_per_op_max);
  count = std::min(count, h - 1);
  std::vector<int> victims = choose_k(rng, h, count);
  std::sort(victims.begin(), victims.end(), std::greater<int>());
  for (int v : victims) {
    net.hidden.erase(net.hidden.begin() + v);
    for (auto& out : net.outputs) {
      std::map<int, double> remapped;
      for (const auto& [m, b] : out.coeffs) {
        if (m == v) continue;
        remapped[m > v ? m - 1 : m] = b;
      }
      out.coeffs = std::move(remapped);
    }
  }
}

void op_add_connection(PUNetwork& net, const EAParams& p, Rng& rng) {
  std::vector<LinkRef> absent_in, absent_out;
  for (int m = 0; m < static_cast<int>(net.hidden.size()); ++m)
    for (int i = 0; i < net.n_inputs; ++i)
      if (!net.hidden[m].exponents.count(i)) absent_in.push_back({m, i});
  for (int j = 0; j < static_cast<int>(net.outputs.size()); ++j)
    for (int m = 0; m < static_cast<int>(net.hidden.size()); ++m)
      if (!net.outputs[j].coeffs.count(m)) absent_out.push_back({j, m});
  const int total = static_cast<int>(absent_in.size() + absent_out.size());
  if (total == 0) return;
  const int pick = uniform_int(rng, 0, total - 1);
  if (pick < static_cast<int>(absent_in.size())) {
    const LinkRef r = absent_in[pick];
    net.hidden[r.node].exponents[r.key] = uniform_in(rng, p.weight_init_min, p.weight_init_max);
  } else {
    const LinkRef r = absent_out[pick - static_cast<int>(absent_in.size())];
    net.outputs[r.node].coeffs[r.key] = uniform_in(rng, p.coeff_init_min, p.coeff_init_max);
  }
}

void op_delete_connection(PUNetwork& net, Rng& rng) {
  // Input links are deletable only when the hidden node keeps at least one
  // input; output links are always deletable (bias stays).
  struct Deletable {
    bool input_side;
    LinkRef ref;
  };
  std::vector<Deletable> pool;
  for (int m = 0; m < static_cast<int>(net.hidden.size()); ++m)
    if (net.hidden[m].exponents.size() >= 2)
      for (const auto& [i, w] : net.hidden[m].exponents) pool.push_back({true, {m, i}});
  for (int j = 0; j < static_cast<int>(net.outputs.size()); ++j)
    for (const auto& [m, b] : net.outputs[j].coeffs) pool.push_back({false, {j, m}});
  if (pool.empty()) return;
  const Deletable d = pool[uniform_int(rng, 0, static_cast<int>(pool.size()) - 1)];
  if (d.input_side)
    net.hidden[d.ref.node].exponents.erase(d.ref.key);
  else
    net.outputs[d.ref.node].coeffs.erase(d.ref.key);
}

}  // namespace

void EAParams::validate() const {
  if (population_size < 10) throw std::invalid_argument("params: population_size must be >= 10");
  if (max_generations < 0) throw std::invalid_argument("params: max_generations must be >= 0");
  if (max_hidden < 1) throw std::invalid_argument("params: max_hidden must be >= 1");
  if (!(weight_init_min < weight_init_max) || !(coeff_init_min < coeff_init_max))
    throw std::invalid_argument("params: degenerate init range");
  if (std::abs(parametric_fraction + structural_fraction - 1.0) > 1e-9)
    throw std::invalid_argument("params: mutation fractions must sum to 1");
  if (parametric_fraction <= 0.0 || structural_fraction <= 0.0)
    throw std::invalid_argument("params: mutation fractions must be positive");
  if (alpha1_init <= 0.0 || alpha2_init <= 0.0)
    throw std::invalid_argument("params: alpha inits must be > 0");
  if (input_link_mutation_pct <= 0.0 || input_link_mutation_pct > 1.0 ||
      output_link_mutation_pct <= 0.0 || output_link_mutation_pct > 1.0)
    throw std::invalid_argument("params: link mutation percentages must be in (0,1]");
  if (nodes_per_op_min < 1 || nodes_per_op_max < nodes_per_op_min)
    throw std::invalid_argument("params: bad nodes_per_op range");
  if (one_fifth_window < 1) throw std::invalid_argument("params: one_fifth_window must be >= 1");
  if (!(one_fifth_factor > 0.0 && one_fifth_factor < 1.0))
    throw std::invalid_argument("params: one_fifth_factor must be in (0,1)");
}

nlohmann::json EAParams::to_json() const {
  return nlohmann::json{{"population_size", population_size},
                        {"max_generations", max_generations},
                        {"max_hidden", max_hidden},
                        {"weight_init_min", weight_init_min},
                        {"weight_init_max", weight_init_max},
                        {"coeff_init_min", coeff_init_min},
                        {"coeff_init_max", coeff_init_max},
                        {"parametric_fraction", parametric_fraction},
                        {"structural_fraction", structural_fraction},
                        {"alpha1_init", alpha1_init},
                        {"alpha2_init", alpha2_init},
                        {"input_link_mutation_pct", input_link_mutation_pct},
                        {"output_link_mutation_pct", output_link_mutation_pct},
                        {"nodes_per_op_min", nodes_per_op_min},
                        {"nodes_per_op_max", nodes_per_op_max},
                        {"one_fifth_window", one_fifth_window},
                        {"one_fifth_factor", one_fifth_factor},
                        {"full_output_layer", full_output_layer}};
}

EAParams EAParams::from_json(const nlohmann::json& j) {
  EAParams p;
  p.population_size = j.at("population_size").get<int>();
  p.max_generations = j.at("max_generations").get<int>();
  p.max_hidden = j.at("max_hidden").get<int>();
  p.weight_init_min = j.at("weight_init_min").get<double>();
  p.weight_init_max = j.at("weight_init_max").get<double>();
  p.coeff_init_min = j.at("coeff_init_min").get<double>();
  p.coeff_init_max = j.at("coeff_init_max").get<double>();
  p.parametric_fraction = j.at("parametric_fraction").get<double>();
  p.structural_fraction = j.at("structural_fraction").get<double>();
  p.alpha1_init = j.at("alpha1_init").get<double>();
  p.alpha2_init = j.at("alpha2_init").get<double>();
  p.input_link_mutation_pct = j.at("input_link_mutation_pct").get<double>();
  p.output_link_mutation_pct = j.at("output_link_mutation_pct").get<double>();
  p.nodes_per_op_min = j.at("nodes_per_op_min").get<int>();
  p.nodes_per_op_max = j.at("nodes_per_op_max").get<int>();
  p.one_fifth_window = j.at("one_fifth_window").get<int>();
  p.one_fifth_factor = j.at("one_fifth_factor").get<double>();
  p.full_output_layer = j.at("full_output_layer").get<bool>();
  return p;
}

void evaluate_individual(Individual& ind, const Partition& train) {
  double err = cross_entropy(ind.net, train);
  if (!std::isfinite(err)) err = kHugeError;
  ind.error = err;
  ind.fitness = fitness_from_error(err);
}

std::vector<Individual> init_population(const EAParams& params, const Partition& train, Rng& rng) {
  params.validate();
  const int k = static_cast<int>(train.n_features());
  const int l = static_cast<int>(train.y.cols());
  const int n_outputs = params.full_output_layer ? l : l - 1;

  std::vector<Individual> pop(params.population_size);
  for (auto& ind : pop) {
    PUNetwork& net = ind.net;
    net.n_inputs = k;
    net.n_classes = l;
    const int h = uniform_int(rng, 1, params.max_hidden);
    net.hidden.reserve(h);
    for (int m = 0; m < h; ++m) net.hidden.push_back(random_hidden_node(rng, k, params));
    net.outputs.resize(n_outputs);
    for (auto& out : net.outputs) {
      out.bias = uniform_in(rng, params.coeff_init_min, params.coeff_init_max);
      for (int m = 0; m < h; ++m)
        if (coin(rng)) out.coeffs[m] = uniform_in(rng, params.coeff_init_min, params.coeff_init_max);
    }
    evaluate_individual(ind, train);
  }
  return pop;
}

double temperature(const Individual& ind) {
  if (!(ind.fitness > 0.0 && ind.fitness <= 1.0))
    throw std::invalid_argument("temperature: fitness outside (0,1]");
  return 1.0 - ind.fitness;
}

void perturb_parameters(PUNetwork& net, double input_fraction, double output_fraction,
                        double sigma_in, double sigma_out, Rng& rng) {
  const std::vector<LinkRef> in_links = input_links(net);
  const int k_in = count_to_mutate(in_links.size(), input_fraction);
  if (k_in > 0 && sigma_in > 0.0) {
    std::normal_distribution<double> noise(0.0, sigma_in);
    for (int idx : choose_k(rng, static_cast<int>(in_links.size()), k_in)) {
      const LinkRef r = in_links[idx];
      net.hidden[r.node].exponents[r.key] += noise(rng);
    }
  }
  const std::vector<LinkRef> out_links = output_params(net);
  const int k_out = count_to_mutate(out_links.size(), output_fraction);
  if (k_out > 0 && sigma_out > 0.0) {
    std::normal_distribution<double> noise(0.0, sigma_out);
    for (int idx : choose_k(rng, static_cast<int>(out_links.size()), k_out)) {
      const LinkRef r = out_links[idx];
      if (r.key < 0)
        net.outputs[r.node].bias += noise(rng);
      else
        net.outputs[r.node].coeffs[r.key] += noise(rng);
    }
  }
}

MutationOutcome parametric_mutation(Individual& ind, double alpha1, double alpha2,
                                    const EAParams& params, const Partition& train, Rng& rng) {
  if (alpha1 <= 0.0 || alpha2 <= 0.0)
    throw std::invalid_argument("parametric_mutation: alphas must be > 0");
  const double t = temperature(ind);
  if (t <= 0.0) return {false, false};  // zero variance, exact no-op

  Individual candidate = ind;
  perturb_parameters(candidate.net, params.input_link_mutation_pct,
                     params.output_link_mutation_pct, alpha1 * t, alpha2 * t, rng);
  evaluate_individual(candidate, train);

  MutationOutcome out;
  out.improved = candidate.fitness > ind.fitness;
  out.accepted = candidate.fitness >= ind.fitness;
  if (out.accepted) ind = std::move(candidate);
  return out;
}

double update_variance_one_fifth(double success_ratio, double alpha, double factor) {
  if (!(success_ratio >= 0.0 && success_ratio <= 1.0))
    throw std::invalid_argument("one_fifth: ratio outside [0,1]");
  if (!(alpha > 0.0)) throw std::invalid_argument("one_fifth: alpha must be > 0");
  if (!(factor > 0.0 && factor < 1.0)) throw std::invalid_argument("one_fifth: factor outside (0,1)");
  constexpr double kTarget = 0.2;
  if (success_ratio > kTarget) return alpha / factor;
  if (success_ratio < kTarget) return alpha * factor;
  return alpha;
}

void structural_mutation(Individual& ind, const EAParams& params, const Partition& train,
                         Rng& rng) {
  const double t = temperature(ind);
  PUNetwork& net = ind.net;

  const auto apply = [&](int op) {
    switch (op) {
      case 0: op_add_nodes(net, params, rng); break;
      case 1: op_delete_nodes(net, params, rng); break;
      case 2: op_add_connection(net, params, rng); break;
      case 3: op_delete_connection(net, rng); break;
    }
  };

  bool any_fired = false;
  for (int op = 0; op < 4; ++op) {
    if (uniform_in(rng, 0.0, 1.0) < t) {
      any_fired = true;
      apply(op);
    }
  }
  if (!any_fired) apply(uniform_int(rng, 0, 3));

  evaluate_individual(ind, train);
}

GenerationStats evolve_generation(std::vector<Individual>& population, const EAParams& params,
                                  const Partition& train, double alpha1, double alpha2,
                                  std::uint64_t gen_seed) {
  const int n = static_cast<int>(population.size());
  std::stable_sort(population.begin(), population.end(),
                   [](const Individual& a, const Individual& b) { return a.fitness > b.fitness; });

  const int n_top = std::max(1, static_cast<int>(std::lround(n * params.parametric_fraction)));

  // Replication: the best 10% overwrite the worst 10%.
  for (int i = 0; i < n_top; ++i) population[n - n_top + i] = population[i];

  GenerationStats stats;
  for (int i = 1; i < n_top; ++i) {
    Rng rng = make_rng(gen_seed, static_cast<std::uint64_t>(i));
    const MutationOutcome out =
        parametric_mutation(population[i], alpha1, alpha2, params, train, rng);
    ++stats.parametric_attempts;
    if (out.improved) ++stats.parametric_successes;
  }
  for (int i = n_top; i < n; ++i) {
    Rng rng = make_rng(gen_seed, static_cast<std::uint64_t>(i));
    structural_mutation(population[i], params, train, rng);
  }
  return stats;
}

RunResult run_ea(const EAParams& params, const SplitDataset& data, std::uint64_t seed) {
  params.validate();
  if (data.train.size() == 0 || data.test.size() == 0)
    throw std::invalid_argument("run_ea: empty partition");
  if (data.train.n_features() != data.test.n_features())
    throw std::invalid_argument("run_ea: train/test feature count mismatch");
  if (data.n_classes < 2) throw std::invalid_argument("run_ea: need at least 2 classes");

  const auto t0 = std::chrono::steady_clock::now();

  Rng init_rng = make_rng(seed, 0x696e6974ULL);  // dedicated init stream
  std::vector<Individual> pop = init_population(params, data.train, init_rng);

  double alpha1 = params.alpha1_init;
  double alpha2 = params.alpha2_init;
  int window_attempts = 0;
  int window_successes = 0;

  const auto best_of = [](const std::vector<Individual>& p) {
    const Individual* best = &p.front();
    for (const auto& ind : p)
      if (ind.fitness > best->fitness) best = &ind;
    return best;
  };

  EvolutionTrace trace;
  trace.reserve(params.max_generations + 1);
  const auto record = [&](int gen, const GenerationStats& stats) {
    const Individual* best = best_of(pop);
    double mean = 0.0;
    for (const auto& ind : pop) mean += ind.fitness;
    mean /= static_cast<double>(pop.size());
    GenerationRecord rec;
    rec.generation = gen;
    rec.best_fitness = best->fitness;
    rec.mean_fitness = mean;
    rec.best_train_ccr = ccr(best->net, data.train);
    rec.alpha1 = alpha1;
    rec.alpha2 = alpha2;
    rec.success_ratio = stats.parametric_attempts > 0
                            ? static_cast<double>(stats.parametric_successes) /
                                  static_cast<double>(stats.parametric_attempts)
                            : 0.0;
    trace.push_back(rec);
  };

  record(0, GenerationStats{});
  for (int gen = 1; gen <= params.max_generations; ++gen) {
    const GenerationStats stats =
        evolve_generation(pop, params, data.train, alpha1, alpha2, seed_combine(seed, gen));
    window_attempts += stats.parametric_attempts;
    window_successes += stats.parametric_successes;
    if (gen % params.one_fifth_window == 0 && window_attempts > 0) {
      const double ratio = static_cast<double>(window_successes) / window_attempts;
      alpha1 = update_variance_one_fifth(ratio, alpha1, params.one_fifth_factor);
      alpha2 = update_variance_one_fifth(ratio, alpha2, params.one_fifth_factor);
      window_attempts = 0;
      window_successes = 0;
    }
    record(gen, stats);
  }

  RunResult result;
  result.best = *best_of(pop);
  result.train_ccr = ccr(result.best.net, data.train);
  result.test_ccr = ccr(result.best.net, data.test);
  result.connections = count_connections(result.best.net);
  result.topology = result.best.net.topology();
  result.seed = seed;
  result.trace = std::move(trace);
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace punn
