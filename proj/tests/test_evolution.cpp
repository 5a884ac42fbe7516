#include <cmath>
#include <set>

#include "doctest.h"
#include "punn/builtin_data.hpp"
#include "punn/evolution.hpp"

using namespace punn;

namespace {

// Small fixture: 24 patterns, 3 features, 2 classes, threshold on feature 0.
Partition tiny_train() {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> feat(1.0, 2.0);
  Matrix x(24, 3);
  std::vector<int> labels(24);
  for (int i = 0; i < 24; ++i) {
    for (int c = 0; c < 3; ++c) x(i, c) = feat(rng);
    labels[i] = x(i, 0) > 1.5 ? 0 : 1;
  }
  return Partition::from_features(std::move(x), std::move(labels), 2);
}

SplitDataset tiny_split() {
  SplitDataset s;
  s.name = "tiny";
  s.n_classes = 2;
  s.feature_names = {"a", "b", "c"};
  s.feature_min = {1, 1, 1};
  s.feature_max = {2, 2, 2};
  s.train = tiny_train();
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> feat(1.0, 2.0);
  Matrix x(10, 3);
  std::vector<int> labels(10);
  for (int i = 0; i < 10; ++i) {
    for (int c = 0; c < 3; ++c) x(i, c) = feat(rng);
    labels[i] = x(i, 0) > 1.5 ? 0 : 1;
  }
  s.test = Partition::from_features(std::move(x), std::move(labels), 2);
  return s;
}

EAParams tiny_params() {
  EAParams p;
  p.population_size = 20;
  p.max_generations = 5;
  p.max_hidden = 3;
  return p;
}

nlohmann::json net_json(const PUNetwork& net) {
  nlohmann::json j;
  j["hidden"] = nlohmann::json::array();
  for (const auto& h : net.hidden) {
    nlohmann::json node;
    for (const auto& [i, w] : h.exponents) node[std::to_string(i)] = w;
    j["hidden"].push_back(node);
  }
  j["outputs"] = nlohmann::json::array();
  for (const auto& o : net.outputs) {
    nlohmann::json node{{"bias", o.bias}};
    for (const auto& [m, b] : o.coeffs) node[std::to_string(m)] = b;
    j["outputs"].push_back(node);
  }
  return j;
}

}  // namespace

TEST_CASE("EAParams defaults follow the common configuration") {
  const EAParams p;
  CHECK(p.population_size == 1000);
  CHECK(p.weight_init_min == -5.0);
  CHECK(p.weight_init_max == 5.0);
  CHECK(p.parametric_fraction == doctest::Approx(0.10));
  CHECK(p.structural_fraction == doctest::Approx(0.90));
  CHECK(p.alpha1_init == doctest::Approx(0.5));
  CHECK(p.alpha2_init == doctest::Approx(1.0));
  CHECK(p.input_link_mutation_pct == doctest::Approx(0.30));
  CHECK(p.output_link_mutation_pct == doctest::Approx(0.05));
  CHECK(p.nodes_per_op_min == 1);
  CHECK(p.nodes_per_op_max == 2);
  CHECK_NOTHROW(p.validate());

  EAParams bad = p;
  bad.parametric_fraction = 0.2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.population_size = 5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  const EAParams round_tripped = EAParams::from_json(p.to_json());
  CHECK(round_tripped.to_json() == p.to_json());
}

TEST_CASE("init_population") {
  const Partition train = tiny_train();

  SUBCASE("every individual satisfies the structural invariants") {
    EAParams p = tiny_params();
    p.population_size = 50;
    Rng rng = make_rng(4);
    const std::vector<Individual> pop = init_population(p, train, rng);
    CHECK(pop.size() == 50);
    for (const auto& ind : pop) {
      CHECK_NOTHROW(ind.net.check_valid(p.max_hidden));
      CHECK(ind.fitness > 0.0);
      CHECK(ind.fitness <= 1.0);
      CHECK(ind.fitness == doctest::Approx(1.0 / (1.0 + ind.error)));
      CHECK(static_cast<int>(ind.net.outputs.size()) == 1);  // l-1 mode
    }
  }

  SUBCASE("neu=1 forces a single hidden node everywhere") {
    EAParams p = tiny_params();
    p.max_hidden = 1;
    Rng rng = make_rng(4);
    for (const auto& ind : init_population(p, train, rng))
      CHECK(ind.net.hidden.size() == 1);
  }

  SUBCASE("hidden counts cover the whole [1, neu] range") {
    EAParams p = tiny_params();
    p.population_size = 200;
    p.max_hidden = 3;
    Rng rng = make_rng(4);
    std::set<std::size_t> seen;
    for (const auto& ind : init_population(p, train, rng)) seen.insert(ind.net.hidden.size());
    CHECK(seen == std::set<std::size_t>{1, 2, 3});
  }

  SUBCASE("identical seeds give identical populations") {
    const EAParams p = tiny_params();
    Rng a = make_rng(9), b = make_rng(9);
    const auto pa = init_population(p, train, a);
    const auto pb = init_population(p, train, b);
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
      CHECK(net_json(pa[i].net) == net_json(pb[i].net));
      CHECK(pa[i].fitness == pb[i].fitness);
    }
  }

  SUBCASE("full output layer mode") {
    EAParams p = tiny_params();
    p.full_output_layer = true;
    Rng rng = make_rng(4);
    for (const auto& ind : init_population(p, train, rng))
      CHECK(static_cast<int>(ind.net.outputs.size()) == 2);
  }
}

TEST_CASE("temperature") {
  Individual ind;
  ind.net = PUNetwork{};
  ind.fitness = 1.0;
  CHECK(temperature(ind) == doctest::Approx(0.0));
  ind.fitness = 0.5;
  CHECK(temperature(ind) == doctest::Approx(0.5));
  ind.fitness = 1.0 / (1.0 + std::log(3.0));
  CHECK(temperature(ind) == doctest::Approx(0.5235).epsilon(1e-4));
  ind.fitness = 0.0;
  CHECK_THROWS_AS(temperature(ind), std::invalid_argument);
}

TEST_CASE("parametric mutation") {
  const Partition train = tiny_train();
  const EAParams params = tiny_params();

  SUBCASE("zero temperature is an exact no-op") {
    Rng rng = make_rng(2);
    Rng init = make_rng(3);
    std::vector<Individual> pop = init_population(params, train, init);
    Individual ind = pop.front();
    ind.fitness = 1.0;  // forces T(R) = 0
    const nlohmann::json before = net_json(ind.net);
    const MutationOutcome out = parametric_mutation(ind, 0.5, 1.0, params, train, rng);
    CHECK_FALSE(out.accepted);
    CHECK_FALSE(out.improved);
    CHECK(net_json(ind.net) == before);
  }

  SUBCASE("never worsens the cached fitness") {
    Rng init = make_rng(5);
    std::vector<Individual> pop = init_population(params, train, init);
    for (std::uint64_t s = 0; s < 50; ++s) {
      Individual ind = pop[s % pop.size()];
      const double before = ind.fitness;
      Rng rng = make_rng(s);
      const MutationOutcome out = parametric_mutation(ind, 0.5, 1.0, params, train, rng);
      CHECK(ind.fitness >= before);
      if (out.improved) CHECK(ind.fitness > before);
      CHECK_NOTHROW(ind.net.check_valid(params.max_hidden));
    }
  }

  SUBCASE("alpha preconditions") {
    Rng rng = make_rng(2);
    Individual ind;
    ind.fitness = 0.5;
    CHECK_THROWS_AS(parametric_mutation(ind, 0.0, 1.0, params, train, rng),
                    std::invalid_argument);
  }
}

TEST_CASE("perturbation stream is reproducible from the seed") {
  // one input link, bias-only output: full-pool selection consumes no draws,
  // so the deltas must equal a freshly seeded Gaussian stream
  PUNetwork net;
  net.n_inputs = 1;
  net.n_classes = 2;
  net.hidden.resize(1);
  net.hidden[0].exponents = {{0, 1.25}};
  net.outputs.resize(1);
  net.outputs[0].bias = -0.5;

  const double sigma_in = 0.125, sigma_out = 0.25;
  PUNetwork mutated = net;
  Rng rng = make_rng(77);
  perturb_parameters(mutated, 1.0, 1.0, sigma_in, sigma_out, rng);

  Rng replay = make_rng(77);
  std::normal_distribution<double> in_noise(0.0, sigma_in);
  const double expected_w = 1.25 + in_noise(replay);
  std::normal_distribution<double> out_noise(0.0, sigma_out);
  const double expected_b = -0.5 + out_noise(replay);

  CHECK(mutated.hidden[0].exponents[0] == doctest::Approx(expected_w).epsilon(1e-15));
  CHECK(mutated.outputs[0].bias == doctest::Approx(expected_b).epsilon(1e-15));

  // and the same seed applied twice gives identical nets
  PUNetwork again = net;
  Rng rng2 = make_rng(77);
  perturb_parameters(again, 1.0, 1.0, sigma_in, sigma_out, rng2);
  CHECK(net_json(again) == net_json(mutated));
}

TEST_CASE("one-fifth rule") {
  CHECK(update_variance_one_fifth(0.5, 0.5, 0.85) == doctest::Approx(0.5 / 0.85));
  CHECK(update_variance_one_fifth(0.5, 0.5, 0.85) == doctest::Approx(0.5882).epsilon(1e-4));
  CHECK(update_variance_one_fifth(0.2, 0.7, 0.85) == doctest::Approx(0.7));
  CHECK(update_variance_one_fifth(0.0, 1.0, 0.85) == doctest::Approx(0.85));
  CHECK(update_variance_one_fifth(1.0, 1.0, 0.85) > 1.0);
  CHECK(update_variance_one_fifth(0.1, 1.0, 0.85) < 1.0);
  CHECK_THROWS_AS(update_variance_one_fifth(1.5, 1.0, 0.85), std::invalid_argument);
  CHECK_THROWS_AS(update_variance_one_fifth(0.5, -1.0, 0.85), std::invalid_argument);
  CHECK_THROWS_AS(update_variance_one_fifth(0.5, 1.0, 1.2), std::invalid_argument);
}

TEST_CASE("structural mutation") {
  const Partition train = tiny_train();
  EAParams params = tiny_params();

  SUBCASE("hot individuals change and stay valid; all four ops occur") {
    Rng init = make_rng(6);
    std::vector<Individual> pop = init_population(params, train, init);
    int node_adds = 0, node_dels = 0, conn_changes = 0;
    for (std::uint64_t s = 0; s < 300; ++s) {
      Individual ind = pop[s % pop.size()];
      ind.fitness = 0.02;  // T close to 1: every op nearly always fires
      ind.error = 1.0 / ind.fitness - 1.0;
      const std::size_t h_before = ind.net.hidden.size();
      const int c_before = count_connections(ind.net);
      Rng rng = make_rng(1000 + s);
      structural_mutation(ind, params, train, rng);
      CHECK_NOTHROW(ind.net.check_valid(params.max_hidden));
      if (ind.net.hidden.size() > h_before) ++node_adds;
      if (ind.net.hidden.size() < h_before) ++node_dels;
      if (count_connections(ind.net) != c_before) ++conn_changes;
    }
    CHECK(node_adds > 0);
    CHECK(node_dels > 0);
    CHECK(conn_changes > 200);  // with T~1 nearly every draw mutates
  }

  SUBCASE("node addition clamps at the hidden budget") {
    params.max_hidden = 2;
    Rng init = make_rng(8);
    std::vector<Individual> pop = init_population(params, train, init);
    for (std::uint64_t s = 0; s < 200; ++s) {
      Individual ind = pop[s % pop.size()];
      ind.fitness = 0.02;
      Rng rng = make_rng(2000 + s);
      structural_mutation(ind, params, train, rng);
      CHECK(ind.net.hidden.size() >= 1);
      CHECK(ind.net.hidden.size() <= 2);
    }
  }

  SUBCASE("deletion never orphans a node: all 1-node nets with up to 3 links") {
    // single hidden node with 1..3 input links and 0..2 output links
    for (int in_links = 1; in_links <= 3; ++in_links)
      for (int out_links = 0; out_links <= 2; ++out_links) {
        PUNetwork proto;
        proto.n_inputs = 3;
        proto.n_classes = 3;
        proto.hidden.resize(1);
        for (int i = 0; i < in_links; ++i) proto.hidden[0].exponents[i] = 0.5 * (i + 1);
        proto.outputs.resize(2);
        for (int j = 0; j < out_links; ++j) proto.outputs[j].coeffs[0] = 1.0;
        params.max_hidden = 1;  // deletion/addition of nodes infeasible
        for (std::uint64_t s = 0; s < 100; ++s) {
          Individual ind;
          ind.net = proto;
          evaluate_individual(ind, train);
          ind.fitness = 0.02;  // force ops to fire
          Rng rng = make_rng(3000 + s);
          structural_mutation(ind, params, train, rng);
          CHECK_NOTHROW(ind.net.check_valid(1));
          CHECK(ind.net.hidden[0].exponents.size() >= 1);
        }
      }
  }

  SUBCASE("cold individual still gets exactly one fallback op") {
    Rng init = make_rng(10);
    std::vector<Individual> pop = init_population(params, train, init);
    int changed = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
      Individual ind = pop[s % pop.size()];
      ind.fitness = 1.0;  // T = 0: no op fires by probability
      const nlohmann::json before = net_json(ind.net);
      Rng rng = make_rng(4000 + s);
      structural_mutation(ind, params, train, rng);
      CHECK_NOTHROW(ind.net.check_valid(params.max_hidden));
      if (net_json(ind.net) != before) ++changed;
    }
    CHECK(changed > 50);  // the uniformly chosen fallback usually has an effect
  }
}

TEST_CASE("evolve_generation") {
  const Partition train = tiny_train();
  const EAParams params = tiny_params();
  Rng init = make_rng(12);
  std::vector<Individual> pop = init_population(params, train, init);

  SUBCASE("elitism and constant size") {
    for (int gen = 1; gen <= 10; ++gen) {
      const double best_before =
          std::max_element(pop.begin(), pop.end(), [](const auto& a, const auto& b) {
            return a.fitness < b.fitness;
          })->fitness;
      evolve_generation(pop, params, train, 0.5, 1.0, seed_combine(99, gen));
      CHECK(pop.size() == 20);
      const double best_after =
          std::max_element(pop.begin(), pop.end(), [](const auto& a, const auto& b) {
            return a.fitness < b.fitness;
          })->fitness;
      CHECK(best_after >= best_before);
      for (const auto& ind : pop) CHECK_NOTHROW(ind.net.check_valid(params.max_hidden));
    }
  }

  SUBCASE("attempt counting matches the parametric block") {
    const GenerationStats stats = evolve_generation(pop, params, train, 0.5, 1.0, 123);
    // 10% of 20 = 2 slots, minus the exempt elite
    CHECK(stats.parametric_attempts == 1);
    CHECK(stats.parametric_successes <= stats.parametric_attempts);
  }

  SUBCASE("a perfect-fitness population keeps its best untouched") {
    for (auto& ind : pop) ind.fitness = 1.0;
    std::vector<Individual> copy = pop;
    evolve_generation(pop, params, train, 0.5, 1.0, 321);
    const double best_after =
        std::max_element(pop.begin(), pop.end(), [](const auto& a, const auto& b) {
          return a.fitness < b.fitness;
        })->fitness;
    CHECK(best_after == 1.0);
    // elite slot passed through unmutated
    CHECK(net_json(pop.front().net) == net_json(copy.front().net));
  }
}

TEST_CASE("run_ea") {
  const SplitDataset data = tiny_split();
  EAParams params = tiny_params();

  SUBCASE("zero generations returns the best of the initial population") {
    params.max_generations = 0;
    const RunResult r = run_ea(params, data, 42);
    CHECK(r.trace.size() == 1);
    CHECK(r.trace.front().generation == 0);
    CHECK(r.best.fitness > 0.0);
    CHECK(r.topology == r.best.net.topology());
    CHECK(r.connections == count_connections(r.best.net));
  }

  SUBCASE("fixed seed reproduces the result bit for bit") {
    params.max_generations = 6;
    const RunResult a = run_ea(params, data, 7);
    const RunResult b = run_ea(params, data, 7);
    CHECK(a.train_ccr == b.train_ccr);
    CHECK(a.test_ccr == b.test_ccr);
    CHECK(a.connections == b.connections);
    CHECK(a.topology == b.topology);
    CHECK(a.best.fitness == b.best.fitness);
    CHECK(net_json(a.best.net) == net_json(b.best.net));
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t g = 0; g < a.trace.size(); ++g) {
      CHECK(a.trace[g].best_fitness == b.trace[g].best_fitness);
      CHECK(a.trace[g].mean_fitness == b.trace[g].mean_fitness);
    }
  }

  SUBCASE("trace is monotone in best fitness and spans gen 0..n") {
    params.max_generations = 12;
    const RunResult r = run_ea(params, data, 3);
    REQUIRE(r.trace.size() == 13);
    for (std::size_t g = 1; g < r.trace.size(); ++g) {
      CHECK(r.trace[g].generation == static_cast<int>(g));
      CHECK(r.trace[g].best_fitness >= r.trace[g - 1].best_fitness);
    }
  }

  SUBCASE("variance adaptation follows the windowed success ratio") {
    params.max_generations = 20;
    params.one_fifth_window = 5;
    const RunResult r = run_ea(params, data, 3);
    // alpha changes only at window boundaries
    for (std::size_t g = 1; g < r.trace.size(); ++g) {
      if (r.trace[g].generation % 5 != 0)
        CHECK(r.trace[g].alpha1 == r.trace[g - 1].alpha1);
      else
        CHECK((r.trace[g].alpha1 == doctest::Approx(r.trace[g - 1].alpha1 / 0.85) ||
               r.trace[g].alpha1 == doctest::Approx(r.trace[g - 1].alpha1 * 0.85) ||
               r.trace[g].alpha1 == r.trace[g - 1].alpha1));
    }
  }

  SUBCASE("mismatched dimensions are rejected before evolution") {
    SplitDataset bad = data;
    Matrix x(4, 2, 1.5);
    bad.test = Partition::from_features(std::move(x), {0, 1, 0, 1}, 2);
    CHECK_THROWS_AS(run_ea(params, bad, 1), std::invalid_argument);
  }
}
