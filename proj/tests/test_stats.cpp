#include <cmath>
#include <fstream>
#include <random>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "punn/stats.hpp"

using namespace punn;

namespace {

nlohmann::json load_golden() {
  std::ifstream f(std::string(PUNN_TEST_DATA_DIR) + "/stats_golden.json");
  REQUIRE(f.good());
  nlohmann::json j;
  f >> j;
  return j;
}

std::vector<double> vec(const nlohmann::json& j) { return j.get<std::vector<double>>(); }

}  // namespace

TEST_CASE("summarize basics") {
  const std::vector<double> same{3.5, 3.5, 3.5};
  RunSummary s = summarize(same);
  CHECK(s.mean == doctest::Approx(3.5));
  CHECK(s.stddev == doctest::Approx(0.0));
  CHECK(s.best == 3.5);
  CHECK(s.worst == 3.5);

  const std::vector<double> v{1.0, 2.0, 3.0};
  s = summarize(v);
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.stddev == doctest::Approx(1.0));
  CHECK(s.best == 3.0);
  CHECK(s.worst == 1.0);
  CHECK(s.n == 3);
  CHECK(format_summary(s) == "2.0000 / 1.0000 / 3.0000 / 1.0000");

  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(summarize(one), std::invalid_argument);
}

TEST_CASE("summarize bounds never violated") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(2 + trial % 40);
    for (double& x : v) x = u(rng);
    const RunSummary s = summarize(v);
    CHECK(s.worst <= s.mean);
    CHECK(s.mean <= s.best);
    for (double x : v) {
      CHECK(x <= s.best);
      CHECK(x >= s.worst);
    }
  }
}

TEST_CASE("golden oracle agreement within 1e-6") {
  const nlohmann::json golden = load_golden();
  REQUIRE(golden["pairs"].size() == 20);
  for (const auto& pair : golden["pairs"]) {
    INFO("pair ", pair["name"].get<std::string>());
    const std::vector<double> a = vec(pair["a"]);
    const std::vector<double> b = vec(pair["b"]);

    const TestOutcome ka = ks_normality(a);
    CHECK(std::fabs(ka.statistic - pair["ks_a"]["statistic"].get<double>()) < 1e-9);
    CHECK(std::fabs(ka.p_value - pair["ks_a"]["p_value"].get<double>()) < 1e-6);

    const TestOutcome kb = ks_normality(b);
    CHECK(std::fabs(kb.statistic - pair["ks_b"]["statistic"].get<double>()) < 1e-9);
    CHECK(std::fabs(kb.p_value - pair["ks_b"]["p_value"].get<double>()) < 1e-6);

    const TestOutcome lv = levene(a, b);
    CHECK(std::fabs(lv.statistic - pair["levene"]["statistic"].get<double>()) < 1e-6);
    CHECK(std::fabs(lv.p_value - pair["levene"]["p_value"].get<double>()) < 1e-6);

    const TestOutcome ts = t_test(a, b, true);
    CHECK(std::fabs(ts.statistic - pair["t_student"]["statistic"].get<double>()) < 1e-6);
    CHECK(std::fabs(ts.p_value - pair["t_student"]["p_value"].get<double>()) < 1e-6);

    const TestOutcome tw = t_test(a, b, false);
    CHECK(std::fabs(tw.statistic - pair["t_welch"]["statistic"].get<double>()) < 1e-6);
    CHECK(std::fabs(tw.p_value - pair["t_welch"]["p_value"].get<double>()) < 1e-6);
  }
}

TEST_CASE("ks statistic on the uniform grid matches the oracle") {
  const nlohmann::json golden = load_golden();
  std::vector<double> grid(100);
  for (int i = 0; i < 100; ++i) grid[i] = static_cast<double>(i) / 99.0;
  const TestOutcome out = ks_normality(grid);
  CHECK(std::fabs(out.statistic - golden["ks_uniform_grid_100"]["statistic"].get<double>()) < 1e-6);
  CHECK(std::fabs(out.p_value - golden["ks_uniform_grid_100"]["p_value"].get<double>()) < 1e-6);
}

TEST_CASE("ks preconditions") {
  CHECK_THROWS_AS(ks_normality(std::vector<double>{1, 2, 3, 4}), std::invalid_argument);
  CHECK_THROWS_AS(ks_normality(std::vector<double>{2, 2, 2, 2, 2}), std::invalid_argument);
}

TEST_CASE("ks calibration: seeded normal samples usually pass") {
  int passed = 0;
  for (int seed = 0; seed < 7; ++seed) {
    std::mt19937_64 rng(100 + seed);
    std::normal_distribution<double> n(3.0, 2.0);
    std::vector<double> sample(1000);
    for (double& x : sample) x = n(rng);
    if (ks_normality(sample).p_value > 0.05) ++passed;
  }
  CHECK(passed >= 4);
}

TEST_CASE("levene behavior") {
  const std::vector<double> a{1.0, 2.0, 3.0, 4.0, 5.0};
  const TestOutcome same = levene(a, a);
  CHECK(same.statistic == doctest::Approx(0.0));
  CHECK(same.p_value == doctest::Approx(1.0));
  CHECK_FALSE(same.significant_05);

  const std::vector<double> constant{2.0, 2.0, 2.0};
  CHECK_THROWS_AS(levene(constant, std::vector<double>{1.0, 2.0, 3.0}), std::invalid_argument);
  CHECK_THROWS_AS(levene(std::vector<double>{1.0, 2.0}, a), std::invalid_argument);

  // spread ratio 10 with n=30 per group is reliably detected
  std::mt19937_64 rng(42);
  std::normal_distribution<double> tight(0.0, 1.0), wide(0.0, 10.0);
  std::vector<double> t30(30), w30(30);
  for (double& x : t30) x = tight(rng);
  for (double& x : w30) x = wide(rng);
  CHECK(levene(t30, w30).p_value < 0.05);
}

TEST_CASE("t test behavior") {
  const std::vector<double> a{1.0, 2.0, 3.0, 4.0};
  const TestOutcome same = t_test(a, a, true);
  CHECK(same.statistic == doctest::Approx(0.0));
  CHECK(same.p_value == doctest::Approx(1.0));

  // antisymmetry in the arguments
  const std::vector<double> b{2.0, 3.0, 4.0, 6.0};
  for (bool equal_var : {true, false}) {
    const TestOutcome ab = t_test(a, b, equal_var);
    const TestOutcome ba = t_test(b, a, equal_var);
    CHECK(ab.statistic == doctest::Approx(-ba.statistic));
    CHECK(ab.p_value == doctest::Approx(ba.p_value));
  }

  // strong mean separation
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n0(0.0, 1.0), n5(5.0, 1.0);
  std::vector<double> x(30), y(30);
  for (double& v : x) v = n0(rng);
  for (double& v : y) v = n5(rng);
  CHECK(t_test(x, y, true).p_value < 0.001);

  const std::vector<double> constant{1.0, 1.0, 1.0};
  CHECK_THROWS_AS(t_test(constant, constant, true), std::invalid_argument);
  CHECK_THROWS_AS(t_test(std::vector<double>{1.0}, a, true), std::invalid_argument);
}

TEST_CASE("p values stay in [0,1] on random inputs") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> mu(-10.0, 10.0), sigma(0.1, 8.0);
  std::uniform_int_distribution<int> size(5, 40);
  for (int trial = 0; trial < 300; ++trial) {
    std::normal_distribution<double> da(mu(rng), sigma(rng)), db(mu(rng), sigma(rng));
    std::vector<double> a(size(rng)), b(size(rng));
    for (double& x : a) x = da(rng);
    for (double& x : b) x = db(rng);
    for (const TestOutcome& out :
         {ks_normality(a), levene(a, b), t_test(a, b, true), t_test(a, b, false)}) {
      CHECK(out.p_value >= 0.0);
      CHECK(out.p_value <= 1.0);
    }
  }
}

TEST_CASE("compare_configs") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> ccr_base(95.0, 1.0), conn_base(20.0, 3.0);

  ConfigRuns base;
  base.dataset = "balance";
  for (int i = 0; i < 30; ++i) {
    base.ccr.push_back(ccr_base(rng));
    base.connections.push_back(std::round(conn_base(rng)));
  }

  SUBCASE("identical run sets show no differences") {
    ConfigRuns best = base;
    const ComparisonReport report = compare_configs(base, best);
    REQUIRE(report.metrics.size() == 2);
    for (const auto& m : report.metrics) {
      CHECK_FALSE(m.levene_test.significant_05);
      CHECK_FALSE(m.mean_test.significant_05);
      CHECK(m.equal_variances_assumed);
    }
    CHECK(report.narrative().find("no significant") != std::string::npos);
  }

  SUBCASE("known shifts are detected at 0.05") {
    ConfigRuns best;
    best.dataset = "balance";
    std::normal_distribution<double> ccr_best(96.5, 1.0), conn_best(27.0, 3.0);
    for (int i = 0; i < 30; ++i) {
      best.ccr.push_back(ccr_best(rng));
      best.connections.push_back(std::round(conn_best(rng)));
    }
    const ComparisonReport report = compare_configs(base, best);
    CHECK(report.metrics[0].mean_test.significant_05);  // CCR mean shift
    CHECK(report.metrics[1].mean_test.significant_05);  // connection mean shift
  }

  SUBCASE("dataset mismatch is rejected") {
    ConfigRuns other = base;
    other.dataset = "cancer";
    CHECK_THROWS_AS(compare_configs(base, other), std::invalid_argument);
  }
}
