#pragma once

#include "json.hpp"

#include <span>
#include <string>
#include <vector>

namespace punn {

struct RunSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n-1)
  double best = 0.0;
  double worst = 0.0;
  int n = 0;
};

// Throws std::invalid_argument for n < 2.
RunSummary summarize(std::span<const double> values);

// "mean / std / best / worst" with four decimals.
std::string format_summary(const RunSummary& s);

struct TestOutcome {
  double statistic = 0.0;
  double p_value = 0.0;
  double df1 = 0.0;  // degrees of freedom where applicable, else 0
  double df2 = 0.0;
  bool significant_05 = false;  // p < 0.05
  bool significant_01 = false;  // p < 0.01
};

// One-sample Kolmogorov-Smirnov against a normal with the sample's own mean
// and sample standard deviation. The p-value is the asymptotic Kolmogorov
// series; with estimated parameters this is the Lilliefors setting and the
// p-value is anti-conservative, matching classical package defaults.
// Requires n >= 5 and a non-degenerate sample.
TestOutcome ks_normality(std::span<const double> sample);

// Levene variance-equality test for two groups, mean-centered variant,
// F(1, N-2) p-value. Requires group sizes >= 3 and non-degenerate spread.
TestOutcome levene(std::span<const double> a, std::span<const double> b);

// Two-sided two-sample t test: pooled-variance Student when
// equal_variances, Welch otherwise. Requires sizes >= 2.
TestOutcome t_test(std::span<const double> a, std::span<const double> b, bool equal_variances);

struct ConfigRuns {
  std::string dataset;
  std::vector<double> ccr;
  std::vector<double> connections;
};

struct MetricComparison {
  std::string metric;
  TestOutcome ks_base;
  TestOutcome ks_best;
  TestOutcome levene_test;
  bool equal_variances_assumed = false;
  TestOutcome mean_test;
};

struct ComparisonReport {
  std::string dataset;
  std::vector<MetricComparison> metrics;

  std::string narrative() const;
  nlohmann::json to_json() const;
};

// Base-vs-best pipeline over generalization CCR and connection counts:
// K-S normality per group, Levene, then Student's or Welch's t depending on
// the Levene outcome at the 0.05 level.
ComparisonReport compare_configs(const ConfigRuns& base, const ConfigRuns& best);

// Distribution helpers (exposed for the oracle-agreement tests).
double normal_cdf(double z);
double kolmogorov_sf(double x);
double betainc_reg(double a, double b, double x);
double student_t_two_sided_p(double t, double df);
double f_sf(double x, double df1, double df2);

}  // namespace punn
