#include "punn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace punn {

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

void set_significance(TestOutcome& t) {
  t.significant_05 = t.p_value < 0.05;
  t.significant_01 = t.p_value < 0.01;
}

// Continued fraction for the regularized incomplete beta (Lentz).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 1e-15;
  const double tiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double betainc_reg(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("betainc: a,b must be > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double kolmogorov_sf(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 1.18) {
    // theta-series form of the CDF, accurate for small arguments
    const double v = M_PI * M_PI / (8.0 * x * x);
    double cdf = 0.0;
    for (int k = 1; k <= 19; k += 2) {
      const double term = std::exp(-static_cast<double>(k) * k * v);
      cdf += term;
      if (term < 1e-18) break;
    }
    cdf *= std::sqrt(2.0 * M_PI) / x;
    return 1.0 - cdf;
  }
  double sf = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sf += sign * term;
    if (term < 1e-18) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sf, 0.0, 1.0);
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("t distribution: df must be > 0");
  return betainc_reg(df / 2.0, 0.5, df / (df + t * t));
}

double f_sf(double x, double df1, double df2) {
  if (!(df1 > 0.0 && df2 > 0.0)) throw std::invalid_argument("F distribution: df must be > 0");
  if (x <= 0.0) return 1.0;
  return betainc_reg(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * x));
}

RunSummary summarize(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("summarize: need at least 2 values");
  RunSummary s;
  s.n = static_cast<int>(values.size());
  s.mean = mean_of(values);
  s.stddev = std::sqrt(sample_variance(values, s.mean));
  s.best = *std::max_element(values.begin(), values.end());
  s.worst = *std::min_element(values.begin(), values.end());
  return s;
}

std::string format_summary(const RunSummary& s) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%.4f / %.4f / %.4f / %.4f", s.mean, s.stddev, s.best, s.worst);
  return buf;
}

TestOutcome ks_normality(std::span<const double> sample) {
  const std::size_t n = sample.size();
  if (n < 5) throw std::invalid_argument("ks_normality: need at least 5 observations");
  const double m = mean_of(sample);
  const double var = sample_variance(sample, m);
  if (!(var > 0.0)) throw std::invalid_argument("ks_normality: degenerate sample (zero spread)");
  const double sd = std::sqrt(var);

  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());

  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double cdf = normal_cdf((sorted[i] - m) / sd);
    const double d_plus = static_cast<double>(i + 1) / n - cdf;
    const double d_minus = cdf - static_cast<double>(i) / n;
    d = std::max({d, d_plus, d_minus});
  }

  TestOutcome out;
  out.statistic = d;
  out.p_value = kolmogorov_sf(std::sqrt(static_cast<double>(n)) * d);
  set_significance(out);
  return out;
}

TestOutcome levene(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 3 || b.size() < 3)
    throw std::invalid_argument("levene: need at least 3 observations per group");
  const auto constant = [](std::span<const double> v) {
    return *std::max_element(v.begin(), v.end()) == *std::min_element(v.begin(), v.end());
  };
  if (constant(a) || constant(b))
    throw std::invalid_argument("levene: degenerate group (zero spread)");

  const auto deviations = [](std::span<const double> v) {
    const double m = mean_of(v);
    std::vector<double> z(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) z[i] = std::fabs(v[i] - m);
    return z;
  };
  const std::vector<double> za = deviations(a);
  const std::vector<double> zb = deviations(b);

  const double ma = mean_of(za);
  const double mb = mean_of(zb);
  const double n_total = static_cast<double>(a.size() + b.size());
  const double grand = (ma * a.size() + mb * b.size()) / n_total;

  double between = a.size() * (ma - grand) * (ma - grand) + b.size() * (mb - grand) * (mb - grand);
  double within = 0.0;
  for (double z : za) within += (z - ma) * (z - ma);
  for (double z : zb) within += (z - mb) * (z - mb);

  TestOutcome out;
  out.df1 = 1.0;
  out.df2 = n_total - 2.0;
  // identical deviation patterns: 0/0 resolves to no difference; a zero
  // within-spread with distinct means diverges and f_sf(inf) = 0
  out.statistic = between == 0.0 ? 0.0 : (n_total - 2.0) * between / within;
  out.p_value = between == 0.0 ? 1.0 : f_sf(out.statistic, out.df1, out.df2);
  set_significance(out);
  return out;
}

TestOutcome t_test(std::span<const double> a, std::span<const double> b, bool equal_variances) {
  if (a.size() < 2 || b.size() < 2)
    throw std::invalid_argument("t_test: need at least 2 observations per group");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  const double va = sample_variance(a, ma);
  const double vb = sample_variance(b, mb);

  TestOutcome out;
  double se2;
  if (equal_variances) {
    const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
    se2 = pooled * (1.0 / na + 1.0 / nb);
    out.df1 = na + nb - 2.0;
  } else {
    const double ta = va / na;
    const double tb = vb / nb;
    se2 = ta + tb;
    out.df1 = se2 * se2 / (ta * ta / (na - 1.0) + tb * tb / (nb - 1.0));
  }
  if (!(se2 > 0.0)) throw std::invalid_argument("t_test: degenerate samples (zero variance)");

  out.statistic = (ma - mb) / std::sqrt(se2);
  out.p_value = student_t_two_sided_p(out.statistic, out.df1);
  set_significance(out);
  return out;
}

ComparisonReport compare_configs(const ConfigRuns& base, const ConfigRuns& best) {
  if (base.dataset != best.dataset)
    throw std::invalid_argument("compare_configs: run sets come from different datasets ('" +
                                base.dataset + "' vs '" + best.dataset + "')");

  ComparisonReport report;
  report.dataset = base.dataset;

  const auto compare_metric = [&](const std::string& name, std::span<const double> va,
                                  std::span<const double> vb) {
    MetricComparison m;
    m.metric = name;
    m.ks_base = ks_normality(va);
    m.ks_best = ks_normality(vb);
    m.levene_test = levene(va, vb);
    m.equal_variances_assumed = !m.levene_test.significant_05;
    m.mean_test = t_test(va, vb, m.equal_variances_assumed);
    report.metrics.push_back(m);
  };

  compare_metric("CCR", base.ccr, best.ccr);
  compare_metric("connections", base.connections, best.connections);
  return report;
}

std::string ComparisonReport::narrative() const {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << "Base vs best configuration, dataset " << dataset << "\n";
  for (const auto& m : metrics) {
    os << "\n[" << m.metric << "]\n";
    os << "  K-S normality: base D=" << m.ks_base.statistic << " (Sig=" << m.ks_base.p_value
       << "), best D=" << m.ks_best.statistic << " (Sig=" << m.ks_best.p_value << ")";
    const bool normal_ok = !m.ks_base.significant_05 && !m.ks_best.significant_05;
    os << (normal_ok ? " -> normality not rejected at 0.05\n"
                     : " -> normality rejected for at least one group at 0.05\n");
    os << "  Levene: W=" << m.levene_test.statistic << " (Sig=" << m.levene_test.p_value << ") -> "
       << (m.levene_test.significant_05 ? "significant variance difference"
                                        : "no significant variance difference")
       << " at 0.05\n";
    os << "  " << (m.equal_variances_assumed ? "Student's t (pooled)" : "Welch's t")
       << ": t=" << m.mean_test.statistic << ", df=" << m.mean_test.df1
       << " (Sig=" << m.mean_test.p_value << ") -> "
       << (m.mean_test.significant_05 ? "significant" : "no significant")
       << " mean difference at 0.05"
       << (m.mean_test.significant_01 ? " (also at 0.01)" : "") << "\n";
  }
  os << "\nNote: K-S uses estimated parameters (Lilliefors setting) with the asymptotic\n"
        "p-value; Levene is the mean-centered variant; all tests are two-sided.\n";
  return os.str();
}

nlohmann::json ComparisonReport::to_json() const {
  const auto outcome = [](const TestOutcome& t) {
    return nlohmann::json{{"statistic", t.statistic}, {"p_value", t.p_value},
                          {"df1", t.df1},             {"df2", t.df2},
                          {"significant_05", t.significant_05},
                          {"significant_01", t.significant_01}};
  };
  nlohmann::json j;
  j["dataset"] = dataset;
  j["metrics"] = nlohmann::json::array();
  for (const auto& m : metrics) {
    j["metrics"].push_back({{"metric", m.metric},
                            {"ks_base", outcome(m.ks_base)},
                            {"ks_best", outcome(m.ks_best)},
                            {"levene", outcome(m.levene_test)},
                            {"equal_variances_assumed", m.equal_variances_assumed},
                            {"t_test", outcome(m.mean_test)}});
  }
  return j;
}

}  // namespace punn
