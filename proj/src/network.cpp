#include "punn/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace punn {

namespace {

// Flattened view of the sparse maps, built once per batch evaluation so the
// per-pattern loop touches contiguous memory only.
struct FlatNet {
  struct Link {
    int index;
    double weight;
  };
  std::vector<std::vector<Link>> hidden;
  std::vector<double> bias;
  std::vector<std::vector<Link>> out;
  bool reference_class;
  int n_classes;

  explicit FlatNet(const PUNetwork& net)
      : reference_class(net.reference_class()), n_classes(net.n_classes) {
    hidden.reserve(net.hidden.size());
    for (const auto& h : net.hidden) {
      std::vector<Link> links;
      links.reserve(h.exponents.size());
      for (const auto& [i, w] : h.exponents) links.push_back({i, w});
      hidden.push_back(std::move(links));
    }
    bias.reserve(net.outputs.size());
    out.reserve(net.outputs.size());
    for (const auto& o : net.outputs) {
      bias.push_back(o.bias);
      std::vector<Link> links;
      links.reserve(o.coeffs.size());
      for (const auto& [m, b] : o.coeffs) links.push_back({m, b});
      out.push_back(std::move(links));
    }
  }

  // f_j from precomputed ln(x); h_m = exp(sum w * ln x).
  void raw_from_logs(std::span<const double> logx, std::vector<double>& h,
                     std::vector<double>& f) const {
    for (std::size_t m = 0; m < hidden.size(); ++m) {
      double s = 0.0;
      for (const Link& l : hidden[m]) s += l.weight * logx[l.index];
      h[m] = std::exp(s);
    }
    for (std::size_t j = 0; j < out.size(); ++j) {
      double v = bias[j];
      for (const Link& l : out[j]) v += l.weight * h[l.index];
      f[j] = v;
    }
    if (reference_class) f[out.size()] = 0.0;
  }
};

double log_sum_exp(std::span<const double> f) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : f) mx = std::max(mx, v);
  if (!std::isfinite(mx)) return mx;  // all -inf, or an inf/NaN slipped in
  double s = 0.0;
  for (double v : f) s += std::exp(v - mx);
  return mx + std::log(s);
}

int argmax_lowest(std::span<const double> f) {
  int best = 0;
  for (int j = 1; j < static_cast<int>(f.size()); ++j)
    if (f[j] > f[best]) best = j;
  return best;
}

}  // namespace

std::string PUNetwork::topology() const {
  return std::to_string(n_inputs) + ":" + std::to_string(hidden.size()) + ":" +
         std::to_string(outputs.size());
}

void PUNetwork::check_valid(int max_hidden) const {
  if (n_inputs < 1 || n_classes < 2)
    throw std::invalid_argument("network: need n_inputs >= 1 and n_classes >= 2");
  const int h = static_cast<int>(hidden.size());
  if (h < 1 || h > max_hidden)
    throw std::invalid_argument("network: hidden count " + std::to_string(h) +
                                " outside [1, " + std::to_string(max_hidden) + "]");
  const int o = static_cast<int>(outputs.size());
  if (o != n_classes - 1 && o != n_classes)
    throw std::invalid_argument("network: output count must be l-1 or l");
  for (const auto& node : hidden) {
    if (node.exponents.empty())
      throw std::invalid_argument("network: hidden node without input connections");
    for (const auto& [i, w] : node.exponents) {
      if (i < 0 || i >= n_inputs) throw std::invalid_argument("network: input index out of range");
      if (!std::isfinite(w)) throw std::invalid_argument("network: non-finite exponent");
    }
  }
  for (const auto& node : outputs) {
    if (!std::isfinite(node.bias)) throw std::invalid_argument("network: non-finite bias");
    for (const auto& [m, b] : node.coeffs) {
      if (m < 0 || m >= h) throw std::invalid_argument("network: hidden index out of range");
      if (!std::isfinite(b)) throw std::invalid_argument("network: non-finite coefficient");
    }
  }
}

std::vector<double> hidden_outputs(const PUNetwork& net, std::span<const double> x) {
  if (static_cast<int>(x.size()) != net.n_inputs)
    throw std::invalid_argument("hidden_outputs: feature count mismatch");
  std::vector<double> h(net.hidden.size());
  for (std::size_t m = 0; m < net.hidden.size(); ++m) {
    double prod = 1.0;
    for (const auto& [i, w] : net.hidden[m].exponents) {
      if (!(x[i] > 0.0))
        throw std::domain_error("hidden_outputs: non-positive input component (data not normalized?)");
      prod *= std::pow(x[i], w);
    }
    h[m] = prod;
  }
  return h;
}

std::vector<double> raw_outputs(const PUNetwork& net, std::span<const double> x) {
  const std::vector<double> h = hidden_outputs(net, x);
  std::vector<double> f(net.n_classes, 0.0);
  for (std::size_t j = 0; j < net.outputs.size(); ++j) {
    double v = net.outputs[j].bias;
    for (const auto& [m, b] : net.outputs[j].coeffs) v += b * h[m];
    f[j] = v;
  }
  return f;
}

std::vector<double> softmax(std::span<const double> f) {
  std::vector<double> g(f.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : f) mx = std::max(mx, v);
  double sum = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    g[j] = std::exp(f[j] - mx);
    sum += g[j];
  }
  for (double& v : g) v /= sum;
  return g;
}

double cross_entropy(const PUNetwork& net, const Partition& part) {
  if (part.size() == 0) throw std::invalid_argument("cross_entropy: empty partition");
  if (static_cast<int>(part.n_features()) != net.n_inputs)
    throw std::invalid_argument("cross_entropy: feature count mismatch");

  const FlatNet flat(net);
  std::vector<double> h(net.hidden.size());
  std::vector<double> f(net.n_classes);
  double acc = 0.0;
  for (std::size_t i = 0; i < part.size(); ++i) {
    flat.raw_from_logs(part.log_x.row(i), h, f);
    // one-hot targets: -sum_j y_j f_j + ln sum_j e^{f_j} = lse - f_true
    acc += log_sum_exp(f) - f[part.labels[i]];
  }
  return acc / static_cast<double>(part.size());
}

double fitness_from_error(double error) {
  if (!(error >= 0.0)) throw std::invalid_argument("fitness: error must be >= 0");
  return 1.0 / (1.0 + error);
}

double ccr(const PUNetwork& net, const Partition& part) {
  if (part.size() == 0) throw std::invalid_argument("ccr: empty partition");
  if (static_cast<int>(part.n_features()) != net.n_inputs)
    throw std::invalid_argument("ccr: feature count mismatch");

  const FlatNet flat(net);
  std::vector<double> h(net.hidden.size());
  std::vector<double> f(net.n_classes);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < part.size(); ++i) {
    flat.raw_from_logs(part.log_x.row(i), h, f);
    // argmax of f equals argmax of softmax(f), ties included
    if (argmax_lowest(f) == part.labels[i]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(part.size());
}

int count_connections(const PUNetwork& net) {
  int count = static_cast<int>(net.outputs.size());  // one bias per output node
  for (const auto& h : net.hidden) count += static_cast<int>(h.exponents.size());
  for (const auto& o : net.outputs) count += static_cast<int>(o.coeffs.size());
  return count;
}

}  // namespace punn
