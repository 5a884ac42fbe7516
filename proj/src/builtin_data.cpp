#include "punn/builtin_data.hpp"

#include <cstdio>
#include <fstream>

#include "punn/errors.hpp"
#include "punn/random.hpp"

namespace punn {

RawDataset make_balance() {
  RawDataset d;
  d.name = "balance";
  d.n_classes = 3;
  d.feature_names = {"left_weight", "left_distance", "right_weight", "right_distance"};
  d.features = Matrix(625, 4);
  d.labels.resize(625);
  int row = 0;
  for (int lw = 1; lw <= 5; ++lw)
    for (int ld = 1; ld <= 5; ++ld)
      for (int rw = 1; rw <= 5; ++rw)
        for (int rd = 1; rd <= 5; ++rd, ++row) {
          d.features(row, 0) = lw;
          d.features(row, 1) = ld;
          d.features(row, 2) = rw;
          d.features(row, 3) = rd;
          const int left = lw * ld;
          const int right = rw * rd;
          d.labels[row] = left > right ? 0 : (left == right ? 1 : 2);  // L / B / R
        }
  return d;
}

void write_balance_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IngestError("datagen: cannot write " + path);
  const RawDataset d = make_balance();
  const char* classes[] = {"L", "B", "R"};
  for (std::size_t i = 0; i < d.size(); ++i) {
    out << classes[d.labels[i]];
    for (std::size_t c = 0; c < 4; ++c) out << ',' << static_cast<int>(d.features(i, c));
    out << '\n';
  }
}

RawDataset make_waveform(int n_patterns, std::uint64_t seed) {
  // Triangular bases peaking at positions 7, 11 and 15 of 21.
  const auto h1 = [](int i) { return std::max(6.0 - std::abs(i + 1 - 11), 0.0); };
  const auto h2 = [&](int i) { return h1(i + 4); };   // peak at 7
  const auto h3 = [&](int i) { return h1(i - 4); };   // peak at 15

  RawDataset d;
  d.name = "waveform";
  d.n_classes = 3;
  for (int c = 0; c < 40; ++c) d.feature_names.push_back("x" + std::to_string(c + 1));
  d.features = Matrix(n_patterns, 40);
  d.labels.resize(n_patterns);

  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_int_distribution<int> cls(0, 2);

  for (int r = 0; r < n_patterns; ++r) {
    const int label = cls(rng);
    const double u = unit(rng);
    for (int i = 0; i < 21; ++i) {
      double base;
      switch (label) {
        case 0: base = u * h1(i) + (1.0 - u) * h2(i); break;
        case 1: base = u * h1(i) + (1.0 - u) * h3(i); break;
        default: base = u * h2(i) + (1.0 - u) * h3(i); break;
      }
      d.features(r, i) = base + noise(rng);
    }
    for (int i = 21; i < 40; ++i) d.features(r, i) = noise(rng);
    d.labels[r] = label;
  }
  return d;
}

void write_waveform_csv(const std::string& path, int n_patterns, std::uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw IngestError("datagen: cannot write " + path);
  const RawDataset d = make_waveform(n_patterns, seed);
  char buf[32];
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t c = 0; c < 40; ++c) {
      std::snprintf(buf, sizeof(buf), "%.6f", d.features(i, c));
      out << buf << ',';
    }
    out << d.labels[i] << '\n';
  }
}

}  // namespace punn
