#pragma once

#include <cstdint>
#include <string>

#include "punn/dataset.hpp"

namespace punn {

// Balance-scale benchmark, reconstructed exactly: the 625 rows enumerate
// (left-weight, left-distance, right-weight, right-distance) over {1..5}^4
// in lexicographic order and the class compares the two torques
// (L if lw*ld > rw*rd, B if equal, R otherwise). Classes L/B/R map to 0/1/2.
RawDataset make_balance();

// Same data in the repository CSV layout (class first, as the class/4-digit
// UCI file has it) so it round-trips through load_csv + the shipped schema.
void write_balance_csv(const std::string& path);

// Waveform generator (version with 19 extra noise attributes, 40 inputs,
// 3 classes): each pattern mixes two of three triangular base waves with a
// uniform convex factor plus unit Gaussian noise. Statistically equivalent
// to the published benchmark, not byte-identical to any archived file.
RawDataset make_waveform(int n_patterns, std::uint64_t seed);

void write_waveform_csv(const std::string& path, int n_patterns, std::uint64_t seed);

}  // namespace punn
