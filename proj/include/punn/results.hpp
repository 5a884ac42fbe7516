#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace punn {

// One row of a result file: dataset, config index, seed, train CCR, test CCR,
// connections, topology, seconds. Numeric fields round-trip exactly.
struct RunRow {
  std::string dataset;
  std::string config_label;
  std::uint64_t seed = 0;
  double train_ccr = 0.0;
  double test_ccr = 0.0;
  int connections = 0;
  std::string topology;
  double seconds = 0.0;
};

std::string format_double(double v);  // shortest round-trip decimal form

void write_result_rows(std::ostream& out, const std::vector<RunRow>& rows);
void write_result_file(const std::string& path, const std::vector<RunRow>& rows);
std::vector<RunRow> read_result_file(const std::string& path);

}  // namespace punn
