#include "punn/results.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "punn/errors.hpp"

namespace punn {

namespace {

const char* kHeader = "dataset,config,seed,train_ccr,test_ccr,connections,topology,seconds";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

template <typename T>
T parse_field(const std::string& s, const std::string& what, int line_no) {
  T v;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw IngestError("results: line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

void write_result_rows(std::ostream& out, const std::vector<RunRow>& rows) {
  out << kHeader << '\n';
  for (const auto& r : rows) {
    out << r.dataset << ',' << r.config_label << ',' << r.seed << ',' << format_double(r.train_ccr)
        << ',' << format_double(r.test_ccr) << ',' << r.connections << ',' << r.topology << ','
        << format_double(r.seconds) << '\n';
  }
}

void write_result_file(const std::string& path, const std::vector<RunRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IngestError("results: cannot write " + path);
  write_result_rows(out, rows);
}

std::vector<RunRow> read_result_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("results: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IngestError("results: " + path + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader)
    throw IngestError("results: " + path + ": unexpected header '" + line + "'");

  std::vector<RunRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 8)
      throw IngestError("results: line " + std::to_string(line_no) + ": expected 8 fields, got " +
                        std::to_string(fields.size()));
    RunRow r;
    r.dataset = fields[0];
    r.config_label = fields[1];
    r.seed = parse_field<std::uint64_t>(fields[2], "seed", line_no);
    r.train_ccr = parse_field<double>(fields[3], "train_ccr", line_no);
    r.test_ccr = parse_field<double>(fields[4], "test_ccr", line_no);
    r.connections = parse_field<int>(fields[5], "connections", line_no);
    r.topology = fields[6];
    r.seconds = parse_field<double>(fields[7], "seconds", line_no);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace punn
