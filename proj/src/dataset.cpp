#include "punn/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "punn/errors.hpp"
#include "punn/random.hpp"

namespace punn {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string canonical_name(const std::string& s) {
  std::string out;
  for (char c : s)
    if (std::isalnum(static_cast<unsigned char>(c)))
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

bool parse_double(const std::string& tok, double& out) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end != begin && *end == '\0' && std::isfinite(out);
}

bool is_missing(const std::string& tok) { return tok.empty() || tok == "?"; }

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(trim(field));
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

char detect_delimiter(const std::string& line) {
  const auto commas = std::count(line.begin(), line.end(), ',');
  const auto semis = std::count(line.begin(), line.end(), ';');
  return semis > commas ? ';' : ',';
}

struct ColumnPlan {
  bool ignored = false;
  bool is_target = false;
  bool categorical = false;
};

}  // namespace

DatasetSchema DatasetSchema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("schema: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IngestError("schema: " + path + ": " + e.what());
  }
  DatasetSchema s;
  try {
    s.name = j.at("name").get<std::string>();
    s.target_column = j.at("target_column").get<int>();
    for (const auto& v : j.at("class_labels")) s.class_labels.push_back(v.get<std::string>());
    if (j.contains("categorical_columns"))
      for (const auto& v : j["categorical_columns"]) s.categorical_columns.push_back(v.get<int>());
    if (j.contains("ignore_columns"))
      for (const auto& v : j["ignore_columns"]) s.ignore_columns.push_back(v.get<int>());
    if (j.contains("header")) s.has_header = j["header"].get<bool>();
  } catch (const json::exception& e) {
    throw IngestError("schema: " + path + ": " + e.what());
  }
  if (s.class_labels.size() < 2) throw IngestError("schema: need at least 2 class labels");
  if (s.target_column < 0) throw IngestError("schema: target_column must be >= 0");
  return s;
}

RawDataset load_csv(const std::string& path, const DatasetSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IngestError("dataset: cannot open " + path);

  std::vector<std::pair<int, std::vector<std::string>>> rows;  // (file line, fields)
  std::string line;
  char delim = 0;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (delim == 0) delim = detect_delimiter(line);
    rows.emplace_back(line_no, split_line(line, delim));
  }
  if (rows.empty()) throw IngestError("dataset: " + path + " has no rows");

  const std::size_t n_cols = rows.front().second.size();
  if (schema.target_column >= static_cast<int>(n_cols))
    throw IngestError("dataset: target column " + std::to_string(schema.target_column) +
                      " out of range (file has " + std::to_string(n_cols) + " columns)");

  std::vector<ColumnPlan> plan(n_cols);
  plan[schema.target_column].is_target = true;
  for (int c : schema.ignore_columns) {
    if (c < 0 || c >= static_cast<int>(n_cols))
      throw IngestError("schema: ignore column " + std::to_string(c) + " out of range");
    plan[c].ignored = true;
  }
  for (int c : schema.categorical_columns) {
    if (c < 0 || c >= static_cast<int>(n_cols))
      throw IngestError("schema: categorical column " + std::to_string(c) + " out of range");
    plan[c].categorical = true;
  }

  std::map<std::string, int> label_index;
  for (std::size_t i = 0; i < schema.class_labels.size(); ++i)
    label_index[schema.class_labels[i]] = static_cast<int>(i);

  // Header row: explicit from the schema when given, otherwise detected by a
  // first row whose target is no known label or whose numeric fields fail to
  // parse.
  bool header;
  if (schema.has_header.has_value()) {
    header = *schema.has_header;
  } else {
    const auto& first = rows.front().second;
    header = label_index.find(first[schema.target_column]) == label_index.end();
    if (!header) {
      for (std::size_t c = 0; c < n_cols; ++c) {
        if (plan[c].ignored || plan[c].is_target || plan[c].categorical) continue;
        double v;
        if (!parse_double(first[c], v) && !is_missing(first[c])) {
          header = true;
          break;
        }
      }
    }
  }

  std::vector<std::string> column_names(n_cols);
  for (std::size_t c = 0; c < n_cols; ++c) column_names[c] = "c" + std::to_string(c);
  std::size_t first_data = 0;
  if (header) {
    if (rows.size() < 2) throw IngestError("dataset: " + path + " has a header but no data rows");
    for (std::size_t c = 0; c < n_cols; ++c)
      if (!rows[0].second[c].empty()) column_names[c] = rows[0].second[c];
    first_data = 1;
  }

  // First pass: shape checks, missing-value checks, categorical vocabularies.
  std::vector<std::set<std::string>> categories(n_cols);
  for (std::size_t r = first_data; r < rows.size(); ++r) {
    const auto& [ln, fields] = rows[r];
    if (fields.size() != n_cols)
      throw IngestError("dataset: " + path + " row " + std::to_string(ln) + ": expected " +
                        std::to_string(n_cols) + " fields, got " + std::to_string(fields.size()));
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (plan[c].ignored) continue;
      if (is_missing(fields[c]))
        throw IngestError("dataset: " + path + " row " + std::to_string(ln) +
                          ": missing value in column " + column_names[c]);
      if (plan[c].categorical && !plan[c].is_target) categories[c].insert(fields[c]);
    }
  }

  // Expanded feature layout: numeric columns keep one slot, categorical
  // columns get one 0/1 slot per distinct value (sorted for determinism).
  std::vector<std::string> feature_names;
  std::vector<std::pair<int, int>> col_offset;  // (column, first feature slot)
  std::vector<std::vector<std::string>> cat_values(n_cols);
  for (std::size_t c = 0; c < n_cols; ++c) {
    if (plan[c].ignored || plan[c].is_target) {
      col_offset.emplace_back(static_cast<int>(c), -1);
      continue;
    }
    col_offset.emplace_back(static_cast<int>(c), static_cast<int>(feature_names.size()));
    if (plan[c].categorical) {
      cat_values[c].assign(categories[c].begin(), categories[c].end());
      for (const auto& v : cat_values[c]) feature_names.push_back(column_names[c] + "=" + v);
    } else {
      feature_names.push_back(column_names[c]);
    }
  }
  if (feature_names.empty()) throw IngestError("dataset: " + path + " has no feature columns");

  RawDataset out;
  out.name = schema.name;
  out.n_classes = static_cast<int>(schema.class_labels.size());
  out.feature_names = feature_names;
  const std::size_t n = rows.size() - first_data;
  out.features = Matrix(n, feature_names.size(), 0.0);
  out.labels.resize(n);

  for (std::size_t r = first_data; r < rows.size(); ++r) {
    const auto& [ln, fields] = rows[r];
    const std::size_t i = r - first_data;
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (plan[c].ignored) continue;
      const std::string& tok = fields[c];
      if (plan[c].is_target) {
        auto it = label_index.find(tok);
        if (it == label_index.end())
          throw IngestError("dataset: " + path + " row " + std::to_string(ln) +
                            ": unknown class label '" + tok + "'");
        out.labels[i] = it->second;
      } else if (plan[c].categorical) {
        const auto& vals = cat_values[c];
        const auto it = std::lower_bound(vals.begin(), vals.end(), tok);
        const int slot = col_offset[c].second + static_cast<int>(it - vals.begin());
        out.features(i, slot) = 1.0;
      } else {
        double v;
        if (!parse_double(tok, v))
          throw IngestError("dataset: " + path + " row " + std::to_string(ln) +
                            ": cannot parse '" + tok + "' in column " + column_names[c]);
        out.features(i, col_offset[c].second) = v;
      }
    }
  }
  return out;
}

Matrix one_hot(std::span<const int> labels, int n_classes) {
  Matrix y(labels.size(), n_classes, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes)
      throw std::invalid_argument("one_hot: label " + std::to_string(labels[i]) +
                                  " outside [0, " + std::to_string(n_classes) + ")");
    y(i, labels[i]) = 1.0;
  }
  return y;
}

std::optional<int> table_train_size(const std::string& name, std::size_t total) {
  struct Known {
    const char* key;
    std::size_t total;
    int train;
  };
  static const Known known[] = {{"balance", 625, 469},
                                {"cancer", 699, 525},
                                {"pima", 768, 576},
                                {"hypothyroid", 3772, 2829},
                                {"waveform", 5000, 3750}};
  const std::string canon = canonical_name(name);
  for (const auto& k : known)
    if (total == k.total || canon == k.key) {
      if (total != k.total) break;  // known name but a different file variant
      return k.train;
    }
  return std::nullopt;
}

std::pair<std::vector<int>, std::vector<int>> holdout_split(const RawDataset& raw,
                                                            double train_ratio,
                                                            std::uint64_t seed) {
  const int n = static_cast<int>(raw.size());
  const int l = raw.n_classes;
  if (n < l) throw std::invalid_argument("holdout_split: fewer patterns than classes");
  if (!(train_ratio > 0.0 && train_ratio < 1.0))
    throw std::invalid_argument("holdout_split: ratio must be in (0,1)");

  std::vector<std::vector<int>> by_class(l);
  for (int i = 0; i < n; ++i) by_class[raw.labels[i]].push_back(i);
  for (int c = 0; c < l; ++c)
    if (by_class[c].empty())
      throw std::invalid_argument("holdout_split: class " + std::to_string(c) + " has no patterns");

  int train_total = table_train_size(raw.name, raw.size())
                        .value_or(static_cast<int>(std::lround(train_ratio * n)));
  train_total = std::clamp(train_total, 1, n - 1);
  if (train_total < l)
    throw std::invalid_argument("holdout_split: train partition cannot cover every class");

  // Largest-remainder allocation of train_total across classes.
  std::vector<int> t(l);
  std::vector<double> frac(l);
  int assigned = 0;
  for (int c = 0; c < l; ++c) {
    const double q = static_cast<double>(train_total) * by_class[c].size() / n;
    t[c] = static_cast<int>(std::floor(q));
    frac[c] = q - t[c];
    assigned += t[c];
  }
  std::vector<int> order(l);
  for (int c = 0; c < l; ++c) order[c] = c;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return frac[a] > frac[b]; });
  for (int r = 0; r < train_total - assigned; ++r) t[order[r]] += 1;

  const auto target = [&](int c) {
    return static_cast<double>(train_total) * by_class[c].size() / n;
  };

  // Every class must contribute at least one train pattern.
  for (int c = 0; c < l; ++c) {
    while (t[c] < 1) {
      int donor = -1;
      double best_surplus = -1e300;
      for (int d = 0; d < l; ++d) {
        if (d == c || t[d] < 2) continue;
        const double surplus = t[d] - target(d);
        if (surplus > best_surplus) {
          best_surplus = surplus;
          donor = d;
        }
      }
      if (donor < 0) throw std::invalid_argument("holdout_split: class " + std::to_string(c) +
                                                 " would get no train patterns");
      --t[donor];
      ++t[c];
    }
  }

  // When the test partition is large enough to host every class, no class
  // with two or more patterns may be fully absorbed into train.
  const int test_total = n - train_total;
  if (test_total >= l) {
    for (int c = 0; c < l; ++c) {
      while (static_cast<int>(by_class[c].size()) >= 2 &&
             t[c] == static_cast<int>(by_class[c].size())) {
        int recv = -1;
        double best_deficit = 1e300;
        for (int d = 0; d < l; ++d) {
          if (d == c || t[d] + 1 > static_cast<int>(by_class[d].size()) - 1) continue;
          const double deficit = t[d] - target(d);
          if (deficit < best_deficit) {
            best_deficit = deficit;
            recv = d;
          }
        }
        if (recv < 0) break;  // nowhere to move it; tolerate
        --t[c];
        ++t[recv];
      }
    }
  }

  Rng rng = make_rng(seed);
  std::vector<int> train_idx, test_idx;
  train_idx.reserve(train_total);
  test_idx.reserve(test_total);
  for (int c = 0; c < l; ++c) {
    std::vector<int>& idx = by_class[c];
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t k = 0; k < idx.size(); ++k)
      (static_cast<int>(k) < t[c] ? train_idx : test_idx).push_back(idx[k]);
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {train_idx, test_idx};
}

Partition Partition::from_features(Matrix x, std::vector<int> labels, int n_classes) {
  if (x.rows() != labels.size())
    throw std::invalid_argument("partition: feature/label count mismatch");
  Partition p;
  p.y = one_hot(labels, n_classes);
  p.log_x = Matrix(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (!(x(i, c) > 0.0))
        throw std::domain_error("partition: non-positive feature value (data not normalized?)");
      p.log_x(i, c) = std::log(x(i, c));
    }
  p.x = std::move(x);
  p.labels = std::move(labels);
  return p;
}

SplitDataset normalize(const RawDataset& raw, const std::vector<int>& train_idx,
                       const std::vector<int>& test_idx) {
  const std::size_t k = raw.n_features();
  if (train_idx.empty()) throw std::invalid_argument("normalize: empty train index list");

  std::vector<double> mn(k, std::numeric_limits<double>::infinity());
  std::vector<double> mx(k, -std::numeric_limits<double>::infinity());
  for (int i : train_idx)
    for (std::size_t c = 0; c < k; ++c) {
      mn[c] = std::min(mn[c], raw.features(i, c));
      mx[c] = std::max(mx[c], raw.features(i, c));
    }

  const auto emit = [&](const std::vector<int>& idx) {
    Matrix x(idx.size(), k);
    std::vector<int> labels(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      labels[r] = raw.labels[idx[r]];
      for (std::size_t c = 0; c < k; ++c) {
        double v = mx[c] > mn[c] ? 1.0 + (raw.features(idx[r], c) - mn[c]) / (mx[c] - mn[c]) : 1.0;
        x(r, c) = std::clamp(v, 1.0, 2.0);
      }
    }
    return Partition::from_features(std::move(x), std::move(labels), raw.n_classes);
  };

  SplitDataset out;
  out.name = raw.name;
  out.n_classes = raw.n_classes;
  out.feature_names = raw.feature_names;
  out.train = emit(train_idx);
  out.test = emit(test_idx);
  out.feature_min = std::move(mn);
  out.feature_max = std::move(mx);
  return out;
}

SplitDataset SplitDataset::make(const RawDataset& raw, double train_ratio, std::uint64_t seed) {
  const auto [train_idx, test_idx] = holdout_split(raw, train_ratio, seed);
  return normalize(raw, train_idx, test_idx);
}

std::string SplitDataset::to_json_string() const {
  json j;
  j["format"] = "punn-split";
  j["version"] = 1;
  j["dataset"] = name;
  j["n_classes"] = n_classes;
  j["feature_names"] = feature_names;
  j["feature_min"] = feature_min;
  j["feature_max"] = feature_max;
  const auto part = [](const Partition& p) {
    json q;
    q["labels"] = p.labels;
    json xs = json::array();
    for (std::size_t i = 0; i < p.x.rows(); ++i) {
      json row = json::array();
      for (std::size_t c = 0; c < p.x.cols(); ++c) row.push_back(p.x(i, c));
      xs.push_back(std::move(row));
    }
    q["x"] = std::move(xs);
    return q;
  };
  j["train"] = part(train);
  j["test"] = part(test);
  return j.dump();
}

void SplitDataset::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("split: cannot write " + path);
  out << to_json_string();
  out << '\n';
}

SplitDataset SplitDataset::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IngestError(std::string("split: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "punn-split")
      throw IngestError("split: unrecognized format tag");
    SplitDataset s;
    s.name = j.at("dataset").get<std::string>();
    s.n_classes = j.at("n_classes").get<int>();
    s.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    s.feature_min = j.at("feature_min").get<std::vector<double>>();
    s.feature_max = j.at("feature_max").get<std::vector<double>>();
    const auto part = [&](const json& q) {
      std::vector<int> labels = q.at("labels").get<std::vector<int>>();
      const auto& xs = q.at("x");
      Matrix x(xs.size(), s.feature_names.size());
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i].size() != s.feature_names.size())
          throw IngestError("split: inconsistent row width");
        for (std::size_t c = 0; c < s.feature_names.size(); ++c)
          x(i, c) = xs[i][c].get<double>();
      }
      return Partition::from_features(std::move(x), std::move(labels), s.n_classes);
    };
    s.train = part(j.at("train"));
    s.test = part(j.at("test"));
    return s;
  } catch (const json::exception& e) {
    throw IngestError(std::string("split: ") + e.what());
  }
}

SplitDataset SplitDataset::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("split: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_string(ss.str());
}

}  // namespace punn
