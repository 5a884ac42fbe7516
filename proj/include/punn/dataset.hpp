#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "punn/matrix.hpp"

namespace punn {

// Describes how to read one delimited text file: which column carries the
// class label, the label order (label -> class index), and which columns are
// symbolic and get one-of-k expanded. Loaded from a small JSON file.
struct DatasetSchema {
  std::string name;
  int target_column = -1;
  std::vector<std::string> class_labels;
  std::vector<int> categorical_columns;
  std::vector<int> ignore_columns;
  // unset -> autodetect from the first row
  std::optional<bool> has_header;

  static DatasetSchema load(const std::string& path);
};

struct RawDataset {
  std::string name;
  Matrix features;               // n x k, all numeric after one-of-k expansion
  std::vector<int> labels;       // in [0, n_classes)
  int n_classes = 0;
  std::vector<std::string> feature_names;

  std::size_t size() const { return features.rows(); }
  std::size_t n_features() const { return features.cols(); }
};

// One side of the hold-out split: normalized features in [1,2], one-hot
// targets, and precomputed ln(x) used by the product-unit fast path.
struct Partition {
  Matrix x;
  Matrix y;                      // one-hot, n x l
  std::vector<int> labels;
  Matrix log_x;

  static Partition from_features(Matrix x, std::vector<int> labels, int n_classes);
  std::size_t size() const { return x.rows(); }
  std::size_t n_features() const { return x.cols(); }
};

struct SplitDataset {
  std::string name;
  int n_classes = 0;
  std::vector<std::string> feature_names;
  std::vector<double> feature_min;   // per-feature train minimum (pre-normalization)
  std::vector<double> feature_max;
  Partition train;
  Partition test;

  std::size_t n_features() const { return train.n_features(); }

  // Canonical JSON form; identical splits serialize to identical bytes.
  void save(const std::string& path) const;
  std::string to_json_string() const;
  static SplitDataset load(const std::string& path);
  static SplitDataset from_json_string(const std::string& text);

  static SplitDataset make(const RawDataset& raw, double train_ratio, std::uint64_t seed);
};

RawDataset load_csv(const std::string& path, const DatasetSchema& schema);

Matrix one_hot(std::span<const int> labels, int n_classes);

// Stratified shuffle split. Train size follows the published per-dataset
// counts for the five known benchmark names (and totals), otherwise
// round(ratio * n). Returns sorted (train, test) index lists.
std::pair<std::vector<int>, std::vector<int>> holdout_split(const RawDataset& raw,
                                                            double train_ratio,
                                                            std::uint64_t seed);

// [1,2] normalization with statistics taken from the train rows only; test
// values are clamped into [1,2]. A constant train feature maps to 1.
SplitDataset normalize(const RawDataset& raw, const std::vector<int>& train_idx,
                       const std::vector<int>& test_idx);

// Published train-partition size for the five benchmark datasets, keyed by
// canonical name or total pattern count. nullopt for anything else.
std::optional<int> table_train_size(const std::string& name, std::size_t total);

}  // namespace punn
