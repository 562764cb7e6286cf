#pragma once

#include <cstddef>
#include <vector>

#include "sttn/matrix.hpp"

namespace sttn::data {

struct SplitFractions {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;

  void validate() const;
};

// Contiguous row ranges [0, train_end), [train_end, val_end), [val_end, total).
struct SplitBounds {
  std::size_t train_end = 0;
  std::size_t val_end = 0;
  std::size_t total = 0;
};

SplitBounds split_bounds(std::size_t length, const SplitFractions& fractions);

struct ZScoreStats {
  double mean = 0.0;
  double std = 1.0;

  double normalize(double x) const { return (x - mean) / std; }
  double denormalize(double z) const { return z * std + mean; }
  Matrix normalize(const Matrix& m) const;
  Matrix denormalize(const Matrix& m) const;
};

struct ZScoreResult {
  Matrix normalized;
  ZScoreStats stats;
};

// Statistics over every value of the training rows only; applied to all rows.
ZScoreResult zscore(const Matrix& series, const SplitFractions& fractions);

enum class Split { kTrain, kVal, kTest };

const char* to_string(Split split);

struct WindowedDataset {
  std::vector<Matrix> inputs;              // M x N, normalized
  std::vector<Matrix> targets;             // T x N, original units
  std::vector<std::size_t> target_start;   // absolute row of each target's first step
  ZScoreStats stats;
  Split split = Split::kTrain;
  std::size_t window = 0;
  std::size_t horizon = 0;

  std::size_t size() const { return inputs.size(); }
  bool empty() const { return inputs.empty(); }
  std::size_t n_nodes() const { return inputs.empty() ? 0 : inputs.front().cols(); }
};

// Sliding windows over raw rows: input rows [s, s+M) normalized with `stats`,
// target rows [s+M, s+M+T) kept in original units. row_offset is the
// absolute index of raw row 0.
WindowedDataset make_windows(const Matrix& raw, std::size_t window, std::size_t horizon,
                             const ZScoreStats& stats, Split split = Split::kTrain,
                             std::size_t row_offset = 0);

struct DatasetSplits {
  WindowedDataset train;
  WindowedDataset val;
  WindowedDataset test;
  ZScoreStats stats;
  SplitBounds bounds;
};

// Splits in time order, normalizes with training statistics, and windows
// each split independently so no window straddles a boundary. A split with
// zero fraction yields an empty dataset.
DatasetSplits prepare_datasets(const Matrix& raw, std::size_t window, std::size_t horizon,
                               const SplitFractions& fractions = {});

}  // namespace sttn::data
