#include "sttn/data/preprocess.hpp"

#include <cmath>
#include <string>

#include "sttn/errors.hpp"

namespace sttn::data {

void SplitFractions::validate() const {
  if (!(train > 0.0) || val < 0.0 || test < 0.0) {
    throw ConfigError("split fractions need train > 0 and non-negative val/test");
  }
  if (std::fabs(train + val + test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
}

SplitBounds split_bounds(std::size_t length, const SplitFractions& fractions) {
  fractions.validate();
  const double l = static_cast<double>(length);
  SplitBounds b;
  b.total = length;
  b.train_end = static_cast<std::size_t>(std::floor(l * fractions.train + 1e-9));
  b.val_end = fractions.test == 0.0
                  ? length
                  : static_cast<std::size_t>(std::floor(l * (fractions.train + fractions.val) + 1e-9));
  if (fractions.val == 0.0 && fractions.test == 0.0) b.train_end = length;
  b.val_end = std::min(std::max(b.val_end, b.train_end), length);
  return b;
}

Matrix ZScoreStats::normalize(const Matrix& m) const {
  Matrix out = m;
  for (double& v : out.data()) v = normalize(v);
  return out;
}

Matrix ZScoreStats::denormalize(const Matrix& m) const {
  Matrix out = m;
  for (double& v : out.data()) v = denormalize(v);
  return out;
}

ZScoreResult zscore(const Matrix& series, const SplitFractions& fractions) {
  const auto bounds = split_bounds(series.rows(), fractions);
  if (bounds.train_end == 0) throw DataError("training split is empty");
  const std::size_t count = bounds.train_end * series.cols();
  double total = 0.0;
  for (std::size_t i = 0; i < count; ++i) total += series.data()[i];
  ZScoreStats stats;
  stats.mean = total / static_cast<double>(count);
  double ss = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double d = series.data()[i] - stats.mean;
    ss += d * d;
  }
  stats.std = std::sqrt(ss / static_cast<double>(count));
  if (!(stats.std > 0.0)) throw DataError("training series is constant (std = 0)");
  return {stats.normalize(series), stats};
}

const char* to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

WindowedDataset make_windows(const Matrix& raw, std::size_t window, std::size_t horizon,
                             const ZScoreStats& stats, Split split, std::size_t row_offset) {
  if (window == 0 || horizon == 0) throw ConfigError("M and T must be positive");
  const std::size_t length = raw.rows();
  if (length < window + horizon) {
    throw DataError(std::string(to_string(split)) + " split has " + std::to_string(length) +
                    " rows, needs at least M+T = " + std::to_string(window + horizon));
  }
  WindowedDataset ds;
  ds.stats = stats;
  ds.split = split;
  ds.window = window;
  ds.horizon = horizon;
  const std::size_t count = length - window - horizon + 1;
  for (std::size_t s = 0; s < count; ++s) {
    ds.inputs.push_back(stats.normalize(raw.rows_slice(s, s + window)));
    ds.targets.push_back(raw.rows_slice(s + window, s + window + horizon));
    ds.target_start.push_back(row_offset + s + window);
  }
  return ds;
}

DatasetSplits prepare_datasets(const Matrix& raw, std::size_t window, std::size_t horizon,
                               const SplitFractions& fractions) {
  DatasetSplits out;
  out.bounds = split_bounds(raw.rows(), fractions);
  out.stats = zscore(raw, fractions).stats;
  auto windows = [&](std::size_t begin, std::size_t end, Split split) {
    if (begin == end) {
      WindowedDataset empty;
      empty.stats = out.stats;
      empty.split = split;
      empty.window = window;
      empty.horizon = horizon;
      return empty;
    }
    return make_windows(raw.rows_slice(begin, end), window, horizon, out.stats, split, begin);
  };
  out.train = windows(0, out.bounds.train_end, Split::kTrain);
  out.val = windows(out.bounds.train_end, out.bounds.val_end, Split::kVal);
  out.test = windows(out.bounds.val_end, out.bounds.total, Split::kTest);
  return out;
}

}  // namespace sttn::data
