#include "sttn/train/evaluate.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <ostream>

#include "sttn/autodiff/ops.hpp"
#include "sttn/data/csv.hpp"
#include "sttn/errors.hpp"
#include "sttn/model/sttn.hpp"
#include "sttn/train/trainer.hpp"

namespace sttn::train {

const char* to_string(InferenceMode mode) {
  return mode == InferenceMode::kMultiStep ? "MS" : "AR";
}

InferenceMode parse_inference_mode(const std::string& text) {
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "ms") return InferenceMode::kMultiStep;
  if (lower == "ar") return InferenceMode::kAutoregressive;
  throw ValueError("unknown inference mode '" + text + "', expected ms or ar");
}

const HorizonMetrics& EvalReport::at_steps(std::size_t steps) const {
  for (const auto& row : rows) {
    if (row.steps == steps) return row;
  }
  throw ValueError("report has no row for horizon " + std::to_string(steps));
}

std::vector<std::size_t> default_horizons(std::size_t horizon) {
  std::vector<std::size_t> out;
  for (std::size_t h : {3, 6, 9, 12}) {
    if (h <= horizon) out.push_back(h);
  }
  if (out.empty() && horizon > 0) out.push_back(horizon);
  return out;
}

namespace {

constexpr std::size_t kChunk = 64;

void check_horizons(const std::vector<std::size_t>& horizons, std::size_t max_steps) {
  if (horizons.empty()) throw ValueError("no horizons requested");
  for (std::size_t h : horizons) {
    if (h == 0 || h > max_steps) {
      throw ValueError("horizon " + std::to_string(h) + " is outside 1.." +
                       std::to_string(max_steps));
    }
  }
}

// (B, N, T) tensor -> B matrices of T x N.
void append_transposed(const ad::Tensor& pred, std::vector<Matrix>& out) {
  const std::size_t b = pred.dim(0), n = pred.dim(1), t = pred.dim(2);
  const auto v = pred.data();
  for (std::size_t i = 0; i < b; ++i) {
    Matrix m(t, n);
    for (std::size_t node = 0; node < n; ++node)
      for (std::size_t step = 0; step < t; ++step) m(step, node) = v[(i * n + node) * t + step];
    out.push_back(std::move(m));
  }
}

}  // namespace

std::vector<Matrix> predict_dataset(const model::ModelParams& params,
                                    const model::ModelConfig& config,
                                    const graph::TrafficGraph& graph,
                                    const data::WindowedDataset& ds, InferenceMode mode) {
  if (ds.empty()) throw DataError("cannot evaluate an empty dataset");
  ad::NoGradGuard no_grad;
  std::vector<Matrix> out;
  out.reserve(ds.size());
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < ds.size(); begin += kChunk) {
    idx.resize(std::min(kChunk, ds.size() - begin));
    std::iota(idx.begin(), idx.end(), begin);
    if (mode == InferenceMode::kMultiStep) {
      append_transposed(predict_batch(params, config, graph, ds, idx), out);
      continue;
    }
    const std::size_t b = idx.size(), m = ds.window, n = ds.n_nodes(), t = ds.horizon;
    const ad::Tensor first = batch_inputs(ds, idx);
    std::vector<double> window(first.data().begin(), first.data().end());
    std::vector<double> chained(b * n * t);  // (B, N, T) original units
    for (std::size_t step = 0; step < t; ++step) {
      const ad::Tensor pred = model::sttn_forward(ad::Tensor({b, m, n}, window), graph, config,
                                                  params);
      const auto v = pred.data();
      const std::size_t t_out = pred.dim(2);
      std::vector<double> next(window.size());
      for (std::size_t i = 0; i < b; ++i) {
        const double* src = window.data() + i * m * n;
        std::copy(src + n, src + m * n, next.data() + i * m * n);
        for (std::size_t node = 0; node < n; ++node) {
          const double value = ds.stats.denormalize(v[(i * n + node) * t_out]);
          chained[(i * n + node) * t + step] = value;
          next[i * m * n + (m - 1) * n + node] = ds.stats.normalize(value);
        }
      }
      window = std::move(next);
    }
    append_transposed(ad::Tensor({b, n, t}, std::move(chained)), out);
  }
  return out;
}

EvalReport score_predictions(const std::vector<Matrix>& predictions,
                             const data::WindowedDataset& ds,
                             const std::vector<std::size_t>& horizons, std::string model_tag,
                             InferenceMode mode) {
  if (predictions.size() != ds.size()) {
    throw DimensionError(std::to_string(predictions.size()) + " predictions for " +
                         std::to_string(ds.size()) + " windows");
  }
  check_horizons(horizons, ds.horizon);
  EvalReport report{std::move(model_tag), mode, {}};
  const std::size_t n = ds.n_nodes();
  std::vector<double> pred, truth;
  for (std::size_t h : horizons) {
    pred.clear();
    truth.clear();
    for (std::size_t i = 0; i < ds.size(); ++i) {
      for (std::size_t node = 0; node < n; ++node) {
        pred.push_back(predictions[i](h - 1, node));
        truth.push_back(ds.targets[i](h - 1, node));
      }
    }
    report.rows.push_back({h, h * kMinutesPerStep, compute_metrics(pred, truth)});
  }
  return report;
}

EvalReport evaluate(const model::ModelParams& params, const model::ModelConfig& config,
                    const graph::TrafficGraph& graph, const data::WindowedDataset& ds,
                    const std::vector<std::size_t>& horizons, InferenceMode mode) {
  check_horizons(horizons, ds.horizon);
  return score_predictions(predict_dataset(params, config, graph, ds, mode), ds, horizons, "STTN",
                           mode);
}

EvalReport historical_average(const data::WindowedDataset& ds,
                              const std::vector<std::size_t>& horizons) {
  if (ds.empty()) throw DataError("cannot evaluate an empty dataset");
  const std::size_t n = ds.n_nodes();
  std::vector<Matrix> predictions;
  predictions.reserve(ds.size());
  for (const Matrix& input : ds.inputs) {
    const Matrix raw = ds.stats.denormalize(input);
    Matrix pred(ds.horizon, n);
    for (std::size_t node = 0; node < n; ++node) {
      double sum = 0.0;
      for (std::size_t r = 0; r < raw.rows(); ++r) sum += raw(r, node);
      const double mean = sum / static_cast<double>(raw.rows());
      for (std::size_t step = 0; step < ds.horizon; ++step) pred(step, node) = mean;
    }
    predictions.push_back(std::move(pred));
  }
  return score_predictions(predictions, ds, horizons, "HA", InferenceMode::kMultiStep);
}

Matrix forecast_final_window(const model::ModelParams& params, const model::ModelConfig& config,
                             const graph::TrafficGraph& graph, const Matrix& raw,
                             const data::ZScoreStats& stats) {
  const std::size_t m = config.window;
  if (raw.rows() < m) {
    throw DataError("series has " + std::to_string(raw.rows()) + " rows, need at least M=" +
                    std::to_string(m));
  }
  const Matrix window = stats.normalize(raw.rows_slice(raw.rows() - m, raw.rows()));
  ad::NoGradGuard no_grad;
  const ad::Tensor input({m, raw.cols()}, window.values());
  const ad::Tensor pred = model::sttn_forward(input, graph, config, params);
  const std::size_t n = pred.dim(0), t = pred.dim(1);
  Matrix out(n, t);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < t; ++j) out(i, j) = stats.denormalize(pred.data()[i * t + j]);
  return out;
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "horizon_min,mae,mape_pct,rmse,mode\n";
  for (const auto& row : report.rows) {
    out << row.minutes << ',' << data::format_double(row.metrics.mae) << ','
        << (row.metrics.mape_pct ? data::format_double(*row.metrics.mape_pct) : "NA") << ','
        << data::format_double(row.metrics.rmse) << ',' << to_string(report.mode) << '\n';
  }
}

}  // namespace sttn::train
