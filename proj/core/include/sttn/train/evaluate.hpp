#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "sttn/data/preprocess.hpp"
#include "sttn/graph/traffic_graph.hpp"
#include "sttn/model/params.hpp"
#include "sttn/train/metrics.hpp"

namespace sttn::train {

enum class InferenceMode {
  kMultiStep,      // every horizon read from one forward pass
  kAutoregressive  // one-step predictions fed back into the window
};

const char* to_string(InferenceMode mode);  // "MS" or "AR"
InferenceMode parse_inference_mode(const std::string& text);  // case-insensitive ms|ar

inline constexpr std::size_t kMinutesPerStep = 5;

struct HorizonMetrics {
  std::size_t steps = 0;
  std::size_t minutes = 0;
  Metrics metrics;
};

struct EvalReport {
  std::string model_tag;
  InferenceMode mode = InferenceMode::kMultiStep;
  std::vector<HorizonMetrics> rows;

  // Row for the given horizon in steps; throws ValueError if absent.
  const HorizonMetrics& at_steps(std::size_t steps) const;
};

// {3, 6, 9, 12} restricted to <= T; {T} when T < 3.
std::vector<std::size_t> default_horizons(std::size_t horizon);

// Predictions in original units, one (T x N) matrix per window. AR mode uses
// only the first output column of each forward pass and chains T passes.
std::vector<Matrix> predict_dataset(const model::ModelParams& params,
                                    const model::ModelConfig& config,
                                    const graph::TrafficGraph& graph,
                                    const data::WindowedDataset& ds, InferenceMode mode);

// Metrics of per-window predictions (T x N each) against the dataset targets.
EvalReport score_predictions(const std::vector<Matrix>& predictions,
                             const data::WindowedDataset& ds,
                             const std::vector<std::size_t>& horizons, std::string model_tag,
                             InferenceMode mode);

EvalReport evaluate(const model::ModelParams& params, const model::ModelConfig& config,
                    const graph::TrafficGraph& graph, const data::WindowedDataset& ds,
                    const std::vector<std::size_t>& horizons, InferenceMode mode);

// Predicts the mean of the M input steps per node at every horizon.
EvalReport historical_average(const data::WindowedDataset& ds,
                              const std::vector<std::size_t>& horizons);

// Multi-step forecast (N x T, original units) from the last M rows of `raw`.
Matrix forecast_final_window(const model::ModelParams& params, const model::ModelConfig& config,
                             const graph::TrafficGraph& graph, const Matrix& raw,
                             const data::ZScoreStats& stats);

// CSV with header horizon_min,mae,mape_pct,rmse,mode; undefined MAPE is "NA".
void write_report_csv(std::ostream& out, const EvalReport& report);

}  // namespace sttn::train
