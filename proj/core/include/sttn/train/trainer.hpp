#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "sttn/data/preprocess.hpp"
#include "sttn/graph/traffic_graph.hpp"
#include "sttn/model/params.hpp"

namespace sttn::train {

struct TrainConfig {
  model::ModelConfig model;
  std::size_t epochs = 50;
  std::size_t batch_size = 50;
  double lr0 = 1e-3;
  double decay = 0.7;
  std::size_t decay_every = 5;
  double rho = 0.9;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  double grad_clip = 0.0;  // 0 disables clipping
  data::SplitFractions split;
  double kernel_sigma = 0.0;  // 0 derives sigma from the distances
  double kernel_epsilon = 0.1;

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_mae = 0.0;
  double val_mae = 0.0;
};

struct TrainResult {
  model::ModelParams params;  // best validation epoch (last epoch without a val split)
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_mae = 0.0;
};

// Assembles (B, M, N) normalized inputs for the given window indices.
ad::Tensor batch_inputs(const data::WindowedDataset& ds, std::span<const std::size_t> indices);
// Assembles (B, N, T) targets in original units.
ad::Tensor batch_targets(const data::WindowedDataset& ds, std::span<const std::size_t> indices);

// Forward pass for a batch, de-normalized to original units: (B, N, T).
ad::Tensor predict_batch(const model::ModelParams& params, const model::ModelConfig& config,
                         const graph::TrafficGraph& graph, const data::WindowedDataset& ds,
                         std::span<const std::size_t> indices);

// MAE in original units over all windows, horizons and nodes (multi-step).
double dataset_mae(const model::ModelParams& params, const model::ModelConfig& config,
                   const graph::TrafficGraph& graph, const data::WindowedDataset& ds);

// Seeded init, then per epoch: shuffle, batch, forward, de-normalize, MAE,
// backward, RMSprop with the step-decayed rate. Bitwise reproducible for a
// fixed (data, graph, config).
TrainResult train(const data::DatasetSplits& data, const graph::TrafficGraph& graph,
                  const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

// Continues training from the given parameters (used by train()).
TrainResult train_from(model::ModelParams params, const data::DatasetSplits& data,
                       const graph::TrafficGraph& graph, const TrainConfig& config,
                       const std::function<void(const EpochLog&)>& on_epoch = {});

void write_train_log_csv(std::ostream& out, const std::vector<EpochLog>& log);

}  // namespace sttn::train
