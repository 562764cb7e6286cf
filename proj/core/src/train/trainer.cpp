#include "sttn/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "sttn/autodiff/ops.hpp"
#include "sttn/data/csv.hpp"
#include "sttn/errors.hpp"
#include "sttn/model/sttn.hpp"
#include "sttn/train/metrics.hpp"
#include "sttn/train/optim.hpp"

namespace sttn::train {

void TrainConfig::validate() const {
  model.validate();
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(lr0 > 0.0)) throw ConfigError("lr0 must be positive");
  if (!(decay > 0.0)) throw ConfigError("decay must be positive");
  if (decay_every == 0) throw ConfigError("decay_every must be positive");
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho must lie in (0, 1)");
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (grad_clip < 0.0) throw ConfigError("grad_clip must be non-negative");
  if (kernel_sigma < 0.0) throw ConfigError("kernel_sigma must be non-negative");
  split.validate();
}

ad::Tensor batch_inputs(const data::WindowedDataset& ds, std::span<const std::size_t> indices) {
  const std::size_t m = ds.window;
  const std::size_t n = ds.n_nodes();
  std::vector<double> values;
  values.reserve(indices.size() * m * n);
  for (std::size_t i : indices) {
    const auto v = ds.inputs.at(i).data();
    values.insert(values.end(), v.begin(), v.end());
  }
  return ad::Tensor({indices.size(), m, n}, std::move(values));
}

ad::Tensor batch_targets(const data::WindowedDataset& ds, std::span<const std::size_t> indices) {
  const std::size_t t = ds.horizon;
  const std::size_t n = ds.n_nodes();
  std::vector<double> values;
  values.reserve(indices.size() * n * t);
  for (std::size_t i : indices) {
    const Matrix& target = ds.targets.at(i);  // T x N
    for (std::size_t node = 0; node < n; ++node)
      for (std::size_t step = 0; step < t; ++step) values.push_back(target(step, node));
  }
  return ad::Tensor({indices.size(), n, t}, std::move(values));
}

ad::Tensor predict_batch(const model::ModelParams& params, const model::ModelConfig& config,
                         const graph::TrafficGraph& graph, const data::WindowedDataset& ds,
                         std::span<const std::size_t> indices) {
  const ad::Tensor normalized =
      model::sttn_forward(batch_inputs(ds, indices), graph, config, params);
  return ad::add_scalar(ad::scale(normalized, ds.stats.std), ds.stats.mean);
}

double dataset_mae(const model::ModelParams& params, const model::ModelConfig& config,
                   const graph::TrafficGraph& graph, const data::WindowedDataset& ds) {
  if (ds.empty()) throw DataError("cannot score an empty dataset");
  ad::NoGradGuard no_grad;
  constexpr std::size_t kChunk = 64;
  double abs_sum = 0.0;
  std::size_t count = 0;
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < ds.size(); begin += kChunk) {
    idx.resize(std::min(kChunk, ds.size() - begin));
    std::iota(idx.begin(), idx.end(), begin);
    const auto pred = predict_batch(params, config, graph, ds, idx);
    const auto truth = batch_targets(ds, idx);
    for (std::size_t i = 0; i < pred.numel(); ++i) {
      abs_sum += std::fabs(pred.data()[i] - truth.data()[i]);
    }
    count += pred.numel();
  }
  return abs_sum / static_cast<double>(count);
}

TrainResult train(const data::DatasetSplits& data, const graph::TrafficGraph& graph,
                  const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  return train_from(model::init_params(config.model, graph.adjacency(), config.seed), data, graph,
                    config, on_epoch);
}

TrainResult train_from(model::ModelParams params, const data::DatasetSplits& data,
                       const graph::TrafficGraph& graph, const TrainConfig& config,
                       const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  if (data.train.empty()) throw DataError("training split has no windows");
  if (data.train.n_nodes() != config.model.n_nodes || graph.n_nodes() != config.model.n_nodes) {
    throw ConfigError("dataset, graph and model disagree on the node count");
  }
  if (data.train.window != config.model.window || data.train.horizon != config.model.horizon) {
    throw ConfigError("dataset windows do not match the model's M and T");
  }

  TrainResult result;
  result.params = deep_copy(params);
  result.best_val_mae = std::numeric_limits<double>::infinity();
  const auto named = params.named();
  RmspropState state;
  const RmspropOptions opt{config.rho, config.eps};
  // Offset keeps the shuffle stream distinct from the init stream.
  std::mt19937_64 shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, config.lr0, config.decay, config.decay_every);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double abs_sum = 0.0;
    std::size_t count = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      for (const auto& p : named) {
        ad::Tensor t = p.tensor;
        t.zero_grad();
      }
      const ad::Tensor pred = predict_batch(params, config.model, graph, data.train, idx);
      const ad::Tensor loss = mae_loss(pred, batch_targets(data.train, idx));
      if (!std::isfinite(loss.item())) {
        throw TrainingError("loss diverged at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(begin / config.batch_size));
      }
      ad::backward(loss);
      if (config.grad_clip > 0.0) clip_gradients(named, config.grad_clip);
      rmsprop_step(named, state, lr, opt);
      abs_sum += loss.item() * static_cast<double>(pred.numel());
      count += pred.numel();
    }

    EpochLog entry{epoch, lr, abs_sum / static_cast<double>(count), 0.0};
    const bool has_val = !data.val.empty();
    entry.val_mae = has_val ? dataset_mae(params, config.model, graph, data.val) : entry.train_mae;
    if (!has_val || entry.val_mae < result.best_val_mae) {
      result.best_val_mae = entry.val_mae;
      result.best_epoch = epoch;
      result.params = deep_copy(params);
    }
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  if (config.epochs == 0) result.best_val_mae = 0.0;
  return result;
}

void write_train_log_csv(std::ostream& out, const std::vector<EpochLog>& log) {
  out << "epoch,lr,train_mae,val_mae\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << data::format_double(e.lr) << ',' << data::format_double(e.train_mae)
        << ',' << data::format_double(e.val_mae) << '\n';
  }
}

}  // namespace sttn::train
