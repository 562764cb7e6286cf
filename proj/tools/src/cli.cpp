#include "sttn_cli/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "sttn/data/csv.hpp"
#include "sttn/data/synth.hpp"
#include "sttn/errors.hpp"
#include "sttn/io/attention_dump.hpp"
#include "sttn/io/checkpoint.hpp"
#include "sttn/io/config.hpp"
#include "sttn/model/sttn.hpp"
#include "sttn/train/evaluate.hpp"
#include "sttn/train/model_gradcheck.hpp"
#include "sttn/train/trainer.hpp"

namespace sttn::cli {

namespace {

namespace fs = std::filesystem;

struct Inputs {
  std::string speeds;
  std::string distances;
};

struct LoadedData {
  data::SpeedSeries series;
  std::vector<graph::DistanceEntry> distances;
};

LoadedData load_inputs(const Inputs& in) {
  LoadedData d;
  d.series = data::load_speed_csv(in.speeds);
  d.distances = data::load_distance_csv(in.distances, d.series.n_nodes());
  return d;
}

graph::TrafficGraph build_graph(const std::vector<graph::DistanceEntry>& distances,
                                const train::TrainConfig& config, std::ostream& err) {
  graph::KernelOptions kernel;
  if (config.kernel_sigma > 0.0) kernel.sigma = config.kernel_sigma;
  kernel.epsilon = config.kernel_epsilon;
  auto adjacency = graph::gaussian_kernel_adjacency(distances, config.model.n_nodes, kernel);
  for (const auto& w : adjacency.warnings) err << "warning: " << w << '\n';
  return graph::TrafficGraph(std::move(adjacency.adjacency), config.model.cheb_order);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

// Windows of one split built with the checkpoint's normalization.
data::WindowedDataset split_windows(const Matrix& raw, const train::TrainConfig& config,
                                    const data::ZScoreStats& stats, data::Split split) {
  const auto b = data::split_bounds(raw.rows(), config.split);
  std::size_t begin = 0, end = b.train_end;
  if (split == data::Split::kVal) begin = b.train_end, end = b.val_end;
  if (split == data::Split::kTest) begin = b.val_end, end = b.total;
  if (end - begin < config.model.window + config.model.horizon) {
    throw DataError(std::string(data::to_string(split)) + " split has " +
                    std::to_string(end - begin) + " rows, fewer than M+T=" +
                    std::to_string(config.model.window + config.model.horizon));
  }
  return data::make_windows(raw.rows_slice(begin, end), config.model.window,
                            config.model.horizon, stats, split, begin);
}

data::Split parse_split(const std::string& s) {
  if (s == "train") return data::Split::kTrain;
  if (s == "val") return data::Split::kVal;
  if (s == "test") return data::Split::kTest;
  throw ValueError("unknown split '" + s + "', expected train, val or test");
}

void check_nodes(const io::Checkpoint& ckpt, const data::SpeedSeries& series) {
  if (ckpt.config.model.n_nodes != series.n_nodes()) {
    throw ConfigError("checkpoint has " + std::to_string(ckpt.config.model.n_nodes) +
                      " nodes but the speeds file has " + std::to_string(series.n_nodes()));
  }
}

int cmd_synth(std::size_t nodes, std::size_t length, std::uint64_t seed, const std::string& dir,
              std::ostream& out) {
  const auto synth = data::synth_generate(nodes, length, seed);
  fs::create_directories(dir);
  const fs::path speeds = fs::path(dir) / "speeds.csv";
  const fs::path distances = fs::path(dir) / "distances.csv";
  data::save_speed_csv(speeds, synth.series);
  data::save_distance_csv(distances, synth.distances);
  out << "wrote " << speeds.string() << " and " << distances.string() << '\n';
  return kExitOk;
}

struct TrainArgs {
  Inputs inputs;
  std::string config_path;
  std::string out;
  std::string log;
  std::size_t trials = 1;
};

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  auto config = args.config_path.empty() ? train::TrainConfig{} : io::load_config(args.config_path);
  const auto inputs = load_inputs(args.inputs);
  if (config.model.n_nodes == 0) config.model.n_nodes = inputs.series.n_nodes();
  if (config.model.n_nodes != inputs.series.n_nodes()) {
    throw ConfigError("config n_nodes=" + std::to_string(config.model.n_nodes) +
                      " but the speeds file has " + std::to_string(inputs.series.n_nodes()));
  }
  config.validate();
  if (args.trials == 0) throw ValueError("--trials must be at least 1");
  const auto graph = build_graph(inputs.distances, config, err);
  const auto splits = data::prepare_datasets(inputs.series.values, config.model.window,
                                             config.model.horizon, config.split);

  std::vector<train::TrainResult> results;
  std::vector<double> test_mae;
  for (std::size_t trial = 0; trial < args.trials; ++trial) {
    train::TrainConfig trial_config = config;
    trial_config.seed = config.seed + trial;
    auto result = train::train(splits, graph, trial_config, [&](const train::EpochLog& e) {
      out << "trial " << trial << " epoch " << e.epoch << " lr " << e.lr << " train_mae "
          << e.train_mae << " val_mae " << e.val_mae << '\n';
    });
    if (!splits.test.empty()) {
      test_mae.push_back(train::dataset_mae(result.params, config.model, graph, splits.test));
      out << "trial " << trial << " best_epoch " << result.best_epoch << " test_mae "
          << test_mae.back() << '\n';
    }
    results.push_back(std::move(result));
  }
  std::size_t best = 0;
  for (std::size_t t = 1; t < results.size(); ++t) {
    if (results[t].best_val_mae < results[best].best_val_mae) best = t;
  }
  if (test_mae.size() > 1) {
    double mean = 0.0, sq = 0.0;
    for (double v : test_mae) mean += v;
    mean /= static_cast<double>(test_mae.size());
    for (double v : test_mae) sq += (v - mean) * (v - mean);
    out << "trials " << test_mae.size() << " test_mae_mean " << mean << " test_mae_std "
        << std::sqrt(sq / static_cast<double>(test_mae.size())) << '\n';
  }

  train::TrainConfig saved = config;
  saved.seed = config.seed + best;
  io::save_checkpoint({saved, splits.stats, results[best].params}, args.out);
  const std::string log_path = args.log.empty() ? args.out + ".log.csv" : args.log;
  auto log = open_out(log_path);
  train::write_train_log_csv(log, results[best].log);
  out << "checkpoint " << args.out << " (trial " << best << ", epoch " << results[best].best_epoch
      << ")\nlog " << log_path << '\n';
  return kExitOk;
}

struct EvalArgs {
  Inputs inputs;
  std::string checkpoint;
  std::string mode = "ms";
  std::string baseline;
  std::string split = "test";
  std::vector<std::size_t> horizons;
  std::string out;
};

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  const auto ckpt = io::load_checkpoint(args.checkpoint);
  const auto inputs = load_inputs(args.inputs);
  check_nodes(ckpt, inputs.series);
  const auto ds =
      split_windows(inputs.series.values, ckpt.config, ckpt.stats, parse_split(args.split));
  const auto horizons =
      args.horizons.empty() ? train::default_horizons(ckpt.config.model.horizon) : args.horizons;
  train::EvalReport report;
  if (args.baseline.empty()) {
    const auto graph = build_graph(inputs.distances, ckpt.config, err);
    report = train::evaluate(ckpt.params, ckpt.config.model, graph, ds, horizons,
                             train::parse_inference_mode(args.mode));
  } else if (args.baseline == "ha") {
    report = train::historical_average(ds, horizons);
  } else {
    throw ValueError("unknown baseline '" + args.baseline + "', expected ha");
  }
  if (args.out.empty()) {
    train::write_report_csv(out, report);
  } else {
    auto file = open_out(args.out);
    train::write_report_csv(file, report);
    out << "wrote " << args.out << '\n';
  }
  return kExitOk;
}

int cmd_forecast(const Inputs& in, const std::string& checkpoint, const std::string& out_path,
                 std::ostream& out, std::ostream& err) {
  const auto ckpt = io::load_checkpoint(checkpoint);
  const auto inputs = load_inputs(in);
  check_nodes(ckpt, inputs.series);
  const auto graph = build_graph(inputs.distances, ckpt.config, err);
  const Matrix pred = train::forecast_final_window(ckpt.params, ckpt.config.model, graph,
                                                   inputs.series.values, ckpt.stats);
  auto file = open_out(out_path);
  file << "sensor";
  for (std::size_t t = 0; t < pred.cols(); ++t) file << ",step_" << t + 1;
  file << '\n';
  for (std::size_t n = 0; n < pred.rows(); ++n) {
    file << inputs.series.sensor_ids.at(n);
    for (std::size_t t = 0; t < pred.cols(); ++t) file << ',' << data::format_double(pred(n, t));
    file << '\n';
  }
  out << "wrote " << out_path << '\n';
  return kExitOk;
}

int cmd_gradcheck(const std::string& config_path, double step, std::uint64_t seed,
                  std::ostream& out) {
  train::TrainConfig base;
  base.model = train::gradcheck_model_config();
  const auto config = config_path.empty() ? base : io::load_config(config_path, base);
  train::ModelGradCheckOptions options;
  options.step = step;
  options.seed = seed;
  const auto report = train::model_gradient_check(config.model, options);
  constexpr double kTolerance = 1e-4;
  out << std::setprecision(6) << "entries " << report.entries << '\n'
      << "worst " << report.worst_param << '[' << report.worst_index << "] analytic "
      << report.worst_analytic << " numeric " << report.worst_numeric << '\n'
      << "max_relative_error " << report.max_relative_error << '\n';
  return report.max_relative_error < kTolerance ? kExitOk : kExitDomainError;
}

struct DumpArgs {
  Inputs inputs;
  std::string checkpoint;
  std::string split = "test";
  long window = -1;  // negative counts from the end
  std::string out;
};

int cmd_dump_attn(const DumpArgs& args, std::ostream& out, std::ostream& err) {
  const auto ckpt = io::load_checkpoint(args.checkpoint);
  const auto inputs = load_inputs(args.inputs);
  check_nodes(ckpt, inputs.series);
  const auto graph = build_graph(inputs.distances, ckpt.config, err);
  const auto ds =
      split_windows(inputs.series.values, ckpt.config, ckpt.stats, parse_split(args.split));
  const long size = static_cast<long>(ds.size());
  const long index = args.window < 0 ? size + args.window : args.window;
  if (index < 0 || index >= size) {
    throw IndexError("window " + std::to_string(args.window) + " is outside a split of " +
                     std::to_string(size) + " windows");
  }
  const Matrix& w = ds.inputs[static_cast<std::size_t>(index)];
  model::AttentionTrace trace;
  {
    ad::NoGradGuard no_grad;
    model::sttn_forward(ad::Tensor({w.rows(), w.cols()}, w.values()), graph, ckpt.config.model,
                        ckpt.params, {&trace});
  }
  auto file = open_out(args.out);
  io::write_attention_csv(file, trace);
  out << "wrote " << trace.size() << " attention stacks to " << args.out << '\n';
  return kExitOk;
}

void add_inputs(CLI::App* cmd, Inputs& in) {
  cmd->add_option("--speeds", in.speeds, "Speed CSV (header of sensor IDs, one row per step)")
      ->required();
  cmd->add_option("--distances", in.distances, "Distance CSV (from,to,distance)")->required();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatial-temporal transformer traffic forecaster", "sttn"};
  app.require_subcommand(1);

  std::size_t nodes = 8, length = 600;
  std::uint64_t synth_seed = 7;
  std::string out_dir = ".";
  auto* synth = app.add_subcommand("synth", "Generate a synthetic road network and speed series");
  synth->add_option("--nodes", nodes, "Sensor count")->check(CLI::PositiveNumber);
  synth->add_option("--length", length, "Number of 5-minute steps")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "RNG seed");
  synth->add_option("--out-dir", out_dir, "Directory for speeds.csv and distances.csv");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  add_inputs(train_cmd, train_args.inputs);
  train_cmd->add_option("--config", train_args.config_path, "key = value config file");
  train_cmd->add_option("--out", train_args.out, "Checkpoint path")->required();
  train_cmd->add_option("--log", train_args.log, "Training log CSV (default <out>.log.csv)");
  train_cmd->add_option("--trials", train_args.trials, "Independent seeds seed..seed+n-1");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Per-horizon MAE/MAPE/RMSE report");
  add_inputs(eval_cmd, eval_args.inputs);
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint path")->required();
  eval_cmd->add_option("--mode", eval_args.mode, "ms (multi-step) or ar (autoregressive)")
      ->check(CLI::IsMember({"ms", "ar", "MS", "AR"}));
  eval_cmd->add_option("--baseline", eval_args.baseline, "Report a baseline instead (ha)")
      ->check(CLI::IsMember({"ha"}));
  eval_cmd->add_option("--split", eval_args.split, "train, val or test")
      ->check(CLI::IsMember({"train", "val", "test"}));
  eval_cmd->add_option("--horizons", eval_args.horizons, "Horizons in steps (default 3 6 9 12)");
  eval_cmd->add_option("--out", eval_args.out, "Report CSV (default stdout)");

  Inputs forecast_inputs;
  std::string forecast_ckpt, forecast_out;
  auto* forecast = app.add_subcommand("forecast", "N x T forecast from the final window");
  add_inputs(forecast, forecast_inputs);
  forecast->add_option("--checkpoint", forecast_ckpt, "Checkpoint path")->required();
  forecast->add_option("--out", forecast_out, "Forecast CSV")->required();

  std::string gc_config;
  double gc_step = train::ModelGradCheckOptions{}.step;
  std::uint64_t gc_seed = train::ModelGradCheckOptions{}.seed;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of model gradients");
  gradcheck->add_option("--config", gc_config, "Overrides for the 4-node check model");
  gradcheck->add_option("--step", gc_step, "Central-difference step in [1e-8, 1e-4]");
  gradcheck->add_option("--seed", gc_seed, "Seed for graph, parameters and batch");

  DumpArgs dump_args;
  auto* dump = app.add_subcommand("dump-attn", "Write every attention matrix of one window");
  add_inputs(dump, dump_args.inputs);
  dump->add_option("--checkpoint", dump_args.checkpoint, "Checkpoint path")->required();
  dump->add_option("--split", dump_args.split, "train, val or test")
      ->check(CLI::IsMember({"train", "val", "test"}));
  dump->add_option("--window", dump_args.window, "Window index; negative counts from the end");
  dump->add_option("--out", dump_args.out, "Attention CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(nodes, length, synth_seed, out_dir, out);
    if (*train_cmd) return cmd_train(train_args, out, err);
    if (*eval_cmd) return cmd_eval(eval_args, out, err);
    if (*forecast) {
      return cmd_forecast(forecast_inputs, forecast_ckpt, forecast_out, out, err);
    }
    if (*gradcheck) return cmd_gradcheck(gc_config, gc_step, gc_seed, out);
    if (*dump) return cmd_dump_attn(dump_args, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomainError;
  }
  return kExitUsage;
}

}  // namespace sttn::cli
