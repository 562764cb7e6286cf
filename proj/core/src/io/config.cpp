#include "sttn/io/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "sttn/data/csv.hpp"
#include "sttn/errors.hpp"

namespace sttn::io {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::size_t parse_size(std::string_view v) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError("expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

std::uint64_t parse_u64(std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError("expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

double parse_real(std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError("expected a finite number, got '" + std::string(v) + "'");
  }
  return out;
}

bool parse_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError("expected true or false, got '" + std::string(v) + "'");
}

model::HeadInput parse_head_input(std::string_view v) {
  if (v == "last") return model::HeadInput::kLastBlock;
  if (v == "sum") return model::HeadInput::kSumBlocks;
  throw ConfigError("head_input must be last or sum, got '" + std::string(v) + "'");
}

using Setter = std::function<void(train::TrainConfig&, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"epochs", [](auto& c, auto v) { c.epochs = parse_size(v); }},
      {"batch_size", [](auto& c, auto v) { c.batch_size = parse_size(v); }},
      {"lr0", [](auto& c, auto v) { c.lr0 = parse_real(v); }},
      {"decay", [](auto& c, auto v) { c.decay = parse_real(v); }},
      {"decay_every", [](auto& c, auto v) { c.decay_every = parse_size(v); }},
      {"rho", [](auto& c, auto v) { c.rho = parse_real(v); }},
      {"eps", [](auto& c, auto v) { c.eps = parse_real(v); }},
      {"seed", [](auto& c, auto v) { c.seed = parse_u64(v); }},
      {"grad_clip", [](auto& c, auto v) { c.grad_clip = parse_real(v); }},
      {"train_fraction", [](auto& c, auto v) { c.split.train = parse_real(v); }},
      {"val_fraction", [](auto& c, auto v) { c.split.val = parse_real(v); }},
      {"test_fraction", [](auto& c, auto v) { c.split.test = parse_real(v); }},
      {"kernel_sigma", [](auto& c, auto v) { c.kernel_sigma = parse_real(v); }},
      {"kernel_epsilon", [](auto& c, auto v) { c.kernel_epsilon = parse_real(v); }},
      {"n_nodes", [](auto& c, auto v) { c.model.n_nodes = parse_size(v); }},
      {"M", [](auto& c, auto v) { c.model.window = parse_size(v); }},
      {"T", [](auto& c, auto v) { c.model.horizon = parse_size(v); }},
      {"d_G", [](auto& c, auto v) { c.model.channels = parse_size(v); }},
      {"K", [](auto& c, auto v) { c.model.cheb_order = parse_size(v); }},
      {"n_blocks", [](auto& c, auto v) { c.model.blocks = parse_size(v); }},
      {"h_S", [](auto& c, auto v) { c.model.spatial_layers = parse_size(v); }},
      {"h_T", [](auto& c, auto v) { c.model.temporal_layers = parse_size(v); }},
      {"a_S", [](auto& c, auto v) { c.model.spatial_heads = parse_size(v); }},
      {"a_T", [](auto& c, auto v) { c.model.temporal_heads = parse_size(v); }},
      {"spatial_embedding", [](auto& c, auto v) { c.model.spatial_embedding = parse_bool(v); }},
      {"temporal_embedding", [](auto& c, auto v) { c.model.temporal_embedding = parse_bool(v); }},
      {"dynamic_spatial", [](auto& c, auto v) { c.model.dynamic_spatial = parse_bool(v); }},
      {"local_mask_k", [](auto& c, auto v) { c.model.local_mask_k = parse_size(v); }},
      {"head_input", [](auto& c, auto v) { c.model.head_input = parse_head_input(v); }},
  };
  return table;
}

}  // namespace

train::TrainConfig parse_config(std::string_view text, const std::string& source) {
  return parse_config(text, source, train::TrainConfig{});
}

train::TrainConfig parse_config(std::string_view text, const std::string& source,
                                const train::TrainConfig& base) {
  train::TrainConfig config = base;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const auto where = source + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(where + "unknown key '" + std::string(key) + "'");
    try {
      it->second(config, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + std::string(key) + ": " + e.what());
    }
  }
  // n_nodes normally comes from the data, so 0 is accepted here.
  train::TrainConfig probe = config;
  if (probe.model.n_nodes == 0) probe.model.n_nodes = 1;
  try {
    probe.validate();
  } catch (const Error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return config;
}

train::TrainConfig load_config(const std::string& path) {
  return parse_config(data::read_text_file(path), path);
}

train::TrainConfig load_config(const std::string& path, const train::TrainConfig& base) {
  return parse_config(data::read_text_file(path), path, base);
}

std::string format_config(const train::TrainConfig& c) {
  const auto& m = c.model;
  auto real = [](double v) { return data::format_double(v); };
  auto flag = [](bool v) { return v ? "true" : "false"; };
  std::ostringstream out;
  out << "epochs = " << c.epochs << '\n'
      << "batch_size = " << c.batch_size << '\n'
      << "lr0 = " << real(c.lr0) << '\n'
      << "decay = " << real(c.decay) << '\n'
      << "decay_every = " << c.decay_every << '\n'
      << "rho = " << real(c.rho) << '\n'
      << "eps = " << real(c.eps) << '\n'
      << "seed = " << c.seed << '\n'
      << "grad_clip = " << real(c.grad_clip) << '\n'
      << "train_fraction = " << real(c.split.train) << '\n'
      << "val_fraction = " << real(c.split.val) << '\n'
      << "test_fraction = " << real(c.split.test) << '\n'
      << "kernel_sigma = " << real(c.kernel_sigma) << '\n'
      << "kernel_epsilon = " << real(c.kernel_epsilon) << '\n'
      << "n_nodes = " << m.n_nodes << '\n'
      << "M = " << m.window << '\n'
      << "T = " << m.horizon << '\n'
      << "d_G = " << m.channels << '\n'
      << "K = " << m.cheb_order << '\n'
      << "n_blocks = " << m.blocks << '\n'
      << "h_S = " << m.spatial_layers << '\n'
      << "h_T = " << m.temporal_layers << '\n'
      << "a_S = " << m.spatial_heads << '\n'
      << "a_T = " << m.temporal_heads << '\n'
      << "spatial_embedding = " << flag(m.spatial_embedding) << '\n'
      << "temporal_embedding = " << flag(m.temporal_embedding) << '\n'
      << "dynamic_spatial = " << flag(m.dynamic_spatial) << '\n'
      << "local_mask_k = " << m.local_mask_k << '\n'
      << "head_input = " << (m.head_input == model::HeadInput::kSumBlocks ? "sum" : "last") << '\n';
  return out.str();
}

}  // namespace sttn::io
