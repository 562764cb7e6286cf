#pragma once

#include <string>
#include <string_view>

#include "sttn/train/trainer.hpp"

namespace sttn::io {

// Flat `key = value` text, one pair per line, `#` starts a comment. Every
// key is optional; unknown keys and malformed values raise ConfigError with
// the line number. The result is validated.
train::TrainConfig parse_config(std::string_view text, const std::string& source = "<config>");
train::TrainConfig load_config(const std::string& path);

// As above, but keys override `base` instead of the defaults.
train::TrainConfig parse_config(std::string_view text, const std::string& source,
                                const train::TrainConfig& base);
train::TrainConfig load_config(const std::string& path, const train::TrainConfig& base);

// Every key with its current value, in a form parse_config accepts.
std::string format_config(const train::TrainConfig& config);

}  // namespace sttn::io
