#include "sttn/io/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "sttn/data/csv.hpp"
#include "sttn/errors.hpp"
#include "sttn/io/config.hpp"

namespace sttn::io {

namespace {

constexpr const char* kMagic = "sttn-checkpoint v1";

static_assert(sizeof(double) == 8);

std::string shape_token(const ad::Shape& shape) {
  std::string out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(shape[i]);
  }
  return out;
}

void put_le(double v, char* dst) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) dst[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
}

double get_le(const char* src) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t(static_cast<unsigned char>(src[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

struct ManifestEntry {
  ad::Shape shape;
  std::size_t offset = 0;
};

// Shapes only; values are overwritten from the blob.
model::ModelParams shape_template(const train::TrainConfig& config) {
  const std::size_t n = config.model.n_nodes;
  return model::init_params(config.model, Matrix(n, n), 0);
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
  std::ostringstream head;
  head << kMagic << '\n' << "[config]\n" << format_config(checkpoint.config) << "[stats]\n"
       << "mean = " << data::format_double(checkpoint.stats.mean) << '\n'
       << "std = " << data::format_double(checkpoint.stats.std) << '\n'
       << "[tensors]\n";
  std::string blob;
  for (const auto& [name, tensor] : checkpoint.params.named()) {
    head << name << ' ' << shape_token(tensor.shape()) << ' ' << blob.size() << '\n';
    const std::size_t at = blob.size();
    blob.resize(at + tensor.numel() * 8);
    const auto values = tensor.data();
    for (std::size_t i = 0; i < values.size(); ++i) put_le(values[i], blob.data() + at + 8 * i);
  }
  head << "blob " << blob.size() << '\n';
  return head.str() + blob;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  const std::string bytes = serialize_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing '" + path + "'");
}

namespace {

Checkpoint parse_impl(const std::string& bytes, const std::string& source,
                      const train::TrainConfig* expected) {
  auto corrupt = [&](const std::string& what) {
    return CorruptCheckpointError(source + ": " + what);
  };
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    const auto end = bytes.find('\n', pos);
    if (end == std::string::npos) throw corrupt("unexpected end of header");
    std::string line = bytes.substr(pos, end - pos);
    pos = end + 1;
    return line;
  };

  if (next_line() != kMagic) throw corrupt("missing '" + std::string(kMagic) + "' header");
  if (next_line() != "[config]") throw corrupt("missing [config] section");
  std::string config_text;
  for (std::string line = next_line(); line != "[stats]"; line = next_line()) {
    config_text += line + '\n';
  }
  Checkpoint out;
  try {
    out.config = parse_config(config_text, source);
  } catch (const ConfigError& e) {
    throw corrupt(std::string("bad config echo: ") + e.what());
  }
  auto stat = [&](const std::string& key) {
    const std::string line = next_line();
    const std::string prefix = key + " = ";
    if (line.rfind(prefix, 0) != 0) throw corrupt("expected '" + key + "' in [stats]");
    try {
      std::size_t used = 0;
      const double v = std::stod(line.substr(prefix.size()), &used);
      if (used != line.size() - prefix.size()) throw std::invalid_argument(line);
      return v;
    } catch (const std::exception&) {
      throw corrupt("malformed '" + key + "' value");
    }
  };
  out.stats.mean = stat("mean");
  out.stats.std = stat("std");
  if (next_line() != "[tensors]") throw corrupt("missing [tensors] section");

  std::map<std::string, ManifestEntry> manifest;
  std::size_t blob_size = 0;
  for (;;) {
    const std::string line = next_line();
    std::istringstream in(line);
    std::string name, shape_text;
    if (line.rfind("blob ", 0) == 0) {
      std::string word;
      if (!(in >> word >> blob_size) || !(in >> std::ws).eof()) throw corrupt("malformed blob line");
      break;
    }
    ManifestEntry entry;
    if (!(in >> name >> shape_text >> entry.offset) || !(in >> std::ws).eof()) {
      throw corrupt("malformed manifest line '" + line + "'");
    }
    std::istringstream dims(shape_text);
    for (std::string dim; std::getline(dims, dim, 'x');) {
      try {
        entry.shape.push_back(std::stoul(dim));
      } catch (const std::exception&) {
        throw corrupt("malformed shape '" + shape_text + "' for " + name);
      }
    }
    if (!manifest.emplace(name, std::move(entry)).second) {
      throw corrupt("tensor '" + name + "' listed twice");
    }
  }
  const std::size_t available = bytes.size() - pos;
  if (available != blob_size) {
    throw corrupt("blob declares " + std::to_string(blob_size) + " bytes but " +
                  std::to_string(available) + " follow");
  }
  const char* blob = bytes.data() + pos;

  const train::TrainConfig& shapes_from = expected ? *expected : out.config;
  if (expected) out.config = *expected;
  if (shapes_from.model.n_nodes == 0) throw corrupt("config echo has no n_nodes");
  out.params = shape_template(shapes_from);
  std::size_t matched = 0;
  model::visit_params(out.params, [&](const std::string& name, ad::Tensor& t) {
    const auto it = manifest.find(name);
    if (it == manifest.end()) throw corrupt("tensor '" + name + "' missing from manifest");
    const ManifestEntry& entry = it->second;
    if (entry.shape != t.shape()) {
      throw corrupt("shape mismatch for '" + name + "': checkpoint has " +
                    ad::shape_str(entry.shape) + ", config expects " + ad::shape_str(t.shape()));
    }
    const std::size_t nbytes = t.numel() * 8;
    if (entry.offset > blob_size || nbytes > blob_size - entry.offset) {
      throw corrupt("tensor '" + name + "' runs past the end of the blob");
    }
    std::vector<double> values(t.numel());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = get_le(blob + entry.offset + 8 * i);
    t = ad::Tensor(t.shape(), std::move(values), true);
    ++matched;
  });
  if (matched != manifest.size()) {
    for (const auto& [name, entry] : manifest) {
      bool known = false;
      model::visit_params(out.params, [&](const std::string& n, const ad::Tensor&) {
        known = known || n == name;
      });
      if (!known) throw corrupt("unknown tensor '" + name + "'");
    }
  }
  return out;
}

}  // namespace

Checkpoint parse_checkpoint(const std::string& bytes, const std::string& source) {
  return parse_impl(bytes, source, nullptr);
}

Checkpoint parse_checkpoint(const std::string& bytes, const std::string& source,
                            const train::TrainConfig& expected) {
  return parse_impl(bytes, source, &expected);
}

Checkpoint load_checkpoint(const std::string& path) {
  return parse_checkpoint(data::read_text_file(path), path);
}

Checkpoint load_checkpoint(const std::string& path, const train::TrainConfig& expected) {
  return parse_checkpoint(data::read_text_file(path), path, expected);
}

}  // namespace sttn::io
