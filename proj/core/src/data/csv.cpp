#include "sttn/data/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "sttn/errors.hpp"

namespace sttn::data {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& cell, double& out) {
  const std::string t = trim(cell);
  if (t.empty()) return false;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), out);
  return ec == std::errc() && ptr == t.data() + t.size();
}

bool parse_index(const std::string& cell, std::size_t& out) {
  const std::string t = trim(cell);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  return !t.empty() && ec == std::errc() && ptr == t.data() + t.size();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SpeedSeries parse_speed_csv(const std::string& text, const std::string& source) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ParseError(source, 1, "empty file");
  SpeedSeries series;
  for (const auto& id : split_line(lines[0])) series.sensor_ids.push_back(trim(id));
  const std::size_t n = series.sensor_ids.size();
  if (n == 0 || (n == 1 && series.sensor_ids[0].empty())) {
    throw ParseError(source, 1, "header has no sensor IDs");
  }
  if (lines.size() == 1) throw ParseError(source, 1, "no data rows");
  std::vector<double> values;
  values.reserve((lines.size() - 1) * n);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto cells = split_line(lines[li]);
    if (cells.size() != n) {
      throw ParseError(source, li + 1,
                       "expected " + std::to_string(n) + " cells, found " +
                           std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < n; ++c) {
      double v = 0.0;
      if (!parse_double(cells[c], v)) {
        throw ParseError(source, li + 1, "non-numeric cell '" + trim(cells[c]) + "'");
      }
      if (!std::isfinite(v)) {
        throw ParseError(source, li + 1, "missing or non-finite value in column " +
                                             std::to_string(c + 1));
      }
      values.push_back(v);
    }
  }
  series.values = Matrix(lines.size() - 1, n, std::move(values));
  return series;
}

SpeedSeries load_speed_csv(const std::filesystem::path& path) {
  return parse_speed_csv(read_text_file(path), path.string());
}

void save_speed_csv(const std::filesystem::path& path, const SpeedSeries& series) {
  std::string text;
  for (std::size_t c = 0; c < series.sensor_ids.size(); ++c) {
    if (c) text += ',';
    text += series.sensor_ids[c];
  }
  text += '\n';
  for (std::size_t r = 0; r < series.values.rows(); ++r) {
    for (std::size_t c = 0; c < series.values.cols(); ++c) {
      if (c) text += ',';
      text += format_double(series.values(r, c));
    }
    text += '\n';
  }
  write_text_file(path, text);
}

std::vector<graph::DistanceEntry> parse_distance_csv(const std::string& text, std::size_t n,
                                                     const std::string& source) {
  const auto lines = lines_of(text);
  std::vector<graph::DistanceEntry> out;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> seen;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    const auto cells = split_line(lines[li]);
    if (cells.size() != 3) {
      throw ParseError(source, li + 1, "expected from,to,distance");
    }
    graph::DistanceEntry e;
    if (!parse_index(cells[0], e.from) || !parse_index(cells[1], e.to)) {
      if (li == 0 && out.empty()) continue;  // header
      throw ParseError(source, li + 1, "node indices must be non-negative integers");
    }
    if (!parse_double(cells[2], e.meters) || !std::isfinite(e.meters) || e.meters < 0.0) {
      throw ParseError(source, li + 1, "distance must be a non-negative number");
    }
    if (e.from >= n || e.to >= n) {
      throw ParseError(source, li + 1,
                       "node index out of range for " + std::to_string(n) + " nodes");
    }
    const auto key = std::make_pair(e.from, e.to);
    if (auto it = seen.find(key); it != seen.end()) {
      out[it->second].meters = std::min(out[it->second].meters, e.meters);
    } else {
      seen.emplace(key, out.size());
      out.push_back(e);
    }
  }
  return out;
}

std::vector<graph::DistanceEntry> load_distance_csv(const std::filesystem::path& path,
                                                    std::size_t n) {
  return parse_distance_csv(read_text_file(path), n, path.string());
}

void save_distance_csv(const std::filesystem::path& path,
                       const std::vector<graph::DistanceEntry>& distances) {
  std::string text = "from,to,distance\n";
  for (const auto& d : distances) {
    text += std::to_string(d.from) + ',' + std::to_string(d.to) + ',' + format_double(d.meters) +
            '\n';
  }
  write_text_file(path, text);
}

}  // namespace sttn::data
