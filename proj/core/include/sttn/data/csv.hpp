#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "sttn/graph/traffic_graph.hpp"
#include "sttn/matrix.hpp"

namespace sttn::data {

// L x N speeds at 5-minute steps. Column order is node order everywhere
// downstream. The unit is carried as a label and never converted.
struct SpeedSeries {
  Matrix values;
  std::vector<std::string> sensor_ids;
  std::string unit = "unspecified";

  std::size_t length() const { return values.rows(); }
  std::size_t n_nodes() const { return values.cols(); }
};

// Header row of sensor IDs, then one row of decimal speeds per step.
SpeedSeries load_speed_csv(const std::filesystem::path& path);
SpeedSeries parse_speed_csv(const std::string& text, const std::string& source = "<memory>");
void save_speed_csv(const std::filesystem::path& path, const SpeedSeries& series);

// Rows `from,to,distance` (optional header). Duplicate (from, to) pairs keep
// the smaller distance; first-seen order is preserved.
std::vector<graph::DistanceEntry> load_distance_csv(const std::filesystem::path& path,
                                                    std::size_t n);
std::vector<graph::DistanceEntry> parse_distance_csv(const std::string& text, std::size_t n,
                                                     const std::string& source = "<memory>");
void save_distance_csv(const std::filesystem::path& path,
                       const std::vector<graph::DistanceEntry>& distances);

// 17 significant digits: parsing the text back yields the same double.
std::string format_double(double v);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace sttn::data
