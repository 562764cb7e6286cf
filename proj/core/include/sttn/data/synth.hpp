#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sttn/data/csv.hpp"
#include "sttn/graph/traffic_graph.hpp"
#include "sttn/matrix.hpp"

namespace sttn::data {

struct Pulse {
  std::size_t node = 0;
  std::size_t start = 0;
  double magnitude = 0.0;
  std::size_t duration = 1;
};

struct SynthOptions {
  double noise_sigma = 0.5;
  double pulse_rate = 0.01;  // per node per step
  double pulse_min = 8.0;
  double pulse_max = 20.0;
  std::size_t pulse_duration = 6;
  double decay = 0.6;
  std::size_t period = 288;  // one day of 5-minute steps
  double amplitude = 8.0;
  std::vector<Pulse> extra_pulses;
};

// Synthetic road network and speeds.
//
// Graph: ring edges (i, i+1 mod n) plus a chord (i, i + n/2 mod n) for every
// i divisible by 3, each listed once as a distance triple. Ring lengths are
// uniform in [400, 1600] m, chords in [1200, 2400] m. A kernel sigma near
// 1500 m keeps every ring edge; the std-of-distances default prunes most.
//
// Speeds, for node v and step t:
//   source_v(t)     = sum of magnitudes of pulses active at v at t
//   congestion_v(0) = source_v(0)
//   congestion_v(t) = source_v(t) + decay * max_{u ~ v} congestion_u(t-1)
//   speed_v(t)      = base_v + amplitude * sin(2π t / period + phase_v)
//                     - congestion_v(t) + noise,  noise ~ N(0, noise_sigma²)
// with base_v ~ U[55, 70] and phase_v ~ U[0, 0.5]. Random pulses start at each
// (t, v) with probability pulse_rate, magnitude ~ U[pulse_min, pulse_max].
//
// Draw order from the seeded mt19937_64: distances, bases, phases, then per
// step and node the pulse draw followed by the noise draw.
struct SynthData {
  SpeedSeries series;
  std::vector<graph::DistanceEntry> distances;
  std::vector<std::vector<std::size_t>> neighbours;
  std::vector<double> base;
  std::vector<double> phase;
  Matrix source;      // L x N
  Matrix congestion;  // L x N
};

SynthData synth_generate(std::size_t n_nodes, std::size_t length, std::uint64_t seed,
                         const SynthOptions& options = {});

}  // namespace sttn::data
