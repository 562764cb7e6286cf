#include "sttn/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "sttn/errors.hpp"

namespace sttn::data {

SynthData synth_generate(std::size_t n, std::size_t length, std::uint64_t seed,
                         const SynthOptions& options) {
  if (n < 2) throw ValueError("synthetic network needs at least 2 nodes");
  if (length == 0) throw ValueError("synthetic series length must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  SynthData out;
  out.neighbours.resize(n);
  std::set<std::pair<std::size_t, std::size_t>> edges;
  auto add_edge = [&](std::size_t a, std::size_t b, double lo, double hi) {
    if (a == b) return;
    const auto key = std::minmax(a, b);
    if (!edges.insert(key).second) return;
    out.distances.push_back({a, b, uniform(lo, hi)});
    out.neighbours[a].push_back(b);
    out.neighbours[b].push_back(a);
  };
  for (std::size_t i = 0; i < n; ++i) add_edge(i, (i + 1) % n, 400.0, 1600.0);
  for (std::size_t i = 0; i < n; i += 3) add_edge(i, (i + n / 2) % n, 1200.0, 2400.0);
  for (auto& nb : out.neighbours) std::sort(nb.begin(), nb.end());

  for (std::size_t v = 0; v < n; ++v) out.base.push_back(uniform(55.0, 70.0));
  for (std::size_t v = 0; v < n; ++v) out.phase.push_back(uniform(0.0, 0.5));

  out.source = Matrix(length, n);
  out.congestion = Matrix(length, n);
  Matrix speeds(length, n);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto add_pulse = [&](const Pulse& p) {
    if (p.node >= n) throw IndexError("pulse node out of range");
    for (std::size_t t = p.start; t < std::min(length, p.start + p.duration); ++t) {
      out.source(t, p.node) += p.magnitude;
    }
  };
  for (const auto& p : options.extra_pulses) add_pulse(p);

  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t v = 0; v < n; ++v) {
      if (options.pulse_rate > 0.0 && unit(rng) < options.pulse_rate) {
        add_pulse({v, t, uniform(options.pulse_min, options.pulse_max), options.pulse_duration});
      }
      const double eps = noise(rng);
      double spill = 0.0;
      if (t > 0) {
        for (std::size_t u : out.neighbours[v]) spill = std::max(spill, out.congestion(t - 1, u));
      }
      out.congestion(t, v) = out.source(t, v) + options.decay * spill;
      speeds(t, v) = out.base[v] +
                     options.amplitude * std::sin(two_pi * static_cast<double>(t) /
                                                      static_cast<double>(options.period) +
                                                  out.phase[v]) -
                     out.congestion(t, v) + options.noise_sigma * eps;
    }
  }
  out.series.values = std::move(speeds);
  out.series.unit = "km/h";
  for (std::size_t v = 0; v < n; ++v) out.series.sensor_ids.push_back("s" + std::to_string(v));
  return out;
}

}  // namespace sttn::data
