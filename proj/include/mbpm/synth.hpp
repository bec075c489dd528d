#pragma once

#include <cstdint>
#include <vector>

#include "mbpm/trade.hpp"

namespace mbpm {

/// Price path of the synthetic stream. regime_step alternates between level
/// and level+amplitude with the given period; it models a market disturbance
/// whose time scale competes with the averaging interval.
struct PriceProcess {
  enum class Kind { constant, random_walk, regime_step };
  Kind kind = Kind::constant;
  double level = 100.0;     // constant level / walk start / step base
  double step_vol = 0.0;    // random_walk: per-tick log-step volatility
  double amplitude = 0.0;   // regime_step
  double period = 0.0;      // regime_step, seconds
};

struct VolumeDist {
  enum class Kind { constant_one, uniform_levels, pareto };
  Kind kind = Kind::constant_one;
  std::vector<double> levels;  // uniform_levels
  double shape = 0.0;          // pareto tail index, > 0
  double scale = 1.0;          // pareto minimum
};

struct SynthConfig {
  std::uint64_t seed = 0;
  std::size_t n_ticks = 0;
  double tick_spacing = 1.0;  // mean of the exponential inter-trade times
  PriceProcess price;
  VolumeDist volume;
  double coupling = 0.0;  // rank coupling between price and volume, [-1, 1]
};

/// Deterministic for a fixed seed; every emitted tick satisfies the
/// TradeTick invariants. Throws ConfigError("InvalidConfig") on bad config.
std::vector<TradeTick> generate(const SynthConfig& config);

}  // namespace mbpm
