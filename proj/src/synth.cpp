#include "mbpm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "mbpm/errors.hpp"

namespace mbpm {

namespace {

/// mt19937_64 with explicitly constructed variates, so streams are
/// bit-identical across platforms (std::*_distribution is not portable).
class SeededRng {
public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  double uniform01() {  // [0, 1)
    return static_cast<double>(bits() >> 11) * 0x1.0p-53;
  }

  double uniform_open() { return 1.0 - uniform01(); }  // (0, 1]

  double normal() {  // Box-Muller
    const double r = std::sqrt(-2.0 * std::log(uniform_open()));
    return r * std::cos(2.0 * std::numbers::pi * uniform01());
  }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(bits() % n); }

private:
  std::mt19937_64 engine_;
};

void validate(const SynthConfig& cfg) {
  const auto fail = [](const std::string& what) {
    throw ConfigError("InvalidConfig", what);
  };
  if (cfg.n_ticks < 1) fail("n_ticks must be >= 1");
  if (!(cfg.tick_spacing > 0.0)) fail("tick_spacing must be > 0");
  if (!(cfg.coupling >= -1.0 && cfg.coupling <= 1.0)) fail("coupling must be in [-1, 1]");

  switch (cfg.price.kind) {
    case PriceProcess::Kind::constant:
      if (!(cfg.price.level > 0.0)) fail("constant price level must be > 0");
      break;
    case PriceProcess::Kind::random_walk:
      if (!(cfg.price.level > 0.0)) fail("walk start price must be > 0");
      if (!(cfg.price.step_vol >= 0.0)) fail("walk step volatility must be >= 0");
      break;
    case PriceProcess::Kind::regime_step:
      if (!(cfg.price.level > 0.0)) fail("step base price must be > 0");
      if (!(cfg.price.level + cfg.price.amplitude > 0.0))
        fail("step price must stay > 0");
      if (!(cfg.price.period > 0.0)) fail("step period must be > 0");
      break;
  }
  switch (cfg.volume.kind) {
    case VolumeDist::Kind::constant_one:
      break;
    case VolumeDist::Kind::uniform_levels:
      if (cfg.volume.levels.empty()) fail("uniform volume needs levels");
      for (double level : cfg.volume.levels)
        if (!(level > 0.0)) fail("volume levels must be > 0");
      break;
    case VolumeDist::Kind::pareto:
      if (!(cfg.volume.shape > 0.0)) fail("pareto shape must be > 0");
      if (!(cfg.volume.scale > 0.0)) fail("pareto scale must be > 0");
      break;
  }
}

/// Reorders a |coupling| fraction of the volume draws against the price
/// ranks. A permutation of the draws keeps the marginal exact; the matched
/// subset induces the monotone dependence.
void apply_coupling(std::vector<double>& volumes,
                    const std::vector<double>& prices, double coupling,
                    SeededRng& rng) {
  const std::size_t n = volumes.size();
  const std::size_t m = static_cast<std::size_t>(
      std::llround(std::abs(coupling) * static_cast<double>(n)));
  if (m < 2) return;

  std::vector<std::size_t> pick(n);
  std::iota(pick.begin(), pick.end(), std::size_t{0});
  for (std::size_t i = 0; i + 1 < n && i < m; ++i) {
    const std::size_t j = i + rng.index(n - i);
    std::swap(pick[i], pick[j]);
  }
  pick.resize(m);

  std::vector<double> chosen(m);
  for (std::size_t i = 0; i < m; ++i) chosen[i] = volumes[pick[i]];
  std::sort(chosen.begin(), chosen.end());
  if (coupling < 0.0) std::reverse(chosen.begin(), chosen.end());

  std::sort(pick.begin(), pick.end(), [&](std::size_t a, std::size_t b) {
    if (prices[a] != prices[b]) return prices[a] < prices[b];
    return a < b;
  });
  for (std::size_t i = 0; i < m; ++i) volumes[pick[i]] = chosen[i];
}

}  // namespace

std::vector<TradeTick> generate(const SynthConfig& cfg) {
  validate(cfg);
  SeededRng rng(cfg.seed);
  const std::size_t n = cfg.n_ticks;

  std::vector<double> times(n);
  double t = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    t += -cfg.tick_spacing * std::log(rng.uniform_open());
    times[i] = t;
  }

  std::vector<double> prices(n);
  switch (cfg.price.kind) {
    case PriceProcess::Kind::constant:
      std::fill(prices.begin(), prices.end(), cfg.price.level);
      break;
    case PriceProcess::Kind::random_walk: {
      double p = cfg.price.level;
      for (std::size_t i = 0; i < n; ++i) {
        p *= std::exp(cfg.price.step_vol * rng.normal());
        prices[i] = p;
      }
      break;
    }
    case PriceProcess::Kind::regime_step:
      for (std::size_t i = 0; i < n; ++i) {
        const auto phase = static_cast<long long>(
            std::floor(times[i] / cfg.price.period));
        prices[i] = cfg.price.level +
                    (phase % 2 == 0 ? 0.0 : cfg.price.amplitude);
      }
      break;
  }

  std::vector<double> volumes(n);
  switch (cfg.volume.kind) {
    case VolumeDist::Kind::constant_one:
      std::fill(volumes.begin(), volumes.end(), 1.0);
      break;
    case VolumeDist::Kind::uniform_levels:
      for (std::size_t i = 0; i < n; ++i)
        volumes[i] = cfg.volume.levels[rng.index(cfg.volume.levels.size())];
      break;
    case VolumeDist::Kind::pareto:
      for (std::size_t i = 0; i < n; ++i)
        volumes[i] = cfg.volume.scale *
                     std::pow(rng.uniform_open(), -1.0 / cfg.volume.shape);
      break;
  }

  if (cfg.coupling != 0.0 && cfg.volume.kind != VolumeDist::Kind::constant_one)
    apply_coupling(volumes, prices, cfg.coupling, rng);

  std::vector<TradeTick> ticks(n);
  for (std::size_t i = 0; i < n; ++i) {
    ticks[i] = TradeTick{times[i], prices[i], volumes[i], prices[i] * volumes[i]};
  }
  return ticks;
}

}  // namespace mbpm
