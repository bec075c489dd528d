#include "mbpm/moments.hpp"

#include <cmath>
#include <exception>

#include "mbpm/errors.hpp"
#include "mbpm/kahan.hpp"
#include "mbpm/numfmt.hpp"
#include "mbpm/parallel.hpp"

namespace mbpm {

namespace {

void check_order(const WindowAggregates& agg, int n) {
  if (n < 1 || n > agg.n_max)
    throw ConfigError("OrderOutOfRange",
                      "order " + std::to_string(n) + " not in 1.." +
                          std::to_string(agg.n_max));
}

}  // namespace

WindowAggregates aggregate(const Window& window, int n_max) {
  if (n_max < 1)
    throw ConfigError("OrderOutOfRange", "n_max must be >= 1");
  if (window.empty())
    throw NumericError("EmptyWindow",
                       "window " + std::to_string(window.index) + " has no trades");

  std::vector<KahanSum> c_acc(static_cast<std::size_t>(n_max));
  std::vector<KahanSum> u_acc(static_cast<std::size_t>(n_max));
  for (const TradeTick& tick : window.ticks) {
    double c_pow = 1.0;
    double u_pow = 1.0;
    for (int n = 0; n < n_max; ++n) {
      c_pow *= tick.value;
      u_pow *= tick.volume;
      c_acc[static_cast<std::size_t>(n)].add(c_pow);
      u_acc[static_cast<std::size_t>(n)].add(u_pow);
    }
  }

  WindowAggregates agg;
  agg.n_max = n_max;
  agg.n_trades = window.size();
  agg.c_sum.resize(static_cast<std::size_t>(n_max));
  agg.u_sum.resize(static_cast<std::size_t>(n_max));
  for (int n = 0; n < n_max; ++n) {
    agg.c_sum[static_cast<std::size_t>(n)] = c_acc[static_cast<std::size_t>(n)].value();
    agg.u_sum[static_cast<std::size_t>(n)] = u_acc[static_cast<std::size_t>(n)].value();
  }
  return agg;
}

double market_price_moment(const WindowAggregates& agg, int n) {
  check_order(agg, n);
  return agg.c_moment(n) / agg.u_moment(n);
}

VolatilityResult market_volatility(const WindowAggregates& agg) {
  check_order(agg, 2);
  const double p1 = agg.c_moment(1) / agg.u_moment(1);
  const double p2 = agg.c_moment(2) / agg.u_moment(2);
  const double p1_m = agg.c_mean(1) / agg.u_mean(1);
  const double p2_m = agg.c_mean(2) / agg.u_mean(2);

  VolatilityResult vol;
  vol.value = p2 - p1 * p1;
  vol.value_means = p2_m - p1_m * p1_m;
  vol.negative = vol.value < 0.0;

  // The routes differ only by the extra /N roundings, so they must agree at
  // the scale of the uncentered moments.
  const double scale = std::abs(p2) + p1 * p1;
  if (std::abs(vol.value - vol.value_means) > 1e-12 * scale)
    throw NumericError("VolatilityRouteMismatch",
                       "sum-route and mean-route evaluations disagree beyond tolerance");
  return vol;
}

double frequency_moment(const Window& window, int n) {
  if (window.empty())
    throw NumericError("EmptyWindow",
                       "window " + std::to_string(window.index) + " has no trades");
  if (n < 1) throw ConfigError("OrderOutOfRange", "n must be >= 1");
  KahanSum acc;
  for (const TradeTick& tick : window.ticks) {
    double p_pow = 1.0;
    for (int m = 0; m < n; ++m) p_pow *= tick.price;
    acc.add(p_pow);
  }
  return acc.value() / static_cast<double>(window.size());
}

double third_central_moment(const WindowAggregates& agg) {
  check_order(agg, 3);
  const double p1 = market_price_moment(agg, 1);
  const double p3 = market_price_moment(agg, 3);
  const double var = market_volatility(agg).value;
  return p3 - 3.0 * p1 * var - p1 * p1 * p1;
}

MomentReport moment_report(const Window& window, int n_max, bool with_histograms) {
  const WindowAggregates agg = aggregate(window, n_max);

  MomentReport rep;
  rep.window_index = window.index;
  rep.center = window.center;
  rep.n_trades = window.size();

  MarketMoments& mkt = rep.market;
  mkt.p_n.resize(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n)
    mkt.p_n[static_cast<std::size_t>(n - 1)] = market_price_moment(agg, n);
  mkt.vwap = mkt.p_n[0];
  if (n_max >= 2) {
    const VolatilityResult vol = market_volatility(agg);
    mkt.variance = vol.value;
    mkt.variance_negative = vol.negative;
    if (n_max >= 3) {
      mkt.gamma3 = third_central_moment(agg);
      if (vol.value > 0.0)
        mkt.skew_normalized = *mkt.gamma3 / (vol.value * std::sqrt(vol.value));
    }
  }

  FrequencyMoments& freq = rep.freq;
  freq.pi_n.resize(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n)
    freq.pi_n[static_cast<std::size_t>(n - 1)] = frequency_moment(window, n);

  // Centered so the frequency variance cannot round below zero.
  const double pi1 = freq.pi_n[0];
  KahanSum dev2;
  for (const TradeTick& tick : window.ticks) {
    const double d = tick.price - pi1;
    dev2.add(d * d);
  }
  freq.variance_freq = dev2.value() / static_cast<double>(window.size());

  if (with_histograms) {
    for (const TradeTick& tick : window.ticks) {
      ++freq.value_hist[round_sig(tick.value, 12)];
      ++freq.volume_hist[round_sig(tick.volume, 12)];
    }
  }

  rep.gaps.resize(static_cast<std::size_t>(n_max));
  for (int n = 0; n < n_max; ++n) {
    const std::size_t i = static_cast<std::size_t>(n);
    rep.gaps[i] = std::abs(mkt.p_n[i] - freq.pi_n[i]) / std::abs(freq.pi_n[i]);
  }
  return rep;
}

namespace {

std::vector<std::optional<MomentReport>> report_windows_impl(
    std::span<const Window> windows, int n_max, bool with_histograms,
    bool parallel) {
  std::vector<std::optional<MomentReport>> out(windows.size());
  const auto count = static_cast<std::ptrdiff_t>(windows.size());
  std::exception_ptr fail = nullptr;

#ifdef _OPENMP
  const int threads = parallel ? thread_cap() : 1;
#pragma omp parallel for schedule(dynamic, 16) num_threads(threads)
#else
  (void)parallel;
#endif
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      const Window& w = windows[static_cast<std::size_t>(i)];
      if (!w.empty())
        out[static_cast<std::size_t>(i)] = moment_report(w, n_max, with_histograms);
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      if (!fail) fail = std::current_exception();
    }
  }
  if (fail) std::rethrow_exception(fail);
  return out;
}

}  // namespace

std::vector<std::optional<MomentReport>> report_windows(
    std::span<const Window> windows, int n_max, bool with_histograms) {
  return report_windows_impl(windows, n_max, with_histograms, true);
}

std::vector<std::optional<MomentReport>> report_windows_serial(
    std::span<const Window> windows, int n_max, bool with_histograms) {
  return report_windows_impl(windows, n_max, with_histograms, false);
}

}  // namespace mbpm
