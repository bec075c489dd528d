#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "mbpm/trade.hpp"

namespace mbpm {

/// Per-window sums C(n) = sum_i value_i^n and U(n) = sum_i volume_i^n for
/// orders 1..n_max, plus the matching means C(n)/N and U(n)/N.
struct WindowAggregates {
  int n_max = 0;
  std::size_t n_trades = 0;
  std::vector<double> c_sum;  // [n-1] holds C(n)
  std::vector<double> u_sum;  // [n-1] holds U(n)

  double c_moment(int n) const { return c_sum[static_cast<std::size_t>(n - 1)]; }
  double u_moment(int n) const { return u_sum[static_cast<std::size_t>(n - 1)]; }
  double c_mean(int n) const { return c_moment(n) / static_cast<double>(n_trades); }
  double u_mean(int n) const { return u_moment(n) / static_cast<double>(n_trades); }
};

/// Market-based price moments p(n) = C(n)/U(n) of one window.
struct MarketMoments {
  std::vector<double> p_n;                // [n-1] holds p(n)
  double vwap = 0.0;                      // p(1)
  std::optional<double> variance;         // p(2) - p(1)^2; may be negative
  bool variance_negative = false;
  std::optional<double> gamma3;           // third central moment a_3
  std::optional<double> skew_normalized;  // gamma3 / variance^(3/2), variance > 0 only
};

/// Frequency-based price moments pi(n) and the trade value/volume level
/// histograms behind the nu/mu measures. Histogram keys are the observed
/// levels rounded to 12 significant digits.
struct FrequencyMoments {
  std::vector<double> pi_n;
  double variance_freq = 0.0;
  std::map<double, std::size_t> value_hist;
  std::map<double, std::size_t> volume_hist;
};

struct MomentReport {
  long long window_index = 0;
  double center = 0.0;
  std::size_t n_trades = 0;
  MarketMoments market;
  FrequencyMoments freq;
  std::vector<double> gaps;  // per-n |p(n) - pi(n)| / pi(n)
};

/// Compensated sums over one window. Throws EmptyWindow when N = 0.
WindowAggregates aggregate(const Window& window, int n_max);

/// p(n) = C(n)/U(n); p(1) is the VWAP.
double market_price_moment(const WindowAggregates& agg, int n);

/// sigma^2(p) = p(2) - p(1)^2, evaluated both from the raw sums and from
/// the means; the two routes are checked against each other internally.
struct VolatilityResult {
  double value = 0.0;        // sums route, C(2)/U(2) - C(1)^2/U(1)^2
  double value_means = 0.0;  // means route, C_m(2)/U_m(2) - C_m(1)^2/U_m(1)^2
  bool negative = false;
};
VolatilityResult market_volatility(const WindowAggregates& agg);

/// pi(n) = (1/N) sum_i price_i^n.
double frequency_moment(const Window& window, int n);

/// a_3 = p(3) - 3 p(1) sigma^2(p) - p(1)^3.
double third_central_moment(const WindowAggregates& agg);

/// Both moment families over the same window plus the per-n relative gaps.
/// Histograms are filled only on request.
MomentReport moment_report(const Window& window, int n_max,
                           bool with_histograms = true);

/// Batch reports, parallel across windows; empty windows yield nullopt.
/// Results are bit-identical to the serial reference regardless of the
/// worker count.
std::vector<std::optional<MomentReport>> report_windows(
    std::span<const Window> windows, int n_max, bool with_histograms = false);

/// Serial reference for report_windows.
std::vector<std::optional<MomentReport>> report_windows_serial(
    std::span<const Window> windows, int n_max, bool with_histograms = false);

}  // namespace mbpm
