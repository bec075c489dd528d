#pragma once

// Test-only oracles. Everything here recomputes expected values by an
// independent route (exact rationals, finite differences, bisection) so the
// library paths under test never feed their own expectations.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "mbpm/capm.hpp"
#include "mbpm/charfunc.hpp"
#include "mbpm/trade.hpp"

namespace oracles {

using Rat = boost::multiprecision::cpp_rational;

inline double to_double(const Rat& r) { return static_cast<double>(r); }

inline bool near_rel(double got, double expect, double rtol) {
  const double scale = std::max(std::abs(got), std::abs(expect));
  if (scale == 0.0) return true;
  return std::abs(got - expect) <= rtol * scale;
}

/// Exact brute-force moments of a window given integer (price, volume)
/// pairs, straight from the definitions.
struct RationalMoments {
  std::vector<Rat> c, u, p, pi;  // order n at [n-1]
  Rat var;                       // p(2) - p(1)^2
  Rat a3;                        // p(3) - 3 p(1) var - p(1)^3
};

inline RationalMoments rational_moments(
    const std::vector<std::pair<long, long>>& ticks, int n_max) {
  RationalMoments m;
  const auto count = static_cast<long>(ticks.size());
  for (int n = 1; n <= n_max; ++n) {
    Rat c = 0, u = 0, pi = 0;
    for (const auto& [price, volume] : ticks) {
      Rat cp = 1, up = 1, pp = 1;
      for (int k = 0; k < n; ++k) {
        cp *= Rat(price) * Rat(volume);
        up *= Rat(volume);
        pp *= Rat(price);
      }
      c += cp;
      u += up;
      pi += pp;
    }
    m.c.push_back(c);
    m.u.push_back(u);
    m.p.push_back(c / u);
    m.pi.push_back(pi / count);
  }
  if (n_max >= 2) m.var = m.p[1] - m.p[0] * m.p[0];
  if (n_max >= 3) m.a3 = m.p[2] - 3 * m.p[0] * m.var - m.p[0] * m.p[0] * m.p[0];
  return m;
}

/// Richardson-extrapolated central differences of F_k at x = 0; recovers
/// the n-th raw moment without the analytic cumulant route.
inline double fd_moment(const mbpm::CharFuncApprox& f, int n) {
  const double scale = std::max(
      {std::abs(f.a[0]), std::sqrt(std::max(f.a[1], 0.0)),
       std::cbrt(std::abs(f.a[2])), 1e-30});
  const auto diff = [&](double h) -> std::complex<double> {
    using mbpm::charfunc_eval;
    const std::complex<double> i(0.0, 1.0);
    switch (n) {
      case 1:
        return (charfunc_eval(f, h) - charfunc_eval(f, -h)) / (2.0 * h) * (-i);
      case 2:
        return -(charfunc_eval(f, h) - 2.0 * charfunc_eval(f, 0.0) +
                 charfunc_eval(f, -h)) /
               (h * h);
      case 3:
        return (charfunc_eval(f, 2.0 * h) - 2.0 * charfunc_eval(f, h) +
                2.0 * charfunc_eval(f, -h) - charfunc_eval(f, -2.0 * h)) /
               (2.0 * h * h * h) * i;
      default:
        return {std::numeric_limits<double>::quiet_NaN(), 0.0};
    }
  };
  const double h = 0.01 / scale;
  return ((4.0 * diff(h / 2.0) - diff(h)) / 3.0).real();
}

/// Bisection root of dU/dxi from the exact utility; NaN when [lo, hi] does
/// not bracket a root.
inline double bisect_xi(const mbpm::UtilityParams& params,
                        const mbpm::PriceStats& price,
                        const mbpm::Distribution& dist, double lo, double hi) {
  const auto deriv = [&](double xi) {
    return mbpm::utility_oracle(params, price, dist, xi).du_dxi;
  };
  double f_lo = deriv(lo);
  double f_hi = deriv(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo > 0.0) == (f_hi > 0.0))
    return std::numeric_limits<double>::quiet_NaN();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = deriv(mid);
    if (f_mid == 0.0 || hi - lo < 1e-14 * (1.0 + std::abs(mid))) return mid;
    if ((f_mid > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Owns a tick vector and hands out windows over it.
struct TickSeries {
  std::vector<mbpm::TradeTick> ticks;

  mbpm::Window window(long long index = 0, double center = 0.0) const {
    return mbpm::Window{index, center, std::span<const mbpm::TradeTick>(ticks)};
  }
};

inline TickSeries make_series(
    const std::vector<std::pair<double, double>>& price_volume, double t0 = 0.0,
    double dt = 1.0) {
  TickSeries s;
  double t = t0;
  for (const auto& [price, volume] : price_volume) {
    s.ticks.push_back(mbpm::TradeTick{t, price, volume, price * volume});
    t += dt;
  }
  return s;
}

/// Splitmix-style generator for test inputs; deterministic across runs.
class TestRng {
public:
  explicit TestRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t bits() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(bits() >> 11) * 0x1.0p-53);
  }

  long integer(long lo, long hi) {  // inclusive
    return lo + static_cast<long>(bits() % static_cast<std::uint64_t>(hi - lo + 1));
  }

private:
  std::uint64_t state_;
};

}  // namespace oracles
