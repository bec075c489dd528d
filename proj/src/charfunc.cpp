#include "mbpm/charfunc.hpp"

#include <cmath>
#include <numbers>

#include "mbpm/errors.hpp"
#include "mbpm/kahan.hpp"
#include "mbpm/parallel.hpp"

namespace mbpm {

CharFuncApprox fit_coefficients(const MarketMoments& moments, int k) {
  if (k < 1 || k > 3)
    throw ConfigError("OrderOutOfRange", "k must be 1, 2 or 3");
  if (static_cast<int>(moments.p_n.size()) < k)
    throw NumericError("InsufficientMoments",
                       "need p(n) up to n = " + std::to_string(k));

  CharFuncApprox approx;
  approx.order = k;
  approx.a[0] = moments.p_n[0];
  if (k >= 2) {
    if (!moments.variance)
      throw NumericError("InsufficientMoments", "variance not available");
    if (!(*moments.variance > 0.0))
      throw NumericError("NonPositiveVariance",
                         "sigma^2(p) = " + std::to_string(*moments.variance) +
                             " must be > 0 for k >= 2");
    approx.a[1] = *moments.variance;
  }
  if (k == 3) {
    if (!moments.gamma3)
      throw NumericError("InsufficientMoments", "third central moment not available");
    approx.a[2] = *moments.gamma3;
  }
  return approx;
}

std::complex<double> charfunc_eval(const CharFuncApprox& approx, double x) {
  // i a_1 x - a_2 x^2 / 2 - i a_3 x^3 / 6
  const double re = -0.5 * approx.a[1] * x * x;
  const double im = approx.a[0] * x - approx.a[2] * x * x * x / 6.0;
  return std::polar(std::exp(re), im);
}

double moment_from_charfunc(const CharFuncApprox& approx, int n) {
  if (n < 1) throw ConfigError("OrderOutOfRange", "n must be >= 1");
  // a_1..a_k are the cumulants (higher ones vanish); raw moments follow from
  // m_r = sum_j C(r-1, j-1) kappa_j m_{r-j}.
  std::vector<double> m(static_cast<std::size_t>(n) + 1, 0.0);
  m[0] = 1.0;
  for (int r = 1; r <= n; ++r) {
    double acc = 0.0;
    double binom = 1.0;  // C(r-1, j-1), starting at j = 1
    const int j_max = std::min(r, approx.order);
    for (int j = 1; j <= j_max; ++j) {
      acc += binom * approx.a[static_cast<std::size_t>(j - 1)] *
             m[static_cast<std::size_t>(r - j)];
      binom = binom * static_cast<double>(r - j) / static_cast<double>(j);
    }
    m[static_cast<std::size_t>(r)] = acc;
  }
  return m[static_cast<std::size_t>(n)];
}

double gaussian_density(const CharFuncApprox& approx, double p) {
  if (approx.order != 2)
    throw ConfigError("OrderOutOfRange", "gaussian density is the order-2 measure");
  if (!(approx.a[1] > 0.0))
    throw NumericError("NonPositiveVariance", "sigma^2 must be > 0");
  const double d = p - approx.a[0];
  return std::exp(-0.5 * d * d / approx.a[1]) /
         std::sqrt(2.0 * std::numbers::pi * approx.a[1]);
}

PointMass delta_measure(const CharFuncApprox& approx) {
  if (approx.order != 1)
    throw ConfigError("OrderOutOfRange", "delta measure is the order-1 measure");
  return PointMass{approx.a[0], 1.0};
}

double MeasureGrid::mass() const {
  KahanSum acc;
  for (std::size_t j = 0; j < eta.size(); ++j) {
    const double w = (j == 0 || j + 1 == eta.size()) ? 0.5 : 1.0;
    acc.add(w * eta[j]);
  }
  return acc.value() * step;
}

double MeasureGrid::moment(int n) const {
  KahanSum acc;
  for (std::size_t j = 0; j < eta.size(); ++j) {
    const double w = (j == 0 || j + 1 == eta.size()) ? 0.5 : 1.0;
    double p_pow = 1.0;
    for (int m = 0; m < n; ++m) p_pow *= p[j];
    acc.add(w * eta[j] * p_pow);
  }
  return acc.value() * step;
}

double MeasureGrid::variance() const {
  const double m1 = moment(1);
  return moment(2) - m1 * m1;
}

namespace {

double invert_point(const CharFuncApprox& approx, double p, double x_max,
                    int steps) {
  // (1/pi) Int_0^xmax Re[F(x) e^{-ixp}] dx by the trapezoid rule; the
  // conjugate symmetry F(-x) = conj F(x) folds the negative-x half in.
  const double dx = x_max / steps;
  KahanSum acc;
  for (int i = 0; i <= steps; ++i) {
    const double x = static_cast<double>(i) * dx;
    const double mod = std::exp(-0.5 * approx.a[1] * x * x);
    const double phase = (approx.a[0] - p) * x - approx.a[2] * x * x * x / 6.0;
    double term = mod * std::cos(phase);
    if (i == 0 || i == steps) term *= 0.5;
    acc.add(term);
  }
  return acc.value() * dx / std::numbers::pi;
}

MeasureGrid invert_impl(const CharFuncApprox& approx, const GridSpec& spec,
                        bool parallel) {
  if (approx.order < 2)
    throw ConfigError("OrderOutOfRange",
                      "order-1 measure is an atom; use delta_measure");
  if (!(approx.a[1] > 0.0))
    throw NumericError("NonPositiveVariance", "sigma^2 must be > 0");
  if (spec.n_points < 2 || spec.x_steps < 2)
    throw ConfigError("BadGridSpec", "need at least 2 grid points and x steps");

  const double sigma = std::sqrt(approx.a[1]);
  const double half_width = std::max(spec.half_width_sigmas, 8.0) * sigma;
  const double x_max = spec.x_max_sigmas / sigma;
  const double step = 2.0 * half_width / (spec.n_points - 1);
  if (step > std::numbers::pi / x_max)
    throw NumericError("GridTooCoarse",
                       "grid spacing fails the Nyquist check against sigma");

  MeasureGrid grid;
  grid.step = step;
  grid.p.resize(static_cast<std::size_t>(spec.n_points));
  grid.eta.resize(static_cast<std::size_t>(spec.n_points));
  const double p_lo = approx.a[0] - half_width;

  const auto count = static_cast<std::ptrdiff_t>(spec.n_points);
#ifdef _OPENMP
  const int threads = parallel ? thread_cap() : 1;
#pragma omp parallel for schedule(static) num_threads(threads)
#else
  (void)parallel;
#endif
  for (std::ptrdiff_t j = 0; j < count; ++j) {
    const double pj = p_lo + static_cast<double>(j) * step;
    grid.p[static_cast<std::size_t>(j)] = pj;
    grid.eta[static_cast<std::size_t>(j)] =
        invert_point(approx, pj, x_max, spec.x_steps);
  }

  for (double e : grid.eta) {
    if (e < -1e-9) {
      grid.has_negative = true;
      break;
    }
  }
  return grid;
}

}  // namespace

MeasureGrid invert_charfunc(const CharFuncApprox& approx, const GridSpec& spec) {
  return invert_impl(approx, spec, true);
}

MeasureGrid invert_charfunc_serial(const CharFuncApprox& approx,
                                   const GridSpec& spec) {
  return invert_impl(approx, spec, false);
}

}  // namespace mbpm
