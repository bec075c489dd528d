#pragma once

#include <array>
#include <complex>
#include <vector>

#include "mbpm/moments.hpp"

namespace mbpm {

/// Exponential-polynomial characteristic function approximation
///   F_k(x) = exp{ sum_{m=1..k} (i^m / m!) a_m x^m },  k in {1,2,3}.
/// a[m-1] holds a_m; entries beyond the order stay zero.
struct CharFuncApprox {
  int order = 1;
  std::array<double, 3> a{0.0, 0.0, 0.0};
};

/// a_1 = p(1), a_2 = sigma^2(p), a_3 = third central moment. The first k
/// moments of the fitted F_k reproduce the source p(1..k).
CharFuncApprox fit_coefficients(const MarketMoments& moments, int k);

std::complex<double> charfunc_eval(const CharFuncApprox& approx, double x);

/// n-th raw moment implied by the fit, computed analytically from the
/// cumulants a_1..a_k. Equals the source p(n) for n <= order.
double moment_from_charfunc(const CharFuncApprox& approx, int n);

/// Gaussian density with mean a_1 and variance a_2 (order 2 only).
double gaussian_density(const CharFuncApprox& approx, double p);

/// Order-1 measure: a unit point mass at p(1).
struct PointMass {
  double location = 0.0;
  double mass = 1.0;
};
PointMass delta_measure(const CharFuncApprox& approx);

struct GridSpec {
  int n_points = 4096;
  double half_width_sigmas = 8.0;  // grid covers p(1) +/- this many sigma
  double x_max_sigmas = 12.0;      // integration range |x| <= this / sigma
  int x_steps = 2048;              // trapezoid intervals on [0, x_max]
};

/// Uniform density grid from Fourier inversion. For order 3 the values are
/// a signed quasi-density; has_negative marks any eta < -1e-9.
struct MeasureGrid {
  std::vector<double> p;
  std::vector<double> eta;
  double step = 0.0;
  bool has_negative = false;

  double mass() const;           // trapezoid integral of eta
  double moment(int n) const;    // trapezoid integral of eta * p^n
  double mean() const { return moment(1); }
  double variance() const;
};

/// Numerical inversion eta(p) = (1/pi) Int_0^xmax Re[F(x) e^{-ixp}] dx,
/// parallel by grid chunk. Orders 2 and 3 only.
MeasureGrid invert_charfunc(const CharFuncApprox& approx,
                            const GridSpec& spec = {});

/// Serial reference for invert_charfunc; bit-identical results.
MeasureGrid invert_charfunc_serial(const CharFuncApprox& approx,
                                   const GridSpec& spec = {});

}  // namespace mbpm
