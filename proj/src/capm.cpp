#include "mbpm/capm.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mbpm/errors.hpp"

namespace mbpm {

PayoffStats payoff_from_skewness(double x0, double var_x, double sk_x) {
  PayoffStats payoff;
  payoff.x0 = x0;
  payoff.var_x = var_x;
  payoff.gamma3_x = sk_x * var_x * std::sqrt(var_x);
  return payoff;
}

UtilityDerivs utility_derivs(double c, double alpha) {
  if (!(c > 0.0))
    throw NumericError("NonPositiveConsumption",
                       "c = " + std::to_string(c) + " must be > 0");
  if (!(alpha > 0.0) || alpha > 1.0)
    throw ConfigError("AlphaOutOfRange", "alpha must satisfy 0 < alpha <= 1");

  UtilityDerivs d;
  d.du = std::pow(c, -alpha);
  d.d2u = -alpha * std::pow(c, -alpha - 1.0);
  d.d3u = alpha * (1.0 + alpha) * std::pow(c, -alpha - 2.0);
  if (alpha < 1.0) d.u = std::pow(c, 1.0 - alpha) / (1.0 - alpha);
  return d;
}

namespace {

struct Consumptions {
  double c_t0 = 0.0;
  double c_t1 = 0.0;
};

Consumptions mean_consumptions(const UtilityParams& params, double xi,
                               double p0, double x0) {
  const Consumptions c{params.e_t - p0 * xi, params.e_t1 + x0 * xi};
  if (!(c.c_t0 > 0.0) || !(c.c_t1 > 0.0))
    throw NumericError("InfeasibleConsumption",
                       "xi = " + std::to_string(xi) +
                           " drives consumption non-positive");
  return c;
}

}  // namespace

DiscountFactors discount_factors(const UtilityParams& params, double xi,
                                 double p0, double x0, MVariant variant) {
  const Consumptions c = mean_consumptions(params, xi, p0, x0);
  const UtilityDerivs d0 = utility_derivs(c.c_t0, params.alpha);
  const UtilityDerivs d1 = utility_derivs(c.c_t1, params.alpha);

  DiscountFactors m;
  m.variant = variant;
  switch (variant) {
    case MVariant::eq4_9:
      m.m0 = params.beta * d1.du / d0.du;
      m.m1 = params.beta * d1.d2u / d0.du;
      break;
    case MVariant::eq4_11:
      m.m0 = params.beta * d1.du / d0.du;
      m.m1 = params.beta * d1.d2u / d0.d2u;
      m.m2 = d0.d2u / d0.du;
      break;
    case MVariant::eq4_26:
      m.m0 = params.beta * d1.du / d0.du;
      m.m1 = params.beta * d1.d2u / d0.d2u;
      m.m3 = params.beta * d1.d3u / d0.d3u;
      break;
  }
  return m;
}

namespace {

struct XiStep {
  double next = 0.0;  // right side of the condition at the current xi
  double num = 0.0;
  double den = 0.0;
};

XiStep xi_rhs(const UtilityParams& params, const PriceStats& price,
              const PayoffStats& payoff, XiMode mode, double xi) {
  const Consumptions c = mean_consumptions(params, xi, price.p0, payoff.x0);
  const UtilityDerivs d0 = utility_derivs(c.c_t0, params.alpha);
  const UtilityDerivs d1 = utility_derivs(c.c_t1, params.alpha);

  XiStep step;
  step.num = d0.du * price.p0 - params.beta * d1.du * payoff.x0;
  step.den = mode == XiMode::eq4_5
                 ? d0.d2u * price.var_p + params.beta * d1.d2u * payoff.var_x
                 : params.beta * d1.d2u * payoff.var_x;
  step.next = step.num / step.den;
  return step;
}

struct Residual {
  double r = 0.0;       // the self-consistent linearized condition
  double dr = 0.0;      // d r / d xi
  double scale = 0.0;   // sum of the term magnitudes
};

Residual residual_at(const UtilityParams& params, const PriceStats& price,
                     const PayoffStats& payoff, XiMode mode, double xi) {
  const Consumptions c = mean_consumptions(params, xi, price.p0, payoff.x0);
  const UtilityDerivs d0 = utility_derivs(c.c_t0, params.alpha);
  const UtilityDerivs d1 = utility_derivs(c.c_t1, params.alpha);
  const double p0 = price.p0;
  const double x0 = payoff.x0;
  const double beta = params.beta;
  const double var_p = mode == XiMode::eq4_5 ? price.var_p : 0.0;
  const double var_x = payoff.var_x;

  const double t1 = d0.du * p0;
  const double t2 = xi * d0.d2u * var_p;
  const double t3 = beta * d1.du * x0;
  const double t4 = beta * xi * d1.d2u * var_x;

  Residual res;
  res.r = t1 - t2 - t3 - t4;
  res.dr = -p0 * p0 * d0.d2u - d0.d2u * var_p + xi * p0 * var_p * d0.d3u -
           beta * x0 * x0 * d1.d2u - beta * d1.d2u * var_x -
           beta * xi * x0 * var_x * d1.d3u;
  res.scale = std::abs(t1) + std::abs(t2) + std::abs(t3) + std::abs(t4);
  return res;
}

/// Feasible open interval for xi given positive consumptions at both dates.
std::pair<double, double> feasible_interval(const UtilityParams& params,
                                            const PriceStats& price,
                                            const PayoffStats& payoff) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = params.e_t / price.p0;
  if (payoff.x0 > 0.0) {
    lo = -params.e_t1 / payoff.x0;
  } else if (payoff.x0 < 0.0) {
    hi = std::min(hi, params.e_t1 / -payoff.x0);
  }
  return {lo, hi};
}

/// Safeguarded Newton with a bisection bracket on the residual. Returns NaN
/// when no sign change is found inside the feasible interval.
double solve_residual_root(const UtilityParams& params, const PriceStats& price,
                           const PayoffStats& payoff, XiMode mode, double lo,
                           double hi, int& iterations) {
  const auto value = [&](double xi) {
    return residual_at(params, price, payoff, mode, xi).r;
  };
  if (!std::isfinite(lo)) lo = hi - 1e12 * std::max(1.0, std::abs(hi));

  // Bracket by sampling; the walls push the residual to -inf/+inf when the
  // payoff mean is positive, so refine toward them if the coarse scan misses.
  constexpr int kSamples = 64;
  double a = lo, b = hi, fa = 0.0, fb = 0.0;
  bool found = false;
  const double width = hi - lo;
  double prev_x = 0.0, prev_f = 0.0;
  bool have_prev = false;
  for (int i = 1; i < kSamples && !found; ++i) {
    const double x = lo + width * static_cast<double>(i) / kSamples;
    const double f = value(x);
    ++iterations;
    if (have_prev && (prev_f < 0.0) != (f < 0.0)) {
      a = prev_x; fa = prev_f; b = x; fb = f;
      found = true;
    }
    prev_x = x; prev_f = f; have_prev = true;
  }
  for (int k = 3; k <= 14 && !found; ++k) {
    const double margin = width * std::pow(10.0, -k);
    for (double x : {lo + margin, hi - margin}) {
      const double f = value(x);
      ++iterations;
      if ((prev_f < 0.0) != (f < 0.0)) {
        a = std::min(prev_x, x); b = std::max(prev_x, x);
        fa = value(a); fb = value(b);
        found = true;
        break;
      }
    }
  }
  if (!found) return std::numeric_limits<double>::quiet_NaN();
  if (fa > 0.0) { std::swap(a, b); std::swap(fa, fb); }

  double xi = 0.5 * (a + b);
  for (int it = 0; it < 100; ++it) {
    const Residual res = residual_at(params, price, payoff, mode, xi);
    ++iterations;
    if (res.r < 0.0) a = xi; else b = xi;
    double next = xi - res.r / res.dr;
    if (!std::isfinite(next) || next <= std::min(a, b) || next >= std::max(a, b))
      next = 0.5 * (a + b);
    const double step = std::abs(next - xi);
    xi = next;
    if (step < 1e-15 * (1.0 + std::abs(xi))) break;
  }
  return xi;
}

}  // namespace

PricingSolution xi_max_linear(const UtilityParams& params,
                              const PriceStats& price,
                              const PayoffStats& payoff, XiMode mode) {
  if (!(price.p0 > 0.0) || price.var_p < 0.0)
    throw ConfigError("BadPriceStats", "p0 must be > 0 and var_p >= 0");
  if (payoff.var_x < 0.0)
    throw ConfigError("BadPayoffStats", "var_x must be >= 0");
  if (mode == XiMode::eq4_5 && !(price.var_p + payoff.var_x > 0.0))
    throw NumericError("DegenerateDenominator",
                       "eq4_5 needs sigma^2(p) + sigma^2(x) > 0");
  if (mode == XiMode::eq4_6 && !(payoff.var_x > 0.0))
    throw NumericError("DegenerateDenominator", "eq4_6 needs sigma^2(x) > 0");

  PricingSolution sol;
  const XiStep first = xi_rhs(params, price, payoff, mode, 0.0);
  if (std::abs(first.den) < 1e-14)
    throw NumericError("DegenerateDenominator",
                       "condition denominator vanishes at xi = 0");
  sol.xi_single_pass = first.next;

  const auto feasible = [&](double xi) {
    return params.e_t - price.p0 * xi > 0.0 &&
           params.e_t1 + payoff.x0 * xi > 0.0;
  };

  // Damped fixed point on the printed formula. Its map derivative is about
  // -num'/|den|, so it diverges when the volatility terms are small; the
  // residual root finder below covers that regime.
  double xi = 0.0;
  constexpr int kMaxIter = 200;
  constexpr double kDamping = 0.5;
  bool converged = false;
  for (int it = 0; it < kMaxIter; ++it) {
    ++sol.iterations;
    const XiStep step = xi_rhs(params, price, payoff, mode, xi);
    if (std::abs(step.den) < 1e-14) {
      sol.degenerate_denominator = true;
      break;
    }
    const double update = kDamping * (step.next - xi);
    const double candidate = xi + update;
    if (!feasible(candidate)) {
      sol.infeasible_consumption = true;
      break;
    }
    xi = candidate;
    if (std::abs(update) < 1e-10 * (1.0 + std::abs(xi))) {
      converged = true;
      break;
    }
  }

  if (converged) {
    // Newton polish: the damped stop leaves |g(xi) - xi| near 2e-10; the
    // residual contract wants the root to machine precision.
    for (int it = 0; it < 12; ++it) {
      const Residual res = residual_at(params, price, payoff, mode, xi);
      const double next = xi - res.r / res.dr;
      if (!std::isfinite(next) || !feasible(next)) break;
      const double step = std::abs(next - xi);
      xi = next;
      ++sol.iterations;
      if (step < 1e-15 * (1.0 + std::abs(xi))) break;
    }
  } else {
    const auto [lo, hi] = feasible_interval(params, price, payoff);
    const double root =
        solve_residual_root(params, price, payoff, mode, lo, hi, sol.iterations);
    if (std::isfinite(root)) {
      xi = root;
    } else if (!sol.clean()) {
      // keep the last feasible damped iterate, flags tell the story
    } else {
      throw NumericError("NoConvergence",
                         "no root of the linearized condition was bracketed");
    }
  }

  sol.xi_max = xi;
  sol.c_t0 = params.e_t - price.p0 * xi;
  sol.c_t1_0 = params.e_t1 + payoff.x0 * xi;
  const Residual final_res = residual_at(params, price, payoff, mode, xi);
  sol.residual = final_res.scale > 0.0 ? std::abs(final_res.r) / final_res.scale
                                       : std::abs(final_res.r);

  if (payoff.var_x > 0.0) {
    const XiBound bound = xi_bound_positivity(params, payoff);
    if (!bound.always_valid && xi > bound.bound) sol.bound_4_10_violated = true;
  }
  return sol;
}

double price_from_xi(const DiscountFactors& factors, const PayoffStats& payoff,
                     double var_p, double xi, PriceMode mode) {
  double p = factors.m0 * payoff.x0 + xi * factors.m1 * payoff.var_x;
  if (mode == PriceMode::eq4_12) p += xi * factors.m2 * var_p;
  if (!(p > 0.0))
    throw NumericError("NegativePrice",
                       "price " + std::to_string(p) +
                           " <= 0; xi violates the positivity bound");
  if (xi > 0.0 && payoff.var_x > 0.0 && factors.m1 < 0.0 &&
      !(p <= factors.m0 * payoff.x0))
    throw NumericError("SignConsequenceViolated", "expected p < m0 x0");
  return p;
}

XiBound xi_bound_positivity(const UtilityParams& params,
                            const PayoffStats& payoff) {
  if (!(payoff.var_x > 0.0))
    throw NumericError("ZeroVariance", "sigma^2(x) must be > 0");
  XiBound bound;
  bound.always_valid = params.alpha * payoff.var_x < payoff.x0 * payoff.x0;
  bound.bound = bound.always_valid
                    ? std::numeric_limits<double>::infinity()
                    : params.e_t1 * payoff.x0 /
                          (params.alpha * payoff.var_x - payoff.x0 * payoff.x0);
  return bound;
}

IdiosyncraticReport idiosyncratic_relations(const UtilityParams& params,
                                            const PayoffStats& payoff,
                                            std::optional<double> r_f) {
  const double sigma = payoff.sigma();
  if (!(sigma > 0.0))
    throw NumericError("ZeroVariance", "sigma(x) must be > 0");

  IdiosyncraticReport rep;
  rep.sk_lower_4_24 = payoff.x0 / ((1.0 + params.alpha) * sigma);
  const double sk = payoff.skewness();
  if (!(sk > rep.sk_lower_4_24))
    throw NumericError("SkewnessBelowBound",
                       "Sk(x) = " + std::to_string(sk) + " <= lower limit " +
                           std::to_string(rep.sk_lower_4_24));

  rep.xi_4_23 =
      params.e_t1 / ((1.0 + params.alpha) * sk * sigma - payoff.x0);
  const double xi = rep.xi_4_23;

  const double c_t1 = params.e_t1 + payoff.x0 * xi;
  const UtilityDerivs d1 = utility_derivs(c_t1, params.alpha);
  // t side at the no-purchase baseline e_t; the idiosyncratic relations never
  // expand the t side.
  const UtilityDerivs d0 = utility_derivs(params.e_t, params.alpha);

  rep.em_4_19 = params.beta / d0.du *
                (d1.du + d1.d3u * xi * xi * payoff.var_x);
  rep.cov_residual =
      d1.d2u * xi * payoff.var_x + d1.d3u * xi * xi * payoff.gamma3_x;

  if (r_f) {
    if (!(*r_f > 0.0))
      throw ConfigError("BadRiskFree", "R_f must be > 0");
    DiscountFactors m;
    m.variant = MVariant::eq4_26;
    m.m0 = params.beta * d1.du / d0.du;
    m.m1 = params.beta * d1.d2u / d0.d2u;
    m.m3 = params.beta * d1.d3u / d0.d3u;
    rep.factors_4_26 = m;
    if (!(m.m0 * *r_f < 1.0))
      throw NumericError("RiskFreeInconsistent",
                         "m0 R_f >= 1 leaves the volatility limit undefined");
    rep.vol_lower_4_25 = m.m3 / (m.m1 * m.m1) * (1.0 - m.m0 * *r_f) /
                         ((1.0 + params.alpha) * (1.0 + params.alpha) * *r_f);
  }
  return rep;
}

RegimeReport second_order_regime(const UtilityParams& params,
                                 const PayoffStats& payoff, double xi,
                                 bool include_gamma3) {
  RegimeReport rep;
  rep.xi = xi;
  rep.gamma3_included = include_gamma3;

  const double x0 = payoff.x0;
  const double v = payoff.var_x;
  const double gamma3 = include_gamma3 ? payoff.gamma3_x : 0.0;
  // lhs vs rhs of the rearranged max condition: the regime is constraining
  // exactly when (1+alpha)(2 x0 v + gamma3) exceeds x0 (x0^2 + v).
  const double lhs = (1.0 + params.alpha) * (2.0 * x0 * v + gamma3);
  const double rhs = x0 * (x0 * x0 + v);
  const double scale = std::max(std::abs(lhs), std::abs(rhs));

  if (std::abs(lhs - rhs) <= 1e-12 * scale) {
    rep.regime = VolRegime::boundary;
    rep.xi_satisfies = true;
  } else if (lhs < rhs) {
    rep.regime = VolRegime::small_vol;
    rep.xi_satisfies = true;
  } else {
    rep.regime = VolRegime::high_vol;
    rep.xi_upper = params.e_t1 * (x0 * x0 + v) / (lhs - rhs);
    rep.xi_satisfies = xi < *rep.xi_upper;
    rep.lower_branch = !rep.xi_satisfies;
  }
  return rep;
}

std::string_view to_string(VolRegime regime) {
  switch (regime) {
    case VolRegime::small_vol: return "SMALL_VOL";
    case VolRegime::high_vol: return "HIGH_VOL";
    case VolRegime::boundary: return "BOUNDARY";
  }
  return "?";
}

OracleEval utility_oracle(const UtilityParams& params, const PriceStats& price,
                          const Distribution& dist, double xi) {
  if (params.alpha >= 1.0)
    throw ConfigError("AlphaOutOfRange",
                      "utility value undefined at alpha = 1; use alpha < 1");
  if (dist.x.empty() || dist.x.size() != dist.prob.size())
    throw NumericError("BadDistribution", "x and prob sizes must match");
  double total = 0.0;
  for (std::size_t j = 0; j < dist.prob.size(); ++j) {
    if (!(dist.prob[j] >= 0.0) || !std::isfinite(dist.x[j]))
      throw NumericError("BadDistribution", "probabilities must be >= 0, x finite");
    total += dist.prob[j];
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw NumericError("BadDistribution",
                       "probabilities sum to " + std::to_string(total));

  const double c_t = params.e_t - price.p0 * xi;
  if (!(c_t > 0.0))
    throw NumericError("InfeasibleConsumption", "c_t <= 0");
  const UtilityDerivs d0 = utility_derivs(c_t, params.alpha);

  OracleEval eval;
  eval.u_value = *d0.u;
  eval.du_dxi = -price.p0 * d0.du;
  eval.d2u_dxi2 = price.p0 * price.p0 * d0.d2u;
  for (std::size_t j = 0; j < dist.x.size(); ++j) {
    const double c1 = params.e_t1 + dist.x[j] * xi;
    if (!(c1 > 0.0))
      throw NumericError("InfeasibleConsumption", "c_{t+1} <= 0 at a payoff point");
    const UtilityDerivs d1 = utility_derivs(c1, params.alpha);
    const double w = params.beta * dist.prob[j];
    eval.u_value += w * *d1.u;
    eval.du_dxi += w * dist.x[j] * d1.du;
    eval.d2u_dxi2 += w * dist.x[j] * dist.x[j] * d1.d2u;
  }
  return eval;
}

}  // namespace mbpm
