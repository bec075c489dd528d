#pragma once

#include <cmath>
#include <optional>
#include <string_view>
#include <vector>

namespace mbpm {

/// Power-utility investor: u(c) = c^(1-alpha)/(1-alpha), 0 < alpha <= 1,
/// subjective discount beta, base consumptions e_t and e_{t+1}.
struct UtilityParams {
  double alpha = 0.5;
  double beta = 0.99;
  double e_t = 0.0;
  double e_t1 = 0.0;
};

/// Payoff x = p_{t+1} + d_{t+1} summarized by its first three moments.
struct PayoffStats {
  double x0 = 0.0;        // mean payoff
  double var_x = 0.0;     // sigma^2(x)
  double gamma3_x = 0.0;  // third central moment
  std::optional<double> price_next;  // optional decomposition, x0 = price_next + dividend
  std::optional<double> dividend;

  double sigma() const { return std::sqrt(var_x); }
  double skewness() const { return gamma3_x / (var_x * sigma()); }
};

PayoffStats payoff_from_skewness(double x0, double var_x, double sk_x);

struct PriceStats {
  double p0 = 0.0;    // mean price at t, > 0
  double var_p = 0.0; // sigma^2(p), >= 0 (negative-variance windows rejected upstream)
};

/// u, u', u'', u''' at consumption c. The utility value itself is undefined
/// at alpha = 1 and left empty there; the derivatives remain valid.
struct UtilityDerivs {
  std::optional<double> u;
  double du = 0.0;   // c^-alpha
  double d2u = 0.0;  // -alpha c^(-alpha-1)
  double d3u = 0.0;  // alpha (1+alpha) c^(-alpha-2)
};
UtilityDerivs utility_derivs(double c, double alpha);

/// The three printed discount-factor conventions. All are evaluated at the
/// mean consumptions c_{t;0} = e_t - p0 xi and c_{t+1;0} = e_{t+1} + x0 xi.
enum class MVariant { eq4_9, eq4_11, eq4_26 };

struct DiscountFactors {
  double m0 = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;  // eq4_11 only
  double m3 = 0.0;  // eq4_26 only
  MVariant variant = MVariant::eq4_9;
};
DiscountFactors discount_factors(const UtilityParams& params, double xi,
                                 double p0, double x0, MVariant variant);

/// Which linearized first-order condition to solve: with price-side
/// averaging (eq4_5) or without it (eq4_6).
enum class XiMode { eq4_5, eq4_6 };

struct PricingSolution {
  double xi_max = 0.0;          // converged fixed point
  double xi_single_pass = 0.0;  // right side evaluated once at xi = 0
  double c_t0 = 0.0;
  double c_t1_0 = 0.0;
  double residual = 0.0;  // relative residual of the linearized condition
  int iterations = 0;
  bool infeasible_consumption = false;
  bool bound_4_10_violated = false;
  bool degenerate_denominator = false;

  bool clean() const {
    return !infeasible_consumption && !bound_4_10_violated && !degenerate_denominator;
  }
};

/// Damped fixed-point solve (damping 0.5, start xi = 0) of the linearized
/// utility-maximum condition; the right side depends on xi through the
/// utility derivatives, so the printed formula is iterated to a fixed point.
PricingSolution xi_max_linear(const UtilityParams& params,
                              const PriceStats& price,
                              const PayoffStats& payoff, XiMode mode);

/// Price from given xi and discount factors: p = m0 x0 + xi m1 sigma^2(x),
/// plus the xi m2 sigma^2(p) term in eq4_12 mode.
enum class PriceMode { eq4_8, eq4_12 };
double price_from_xi(const DiscountFactors& factors, const PayoffStats& payoff,
                     double var_p, double xi, PriceMode mode);

/// Positivity bound on xi: price stays positive while
/// xi < (e_{t+1} + x0 xi) x0 / (alpha sigma^2(x)), resolved for xi. When
/// alpha sigma^2(x) < x0^2 every feasible xi satisfies it (bound infinite).
struct XiBound {
  double bound = 0.0;
  bool always_valid = false;
};
XiBound xi_bound_positivity(const UtilityParams& params,
                            const PayoffStats& payoff);

/// Idiosyncratic-risk relations (cov(m,x) = 0 under the quadratic payoff
/// expansion). The t-side consumption stays at the no-purchase baseline e_t.
struct IdiosyncraticReport {
  double xi_4_23 = 0.0;        // e_{t+1} / ((1+alpha) Sk sigma - x0)
  double sk_lower_4_24 = 0.0;  // x0 / ((1+alpha) sigma)
  double em_4_19 = 0.0;        // mean discount factor with the quadratic term
  double cov_residual = 0.0;   // cov(m,x) expression at xi_4_23; ~0 by construction
  std::optional<double> vol_lower_4_25;  // lower limit on var_x/x0^2, needs R_f
  std::optional<DiscountFactors> factors_4_26;
};
IdiosyncraticReport idiosyncratic_relations(const UtilityParams& params,
                                            const PayoffStats& payoff,
                                            std::optional<double> r_f);

/// Second-order (utility maximum) regime. SMALL_VOL means the condition
/// holds for every xi and price; HIGH_VOL carries the xi bound; the same
/// expression becomes a lower limit once xi exceeds it (the positive
/// right-side branch, where a price floor appears instead).
enum class VolRegime { small_vol, high_vol, boundary };

struct RegimeReport {
  VolRegime regime = VolRegime::small_vol;
  std::optional<double> xi_upper = std::nullopt;  // HIGH_VOL only
  double xi = 0.0;
  bool xi_satisfies = true;
  bool lower_branch = false;  // HIGH_VOL with xi above the bound
  bool gamma3_included = false;
};
RegimeReport second_order_regime(const UtilityParams& params,
                                 const PayoffStats& payoff, double xi,
                                 bool include_gamma3 = false);

std::string_view to_string(VolRegime regime);

/// Discrete payoff distribution for the exact (non-expanded) utility.
struct Distribution {
  std::vector<double> x;
  std::vector<double> prob;
};

struct OracleEval {
  double u_value = 0.0;
  double du_dxi = 0.0;
  double d2u_dxi2 = 0.0;
};

/// Exact two-period utility and its xi-derivatives; the independent check
/// for every Taylor-expanded relation above. Requires alpha < 1 (the
/// utility value enters) and positive consumptions at every payoff point.
OracleEval utility_oracle(const UtilityParams& params, const PriceStats& price,
                          const Distribution& dist, double xi);

}  // namespace mbpm
