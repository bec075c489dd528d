// mbpm - market-based price probability toolkit
//
// Subcommands: analyze, measure, capm, synth, sweep-delta. File-in/file-out
// only; identical inputs and flags produce byte-identical outputs (pass
// --no-timestamp to drop the one non-deterministic field).

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mbpm/capm.hpp"
#include "mbpm/charfunc.hpp"
#include "mbpm/errors.hpp"
#include "mbpm/moments.hpp"
#include "mbpm/numfmt.hpp"
#include "mbpm/synth.hpp"
#include "mbpm/trade.hpp"

namespace {

using nlohmann::json;
using namespace mbpm;

constexpr const char* kVersion = "0.1.0";

std::string fnv1a_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("InputUnreadable", "cannot open '" + path + "'");
  std::uint64_t hash = 1469598103934665603ULL;
  char buf[1 << 16];
  while (true) {
    in.read(buf, sizeof(buf));
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 1099511628211ULL;
    }
    if (got < static_cast<std::streamsize>(sizeof(buf))) break;
  }
  char hex[32];
  std::snprintf(hex, sizeof(hex), "fnv1a64:%016llx",
                static_cast<unsigned long long>(hash));
  return hex;
}

std::string timestamp_utc() {
  char buf[32];
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json run_header(const std::string& digest, json config, bool no_timestamp) {
  json j;
  j["tool"] = "mbpm";
  j["version"] = kVersion;
  if (!digest.empty()) j["input_digest"] = digest;
  j["config"] = std::move(config);
  if (!no_timestamp) j["generated_at"] = timestamp_utc();
  return j;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("OutputUnwritable", "cannot open '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw ConfigError("OutputUnwritable", "short write to '" + path + "'");
}

void write_json(const std::string& path, const json& j) {
  write_file(path, j.dump(2) + "\n");
}

double quantile(std::vector<double> sorted, double q) {
  // nearest-rank on a pre-sorted vector
  const auto n = sorted.size();
  const auto rank = static_cast<std::size_t>(
      std::min<double>(static_cast<double>(n) - 1.0,
                       std::max(0.0, std::ceil(q * static_cast<double>(n)) - 1.0)));
  return sorted[rank];
}

json window_record(const Window& window, const std::optional<MomentReport>& rep) {
  json j;
  j["window"] = window.index;
  j["center"] = window.center;
  j["n_trades"] = window.size();
  if (!rep) return j;
  j["p"] = rep->market.p_n;
  j["pi"] = rep->freq.pi_n;
  j["var_p"] = rep->market.variance ? json(*rep->market.variance) : json();
  j["var_p_negative"] = rep->market.variance_negative;
  j["var_freq"] = rep->freq.variance_freq;
  j["a3"] = rep->market.gamma3 ? json(*rep->market.gamma3) : json();
  j["skew"] = rep->market.skew_normalized ? json(*rep->market.skew_normalized) : json();
  j["gaps"] = rep->gaps;
  return j;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeOpts {
  std::string input;
  double delta = 0.0;
  double origin = 0.0;
  int max_n = 4;
  std::string out;
  bool no_timestamp = false;
};

void run_analyze(const AnalyzeOpts& opt) {
  const auto ticks = load_ticks(opt.input);
  const auto windows = partition(ticks, WindowSpec{opt.origin, opt.delta});
  const auto reports = report_windows(windows, opt.max_n, false);

  json out = run_header(fnv1a_digest(opt.input),
                        json{{"command", "analyze"},
                             {"input", opt.input},
                             {"delta", opt.delta},
                             {"origin", opt.origin},
                             {"max_n", opt.max_n}},
                        opt.no_timestamp);

  json records = json::array();
  std::size_t occupied = 0;
  std::size_t negative_var = 0;
  std::vector<double> worst_gaps;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    records.push_back(window_record(windows[i], reports[i]));
    if (!reports[i]) continue;
    ++occupied;
    if (reports[i]->market.variance_negative) ++negative_var;
    double worst = 0.0;
    for (double gap : reports[i]->gaps) worst = std::max(worst, gap);
    worst_gaps.push_back(worst);
  }
  out["windows"] = std::move(records);

  json summary;
  summary["windows"] = windows.size();
  summary["occupied"] = occupied;
  summary["negative_variance_windows"] = negative_var;
  if (!worst_gaps.empty()) {
    std::sort(worst_gaps.begin(), worst_gaps.end());
    summary["gap_quantiles"] = json{{"p50", quantile(worst_gaps, 0.50)},
                                    {"p90", quantile(worst_gaps, 0.90)},
                                    {"max", worst_gaps.back()}};
  } else {
    summary["gap_quantiles"] = json();
  }
  out["summary"] = std::move(summary);
  write_json(opt.out, out);
}

// ---------------------------------------------------------------- measure

struct MeasureOpts {
  std::string input;
  double delta = 0.0;
  double origin = 0.0;
  int k = 2;
  long long window = 0;
  int grid_points = 4096;
  int x_steps = 2048;
  std::string out;
  bool no_timestamp = false;
};

std::string coeffs_path(const std::string& out) {
  std::filesystem::path p(out);
  p.replace_extension(".json");
  if (p == std::filesystem::path(out)) p = out + ".coeffs.json";
  return p.string();
}

void run_measure(const MeasureOpts& opt) {
  const auto ticks = load_ticks(opt.input);
  const auto windows = partition(ticks, WindowSpec{opt.origin, opt.delta});
  const Window* window = nullptr;
  for (const Window& w : windows)
    if (w.index == opt.window) window = &w;
  if (!window)
    throw ConfigError("WindowNotFound",
                      "no window with index " + std::to_string(opt.window));
  if (window->empty())
    throw NumericError("EmptyWindow",
                       "window " + std::to_string(opt.window) + " has no trades");

  const auto rep = moment_report(*window, opt.k, false);
  const auto fit = fit_coefficients(rep.market, opt.k);

  json coeffs = run_header(fnv1a_digest(opt.input),
                           json{{"command", "measure"},
                                {"input", opt.input},
                                {"delta", opt.delta},
                                {"origin", opt.origin},
                                {"k", opt.k},
                                {"window", opt.window},
                                {"grid_points", opt.grid_points}},
                           opt.no_timestamp);
  coeffs["k"] = fit.order;
  json a = json::array();
  for (int m = 0; m < fit.order; ++m) a.push_back(fit.a[static_cast<std::size_t>(m)]);
  coeffs["a"] = std::move(a);
  coeffs["window_record"] = window_record(*window, rep);

  if (opt.k == 1) {
    const auto atom = delta_measure(fit);
    coeffs["atom"] = json{{"location", atom.location}, {"mass", atom.mass}};
    write_json(opt.out, coeffs);
    return;
  }

  GridSpec spec;
  spec.n_points = opt.grid_points;
  spec.x_steps = opt.x_steps;
  const auto grid = invert_charfunc(fit, spec);

  std::string csv = "p,eta\n";
  for (std::size_t j = 0; j < grid.p.size(); ++j)
    csv += format_double(grid.p[j]) + "," + format_double(grid.eta[j]) + "\n";
  write_file(opt.out, csv);

  coeffs["grid"] = json{{"path", opt.out},
                        {"points", grid.p.size()},
                        {"step", grid.step},
                        {"mass", grid.mass()},
                        {"has_negative", grid.has_negative}};
  write_json(coeffs_path(opt.out), coeffs);
}

// ------------------------------------------------------------------ capm

struct CapmOpts {
  std::string scenario;
  std::string mode;
  std::string out;
  bool no_timestamp = false;
};

double require_number(const json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_number())
    throw ConfigError("ScenarioSchema", "missing numeric field '" + key + "'");
  return j[key].get<double>();
}

json factors_json(const DiscountFactors& m) {
  json j{{"m0", m.m0}, {"m1", m.m1}};
  if (m.variant == MVariant::eq4_11) j["m2"] = m.m2;
  if (m.variant == MVariant::eq4_26) j["m3"] = m.m3;
  return j;
}

json regime_json(const RegimeReport& regime) {
  json j;
  j["regime"] = std::string(to_string(regime.regime));
  j["xi"] = regime.xi;
  j["xi_upper"] = regime.xi_upper ? json(*regime.xi_upper) : json();
  j["xi_satisfies"] = regime.xi_satisfies;
  j["lower_branch"] = regime.lower_branch;
  j["gamma3_included"] = regime.gamma3_included;
  return j;
}

/// Evaluates each printed line of the risk-free block independently.
json check_4_25(const UtilityParams& params, const PayoffStats& payoff,
                double r_f, const IdiosyncraticReport& idio) {
  const double xi = idio.xi_4_23;
  const double c_t1 = params.e_t1 + payoff.x0 * xi;
  const auto d0 = utility_derivs(params.e_t, params.alpha);
  const auto d1 = utility_derivs(c_t1, params.alpha);
  const DiscountFactors& m = *idio.factors_4_26;

  json j;
  j["em_line"] = json{{"em_4_19", idio.em_4_19},
                      {"inverse_r_f", 1.0 / r_f},
                      {"residual", idio.em_4_19 - 1.0 / r_f}};
  const double lhs2 = xi * xi * payoff.var_x;
  const double rhs2 = d0.du / (params.beta * r_f * d1.d3u) - d1.du / d1.d3u;
  j["xi2_var_line"] = json{{"lhs", lhs2}, {"rhs", rhs2}, {"residual", lhs2 - rhs2}};
  const double sk = payoff.skewness();
  const double rhs3 = r_f / (1.0 - m.m0 * r_f) * m.m1 * m.m1 / m.m3;
  const double sk_floor = payoff.x0 * payoff.x0 /
                          ((1.0 + params.alpha) * (1.0 + params.alpha) * payoff.var_x);
  j["sk_line"] = json{{"sk_squared", sk * sk},
                      {"factor_identity", rhs3},
                      {"floor", sk_floor},
                      {"above_floor", sk * sk > sk_floor}};
  const double norm_vol = payoff.var_x / (payoff.x0 * payoff.x0);
  j["vol_line"] = json{{"normalized_vol", norm_vol},
                       {"lower_limit", *idio.vol_lower_4_25},
                       {"holds", norm_vol > *idio.vol_lower_4_25}};
  return j;
}

void run_capm(const CapmOpts& opt) {
  std::ifstream in(opt.scenario, std::ios::binary);
  if (!in)
    throw ParseError("InputUnreadable", "cannot open '" + opt.scenario + "'");
  json scenario;
  try {
    scenario = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("ScenarioUnparseable", e.what());
  }

  UtilityParams params;
  params.alpha = require_number(scenario, "alpha");
  params.beta = require_number(scenario, "beta");
  params.e_t = require_number(scenario, "e_t");
  params.e_t1 = require_number(scenario, "e_t1");
  PriceStats price{require_number(scenario, "p0"), require_number(scenario, "var_p")};
  const double x0 = require_number(scenario, "x0");
  const double var_x = require_number(scenario, "var_x");
  const double sk_x = require_number(scenario, "sk_x");
  std::optional<double> r_f;
  if (scenario.contains("R_f")) r_f = require_number(scenario, "R_f");

  if (!(params.alpha > 0.0) || params.alpha > 1.0)
    throw ConfigError("ScenarioSchema", "alpha must be in (0, 1]");
  if (!(params.beta > 0.0)) throw ConfigError("ScenarioSchema", "beta must be > 0");
  if (params.e_t < 0.0 || params.e_t1 < 0.0)
    throw ConfigError("ScenarioSchema", "base consumptions must be >= 0");
  if (!(price.p0 > 0.0)) throw ConfigError("ScenarioSchema", "p0 must be > 0");
  if (price.var_p < 0.0)
    throw ConfigError("ScenarioSchema", "var_p must be >= 0 (negative-variance windows are rejected here)");
  if (var_x < 0.0) throw ConfigError("ScenarioSchema", "var_x must be >= 0");
  if (r_f && !(*r_f > 0.0)) throw ConfigError("ScenarioSchema", "R_f must be > 0");

  std::string mode = opt.mode;
  if (mode.empty() && scenario.contains("mode"))
    mode = scenario["mode"].get<std::string>();
  if (mode != "eq4_5" && mode != "eq4_6" && mode != "eq4_23")
    throw ConfigError("ScenarioSchema",
                      "mode must be one of eq4_5, eq4_6, eq4_23 (flag or scenario field)");

  PayoffStats payoff = payoff_from_skewness(x0, var_x, sk_x);
  if (scenario.contains("price_next") || scenario.contains("dividend")) {
    payoff.price_next = require_number(scenario, "price_next");
    payoff.dividend = require_number(scenario, "dividend");
    const double composed = *payoff.price_next + *payoff.dividend;
    if (std::abs(composed - x0) > 1e-12 * std::max(std::abs(composed), std::abs(x0)))
      throw ConfigError("ScenarioSchema",
                        "x0 must equal price_next + dividend when both are given");
  }

  json out = run_header(fnv1a_digest(opt.scenario),
                        json{{"command", "capm"},
                             {"scenario", opt.scenario},
                             {"mode", mode}},
                        opt.no_timestamp);
  out["scenario"] = scenario;

  if (mode == "eq4_23") {
    const auto idio = idiosyncratic_relations(params, payoff, r_f);
    json sol;
    sol["xi_4_23"] = idio.xi_4_23;
    sol["sk_lower_4_24"] = idio.sk_lower_4_24;
    sol["em_4_19"] = idio.em_4_19;
    sol["cov_residual"] = idio.cov_residual;
    sol["vol_lower_4_25"] = idio.vol_lower_4_25 ? json(*idio.vol_lower_4_25) : json();
    sol["factors_4_26"] = idio.factors_4_26 ? factors_json(*idio.factors_4_26) : json();
    sol["c_t1_0"] = params.e_t1 + payoff.x0 * idio.xi_4_23;
    out["solution"] = std::move(sol);
    out["regime"] = regime_json(second_order_regime(params, payoff, idio.xi_4_23));
    if (r_f) out["check_4_25"] = check_4_25(params, payoff, *r_f, idio);
    write_json(opt.out, out);
    return;
  }

  const XiMode xi_mode = mode == "eq4_5" ? XiMode::eq4_5 : XiMode::eq4_6;
  const auto sol = xi_max_linear(params, price, payoff, xi_mode);

  json sol_json;
  sol_json["xi_max"] = sol.xi_max;
  sol_json["xi_single_pass"] = sol.xi_single_pass;
  sol_json["c_t0"] = sol.c_t0;
  sol_json["c_t1_0"] = sol.c_t1_0;
  sol_json["residual"] = sol.residual;
  sol_json["iterations"] = sol.iterations;
  sol_json["flags"] = json{{"infeasible_consumption", sol.infeasible_consumption},
                           {"bound_4_10_violated", sol.bound_4_10_violated},
                           {"degenerate_denominator", sol.degenerate_denominator}};
  out["solution"] = std::move(sol_json);
  out["regime"] = regime_json(second_order_regime(params, payoff, sol.xi_max));

  if (payoff.var_x > 0.0) {
    const auto bound = xi_bound_positivity(params, payoff);
    out["bound_4_10"] = json{{"always_valid", bound.always_valid},
                             {"bound", std::isfinite(bound.bound) ? json(bound.bound) : json()}};
    const auto m9 = discount_factors(params, sol.xi_max, price.p0, payoff.x0, MVariant::eq4_9);
    const auto m11 = discount_factors(params, sol.xi_max, price.p0, payoff.x0, MVariant::eq4_11);
    out["discount_factors"] =
        json{{"eq4_9", factors_json(m9)}, {"eq4_11", factors_json(m11)}};
    out["price_eq4_8"] = price_from_xi(m9, payoff, price.var_p, sol.xi_max, PriceMode::eq4_8);
    out["price_eq4_12"] = price_from_xi(m11, payoff, price.var_p, sol.xi_max, PriceMode::eq4_12);
  }

  if (r_f) {
    try {
      const auto idio = idiosyncratic_relations(params, payoff, r_f);
      out["check_4_25"] = check_4_25(params, payoff, *r_f, idio);
    } catch (const NumericError& e) {
      out["check_4_25"] = json{{"skipped", e.name()}};
    }
  }
  write_json(opt.out, out);
}

// ----------------------------------------------------------------- synth

struct SynthOpts {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  double spacing = 1.0;
  std::string price = "const:100";
  std::string volume = "const1";
  double coupling = 0.0;
  std::string out;
};

std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string field =
        comma == std::string::npos ? text.substr(pos) : text.substr(pos, comma - pos);
    try {
      std::size_t used = 0;
      values.push_back(std::stod(field, &used));
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw ConfigError("InvalidConfig", "bad number '" + field + "' in " + what);
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return values;
}

PriceProcess parse_price_spec(const std::string& spec) {
  PriceProcess price;
  const std::size_t colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "const") {
    const auto v = parse_numbers(args, "price spec");
    if (v.size() != 1) throw ConfigError("InvalidConfig", "const:<level>");
    price.kind = PriceProcess::Kind::constant;
    price.level = v[0];
  } else if (kind == "walk") {
    const auto v = parse_numbers(args, "price spec");
    if (v.size() != 2) throw ConfigError("InvalidConfig", "walk:<start>,<step_vol>");
    price.kind = PriceProcess::Kind::random_walk;
    price.level = v[0];
    price.step_vol = v[1];
  } else if (kind == "step") {
    const auto v = parse_numbers(args, "price spec");
    if (v.size() != 3)
      throw ConfigError("InvalidConfig", "step:<base>,<amplitude>,<period>");
    price.kind = PriceProcess::Kind::regime_step;
    price.level = v[0];
    price.amplitude = v[1];
    price.period = v[2];
  } else {
    throw ConfigError("InvalidConfig", "price spec must be const:, walk: or step:");
  }
  return price;
}

VolumeDist parse_volume_spec(const std::string& spec) {
  VolumeDist volume;
  const std::size_t colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "const1") {
    volume.kind = VolumeDist::Kind::constant_one;
  } else if (kind == "uniform") {
    volume.kind = VolumeDist::Kind::uniform_levels;
    volume.levels = parse_numbers(args, "volume spec");
  } else if (kind == "pareto") {
    const auto v = parse_numbers(args, "volume spec");
    if (v.size() != 1 && v.size() != 2)
      throw ConfigError("InvalidConfig", "pareto:<shape>[,<scale>]");
    volume.kind = VolumeDist::Kind::pareto;
    volume.shape = v[0];
    if (v.size() == 2) volume.scale = v[1];
  } else {
    throw ConfigError("InvalidConfig", "volume spec must be const1, uniform: or pareto:");
  }
  return volume;
}

void run_synth(const SynthOpts& opt) {
  SynthConfig cfg;
  cfg.seed = opt.seed;
  cfg.n_ticks = opt.n;
  cfg.tick_spacing = opt.spacing;
  cfg.price = parse_price_spec(opt.price);
  cfg.volume = parse_volume_spec(opt.volume);
  cfg.coupling = opt.coupling;
  const auto ticks = generate(cfg);

  std::ofstream out(opt.out, std::ios::binary);
  if (!out) throw ConfigError("OutputUnwritable", "cannot open '" + opt.out + "'");
  write_ticks(out, ticks, false);
}

// ----------------------------------------------------------- sweep-delta

struct SweepOpts {
  std::string input;
  std::string deltas;
  double origin = 0.0;
  int max_n = 4;
  std::string out;
};

void run_sweep(const SweepOpts& opt) {
  std::vector<double> deltas;
  for (double d : parse_numbers(opt.deltas, "--deltas")) {
    if (!(d > 0.0)) throw ConfigError("InvalidConfig", "deltas must be > 0");
    if (std::find(deltas.begin(), deltas.end(), d) != deltas.end()) {
      std::cerr << "warning: duplicate delta " << format_double(d) << " ignored\n";
      continue;
    }
    deltas.push_back(d);
  }
  if (deltas.empty()) throw ConfigError("InvalidConfig", "no deltas given");

  const auto ticks = load_ticks(opt.input);

  std::string csv = "delta,window,N,p1,var_p,a3\n";
  for (double delta : deltas) {
    const auto windows = partition(ticks, WindowSpec{opt.origin, delta});
    const auto reports = report_windows(windows, opt.max_n, false);
    for (std::size_t i = 0; i < windows.size(); ++i) {
      csv += format_double(delta) + "," + std::to_string(windows[i].index) + "," +
             std::to_string(windows[i].size());
      if (reports[i]) {
        csv += "," + format_double(reports[i]->market.p_n[0]);
        csv += ",";
        if (reports[i]->market.variance)
          csv += format_double(*reports[i]->market.variance);
        csv += ",";
        if (reports[i]->market.gamma3) csv += format_double(*reports[i]->market.gamma3);
      } else {
        csv += ",,,";
      }
      csv += "\n";
    }
  }
  write_file(opt.out, csv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"market-based price probability toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  AnalyzeOpts analyze;
  auto* cmd_analyze = app.add_subcommand(
      "analyze", "per-window market vs frequency price moments");
  cmd_analyze->add_option("--input", analyze.input, "tick CSV")->required();
  cmd_analyze->add_option("--delta", analyze.delta, "window width, seconds")
      ->required()
      ->check(CLI::PositiveNumber);
  cmd_analyze->add_option("--origin", analyze.origin, "center of window 0");
  cmd_analyze->add_option("--max-n", analyze.max_n, "highest moment order")
      ->default_val(4)
      ->check(CLI::Range(1, 12));
  cmd_analyze->add_option("--out", analyze.out, "report JSON")->required();
  cmd_analyze->add_flag("--no-timestamp", analyze.no_timestamp,
                        "omit generated_at for byte-stable output");
  cmd_analyze->callback([&] { run_analyze(analyze); });

  MeasureOpts measure;
  auto* cmd_measure = app.add_subcommand(
      "measure", "fit F_k for one window and invert it to a density grid");
  cmd_measure->add_option("--input", measure.input, "tick CSV")->required();
  cmd_measure->add_option("--delta", measure.delta, "window width, seconds")
      ->required()
      ->check(CLI::PositiveNumber);
  cmd_measure->add_option("--origin", measure.origin, "center of window 0");
  cmd_measure->add_option("--k", measure.k, "approximation order")
      ->default_val(2)
      ->check(CLI::Range(1, 3));
  cmd_measure->add_option("--window", measure.window, "window index");
  cmd_measure->add_option("--grid-points", measure.grid_points, "density grid size")
      ->default_val(4096)
      ->check(CLI::Range(2, 1 << 22));
  cmd_measure->add_option("--x-steps", measure.x_steps, "inversion quadrature steps")
      ->default_val(2048)
      ->check(CLI::Range(2, 1 << 22));
  cmd_measure->add_option("--out", measure.out,
                          "grid CSV for k>=2 (coefficients JSON lands next to it); "
                          "atom JSON for k=1")
      ->required();
  cmd_measure->add_flag("--no-timestamp", measure.no_timestamp,
                        "omit generated_at for byte-stable output");
  cmd_measure->callback([&] { run_measure(measure); });

  CapmOpts capm;
  auto* cmd_capm = app.add_subcommand(
      "capm", "solve the Taylor-expanded pricing relations for a scenario");
  cmd_capm->add_option("--scenario", capm.scenario, "scenario JSON")->required();
  cmd_capm->add_option("--mode", capm.mode, "eq4_5 | eq4_6 | eq4_23");
  cmd_capm->add_option("--out", capm.out, "solution JSON")->required();
  cmd_capm->add_flag("--no-timestamp", capm.no_timestamp,
                     "omit generated_at for byte-stable output");
  cmd_capm->callback([&] { run_capm(capm); });

  SynthOpts synth;
  auto* cmd_synth = app.add_subcommand(
      "synth", "generate a seeded synthetic tick stream");
  cmd_synth->add_option("--seed", synth.seed, "RNG seed")->required();
  cmd_synth->add_option("--n", synth.n, "tick count")->required();
  cmd_synth->add_option("--spacing", synth.spacing, "mean inter-trade time, seconds")
      ->default_val(1.0);
  cmd_synth->add_option("--price", synth.price,
                        "const:<level> | walk:<start>,<vol> | step:<base>,<amp>,<period>")
      ->default_val("const:100");
  cmd_synth->add_option("--volume", synth.volume,
                        "const1 | uniform:<l1,l2,...> | pareto:<shape>[,<scale>]")
      ->default_val("const1");
  cmd_synth->add_option("--coupling", synth.coupling, "price-volume rank coupling")
      ->default_val(0.0)
      ->check(CLI::Range(-1.0, 1.0));
  cmd_synth->add_option("--out", synth.out, "tick CSV")->required();
  cmd_synth->callback([&] { run_synth(synth); });

  SweepOpts sweep;
  auto* cmd_sweep = app.add_subcommand(
      "sweep-delta", "re-window the same ticks across several delta values");
  cmd_sweep->add_option("--input", sweep.input, "tick CSV")->required();
  cmd_sweep->add_option("--deltas", sweep.deltas, "comma list of window widths")
      ->required();
  cmd_sweep->add_option("--origin", sweep.origin, "center of window 0");
  cmd_sweep->add_option("--max-n", sweep.max_n, "highest moment order")
      ->default_val(4)
      ->check(CLI::Range(1, 12));
  cmd_sweep->add_option("--out", sweep.out, "sweep CSV")->required();
  cmd_sweep->callback([&] { run_sweep(sweep); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
