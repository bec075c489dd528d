#include "mbpm/trade.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string_view>

#include "mbpm/errors.hpp"
#include "mbpm/numfmt.hpp"

namespace mbpm {

std::string to_string(TickFault fault) {
  switch (fault) {
    case TickFault::non_finite_field: return "NonFiniteField";
    case TickFault::non_positive_field: return "NonPositiveField";
    case TickFault::value_mismatch: return "ValueMismatch";
  }
  return "UnknownFault";
}

std::vector<TickFault> validate_tick(const TradeTick& tick) {
  std::vector<TickFault> faults;
  const bool finite = std::isfinite(tick.t) && std::isfinite(tick.price) &&
                      std::isfinite(tick.volume) && std::isfinite(tick.value);
  if (!finite) faults.push_back(TickFault::non_finite_field);
  if (!(tick.price > 0.0) || !(tick.volume > 0.0) || !(tick.value > 0.0))
    faults.push_back(TickFault::non_positive_field);
  if (finite) {
    const double expect = tick.price * tick.volume;
    if (std::abs(tick.value - expect) > 1e-9 * std::abs(expect))
      faults.push_back(TickFault::value_mismatch);
  }
  return faults;
}

namespace {

double parse_field(std::string_view field, std::size_t row) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last)
    throw ParseError("MalformedRow",
                     "non-numeric field '" + std::string(field) + "'", row);
  if (!std::isfinite(v))
    throw ParseError("MalformedRow",
                     "non-finite field '" + std::string(field) + "'", row);
  return v;
}

int split_fields(std::string_view line, std::array<std::string_view, 5>& out) {
  int n = 0;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    const std::string_view field = comma == std::string_view::npos
                                       ? line.substr(pos)
                                       : line.substr(pos, comma - pos);
    if (n < static_cast<int>(out.size())) out[static_cast<std::size_t>(n)] = field;
    ++n;
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return n;
}

}  // namespace

std::vector<TradeTick> parse_ticks(std::istream& in) {
  std::vector<TradeTick> ticks;
  std::string line;
  std::size_t row = 0;
  bool have_header = false;
  bool with_value = false;
  double prev_t = -std::numeric_limits<double>::infinity();

  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    if (!have_header) {
      if (line == "t,price,volume") {
        with_value = false;
      } else if (line == "t,price,volume,value") {
        with_value = true;
      } else {
        throw ParseError("MalformedRow", "unrecognized header '" + line + "'", row);
      }
      have_header = true;
      continue;
    }

    std::array<std::string_view, 5> fields;
    const int n_fields = split_fields(line, fields);
    const int expected = with_value ? 4 : 3;
    if (n_fields != expected)
      throw ParseError("MalformedRow",
                       "expected " + std::to_string(expected) + " fields, got " +
                           std::to_string(n_fields), row);

    TradeTick tick;
    tick.t = parse_field(fields[0], row);
    tick.price = parse_field(fields[1], row);
    tick.volume = parse_field(fields[2], row);
    if (!(tick.price > 0.0) || !(tick.volume > 0.0))
      throw ParseError("NonPositiveField", "price and volume must be > 0", row);

    const double expect = tick.price * tick.volume;
    if (with_value) {
      tick.value = parse_field(fields[3], row);
      if (std::abs(tick.value - expect) > 1e-6 * std::abs(expect))
        throw ParseError("ValueMismatch",
                         "value " + format_double(tick.value) +
                             " deviates from price*volume " + format_double(expect),
                         row);
    } else {
      tick.value = expect;
    }

    if (tick.t < prev_t)
      throw ParseError("NonMonotoneTime", "timestamp decreases", row);
    prev_t = tick.t;

    ticks.push_back(tick);
  }

  if (!have_header)
    throw ParseError("MalformedRow", "empty input, missing header", 1);
  return ticks;
}

std::vector<TradeTick> load_ticks(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("InputUnreadable", "cannot open '" + path + "'");
  return parse_ticks(in);
}

void write_ticks(std::ostream& out, std::span<const TradeTick> ticks,
                 bool with_value) {
  std::string buf;
  buf.reserve(1 << 16);
  buf += with_value ? "t,price,volume,value\n" : "t,price,volume\n";
  for (const TradeTick& tick : ticks) {
    buf += format_double(tick.t);
    buf += ',';
    buf += format_double(tick.price);
    buf += ',';
    buf += format_double(tick.volume);
    if (with_value) {
      buf += ',';
      buf += format_double(tick.value);
    }
    buf += '\n';
    if (buf.size() > (1 << 16) - 128) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

std::vector<Window> partition(std::span<const TradeTick> ticks,
                              const WindowSpec& spec) {
  if (!(spec.delta > 0.0) || !std::isfinite(spec.delta) || !std::isfinite(spec.origin))
    throw ConfigError("BadWindowSpec", "delta must be positive and finite");

  std::vector<Window> windows;
  if (ticks.empty()) return windows;

  const bool sorted = std::is_sorted(
      ticks.begin(), ticks.end(),
      [](const TradeTick& a, const TradeTick& b) { return a.t < b.t; });
  if (!sorted)
    throw ConfigError("NonMonotoneTicks", "tick times must be nondecreasing");

  const long long k_first = spec.index_of(ticks.front().t);
  const long long k_last = spec.index_of(ticks.back().t);
  windows.reserve(static_cast<std::size_t>(k_last - k_first + 1));

  std::size_t begin = 0;
  for (long long k = k_first; k <= k_last; ++k) {
    std::size_t end = begin;
    while (end < ticks.size() && spec.index_of(ticks[end].t) == k) ++end;
    windows.push_back(Window{k, spec.center_of(k), ticks.subspan(begin, end - begin)});
    begin = end;
  }
  return windows;
}

}  // namespace mbpm
