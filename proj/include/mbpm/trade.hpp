#pragma once

#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mbpm {

/// One market trade; value is the traded currency amount, price * volume.
struct TradeTick {
  double t = 0.0;       // seconds
  double price = 0.0;   // currency per unit, > 0
  double volume = 0.0;  // units, > 0
  double value = 0.0;   // currency, = price * volume
};

/// Uniform time divisions of width delta centered at origin + k*delta.
/// Window k covers [center - delta/2, center + delta/2), half-open so
/// windows tile time and boundary ticks land in exactly one window.
struct WindowSpec {
  double origin = 0.0;
  double delta = 0.0;

  long long index_of(double t) const {
    return static_cast<long long>(std::floor((t - origin) / delta + 0.5));
  }
  double center_of(long long k) const {
    return origin + static_cast<double>(k) * delta;
  }
};

/// The ticks of one averaging interval; a view into the caller's series.
struct Window {
  long long index = 0;
  double center = 0.0;
  std::span<const TradeTick> ticks;

  std::size_t size() const { return ticks.size(); }
  bool empty() const { return ticks.empty(); }
};

enum class TickFault { non_finite_field, non_positive_field, value_mismatch };

std::string to_string(TickFault fault);

/// Lists every violated tick invariant; empty result means valid.
std::vector<TickFault> validate_tick(const TradeTick& tick);

/// Reads the tick CSV format (header `t,price,volume[,value]`). When the
/// value column is absent it is filled in as price*volume; when present it
/// is cross-checked to relative 1e-6. Throws ParseError with the row.
std::vector<TradeTick> parse_ticks(std::istream& in);

/// parse_ticks on a file; unreadable paths throw ParseError.
std::vector<TradeTick> load_ticks(const std::string& path);

void write_ticks(std::ostream& out, std::span<const TradeTick> ticks,
                 bool with_value = true);

/// Assigns each tick to its window and materializes empty windows between
/// occupied ones. Ticks must be nondecreasing in time; the returned windows
/// view the input span.
std::vector<Window> partition(std::span<const TradeTick> ticks,
                              const WindowSpec& spec);

}  // namespace mbpm
