#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mbpm/errors.hpp"
#include "mbpm/numfmt.hpp"
#include "mbpm/trade.hpp"
#include "oracles.hpp"

using namespace mbpm;

namespace {

std::vector<TradeTick> parse_str(const std::string& text) {
  std::istringstream in(text);
  return parse_ticks(in);
}

}  // namespace

TEST_CASE("parse fills in the value column") {
  const auto ticks = parse_str("t,price,volume\n0,2,3\n1,4,1\n");
  REQUIRE(ticks.size() == 2);
  CHECK(ticks[0].value == 6.0);
  CHECK(ticks[1].value == 4.0);
}

TEST_CASE("parse cross-checks an explicit value column") {
  const auto ticks = parse_str("t,price,volume,value\n0,2,3,6\n");
  REQUIRE(ticks.size() == 1);
  CHECK(ticks[0].value == 6.0);

  CHECK_THROWS_WITH_AS(parse_str("t,price,volume,value\n0,2,3,6.1\n"),
                       doctest::Contains("ValueMismatch"), ParseError);
}

TEST_CASE("parse rejects non-positive fields with the row number") {
  try {
    parse_str("t,price,volume\n0,-1,3\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.name() == "NonPositiveField");
    CHECK(e.row() == 2);
  }
}

TEST_CASE("parse error taxonomy") {
  CHECK_THROWS_AS(parse_str(""), ParseError);
  CHECK_THROWS_WITH_AS(parse_str("time,px,qty\n"), doctest::Contains("MalformedRow"),
                       ParseError);
  CHECK_THROWS_WITH_AS(parse_str("t,price,volume\n0,2\n"),
                       doctest::Contains("MalformedRow"), ParseError);
  CHECK_THROWS_WITH_AS(parse_str("t,price,volume\n0,abc,3\n"),
                       doctest::Contains("MalformedRow"), ParseError);
  CHECK_THROWS_WITH_AS(parse_str("t,price,volume\n0,inf,3\n"),
                       doctest::Contains("MalformedRow"), ParseError);
  CHECK_THROWS_WITH_AS(parse_str("t,price,volume\n5,2,3\n4,2,3\n"),
                       doctest::Contains("NonMonotoneTime"), ParseError);
  CHECK_THROWS_AS(load_ticks("/nonexistent/ticks.csv"), ParseError);
}

TEST_CASE("parse accepts CRLF, blank lines and equal timestamps") {
  const auto ticks = parse_str("t,price,volume\r\n1,2,3\r\n1,5,1\r\n\r\n");
  REQUIRE(ticks.size() == 2);
  CHECK(ticks[0].price == 2.0);
  CHECK(ticks[1].price == 5.0);
}

TEST_CASE("validate_tick verdicts") {
  CHECK(validate_tick({0, 2, 3, 6}).empty());

  const auto mismatch = validate_tick({0, 2, 3, 7});
  REQUIRE(mismatch.size() == 1);
  CHECK(mismatch[0] == TickFault::value_mismatch);

  const auto nonpos = validate_tick({0, 2, 0, 0});
  REQUIRE(nonpos.size() == 1);
  CHECK(nonpos[0] == TickFault::non_positive_field);

  const auto bad = validate_tick({0, -1, 3, std::nan("")});
  CHECK(std::count(bad.begin(), bad.end(), TickFault::non_finite_field) == 1);
  CHECK(std::count(bad.begin(), bad.end(), TickFault::non_positive_field) == 1);
}

TEST_CASE("partition honors the half-open boundary") {
  const auto series = oracles::make_series({{1, 1}, {1, 1}, {1, 1}});
  std::vector<TradeTick> ticks = series.ticks;
  ticks[0].t = 10.0;
  ticks[1].t = 59.9;
  ticks[2].t = 60.0;

  const auto windows = partition(ticks, WindowSpec{30.0, 60.0});
  REQUIRE(windows.size() == 2);
  CHECK(windows[0].index == 0);
  CHECK(windows[0].size() == 2);
  CHECK(windows[1].index == 1);
  CHECK(windows[1].size() == 1);
  CHECK(windows[1].ticks[0].t == 60.0);
}

TEST_CASE("partition edge cases") {
  CHECK(partition({}, WindowSpec{0.0, 1.0}).empty());

  const auto one = oracles::make_series({{5, 1}});
  const auto windows = partition(one.ticks, WindowSpec{0.0, 1.0});
  REQUIRE(windows.size() == 1);
  CHECK(windows[0].index == 0);
  CHECK(windows[0].size() == 1);

  CHECK_THROWS_AS(partition(one.ticks, WindowSpec{0.0, 0.0}), ConfigError);
}

TEST_CASE("partition materializes interior empty windows") {
  auto series = oracles::make_series({{1, 1}, {2, 1}});
  series.ticks[0].t = 0.0;
  series.ticks[1].t = 10.0;
  const auto windows = partition(series.ticks, WindowSpec{0.0, 1.0});
  REQUIRE(windows.size() == 11);
  CHECK(windows[0].size() == 1);
  for (std::size_t k = 1; k < 10; ++k) {
    CHECK(windows[k].empty());
    CHECK(windows[k].index == static_cast<long long>(k));
  }
  CHECK(windows[10].size() == 1);
}

TEST_CASE("partition is a disjoint cover on random series") {
  oracles::TestRng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TradeTick> ticks;
    double t = rng.uniform(-100.0, 100.0);
    const int count = static_cast<int>(rng.integer(1, 400));
    for (int i = 0; i < count; ++i) {
      t += rng.uniform(0.0, 10.0);
      const double price = rng.uniform(0.5, 50.0);
      const double volume = rng.uniform(0.1, 9.0);
      ticks.push_back({t, price, volume, price * volume});
    }
    const WindowSpec spec{rng.uniform(-20.0, 20.0), rng.uniform(0.5, 30.0)};
    const auto windows = partition(ticks, spec);

    std::size_t total = 0;
    const TradeTick* cursor = ticks.data();
    for (const Window& w : windows) {
      total += w.size();
      if (!w.empty()) {
        CHECK(w.ticks.data() == cursor);  // contiguous, in order, no overlap
        cursor += w.size();
      }
      for (const TradeTick& tick : w.ticks) {
        CHECK(tick.t >= w.center - spec.delta / 2);
        CHECK(tick.t < w.center + spec.delta / 2);
      }
    }
    CHECK(total == ticks.size());
    for (std::size_t i = 1; i < windows.size(); ++i)
      CHECK(windows[i].index == windows[i - 1].index + 1);
  }
}

TEST_CASE("shifting the origin by delta shifts indices by -1") {
  oracles::TestRng rng(7);
  std::vector<TradeTick> ticks;
  double t = 0.0;
  for (int i = 0; i < 200; ++i) {
    t += rng.uniform(0.0, 3.0);
    ticks.push_back({t, 1.0 + i, 1.0, 1.0 + i});
  }
  const double delta = 7.5;
  const auto base = partition(ticks, WindowSpec{4.0, delta});
  const auto shifted = partition(ticks, WindowSpec{4.0 + delta, delta});
  REQUIRE(base.size() == shifted.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(shifted[i].index == base[i].index - 1);
    CHECK(shifted[i].size() == base[i].size());
    if (!base[i].empty())
      CHECK(shifted[i].ticks.data() == base[i].ticks.data());
  }
}

TEST_CASE("parse -> write -> parse is the identity") {
  oracles::TestRng rng(123);
  std::string csv = "t,price,volume\n";
  double t = 0.0;
  for (int i = 0; i < 100; ++i) {
    t += rng.uniform(0.0, 2.0);
    csv += mbpm::format_double(t) + "," +
           mbpm::format_double(rng.uniform(0.01, 1000.0)) + "," +
           mbpm::format_double(rng.uniform(0.001, 50.0)) + "\n";
  }
  const auto first = parse_str(csv);

  std::ostringstream out;
  write_ticks(out, first, true);
  const auto second = parse_str(out.str());

  REQUIRE(second.size() == first.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(second[i].t == first[i].t);
    CHECK(second[i].price == first[i].price);
    CHECK(second[i].volume == first[i].volume);
    CHECK(second[i].value == first[i].value);
  }
}
