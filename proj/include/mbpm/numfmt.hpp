#pragma once

#include <string>

namespace mbpm {

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

/// Rounds to the given number of significant decimal digits.
double round_sig(double v, int digits);

}  // namespace mbpm
