#pragma once

#include <string>
#include <string_view>

namespace wolffkit {

// Shortest round-trip decimal, independent of the C locale.
std::string format_double(double v);
// Locale-independent parse of a full decimal string; throws InvalidArgument.
double parse_double(std::string_view s);

}  // namespace wolffkit
