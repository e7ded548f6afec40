#pragma once

#include <string>

namespace macs {

// Shortest text that parses back to exactly the same double ("inf"/"-inf"/"nan"
// for non-finite values).
std::string format_double(double value);

}  // namespace macs
