#pragma once

#include <string>

namespace ssi {

// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

}  // namespace ssi
