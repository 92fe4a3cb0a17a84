#include "ssi/core/format.hpp"

#include <charconv>

namespace ssi {

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace ssi
