#include "fjs/fuzzy.hpp"

#include <charconv>

namespace fjs {

std::string format_real(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

std::string format_tfn(const Tfn& t) {
  return "(" + format_real(t.a1) + "," + format_real(t.a2) + "," + format_real(t.a3) + ")";
}

}  // namespace fjs
