#include "gexlab/extended.hpp"

#include <charconv>

namespace gexlab {

std::string format_real(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (std::isnan(value)) return "nan";
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value + 0.0);
    return std::string(buf, end);
}

}  // namespace gexlab
