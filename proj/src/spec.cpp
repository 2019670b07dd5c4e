#include "gexlab/spec.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

#include "gexlab/error.hpp"

namespace gexlab {

std::vector<double> parse_spec_numbers(std::string_view text, std::string_view spec) {
    std::vector<double> out;
    while (!text.empty()) {
        const auto comma = text.find(',');
        const std::string_view item = text.substr(0, comma);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc() || ptr != item.data() + item.size() || item.empty() || !std::isfinite(v))
            fail(ErrorCode::InvalidArgument, "spec '" + std::string(spec) + "': bad number '" + std::string(item) + "'");
        out.push_back(v);
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
        if (text.empty()) fail(ErrorCode::InvalidArgument, "spec '" + std::string(spec) + "': trailing comma");
    }
    return out;
}

std::function<double(double)> parse_payoff(std::string_view spec) {
    const auto colon = spec.find(':');
    const std::string_view kind = spec.substr(0, colon);
    const std::vector<double> a =
        colon == std::string_view::npos ? std::vector<double>{} : parse_spec_numbers(spec.substr(colon + 1), spec);
    auto arity = [&](std::size_t n) {
        if (a.size() != n)
            fail(ErrorCode::InvalidArgument, "payoff spec '" + std::string(spec) + "': expected " +
                                                 std::to_string(n) + " parameter(s)");
    };
    if (kind == "bt") { arity(0); return [](double x) { return x; }; }
    if (kind == "abs") { arity(0); return [](double x) { return std::abs(x); }; }
    if (kind == "square") { arity(0); return [](double x) { return x * x; }; }
    if (kind == "call") { arity(1); return [k = a[0]](double x) { return std::max(x - k, 0.0); }; }
    if (kind == "put") { arity(1); return [k = a[0]](double x) { return std::max(k - x, 0.0); }; }
    if (kind == "digital") { arity(1); return [k = a[0]](double x) { return x >= k ? 1.0 : 0.0; }; }
    if (kind == "constant") { arity(1); return [c = a[0]](double) { return c; }; }
    if (kind == "linear") { arity(2); return [c = a[0], b = a[1]](double x) { return c + b * x; }; }
    fail(ErrorCode::InvalidArgument, "unknown payoff spec '" + std::string(spec) + "'");
}

}  // namespace gexlab
