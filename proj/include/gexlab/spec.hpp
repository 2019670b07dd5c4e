#pragma once

#include <functional>
#include <string_view>
#include <vector>

namespace gexlab {

/// "1,2.5,-3" -> {1, 2.5, -3}; errors quote `spec`.
std::vector<double> parse_spec_numbers(std::string_view text, std::string_view spec);

/// Terminal payoff of the Brownian level: "bt" (B_T), "abs", "square",
/// "call:K", "put:K", "digital:K", "constant:C", "linear:A,B" (A + B x).
std::function<double(double)> parse_payoff(std::string_view spec);

}  // namespace gexlab
