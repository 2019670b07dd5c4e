#pragma once

// Reference values computed without the library's fields or recursions:
// closed forms, and brute force over the 2^N paths of a full binary tree.
// A path is an integer whose bits spell the moves, first move in the most
// significant position, bit 1 = up.

#include <cmath>
#include <cstdint>
#include <functional>

namespace oracle {

// -(1/gamma) ln E[exp(-gamma B_T)] = -gamma T / 2 (Gaussian mgf).
inline double entropic_utility_of_bt(double gamma, double horizon) { return -0.5 * gamma * horizon; }

// inf over |q| <= kappa of E_Q[B_T] = -kappa T.
inline double ignorance_utility_of_bt(double kappa, double horizon) { return -kappa * horizon; }

// Bit of move j (0-based) on a path of n moves.
inline bool up_move(std::uint64_t path, int n, int j) { return (path >> (n - 1 - j)) & 1U; }

// Node index after k moves: the first k bits of the path.
inline std::uint64_t prefix(std::uint64_t path, int n, int k) { return k == 0 ? 0 : path >> (n - k); }

inline double level(std::uint64_t path, int n, int k, double sqrt_dt) {
    int ups = 0;
    for (int j = 0; j < k; ++j) ups += up_move(path, n, j) ? 1 : 0;
    return (2 * ups - k) * sqrt_dt;
}

// Control at the step-k node the path passes through.
using PathControl = std::function<double(int k, std::uint64_t node)>;

// Q-probability of a path when the step-k up move has probability
// (1 + q sqrt(dt)) / 2.
inline double path_probability(std::uint64_t path, int n, double sqrt_dt, const PathControl& q) {
    double p = 1.0;
    for (int k = 0; k < n; ++k) {
        const double up = 0.5 * (1.0 + q(k, prefix(path, n, k)) * sqrt_dt);
        p *= up_move(path, n, k) ? up : 1.0 - up;
    }
    return p;
}

// E_Q[X] by summing over every path.
inline double expectation(int n, double sqrt_dt, const PathControl& q, const std::function<double(std::uint64_t)>& x) {
    double sum = 0.0;
    for (std::uint64_t path = 0; path < (std::uint64_t{1} << n); ++path)
        sum += path_probability(path, n, sqrt_dt, q) * x(path);
    return sum;
}

// c_{0,N}(Q) = E_Q[sum_k f(q_k) dt] path by path; +inf if any reachable node
// has f = +inf (reported through HUGE_VAL).
inline double penalty(int n, double dt, const PathControl& q, const std::function<double(double)>& f) {
    const double s = std::sqrt(dt);
    double sum = 0.0;
    for (std::uint64_t path = 0; path < (std::uint64_t{1} << n); ++path) {
        double cost = 0.0;
        for (int k = 0; k < n; ++k) cost += f(q(k, prefix(path, n, k))) * dt;
        if (std::isinf(cost)) return HUGE_VAL;
        sum += path_probability(path, n, s, q) * cost;
    }
    return sum;
}

// E_g(xi) for a driver g(z) by recursion over path prefixes: the value at a
// node is the average of its two successors plus g(z) dt.
inline double g_expectation(int n, double dt, const std::function<double(double)>& g,
                            const std::function<double(std::uint64_t)>& xi) {
    const double s = std::sqrt(dt);
    std::function<double(int, std::uint64_t)> value = [&](int k, std::uint64_t node) -> double {
        if (k == n) return xi(node);
        const double up = value(k + 1, 2 * node + 1);
        const double down = value(k + 1, 2 * node);
        return 0.5 * (up + down) + g((up - down) / (2.0 * s)) * dt;
    };
    return value(0, 0);
}

// Entropic g = gamma z^2 / 2 applied to xi = B_T^2 on the lattice: the value
// stays a_k x^2 + b_k with a_k = a_{k+1} + 2 gamma a_{k+1}^2 dt and
// b_k = b_{k+1} + a_{k+1} dt, starting from a_N = 1, b_N = 0.
inline double entropic_square_value(double gamma, double horizon, int steps) {
    const double dt = horizon / steps;
    double a = 1.0, b = 0.0;
    for (int k = steps - 1; k >= 0; --k) {
        b += a * dt;
        a += 2.0 * gamma * a * a * dt;
    }
    return b;  // the root sits at x = 0
}

}  // namespace oracle
