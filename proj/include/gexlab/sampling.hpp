#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

#include "gexlab/lattice.hpp"

namespace gexlab {

/// Independent per-trial seed derived from a master seed (splitmix64), so
/// results do not depend on how trials are scheduled across threads.
std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial);

/// Bounded random terminal claim whose one-step slopes stay within `slope`:
/// on a full binary tree xi = c + sum_k a_k dB_k with |a_k| <= slope, on a
/// recombining tree a random walk in the terminal level.
AdaptedField random_claim(std::mt19937_64& rng, const GridPtr& grid, double slope);

/// Independent uniform draws in [-bound, bound] at every node.
PredictableControl random_control(std::mt19937_64& rng, const GridPtr& grid, double bound);

/// Child-closed closure of a random node set with per-node probability
/// `density`, optionally merged with the stop set of `later` so that the
/// result precedes it.
StoppingTime random_stopping_time(std::mt19937_64& rng, const GridPtr& grid, double density,
                                  const StoppingTime* later = nullptr);

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Callers write into
/// per-index slots and reduce in index order afterwards.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    for (auto& t : pool) t.join();
}

}  // namespace gexlab
