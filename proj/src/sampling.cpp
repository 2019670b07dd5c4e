#include "gexlab/sampling.hpp"

namespace gexlab {

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (trial + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

AdaptedField random_claim(std::mt19937_64& rng, const GridPtr& grid, double slope) {
    const int n = grid->steps();
    std::uniform_real_distribution<double> offset(-1.0, 1.0);
    AdaptedField claim(grid, n, n);
    auto leaves = claim.at(n);
    if (grid->full_binary()) {
        std::uniform_real_distribution<double> coef(-slope, slope);
        std::vector<double> level{offset(rng)};
        for (int k = 0; k < n; ++k) {
            std::vector<double> next(grid->node_count(k + 1));
            for (std::size_t i = 0; i < level.size(); ++i) {
                const double step = coef(rng) * grid->sqrt_dt();
                next[grid->up_child(k, i)] = level[i] + step;
                next[grid->down_child(k, i)] = level[i] - step;
            }
            level = std::move(next);
        }
        std::copy(level.begin(), level.end(), leaves.begin());
        return claim;
    }
    std::uniform_real_distribution<double> jump(-2.0 * slope * grid->sqrt_dt(), 2.0 * slope * grid->sqrt_dt());
    leaves[0] = offset(rng);
    for (std::size_t j = 1; j < leaves.size(); ++j) leaves[j] = leaves[j - 1] + jump(rng);
    return claim;
}

PredictableControl random_control(std::mt19937_64& rng, const GridPtr& grid, double bound) {
    std::uniform_real_distribution<double> draw(-bound, bound);
    PredictableControl q(grid, 0.0);
    for (int k = 0; k < grid->steps(); ++k)
        for (double& v : q.at(k)) v = draw(rng);
    return q;
}

StoppingTime random_stopping_time(std::mt19937_64& rng, const GridPtr& grid, double density,
                                  const StoppingTime* later) {
    std::bernoulli_distribution pick(std::clamp(density, 0.0, 1.0));
    AdaptedEvent seed(grid, 0, grid->steps());
    for (int k = 0; k <= grid->steps(); ++k) {
        auto layer = seed.at(k);
        for (std::size_t i = 0; i < layer.size(); ++i) {
            layer[i] = pick(rng) ? 1 : 0;
            if (later && later->stopped(k, i)) layer[i] = 1;
        }
    }
    return StoppingTime::closure_of(seed);
}

}  // namespace gexlab
