#pragma once

#include <cstdint>
#include <random>

namespace robo_mv {

/// Seeded generator for one independent stream. Streams derived from the same
/// master seed with different ids are statistically independent, so results do
/// not depend on how work is split across threads.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    bool bernoulli(double p) { return uniform() < p; }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Paths are grouped in fixed-size blocks; block b always uses stream b.
inline constexpr std::size_t kPathBlock = 1024;

}  // namespace robo_mv
