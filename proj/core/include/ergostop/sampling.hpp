#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "ergostop/markov.hpp"

namespace ergostop {

/// Independent random stream for one path.
///
/// The engine is seeded from (master seed, path index) through std::seed_seq,
/// so path i draws the same numbers whichever worker simulates it.
class PathStream {
public:
    PathStream(std::uint64_t master_seed, std::uint64_t path_index);

    /// Uniform draw in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

/// Inverse-CDF sampler for the rows of a kernel.
class TransitionSampler {
public:
    explicit TransitionSampler(const MarkovModel& model);

    StateIndex next(StateIndex from, PathStream& stream) const;
    std::size_t size() const noexcept { return n_; }

private:
    std::size_t n_ = 0;
    std::vector<double> cumulative_;         // n x n, row-major
    std::vector<StateIndex> last_positive_;  // per row
};

/// Calls body(i) for i in [0, count) split into contiguous chunks over workers.
/// workers == 0 picks the hardware concurrency.
void parallel_for_index(std::size_t count, std::size_t workers,
                        const std::function<void(std::size_t)>& body);

}  // namespace ergostop
