#include "ergostop/sampling.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>

namespace ergostop {

PathStream::PathStream(std::uint64_t master_seed, std::uint64_t path_index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                      static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(path_index),
                      static_cast<std::uint32_t>(path_index >> 32),
                      0x9e3779b9u};
    engine_.seed(seq);
}

TransitionSampler::TransitionSampler(const MarkovModel& model)
    : n_(model.size()), cumulative_(n_ * n_), last_positive_(n_, 0) {
    const Matrix& p = model.kernel();
    for (std::size_t i = 0; i < n_; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
            const double pij = p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            acc += pij;
            cumulative_[i * n_ + j] = acc;
            if (pij > 0.0) last_positive_[i] = j;
        }
    }
}

StateIndex TransitionSampler::next(StateIndex from, PathStream& stream) const {
    const double u = stream.uniform();
    const auto row = cumulative_.begin() + static_cast<std::ptrdiff_t>(from * n_);
    const auto it = std::upper_bound(row, row + static_cast<std::ptrdiff_t>(n_), u);
    const auto j = static_cast<StateIndex>(it - row);
    // Rounding can leave the last cumulative entry just below u.
    return std::min(j, last_positive_[from]);
}

void parallel_for_index(std::size_t count, std::size_t workers,
                        const std::function<void(std::size_t)>& body) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, std::max<std::size_t>(count, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }

    std::exception_ptr error;
    std::mutex error_mutex;
    const std::size_t chunk = (count + workers - 1) / workers;
    {
        std::vector<std::jthread> threads;
        threads.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(count, begin + chunk);
            if (begin >= end) break;
            threads.emplace_back([&, begin, end] {
                try {
                    for (std::size_t i = begin; i < end; ++i) body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            });
        }
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace ergostop
