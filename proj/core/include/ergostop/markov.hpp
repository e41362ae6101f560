#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ergostop {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using StateIndex = std::size_t;

inline constexpr double kRowSumTolerance = 1e-9;
inline constexpr double kPositiveEntry = 1e-15;

enum class KernelSource { Direct, Generator, Truncated };

std::string_view to_string(KernelSource source) noexcept;

/// Subset of the state space, stored as a membership mask.
class Region {
public:
    Region() = default;
    explicit Region(std::size_t n_states, bool filled = false) : mask_(n_states, filled) {}

    static Region from_indices(std::size_t n_states, std::span<const StateIndex> members);
    static Region all(std::size_t n_states) { return Region(n_states, true); }

    std::size_t universe() const noexcept { return mask_.size(); }
    bool contains(StateIndex x) const { return mask_.at(x); }
    void insert(StateIndex x) { mask_.at(x) = true; }
    void erase(StateIndex x) { mask_.at(x) = false; }

    std::size_t count() const noexcept;
    bool empty() const noexcept { return count() == 0; }
    std::vector<StateIndex> members() const;
    bool is_subset_of(const Region& other) const;
    Region complement() const;

    friend bool operator==(const Region&, const Region&) = default;

private:
    std::vector<bool> mask_;
};

/// Finite-state, time-homogeneous chain sampled on the grid {0, dt, 2dt, ...}.
///
/// Immutable after construction; the builders below are the only way to
/// obtain one and they validate every invariant.
class MarkovModel {
public:
    std::size_t size() const noexcept { return states_.size(); }
    const std::vector<std::string>& states() const noexcept { return states_; }
    const Matrix& kernel() const noexcept { return kernel_; }
    double dt() const noexcept { return dt_; }
    KernelSource source() const noexcept { return source_; }

    /// Generator matrix for generator-built models.
    const std::optional<Matrix>& generator() const noexcept { return generator_; }

    /// Per-state coordinates, one row per state.
    const std::optional<Matrix>& coords() const noexcept { return coords_; }
    bool has_coords() const noexcept { return coords_.has_value(); }

    std::optional<StateIndex> index_of(std::string_view name) const;

    /// Euclidean distance between the coordinates of two states.
    double distance(StateIndex a, StateIndex b) const;
    /// Euclidean norm of the coordinates of x.
    double norm(StateIndex x) const;

    void check_dimension(std::size_t n, std::string_view what) const;

private:
    friend MarkovModel build_dtmc(std::vector<std::string>, const Matrix&, double,
                                  std::optional<Matrix>);
    friend MarkovModel build_truncated(std::vector<std::string>, const Matrix&, double,
                                       std::optional<Matrix>);
    friend MarkovModel build_from_generator(std::vector<std::string>, const Matrix&, double,
                                            std::optional<Matrix>);

    MarkovModel() = default;

    std::vector<std::string> states_;
    Matrix kernel_;
    double dt_ = 1.0;
    KernelSource source_ = KernelSource::Direct;
    std::optional<Matrix> generator_;
    std::optional<Matrix> coords_;
};

MarkovModel build_dtmc(std::vector<std::string> states, const Matrix& kernel, double dt,
                       std::optional<Matrix> coords = std::nullopt);

/// Truncation of a countable chain: rows may lose mass across the artificial
/// boundary; each row is renormalized and the model is tagged Truncated.
MarkovModel build_truncated(std::vector<std::string> states, const Matrix& substochastic_rows,
                            double dt, std::optional<Matrix> coords = std::nullopt);

/// P_dt = exp(dt * Q) by uniformization.
MarkovModel build_from_generator(std::vector<std::string> states, const Matrix& generator,
                                 double dt, std::optional<Matrix> coords = std::nullopt);

struct UniformizationOptions {
    double tail_tolerance = 1e-14;
    std::size_t max_terms = 2000;
    // Above this value of rate*dt the series is evaluated at dt / 2^s and squared back.
    double max_direct_rate_time = 32.0;
};

Matrix uniformized_kernel(const Matrix& generator, double dt,
                          const UniformizationOptions& options = {});

/// Probability vector over the states of a model.
class Distribution {
public:
    explicit Distribution(Vector weights);

    const Vector& weights() const noexcept { return weights_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(weights_.size()); }
    double operator[](StateIndex x) const { return weights_(static_cast<Eigen::Index>(x)); }

    /// Integral of a per-state function.
    double integrate(const Vector& values) const;

private:
    Vector weights_;
};

Distribution stationary_distribution(const MarkovModel& model);

/// (P_dt v)(x) = sum_y P(x, y) v(y).
Vector apply_transition(const MarkovModel& model, const Vector& values);

/// P_dt^k.
Matrix kernel_power(const MarkovModel& model, std::size_t k);

// ---------------------------------------------------------------------------
// Graph structure of the positive-entry pattern.

/// Strongly connected components with no outgoing edges.
std::vector<std::vector<StateIndex>> recurrent_classes(const MarkovModel& model);

/// True when every state belongs to a single communicating class.
bool is_irreducible(const MarkovModel& model);

/// Period of the (unique) recurrent class; 1 means aperiodic.
std::size_t recurrent_period(const MarkovModel& model);

/// States that can reach `target` along paths whose intermediate states lie in `through`.
Region states_reaching(const MarkovModel& model, const Region& target, const Region& through);

/// States from which `target` is hit with probability one.
Region states_hitting_surely(const MarkovModel& model, const Region& target);

// ---------------------------------------------------------------------------
// Sample paths.

struct PathBatch {
    std::uint64_t seed = 0;
    StateIndex start = 0;
    std::size_t n_paths = 0;
    std::size_t horizon_steps = 0;
    std::vector<std::uint32_t> states;  // row-major, n_paths x (horizon_steps + 1)

    std::span<const std::uint32_t> path(std::size_t i) const {
        return {states.data() + i * (horizon_steps + 1), horizon_steps + 1};
    }
};

/// Simulate n_paths independent paths of length horizon_steps from start.
/// workers == 0 picks the hardware concurrency; the result does not depend on it.
PathBatch simulate_paths(const MarkovModel& model, StateIndex start, std::size_t horizon_steps,
                         std::size_t n_paths, std::uint64_t seed, std::size_t workers = 0);

}  // namespace ergostop
