#include "ergostop/markov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

#include "ergostop/errors.hpp"
#include "ergostop/sampling.hpp"

namespace ergostop {

namespace {

Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

void check_states(const std::vector<std::string>& states, const Matrix& m, std::string_view what) {
    if (states.empty()) fail(ErrorCode::EmptyStateSpace, "model has no states");
    const auto n = ix(states.size());
    if (m.rows() != n || m.cols() != n) {
        std::ostringstream os;
        os << what << " is " << m.rows() << "x" << m.cols() << " but there are " << n
           << " states";
        fail(ErrorCode::DimensionMismatch, os.str());
    }
}

void check_dt(double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorCode::InvalidArgument, "dt must be positive");
}

void check_coords(const std::optional<Matrix>& coords, std::size_t n) {
    if (coords && coords->rows() != ix(n))
        fail(ErrorCode::DimensionMismatch, "coords must have one row per state");
}

void check_kernel(const Matrix& kernel) {
    for (Eigen::Index i = 0; i < kernel.rows(); ++i) {
        double sum = 0.0;
        for (Eigen::Index j = 0; j < kernel.cols(); ++j) {
            const double p = kernel(i, j);
            if (!std::isfinite(p)) fail(ErrorCode::NegativeEntry, "non-finite kernel entry");
            if (p < 0.0) {
                std::ostringstream os;
                os << "kernel entry (" << i << ", " << j << ") = " << p;
                fail(ErrorCode::NegativeEntry, os.str());
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance) {
            std::ostringstream os;
            os.precision(17);
            os << "row " << i << " sums to " << sum;
            fail(ErrorCode::NonStochasticRow, os.str());
        }
    }
}

// Tarjan's algorithm on the positive-entry pattern; returns component id per state.
std::vector<std::size_t> strongly_connected(const Matrix& p, std::size_t& n_components) {
    const std::size_t n = static_cast<std::size_t>(p.rows());
    constexpr std::size_t unvisited = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(n, unvisited), low(n, 0), comp(n, unvisited);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::size_t counter = 0;
    n_components = 0;

    // Iterative DFS: frames of (node, next neighbour to scan).
    std::vector<std::pair<std::size_t, std::size_t>> frames;
    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != unvisited) continue;
        frames.emplace_back(root, 0);
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!frames.empty()) {
            auto& [v, next] = frames.back();
            bool descended = false;
            while (next < n) {
                const std::size_t w = next++;
                if (p(ix(v), ix(w)) <= kPositiveEntry) continue;
                if (index[w] == unvisited) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    frames.emplace_back(w, 0);
                    descended = true;
                    break;
                }
                if (on_stack[w]) low[v] = std::min(low[v], index[w]);
            }
            if (descended) continue;
            const std::size_t node = v;
            if (low[node] == index[node]) {
                while (true) {
                    const std::size_t w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = n_components;
                    if (w == node) break;
                }
                ++n_components;
            }
            frames.pop_back();
            if (!frames.empty()) {
                const std::size_t parent = frames.back().first;
                low[parent] = std::min(low[parent], low[node]);
            }
        }
    }
    return comp;
}

}  // namespace

std::string_view to_string(KernelSource source) noexcept {
    switch (source) {
    case KernelSource::Direct: return "direct";
    case KernelSource::Generator: return "generator";
    case KernelSource::Truncated: return "truncated";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Region

Region Region::from_indices(std::size_t n_states, std::span<const StateIndex> members) {
    Region r(n_states);
    for (StateIndex x : members) r.insert(x);
    return r;
}

std::size_t Region::count() const noexcept {
    return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), true));
}

std::vector<StateIndex> Region::members() const {
    std::vector<StateIndex> out;
    for (std::size_t i = 0; i < mask_.size(); ++i)
        if (mask_[i]) out.push_back(i);
    return out;
}

bool Region::is_subset_of(const Region& other) const {
    if (other.universe() != universe()) return false;
    for (std::size_t i = 0; i < mask_.size(); ++i)
        if (mask_[i] && !other.mask_[i]) return false;
    return true;
}

Region Region::complement() const {
    Region r(universe());
    for (std::size_t i = 0; i < mask_.size(); ++i) r.mask_[i] = !mask_[i];
    return r;
}

// ---------------------------------------------------------------------------
// MarkovModel

std::optional<StateIndex> MarkovModel::index_of(std::string_view name) const {
    const auto it = std::find(states_.begin(), states_.end(), name);
    if (it == states_.end()) return std::nullopt;
    return static_cast<StateIndex>(it - states_.begin());
}

double MarkovModel::distance(StateIndex a, StateIndex b) const {
    if (!coords_) fail(ErrorCode::NoCoords, "model has no coordinates");
    return (coords_->row(ix(a)) - coords_->row(ix(b))).norm();
}

double MarkovModel::norm(StateIndex x) const {
    if (!coords_) fail(ErrorCode::NoCoords, "model has no coordinates");
    return coords_->row(ix(x)).norm();
}

void MarkovModel::check_dimension(std::size_t n, std::string_view what) const {
    if (n != size()) {
        std::ostringstream os;
        os << what << " has " << n << " entries, model has " << size() << " states";
        fail(ErrorCode::DimensionMismatch, os.str());
    }
}

MarkovModel build_dtmc(std::vector<std::string> states, const Matrix& kernel, double dt,
                       std::optional<Matrix> coords) {
    check_states(states, kernel, "kernel");
    check_dt(dt);
    check_coords(coords, states.size());
    check_kernel(kernel);
    MarkovModel m;
    m.states_ = std::move(states);
    m.kernel_ = kernel;
    m.dt_ = dt;
    m.source_ = KernelSource::Direct;
    m.coords_ = std::move(coords);
    return m;
}

MarkovModel build_truncated(std::vector<std::string> states, const Matrix& substochastic_rows,
                            double dt, std::optional<Matrix> coords) {
    check_states(states, substochastic_rows, "kernel");
    check_dt(dt);
    check_coords(coords, states.size());
    Matrix kernel = substochastic_rows;
    for (Eigen::Index i = 0; i < kernel.rows(); ++i) {
        if ((kernel.row(i).array() < 0.0).any())
            fail(ErrorCode::NegativeEntry, "negative entry in truncated row");
        const double s = kernel.row(i).sum();
        if (!(s > 0.0) || s > 1.0 + kRowSumTolerance)
            fail(ErrorCode::NonStochasticRow, "truncated row mass must lie in (0, 1]");
        kernel.row(i) /= s;
    }
    check_kernel(kernel);
    MarkovModel m;
    m.states_ = std::move(states);
    m.kernel_ = std::move(kernel);
    m.dt_ = dt;
    m.source_ = KernelSource::Truncated;
    m.coords_ = std::move(coords);
    return m;
}

Matrix uniformized_kernel(const Matrix& generator, double dt, const UniformizationOptions& options) {
    const Eigen::Index n = generator.rows();
    if (generator.cols() != n) fail(ErrorCode::DimensionMismatch, "generator must be square");
    check_dt(dt);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!std::isfinite(generator(i, j)))
                fail(ErrorCode::BadGenerator, "non-finite generator entry");
            if (i != j && generator(i, j) < 0.0) {
                std::ostringstream os;
                os << "off-diagonal generator entry (" << i << ", " << j << ") is negative";
                fail(ErrorCode::BadGenerator, os.str());
            }
        }
        const double scale = std::max(1.0, generator.row(i).cwiseAbs().maxCoeff());
        if (std::abs(generator.row(i).sum()) > 1e-12 * scale) {
            std::ostringstream os;
            os << "generator row " << i << " does not sum to zero";
            fail(ErrorCode::BadGenerator, os.str());
        }
    }

    double rate = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) rate = std::max(rate, -generator(i, i));
    if (rate == 0.0) return Matrix::Identity(n, n);

    // Evaluate at dt / 2^s so that rate * dt stays moderate, then square back.
    int squarings = 0;
    double step = dt;
    while (rate * step > options.max_direct_rate_time) {
        step *= 0.5;
        ++squarings;
    }

    const Matrix jump = Matrix::Identity(n, n) + generator / rate;
    const double lambda = rate * step;
    double weight = std::exp(-lambda);
    double cumulative = weight;
    Matrix power = Matrix::Identity(n, n);
    Matrix result = weight * power;
    std::size_t k = 0;
    while (1.0 - cumulative >= options.tail_tolerance) {
        ++k;
        if (k > options.max_terms) {
            std::ostringstream os;
            os << "uniformization series exceeded " << options.max_terms << " terms";
            fail(ErrorCode::SeriesNotConverged, os.str());
        }
        power = power * jump;
        weight *= lambda / static_cast<double>(k);
        cumulative += weight;
        result += weight * power;
        // Once terms are negligible the cumulative sum cannot move further.
        if (weight < options.tail_tolerance * 1e-3 && static_cast<double>(k) > lambda) break;
    }
    for (int s = 0; s < squarings; ++s) result = result * result;

    // Put the truncated Poisson mass back so rows stay stochastic.
    for (Eigen::Index i = 0; i < n; ++i) {
        result.row(i) = result.row(i).cwiseMax(0.0);
        result.row(i) /= result.row(i).sum();
    }
    return result;
}

MarkovModel build_from_generator(std::vector<std::string> states, const Matrix& generator,
                                 double dt, std::optional<Matrix> coords) {
    check_states(states, generator, "generator");
    check_dt(dt);
    check_coords(coords, states.size());
    Matrix kernel = uniformized_kernel(generator, dt);
    check_kernel(kernel);
    MarkovModel m;
    m.states_ = std::move(states);
    m.kernel_ = std::move(kernel);
    m.dt_ = dt;
    m.source_ = KernelSource::Generator;
    m.generator_ = generator;
    m.coords_ = std::move(coords);
    return m;
}

// ---------------------------------------------------------------------------
// Distribution

Distribution::Distribution(Vector weights) : weights_(std::move(weights)) {
    if (weights_.size() == 0) fail(ErrorCode::EmptyStateSpace, "empty distribution");
    for (Eigen::Index i = 0; i < weights_.size(); ++i) {
        if (!std::isfinite(weights_(i)) || weights_(i) < 0.0)
            fail(ErrorCode::NegativeEntry, "distribution weight is negative or non-finite");
    }
    if (std::abs(weights_.sum() - 1.0) > 1e-12)
        fail(ErrorCode::NonStochasticRow, "distribution weights do not sum to one");
}

double Distribution::integrate(const Vector& values) const {
    if (values.size() != weights_.size())
        fail(ErrorCode::DimensionMismatch, "integrand size differs from distribution size");
    return weights_.dot(values);
}

Distribution stationary_distribution(const MarkovModel& model) {
    const auto classes = recurrent_classes(model);
    if (classes.size() != 1) {
        std::ostringstream os;
        os << "found " << classes.size() << " recurrent classes";
        fail(ErrorCode::NotIrreducible, os.str());
    }
    const Eigen::Index n = ix(model.size());
    Matrix a = model.kernel().transpose() - Matrix::Identity(n, n);
    a.row(n - 1).setOnes();
    Vector b = Vector::Zero(n);
    b(n - 1) = 1.0;
    Vector mu = a.fullPivLu().solve(b);

    // One refinement step against the original balance equations.
    const Vector r = b - a * mu;
    mu += a.fullPivLu().solve(r);
    for (Eigen::Index i = 0; i < n; ++i)
        if (mu(i) < 0.0) mu(i) = 0.0;
    mu /= mu.sum();
    return Distribution(std::move(mu));
}

Vector apply_transition(const MarkovModel& model, const Vector& values) {
    model.check_dimension(static_cast<std::size_t>(values.size()), "values");
    return model.kernel() * values;
}

Matrix kernel_power(const MarkovModel& model, std::size_t k) {
    const Eigen::Index n = ix(model.size());
    Matrix result = Matrix::Identity(n, n);
    Matrix base = model.kernel();
    while (k > 0) {
        if (k & 1u) result = result * base;
        k >>= 1u;
        if (k > 0) base = base * base;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Graph structure

std::vector<std::vector<StateIndex>> recurrent_classes(const MarkovModel& model) {
    const Matrix& p = model.kernel();
    const std::size_t n = model.size();
    std::size_t n_comp = 0;
    const auto comp = strongly_connected(p, n_comp);
    std::vector<bool> closed(n_comp, true);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (p(ix(i), ix(j)) > kPositiveEntry && comp[i] != comp[j]) closed[comp[i]] = false;

    std::vector<std::vector<StateIndex>> classes;
    std::vector<std::size_t> slot(n_comp, static_cast<std::size_t>(-1));
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = comp[i];
        if (!closed[c]) continue;
        if (slot[c] == static_cast<std::size_t>(-1)) {
            slot[c] = classes.size();
            classes.emplace_back();
        }
        classes[slot[c]].push_back(i);
    }
    return classes;
}

bool is_irreducible(const MarkovModel& model) {
    const auto classes = recurrent_classes(model);
    return classes.size() == 1 && classes.front().size() == model.size();
}

std::size_t recurrent_period(const MarkovModel& model) {
    const auto classes = recurrent_classes(model);
    if (classes.size() != 1) fail(ErrorCode::NotIrreducible, "period needs a single recurrent class");
    const auto& cls = classes.front();
    const Matrix& p = model.kernel();
    const std::size_t n = model.size();
    std::vector<bool> member(n, false);
    for (StateIndex x : cls) member[x] = true;

    constexpr std::size_t unset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> level(n, unset);
    std::queue<StateIndex> queue;
    level[cls.front()] = 0;
    queue.push(cls.front());
    std::size_t period = 0;
    while (!queue.empty()) {
        const StateIndex u = queue.front();
        queue.pop();
        for (StateIndex v = 0; v < n; ++v) {
            if (!member[v] || p(ix(u), ix(v)) <= kPositiveEntry) continue;
            if (level[v] == unset) {
                level[v] = level[u] + 1;
                queue.push(v);
            } else {
                const auto diff = static_cast<long long>(level[u]) + 1 - static_cast<long long>(level[v]);
                period = std::gcd(period, static_cast<std::size_t>(std::llabs(diff)));
            }
        }
    }
    return period == 0 ? 1 : period;
}

Region states_reaching(const MarkovModel& model, const Region& target, const Region& through) {
    const Matrix& p = model.kernel();
    const std::size_t n = model.size();
    Region reached = target;
    std::queue<StateIndex> queue;
    for (StateIndex x : target.members()) queue.push(x);
    while (!queue.empty()) {
        const StateIndex v = queue.front();
        queue.pop();
        for (StateIndex u = 0; u < n; ++u) {
            if (reached.contains(u) || !through.contains(u)) continue;
            if (p(ix(u), ix(v)) > kPositiveEntry) {
                reached.insert(u);
                queue.push(u);
            }
        }
    }
    return reached;
}

Region states_hitting_surely(const MarkovModel& model, const Region& target) {
    const std::size_t n = model.size();
    const Matrix& p = model.kernel();
    const Region outside = target.complement();
    const Region reaching = states_reaching(model, target, outside);

    // A state outside the target that can step into a state never reaching the
    // target loses mass for good; propagate that backwards.
    Region lost(n);
    for (StateIndex x = 0; x < n; ++x)
        if (!reaching.contains(x)) lost.insert(x);
    bool changed = true;
    while (changed) {
        changed = false;
        for (StateIndex x = 0; x < n; ++x) {
            if (target.contains(x) || lost.contains(x)) continue;
            for (StateIndex y = 0; y < n; ++y) {
                if (lost.contains(y) && p(ix(x), ix(y)) > kPositiveEntry) {
                    lost.insert(x);
                    changed = true;
                    break;
                }
            }
        }
    }
    return lost.complement();
}

// ---------------------------------------------------------------------------
// Sample paths

PathBatch simulate_paths(const MarkovModel& model, StateIndex start, std::size_t horizon_steps,
                         std::size_t n_paths, std::uint64_t seed, std::size_t workers) {
    if (start >= model.size()) fail(ErrorCode::InvalidArgument, "start state out of range");
    if (n_paths == 0) fail(ErrorCode::InvalidArgument, "n_paths must be at least 1");

    PathBatch batch;
    batch.seed = seed;
    batch.start = start;
    batch.n_paths = n_paths;
    batch.horizon_steps = horizon_steps;
    batch.states.resize(n_paths * (horizon_steps + 1));

    const TransitionSampler sampler(model);
    parallel_for_index(n_paths, workers, [&](std::size_t i) {
        PathStream stream(seed, i);
        std::uint32_t* row = batch.states.data() + i * (horizon_steps + 1);
        StateIndex x = start;
        row[0] = static_cast<std::uint32_t>(x);
        for (std::size_t k = 1; k <= horizon_steps; ++k) {
            x = sampler.next(x, stream);
            row[k] = static_cast<std::uint32_t>(x);
        }
    });
    return batch;
}

}  // namespace ergostop
