#pragma once

#include <optional>

#include "ergostop/markov.hpp"

namespace ergostop {

/// Running reward f (per unit time) and terminal reward g.
struct RewardSpec {
    Vector f;
    Vector g;
    /// mu(f); absent when the chain has no unique stationary distribution.
    std::optional<double> mu_f;

    double drift() const;  // mu(f), throws NotIrreducible when absent
};

RewardSpec make_rewards(const MarkovModel& model, Vector f, Vector g);

/// (g v (-n)) ^ n.
Vector clamp_reward(const Vector& g, double n);

}  // namespace ergostop
