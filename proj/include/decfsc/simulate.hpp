#pragma once

#include "decfsc/controller.hpp"
#include "decfsc/model.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace decfsc {

struct RolloutConfig {
    std::size_t episodes = 10000;
    /// Horizon; 0 derives it from truncation_tolerance.
    std::size_t horizon = 0;
    /// Target for gamma^H * max|R| / (1 - gamma).
    double truncation_tolerance = 1e-4;
    std::uint64_t seed = 0;
    double confidence = 0.95;
    /// Episode workers; the estimate does not depend on it.
    std::size_t threads = 1;
};

void check_config(const RolloutConfig& config);

/// Smallest H >= 1 with gamma^H * max|R| / (1 - gamma) <= tolerance.
std::size_t truncation_horizon(const DecPomdp& model, double tolerance);
double truncation_bound(const DecPomdp& model, std::size_t horizon);

struct ValueEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
    /// Analytic bound on |E[truncated return] - V|.
    double truncation_bound = 0.0;
    /// z * standard_error for the configured confidence level.
    double half_width = 0.0;
    std::size_t horizon = 0;
    std::size_t episodes = 0;
};

/**
 * Monte Carlo estimate of the discounted return from b0, the initial joint
 * node and the initial device state. Each episode draws from independent
 * streams (environment, device, one per agent) seeded from (seed, episode);
 * each agent consumes exactly two uniforms per step.
 */
ValueEstimate estimate_value(const DecPomdp& model, const JointPolicy& policy, const RolloutConfig& config);

/// One agent's decision inputs at a step: nothing about the other agents.
std::size_t sample_action(const Fsc& fsc, std::size_t node, std::size_t device_state, double u);
std::size_t sample_next_node(const Fsc& fsc, std::size_t node, std::size_t action, std::size_t observation,
                             std::size_t device_state, double u);

/// Per-step record of one episode, for inspection and tests.
struct EpisodeTrace {
    std::vector<std::size_t> states;
    std::vector<std::size_t> device_states;
    /// Indexed [agent][t].
    std::vector<std::vector<std::size_t>> nodes, actions, observations;
    std::vector<std::vector<double>> agent_draws;
    double discounted_return = 0.0;
};

/// Optional hook replacing agent `agent`'s node before it acts at step t.
using NodeOverride = std::function<std::size_t(std::size_t agent, std::size_t t, std::size_t node)>;

EpisodeTrace run_episode(const DecPomdp& model, const JointPolicy& policy, std::uint64_t seed,
                         std::size_t episode, std::size_t horizon, const NodeOverride& override_node = {});

/// Pairwise (cascade) summation; result independent of how callers chunk work.
double pairwise_sum(std::span<const double> values);

}  // namespace decfsc
