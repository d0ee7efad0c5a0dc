#pragma once

#include "decfsc/controller.hpp"
#include "decfsc/evaluation.hpp"
#include "decfsc/lp.hpp"
#include "decfsc/model.hpp"
#include "decfsc/optimizer.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace decfsc {

/**
 * Result of one node-improvement LP. `psi` holds one action row per device
 * state (|C| x |A_i|); `eta` holds the matching transition rows
 * (|C| x |A_i| x |O_i| x |Q_i|). `margin` is the LP optimum, clamped at 0.
 */
struct NodeImprovement {
    std::size_t agent = 0;
    std::size_t node = 0;
    double margin = 0.0;
    std::vector<double> psi;
    std::vector<double> eta;
};

/**
 * Maximizes epsilon such that replacing node q's rows of agent i gives a
 * one-step lookahead value (other agents' rows and V fixed) at least
 * V(q, q_-i, s, c) + epsilon for every state, other-agent joint node and
 * device state. Variables are x(a | c) and x(a, o, q' | c), with
 * sum_q' x(a, o, q' | c) = x(a | c); the rows are recovered by conditioning.
 */
NodeImprovement improve_node(const Evaluator& evaluator, const JointPolicy& policy, const ValueTable& values,
                             std::size_t agent, std::size_t node);
NodeImprovement improve_node(const DecPomdp& model, const JointPolicy& policy, const ValueTable& values,
                             std::size_t agent, std::size_t node);

/// Writes the improvement's rows into the policy.
void apply_improvement(JointPolicy& policy, const NodeImprovement& improvement);

struct BpiConfig {
    std::size_t max_sweeps = 500;
    /// Improvements with margin at or below this are rejected.
    double epsilon_threshold = 1e-9;
    std::size_t restarts = 10;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    bool record_trace = false;
    EvaluationOptions evaluation{};
};

void check_config(const BpiConfig& config);

/// Round-robin improvement sweeps (agents, then nodes, in index order) from a
/// given policy until a full sweep accepts nothing or max_sweeps is reached.
std::pair<JointPolicy, RestartStats> improve_policy(const DecPomdp& model, JointPolicy start,
                                                    const BpiConfig& config);

/// Best of config.restarts runs from random deterministic starts seeded
/// config.seed + k (the same starts solve_nlp uses).
std::pair<JointPolicy, SolveReport> solve_bpi(const DecPomdp& model, std::size_t nodes_per_agent,
                                              std::size_t device_size, const BpiConfig& config);

}  // namespace decfsc
