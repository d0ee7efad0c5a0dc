#pragma once

#include "decfsc/model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace decfsc {

/**
 * Stochastic finite-state controller <Q, psi, eta> for one agent, optionally
 * conditioned on a correlation-device state c.
 *
 * action_row(c, q)            = psi(. | q, c)       length |A|
 * transition_row(c, q, a, o)  = eta(. | q, a, o, c) length |Q|
 */
class Fsc {
public:
    Fsc() = default;
    Fsc(std::size_t nodes, std::size_t actions, std::size_t observations,
        std::size_t device_states = 1, std::size_t initial_node = 0);

    std::size_t num_nodes() const { return nodes_; }
    std::size_t num_actions() const { return actions_; }
    std::size_t num_observations() const { return observations_; }
    std::size_t num_device_states() const { return device_states_; }
    std::size_t initial_node() const { return initial_; }
    void set_initial_node(std::size_t q);

    double action_prob(std::size_t c, std::size_t q, std::size_t a) const {
        return psi_[psi_offset(c, q) + a];
    }
    double transition_prob(std::size_t c, std::size_t q, std::size_t a, std::size_t o,
                           std::size_t q2) const {
        return eta_[eta_offset(c, q, a, o) + q2];
    }

    std::span<double> action_row(std::size_t c, std::size_t q) {
        return {psi_.data() + psi_offset(c, q), actions_};
    }
    std::span<const double> action_row(std::size_t c, std::size_t q) const {
        return {psi_.data() + psi_offset(c, q), actions_};
    }
    std::span<double> transition_row(std::size_t c, std::size_t q, std::size_t a, std::size_t o) {
        return {eta_.data() + eta_offset(c, q, a, o), nodes_};
    }
    std::span<const double> transition_row(std::size_t c, std::size_t q, std::size_t a,
                                           std::size_t o) const {
        return {eta_.data() + eta_offset(c, q, a, o), nodes_};
    }

    /// Flat parameter storage; rows are contiguous (see psi_row_length()).
    std::vector<double>& psi() { return psi_; }
    const std::vector<double>& psi() const { return psi_; }
    std::vector<double>& eta() { return eta_; }
    const std::vector<double>& eta() const { return eta_; }

    std::size_t psi_offset(std::size_t c, std::size_t q) const {
        return (c * nodes_ + q) * actions_;
    }
    std::size_t eta_offset(std::size_t c, std::size_t q, std::size_t a, std::size_t o) const {
        return (((c * nodes_ + q) * actions_ + a) * observations_ + o) * nodes_;
    }

    bool operator==(const Fsc&) const = default;

private:
    std::size_t nodes_ = 0;
    std::size_t actions_ = 0;
    std::size_t observations_ = 0;
    std::size_t device_states_ = 1;
    std::size_t initial_ = 0;
    std::vector<double> psi_;
    std::vector<double> eta_;
};

/// Shared-randomness automaton <C, P(c'|c)> observed by every agent.
class CorrelationDevice {
public:
    CorrelationDevice() = default;
    explicit CorrelationDevice(std::size_t states, std::size_t initial_state = 0);

    std::size_t num_states() const { return states_; }
    std::size_t initial_state() const { return initial_; }
    void set_initial_state(std::size_t c);

    double transition_prob(std::size_t c, std::size_t c2) const { return w_[c * states_ + c2]; }
    std::span<double> row(std::size_t c) { return {w_.data() + c * states_, states_}; }
    std::span<const double> row(std::size_t c) const { return {w_.data() + c * states_, states_}; }
    std::vector<double>& transitions() { return w_; }
    const std::vector<double>& transitions() const { return w_; }

    bool operator==(const CorrelationDevice&) const = default;

private:
    std::size_t states_ = 1;
    std::size_t initial_ = 0;
    std::vector<double> w_{1.0};
};

/// Per-agent controllers plus an optional correlation device.
struct JointPolicy {
    std::vector<Fsc> agents;
    std::optional<CorrelationDevice> device;

    std::size_t num_agents() const { return agents.size(); }
    /// |C|, which is 1 when no device is attached.
    std::size_t device_states() const { return device ? device->num_states() : 1; }
    std::size_t initial_device_state() const { return device ? device->initial_state() : 0; }
    double device_transition(std::size_t c, std::size_t c2) const {
        return device ? device->transition_prob(c, c2) : 1.0;
    }
    JointIndexer joint_nodes() const;
    std::size_t initial_joint_node() const;

    bool operator==(const JointPolicy&) const = default;
};

/**
 * A contiguous block of simplex rows inside a policy: every `row_length`
 * consecutive entries of `values` form one probability distribution.
 */
struct ParameterBlock {
    std::span<double> values;
    std::size_t row_length = 0;
};

struct ConstParameterBlock {
    std::span<const double> values;
    std::size_t row_length = 0;
};

/// Parameter blocks in canonical order: for each agent psi then eta, then the
/// device transition table when present.
std::vector<ParameterBlock> parameter_blocks(JointPolicy& policy);
std::vector<ConstParameterBlock> parameter_blocks(const JointPolicy& policy);
std::vector<std::size_t> parameter_block_sizes(const JointPolicy& policy);

/// Throws ModelError unless the policy's dimensions match the model.
void check_dimensions(const DecPomdp& model, const JointPolicy& policy);

/// Simplex violations (row index, residual); empty when every row is a
/// distribution within `tolerance`.
std::vector<Violation> validate(const JointPolicy& policy, double tolerance = kProbabilityTolerance);

/**
 * Random deterministic controllers: every psi row is a point mass on a
 * uniformly drawn action and every eta row a point mass on a uniformly drawn
 * node. Device rows, when device_size > 1, are uniform.
 */
JointPolicy random_deterministic(const DecPomdp& model, std::size_t nodes_per_agent,
                                 std::size_t device_size, std::uint64_t seed);

/// Uniform stochastic controllers; used by tests and as a neutral start.
JointPolicy uniform_policy(const DecPomdp& model, std::size_t nodes_per_agent,
                           std::size_t device_size = 1);

/// Fully random (Dirichlet(1)) stochastic controllers.
JointPolicy random_stochastic(const DecPomdp& model, std::size_t nodes_per_agent,
                              std::size_t device_size, std::uint64_t seed);

/// Drops a one-state device; throws ModelError when |C| > 1.
JointPolicy uncorrelate(const JointPolicy& policy);

/// Attaches a trivial one-state device; inverse of uncorrelate.
JointPolicy attach_trivial_device(const JointPolicy& policy);

}  // namespace decfsc
