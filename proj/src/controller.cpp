#include "decfsc/controller.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace decfsc {

Fsc::Fsc(std::size_t nodes, std::size_t actions, std::size_t observations,
         std::size_t device_states, std::size_t initial_node)
    : nodes_(nodes),
      actions_(actions),
      observations_(observations),
      device_states_(device_states),
      initial_(initial_node) {
    if (nodes == 0) throw ModelError("Fsc: a controller needs at least one node");
    if (actions == 0 || observations == 0) throw ModelError("Fsc: empty action or observation set");
    if (device_states == 0) throw ModelError("Fsc: device must have at least one state");
    if (initial_node >= nodes) throw ModelError("Fsc: initial node out of range");
    psi_.assign(device_states * nodes * actions, 0.0);
    eta_.assign(device_states * nodes * actions * observations * nodes, 0.0);
}

void Fsc::set_initial_node(std::size_t q) {
    if (q >= nodes_) throw ModelError("Fsc: initial node out of range");
    initial_ = q;
}

CorrelationDevice::CorrelationDevice(std::size_t states, std::size_t initial_state)
    : states_(states), initial_(initial_state) {
    if (states == 0) throw ModelError("CorrelationDevice: at least one state is required");
    if (initial_state >= states) throw ModelError("CorrelationDevice: initial state out of range");
    w_.assign(states * states, 1.0 / static_cast<double>(states));
}

void CorrelationDevice::set_initial_state(std::size_t c) {
    if (c >= states_) throw ModelError("CorrelationDevice: initial state out of range");
    initial_ = c;
}

JointIndexer JointPolicy::joint_nodes() const {
    std::vector<std::size_t> radices;
    radices.reserve(agents.size());
    for (const auto& fsc : agents) radices.push_back(fsc.num_nodes());
    return JointIndexer(std::move(radices));
}

std::size_t JointPolicy::initial_joint_node() const {
    std::vector<std::size_t> digits;
    for (const auto& fsc : agents) digits.push_back(fsc.initial_node());
    return joint_nodes().flatten(digits);
}

std::vector<ParameterBlock> parameter_blocks(JointPolicy& policy) {
    std::vector<ParameterBlock> blocks;
    for (auto& fsc : policy.agents) {
        blocks.push_back({fsc.psi(), fsc.num_actions()});
        blocks.push_back({fsc.eta(), fsc.num_nodes()});
    }
    if (policy.device) blocks.push_back({policy.device->transitions(), policy.device->num_states()});
    return blocks;
}

std::vector<ConstParameterBlock> parameter_blocks(const JointPolicy& policy) {
    std::vector<ConstParameterBlock> blocks;
    for (const auto& fsc : policy.agents) {
        blocks.push_back({fsc.psi(), fsc.num_actions()});
        blocks.push_back({fsc.eta(), fsc.num_nodes()});
    }
    if (policy.device) blocks.push_back({policy.device->transitions(), policy.device->num_states()});
    return blocks;
}

std::vector<std::size_t> parameter_block_sizes(const JointPolicy& policy) {
    std::vector<std::size_t> sizes;
    for (const auto& fsc : policy.agents) {
        sizes.push_back(fsc.psi().size());
        sizes.push_back(fsc.eta().size());
    }
    if (policy.device) sizes.push_back(policy.device->transitions().size());
    return sizes;
}

void check_dimensions(const DecPomdp& model, const JointPolicy& policy) {
    if (policy.num_agents() != model.num_agents())
        throw ModelError("policy has " + std::to_string(policy.num_agents()) + " agents, model has " +
                         std::to_string(model.num_agents()));
    const std::size_t nc = policy.device_states();
    for (std::size_t i = 0; i < policy.num_agents(); ++i) {
        const auto& fsc = policy.agents[i];
        if (fsc.num_actions() != model.num_actions(i) ||
            fsc.num_observations() != model.num_observations(i))
            throw ModelError("controller " + std::to_string(i) +
                             " does not match the model's action/observation sets");
        if (fsc.num_device_states() != nc)
            throw ModelError("controller " + std::to_string(i) + " is conditioned on " +
                             std::to_string(fsc.num_device_states()) + " device states, device has " +
                             std::to_string(nc));
    }
}

std::vector<Violation> validate(const JointPolicy& policy, double tolerance) {
    std::vector<Violation> report;
    auto check = [&](std::span<const double> values, std::size_t row_length, const std::string& name) {
        for (std::size_t r = 0; r * row_length < values.size(); ++r) {
            auto row = values.subspan(r * row_length, row_length);
            double sum = 0.0;
            bool in_range = true;
            for (double p : row) {
                sum += p;
                if (!(p >= -tolerance && p <= 1.0 + tolerance)) in_range = false;
            }
            if (!in_range)
                report.push_back({name + " row " + std::to_string(r), "entry outside [0, 1]", 0.0});
            else if (std::abs(sum - 1.0) > tolerance)
                report.push_back({name + " row " + std::to_string(r), "row does not sum to 1", 1.0 - sum});
        }
    };
    for (std::size_t i = 0; i < policy.agents.size(); ++i) {
        const auto& fsc = policy.agents[i];
        check(fsc.psi(), fsc.num_actions(), "agent " + std::to_string(i) + " psi");
        check(fsc.eta(), fsc.num_nodes(), "agent " + std::to_string(i) + " eta");
    }
    if (policy.device) check(policy.device->transitions(), policy.device->num_states(), "device");
    return report;
}

namespace {

JointPolicy empty_policy(const DecPomdp& model, std::size_t nodes_per_agent, std::size_t device_size) {
    if (nodes_per_agent == 0) throw ModelError("controllers need at least one node");
    if (device_size == 0) throw ModelError("device needs at least one state");
    JointPolicy policy;
    for (std::size_t i = 0; i < model.num_agents(); ++i)
        policy.agents.emplace_back(nodes_per_agent, model.num_actions(i), model.num_observations(i),
                                   device_size);
    if (device_size > 1) policy.device = CorrelationDevice(device_size);
    return policy;
}

}  // namespace

JointPolicy random_deterministic(const DecPomdp& model, std::size_t nodes_per_agent,
                                 std::size_t device_size, std::uint64_t seed) {
    JointPolicy policy = empty_policy(model, nodes_per_agent, device_size);
    std::mt19937_64 rng(seed);
    for (auto& fsc : policy.agents) {
        std::uniform_int_distribution<std::size_t> pick_action(0, fsc.num_actions() - 1);
        std::uniform_int_distribution<std::size_t> pick_node(0, fsc.num_nodes() - 1);
        for (std::size_t r = 0; r * fsc.num_actions() < fsc.psi().size(); ++r)
            fsc.psi()[r * fsc.num_actions() + pick_action(rng)] = 1.0;
        for (std::size_t r = 0; r * fsc.num_nodes() < fsc.eta().size(); ++r)
            fsc.eta()[r * fsc.num_nodes() + pick_node(rng)] = 1.0;
    }
    return policy;
}

JointPolicy uniform_policy(const DecPomdp& model, std::size_t nodes_per_agent, std::size_t device_size) {
    JointPolicy policy = empty_policy(model, nodes_per_agent, device_size);
    for (auto& fsc : policy.agents) {
        std::fill(fsc.psi().begin(), fsc.psi().end(), 1.0 / static_cast<double>(fsc.num_actions()));
        std::fill(fsc.eta().begin(), fsc.eta().end(), 1.0 / static_cast<double>(fsc.num_nodes()));
    }
    return policy;
}

JointPolicy random_stochastic(const DecPomdp& model, std::size_t nodes_per_agent,
                              std::size_t device_size, std::uint64_t seed) {
    JointPolicy policy = empty_policy(model, nodes_per_agent, device_size);
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> exp1(1.0);
    for (auto& block : parameter_blocks(policy)) {
        for (std::size_t r = 0; r * block.row_length < block.values.size(); ++r) {
            auto row = block.values.subspan(r * block.row_length, block.row_length);
            double sum = 0.0;
            for (double& p : row) sum += (p = exp1(rng));
            for (double& p : row) p /= sum;
        }
    }
    return policy;
}

JointPolicy uncorrelate(const JointPolicy& policy) {
    if (policy.device_states() != 1)
        throw ModelError("uncorrelate: device has " + std::to_string(policy.device_states()) +
                         " states; only a one-state device can be dropped");
    JointPolicy out = policy;
    out.device.reset();
    return out;
}

JointPolicy attach_trivial_device(const JointPolicy& policy) {
    if (policy.device_states() != 1)
        throw ModelError("attach_trivial_device: policy is already conditioned on a larger device");
    JointPolicy out = policy;
    out.device = CorrelationDevice(1);
    return out;
}

}  // namespace decfsc
