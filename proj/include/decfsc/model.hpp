#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace decfsc {

/// Probability-sum tolerance shared by every validity check in the library.
inline constexpr double kProbabilityTolerance = 1e-9;

/// Thrown when a model or policy has inconsistent dimensions or contents.
class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/**
 * Mixed-radix enumeration of a cross-product space (joint actions, joint
 * observations, joint controller nodes). Tuples are ordered lexicographically
 * in agent order with the last agent's digit varying fastest.
 */
class JointIndexer {
public:
    JointIndexer() = default;
    explicit JointIndexer(std::vector<std::size_t> radices);

    std::size_t size() const { return size_; }
    std::size_t arity() const { return radices_.size(); }
    const std::vector<std::size_t>& radices() const { return radices_; }

    std::size_t flatten(std::span<const std::size_t> digits) const;
    void unflatten(std::size_t index, std::span<std::size_t> digits) const;
    std::vector<std::size_t> unflatten(std::size_t index) const;
    std::size_t digit(std::size_t index, std::size_t position) const {
        return (index / strides_[position]) % radices_[position];
    }
    std::size_t stride(std::size_t position) const { return strides_[position]; }

    /// All tuples in enumeration order.
    std::vector<std::vector<std::size_t>> enumerate() const;

    bool operator==(const JointIndexer&) const = default;

private:
    std::vector<std::size_t> radices_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 1;
};

/**
 * A finite DEC-POMDP <S, A_1..A_n, P, R, O_1..O_n, O> with discount and start
 * distribution. Storage is dense and indexed by flattened joint indices:
 *
 *   transition  [s][a][s']
 *   observation [a][s'][o]
 *   reward      [s][a]
 */
class DecPomdp {
public:
    DecPomdp() = default;
    DecPomdp(std::vector<std::string> states,
             std::vector<std::vector<std::string>> actions,
             std::vector<std::vector<std::string>> observations,
             double discount);

    std::size_t num_agents() const { return actions_.size(); }
    std::size_t num_states() const { return states_.size(); }
    std::size_t num_joint_actions() const { return joint_actions_.size(); }
    std::size_t num_joint_observations() const { return joint_observations_.size(); }
    std::size_t num_actions(std::size_t agent) const { return actions_.at(agent).size(); }
    std::size_t num_observations(std::size_t agent) const {
        return observations_.at(agent).size();
    }

    const JointIndexer& joint_actions() const { return joint_actions_; }
    const JointIndexer& joint_observations() const { return joint_observations_; }

    const std::vector<std::string>& state_labels() const { return states_; }
    const std::vector<std::string>& action_labels(std::size_t agent) const {
        return actions_.at(agent);
    }
    const std::vector<std::string>& observation_labels(std::size_t agent) const {
        return observations_.at(agent);
    }

    double discount() const { return discount_; }
    void set_discount(double gamma) { discount_ = gamma; }

    double transition(std::size_t s, std::size_t a, std::size_t s2) const {
        return transition_[(s * num_joint_actions() + a) * num_states() + s2];
    }
    double& transition(std::size_t s, std::size_t a, std::size_t s2) {
        return transition_[(s * num_joint_actions() + a) * num_states() + s2];
    }
    double observation(std::size_t a, std::size_t s2, std::size_t o) const {
        return observation_[(a * num_states() + s2) * num_joint_observations() + o];
    }
    double& observation(std::size_t a, std::size_t s2, std::size_t o) {
        return observation_[(a * num_states() + s2) * num_joint_observations() + o];
    }
    double reward(std::size_t s, std::size_t a) const {
        return reward_[s * num_joint_actions() + a];
    }
    double& reward(std::size_t s, std::size_t a) { return reward_[s * num_joint_actions() + a]; }

    const std::vector<double>& start() const { return start_; }
    void set_start(std::vector<double> start);

    std::span<const double> transition_row(std::size_t s, std::size_t a) const {
        return {transition_.data() + (s * num_joint_actions() + a) * num_states(), num_states()};
    }
    std::span<double> transition_row(std::size_t s, std::size_t a) {
        return {transition_.data() + (s * num_joint_actions() + a) * num_states(), num_states()};
    }
    std::span<const double> observation_row(std::size_t a, std::size_t s2) const {
        return {observation_.data() + (a * num_states() + s2) * num_joint_observations(),
                num_joint_observations()};
    }
    std::span<double> observation_row(std::size_t a, std::size_t s2) {
        return {observation_.data() + (a * num_states() + s2) * num_joint_observations(),
                num_joint_observations()};
    }

    double min_reward() const;
    double max_reward() const;
    double max_abs_reward() const;

    bool operator==(const DecPomdp&) const = default;

private:
    std::vector<std::string> states_;
    std::vector<std::vector<std::string>> actions_;
    std::vector<std::vector<std::string>> observations_;
    JointIndexer joint_actions_;
    JointIndexer joint_observations_;
    std::vector<double> transition_;
    std::vector<double> observation_;
    std::vector<double> reward_;
    std::vector<double> start_;
    double discount_ = 0.0;
};

/// One broken invariant. `where` names the offending index tuple.
struct Violation {
    std::string where;
    std::string message;
    double residual = 0.0;
};

/// Checks every DecPomdp invariant. Never throws; an empty report means valid.
std::vector<Violation> validate(const DecPomdp& model);

/// Human-readable multi-line rendering of a report.
std::string describe(const std::vector<Violation>& report);

/// Joint action tuples, agent 0 slowest.
std::vector<std::vector<std::size_t>> joint_actions(const DecPomdp& model);
std::vector<std::vector<std::size_t>> joint_observations(const DecPomdp& model);

/// Renormalizes T and O rows and the start distribution; rows summing to zero
/// are left untouched so that validation still reports them.
void normalize_rows(DecPomdp& model);

}  // namespace decfsc
