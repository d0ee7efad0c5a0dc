#pragma once

#include "decfsc/controller.hpp"
#include "decfsc/model.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace decfsc {

/// Raised when the Bellman system cannot be solved; impossible for a valid
/// model with discount < 1, so it signals an internal inconsistency.
class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * How the next value is indexed in the correlated recursion.
 *
 * next_state: V(q', s', c') weighted by P(c'|c). This is the default and the
 *             only form in which the device carries information.
 * printed:    sum_c' P(c'|c) V(q', s', c), i.e. the next value keeps the
 *             current device state. Kept for side-by-side comparison.
 */
enum class DeviceRecursion { next_state, printed };

struct EvaluationOptions {
    DeviceRecursion recursion = DeviceRecursion::next_state;
    /// Systems larger than this are solved by Bellman backups instead of LU.
    std::size_t dense_limit = 5000;
    double iterative_tolerance = 1e-10;
    std::size_t max_backups = 1'000'000;
};

/// V(q, s, c) over joint controller nodes, states and device states.
class ValueTable {
public:
    ValueTable() = default;
    ValueTable(std::size_t joint_nodes, std::size_t states, std::size_t device_states, double fill = 0.0)
        : joint_nodes_(joint_nodes),
          states_(states),
          device_states_(device_states),
          values_(joint_nodes * states * device_states, fill) {}

    std::size_t joint_nodes() const { return joint_nodes_; }
    std::size_t states() const { return states_; }
    std::size_t device_states() const { return device_states_; }
    std::size_t size() const { return values_.size(); }

    std::size_t index(std::size_t q, std::size_t s, std::size_t c) const {
        return (q * states_ + s) * device_states_ + c;
    }
    double operator()(std::size_t q, std::size_t s, std::size_t c = 0) const {
        return values_[index(q, s, c)];
    }
    double& operator()(std::size_t q, std::size_t s, std::size_t c = 0) { return values_[index(q, s, c)]; }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::size_t joint_nodes_ = 0;
    std::size_t states_ = 0;
    std::size_t device_states_ = 1;
    std::vector<double> values_;
};

/// d objective / d parameter, laid out like parameter_blocks(policy).
struct PolicyGradient {
    std::vector<std::vector<double>> blocks;
};

/// Value, objective and gradient from one forward and one adjoint solve.
struct Sensitivity {
    ValueTable values;
    /// Discounted occupancy of (q, s, c) starting from (q0, b0, c0).
    ValueTable occupancy;
    double objective = 0.0;
    PolicyGradient gradient;
};

/**
 * Exact policy evaluation for one model. Caches the sparse successor lists
 * (s', joint observation, P * O) of every (s, a); keeps a reference to the
 * model, which must outlive the evaluator.
 */
class Evaluator {
public:
    explicit Evaluator(const DecPomdp& model, EvaluationOptions options = {});

    const DecPomdp& model() const { return *model_; }
    const EvaluationOptions& options() const { return options_; }

    ValueTable evaluate(const JointPolicy& policy) const;
    double objective(const JointPolicy& policy, const ValueTable& values) const;
    Sensitivity sensitivity(const JointPolicy& policy) const;

    /// One application of the Bellman operator: r + gamma * M * V.
    ValueTable backup(const JointPolicy& policy, const ValueTable& values) const;
    double bellman_residual(const JointPolicy& policy, const ValueTable& values) const;

    struct Successor {
        std::size_t next_state;
        std::size_t joint_observation;
        double probability;
    };
    const std::vector<Successor>& successors(std::size_t s, std::size_t a) const {
        return successors_[s * model_->num_joint_actions() + a];
    }

private:
    struct Chain;
    Chain build_chain(const JointPolicy& policy) const;
    void check_table(const JointPolicy& policy, const ValueTable& values) const;

    const DecPomdp* model_;
    EvaluationOptions options_;
    std::vector<std::vector<Successor>> successors_;
};

ValueTable evaluate(const DecPomdp& model, const JointPolicy& policy, const EvaluationOptions& options = {});

/// sum_s b0(s) V(q0, s, c0).
double objective(const DecPomdp& model, const JointPolicy& policy, const ValueTable& values);

PolicyGradient gradient(const DecPomdp& model, const JointPolicy& policy,
                        const EvaluationOptions& options = {});

double bellman_residual(const DecPomdp& model, const JointPolicy& policy, const ValueTable& values,
                        const EvaluationOptions& options = {});

/// Convenience: objective of a policy under exact evaluation.
double policy_value(const DecPomdp& model, const JointPolicy& policy, const EvaluationOptions& options = {});

}  // namespace decfsc
