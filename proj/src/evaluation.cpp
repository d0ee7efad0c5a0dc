#include "decfsc/evaluation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

namespace decfsc {

struct Evaluator::Chain {
    std::size_t dimension = 0;
    std::vector<double> reward;
    // CSR rows of the joint transition matrix M over (q, s, c).
    std::vector<std::size_t> row_start;
    std::vector<std::size_t> column;
    std::vector<double> weight;
};

namespace {

/// Digit tables and per-(q, c) joint action distributions for one policy.
class PolicyLayout {
public:
    PolicyLayout(const DecPomdp& model, const JointPolicy& policy)
        : model_(model), policy_(policy), nodes_(policy.joint_nodes()), nc_(policy.device_states()) {
        node_digits_.resize(nodes_.size());
        for (std::size_t q = 0; q < nodes_.size(); ++q) node_digits_[q] = nodes_.unflatten(q);
        action_digits_ = model.joint_actions().enumerate();
        observation_digits_ = model.joint_observations().enumerate();

        const std::size_t na = model.num_joint_actions();
        action_probs_.assign(nodes_.size() * nc_ * na, 0.0);
        std::vector<double> kron, next;
        for (std::size_t q = 0; q < nodes_.size(); ++q) {
            for (std::size_t c = 0; c < nc_; ++c) {
                kron.assign(1, 1.0);
                for (std::size_t i = 0; i < policy.num_agents(); ++i) {
                    auto row = policy.agents[i].action_row(c, node_digits_[q][i]);
                    next.assign(kron.size() * row.size(), 0.0);
                    for (std::size_t k = 0; k < kron.size(); ++k)
                        for (std::size_t a = 0; a < row.size(); ++a) next[k * row.size() + a] = kron[k] * row[a];
                    kron.swap(next);
                }
                std::copy(kron.begin(), kron.end(), action_probs_.begin() + (q * nc_ + c) * na);
            }
        }
    }

    std::size_t joint_nodes() const { return nodes_.size(); }
    std::size_t device_states() const { return nc_; }
    const std::vector<std::size_t>& node_digits(std::size_t q) const { return node_digits_[q]; }
    const std::vector<std::size_t>& action_digits(std::size_t a) const { return action_digits_[a]; }
    const std::vector<std::size_t>& observation_digits(std::size_t o) const { return observation_digits_[o]; }

    std::span<const double> action_probs(std::size_t q, std::size_t c) const {
        const std::size_t na = model_.num_joint_actions();
        return {action_probs_.data() + (q * nc_ + c) * na, na};
    }

    /// Product over agents of psi_k(a_k | q_k, c) for k != skip.
    double others_action_prob(std::size_t q, std::size_t c, std::size_t a, std::size_t skip) const {
        double p = 1.0;
        for (std::size_t k = 0; k < policy_.num_agents(); ++k) {
            if (k == skip) continue;
            p *= policy_.agents[k].action_prob(c, node_digits_[q][k], action_digits_[a][k]);
        }
        return p;
    }

    /// Joint next-node distribution prod_i eta_i(. | q_i, a_i, o_i, c) over joint nodes.
    void next_nodes(std::size_t q, std::size_t c, std::size_t a, std::size_t o, std::vector<double>& out,
                    std::vector<double>& scratch) const {
        out.assign(1, 1.0);
        for (std::size_t i = 0; i < policy_.num_agents(); ++i) {
            auto row = policy_.agents[i].transition_row(c, node_digits_[q][i], action_digits_[a][i],
                                                        observation_digits_[o][i]);
            scratch.assign(out.size() * row.size(), 0.0);
            for (std::size_t k = 0; k < out.size(); ++k) {
                if (out[k] == 0.0) continue;
                for (std::size_t r = 0; r < row.size(); ++r) scratch[k * row.size() + r] = out[k] * row[r];
            }
            out.swap(scratch);
        }
    }

    /// Row of eta_i used at (q, c, a, o).
    std::span<const double> transition_row(std::size_t agent, std::size_t q, std::size_t c, std::size_t a,
                                           std::size_t o) const {
        return policy_.agents[agent].transition_row(c, node_digits_[q][agent], action_digits_[a][agent],
                                                    observation_digits_[o][agent]);
    }

private:
    const DecPomdp& model_;
    const JointPolicy& policy_;
    JointIndexer nodes_;
    std::size_t nc_;
    std::vector<std::vector<std::size_t>> node_digits_;
    std::vector<std::vector<std::size_t>> action_digits_;
    std::vector<std::vector<std::size_t>> observation_digits_;
    std::vector<double> action_probs_;
};

/// Device state whose value is read after moving from c towards c2.
inline std::size_t target_device_state(DeviceRecursion mode, std::size_t c, std::size_t c2) {
    return mode == DeviceRecursion::next_state ? c2 : c;
}

std::vector<double> multiply(const std::vector<std::size_t>& row_start, const std::vector<std::size_t>& column,
                             const std::vector<double>& weight, const std::vector<double>& x) {
    std::vector<double> y(row_start.size() - 1, 0.0);
    for (std::size_t j = 0; j + 1 < row_start.size(); ++j) {
        double acc = 0.0;
        for (std::size_t k = row_start[j]; k < row_start[j + 1]; ++k) acc += weight[k] * x[column[k]];
        y[j] = acc;
    }
    return y;
}

std::vector<double> multiply_transpose(const std::vector<std::size_t>& row_start,
                                       const std::vector<std::size_t>& column,
                                       const std::vector<double>& weight, const std::vector<double>& x) {
    std::vector<double> y(row_start.size() - 1, 0.0);
    for (std::size_t j = 0; j + 1 < row_start.size(); ++j) {
        if (x[j] == 0.0) continue;
        for (std::size_t k = row_start[j]; k < row_start[j + 1]; ++k) y[column[k]] += weight[k] * x[j];
    }
    return y;
}

double max_abs_difference(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

Evaluator::Evaluator(const DecPomdp& model, EvaluationOptions options) : model_(&model), options_(options) {
    const std::size_t ns = model.num_states();
    const std::size_t na = model.num_joint_actions();
    const std::size_t no = model.num_joint_observations();
    successors_.resize(ns * na);
    for (std::size_t s = 0; s < ns; ++s) {
        for (std::size_t a = 0; a < na; ++a) {
            auto& list = successors_[s * na + a];
            for (std::size_t s2 = 0; s2 < ns; ++s2) {
                const double p = model.transition(s, a, s2);
                if (p == 0.0) continue;
                for (std::size_t o = 0; o < no; ++o) {
                    const double po = p * model.observation(a, s2, o);
                    if (po != 0.0) list.push_back({s2, o, po});
                }
            }
        }
    }
}

Evaluator::Chain Evaluator::build_chain(const JointPolicy& policy) const {
    check_dimensions(*model_, policy);
    const DecPomdp& model = *model_;
    const PolicyLayout layout(model, policy);
    const std::size_t nq = layout.joint_nodes();
    const std::size_t ns = model.num_states();
    const std::size_t nc = layout.device_states();
    const std::size_t na = model.num_joint_actions();
    const ValueTable shape(nq, ns, nc);

    Chain chain;
    chain.dimension = shape.size();
    chain.reward.assign(chain.dimension, 0.0);
    chain.row_start.reserve(chain.dimension + 1);
    chain.row_start.push_back(0);

    std::vector<double> row(chain.dimension, 0.0);
    std::vector<std::size_t> touched;
    std::vector<char> is_touched(chain.dimension, 0);
    std::vector<double> next, scratch;

    for (std::size_t q = 0; q < nq; ++q) {
        for (std::size_t s = 0; s < ns; ++s) {
            for (std::size_t c = 0; c < nc; ++c) {
                const std::size_t j = shape.index(q, s, c);
                auto pa = layout.action_probs(q, c);
                double r = 0.0;
                for (std::size_t a = 0; a < na; ++a) {
                    if (pa[a] == 0.0) continue;
                    r += pa[a] * model.reward(s, a);
                    for (const auto& succ : successors(s, a)) {
                        layout.next_nodes(q, c, a, succ.joint_observation, next, scratch);
                        const double base = pa[a] * succ.probability;
                        for (std::size_t q2 = 0; q2 < nq; ++q2) {
                            if (next[q2] == 0.0) continue;
                            for (std::size_t c2 = 0; c2 < nc; ++c2) {
                                const double w = policy.device_transition(c, c2);
                                if (w == 0.0) continue;
                                const std::size_t k =
                                    shape.index(q2, succ.next_state, target_device_state(options_.recursion, c, c2));
                                if (!is_touched[k]) {
                                    is_touched[k] = 1;
                                    touched.push_back(k);
                                }
                                row[k] += base * next[q2] * w;
                            }
                        }
                    }
                }
                chain.reward[j] = r;
                std::sort(touched.begin(), touched.end());
                for (std::size_t k : touched) {
                    chain.column.push_back(k);
                    chain.weight.push_back(row[k]);
                    row[k] = 0.0;
                    is_touched[k] = 0;
                }
                touched.clear();
                chain.row_start.push_back(chain.column.size());
            }
        }
    }
    return chain;
}

namespace {

struct Solution {
    std::vector<double> values;
    std::vector<double> occupancy;
};

Solution solve_chain(const std::vector<double>& reward, const std::vector<std::size_t>& row_start,
                     const std::vector<std::size_t>& column, const std::vector<double>& weight, double gamma,
                     const std::vector<double>* start, const EvaluationOptions& options) {
    const std::size_t n = reward.size();
    Solution out;
    if (n <= options.dense_limit) {
        Eigen::MatrixXd system = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = row_start[j]; k < row_start[j + 1]; ++k)
                system(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(column[k])) -= gamma * weight[k];
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
        Eigen::Map<const Eigen::VectorXd> r(reward.data(), static_cast<Eigen::Index>(n));
        Eigen::VectorXd v = lu.solve(r);
        if (!all_finite(v)) throw EvaluationError("Bellman system is singular");
        out.values.assign(v.data(), v.data() + n);
        if (start) {
            Eigen::Map<const Eigen::VectorXd> d(start->data(), static_cast<Eigen::Index>(n));
            Eigen::VectorXd lambda = lu.transpose().solve(d);
            if (!all_finite(lambda)) throw EvaluationError("adjoint Bellman system is singular");
            out.occupancy.assign(lambda.data(), lambda.data() + n);
        }
        return out;
    }

    // Bellman backups; gamma-contraction in the sup norm.
    auto iterate = [&](const std::vector<double>& source, bool transpose) {
        std::vector<double> x = source;
        for (std::size_t it = 0; it < options.max_backups; ++it) {
            std::vector<double> y = transpose ? multiply_transpose(row_start, column, weight, x)
                                              : multiply(row_start, column, weight, x);
            for (std::size_t j = 0; j < n; ++j) y[j] = source[j] + gamma * y[j];
            const double change = max_abs_difference(x, y);
            x.swap(y);
            if (!std::isfinite(change)) throw EvaluationError("Bellman backups diverged");
            if (change <= options.iterative_tolerance) return x;
        }
        throw EvaluationError("Bellman backups did not converge");
    };
    out.values = iterate(reward, false);
    if (start) out.occupancy = iterate(*start, true);
    return out;
}

}  // namespace

ValueTable Evaluator::evaluate(const JointPolicy& policy) const {
    const Chain chain = build_chain(policy);
    ValueTable table(policy.joint_nodes().size(), model_->num_states(), policy.device_states());
    auto solution = solve_chain(chain.reward, chain.row_start, chain.column, chain.weight, model_->discount(),
                                nullptr, options_);
    table.values() = std::move(solution.values);
    return table;
}

void Evaluator::check_table(const JointPolicy& policy, const ValueTable& values) const {
    check_dimensions(*model_, policy);
    if (values.joint_nodes() != policy.joint_nodes().size() || values.states() != model_->num_states() ||
        values.device_states() != policy.device_states())
        throw ModelError("value table dimensions do not match the policy and model");
}

double Evaluator::objective(const JointPolicy& policy, const ValueTable& values) const {
    check_table(policy, values);
    const std::size_t q0 = policy.initial_joint_node();
    const std::size_t c0 = policy.initial_device_state();
    double total = 0.0;
    for (std::size_t s = 0; s < model_->num_states(); ++s) total += model_->start()[s] * values(q0, s, c0);
    return total;
}

ValueTable Evaluator::backup(const JointPolicy& policy, const ValueTable& values) const {
    check_table(policy, values);
    const Chain chain = build_chain(policy);
    ValueTable out = values;
    auto mv = multiply(chain.row_start, chain.column, chain.weight, values.values());
    for (std::size_t j = 0; j < chain.dimension; ++j) out.values()[j] = chain.reward[j] + model_->discount() * mv[j];
    return out;
}

double Evaluator::bellman_residual(const JointPolicy& policy, const ValueTable& values) const {
    const ValueTable next = backup(policy, values);
    return max_abs_difference(next.values(), values.values());
}

Sensitivity Evaluator::sensitivity(const JointPolicy& policy) const {
    const DecPomdp& model = *model_;
    const Chain chain = build_chain(policy);
    const PolicyLayout layout(model, policy);
    const std::size_t nq = layout.joint_nodes();
    const std::size_t ns = model.num_states();
    const std::size_t nc = layout.device_states();
    const std::size_t na = model.num_joint_actions();
    const std::size_t n_agents = model.num_agents();
    const double gamma = model.discount();

    Sensitivity out;
    out.values = ValueTable(nq, ns, nc);
    out.occupancy = ValueTable(nq, ns, nc);
    std::vector<double> start(chain.dimension, 0.0);
    const std::size_t q0 = policy.initial_joint_node();
    const std::size_t c0 = policy.initial_device_state();
    for (std::size_t s = 0; s < ns; ++s) start[out.values.index(q0, s, c0)] = model.start()[s];

    auto solution = solve_chain(chain.reward, chain.row_start, chain.column, chain.weight, gamma, &start, options_);
    out.values.values() = std::move(solution.values);
    out.occupancy.values() = std::move(solution.occupancy);
    out.objective = objective(policy, out.values);

    const ValueTable& V = out.values;
    const ValueTable& lambda = out.occupancy;

    // Continuation value W(q', s', c) = sum_c' P(c'|c) V(q', s', target(c, c')).
    ValueTable continuation(nq, ns, nc);
    for (std::size_t q2 = 0; q2 < nq; ++q2)
        for (std::size_t s2 = 0; s2 < ns; ++s2)
            for (std::size_t c = 0; c < nc; ++c) {
                double acc = 0.0;
                for (std::size_t c2 = 0; c2 < nc; ++c2)
                    acc += policy.device_transition(c, c2) * V(q2, s2, target_device_state(options_.recursion, c, c2));
                continuation(q2, s2, c) = acc;
            }

    const auto sizes = parameter_block_sizes(policy);
    out.gradient.blocks.resize(sizes.size());
    for (std::size_t b = 0; b < sizes.size(); ++b) out.gradient.blocks[b].assign(sizes[b], 0.0);
    auto psi_grad = [&](std::size_t i) -> std::vector<double>& { return out.gradient.blocks[2 * i]; };
    auto eta_grad = [&](std::size_t i) -> std::vector<double>& { return out.gradient.blocks[2 * i + 1]; };
    std::vector<double>* device_grad = policy.device ? &out.gradient.blocks[2 * n_agents] : nullptr;

    const JointIndexer nodes = policy.joint_nodes();
    std::vector<std::vector<std::size_t>> node_digits(nq);
    for (std::size_t q2 = 0; q2 < nq; ++q2) node_digits[q2] = nodes.unflatten(q2);

    std::vector<double> next, scratch, prefix(n_agents + 1), suffix(n_agents + 1);
    std::vector<std::span<const double>> rows(n_agents);

    for (std::size_t q = 0; q < nq; ++q) {
        const auto& qd = layout.node_digits(q);
        for (std::size_t s = 0; s < ns; ++s) {
            for (std::size_t c = 0; c < nc; ++c) {
                const double weight = lambda(q, s, c);
                if (weight == 0.0) continue;
                auto pa = layout.action_probs(q, c);
                for (std::size_t a = 0; a < na; ++a) {
                    const auto& ad = layout.action_digits(a);
                    double g = model.reward(s, a);
                    for (const auto& succ : successors(s, a)) {
                        layout.next_nodes(q, c, a, succ.joint_observation, next, scratch);
                        double cont = 0.0;
                        for (std::size_t q2 = 0; q2 < nq; ++q2)
                            if (next[q2] != 0.0) cont += next[q2] * continuation(q2, succ.next_state, c);
                        g += gamma * succ.probability * cont;

                        if (pa[a] == 0.0) continue;
                        const double base = weight * pa[a] * gamma * succ.probability;
                        const auto& od = layout.observation_digits(succ.joint_observation);

                        for (std::size_t i = 0; i < n_agents; ++i)
                            rows[i] = layout.transition_row(i, q, c, a, succ.joint_observation);
                        for (std::size_t q2 = 0; q2 < nq; ++q2) {
                            const double w_next = continuation(q2, succ.next_state, c);
                            if (w_next == 0.0) continue;
                            const auto& qd2 = node_digits[q2];
                            prefix[0] = 1.0;
                            for (std::size_t i = 0; i < n_agents; ++i) prefix[i + 1] = prefix[i] * rows[i][qd2[i]];
                            suffix[n_agents] = 1.0;
                            for (std::size_t i = n_agents; i-- > 0;) suffix[i] = suffix[i + 1] * rows[i][qd2[i]];
                            for (std::size_t i = 0; i < n_agents; ++i) {
                                const double others = prefix[i] * suffix[i + 1];
                                if (others == 0.0) continue;
                                const auto& fsc = policy.agents[i];
                                eta_grad(i)[fsc.eta_offset(c, qd[i], ad[i], od[i]) + qd2[i]] += base * others * w_next;
                            }
                        }
                        if (device_grad) {
                            for (std::size_t c2 = 0; c2 < nc; ++c2) {
                                const std::size_t ct = target_device_state(options_.recursion, c, c2);
                                double acc = 0.0;
                                for (std::size_t q2 = 0; q2 < nq; ++q2)
                                    if (next[q2] != 0.0) acc += next[q2] * V(q2, succ.next_state, ct);
                                (*device_grad)[c * nc + c2] += base * acc;
                            }
                        }
                    }
                    for (std::size_t i = 0; i < n_agents; ++i) {
                        const double others = layout.others_action_prob(q, c, a, i);
                        if (others == 0.0) continue;
                        psi_grad(i)[policy.agents[i].psi_offset(c, qd[i]) + ad[i]] += weight * others * g;
                    }
                }
            }
        }
    }
    return out;
}

ValueTable evaluate(const DecPomdp& model, const JointPolicy& policy, const EvaluationOptions& options) {
    return Evaluator(model, options).evaluate(policy);
}

double objective(const DecPomdp& model, const JointPolicy& policy, const ValueTable& values) {
    return Evaluator(model).objective(policy, values);
}

PolicyGradient gradient(const DecPomdp& model, const JointPolicy& policy, const EvaluationOptions& options) {
    return Evaluator(model, options).sensitivity(policy).gradient;
}

double bellman_residual(const DecPomdp& model, const JointPolicy& policy, const ValueTable& values,
                        const EvaluationOptions& options) {
    return Evaluator(model, options).bellman_residual(policy, values);
}

double policy_value(const DecPomdp& model, const JointPolicy& policy, const EvaluationOptions& options) {
    const Evaluator evaluator(model, options);
    return evaluator.objective(policy, evaluator.evaluate(policy));
}

}  // namespace decfsc
