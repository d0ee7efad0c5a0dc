#include "decfsc/decbpi.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

namespace decfsc {

namespace {

/// Column layout of the node-improvement LP: per device state, |A| action
/// columns then |A||O||Q| transition columns; epsilon last.
struct Columns {
    std::size_t actions, observations, nodes, device_states;

    std::size_t per_device() const { return actions + actions * observations * nodes; }
    std::size_t action(std::size_t c, std::size_t a) const { return c * per_device() + a; }
    std::size_t transition(std::size_t c, std::size_t a, std::size_t o, std::size_t q2) const {
        return c * per_device() + actions + (a * observations + o) * nodes + q2;
    }
    std::size_t epsilon() const { return device_states * per_device(); }
    std::size_t count() const { return epsilon() + 1; }
};

/// Continuation value of landing in (q', s') from device state c.
double continuation(const JointPolicy& policy, const ValueTable& values, DeviceRecursion recursion,
                    std::size_t q2, std::size_t s2, std::size_t c) {
    if (recursion == DeviceRecursion::printed) return values(q2, s2, c);
    double w = 0.0;
    for (std::size_t c2 = 0; c2 < policy.device_states(); ++c2) {
        const double p = policy.device_transition(c, c2);
        if (p != 0.0) w += p * values(q2, s2, c2);
    }
    return w;
}

void normalize_nonnegative(std::span<double> row) {
    double sum = 0.0;
    for (double& p : row) sum += (p = std::max(p, 0.0));
    if (sum <= 0.0) throw std::logic_error("improve_node: LP returned an empty distribution");
    for (double& p : row) p /= sum;
}

}  // namespace

NodeImprovement improve_node(const Evaluator& evaluator, const JointPolicy& policy, const ValueTable& values,
                             std::size_t agent, std::size_t node) {
    const DecPomdp& model = evaluator.model();
    check_dimensions(model, policy);
    if (agent >= policy.num_agents()) throw std::out_of_range("improve_node: agent index out of range");
    const Fsc& own = policy.agents[agent];
    if (node >= own.num_nodes()) throw std::out_of_range("improve_node: node index out of range");
    const JointIndexer nodes = policy.joint_nodes();
    const std::size_t nc = policy.device_states();
    if (values.joint_nodes() != nodes.size() || values.states() != model.num_states() ||
        values.device_states() != nc)
        throw ModelError("improve_node: value table does not match the policy");

    const Columns cols{own.num_actions(), own.num_observations(), own.num_nodes(), nc};
    const JointIndexer& ja = model.joint_actions();
    const JointIndexer& jo = model.joint_observations();
    const double gamma = model.discount();
    const std::size_t n = policy.num_agents();
    const DeviceRecursion recursion = evaluator.options().recursion;

    LpProblem lp;
    lp.objective.assign(cols.count(), 0.0);
    lp.objective[cols.epsilon()] = 1.0;
    lp.lower.assign(cols.count(), 0.0);
    lp.upper.assign(cols.count(), kInfinity);
    lp.lower[cols.epsilon()] = -kInfinity;

    std::vector<double> row(cols.count());
    for (std::size_t c = 0; c < nc; ++c) {
        for (std::size_t qj = 0; qj < nodes.size(); ++qj) {
            if (nodes.digit(qj, agent) != node) continue;
            for (std::size_t s = 0; s < model.num_states(); ++s) {
                std::fill(row.begin(), row.end(), 0.0);
                for (std::size_t a = 0; a < ja.size(); ++a) {
                    double others = 1.0;
                    for (std::size_t j = 0; j < n && others != 0.0; ++j)
                        if (j != agent) others *= policy.agents[j].action_prob(c, nodes.digit(qj, j), ja.digit(a, j));
                    if (others == 0.0) continue;
                    const std::size_t ai = ja.digit(a, agent);
                    row[cols.action(c, ai)] -= others * model.reward(s, a);
                    for (const auto& succ : evaluator.successors(s, a)) {
                        const std::size_t oi = jo.digit(succ.joint_observation, agent);
                        const double base = gamma * others * succ.probability;
                        for (std::size_t q2 = 0; q2 < nodes.size(); ++q2) {
                            double move = 1.0;
                            for (std::size_t j = 0; j < n && move != 0.0; ++j)
                                if (j != agent)
                                    move *= policy.agents[j].transition_prob(c, nodes.digit(qj, j), ja.digit(a, j),
                                                                             jo.digit(succ.joint_observation, j),
                                                                             nodes.digit(q2, j));
                            if (move == 0.0) continue;
                            row[cols.transition(c, ai, oi, nodes.digit(q2, agent))] -=
                                base * move * continuation(policy, values, recursion, q2, succ.next_state, c);
                        }
                    }
                }
                row[cols.epsilon()] = 1.0;
                lp.inequality_lhs.push_back(row);
                lp.inequality_rhs.push_back(-values(qj, s, c));
            }
        }
        std::fill(row.begin(), row.end(), 0.0);
        for (std::size_t a = 0; a < cols.actions; ++a) row[cols.action(c, a)] = 1.0;
        lp.equality_lhs.push_back(row);
        lp.equality_rhs.push_back(1.0);
        for (std::size_t a = 0; a < cols.actions; ++a) {
            for (std::size_t o = 0; o < cols.observations; ++o) {
                std::fill(row.begin(), row.end(), 0.0);
                row[cols.action(c, a)] = -1.0;
                for (std::size_t q2 = 0; q2 < cols.nodes; ++q2) row[cols.transition(c, a, o, q2)] = 1.0;
                lp.equality_lhs.push_back(row);
                lp.equality_rhs.push_back(0.0);
            }
        }
    }

    const LpResult result = solve_lp(lp);
    if (result.status != LpStatus::optimal)
        throw std::logic_error(std::string("improve_node: LP is ") +
                               (result.status == LpStatus::infeasible ? "infeasible" : "unbounded"));

    if (!std::all_of(result.x.begin(), result.x.end(), [](double v) { return std::isfinite(v); }))
        throw std::logic_error("improve_node: LP returned a non-finite solution");

    NodeImprovement out;
    out.agent = agent;
    out.node = node;
    out.margin = std::max(result.x[cols.epsilon()], 0.0);
    out.psi.resize(nc * cols.actions);
    out.eta.resize(nc * cols.actions * cols.observations * cols.nodes);
    for (std::size_t c = 0; c < nc; ++c) {
        std::span<double> psi(out.psi.data() + c * cols.actions, cols.actions);
        for (std::size_t a = 0; a < cols.actions; ++a) psi[a] = result.x[cols.action(c, a)];
        normalize_nonnegative(psi);
        for (std::size_t a = 0; a < cols.actions; ++a) {
            const double mass = result.x[cols.action(c, a)];
            for (std::size_t o = 0; o < cols.observations; ++o) {
                std::span<double> eta(out.eta.data() + ((c * cols.actions + a) * cols.observations + o) * cols.nodes,
                                      cols.nodes);
                if (mass > 1e-10) {
                    for (std::size_t q2 = 0; q2 < cols.nodes; ++q2) eta[q2] = result.x[cols.transition(c, a, o, q2)];
                    normalize_nonnegative(eta);
                } else {
                    const auto old = own.transition_row(c, node, a, o);
                    std::copy(old.begin(), old.end(), eta.begin());
                }
            }
        }
    }
    return out;
}

NodeImprovement improve_node(const DecPomdp& model, const JointPolicy& policy, const ValueTable& values,
                             std::size_t agent, std::size_t node) {
    return improve_node(Evaluator(model), policy, values, agent, node);
}

void apply_improvement(JointPolicy& policy, const NodeImprovement& improvement) {
    Fsc& fsc = policy.agents.at(improvement.agent);
    const std::size_t na = fsc.num_actions();
    const std::size_t no = fsc.num_observations();
    const std::size_t nq = fsc.num_nodes();
    const std::size_t nc = fsc.num_device_states();
    if (improvement.psi.size() != nc * na || improvement.eta.size() != nc * na * no * nq)
        throw ModelError("apply_improvement: rows do not match the controller");
    for (std::size_t c = 0; c < nc; ++c) {
        auto psi = fsc.action_row(c, improvement.node);
        std::copy_n(improvement.psi.begin() + static_cast<std::ptrdiff_t>(c * na), na, psi.begin());
        for (std::size_t a = 0; a < na; ++a)
            for (std::size_t o = 0; o < no; ++o) {
                auto eta = fsc.transition_row(c, improvement.node, a, o);
                std::copy_n(improvement.eta.begin() + static_cast<std::ptrdiff_t>(((c * na + a) * no + o) * nq), nq,
                            eta.begin());
            }
    }
}

void check_config(const BpiConfig& config) {
    if (config.max_sweeps == 0) throw std::invalid_argument("max_sweeps must be at least 1");
    if (!(config.epsilon_threshold >= 0.0)) throw std::invalid_argument("epsilon_threshold must be non-negative");
    if (config.restarts == 0) throw std::invalid_argument("restarts must be at least 1");
}

std::pair<JointPolicy, RestartStats> improve_policy(const DecPomdp& model, JointPolicy start,
                                                    const BpiConfig& config) {
    check_config(config);
    const auto t0 = std::chrono::steady_clock::now();
    const Evaluator evaluator(model, config.evaluation);

    RestartStats stats;
    JointPolicy current = std::move(start);
    ValueTable values = evaluator.evaluate(current);
    double value = evaluator.objective(current, values);
    stats.initial_objective = value;
    if (config.record_trace) stats.trace.push_back(value);

    while (stats.iterations < config.max_sweeps) {
        bool improved = false;
        double largest = 0.0;
        for (std::size_t i = 0; i < current.num_agents(); ++i) {
            for (std::size_t q = 0; q < current.agents[i].num_nodes(); ++q) {
                const NodeImprovement step = improve_node(evaluator, current, values, i, q);
                largest = std::max(largest, step.margin);
                if (step.margin <= config.epsilon_threshold) continue;
                apply_improvement(current, step);
                values = evaluator.evaluate(current);
                improved = true;
            }
        }
        ++stats.iterations;
        value = evaluator.objective(current, values);
        if (config.record_trace) stats.trace.push_back(value);
        stats.stationarity = largest;
        if (!improved) {
            stats.converged = true;
            break;
        }
    }

    stats.objective = value;
    stats.bellman_residual = evaluator.bellman_residual(current, values);
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(current), std::move(stats)};
}

std::pair<JointPolicy, SolveReport> solve_bpi(const DecPomdp& model, std::size_t nodes_per_agent,
                                              std::size_t device_size, const BpiConfig& config) {
    check_config(config);
    if (nodes_per_agent == 0) throw std::invalid_argument("nodes_per_agent must be at least 1");
    return run_restarts(config.restarts, config.seed, config.threads, [&](std::uint64_t seed) {
        return improve_policy(model, random_deterministic(model, nodes_per_agent, device_size, seed), config);
    });
}

}  // namespace decfsc
