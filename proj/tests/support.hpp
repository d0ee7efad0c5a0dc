#pragma once
// Shared generators and independent oracles for the test suites.

#include "decfsc/controller.hpp"
#include "decfsc/evaluation.hpp"
#include "decfsc/lp.hpp"
#include "decfsc/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace testing {

using namespace decfsc;

inline std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t n, double zero_prob = 0.3) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p(n, 0.0);
    double total = 0.0;
    while (total == 0.0) {
        for (double& v : p) {
            v = u(rng) < zero_prob ? 0.0 : -std::log(1.0 - u(rng));
            total += v;
        }
    }
    for (double& v : p) v /= total;
    return p;
}

struct ModelShape {
    std::size_t agents = 2;
    std::size_t max_states = 4;
    std::size_t max_actions = 3;
    std::size_t max_observations = 2;
};

/// Random valid model with sparse rows, rewards in [-5, 5], gamma in [0.5, 0.95].
inline DecPomdp random_model(std::uint64_t seed, ModelShape shape = {}) {
    std::mt19937_64 rng(seed);
    auto pick = [&](std::size_t hi) { return std::uniform_int_distribution<std::size_t>(1, hi)(rng); };
    const std::size_t S = pick(shape.max_states);
    std::vector<std::string> states;
    for (std::size_t s = 0; s < S; ++s) states.push_back("s" + std::to_string(s));
    std::vector<std::vector<std::string>> actions(shape.agents), observations(shape.agents);
    for (std::size_t i = 0; i < shape.agents; ++i) {
        const std::size_t A = pick(shape.max_actions), O = pick(shape.max_observations);
        for (std::size_t a = 0; a < A; ++a) actions[i].push_back("a" + std::to_string(a));
        for (std::size_t o = 0; o < O; ++o) observations[i].push_back("o" + std::to_string(o));
    }
    const double gamma = std::uniform_real_distribution<double>(0.5, 0.95)(rng);
    DecPomdp m(states, actions, observations, gamma);
    std::uniform_real_distribution<double> r(-5.0, 5.0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < m.num_joint_actions(); ++a) {
            const auto row = random_distribution(rng, S);
            std::copy(row.begin(), row.end(), m.transition_row(s, a).begin());
            m.reward(s, a) = r(rng);
        }
    for (std::size_t a = 0; a < m.num_joint_actions(); ++a)
        for (std::size_t s2 = 0; s2 < S; ++s2) {
            const auto row = random_distribution(rng, m.num_joint_observations());
            std::copy(row.begin(), row.end(), m.observation_row(a, s2).begin());
        }
    m.set_start(random_distribution(rng, S, 0.2));
    return m;
}

/// Digits of a mixed-radix index, last position fastest.
inline std::vector<std::size_t> digits_of(std::size_t index, const std::vector<std::size_t>& radices) {
    std::vector<std::size_t> d(radices.size());
    for (std::size_t k = radices.size(); k-- > 0;) {
        d[k] = index % radices[k];
        index /= radices[k];
    }
    return d;
}

inline std::size_t index_of(const std::vector<std::size_t>& digits, const std::vector<std::size_t>& radices) {
    std::size_t index = 0;
    for (std::size_t k = 0; k < radices.size(); ++k) index = index * radices[k] + digits[k];
    return index;
}

inline std::size_t product(const std::vector<std::size_t>& v) {
    return std::accumulate(v.begin(), v.end(), std::size_t{1}, std::multiplies<>());
}

/**
 * Value iteration on the explicit (joint node, state, device) chain, built
 * from scratch out of the model and controller accessors. Iterates until the
 * sup-norm change is below `tol`; returns V laid out as (q*S + s)*C + c.
 */
inline std::vector<double> value_iteration(const DecPomdp& m, const JointPolicy& p,
                                           DeviceRecursion recursion = DeviceRecursion::next_state,
                                           double tol = 1e-13) {
    const std::size_t n = m.num_agents(), S = m.num_states(), C = p.device_states();
    std::vector<std::size_t> qr(n), ar(n), orad(n);
    for (std::size_t i = 0; i < n; ++i) {
        qr[i] = p.agents[i].num_nodes();
        ar[i] = m.num_actions(i);
        orad[i] = m.num_observations(i);
    }
    const std::size_t Q = product(qr), A = product(ar), O = product(orad);
    auto at = [&](std::size_t q, std::size_t s, std::size_t c) { return (q * S + s) * C + c; };
    std::vector<double> V(Q * S * C, 0.0), next(V.size());
    for (std::size_t sweep = 0; sweep < 100000; ++sweep) {
        double change = 0.0;
        for (std::size_t q = 0; q < Q; ++q) {
            const auto qd = digits_of(q, qr);
            for (std::size_t c = 0; c < C; ++c)
                for (std::size_t s = 0; s < S; ++s) {
                    double total = 0.0;
                    for (std::size_t a = 0; a < A; ++a) {
                        const auto ad = digits_of(a, ar);
                        double pa = 1.0;
                        for (std::size_t i = 0; i < n; ++i) pa *= p.agents[i].action_prob(c, qd[i], ad[i]);
                        if (pa == 0.0) continue;
                        double future = 0.0;
                        for (std::size_t s2 = 0; s2 < S; ++s2) {
                            const double pt = m.transition(s, a, s2);
                            if (pt == 0.0) continue;
                            for (std::size_t o = 0; o < O; ++o) {
                                const double po = m.observation(a, s2, o);
                                if (po == 0.0) continue;
                                const auto od = digits_of(o, orad);
                                for (std::size_t q2 = 0; q2 < Q; ++q2) {
                                    const auto q2d = digits_of(q2, qr);
                                    double pq = 1.0;
                                    for (std::size_t i = 0; i < n; ++i)
                                        pq *= p.agents[i].transition_prob(c, qd[i], ad[i], od[i], q2d[i]);
                                    if (pq == 0.0) continue;
                                    double cont = 0.0;
                                    if (recursion == DeviceRecursion::printed) {
                                        cont = V[at(q2, s2, c)];
                                    } else {
                                        for (std::size_t c2 = 0; c2 < C; ++c2)
                                            cont += p.device_transition(c, c2) * V[at(q2, s2, c2)];
                                    }
                                    future += pt * po * pq * cont;
                                }
                            }
                        }
                        total += pa * (m.reward(s, a) + m.discount() * future);
                    }
                    next[at(q, s, c)] = total;
                    change = std::max(change, std::abs(total - V[at(q, s, c)]));
                }
        }
        V.swap(next);
        if (change < tol) break;
    }
    return V;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
    return d;
}

/// Central difference of the objective along one raw parameter entry.
inline double finite_difference(const DecPomdp& m, const JointPolicy& p, std::size_t block, std::size_t entry,
                                double h = 1e-5, EvaluationOptions opts = {}) {
    JointPolicy plus = p, minus = p;
    parameter_blocks(plus)[block].values[entry] += h;
    parameter_blocks(minus)[block].values[entry] -= h;
    return (policy_value(m, plus, opts) - policy_value(m, minus, opts)) / (2.0 * h);
}

/**
 * LP oracle: enumerates every basic solution of {A_ub x <= b, A_eq x = b,
 * finite bounds}, each obtained by making n linearly independent constraints
 * active. Assumes the feasible set is bounded. Returns false when no basic
 * solution is feasible.
 */
inline bool vertex_enumeration(const LpProblem& lp, double& best, double feas_tol = 1e-9) {
    const std::size_t n = lp.num_variables();
    std::vector<std::vector<double>> rows;
    std::vector<double> rhs;
    std::vector<bool> is_eq;
    for (std::size_t r = 0; r < lp.equality_lhs.size(); ++r) {
        rows.push_back(lp.equality_lhs[r]);
        rhs.push_back(lp.equality_rhs[r]);
        is_eq.push_back(true);
    }
    for (std::size_t r = 0; r < lp.inequality_lhs.size(); ++r) {
        rows.push_back(lp.inequality_lhs[r]);
        rhs.push_back(lp.inequality_rhs[r]);
        is_eq.push_back(false);
    }
    for (std::size_t j = 0; j < n; ++j) {
        const double lo = lp.lower.empty() ? 0.0 : lp.lower[j];
        const double hi = lp.upper.empty() ? kInfinity : lp.upper[j];
        std::vector<double> e(n, 0.0);
        if (std::isfinite(lo)) {
            e[j] = -1.0;
            rows.push_back(e);
            rhs.push_back(-lo);
            is_eq.push_back(false);
        }
        if (std::isfinite(hi)) {
            e[j] = 1.0;
            rows.push_back(e);
            rhs.push_back(hi);
            is_eq.push_back(false);
        }
    }
    const std::size_t m = rows.size();
    bool found = false;
    best = -kInfinity;
    std::vector<std::size_t> pick;
    // Bitmask over constraints, popcount n, containing every equality.
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcountll(mask)) != n) continue;
        bool has_all_eq = true;
        for (std::size_t r = 0; r < m; ++r)
            if (is_eq[r] && !(mask >> r & 1)) has_all_eq = false;
        if (!has_all_eq) continue;
        Eigen::MatrixXd M(n, n);
        Eigen::VectorXd b(n);
        std::size_t k = 0;
        for (std::size_t r = 0; r < m; ++r)
            if (mask >> r & 1) {
                for (std::size_t j = 0; j < n; ++j) M(k, j) = rows[r][j];
                b(k) = rhs[r];
                ++k;
            }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
        if (lu.rank() < static_cast<Eigen::Index>(n)) continue;
        const Eigen::VectorXd x = lu.solve(b);
        bool feasible = true;
        for (std::size_t r = 0; r < m && feasible; ++r) {
            double lhs = 0.0;
            for (std::size_t j = 0; j < n; ++j) lhs += rows[r][j] * x(j);
            const double scale = feas_tol * std::max(1.0, std::abs(rhs[r]));
            feasible = is_eq[r] ? std::abs(lhs - rhs[r]) <= scale : lhs <= rhs[r] + scale;
        }
        if (!feasible) continue;
        double value = 0.0;
        for (std::size_t j = 0; j < n; ++j) value += lp.objective[j] * x(j);
        best = std::max(best, value);
        found = true;
    }
    return found;
}

/// Random bounded LP with up to 6 variables, mixed bound kinds and an
/// occasional equality row.
inline LpProblem random_lp(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t n = 1 + rng() % 6;
    LpProblem lp;
    lp.objective.resize(n);
    for (double& c : lp.objective) c = u(rng);
    lp.lower.assign(n, 0.0);
    lp.upper.assign(n, kInfinity);
    auto box_row = [&](std::size_t j, double sign, double bound) {
        std::vector<double> row(n, 0.0);
        row[j] = sign;
        lp.inequality_lhs.push_back(row);
        lp.inequality_rhs.push_back(bound);
    };
    for (std::size_t j = 0; j < n; ++j) {
        switch (rng() % 4) {
            case 0: lp.upper[j] = 1.0 + 3.0 * (u(rng) + 1.0); break;
            case 1:
                lp.lower[j] = -2.0 + u(rng);
                lp.upper[j] = 2.0 + u(rng);
                break;
            case 2:
                lp.lower[j] = -kInfinity;
                lp.upper[j] = 1.0 + u(rng);
                box_row(j, -1.0, 5.0);
                break;
            default:
                lp.lower[j] = -kInfinity;
                box_row(j, 1.0, 4.0);
                box_row(j, -1.0, 4.0);
                break;
        }
    }
    const std::size_t m = rng() % 4;
    for (std::size_t r = 0; r < m; ++r) {
        std::vector<double> row(n);
        for (double& a : row) a = u(rng);
        lp.inequality_lhs.push_back(row);
        lp.inequality_rhs.push_back(u(rng) + 0.5);
    }
    if (rng() % 3 == 0) {
        std::vector<double> row(n);
        for (double& a : row) a = u(rng);
        lp.equality_lhs.push_back(row);
        lp.equality_rhs.push_back(0.5 * u(rng));
    }
    return lp;
}

/// Simplex projection by bisection on the threshold tau of max(v - tau, 0).
inline std::vector<double> projection_by_bisection(std::span<const double> v) {
    double lo = *std::min_element(v.begin(), v.end()) - 1.0;
    double hi = *std::max_element(v.begin(), v.end());
    for (int it = 0; it < 200; ++it) {
        const double tau = 0.5 * (lo + hi);
        double sum = 0.0;
        for (double x : v) sum += std::max(x - tau, 0.0);
        if (sum > 1.0) lo = tau;
        else hi = tau;
    }
    const double tau = 0.5 * (lo + hi);
    std::vector<double> out(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) out[k] = std::max(v[k] - tau, 0.0);
    return out;
}

/// Deterministic one-node policy playing `actions[i]` forever.
inline JointPolicy constant_policy(const DecPomdp& m, const std::vector<std::size_t>& actions) {
    JointPolicy p;
    for (std::size_t i = 0; i < m.num_agents(); ++i) {
        Fsc f(1, m.num_actions(i), m.num_observations(i));
        f.action_row(0, 0)[actions[i]] = 1.0;
        for (std::size_t a = 0; a < m.num_actions(i); ++a)
            for (std::size_t o = 0; o < m.num_observations(i); ++o) f.transition_row(0, 0, a, o)[0] = 1.0;
        p.agents.push_back(f);
    }
    return p;
}

/// Best value over every deterministic one-node joint controller.
inline double best_deterministic_one_node(const DecPomdp& m) {
    std::vector<std::size_t> ar(m.num_agents());
    for (std::size_t i = 0; i < m.num_agents(); ++i) ar[i] = m.num_actions(i);
    double best = -kInfinity;
    for (std::size_t a = 0; a < product(ar); ++a)
        best = std::max(best, policy_value(m, constant_policy(m, digits_of(a, ar))));
    return best;
}

}  // namespace testing
