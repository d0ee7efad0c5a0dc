#include "decfsc/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

namespace decfsc {

namespace {

enum Stream : std::uint32_t { kEnvironment = 0, kDevice = 1, kFirstAgent = 2 };

class Uniform {
public:
    Uniform(std::uint64_t seed, std::uint64_t episode, std::uint32_t stream) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(episode), static_cast<std::uint32_t>(episode >> 32), stream};
        rng_.seed(seq);
    }
    /// 53-bit uniform in [0, 1).
    double operator()() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 rng_;
};

std::size_t sample(std::span<const double> row, double u) {
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t k = 0; k < row.size(); ++k) {
        if (row[k] <= 0.0) continue;
        acc += row[k];
        last = k;
        if (u < acc) return k;
    }
    return last;  // u beyond a sum that fell short of 1 by round-off
}

double normal_quantile(double p) {
    // Bisection on the normal CDF; p in (0, 1).
    double lo = -40.0, hi = 40.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

double simulate(const DecPomdp& model, const JointPolicy& policy, std::uint64_t seed, std::size_t episode,
                std::size_t horizon, EpisodeTrace* trace, const NodeOverride* override_node) {
    const std::size_t n = policy.num_agents();
    const JointIndexer& ja = model.joint_actions();
    const JointIndexer& jo = model.joint_observations();
    Uniform env(seed, episode, kEnvironment);
    Uniform dev(seed, episode, kDevice);
    std::vector<Uniform> agents;
    agents.reserve(n);
    for (std::size_t i = 0; i < n; ++i) agents.emplace_back(seed, episode, kFirstAgent + static_cast<std::uint32_t>(i));

    std::size_t s = sample(model.start(), env());
    std::size_t c = policy.initial_device_state();
    std::vector<std::size_t> q(n), a(n), o(n);
    for (std::size_t i = 0; i < n; ++i) q[i] = policy.agents[i].initial_node();

    if (trace) {
        *trace = EpisodeTrace{};
        trace->nodes.resize(n);
        trace->actions.resize(n);
        trace->observations.resize(n);
        trace->agent_draws.resize(n);
    }

    const double gamma = model.discount();
    double discount = 1.0;
    double total = 0.0;
    for (std::size_t t = 0; t < horizon; ++t) {
        if (override_node && *override_node)
            for (std::size_t i = 0; i < n; ++i) q[i] = (*override_node)(i, t, q[i]);
        std::vector<double> draws(trace ? 2 * n : 0);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = agents[i]();
            if (trace) draws[2 * i] = u;
            a[i] = sample_action(policy.agents[i], q[i], c, u);
        }
        const std::size_t ja_index = ja.flatten(a);
        total += discount * model.reward(s, ja_index);
        discount *= gamma;

        const std::size_t s2 = sample(model.transition_row(s, ja_index), env());
        const std::size_t jo_index = sample(model.observation_row(ja_index, s2), env());
        jo.unflatten(jo_index, o);
        std::size_t c2 = c;
        if (policy.device) c2 = sample(policy.device->row(c), dev());

        if (trace) {
            trace->states.push_back(s);
            trace->device_states.push_back(c);
            for (std::size_t i = 0; i < n; ++i) {
                trace->nodes[i].push_back(q[i]);
                trace->actions[i].push_back(a[i]);
                trace->observations[i].push_back(o[i]);
            }
        }
        // Node updates are conditioned on the device state the action used.
        for (std::size_t i = 0; i < n; ++i) {
            const double u = agents[i]();
            if (trace) draws[2 * i + 1] = u;
            q[i] = sample_next_node(policy.agents[i], q[i], a[i], o[i], c, u);
        }
        if (trace)
            for (std::size_t i = 0; i < n; ++i) {
                trace->agent_draws[i].push_back(draws[2 * i]);
                trace->agent_draws[i].push_back(draws[2 * i + 1]);
            }
        s = s2;
        c = c2;
    }
    if (trace) trace->discounted_return = total;
    return total;
}

}  // namespace

void check_config(const RolloutConfig& config) {
    if (config.episodes == 0) throw std::invalid_argument("episodes must be at least 1");
    if (config.horizon == 0 && !(config.truncation_tolerance > 0.0))
        throw std::invalid_argument("truncation tolerance must be positive");
    if (!(config.confidence > 0.0 && config.confidence < 1.0))
        throw std::invalid_argument("confidence must lie in (0, 1)");
}

std::size_t truncation_horizon(const DecPomdp& model, double tolerance) {
    if (!(tolerance > 0.0)) throw std::invalid_argument("truncation tolerance must be positive");
    const double gamma = model.discount();
    const double scale = model.max_abs_reward() / (1.0 - gamma);
    if (scale <= tolerance || gamma == 0.0) return 1;
    const double h = std::ceil(std::log(tolerance / scale) / std::log(gamma));
    std::size_t horizon = static_cast<std::size_t>(std::max(1.0, h));
    while (truncation_bound(model, horizon) > tolerance) ++horizon;  // guard against log round-off
    return horizon;
}

double truncation_bound(const DecPomdp& model, std::size_t horizon) {
    const double gamma = model.discount();
    return std::pow(gamma, static_cast<double>(horizon)) * model.max_abs_reward() / (1.0 - gamma);
}

std::size_t sample_action(const Fsc& fsc, std::size_t node, std::size_t device_state, double u) {
    return sample(fsc.action_row(device_state, node), u);
}

std::size_t sample_next_node(const Fsc& fsc, std::size_t node, std::size_t action, std::size_t observation,
                             std::size_t device_state, double u) {
    return sample(fsc.transition_row(device_state, node, action, observation), u);
}

EpisodeTrace run_episode(const DecPomdp& model, const JointPolicy& policy, std::uint64_t seed,
                         std::size_t episode, std::size_t horizon, const NodeOverride& override_node) {
    check_dimensions(model, policy);
    EpisodeTrace trace;
    simulate(model, policy, seed, episode, horizon, &trace, &override_node);
    return trace;
}

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

ValueEstimate estimate_value(const DecPomdp& model, const JointPolicy& policy, const RolloutConfig& config) {
    check_config(config);
    check_dimensions(model, policy);
    ValueEstimate est;
    est.episodes = config.episodes;
    est.horizon = config.horizon ? config.horizon : truncation_horizon(model, config.truncation_tolerance);
    est.truncation_bound = truncation_bound(model, est.horizon);

    std::vector<double> returns(config.episodes);
    auto work = [&](std::size_t e) {
        returns[e] = simulate(model, policy, config.seed, e, est.horizon, nullptr, nullptr);
    };
    const std::size_t workers = std::clamp<std::size_t>(config.threads, 1, config.episodes);
    if (workers == 1) {
        for (std::size_t e = 0; e < config.episodes; ++e) work(e);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < workers; ++t)
            pool.emplace_back([&] {
                for (std::size_t e = next++; e < config.episodes; e = next++) work(e);
            });
    }

    const double count = static_cast<double>(config.episodes);
    est.mean = pairwise_sum(returns) / count;
    if (config.episodes > 1) {
        std::vector<double> sq(returns.size());
        for (std::size_t e = 0; e < returns.size(); ++e) sq[e] = (returns[e] - est.mean) * (returns[e] - est.mean);
        est.standard_error = std::sqrt(pairwise_sum(sq) / (count - 1.0) / count);
    } else {
        est.standard_error = std::numeric_limits<double>::infinity();
    }
    est.half_width = normal_quantile(0.5 + 0.5 * config.confidence) * est.standard_error;
    return est;
}

}  // namespace decfsc
