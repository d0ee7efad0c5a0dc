#include "decfsc/domains.hpp"
#include "decfsc/evaluation.hpp"
#include "decfsc/simulate.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace decfsc;

TEST_CASE("unit reward single state gives the geometric series") {
    DecPomdp m({"s"}, {{"a"}}, {{"o"}}, 0.9);
    m.transition(0, 0, 0) = 1.0;
    m.observation(0, 0, 0) = 1.0;
    m.reward(0, 0) = 1.0;
    m.set_start({1.0});
    RolloutConfig c;
    c.episodes = 10;
    const ValueEstimate e = estimate_value(m, uniform_policy(m, 1), c);
    CHECK(std::abs(e.mean - 10.0) <= 1e-3);
    CHECK(e.truncation_bound <= 1e-4);
    CHECK(e.standard_error == doctest::Approx(0.0));
}

TEST_CASE("estimates agree with exact evaluation") {
    for (const char* name : {"broadcast", "recycling", "tiger"}) {
        const DecPomdp m = domains::by_name(name);
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const JointPolicy p = random_stochastic(m, 2, 1 + seed % 2, seed);
            RolloutConfig c;
            c.seed = seed;
            const ValueEstimate e = estimate_value(m, p, c);
            CHECK(std::abs(e.mean - policy_value(m, p)) <= 3.0 * e.standard_error + e.truncation_bound);
        }
    }
}

TEST_CASE("degenerate configurations are rejected") {
    const DecPomdp m = domains::tiger();
    RolloutConfig c;
    c.episodes = 0;
    CHECK_THROWS_AS(estimate_value(m, uniform_policy(m, 1), c), std::invalid_argument);
    c = RolloutConfig{};
    c.truncation_tolerance = 0.0;
    CHECK_THROWS_AS(check_config(c), std::invalid_argument);
    c = RolloutConfig{};
    c.confidence = 1.0;
    CHECK_THROWS_AS(check_config(c), std::invalid_argument);
    CHECK_THROWS_AS(estimate_value(domains::broadcast(), uniform_policy(m, 1), RolloutConfig{}), ModelError);
}

TEST_CASE("one episode has an infinite standard error") {
    const DecPomdp m = domains::tiger();
    RolloutConfig c;
    c.episodes = 1;
    const ValueEstimate e = estimate_value(m, uniform_policy(m, 1), c);
    CHECK(std::isinf(e.standard_error));
    CHECK(std::isfinite(e.mean));
}

TEST_CASE("truncation horizon is the smallest sufficient one") {
    for (const char* name : {"broadcast", "recycling", "tiger"}) {
        const DecPomdp m = domains::by_name(name);
        for (double tol : {1e-2, 1e-4, 1e-6}) {
            const std::size_t h = truncation_horizon(m, tol);
            CHECK(truncation_bound(m, h) <= tol);
            if (h > 1) CHECK(truncation_bound(m, h - 1) > tol);
        }
    }
}

TEST_CASE("estimates are deterministic and independent of the worker count") {
    const DecPomdp m = domains::recycling();
    const JointPolicy p = random_stochastic(m, 2, 2, 1);
    RolloutConfig c;
    c.episodes = 3000;
    c.seed = 17;
    const ValueEstimate a = estimate_value(m, p, c);
    c.threads = 4;
    const ValueEstimate b = estimate_value(m, p, c);
    CHECK(a.mean == b.mean);
    CHECK(a.standard_error == b.standard_error);
    c.seed = 18;
    CHECK(estimate_value(m, p, c).mean != a.mean);
}

TEST_CASE("episode returns match the trace") {
    const DecPomdp m = domains::tiger();
    const JointPolicy p = random_stochastic(m, 2, 1, 4);
    const EpisodeTrace t = run_episode(m, p, 5, 0, 50);
    REQUIRE(t.states.size() == 50);
    double total = 0.0, discount = 1.0;
    for (std::size_t k = 0; k < 50; ++k) {
        const std::size_t a = m.joint_actions().flatten(std::vector<std::size_t>{t.actions[0][k], t.actions[1][k]});
        total += discount * m.reward(t.states[k], a);
        discount *= m.discount();
    }
    CHECK(t.discounted_return == doctest::Approx(total).epsilon(1e-12));
    for (const auto& draws : t.agent_draws) CHECK(draws.size() == 100);
}

TEST_CASE("corrupting other agents' nodes leaves an agent's stream unchanged") {
    const DecPomdp m = domains::broadcast();
    const JointPolicy p = random_stochastic(m, 3, 2, 6);
    const EpisodeTrace base = run_episode(m, p, 9, 3, 80);
    const NodeOverride scramble = [](std::size_t agent, std::size_t t, std::size_t node) {
        return agent == 1 ? (node + t) % 3 : node;
    };
    const EpisodeTrace hit = run_episode(m, p, 9, 3, 80, scramble);
    CHECK(hit.agent_draws[0] == base.agent_draws[0]);
    CHECK(hit.nodes[1] != base.nodes[1]);
}

TEST_CASE("a one-state device reproduces the no-device streams") {
    const DecPomdp m = domains::recycling();
    const JointPolicy p = random_stochastic(m, 2, 1, 2);
    const JointPolicy d = attach_trivial_device(p);
    for (std::size_t e = 0; e < 5; ++e) {
        const EpisodeTrace a = run_episode(m, p, 1, e, 60), b = run_episode(m, d, 1, e, 60);
        CHECK(a.states == b.states);
        CHECK(a.actions == b.actions);
        CHECK(a.nodes == b.nodes);
        CHECK(a.agent_draws == b.agent_draws);
        CHECK(a.discounted_return == b.discounted_return);
    }
}

TEST_CASE("device states follow the device chain") {
    const DecPomdp m = domains::tiger();
    JointPolicy p = random_stochastic(m, 1, 2, 3);
    p.device->row(0)[0] = 0.0;
    p.device->row(0)[1] = 1.0;
    p.device->row(1)[0] = 1.0;
    p.device->row(1)[1] = 0.0;
    const EpisodeTrace t = run_episode(m, p, 0, 0, 10);
    for (std::size_t k = 0; k < 10; ++k) CHECK(t.device_states[k] == k % 2);
}

TEST_CASE("local samplers use inverse-CDF draws") {
    Fsc f(2, 3, 1);
    f.action_row(0, 0)[0] = 0.2;
    f.action_row(0, 0)[1] = 0.0;
    f.action_row(0, 0)[2] = 0.8;
    CHECK(sample_action(f, 0, 0, 0.1) == 0);
    CHECK(sample_action(f, 0, 0, 0.2) == 2);
    CHECK(sample_action(f, 0, 0, 0.999999) == 2);
    f.transition_row(0, 0, 2, 0)[1] = 1.0;
    CHECK(sample_next_node(f, 0, 2, 0, 0, 0.5) == 1);
}

TEST_CASE("pairwise summation is exact on integers and split invariant") {
    std::vector<double> v(1000);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = static_cast<double>(k);
    CHECK(pairwise_sum(v) == 499500.0);
    std::vector<double> tiny(1 << 16, 0.1);
    CHECK(std::abs(pairwise_sum(tiny) - 6553.6) <= 1e-9);
}
