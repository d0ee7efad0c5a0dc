#include "decfsc/decbpi.hpp"
#include "decfsc/domains.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace decfsc;

namespace {

DecPomdp two_action_toy() {
    DecPomdp m({"s0", "s1"}, {{"idle", "work"}}, {{"o"}}, 0.8);
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t a = 0; a < 2; ++a) {
            m.transition(s, a, 0) = 0.5;
            m.transition(s, a, 1) = 0.5;
            m.reward(s, a) = a == 1 ? 1.0 : 0.0;
            m.observation(a, s, 0) = 1.0;
        }
    m.set_start({1.0, 0.0});
    return m;
}

/// Entries of the table whose node for `agent` equals `node`.
std::vector<std::size_t> entries_with_node(const JointPolicy& p, const ValueTable& v, std::size_t agent,
                                           std::size_t node) {
    std::vector<std::size_t> out;
    const JointIndexer nodes = p.joint_nodes();
    for (std::size_t q = 0; q < v.joint_nodes(); ++q)
        if (nodes.digit(q, agent) == node)
            for (std::size_t s = 0; s < v.states(); ++s)
                for (std::size_t c = 0; c < v.device_states(); ++c) out.push_back(v.index(q, s, c));
    return out;
}

}  // namespace

TEST_CASE("strictly better action is found for a one-node controller") {
    const DecPomdp m = two_action_toy();
    JointPolicy p = testing::constant_policy(m, {0});
    const ValueTable v = evaluate(m, p);
    const NodeImprovement imp = improve_node(m, p, v, 0, 0);
    CHECK(imp.margin > 0.5);
    CHECK(imp.psi[1] == doctest::Approx(1.0));
    const double before = policy_value(m, p);
    apply_improvement(p, imp);
    CHECK(policy_value(m, p) > before + 0.5);
    CHECK(policy_value(m, p) == doctest::Approx(1.0 / (1.0 - m.discount())));
}

TEST_CASE("margin is the worst-case one-step lookahead gain") {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        const DecPomdp m = testing::random_model(600 + seed);
        const JointPolicy p = random_stochastic(m, 2, 1 + seed % 2, seed);
        const Evaluator ev(m);
        const ValueTable v = ev.evaluate(p);
        const std::size_t agent = seed % 2, node = (seed / 2) % 2;
        const NodeImprovement imp = improve_node(ev, p, v, agent, node);
        JointPolicy next = p;
        apply_improvement(next, imp);
        const ValueTable look = ev.backup(next, v);
        double worst = kInfinity;
        for (std::size_t k : entries_with_node(p, v, agent, node))
            worst = std::min(worst, look.values()[k] - v.values()[k]);
        CHECK(worst >= imp.margin - 1e-8);
        if (imp.margin > 1e-9) CHECK(worst == doctest::Approx(imp.margin).epsilon(1e-6));
        CHECK(validate(next, 1e-8).empty());
    }
}

TEST_CASE("accepted improvements raise values everywhere") {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        const DecPomdp m = testing::random_model(700 + seed);
        JointPolicy p = random_deterministic(m, 2, 1 + seed % 2, seed);
        const Evaluator ev(m);
        for (std::size_t agent = 0; agent < 2; ++agent)
            for (std::size_t node = 0; node < 2; ++node) {
                const ValueTable old = ev.evaluate(p);
                const NodeImprovement imp = improve_node(ev, p, old, agent, node);
                if (imp.margin <= 1e-9) continue;
                apply_improvement(p, imp);
                const ValueTable now = ev.evaluate(p);
                for (std::size_t k = 0; k < now.size(); ++k) CHECK(now.values()[k] >= old.values()[k] - 1e-9);
            }
    }
}

TEST_CASE("a converged policy is a fixed point") {
    const DecPomdp m = domains::tiger();
    BpiConfig c;
    const auto [policy, stats] = improve_policy(m, random_deterministic(m, 2, 1, 4), c);
    REQUIRE(stats.converged);
    const Evaluator ev(m);
    const ValueTable v = ev.evaluate(policy);
    for (std::size_t agent = 0; agent < 2; ++agent)
        for (std::size_t node = 0; node < 2; ++node)
            CHECK(improve_node(ev, policy, v, agent, node).margin <= c.epsilon_threshold);
    const auto [again, again_stats] = improve_policy(m, policy, c);
    CHECK(again == policy);
    CHECK(again_stats.iterations == 1);
    CHECK(again_stats.converged);
}

TEST_CASE("per-sweep objectives are non-decreasing") {
    for (const char* name : {"broadcast", "recycling", "tiger"}) {
        const DecPomdp m = domains::by_name(name);
        BpiConfig c;
        c.record_trace = true;
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            const auto [policy, stats] = improve_policy(m, random_deterministic(m, 2, 1 + seed % 2, seed), c);
            REQUIRE(stats.trace.size() == stats.iterations + 1);
            for (std::size_t k = 1; k < stats.trace.size(); ++k) CHECK(stats.trace[k] >= stats.trace[k - 1] - 1e-9);
            CHECK(validate(policy, 1e-8).empty());
            CHECK(stats.bellman_residual <= 1e-8);
        }
    }
}

TEST_CASE("bounded policy iteration does not beat the nonlinear program") {
    for (const char* name : {"broadcast", "recycling", "tiger"}) {
        const DecPomdp m = domains::by_name(name);
        for (std::size_t k = 1; k <= 2; ++k) {
            const double bpi = solve_bpi(m, k, 1, BpiConfig{}).second.best_objective;
            NlpConfig nc;
            const double nlp = solve_restarts(m, k, nc).best_objective;
            CHECK(bpi <= nlp + 0.05);
        }
    }
}

TEST_CASE("solve_bpi uses the same starts as the nonlinear program") {
    const DecPomdp m = domains::recycling();
    BpiConfig c;
    c.restarts = 3;
    c.seed = 9;
    const auto report = solve_bpi(m, 2, 1, c).second;
    REQUIRE(report.restarts.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(report.restarts[k].seed == 9 + k);
        CHECK(report.restarts[k].initial_objective ==
              doctest::Approx(policy_value(m, random_deterministic(m, 2, 1, 9 + k))));
    }
}

TEST_CASE("bad arguments are rejected") {
    const DecPomdp m = domains::tiger();
    const JointPolicy p = uniform_policy(m, 2);
    const ValueTable v = evaluate(m, p);
    CHECK_THROWS_AS(improve_node(m, p, v, 2, 0), std::out_of_range);
    CHECK_THROWS_AS(improve_node(m, p, v, 0, 2), std::out_of_range);
    CHECK_THROWS_AS(improve_node(m, p, ValueTable(1, 2, 1), 0, 0), ModelError);
    BpiConfig c;
    c.max_sweeps = 0;
    CHECK_THROWS_AS(check_config(c), std::invalid_argument);
    CHECK_THROWS_AS(solve_bpi(m, 0, 1, BpiConfig{}), std::invalid_argument);
}
