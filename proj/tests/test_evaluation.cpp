#include "decfsc/domains.hpp"
#include "decfsc/evaluation.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace decfsc;

namespace {

DecPomdp constant_reward_model(double r, double gamma) {
    DecPomdp m({"s"}, {{"a"}}, {{"o"}}, gamma);
    m.transition(0, 0, 0) = 1.0;
    m.observation(0, 0, 0) = 1.0;
    m.reward(0, 0) = r;
    m.set_start({1.0});
    return m;
}

/// Relabels agent 0's nodes by `perm` (old node q becomes perm[q]).
JointPolicy permute_agent0(const JointPolicy& p, const std::vector<std::size_t>& perm) {
    JointPolicy out = p;
    const Fsc& f = p.agents[0];
    Fsc g(f.num_nodes(), f.num_actions(), f.num_observations(), f.num_device_states(), perm[f.initial_node()]);
    for (std::size_t c = 0; c < f.num_device_states(); ++c)
        for (std::size_t q = 0; q < f.num_nodes(); ++q) {
            for (std::size_t a = 0; a < f.num_actions(); ++a) {
                g.action_row(c, perm[q])[a] = f.action_prob(c, q, a);
                for (std::size_t o = 0; o < f.num_observations(); ++o)
                    for (std::size_t q2 = 0; q2 < f.num_nodes(); ++q2)
                        g.transition_row(c, perm[q], a, o)[perm[q2]] = f.transition_prob(c, q, a, o, q2);
            }
        }
    out.agents[0] = g;
    return out;
}

}  // namespace

TEST_CASE("geometric series on a single state") {
    const DecPomdp m = constant_reward_model(1.0, 0.9);
    const JointPolicy p = uniform_policy(m, 1);
    const ValueTable v = evaluate(m, p);
    CHECK(v(0, 0) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(objective(m, p, v) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("zero discount gives the expected one-step reward") {
    DecPomdp m = testing::random_model(17);
    m.set_discount(0.0);
    const JointPolicy p = random_stochastic(m, 2, 1, 4);
    const ValueTable v = evaluate(m, p);
    const JointIndexer nodes = p.joint_nodes();
    const JointIndexer& ja = m.joint_actions();
    for (std::size_t q = 0; q < nodes.size(); ++q)
        for (std::size_t s = 0; s < m.num_states(); ++s) {
            const auto qd = nodes.unflatten(q);
            double expect = 0.0;
            for (std::size_t a = 0; a < ja.size(); ++a) {
                const auto ad = ja.unflatten(a);
                expect += p.agents[0].action_prob(0, qd[0], ad[0]) * p.agents[1].action_prob(0, qd[1], ad[1]) *
                          m.reward(s, a);
            }
            CHECK(v(q, s) == doctest::Approx(expect).epsilon(1e-12));
        }
}

TEST_CASE("evaluate matches value iteration on the product chain") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const DecPomdp m = testing::random_model(100 + seed);
        const std::size_t C = 1 + seed % 2;
        const JointPolicy p = random_stochastic(m, 2, C, seed);
        for (DeviceRecursion r : {DeviceRecursion::next_state, DeviceRecursion::printed}) {
            EvaluationOptions opts;
            opts.recursion = r;
            const ValueTable v = evaluate(m, p, opts);
            const auto oracle = testing::value_iteration(m, p, r);
            CHECK(testing::max_abs_diff(v.values(), oracle) <= 1e-6);
        }
    }
}

TEST_CASE("iterative fallback agrees with the dense solve") {
    const DecPomdp m = testing::random_model(5);
    const JointPolicy p = random_stochastic(m, 3, 2, 9);
    EvaluationOptions iterative;
    iterative.dense_limit = 0;
    const ValueTable dense = evaluate(m, p);
    const ValueTable backups = evaluate(m, p, iterative);
    CHECK(testing::max_abs_diff(dense.values(), backups.values()) <= 1e-8);
}

TEST_CASE("objective weights initial-node values by the start distribution") {
    DecPomdp m = domains::tiger();
    const JointPolicy p = random_stochastic(m, 2, 1, 3);
    const ValueTable v = evaluate(m, p);
    const std::size_t q0 = p.initial_joint_node();
    CHECK(objective(m, p, v) == doctest::Approx(0.5 * (v(q0, 0) + v(q0, 1))).epsilon(1e-12));
    m.set_start({0.0, 1.0});
    CHECK(objective(m, p, evaluate(m, p)) == doctest::Approx(v(q0, 1)).epsilon(1e-12));
}

TEST_CASE("bellman residual of evaluate output is tiny") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const DecPomdp m = testing::random_model(200 + seed);
        const JointPolicy p = random_stochastic(m, 2, 1 + seed % 3, seed);
        CHECK(bellman_residual(m, p, evaluate(m, p)) <= 1e-8);
    }
}

TEST_CASE("zero table under unit reward has residual one") {
    const DecPomdp m = constant_reward_model(1.0, 0.9);
    const JointPolicy p = uniform_policy(m, 2);
    const ValueTable zero(p.joint_nodes().size(), 1, 1);
    CHECK(bellman_residual(m, p, zero) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("perturbing one entry raises the residual by at least (1 - gamma) delta") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const DecPomdp m = testing::random_model(300 + seed);
        const JointPolicy p = random_stochastic(m, 2, 1, seed);
        ValueTable v = evaluate(m, p);
        const std::size_t k = seed % v.size();
        const double delta = 0.37;
        v.values()[k] += delta;
        CHECK(bellman_residual(m, p, v) >= (1.0 - m.discount()) * delta - 1e-9);
    }
}

TEST_CASE("mismatched value tables are rejected") {
    const DecPomdp m = domains::tiger();
    const JointPolicy p = uniform_policy(m, 2);
    const ValueTable wrong(3, 2, 1);
    CHECK_THROWS_AS(bellman_residual(m, p, wrong), ModelError);
    CHECK_THROWS_AS(objective(m, p, wrong), ModelError);
    CHECK_THROWS_AS(evaluate(domains::broadcast(), p), ModelError);
}

TEST_CASE("one-state device is equivalent to no device") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const DecPomdp m = testing::random_model(400 + seed);
        const JointPolicy with = random_stochastic(m, 2, 1, seed);
        const JointPolicy without = uncorrelate(attach_trivial_device(with));
        CHECK(testing::max_abs_diff(evaluate(m, attach_trivial_device(with)).values(),
                                    evaluate(m, without).values()) <= 1e-9);
    }
}

TEST_CASE("values stay within reward bounds over one minus gamma") {
    for (const char* name : {"broadcast", "recycling", "tiger"}) {
        const DecPomdp m = domains::by_name(name);
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const ValueTable v = evaluate(m, random_stochastic(m, 2, 1 + seed % 2, seed));
            for (double x : v.values()) {
                CHECK(x >= m.min_reward() / (1.0 - m.discount()) - 1e-9);
                CHECK(x <= m.max_reward() / (1.0 - m.discount()) + 1e-9);
            }
        }
    }
}

TEST_CASE("relabeling nodes permutes the table and keeps the objective") {
    const DecPomdp m = testing::random_model(55);
    const JointPolicy p = random_stochastic(m, 3, 1, 2);
    const std::vector<std::size_t> perm{2, 0, 1};
    const JointPolicy r = permute_agent0(p, perm);
    const ValueTable v = evaluate(m, p), w = evaluate(m, r);
    CHECK(objective(m, r, w) == doctest::Approx(objective(m, p, v)).epsilon(1e-12));
    const std::size_t q1 = p.agents[1].num_nodes();
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < q1; ++b)
            for (std::size_t s = 0; s < m.num_states(); ++s)
                CHECK(w(perm[a] * q1 + b, s) == doctest::Approx(v(a * q1 + b, s)).epsilon(1e-10));
}

TEST_CASE("analytic gradient matches central differences") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const DecPomdp m = testing::random_model(500 + seed);
        const JointPolicy p = random_stochastic(m, 1 + seed % 3, 1 + seed % 2, seed);
        const PolicyGradient g = gradient(m, p);
        const auto blocks = parameter_blocks(p);
        REQUIRE(g.blocks.size() == blocks.size());
        for (std::size_t b = 0; b < blocks.size(); ++b)
            for (std::size_t k = 0; k < blocks[b].values.size(); ++k) {
                const double fd = testing::finite_difference(m, p, b, k);
                CHECK(std::abs(g.blocks[b][k] - fd) <= std::max(1e-8, 1e-4 * std::abs(fd)));
            }
    }
}

TEST_CASE("unreachable node has zero gradient") {
    const DecPomdp m = domains::tiger();
    JointPolicy p = uniform_policy(m, 2);
    // Every transition returns to node 0, so node 1 is never occupied.
    for (Fsc& f : p.agents)
        for (std::size_t a = 0; a < f.num_actions(); ++a)
            for (std::size_t o = 0; o < f.num_observations(); ++o) {
                f.transition_row(0, 0, a, o)[0] = 1.0;
                f.transition_row(0, 0, a, o)[1] = 0.0;
            }
    const PolicyGradient g = gradient(m, p);
    const Fsc& f = p.agents[0];
    for (std::size_t a = 0; a < f.num_actions(); ++a) CHECK(std::abs(g.blocks[0][f.psi_offset(0, 1) + a]) <= 1e-10);
}

TEST_CASE("zero discount gradient is the marginal reward") {
    DecPomdp m = testing::random_model(77);
    m.set_discount(0.0);
    const JointPolicy p = random_stochastic(m, 1, 1, 1);
    const PolicyGradient g = gradient(m, p);
    const JointIndexer& ja = m.joint_actions();
    for (std::size_t a0 = 0; a0 < m.num_actions(0); ++a0) {
        double expect = 0.0;
        for (std::size_t s = 0; s < m.num_states(); ++s)
            for (std::size_t a1 = 0; a1 < m.num_actions(1); ++a1)
                expect += m.start()[s] * p.agents[1].action_prob(0, 0, a1) * m.reward(s, ja.flatten(std::vector<std::size_t>{a0, a1}));
        CHECK(g.blocks[0][a0] == doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("occupancy sums to the discounted horizon") {
    const DecPomdp m = domains::recycling();
    const JointPolicy p = random_stochastic(m, 2, 2, 8);
    const Sensitivity sens = Evaluator(m).sensitivity(p);
    double total = 0.0;
    for (double x : sens.occupancy.values()) total += x;
    CHECK(total == doctest::Approx(1.0 / (1.0 - m.discount())).epsilon(1e-10));
    CHECK(sens.objective == doctest::Approx(policy_value(m, p)).epsilon(1e-12));
}
