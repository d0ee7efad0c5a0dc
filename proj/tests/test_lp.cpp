#include "decfsc/lp.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace decfsc;

TEST_CASE("unit box maximum") {
    LpProblem lp;
    lp.objective = {1.0, 1.0};
    lp.inequality_lhs = {{1.0, 0.0}, {0.0, 1.0}};
    lp.inequality_rhs = {1.0, 1.0};
    const LpResult r = solve_lp(lp);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.value == doctest::Approx(2.0));
    CHECK(r.x[0] == doctest::Approx(1.0));
    CHECK(r.x[1] == doctest::Approx(1.0));
}

TEST_CASE("infeasible and unbounded are distinct markers") {
    LpProblem infeasible;
    infeasible.objective = {1.0};
    infeasible.inequality_lhs = {{1.0}};
    infeasible.inequality_rhs = {-1.0};
    CHECK(solve_lp(infeasible).status == LpStatus::infeasible);

    LpProblem unbounded;
    unbounded.objective = {1.0, 0.0};
    unbounded.inequality_lhs = {{-1.0, 1.0}};
    unbounded.inequality_rhs = {1.0};
    CHECK(solve_lp(unbounded).status == LpStatus::unbounded);
}

TEST_CASE("degenerate cycling example terminates at the optimum") {
    LpProblem lp;
    lp.objective = {10.0, -57.0, -9.0, -24.0};
    lp.inequality_lhs = {{0.5, -5.5, -2.5, 9.0}, {0.5, -1.5, -0.5, 1.0}, {1.0, 0.0, 0.0, 0.0}};
    lp.inequality_rhs = {0.0, 0.0, 1.0};
    const LpResult r = solve_lp(lp);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));
    double oracle = 0.0;
    lp.upper = {kInfinity, 10.0, 10.0, 10.0};  // bounded copy for the enumeration oracle
    lp.lower = {0.0, 0.0, 0.0, 0.0};
    REQUIRE(testing::vertex_enumeration(lp, oracle));
    CHECK(oracle == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("free variables and equalities") {
    // max -|x| written as max -t with t >= x, t >= -x, x = -3 free.
    LpProblem lp;
    lp.objective = {0.0, -1.0};
    lp.inequality_lhs = {{1.0, -1.0}, {-1.0, -1.0}};
    lp.inequality_rhs = {0.0, 0.0};
    lp.equality_lhs = {{1.0, 0.0}};
    lp.equality_rhs = {-3.0};
    lp.lower = {-kInfinity, -kInfinity};
    lp.upper = {kInfinity, kInfinity};
    const LpResult r = solve_lp(lp);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.value == doctest::Approx(-3.0));
    CHECK(r.x[0] == doctest::Approx(-3.0));
}

TEST_CASE("random LPs agree with vertex enumeration") {
    std::mt19937_64 rng(2024);
    std::size_t optimal = 0, infeasible = 0;
    for (int t = 0; t < 50; ++t) {
        const LpProblem lp = testing::random_lp(rng);
        double best = 0.0;
        const bool feasible = testing::vertex_enumeration(lp, best);
        const LpResult r = solve_lp(lp);
        if (!feasible) {
            CHECK(r.status == LpStatus::infeasible);
            ++infeasible;
            continue;
        }
        REQUIRE(r.status == LpStatus::optimal);
        ++optimal;
        CHECK(std::abs(r.value - best) <= 1e-7);
        CHECK(max_violation(lp, r.x) <= 1e-8);
        double value = 0.0;
        for (std::size_t j = 0; j < r.x.size(); ++j) value += lp.objective[j] * r.x[j];
        CHECK(value == doctest::Approx(r.value).epsilon(1e-10));
    }
    CHECK(optimal >= 25);
    MESSAGE("optimal " << optimal << ", infeasible " << infeasible);
}

TEST_CASE("max_violation measures rows and bounds") {
    LpProblem lp;
    lp.objective = {1.0, 1.0};
    lp.inequality_lhs = {{1.0, 1.0}};
    lp.inequality_rhs = {1.0};
    lp.equality_lhs = {{1.0, -1.0}};
    lp.equality_rhs = {0.0};
    CHECK(max_violation(lp, {0.5, 0.5}) == doctest::Approx(0.0));
    CHECK(max_violation(lp, {1.0, 0.5}) == doctest::Approx(0.5));
    CHECK(max_violation(lp, {-0.25, -0.25}) == doctest::Approx(0.25));
}

TEST_CASE("malformed problems throw") {
    LpProblem lp;
    lp.objective = {1.0, 1.0};
    lp.inequality_lhs = {{1.0}};
    lp.inequality_rhs = {1.0};
    CHECK_THROWS_AS(solve_lp(lp), std::invalid_argument);
    lp.inequality_lhs = {{1.0, std::nan("")}};
    CHECK_THROWS_AS(solve_lp(lp), std::invalid_argument);
}
