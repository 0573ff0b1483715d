#include <doctest.h>

#include <cmath>

#include "reference.hpp"
#include "tokensys/two_agent.hpp"

using namespace tokensys;

TEST_CASE("symmetric pair") {
    const auto sol = solve({0.5, 0.5}, {0.5, 0.5}, 2);
    REQUIRE(sol.stable);
    CHECK(sol.pi00 == doctest::Approx(1.0 / 3.0));
    CHECK(sol.expected_return == doctest::Approx(3.0));
    for (int M = 0; M <= 10; ++M) CHECK(sol.tail(M) == doctest::Approx((2.0 / 3.0) * std::pow(1.0 / 3.0, M)));
    CHECK(decay_constant(sol) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("asymmetric d = 2 matches the hand-solved walk") {
    for (auto [p1, q1] : {std::pair{0.6, 0.6}, {0.6, 0.55}, {0.7, 0.65}, {0.55, 0.45}, {0.45, 0.6}}) {
        const auto sol = solve({p1, 1 - p1}, {q1, 1 - q1}, 2);
        REQUIRE(sol.stable);
        const reference::TwoAgentWalk walk{p1, q1};
        for (int M = 0; M <= 30; ++M) CHECK(std::abs(sol.tail(M) - walk.tail(M)) < 1e-12);
        const auto pi = walk.stationary();
        CHECK(sol.pi00 == doctest::Approx(pi[400]).epsilon(1e-12));
        CHECK(sol.mass_positive(2) == doctest::Approx(pi[402]).epsilon(1e-10));
        CHECK(sol.mass_negative(3) == doctest::Approx(pi[397]).epsilon(1e-10));
    }
}

TEST_CASE("symmetric inputs with larger d match the walk") {
    const auto sol = solve({0.5, 0.5}, {0.5, 0.5}, 3);
    const reference::TwoAgentWalk walk{0.5, 0.5, 3};
    for (int M = 0; M <= 10; ++M) CHECK(std::abs(sol.tail(M) - walk.tail(M)) < 1e-12);
}

TEST_CASE("instability is reported, not a NaN") {
    // Agent 1 requests far more than it is ever available.
    const auto sol = solve({0.9, 0.1}, {0.1, 0.9}, 2);
    CHECK_FALSE(sol.stable);
    CHECK(sol.pi00 == 0.0);
    const auto j = to_json(sol, 5);
    CHECK(j["stable"] == false);
}

TEST_CASE("intermediate availability") {
    for (double beta : {0.25, 0.5, 0.75}) {
        const auto sol = solve_intermediate({0.5, 0.5}, {0.5, 0.5}, beta);
        const reference::TwoAgentWalk walk{0.5, 0.5, 2, beta};
        for (int M = 0; M <= 8; ++M) {
            CHECK(std::abs(sol.tail(M) - walk.tail(M)) < 1e-12);
            const double closed = (2.0 / (2.0 + beta)) * std::pow((2.0 - beta) / (2.0 + beta), M);
            CHECK(sol.tail(M) == doctest::Approx(closed));
        }
    }
    const auto one = solve_intermediate({0.6, 0.4}, {0.55, 0.45}, 1.0);
    const auto two = solve({0.6, 0.4}, {0.55, 0.45}, 2);
    CHECK(one.pi00 == doctest::Approx(two.pi00));
    const auto near = solve_intermediate({0.6, 0.4}, {0.55, 0.45}, 1.0 - 1e-9);
    CHECK(near.tail(3) == doctest::Approx(two.tail(3)).epsilon(1e-6));
}

TEST_CASE("decay constant bounds every tail") {
    for (auto [p1, q1] : {std::pair{0.6, 0.6}, {0.45, 0.6}, {0.5, 0.5}}) {
        const auto sol = solve({p1, 1 - p1}, {q1, 1 - q1}, 2);
        const double a = decay_constant(sol);
        for (int M = 1; M <= 200; ++M) CHECK(std::pow(a, M) >= sol.tail(M));
        const double grid = decay_constant_grid(sol, 200, 1e-4);
        CHECK(grid <= a + 1e-4);
        for (int M = 1; M <= 200; ++M) CHECK(std::pow(grid, M) >= sol.tail(M) * (1 - 1e-12));
    }
}

TEST_CASE("json output") {
    const auto j = to_json(solve({0.5, 0.5}, {0.5, 0.5}, 2), 3);
    CHECK(j["expected_return"].get<double>() == doctest::Approx(3.0));
    CHECK(j["tail"].size() == 4);
}
