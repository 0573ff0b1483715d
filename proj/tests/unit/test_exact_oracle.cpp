#include <doctest.h>

#include <cmath>
#include <numeric>

#include "reference.hpp"
#include "tokensys/error.hpp"
#include "tokensys/exact_oracle.hpp"

using namespace tokensys;

namespace {

std::size_t brute_count(std::size_t n, Tokens B) {
    std::size_t count = 0;
    std::vector<Tokens> s(n, -B);
    while (true) {
        if (std::accumulate(s.begin(), s.end(), Tokens{0}) == 0) ++count;
        std::size_t k = 0;
        while (k < n && s[k] == B) s[k++] = -B;
        if (k == n) return count;
        ++s[k];
    }
}

}  // namespace

TEST_CASE("provider law for a small symmetric state") {
    const auto cfg = SystemConfig::symmetric(3, 2);
    const std::vector<Tokens> s{-1, 0, 1};
    const auto law = provider_law(s, cfg);
    CHECK(law[0] == doctest::Approx(5.0 / 9.0));
    CHECK(law[1] == doctest::Approx(3.0 / 9.0));
    CHECK(law[2] == doctest::Approx(1.0 / 9.0));
}

TEST_CASE("provider law splits ties over distinct agents") {
    const auto cfg = SystemConfig::symmetric(2, 3);
    const std::vector<Tokens> s{0, 0};
    const auto law = provider_law(s, cfg);
    CHECK(law[0] == doctest::Approx(0.5));
}

TEST_CASE("one-step law is a distribution over zero-sum neighbours") {
    const auto cfg = SystemConfig::symmetric(4, 2);
    const std::vector<Tokens> s{2, -1, 0, -1};
    const auto law = one_step_law(s, cfg);
    double total = 0.0;
    for (const auto& [next, prob] : law) {
        total += prob;
        CHECK(std::accumulate(next.begin(), next.end(), Tokens{0}) == 0);
        int moved = 0;
        for (std::size_t i = 0; i < 4; ++i) moved += std::abs(next[i] - s[i]);
        CHECK((moved == 0 || moved == 2));
    }
    CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("truncated chain is row-stochastic with the right state count") {
    for (auto [n, B] : {std::pair<std::size_t, Tokens>{2, 5}, {3, 4}, {4, 3}}) {
        const TruncatedChain chain(SystemConfig::symmetric(n, 2), B);
        CHECK(chain.size() == brute_count(n, B));
        CHECK(count_box_states(n, B) == brute_count(n, B));
        CHECK(chain.max_row_defect() < 1e-12);
        CHECK(chain.min_entry() >= 0.0);
        for (std::size_t k = 0; k < chain.size(); ++k) CHECK(chain.index_of(chain.state(k)) == k);
    }
}

TEST_CASE("two-agent stationary tails agree with the hand-solved walk") {
    for (auto [p1, q1] : {std::pair{0.5, 0.5}, {0.6, 0.55}, {0.45, 0.6}}) {
        auto cfg = SystemConfig::two_agent(p1, q1, 2);
        const TruncatedChain chain(cfg, 40);
        const auto st = stationary(chain);
        CHECK(st.residual < 1e-12);
        const reference::TwoAgentWalk walk{p1, q1, 2, -1.0, 40};
        for (int M = 0; M <= 20; ++M) CHECK(tail_probability(chain, st.pi, 0, M) == doctest::Approx(walk.tail(M)).epsilon(1e-9));
    }
}

TEST_CASE("oracle handles d = 3 and the beta variant") {
    const TruncatedChain chain3(SystemConfig::two_agent(0.55, 0.6, 3), 30);
    const auto s3 = stationary(chain3);
    const reference::TwoAgentWalk walk3{0.55, 0.6, 3, -1.0, 30};
    CHECK(tail_probability(chain3, s3.pi, 0, 2) == doctest::Approx(walk3.tail(2)).epsilon(1e-9));

    auto cfg = SystemConfig::symmetric(2, 2);
    cfg.beta = 0.5;
    const TruncatedChain chainb(cfg, 40);
    const auto sb = stationary(chainb);
    const reference::TwoAgentWalk walkb{0.5, 0.5, 2, 0.5, 40};
    CHECK(tail_probability(chainb, sb.pi, 0, 1) == doctest::Approx(walkb.tail(1)).epsilon(1e-9));
}

TEST_CASE("direct and power solvers agree") {
    const TruncatedChain chain(SystemConfig::symmetric(3, 2), 6);
    StationaryOptions direct, power;
    direct.method = StationaryMethod::Direct;
    power.method = StationaryMethod::Power;
    power.tolerance = 1e-13;
    const auto a = stationary(chain, direct);
    const auto b = stationary(chain, power);
    CHECK(b.method == StationaryMethod::Power);
    double diff = 0.0;
    for (std::size_t k = 0; k < a.pi.size(); ++k) diff = std::max(diff, std::abs(a.pi[k] - b.pi[k]));
    CHECK(diff < 1e-9);
}

TEST_CASE("expected return time to the origin of the symmetric pair is 3") {
    const TruncatedChain chain(SystemConfig::symmetric(2, 2), 40);
    const auto st = stationary(chain);
    const std::vector<Tokens> zero{0, 0};
    CHECK(expected_return_time(chain, st.pi, zero) == doctest::Approx(3.0).epsilon(1e-10));
    const std::vector<Tokens> outside{50, -50};
    CHECK_THROWS_AS(expected_return_time(chain, st.pi, outside), ValidationError);
}

TEST_CASE("feasibility guards") {
    CHECK_THROWS_AS(TruncatedChain(SystemConfig::symmetric(8, 2), 40), InfeasibleError);
    const auto big = SystemConfig::symmetric(1001, 2);
    std::vector<Tokens> s(1001, 0);
    CHECK_THROWS_AS(provider_law(s, big), InfeasibleError);
}
