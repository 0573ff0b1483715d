#include <doctest.h>

#include <array>
#include <cmath>

#include "tokensys/config.hpp"
#include "tokensys/dynamics.hpp"
#include "tokensys/error.hpp"

using namespace tokensys;

TEST_CASE("config validation") {
    auto c = SystemConfig::symmetric(3, 2);
    CHECK_NOTHROW(c.validate());
    c.p = {0.5, 0.5, 0.1};
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = SystemConfig::symmetric(3, 0);
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = SystemConfig::symmetric(1, 2);
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = SystemConfig::symmetric(2, 3);
    c.beta = 0.5;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.d = 2;
    c.beta = 1.5;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.beta.reset();
    CHECK_NOTHROW(c.validate());
    c.q = {1.0, 0.0};
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("config JSON round trip and defaults") {
    const auto c = config_from_json({{"n", 3}, {"p", {0.2, 0.3, 0.5}}});
    CHECK(c.d == 2);
    CHECK(c.rule == Rule::MinToken);
    CHECK(c.q[0] == doctest::Approx(1.0 / 3.0));
    const auto back = config_from_json(to_json(c));
    CHECK(back.p == c.p);
    CHECK(back.q == c.q);
    CHECK_THROWS_AS(config_from_json({{"n", 2}, {"rule", "greedy"}}), ValidationError);
}

TEST_CASE("min-token picks the unique poorest available agent") {
    Rng rng(1);
    const std::vector<Tokens> s{3, -2, 0};
    const std::vector<std::size_t> avail{0, 2, 1};
    for (int i = 0; i < 20; ++i) CHECK(select_provider(s, avail, Rule::MinToken, rng) == 1);
}

TEST_CASE("min-token ties are broken over distinct agents") {
    // Agent 0 drawn twice and agent 1 once, both at the minimum: each should win half the time.
    const std::vector<Tokens> s{0, 0, 5};
    const std::vector<std::size_t> avail{0, 0, 1, 2};
    Rng rng(3);
    int zero = 0;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) zero += select_provider(s, avail, Rule::MinToken, rng) == 0;
    CHECK(static_cast<double>(zero) / trials == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("min-token with a single candidate consumes no randomness") {
    const std::vector<Tokens> s{0, 1};
    const std::vector<std::size_t> avail{0, 0};
    Rng a(11), b(11);
    select_provider(s, avail, Rule::MinToken, a);
    CHECK(a.next() == b.next());
}

TEST_CASE("uniform rule weights the multiset") {
    const std::vector<Tokens> s{0, 0};
    const std::vector<std::size_t> avail{0, 0, 1};
    Rng rng(5);
    int zero = 0;
    const int trials = 90000;
    for (int i = 0; i < trials; ++i) zero += select_provider(s, avail, Rule::Uniform, rng) == 0;
    CHECK(static_cast<double>(zero) / trials == doctest::Approx(2.0 / 3.0).epsilon(0.02));
}

TEST_CASE("empty availability is a contract violation") {
    Rng rng(1);
    const std::vector<Tokens> s{0, 0};
    CHECK_THROWS_AS(select_provider(s, std::vector<std::size_t>{}, Rule::MinToken, rng), ContractViolation);
}

TEST_CASE("categorical sampler matches its weights") {
    const std::array<double, 3> w{0.2, 0.5, 0.3};
    const Categorical cat(w);
    CHECK(cat.lookup(0.0) == 0);
    CHECK(cat.lookup(0.19) == 0);
    CHECK(cat.lookup(0.21) == 1);
    CHECK(cat.lookup(0.71) == 2);
    CHECK(cat.lookup(0.9999999) == 2);
}

TEST_CASE("steps conserve the zero sum and are reproducible") {
    auto cfg = SystemConfig::symmetric(5, 2, 9);
    const TokenSystem sys(cfg);
    auto a = TokenState::zero(5), b = TokenState::zero(5);
    Rng ra(9), rb(9);
    for (int t = 0; t < 10000; ++t) {
        const auto oa = sys.step(a, ra);
        sys.step(b, rb);
        REQUIRE(a.sum() == 0);
        REQUIRE(oa.available.size() == 2);
        if (oa.transferred) REQUIRE(oa.requester != oa.provider);
    }
    CHECK(a.s == b.s);
    CHECK(a.t == 10000);
}

TEST_CASE("provider of a min-token step is the poorest of the drawn agents") {
    const TokenSystem sys(SystemConfig::symmetric(6, 3, 2));
    auto st = TokenState::zero(6);
    Rng rng(2);
    for (int t = 0; t < 5000; ++t) {
        const auto before = st.s;
        const auto out = sys.step(st, rng);
        Tokens lowest = before[out.available[0]];
        for (auto a : out.available) lowest = std::min(lowest, before[a]);
        REQUIRE(before[out.provider] == lowest);
    }
}

TEST_CASE("beta variant draws one or two agents") {
    auto cfg = SystemConfig::symmetric(4, 2, 3);
    cfg.beta = 0.25;
    const TokenSystem sys(cfg);
    Rng rng(3);
    int two = 0;
    const int trials = 40000;
    for (int i = 0; i < trials; ++i) two += sys.sample_available(rng).size() == 2;
    CHECK(static_cast<double>(two) / trials == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("d = 1 is flagged as unstable") {
    CHECK(TokenSystem(SystemConfig::symmetric(3, 1)).known_unstable());
    CHECK_FALSE(TokenSystem(SystemConfig::symmetric(3, 2)).known_unstable());
}

TEST_CASE("transfer is a no-op when requester provides") {
    auto st = TokenState::zero(2);
    apply_transfer(st, 1, 1);
    CHECK(st.is_zero());
    apply_transfer(st, 0, 1);
    CHECK(st.s == std::vector<Tokens>{-1, 1});
    CHECK(st.t == 2);
}
