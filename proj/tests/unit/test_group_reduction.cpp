#include <doctest.h>

#include "tokensys/error.hpp"
#include "tokensys/group_reduction.hpp"

using namespace tokensys;

TEST_CASE("rational parsing") {
    CHECK(parse_rational("3/10") == Rational(3, 10));
    CHECK(parse_rational("0.3") == Rational(3, 10));
    CHECK(parse_rational(" 2 ") == Rational(2));
    CHECK(parse_rational("0.125") == Rational(1, 8));
    CHECK_THROWS_AS(parse_rational("abc"), ValidationError);
    CHECK_THROWS_AS(parse_rational("1/0"), ValidationError);
    CHECK(parse_rational_list("1/2, 1/3,1/6").size() == 3);
    CHECK(to_string(Rational(6, 4)) == "3/2");
}

TEST_CASE("reduction examples") {
    auto gs = reduce(parse_rational_list("0.5,0.3,0.2"));
    CHECK(gs.g == std::vector<std::int64_t>{5, 3, 2});
    CHECK(gs.N == 10);
    CHECK(gs.member_of.size() == 10);
    CHECK(gs.member_of[4] == 0);
    CHECK(gs.member_of[5] == 1);
    CHECK(gs.member_of[9] == 2);

    gs = reduce(parse_rational_list("1/2,1/2"));
    CHECK(gs.g == std::vector<std::int64_t>{1, 1});

    gs = reduce(parse_rational_list("2/3,1/3"));
    CHECK(gs.g == std::vector<std::int64_t>{2, 1});
    CHECK(gs.N == 3);

    gs = reduce(parse_rational_list("1/4,1/4,1/2"));
    CHECK(gs.g == std::vector<std::int64_t>{1, 1, 2});
}

TEST_CASE("group ratios equal probability ratios exactly") {
    const auto p = parse_rational_list("1/7,2/7,4/7");
    const auto gs = reduce(p);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) CHECK(Rational(gs.g[i], gs.g[j]) == p[i] / p[j]);
    }
}

TEST_CASE("reduction rejects inputs outside the theorem") {
    CHECK_THROWS_AS(reduce(parse_rational_list("0.5,0.3,0.1")), ValidationError);
    CHECK_THROWS_AS(reduce(parse_rational_list("1,0")), ValidationError);
    CHECK_THROWS_AS(reduce(parse_rational_list("0.5,0.5"), parse_rational_list("0.4,0.6")), ValidationError);
    CHECK_NOTHROW(reduce(parse_rational_list("0.5,0.5"), parse_rational_list("1/2,1/2")));
}

TEST_CASE("grouped simulation keeps members in lockstep") {
    const auto gs = reduce(parse_rational_list("0.5,0.3,0.2"));
    GroupedOptions opts;
    opts.T = 20'000;
    opts.seed = 3;
    opts.record_every = 1000;
    const auto run = simulate_grouped(gs, opts);
    CHECK(run.audits == 20'000);
    CHECK(run.violations == 0);
    CHECK(run.cross_group_transfers > 0);
    CHECK(run.trajectory.size() == run.trajectory_t.size());
    std::int64_t sum = 0;
    for (auto v : run.final_groups) sum += v;
    CHECK(sum == 0);
    CHECK_FALSE(run.zero_returns.empty());
}

TEST_CASE("a single group never transfers") {
    const auto gs = reduce(parse_rational_list("1"));
    CHECK(gs.N == 1);
    GroupedOptions opts;
    opts.T = 1000;
    const auto run = simulate_grouped(gs, opts);
    CHECK(run.cross_group_transfers == 0);
    CHECK(run.final_groups == std::vector<std::int64_t>{0});
}

TEST_CASE("grouped json") {
    const auto j = to_json(reduce(parse_rational_list("0.5,0.3,0.2")));
    CHECK(j["N"] == 10);
    CHECK(j["groups"][1]["size"] == 3);
}
