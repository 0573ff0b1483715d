#include <doctest.h>

#include <sstream>

#include "tokensys/error.hpp"
#include "tokensys/kidney.hpp"

using namespace tokensys;
using namespace tokensys::kidney;

namespace {

// Pairs 0..k-1 each at their own hospital; O donors, O patients and zero
// PRA make every pair mutually compatible.
PairPopulation easy_population(std::size_t k) {
    PairPopulation pop;
    for (std::size_t i = 0; i < k; ++i) {
        pop.pairs.push_back({i, i, BloodType::O, BloodType::O, 0.0});
        pop.hospitals.push_back({i, 1});
    }
    return pop;
}

// Runs one day on a copy of `pool`, retrying seeds until `arrival` is drawn.
DayOutcome day_with_arrival(ExchangePool& pool, const PairPopulation& pop, Rule rule, std::size_t arrival,
                            std::uint64_t first_seed = 1) {
    for (std::uint64_t seed = first_seed;; ++seed) {
        auto copy = pool;
        auto streams = Streams::from_seed(seed);
        const CompatModel compat(pop, streams.crossmatch_key);
        DayOptions opts;
        opts.departure_probability = 0.0;
        const auto out = run_day(copy, pop, compat, rule, streams, opts);
        if (out.arrival == arrival) {
            pool = copy;
            return out;
        }
    }
}

}  // namespace

TEST_CASE("ABO compatibility table") {
    CHECK(abo_compatible(BloodType::O, BloodType::AB));
    CHECK(abo_compatible(BloodType::O, BloodType::O));
    CHECK(abo_compatible(BloodType::A, BloodType::AB));
    CHECK_FALSE(abo_compatible(BloodType::A, BloodType::B));
    CHECK_FALSE(abo_compatible(BloodType::A, BloodType::O));
    CHECK_FALSE(abo_compatible(BloodType::AB, BloodType::A));
    CHECK(abo_compatible(BloodType::B, BloodType::B));
    CHECK(parse_blood_type("AB") == BloodType::AB);
    CHECK_THROWS_AS(parse_blood_type("C"), ValidationError);
}

TEST_CASE("generated population respects its configuration") {
    PopulationConfig cfg;
    const auto pop = generate_population(cfg);
    CHECK(pop.pairs.size() == 1881);
    CHECK(pop.hospitals.size() == 84);
    std::size_t total = 0;
    for (const auto& h : pop.hospitals) {
        CHECK(h.pairs >= 1);
        CHECK(h.pairs <= 150);
        total += h.pairs;
    }
    CHECK(total == 1881);
    CHECK_NOTHROW(pop.validate());
    for (const auto& p : pop.pairs) {
        CHECK(p.pra >= 0.0);
        CHECK(p.pra <= 1.0);
    }
    const auto again = generate_population(cfg);
    CHECK(again.pairs[100].pra == pop.pairs[100].pra);
}

TEST_CASE("population config validation and json") {
    PopulationConfig cfg;
    cfg.pairs = 10;
    cfg.hospitals = 2;
    cfg.max_hospital_size = 4;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = PopulationConfig{};
    const auto back = population_config_from_json(to_json(cfg));
    CHECK(back.pairs == cfg.pairs);
    CHECK(back.pra.size() == 3);
    CHECK(back.donor_abo == cfg.donor_abo);
}

TEST_CASE("crossmatch outcomes are fixed for a key") {
    const auto pop = generate_population({});
    const CompatModel a(pop, 77), b(pop, 77);
    for (std::size_t u = 0; u < 50; ++u) {
        for (std::size_t v = 0; v < 50; ++v) CHECK(a.donor_to_patient(u, v) == b.donor_to_patient(u, v));
    }
}

TEST_CASE("an arrival into an empty pool waits") {
    const auto pop = easy_population(3);
    auto pool = ExchangePool::empty(3);
    auto streams = Streams::from_seed(1);
    const CompatModel compat(pop, streams.crossmatch_key);
    const auto out = run_day(pool, pop, compat, Rule::MinToken, streams, {0.0, nullptr});
    CHECK_FALSE(out.matched);
    CHECK(out.candidates == 0);
    CHECK(pool.waiting.size() == 1);
}

TEST_CASE("min-token picks the candidate hospital with fewest tokens") {
    const auto pop = easy_population(3);
    auto pool = ExchangePool::empty(3);
    pool.waiting = {{0, 0}, {1, 1}};
    pool.next_instance = 2;
    pool.ledger = {-2, 2, 0};
    const auto out = day_with_arrival(pool, pop, Rule::MinToken, 2);
    CHECK(out.matched);
    CHECK(out.candidates == 2);
    CHECK(out.provider_hospital == 0);
    CHECK(pool.ledger == std::vector<std::int64_t>{-1, 2, -1});
    CHECK(pool.ledger_sum() == 0);
    REQUIRE(pool.waiting.size() == 1);
    CHECK(pool.waiting[0].pair == 1);
}

TEST_CASE("uniform rule can pick either hospital") {
    const auto pop = easy_population(3);
    int richer = 0;
    for (std::uint64_t start = 1; start < 200; start += 3) {
        auto pool = ExchangePool::empty(3);
        pool.waiting = {{0, 0}, {1, 1}};
        pool.next_instance = 2;
        pool.ledger = {-2, 2, 0};
        richer += day_with_arrival(pool, pop, Rule::Uniform, 2, start).provider_hospital == 1;
    }
    CHECK(richer > 0);
}

TEST_CASE("intra-hospital matches leave the ledger unchanged") {
    PairPopulation pop;
    pop.pairs = {{0, 0, BloodType::O, BloodType::O, 0.0}, {1, 0, BloodType::O, BloodType::O, 0.0}};
    pop.hospitals = {{0, 2}};
    auto pool = ExchangePool::empty(1);
    pool.waiting = {{0, 0}};
    pool.next_instance = 1;
    const auto out = day_with_arrival(pool, pop, Rule::MinToken, 1);
    CHECK(out.matched);
    CHECK(pool.ledger == std::vector<std::int64_t>{0});
}

TEST_CASE("copies of the same pair never match each other") {
    const auto pop = easy_population(2);
    auto pool = ExchangePool::empty(2);
    pool.waiting = {{0, 0}};
    pool.next_instance = 1;
    const auto out = day_with_arrival(pool, pop, Rule::MinToken, 0);
    CHECK_FALSE(out.matched);
    CHECK(pool.waiting.size() == 2);
}

TEST_CASE("horizon keeps the ledger at zero sum and is deterministic") {
    PopulationConfig cfg;
    cfg.pairs = 300;
    cfg.hospitals = 12;
    const auto pop = generate_population(cfg);
    HorizonOptions opts;
    opts.days = 5000;
    opts.record_every = 500;
    std::ostringstream events;
    opts.events = &events;
    const auto a = run_horizon(pop, Rule::MinToken, opts);
    opts.events = nullptr;
    const auto b = run_horizon(pop, Rule::MinToken, opts);
    CHECK(a.final_ledger == b.final_ledger);
    CHECK(a.diagnostics.ledger_audits == 5000);
    CHECK(a.diagnostics.min_rule_audits == a.diagnostics.matched_arrivals);
    std::int64_t sum = 0;
    for (auto v : a.final_ledger) sum += v;
    CHECK(sum == 0);
    CHECK(a.days.size() == a.ledger.size());
    CHECK(events.str().rfind("day,event,pair,hospital,counterparty,tokens_after\n", 0) == 0);
    std::ostringstream csv;
    write_trajectory_csv(csv, a);
    CHECK(csv.str().rfind("day,hospital,tokens\n", 0) == 0);
    CHECK_THROWS_AS(run_horizon(pop, Rule::MinToken, HorizonOptions{0}), ValidationError);
}

TEST_CASE("matched seeds share arrivals across rules") {
    const auto pop = generate_population({});
    HorizonOptions opts;
    opts.days = 2000;
    const auto m = run_horizon(pop, Rule::MinToken, opts);
    const auto u = run_horizon(pop, Rule::Uniform, opts);
    CHECK(m.diagnostics.arrivals == u.diagnostics.arrivals);
    const auto cmp = compare_rules(pop, 3, 2000, 1, 2);
    CHECK(cmp.max_abs_min_token.size() == 3);
    CHECK(cmp.share() >= 0.0);
}
