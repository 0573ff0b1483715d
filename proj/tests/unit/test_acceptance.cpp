#include <doctest.h>

#include "tokensys/acceptance.hpp"

using namespace tokensys;

TEST_CASE("acceptance runner selects criteria and formats lines") {
    AcceptanceOptions opts;
    opts.profile = Profile::Quick;
    opts.only = {3, 11};
    int seen = 0;
    opts.on_result = [&](const CriterionResult&) { ++seen; };
    const auto results = run_acceptance(opts);
    REQUIRE(results.size() == 2);
    CHECK(seen == 2);
    CHECK(results[0].id == 3);
    CHECK(results[1].id == 11);
    CHECK(results[0].passed);
    CHECK(format_line(results[0]).rfind("PASS", 0) == 0);
    CHECK(to_json(results[1])["id"] == 11);
    CHECK(acceptance_criterion_count() == 13);
}
