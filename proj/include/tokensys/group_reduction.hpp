#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <boost/rational.hpp>
#include <json.hpp>

#include "tokensys/dynamics.hpp"

namespace tokensys {

using Rational = boost::rational<std::int64_t>;

// Accepts "3/10", "0.3", "3" and "3e-1"-free plain decimals. Exact.
Rational parse_rational(std::string_view text);
std::vector<Rational> parse_rational_list(std::string_view csv);
std::string to_string(const Rational& r);

/// A rational system with p = q, expanded to N symmetric agents split into
/// groups of sizes g_i proportional to p_i.
struct GroupedSystem {
    std::vector<Rational> p;
    std::vector<std::int64_t> g;
    std::int64_t N = 0;
    std::vector<std::size_t> member_of;  // symmetric agent -> group

    std::size_t groups() const { return g.size(); }
};

/// Smallest integer group sizes with g_i / g_j = p_i / p_j. Throws
/// ValidationError unless every p_i > 0, sum p = 1 exactly and q == p.
GroupedSystem reduce(const std::vector<Rational>& p, const std::vector<Rational>& q);
GroupedSystem reduce(const std::vector<Rational>& p);

struct GroupedOptions {
    std::uint64_t T = 100'000;
    std::uint64_t seed = 1;
    int d = 2;
    std::uint64_t record_every = 0;  // 0 keeps no trajectory
};

struct GroupedRun {
    std::uint64_t steps = 0;
    std::uint64_t audits = 0;
    std::uint64_t violations = 0;
    std::uint64_t cross_group_transfers = 0;
    std::vector<std::int64_t> final_groups;
    std::vector<std::uint64_t> trajectory_t;
    std::vector<std::vector<std::int64_t>> trajectory;  // group-level balances
    std::vector<std::uint64_t> zero_returns;            // gaps between all-zero group states
};

/// Runs the N-agent dynamics in which a transfer between different groups
/// moves one token from every member of the requester's group to every
/// member of the provider's group. After every step each group is audited
/// for equal member balances; a breach throws InvariantViolation.
GroupedRun simulate_grouped(const GroupedSystem& gs, const GroupedOptions& options);

nlohmann::json to_json(const GroupedSystem& gs);

}  // namespace tokensys
