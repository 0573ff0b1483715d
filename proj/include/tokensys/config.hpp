#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace tokensys {

enum class Rule { MinToken, Uniform };

std::string_view to_string(Rule rule);
Rule parse_rule(std::string_view text);

/// The token system (n, P, Q, d) plus the provider-selection rule, the
/// optional intermediate-availability probability and the RNG seed.
///
/// When `beta` is set, every period independently uses two available
/// agents with probability beta and a single one otherwise; `d` must then be 2.
struct SystemConfig {
    std::size_t n = 2;
    std::vector<double> p;
    std::vector<double> q;
    int d = 2;
    Rule rule = Rule::MinToken;
    std::optional<double> beta;
    std::uint64_t seed = 1;

    // Throws ValidationError describing the first violated constraint.
    void validate() const;

    bool is_symmetric() const;

    static SystemConfig symmetric(std::size_t n, int d, std::uint64_t seed = 1, Rule rule = Rule::MinToken);
    static SystemConfig two_agent(double p1, double q1, int d, std::uint64_t seed = 1);
};

nlohmann::json to_json(const SystemConfig& config);

// Missing keys fall back to: d = 2, rule = min_token, seed = 1, and a uniform
// distribution for whichever of p / q is absent. The result is validated.
SystemConfig config_from_json(const nlohmann::json& doc);

}  // namespace tokensys
