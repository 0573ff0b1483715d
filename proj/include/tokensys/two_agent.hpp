#pragma once

#include <array>
#include <optional>

#include <json.hpp>

namespace tokensys {

/// Closed-form steady state of the two-agent chain.
///
/// tail(M) = P(|s_i| > M) = c1 x^M + c2 y^M for either agent, and
/// expected_return = 1 / pi00 is the mean time between visits to (0, 0).
/// When `stable` is false the remaining fields are left at zero.
struct TwoAgentSolution {
    bool stable = false;
    double pi00 = 0.0;
    double x = 0.0, y = 0.0;
    double c1 = 0.0, c2 = 0.0;
    double expected_return = 0.0;
    double decay_a = 0.0;

    double tail(int M) const;
    // Stationary mass of agent 1 holding exactly +a tokens (a > 0) or -a tokens.
    double mass_positive(int a) const;
    double mass_negative(int a) const;
};

using Pair = std::array<double, 2>;

TwoAgentSolution solve(const Pair& p, const Pair& q, int d);

// Two available agents with probability beta, one otherwise.
TwoAgentSolution solve_intermediate(const Pair& p, const Pair& q, double beta);

// Smallest a with a^M >= c1 x^M + c2 y^M for every M >= 1. Since c1 + c2 < 1
// this is max(x, y).
double decay_constant(const TwoAgentSolution& sol);

// Smallest grid point a = k * step satisfying the inequality for M = 1..M_cap.
double decay_constant_grid(const TwoAgentSolution& sol, int M_cap = 200, double step = 1e-4);

nlohmann::json to_json(const TwoAgentSolution& sol, int M_max);

}  // namespace tokensys
