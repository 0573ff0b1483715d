#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tokensys/config.hpp"
#include "tokensys/rng.hpp"

namespace tokensys {

using Tokens = std::int64_t;

/// Token balances s^t (zero-sum) and the period index t.
struct TokenState {
    std::vector<Tokens> s;
    std::uint64_t t = 0;

    static TokenState zero(std::size_t n) { return TokenState{std::vector<Tokens>(n, 0), 0}; }

    bool is_zero() const;
    Tokens sum() const;
};

struct StepOutcome {
    std::size_t requester = 0;
    std::vector<std::size_t> available;  // ordered draws, duplicates kept
    std::size_t provider = 0;
    bool transferred = false;
};

/// Draws from a categorical distribution with one uniform variate (inverse CDF).
class Categorical {
public:
    Categorical() = default;
    explicit Categorical(std::span<const double> weights);

    std::size_t sample(Rng& rng) const { return lookup(rng.uniform()); }
    std::size_t lookup(double u) const;
    std::size_t size() const { return cdf_.size(); }

private:
    std::vector<double> cdf_;
};

/// Provider choice among an availability multiset.
///
/// MinToken picks uniformly among the *distinct* agents attaining the minimum
/// balance (an agent drawn twice is one candidate) and spends a tie-break
/// draw only when there are two or more such agents. Uniform picks one entry
/// of the multiset, spending a draw only when the multiset has two or more
/// entries.
std::size_t select_provider(std::span<const Tokens> s, std::span<const std::size_t> available, Rule rule, Rng& rng);

/// One token system (n, P, Q, d) with its samplers prepared.
///
/// RNG draw order per period is fixed: requester, then the Bernoulli(beta)
/// availability-size draw when beta is set, then the availability draws,
/// then at most one tie-break draw.
class TokenSystem {
public:
    explicit TokenSystem(SystemConfig config);

    const SystemConfig& config() const { return config_; }
    std::size_t size() const { return config_.n; }

    std::size_t sample_requester(Rng& rng) const { return requester_.sample(rng); }

    // Fills `out` with the period's ordered availability draws.
    void sample_available(Rng& rng, std::vector<std::size_t>& out) const;
    std::vector<std::size_t> sample_available(Rng& rng) const;

    // Advances `state` by one period in place and records what happened.
    void step(TokenState& state, Rng& rng, StepOutcome& outcome) const;
    StepOutcome step(TokenState& state, Rng& rng) const;

    // True when the configuration can never be stable (d = 1 without beta).
    bool known_unstable() const { return config_.d == 1 && !config_.beta; }

private:
    SystemConfig config_;
    Categorical requester_;
    Categorical availability_;
};

// Applies a requester -> provider transfer (no-op when they coincide).
inline void apply_transfer(TokenState& state, std::size_t requester, std::size_t provider) {
    if (requester != provider) {
        --state.s[requester];
        ++state.s[provider];
    }
    ++state.t;
}

}  // namespace tokensys
