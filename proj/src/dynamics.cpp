#include "tokensys/dynamics.hpp"

#include <algorithm>
#include <cassert>
#include <limits>
#include <numeric>

#include "tokensys/error.hpp"

namespace tokensys {

bool TokenState::is_zero() const {
    return std::all_of(s.begin(), s.end(), [](Tokens v) { return v == 0; });
}

Tokens TokenState::sum() const { return std::accumulate(s.begin(), s.end(), Tokens{0}); }

Categorical::Categorical(std::span<const double> weights) {
    cdf_.resize(weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        cdf_[i] = acc;
    }
    for (auto& c : cdf_) c /= acc;
    if (!cdf_.empty()) cdf_.back() = 1.0;
}

std::size_t Categorical::lookup(double u) const {
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    auto i = static_cast<std::size_t>(it - cdf_.begin());
    return std::min(i, cdf_.size() - 1);
}

std::size_t select_provider(std::span<const Tokens> s, std::span<const std::size_t> available, Rule rule, Rng& rng) {
    if (available.empty()) throw ContractViolation("select_provider: availability set is empty");
    if (rule == Rule::Uniform) {
        return available.size() == 1 ? available[0] : available[rng.index(available.size())];
    }

    // Distinct agents at the minimum, counted at their first occurrence in
    // draw order. d is small, so the quadratic scan is cheaper than a set.
    Tokens best = std::numeric_limits<Tokens>::max();
    for (std::size_t a : available) best = std::min(best, s[a]);

    auto first_tied = [&](std::size_t idx) {
        if (s[available[idx]] != best) return false;
        for (std::size_t k = 0; k < idx; ++k) {
            if (available[k] == available[idx]) return false;
        }
        return true;
    };

    std::size_t count = 0;
    std::size_t only = 0;
    for (std::size_t idx = 0; idx < available.size(); ++idx) {
        if (first_tied(idx)) {
            if (count == 0) only = available[idx];
            ++count;
        }
    }
    if (count == 1) return only;

    std::size_t pick = rng.index(count);
    for (std::size_t idx = 0; idx < available.size(); ++idx) {
        if (first_tied(idx) && pick-- == 0) return available[idx];
    }
    throw InvariantViolation("select_provider: tie-break index out of range");
}

TokenSystem::TokenSystem(SystemConfig config) : config_(std::move(config)) {
    config_.validate();
    requester_ = Categorical(config_.p);
    availability_ = Categorical(config_.q);
}

void TokenSystem::sample_available(Rng& rng, std::vector<std::size_t>& out) const {
    int draws = config_.d;
    if (config_.beta) draws = rng.bernoulli(*config_.beta) ? 2 : 1;
    out.resize(static_cast<std::size_t>(draws));
    for (auto& a : out) a = availability_.sample(rng);
}

std::vector<std::size_t> TokenSystem::sample_available(Rng& rng) const {
    std::vector<std::size_t> out;
    sample_available(rng, out);
    return out;
}

void TokenSystem::step(TokenState& state, Rng& rng, StepOutcome& outcome) const {
    outcome.requester = sample_requester(rng);
    sample_available(rng, outcome.available);
    outcome.provider = select_provider(state.s, outcome.available, config_.rule, rng);
    outcome.transferred = outcome.requester != outcome.provider;
    assert(state.s[outcome.requester] > std::numeric_limits<Tokens>::min());
    assert(state.s[outcome.provider] < std::numeric_limits<Tokens>::max());
    apply_transfer(state, outcome.requester, outcome.provider);
}

StepOutcome TokenSystem::step(TokenState& state, Rng& rng) const {
    StepOutcome outcome;
    step(state, rng, outcome);
    return outcome;
}

}  // namespace tokensys
