#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "tokensys/config.hpp"
#include "tokensys/dynamics.hpp"

namespace tokensys {

/// Visit counts over token values, stored densely around the values seen.
class Histogram {
public:
    void add(Tokens value, std::uint64_t count = 1);
    std::uint64_t count(Tokens value) const;
    std::uint64_t total() const { return total_; }
    Tokens min_value() const { return lo_; }
    Tokens max_value() const { return lo_ + static_cast<Tokens>(counts_.size()) - 1; }
    bool empty() const { return counts_.empty(); }

    // Fraction of visits with value in [a, b].
    double fraction_between(Tokens a, Tokens b) const;

    void merge(const Histogram& other);

private:
    Tokens lo_ = 0;
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

/// Occupancy statistics of one chain.
///
/// `histogram[a]` counts the states s^t, t in (burn_in, T], by the value of
/// s_a^t, so every per-agent histogram totals T - burn_in. The sampling
/// window is also cut into contiguous batches for batch-means errors.
/// `zero_returns` lists gaps between successive visits to the all-zero
/// vector over the whole run, starting from s^0 = 0.
struct SimStats {
    std::uint64_t T = 0;
    std::uint64_t burn_in = 0;
    std::vector<Histogram> histogram;
    std::vector<std::vector<Histogram>> batches;  // [batch][agent]
    std::vector<std::uint64_t> zero_returns;
    TokenState final_state;

    std::size_t agents() const { return histogram.size(); }
    std::uint64_t window() const { return T - burn_in; }
};

struct ChainOptions {
    std::uint64_t T = 20'000'000;
    std::uint64_t burn_in = 500'000;
    std::size_t batches = 20;
    bool record_zero_returns = true;
};

SimStats run_chain(const SystemConfig& config, const ChainOptions& options);
SimStats run_chain(const SystemConfig& config, std::uint64_t T, std::uint64_t burn_in);

// States of the chain at the requested (sorted) times, from one trajectory.
std::vector<TokenState> snapshots(const SystemConfig& config, std::span<const std::uint64_t> times);

/// Stationary tail estimates, indexed by M = 0..M_max.
///
/// p[M] estimates P(|s| <= M), q[M] estimates P(s <= M) and r[M] estimates
/// P(s >= -M), averaged over the selected agents. Standard errors come from
/// batch means of the agent-averaged series.
struct TailEstimates {
    int M_max = 0;
    std::vector<double> p, q, r;
    std::vector<double> stderr_p;
    std::vector<std::vector<double>> per_agent_p, per_agent_q, per_agent_r;
    std::vector<std::vector<double>> per_agent_stderr_p;

    double tail(int M) const { return 1.0 - p.at(static_cast<std::size_t>(M)); }
};

// Empty `agents` means all agents.
TailEstimates tails(const SimStats& stats, int M_max, std::span<const std::size_t> agents = {});

struct Estimate {
    double mean = 0.0;
    double stderr = 0.0;
};

// Batch-means estimate of P(s_agent = value).
Estimate value_probability(const SimStats& stats, std::size_t agent, Tokens value);

struct ZeroReturnSummary {
    std::size_t count = 0;
    double mean = 0.0;
    double stderr = 0.0;
    double first_half_mean = 0.0;
    // |first_half_mean - mean| / mean; small values indicate a stabilized mean.
    double drift = 0.0;
};

ZeroReturnSummary summarize_zero_returns(std::span<const std::uint64_t> gaps, std::size_t batches = 20);

nlohmann::json to_json(const ZeroReturnSummary& s);

struct SweepSpec {
    std::vector<std::size_t> n_values;
    int M_max = 4;
    int d = 2;
    std::uint64_t T = 20'000'000;
    std::uint64_t burn_in = 500'000;
    std::size_t seeds = 1;
    std::uint64_t base_seed = 1;
    std::size_t workers = 1;
};

struct SweepRow {
    std::size_t n;
    int d;
    int M;
    std::uint64_t seed;
    double p, q, r, stderr_p;
};

// Pairs (n, M) where p_{n',M} exceeds p_{n,M} by more than two combined
// standard errors for the next n' > n in the sweep. Observations only.
struct MonotonicityNote {
    int M;
    std::size_t n_from;
    std::size_t n_to;
    double p_from, p_to, combined_stderr;
};

struct SweepResult {
    std::vector<SweepRow> rows;  // sorted by (n, seed, M)
    std::vector<MonotonicityNote> increases;
};

SweepResult sweep_n(const SweepSpec& spec);

void write_sweep_csv(std::ostream& out, const SweepResult& result);

struct BoundRow {
    int M;
    double tail, bound, stderr, margin;
};

struct BoundReport {
    std::vector<BoundRow> rows;
    double worst_margin = 0.0;
    int worst_M = 0;
    bool passed = true;
};

/// Compares P(|s| > M) against 5/M + 3 stderr for M = 1..M_max.
BoundReport check_5_over_M(const TailEstimates& estimates, int M_max = -1);

nlohmann::json to_json(const TailEstimates& t);
nlohmann::json to_json(const BoundReport& r);

}  // namespace tokensys
