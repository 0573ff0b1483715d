#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "tokensys/config.hpp"
#include "tokensys/dynamics.hpp"

namespace tokensys {

// Hard guards for the brute-force oracle.
inline constexpr double kMaxAvailabilityTuples = 1e6;
inline constexpr std::size_t kMaxOracleStates = 2'000'000;

/// Exact probability that each agent is the provider in state `s`, found by
/// enumerating every ordered availability tuple. Throws InfeasibleError when
/// n^d exceeds the enumeration guard.
std::vector<double> provider_law(std::span<const Tokens> s, const SystemConfig& config);

/// Exact successor distribution of `s` over all requester x availability outcomes.
std::map<std::vector<Tokens>, double> one_step_law(std::span<const Tokens> s, const SystemConfig& config);

/// The chain restricted to the box {s : sum s = 0, |s_i| <= B}. Moves that
/// would leave the box are turned into self-loops, so rows stay stochastic.
class TruncatedChain {
public:
    TruncatedChain(const SystemConfig& config, Tokens B);

    std::size_t size() const { return count_; }
    std::size_t agents() const { return n_; }
    Tokens radius() const { return B_; }
    const SystemConfig& config() const { return config_; }

    std::span<const Tokens> state(std::size_t index) const {
        return {coords_.data() + index * n_, n_};
    }
    std::optional<std::size_t> index_of(std::span<const Tokens> s) const;

    const Eigen::SparseMatrix<double, Eigen::RowMajor>& matrix() const { return P_; }

    // Largest |row sum - 1| and most negative entry, for auditing.
    double max_row_defect() const;
    double min_entry() const;

private:
    std::size_t encode(std::span<const Tokens> s) const;

    SystemConfig config_;
    std::size_t n_;
    Tokens B_;
    std::size_t count_ = 0;
    std::vector<Tokens> coords_;
    std::vector<std::int32_t> lookup_;
    Eigen::SparseMatrix<double, Eigen::RowMajor> P_;
};

// Zero-sum lattice points in the box, counted without building the chain.
std::size_t count_box_states(std::size_t n, Tokens B);

enum class StationaryMethod { Auto, Direct, Power };

struct StationaryOptions {
    StationaryMethod method = StationaryMethod::Auto;
    double tolerance = 1e-12;
    std::size_t max_iterations = 2'000'000;
};

struct StationaryResult {
    std::vector<double> pi;
    double residual = 0.0;  // max_j |(pi P)_j - pi_j|
    std::size_t iterations = 0;
    StationaryMethod method = StationaryMethod::Direct;
};

/// Stationary distribution of the truncated chain. Throws ConvergenceError
/// when the residual target cannot be met.
StationaryResult stationary(const TruncatedChain& chain, const StationaryOptions& options = {});

double stationary_residual(const TruncatedChain& chain, std::span<const double> pi);

// P(s_agent = v) for v = -B..B, stored at offset v + B.
std::vector<double> marginal(const TruncatedChain& chain, std::span<const double> pi, std::size_t agent);

// P(|s_agent| > M) under pi.
double tail_probability(const TruncatedChain& chain, std::span<const double> pi, std::size_t agent, Tokens M);

/// Mean return time 1 / pi(state). Throws ValidationError for states outside the box.
double expected_return_time(const TruncatedChain& chain, std::span<const double> pi, std::span<const Tokens> state);

// CSV with header token_value,agent,probability.
void write_marginals_csv(std::ostream& out, const TruncatedChain& chain, std::span<const double> pi);

}  // namespace tokensys
