#include "tokensys/exact_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/SparseLU>

#include "tokensys/error.hpp"

namespace tokensys {

namespace {

// Adds the provider law for exactly `d` availability draws, scaled by `weight`.
void accumulate_provider_law(std::span<const Tokens> s, const SystemConfig& config, int d, double weight,
                             std::vector<double>& law) {
    const std::size_t n = config.n;
    if (std::pow(static_cast<double>(n), d) > kMaxAvailabilityTuples) {
        throw InfeasibleError("exact oracle: n^d = " + std::to_string(n) + "^" + std::to_string(d) +
                              " availability tuples exceeds the enumeration guard");
    }
    std::vector<std::size_t> tuple(static_cast<std::size_t>(d), 0);
    std::vector<std::size_t> tied;
    tied.reserve(tuple.size());
    while (true) {
        double prob = weight;
        for (std::size_t a : tuple) prob *= config.q[a];

        if (config.rule == Rule::Uniform) {
            for (std::size_t a : tuple) law[a] += prob / static_cast<double>(d);
        } else {
            Tokens best = std::numeric_limits<Tokens>::max();
            for (std::size_t a : tuple) best = std::min(best, s[a]);
            tied.clear();
            for (std::size_t a : tuple) {
                if (s[a] == best && std::find(tied.begin(), tied.end(), a) == tied.end()) tied.push_back(a);
            }
            for (std::size_t a : tied) law[a] += prob / static_cast<double>(tied.size());
        }

        std::size_t k = 0;
        while (k < tuple.size() && ++tuple[k] == n) tuple[k++] = 0;
        if (k == tuple.size()) break;
    }
}

}  // namespace

std::vector<double> provider_law(std::span<const Tokens> s, const SystemConfig& config) {
    config.validate();
    if (s.size() != config.n) throw ValidationError("provider_law: state has the wrong length");
    std::vector<double> law(config.n, 0.0);
    if (config.beta) {
        accumulate_provider_law(s, config, 2, *config.beta, law);
        if (*config.beta < 1.0) accumulate_provider_law(s, config, 1, 1.0 - *config.beta, law);
    } else {
        accumulate_provider_law(s, config, config.d, 1.0, law);
    }
    return law;
}

std::map<std::vector<Tokens>, double> one_step_law(std::span<const Tokens> s, const SystemConfig& config) {
    const auto law = provider_law(s, config);
    std::map<std::vector<Tokens>, double> out;
    std::vector<Tokens> next(s.begin(), s.end());
    for (std::size_t i = 0; i < config.n; ++i) {
        for (std::size_t j = 0; j < config.n; ++j) {
            const double w = config.p[i] * law[j];
            if (w == 0.0) continue;
            if (i != j) {
                --next[i];
                ++next[j];
            }
            out[next] += w;
            if (i != j) {
                ++next[i];
                --next[j];
            }
        }
    }
    return out;
}

std::size_t count_box_states(std::size_t n, Tokens B) {
    // ways[k] = number of partial vectors with running sum k - n*B.
    const auto width = static_cast<std::size_t>(2 * B + 1);
    std::vector<double> ways(1, 1.0);
    for (std::size_t a = 0; a < n; ++a) {
        std::vector<double> next(ways.size() + width - 1, 0.0);
        for (std::size_t k = 0; k < ways.size(); ++k) {
            if (ways[k] == 0.0) continue;
            for (std::size_t v = 0; v < width; ++v) next[k + v] += ways[k];
        }
        ways.swap(next);
    }
    const double total = ways[static_cast<std::size_t>(B) * n];
    return total > 1e18 ? std::numeric_limits<std::size_t>::max() : static_cast<std::size_t>(total);
}

TruncatedChain::TruncatedChain(const SystemConfig& config, Tokens B) : config_(config), n_(config.n), B_(B) {
    config_.validate();
    if (B < 0) throw ValidationError("truncation radius must be non-negative");
    const std::size_t expected = count_box_states(n_, B);
    if (expected > kMaxOracleStates) {
        throw InfeasibleError("exact oracle: " + std::to_string(expected) + " states exceeds the guard of " +
                              std::to_string(kMaxOracleStates));
    }
    const double lookup_size = std::pow(static_cast<double>(2 * B + 1), static_cast<double>(n_ - 1));
    if (lookup_size > 2e8) throw InfeasibleError("exact oracle: index table too large");

    lookup_.assign(static_cast<std::size_t>(lookup_size), -1);
    coords_.reserve(expected * n_);

    // Enumerate the first n-1 coordinates; the last one closes the sum.
    std::vector<Tokens> s(n_, -B);
    const std::size_t free = n_ - 1;
    while (true) {
        Tokens partial = 0;
        for (std::size_t a = 0; a < free; ++a) partial += s[a];
        s[free] = -partial;
        if (s[free] >= -B && s[free] <= B) {
            lookup_[encode(s)] = static_cast<std::int32_t>(count_);
            coords_.insert(coords_.end(), s.begin(), s.end());
            ++count_;
        }
        std::size_t k = 0;
        while (k < free && ++s[k] > B) s[k++] = -B;
        if (k == free) break;
    }
    if (count_ != expected) throw InvariantViolation("exact oracle: state enumeration count mismatch");

    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(count_ * std::min<std::size_t>(n_ * n_, 64));
    std::vector<Tokens> next(n_);
    for (std::size_t u = 0; u < count_; ++u) {
        const auto cur = state(u);
        const auto law = provider_law(cur, config_);
        double self = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) {
                const double w = config_.p[i] * law[j];
                if (w == 0.0) continue;
                if (i == j || cur[i] - 1 < -B || cur[j] + 1 > B) {
                    self += w;
                    continue;
                }
                std::copy(cur.begin(), cur.end(), next.begin());
                --next[i];
                ++next[j];
                entries.emplace_back(static_cast<int>(u), static_cast<int>(*index_of(next)), w);
            }
        }
        if (self > 0.0) entries.emplace_back(static_cast<int>(u), static_cast<int>(u), self);
    }
    P_.resize(static_cast<Eigen::Index>(count_), static_cast<Eigen::Index>(count_));
    P_.setFromTriplets(entries.begin(), entries.end());
    P_.makeCompressed();
}

std::size_t TruncatedChain::encode(std::span<const Tokens> s) const {
    std::size_t code = 0;
    const auto width = static_cast<std::size_t>(2 * B_ + 1);
    for (std::size_t a = 0; a + 1 < n_; ++a) code = code * width + static_cast<std::size_t>(s[a] + B_);
    return code;
}

std::optional<std::size_t> TruncatedChain::index_of(std::span<const Tokens> s) const {
    if (s.size() != n_) return std::nullopt;
    Tokens sum = 0;
    for (Tokens v : s) {
        if (v < -B_ || v > B_) return std::nullopt;
        sum += v;
    }
    if (sum != 0) return std::nullopt;
    const auto idx = lookup_[encode(s)];
    if (idx < 0) return std::nullopt;
    return static_cast<std::size_t>(idx);
}

double TruncatedChain::max_row_defect() const {
    double worst = 0.0;
    for (Eigen::Index r = 0; r < P_.outerSize(); ++r) {
        double sum = 0.0;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(P_, r); it; ++it) sum += it.value();
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    return worst;
}

double TruncatedChain::min_entry() const {
    double lo = 0.0;
    for (Eigen::Index k = 0; k < P_.nonZeros(); ++k) lo = std::min(lo, P_.valuePtr()[k]);
    return lo;
}

double stationary_residual(const TruncatedChain& chain, std::span<const double> pi) {
    const Eigen::Map<const Eigen::VectorXd> v(pi.data(), static_cast<Eigen::Index>(pi.size()));
    const Eigen::VectorXd moved = chain.matrix().transpose() * v;
    return (moved - v).cwiseAbs().maxCoeff();
}

namespace {

void normalize(Eigen::VectorXd& v) {
    for (auto& x : v) x = std::max(x, 0.0);
    v /= v.sum();
}

StationaryResult solve_direct(const TruncatedChain& chain) {
    // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    const auto N = static_cast<Eigen::Index>(chain.size());
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(chain.matrix().nonZeros()) + chain.size() * 2);
    const auto& P = chain.matrix();
    for (Eigen::Index r = 0; r < P.outerSize(); ++r) {
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(P, r); it; ++it) {
            if (it.col() != N - 1) entries.emplace_back(it.col(), it.row(), it.value());
        }
    }
    for (Eigen::Index i = 0; i < N - 1; ++i) entries.emplace_back(i, i, -1.0);
    for (Eigen::Index j = 0; j < N; ++j) entries.emplace_back(N - 1, j, 1.0);

    Eigen::SparseMatrix<double> A(N, N);
    A.setFromTriplets(entries.begin(), entries.end());
    A.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw ConvergenceError("stationary: sparse LU factorization failed", 1.0);

    Eigen::VectorXd b = Eigen::VectorXd::Zero(N);
    b(N - 1) = 1.0;
    Eigen::VectorXd x = lu.solve(b);
    // Two rounds of iterative refinement.
    for (int round = 0; round < 2; ++round) {
        const Eigen::VectorXd r = b - A * x;
        x += lu.solve(r);
    }
    normalize(x);
    StationaryResult out;
    out.pi.assign(x.data(), x.data() + N);
    out.residual = stationary_residual(chain, out.pi);
    out.method = StationaryMethod::Direct;
    return out;
}

// Power iteration pi <- pi P. Stops once the geometric extrapolation of the
// remaining change (Aitken-style, from the ratio of successive step sizes)
// and the residual are both below tolerance.
StationaryResult solve_power(const TruncatedChain& chain, const StationaryOptions& options) {
    const auto N = static_cast<Eigen::Index>(chain.size());
    const Eigen::SparseMatrix<double> PT = chain.matrix().transpose();
    Eigen::VectorXd v = Eigen::VectorXd::Constant(N, 1.0 / static_cast<double>(N));
    double prev_step = std::numeric_limits<double>::infinity();
    StationaryResult out;
    out.method = StationaryMethod::Power;
    for (std::size_t it = 1; it <= options.max_iterations; ++it) {
        Eigen::VectorXd next = PT * v;
        next /= next.sum();
        const double step = (next - v).cwiseAbs().maxCoeff();
        v.swap(next);
        const double ratio = step / prev_step;
        prev_step = step;
        out.iterations = it;
        if (ratio < 1.0) {
            const double remaining = step * ratio / (1.0 - ratio);
            if (remaining < options.tolerance && step < options.tolerance) break;
        }
    }
    normalize(v);
    out.pi.assign(v.data(), v.data() + N);
    out.residual = stationary_residual(chain, out.pi);
    return out;
}

}  // namespace

StationaryResult stationary(const TruncatedChain& chain, const StationaryOptions& options) {
    if (chain.size() == 1) return {{1.0}, 0.0, 0, StationaryMethod::Direct};
    StationaryResult result;
    switch (options.method) {
        case StationaryMethod::Direct: result = solve_direct(chain); break;
        case StationaryMethod::Power: result = solve_power(chain, options); break;
        case StationaryMethod::Auto:
            result = solve_direct(chain);
            if (result.residual >= options.tolerance) result = solve_power(chain, options);
            break;
    }
    if (!(result.residual < options.tolerance)) {
        throw ConvergenceError("stationary: residual target not met", result.residual);
    }
    return result;
}

std::vector<double> marginal(const TruncatedChain& chain, std::span<const double> pi, std::size_t agent) {
    if (agent >= chain.agents()) throw ValidationError("marginal: agent index out of range");
    const Tokens B = chain.radius();
    std::vector<double> out(static_cast<std::size_t>(2 * B + 1), 0.0);
    for (std::size_t u = 0; u < chain.size(); ++u) out[static_cast<std::size_t>(chain.state(u)[agent] + B)] += pi[u];
    return out;
}

double tail_probability(const TruncatedChain& chain, std::span<const double> pi, std::size_t agent, Tokens M) {
    const auto m = marginal(chain, pi, agent);
    const Tokens B = chain.radius();
    double tail = 0.0;
    for (Tokens v = -B; v <= B; ++v) {
        if (v > M || v < -M) tail += m[static_cast<std::size_t>(v + B)];
    }
    return tail;
}

double expected_return_time(const TruncatedChain& chain, std::span<const double> pi, std::span<const Tokens> state) {
    const auto idx = chain.index_of(state);
    if (!idx) throw ValidationError("expected_return_time: state lies outside the truncation box");
    return 1.0 / pi[*idx];
}

void write_marginals_csv(std::ostream& out, const TruncatedChain& chain, std::span<const double> pi) {
    out << "token_value,agent,probability\n";
    const auto old = out.precision(17);
    const Tokens B = chain.radius();
    for (std::size_t a = 0; a < chain.agents(); ++a) {
        const auto m = marginal(chain, pi, a);
        for (Tokens v = -B; v <= B; ++v) out << v << ',' << a << ',' << m[static_cast<std::size_t>(v + B)] << '\n';
    }
    out.precision(old);
}

}  // namespace tokensys
