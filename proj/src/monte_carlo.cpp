#include "tokensys/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "tokensys/error.hpp"
#include "tokensys/parallel.hpp"

namespace tokensys {

void Histogram::add(Tokens value, std::uint64_t count) {
    if (count == 0) return;
    if (counts_.empty()) {
        lo_ = value;
        counts_.assign(1, 0);
    } else if (value < lo_) {
        counts_.insert(counts_.begin(), static_cast<std::size_t>(lo_ - value), 0);
        lo_ = value;
    } else if (value > max_value()) {
        counts_.resize(static_cast<std::size_t>(value - lo_) + 1, 0);
    }
    counts_[static_cast<std::size_t>(value - lo_)] += count;
    total_ += count;
}

std::uint64_t Histogram::count(Tokens value) const {
    if (counts_.empty() || value < lo_ || value > max_value()) return 0;
    return counts_[static_cast<std::size_t>(value - lo_)];
}

double Histogram::fraction_between(Tokens a, Tokens b) const {
    if (total_ == 0) return 0.0;
    a = std::max(a, lo_);
    b = std::min(b, max_value());
    std::uint64_t acc = 0;
    for (Tokens v = a; v <= b; ++v) acc += counts_[static_cast<std::size_t>(v - lo_)];
    return static_cast<double>(acc) / static_cast<double>(total_);
}

void Histogram::merge(const Histogram& other) {
    if (other.empty()) return;
    for (Tokens v = other.min_value(); v <= other.max_value(); ++v) add(v, other.count(v));
}

namespace {

// Books "agent held value v during periods [a, b]" into the window
// (burn_in, T] and its batches.
class DwellRecorder {
public:
    DwellRecorder(SimStats& stats, std::size_t n, std::size_t batches)
        : stats_(stats), start_(stats.burn_in + 1), end_(stats.T) {
        const std::uint64_t window = stats.T - stats.burn_in;
        batches_ = static_cast<std::uint64_t>(std::max<std::size_t>(1, batches));
        batches_ = std::min(batches_, window);
        batch_len_ = window / batches_;
        stats_.histogram.assign(n, Histogram{});
        stats_.batches.assign(batches_, std::vector<Histogram>(n));
    }

    void add(std::size_t agent, Tokens value, std::uint64_t a, std::uint64_t b) {
        a = std::max(a, start_);
        b = std::min(b, end_);
        if (a > b) return;
        stats_.histogram[agent].add(value, b - a + 1);
        for (std::uint64_t k = batch_of(a); k <= batch_of(b); ++k) {
            const std::uint64_t lo = std::max(a, batch_start(k));
            const std::uint64_t hi = std::min(b, batch_end(k));
            stats_.batches[k][agent].add(value, hi - lo + 1);
        }
    }

private:
    std::uint64_t batch_of(std::uint64_t t) const { return std::min((t - start_) / batch_len_, batches_ - 1); }
    std::uint64_t batch_start(std::uint64_t k) const { return start_ + k * batch_len_; }
    std::uint64_t batch_end(std::uint64_t k) const {
        return k + 1 == batches_ ? end_ : start_ + (k + 1) * batch_len_ - 1;
    }

    SimStats& stats_;
    std::uint64_t start_, end_;
    std::uint64_t batches_ = 1;
    std::uint64_t batch_len_ = 1;
};

double mean_of(std::span<const double> xs) {
    double acc = 0.0;
    for (double x : xs) acc += x;
    return xs.empty() ? 0.0 : acc / static_cast<double>(xs.size());
}

double batch_stderr(std::span<const double> batch_means) {
    const std::size_t b = batch_means.size();
    if (b < 2) return 0.0;
    const double m = mean_of(batch_means);
    double ss = 0.0;
    for (double x : batch_means) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(b - 1) / static_cast<double>(b));
}

}  // namespace

SimStats run_chain(const SystemConfig& config, const ChainOptions& options) {
    if (options.burn_in >= options.T) throw ValidationError("burn_in must be smaller than T");
    const TokenSystem system(config);
    const std::size_t n = system.size();

    SimStats stats;
    stats.T = options.T;
    stats.burn_in = options.burn_in;
    DwellRecorder recorder(stats, n, options.batches);

    Rng rng(config.seed);
    TokenState state = TokenState::zero(n);
    StepOutcome outcome;
    outcome.available.reserve(static_cast<std::size_t>(std::max(config.d, 2)));
    std::vector<std::uint64_t> since(n, 0);
    std::size_t nonzero = 0;
    std::uint64_t last_zero = 0;

    auto moved = [&](std::size_t agent, Tokens old_value, std::uint64_t t) {
        recorder.add(agent, old_value, since[agent], t - 1);
        since[agent] = t;
        const Tokens now = state.s[agent];
        if (old_value == 0 && now != 0) ++nonzero;
        if (old_value != 0 && now == 0) --nonzero;
    };

    for (std::uint64_t t = 1; t <= options.T; ++t) {
        system.step(state, rng, outcome);
        if (outcome.transferred) {
            moved(outcome.requester, state.s[outcome.requester] + 1, t);
            moved(outcome.provider, state.s[outcome.provider] - 1, t);
        }
        if (nonzero == 0 && options.record_zero_returns) {
            stats.zero_returns.push_back(t - last_zero);
            last_zero = t;
        }
    }
    for (std::size_t a = 0; a < n; ++a) recorder.add(a, state.s[a], since[a], options.T);
    stats.final_state = std::move(state);
    return stats;
}

SimStats run_chain(const SystemConfig& config, std::uint64_t T, std::uint64_t burn_in) {
    ChainOptions options;
    options.T = T;
    options.burn_in = burn_in;
    return run_chain(config, options);
}

std::vector<TokenState> snapshots(const SystemConfig& config, std::span<const std::uint64_t> times) {
    if (!std::is_sorted(times.begin(), times.end())) throw ValidationError("snapshot times must be sorted");
    const TokenSystem system(config);
    Rng rng(config.seed);
    TokenState state = TokenState::zero(system.size());
    StepOutcome outcome;
    std::vector<TokenState> out;
    out.reserve(times.size());
    for (std::uint64_t target : times) {
        while (state.t < target) system.step(state, rng, outcome);
        out.push_back(state);
    }
    return out;
}

TailEstimates tails(const SimStats& stats, int M_max, std::span<const std::size_t> agents) {
    if (stats.histogram.empty() || stats.window() == 0) throw ValidationError("tails: empty statistics");
    if (M_max < 0) throw ValidationError("tails: M_max must be non-negative");
    std::vector<std::size_t> chosen(agents.begin(), agents.end());
    if (chosen.empty()) {
        chosen.resize(stats.agents());
        for (std::size_t a = 0; a < chosen.size(); ++a) chosen[a] = a;
    }
    for (std::size_t a : chosen) {
        if (a >= stats.agents()) throw ValidationError("tails: agent index out of range");
    }

    const auto Ms = static_cast<std::size_t>(M_max) + 1;
    const std::size_t A = chosen.size();
    const std::size_t B = stats.batches.size();
    constexpr Tokens kFar = std::numeric_limits<Tokens>::max() / 4;

    TailEstimates est;
    est.M_max = M_max;
    est.p.assign(Ms, 0.0);
    est.q.assign(Ms, 0.0);
    est.r.assign(Ms, 0.0);
    est.stderr_p.assign(Ms, 0.0);
    est.per_agent_p.assign(A, std::vector<double>(Ms));
    est.per_agent_q.assign(A, std::vector<double>(Ms));
    est.per_agent_r.assign(A, std::vector<double>(Ms));
    est.per_agent_stderr_p.assign(A, std::vector<double>(Ms));

    std::vector<double> averaged(B);
    std::vector<double> single(B);
    for (std::size_t m = 0; m < Ms; ++m) {
        const auto M = static_cast<Tokens>(m);
        std::fill(averaged.begin(), averaged.end(), 0.0);
        for (std::size_t k = 0; k < A; ++k) {
            const Histogram& h = stats.histogram[chosen[k]];
            est.per_agent_p[k][m] = h.fraction_between(-M, M);
            est.per_agent_q[k][m] = h.fraction_between(-kFar, M);
            est.per_agent_r[k][m] = h.fraction_between(-M, kFar);
            est.p[m] += est.per_agent_p[k][m] / static_cast<double>(A);
            est.q[m] += est.per_agent_q[k][m] / static_cast<double>(A);
            est.r[m] += est.per_agent_r[k][m] / static_cast<double>(A);
            for (std::size_t b = 0; b < B; ++b) {
                single[b] = stats.batches[b][chosen[k]].fraction_between(-M, M);
                averaged[b] += single[b] / static_cast<double>(A);
            }
            est.per_agent_stderr_p[k][m] = batch_stderr(single);
        }
        est.stderr_p[m] = batch_stderr(averaged);
    }
    return est;
}

Estimate value_probability(const SimStats& stats, std::size_t agent, Tokens value) {
    if (agent >= stats.agents()) throw ValidationError("value_probability: agent index out of range");
    const Histogram& h = stats.histogram[agent];
    Estimate e;
    e.mean = h.total() ? static_cast<double>(h.count(value)) / static_cast<double>(h.total()) : 0.0;
    std::vector<double> per_batch;
    for (const auto& batch : stats.batches) {
        const Histogram& hb = batch[agent];
        per_batch.push_back(hb.total() ? static_cast<double>(hb.count(value)) / static_cast<double>(hb.total()) : 0.0);
    }
    e.stderr = batch_stderr(per_batch);
    return e;
}

ZeroReturnSummary summarize_zero_returns(std::span<const std::uint64_t> gaps, std::size_t batches) {
    ZeroReturnSummary s;
    s.count = gaps.size();
    if (gaps.empty()) return s;
    double total = 0.0;
    for (auto g : gaps) total += static_cast<double>(g);
    s.mean = total / static_cast<double>(gaps.size());

    const std::size_t half = std::max<std::size_t>(1, gaps.size() / 2);
    double first = 0.0;
    for (std::size_t i = 0; i < half; ++i) first += static_cast<double>(gaps[i]);
    s.first_half_mean = first / static_cast<double>(half);
    s.drift = std::abs(s.first_half_mean - s.mean) / s.mean;

    const std::size_t B = std::min(batches, gaps.size());
    if (B >= 2) {
        std::vector<double> means(B, 0.0);
        const std::size_t len = gaps.size() / B;
        for (std::size_t b = 0; b < B; ++b) {
            const std::size_t lo = b * len;
            const std::size_t hi = b + 1 == B ? gaps.size() : lo + len;
            double acc = 0.0;
            for (std::size_t i = lo; i < hi; ++i) acc += static_cast<double>(gaps[i]);
            means[b] = acc / static_cast<double>(hi - lo);
        }
        s.stderr = batch_stderr(means);
    }
    return s;
}

nlohmann::json to_json(const ZeroReturnSummary& s) {
    return {{"count", s.count},
            {"mean", s.mean},
            {"stderr", s.stderr},
            {"first_half_mean", s.first_half_mean},
            {"relative_drift", s.drift}};
}

SweepResult sweep_n(const SweepSpec& spec) {
    if (spec.n_values.empty()) throw ValidationError("sweep_n: no n values");
    for (auto n : spec.n_values) {
        if (n < 2) throw ValidationError("sweep_n: every n must be at least 2");
    }
    if (spec.seeds == 0) throw ValidationError("sweep_n: need at least one seed");

    std::vector<std::size_t> ns = spec.n_values;
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());

    const std::size_t jobs = ns.size() * spec.seeds;
    std::vector<TailEstimates> results(jobs);
    ChainOptions options;
    options.T = spec.T;
    options.burn_in = spec.burn_in;
    options.record_zero_returns = false;

    parallel_for(jobs, spec.workers, [&](std::size_t job) {
        const std::size_t n = ns[job / spec.seeds];
        const std::uint64_t seed = spec.base_seed + job % spec.seeds;
        const auto stats = run_chain(SystemConfig::symmetric(n, spec.d, seed), options);
        results[job] = tails(stats, spec.M_max);
    });

    SweepResult out;
    const auto Ms = static_cast<std::size_t>(spec.M_max) + 1;
    std::vector<std::vector<Estimate>> pooled(ns.size(), std::vector<Estimate>(Ms));
    for (std::size_t job = 0; job < jobs; ++job) {
        const std::size_t ni = job / spec.seeds;
        const std::uint64_t seed = spec.base_seed + job % spec.seeds;
        const auto& t = results[job];
        for (std::size_t m = 0; m < Ms; ++m) {
            out.rows.push_back({ns[ni], spec.d, static_cast<int>(m), seed, t.p[m], t.q[m], t.r[m], t.stderr_p[m]});
            pooled[ni][m].mean += t.p[m] / static_cast<double>(spec.seeds);
            pooled[ni][m].stderr += t.stderr_p[m] * t.stderr_p[m];
        }
    }
    for (auto& per_n : pooled) {
        for (auto& e : per_n) e.stderr = std::sqrt(e.stderr) / static_cast<double>(spec.seeds);
    }
    for (std::size_t m = 0; m < Ms; ++m) {
        for (std::size_t i = 0; i + 1 < ns.size(); ++i) {
            const auto& a = pooled[i][m];
            const auto& b = pooled[i + 1][m];
            const double se = std::hypot(a.stderr, b.stderr);
            if (b.mean > a.mean + 2.0 * se) {
                out.increases.push_back({static_cast<int>(m), ns[i], ns[i + 1], a.mean, b.mean, se});
            }
        }
    }
    return out;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
    out << "n,d,M,seed,p,q,r,stderr_p\n";
    const auto old = out.precision(10);
    for (const auto& row : result.rows) {
        out << row.n << ',' << row.d << ',' << row.M << ',' << row.seed << ',' << row.p << ',' << row.q << ','
            << row.r << ',' << row.stderr_p << '\n';
    }
    out.precision(old);
}

BoundReport check_5_over_M(const TailEstimates& estimates, int M_max) {
    if (M_max < 0) M_max = estimates.M_max;
    if (M_max > estimates.M_max) throw ValidationError("check_5_over_M: M_max exceeds the estimated range");
    BoundReport report;
    report.worst_margin = std::numeric_limits<double>::infinity();
    for (int M = 1; M <= M_max; ++M) {
        BoundRow row;
        row.M = M;
        row.tail = estimates.tail(M);
        row.bound = 5.0 / M;
        row.stderr = estimates.stderr_p[static_cast<std::size_t>(M)];
        row.margin = row.bound + 3.0 * row.stderr - row.tail;
        if (row.margin < report.worst_margin) {
            report.worst_margin = row.margin;
            report.worst_M = M;
        }
        report.passed = report.passed && row.margin >= 0.0;
        report.rows.push_back(row);
    }
    return report;
}

nlohmann::json to_json(const TailEstimates& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (int M = 0; M <= t.M_max; ++M) {
        const auto m = static_cast<std::size_t>(M);
        rows.push_back({{"M", M}, {"p", t.p[m]}, {"q", t.q[m]}, {"r", t.r[m]}, {"stderr_p", t.stderr_p[m]}});
    }
    return rows;
}

nlohmann::json to_json(const BoundReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"M", row.M},
                        {"tail", row.tail},
                        {"bound", row.bound},
                        {"stderr", row.stderr},
                        {"margin", row.margin}});
    }
    return {{"passed", r.passed}, {"worst_margin", r.worst_margin}, {"worst_M", r.worst_M}, {"rows", rows}};
}

}  // namespace tokensys
