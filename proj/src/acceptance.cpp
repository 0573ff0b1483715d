#include "tokensys/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "tokensys/error.hpp"
#include "tokensys/exact_oracle.hpp"
#include "tokensys/group_reduction.hpp"
#include "tokensys/kidney.hpp"
#include "tokensys/mean_field.hpp"
#include "tokensys/monte_carlo.hpp"
#include "tokensys/parallel.hpp"
#include "tokensys/two_agent.hpp"

namespace tokensys {

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

bool quick(const AcceptanceOptions& o) { return o.profile == Profile::Quick; }

void closed_form_vs_oracle(CriterionResult& r, const AcceptanceOptions&) {
    r.name = "two-agent closed form vs truncated chain";
    const Pair cases[][2] = {{{0.6, 0.4}, {0.6, 0.4}},
                             {{0.6, 0.4}, {0.55, 0.45}},
                             {{0.7, 0.3}, {0.65, 0.35}},
                             {{0.55, 0.45}, {0.45, 0.55}},
                             {{0.45, 0.55}, {0.6, 0.4}}};
    const auto start = Clock::now();
    double worst = 0.0;
    for (const auto& c : cases) {
        const auto sol = solve(c[0], c[1], 2);
        if (!sol.stable) throw InvariantViolation("test configuration unexpectedly unstable");
        SystemConfig cfg;
        cfg.n = 2;
        cfg.p = {c[0][0], c[0][1]};
        cfg.q = {c[1][0], c[1][1]};
        const TruncatedChain chain(cfg, 60);
        const auto st = stationary(chain);
        for (std::size_t agent = 0; agent < 2; ++agent) {
            for (int M = 0; M <= 40; ++M) {
                worst = std::max(worst, std::abs(tail_probability(chain, st.pi, agent, M) - sol.tail(M)));
            }
        }
        r.data["configs"].push_back({{"p", c[0]}, {"q", c[1]}, {"expected_return", sol.expected_return}});
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    r.passed = worst < 1e-8 && secs < 10.0;
    r.data["max_abs_error"] = worst;
    r.detail = fmt("max |tail error| = %.2e over 5 configs, M = 0..40 (limit 1e-8, %.2f s of 10 s)", worst, secs);
}

void symmetric_two_agent_mc(CriterionResult& r, const AcceptanceOptions&) {
    r.name = "symmetric n=2 Monte Carlo tails and return time";
    const auto start = Clock::now();
    const auto stats = run_chain(SystemConfig::symmetric(2, 2, 1), 2'000'000, 200'000);
    const std::size_t agent0[] = {0};
    const auto t = tails(stats, 4, agent0);
    double worst = 0.0;
    for (int M = 0; M <= 4; ++M) {
        const double exact = (2.0 / 3.0) * std::pow(1.0 / 3.0, M);
        worst = std::max(worst, std::abs(t.tail(M) - exact));
        r.data["tail"].push_back({M, t.tail(M), exact});
    }
    const auto z = summarize_zero_returns(stats.zero_returns);
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    r.passed = worst <= 0.005 && std::abs(z.mean - 3.0) <= 0.05 && secs < 30.0;
    r.data["zero_return"] = to_json(z);
    r.detail = fmt("max |tail - (2/3)(1/3)^M| = %.4f (limit 0.005), mean zero-return gap = %.4f (3 +- 0.05), %.2f s",
                   worst, z.mean, secs);
}

void equilibrium_solver(CriterionResult& r, const AcceptanceOptions&) {
    r.name = "mean-field equilibrium";
    const auto start = Clock::now();
    const auto eq = solve_equilibrium(2);
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    const double res = balance_residual(eq.pi0, 2);
    const double pim4 = eq.pi(-4);
    r.passed = eq.pi0 >= 0.66 && eq.pi0 <= 0.68 && std::abs(res) < 1e-12 && pim4 >= 0.970 && pim4 <= 0.980 &&
               secs < 1.0;
    r.data = {{"pi0", eq.pi0}, {"residual", res}, {"pi_minus4", pim4}};
    r.detail = fmt("pi0 = %.6f, |residual| = %.1e, pi_-4 = %.6f (%.3f s)", eq.pi0, std::abs(res), pim4, secs);
}

void half_bound(CriterionResult& r, const AcceptanceOptions&) {
    r.name = "(1/2)^M bound at the mean-field limit";
    const auto start = Clock::now();
    const auto eq = solve_equilibrium(2);
    HalfBoundReport rep;
    try {
        rep = verify_half_bound(eq, 40);
    } catch (const InvariantViolation& e) {
        r.passed = false;
        r.detail = e.what();
        return;
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    r.passed = rep.passed && secs < 1.0;
    r.data = {{"min_g", rep.min_g}, {"argmin", rep.argmin}};
    r.detail = fmt("min g(M) over M = 1..40 is %.3e at M = %d (%.3f s)", rep.min_g, rep.argmin, secs);
}

void figure_one(CriterionResult& r, const AcceptanceOptions& o) {
    r.name = "n=50 stationary p_{50,M}";
    const double target[] = {0.6184, 0.8645, 0.9500, 0.9759};
    const std::uint64_t T = quick(o) ? 2'000'000 : 20'000'000;
    const std::uint64_t burn = quick(o) ? 200'000 : 500'000;
    const double tol = quick(o) ? 0.03 : 0.02;
    const auto stats = run_chain(SystemConfig::symmetric(50, 2, 1), T, burn);
    const auto t = tails(stats, 4);
    double worst = 0.0;
    std::string vals;
    for (int M = 1; M <= 4; ++M) {
        worst = std::max(worst, std::abs(t.p[static_cast<std::size_t>(M)] - target[M - 1]));
        vals += fmt("%s%.4f", M == 1 ? "" : " / ", t.p[static_cast<std::size_t>(M)]);
        r.data["p"].push_back({M, t.p[static_cast<std::size_t>(M)], target[M - 1]});
    }
    r.passed = worst <= tol;
    r.detail = fmt("p = %s, max deviation %.4f (limit %.2f, T = %.0e)", vals.c_str(), worst, tol, double(T));
}

void five_over_M(CriterionResult& r, const AcceptanceOptions& o) {
    r.name = "P(|s_1| > M) <= 5/M";
    struct Job {
        std::size_t n;
        int d;
        BoundReport rep;
    };
    std::vector<Job> jobs;
    for (std::size_t n : {2, 3, 5, 10}) {
        for (int d : {2, 3}) jobs.push_back({n, d, {}});
    }
    parallel_for(jobs.size(), o.workers, [&](std::size_t k) {
        const auto stats = run_chain(SystemConfig::symmetric(jobs[k].n, jobs[k].d, 1 + k), 2'000'000, 200'000);
        const std::size_t agent0[] = {0};
        jobs[k].rep = check_5_over_M(tails(stats, 30, agent0), 30);
    });
    r.passed = true;
    double worst = std::numeric_limits<double>::infinity();
    std::string where;
    for (const auto& j : jobs) {
        r.passed = r.passed && j.rep.passed;
        if (j.rep.worst_margin < worst) {
            worst = j.rep.worst_margin;
            where = fmt("n=%zu d=%d M=%d", j.n, j.d, j.rep.worst_M);
        }
        r.data["runs"].push_back({{"n", j.n}, {"d", j.d}, {"report", to_json(j.rep)}});
    }
    r.detail = fmt("8 configs, M = 1..30; smallest margin %.4f at %s", worst, where.c_str());
}

void d1_instability(CriterionResult& r, const AcceptanceOptions& o) {
    r.name = "d=1 variance growth";
    constexpr std::size_t seeds = 50;
    std::vector<double> a(seeds), b(seeds);
    parallel_for(seeds, o.workers, [&](std::size_t k) {
        const std::uint64_t times[] = {100'000, 200'000};
        const auto snaps = snapshots(SystemConfig::symmetric(2, 1, 1 + k), times);
        a[k] = static_cast<double>(snaps[0].s[0]);
        b[k] = static_cast<double>(snaps[1].s[0]);
    });
    const auto var = [](const std::vector<double>& x) {
        const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
        double acc = 0.0;
        for (double v : x) acc += (v - m) * (v - m);
        return acc / static_cast<double>(x.size() - 1);
    };
    const double v1 = var(a), v2 = var(b);
    const double ratio = v2 / v1;
    r.passed = ratio >= 1.6 && ratio <= 2.4;
    r.data = {{"var_1e5", v1}, {"var_2e5", v2}, {"ratio", ratio}};
    r.detail = fmt("Var(s_1) = %.0f at t=1e5 and %.0f at t=2e5 over 50 seeds (walk predicts %.0f, %.0f); ratio %.3f "
                   "(accept [1.6, 2.4])",
                   v1, v2, 0.5e5, 1.0e5, ratio);
}

void mean_field_integration(CriterionResult& r, const AcceptanceOptions&) {
    r.name = "mean-field ODE convergence";
    const auto eq = solve_equilibrium(2);
    IntegrateOptions opts;
    opts.T = 200.0;
    opts.dt = 0.01;
    opts.record_every = 0;
    const auto traj = integrate(MeanFieldState::step_initial(eq.lo, eq.hi, 2), opts);
    double l1 = 0.0;
    for (std::size_t k = 0; k < eq.window.size(); ++k) l1 += std::abs(traj.final.z[k] - eq.window[k]);
    r.passed = l1 < 1e-4 && traj.max_mass_error < 1e-8;
    r.data = {{"l1", l1}, {"max_mass_error", traj.max_mass_error}, {"clamp_events", traj.clamp_events}};
    r.detail = fmt("L1 distance to equilibrium at T=200: %.2e (limit 1e-4); max |mass identity| %.2e (limit 1e-8)", l1,
                   traj.max_mass_error);
}

void lipschitz(CriterionResult& r, const AcceptanceOptions&) {
    r.name = "Lipschitz constant 2+2d";
    r.passed = true;
    std::string parts;
    for (int d : {2, 3}) {
        const auto rep = lipschitz_spot_check(d, 10'000, static_cast<std::uint64_t>(d));
        r.passed = r.passed && rep.violations == 0;
        parts += fmt("%sd=%d max ratio %.4f <= %.0f, %zu violations", parts.empty() ? "" : "; ", d, rep.max_ratio,
                     rep.bound, rep.violations);
        r.data["runs"].push_back({{"d", d}, {"max_ratio", rep.max_ratio}, {"violations", rep.violations}});
    }
    r.detail = parts + " (1e4 pairs each)";
}

void intermediate(CriterionResult& r, const AcceptanceOptions& o) {
    r.name = "intermediate availability beta";
    const std::uint64_t T = quick(o) ? 2'000'000 : 20'000'000;
    const double betas[] = {0.25, 0.5, 0.75};
    std::vector<double> worst(3, 0.0);
    parallel_for(3, o.workers, [&](std::size_t k) {
        auto cfg = SystemConfig::symmetric(2, 2, 11 + k);
        cfg.beta = betas[k];
        const auto stats = run_chain(cfg, T, 200'000);
        const std::size_t agent0[] = {0};
        const auto t = tails(stats, 6, agent0);
        const double b = betas[k];
        for (int M = 0; M <= 6; ++M) {
            const double exact = 1.0 - (2.0 / (2.0 + b)) * std::pow((2.0 - b) / (2.0 + b), M);
            worst[k] = std::max(worst[k], std::abs(t.p[static_cast<std::size_t>(M)] - exact));
        }
    });
    const double w = *std::max_element(worst.begin(), worst.end());
    r.passed = w <= 0.01;
    r.data = {{"max_error", worst}};
    r.detail = fmt("max |P(|s|<=M) - formula| over M=0..6: %.4f / %.4f / %.4f for beta = .25/.5/.75 (limit 0.01)",
                   worst[0], worst[1], worst[2]);
}

void group_reduction(CriterionResult& r, const AcceptanceOptions&) {
    r.name = "group reduction of (0.5, 0.3, 0.2)";
    const auto gs = reduce(parse_rational_list("0.5,0.3,0.2"));
    const bool sizes_ok = gs.g == std::vector<std::int64_t>{5, 3, 2} && gs.N == 10;
    GroupedOptions opts;
    opts.T = 100'000;
    const auto run = simulate_grouped(gs, opts);
    r.passed = sizes_ok && run.audits == opts.T && run.violations == 0;
    r.data = {{"g", gs.g}, {"N", gs.N}, {"audits", run.audits}, {"violations", run.violations}};
    r.detail = fmt("g = (%lld, %lld, %lld), N = %lld; %llu audited steps, %llu violations",
                   (long long)gs.g[0], (long long)gs.g[1], (long long)gs.g[2], (long long)gs.N,
                   (unsigned long long)run.audits, (unsigned long long)run.violations);
}

void two_type(CriterionResult& r, const AcceptanceOptions& o) {
    r.name = "two agent types, p_B = 10 p_A";
    const double tableA[] = {0.6476, 0.8753, 0.9510, 0.9767};
    const double tableB[] = {0.6410, 0.8645, 0.9512, 0.9809};
    // n = 10 with f = 4 agents of type A: 4 p_A + 6 (10 p_A) = 1.
    SystemConfig cfg;
    cfg.n = 10;
    cfg.p.assign(10, 10.0 / 64.0);
    for (std::size_t i = 0; i < 4; ++i) cfg.p[i] = 1.0 / 64.0;
    cfg.q = cfg.p;
    cfg.seed = 21;
    const std::uint64_t T = quick(o) ? 2'000'000 : 20'000'000;
    const auto stats = run_chain(cfg, T, quick(o) ? 200'000 : 500'000);
    const std::size_t typeA[] = {0, 1, 2, 3};
    const std::size_t typeB[] = {4, 5, 6, 7, 8, 9};
    const auto tA = tails(stats, 4, typeA);
    const auto tB = tails(stats, 4, typeB);

    IntegrateOptions opts;
    opts.T = 600.0;
    opts.record_every = 0;
    const auto ode = two_type_integrate(TwoTypeState::step_initial(-40, 30, 10.0, 10.0), opts);

    double mc_worst = 0.0, ode_worst = 0.0;
    int ode_arg = 0;
    char ode_type = 'A';
    std::string mc_vals, ode_vals;
    for (int M = 1; M <= 4; ++M) {
        const auto m = static_cast<std::size_t>(M);
        mc_worst = std::max({mc_worst, std::abs(tA.p[m] - tableA[M - 1]), std::abs(tB.p[m] - tableB[M - 1])});
        const double oa = window_tail_mass(ode.final.zA, -40, M);
        const double ob = window_tail_mass(ode.final.zB, -40, M);
        if (std::abs(oa - tableA[M - 1]) > ode_worst) {
            ode_worst = std::abs(oa - tableA[M - 1]);
            ode_arg = M;
            ode_type = 'A';
        }
        if (std::abs(ob - tableB[M - 1]) > ode_worst) {
            ode_worst = std::abs(ob - tableB[M - 1]);
            ode_arg = M;
            ode_type = 'B';
        }
        mc_vals += fmt("%s%.4f/%.4f", M == 1 ? "" : " ", tA.p[m], tB.p[m]);
        ode_vals += fmt("%s%.4f/%.4f", M == 1 ? "" : " ", oa, ob);
        r.data["rows"].push_back({{"M", M},
                                  {"table_A", tableA[M - 1]},
                                  {"table_B", tableB[M - 1]},
                                  {"mc_A", tA.p[m]},
                                  {"mc_B", tB.p[m]},
                                  {"ode_A", oa},
                                  {"ode_B", ob}});
    }
    r.passed = mc_worst <= 0.03 && ode_worst <= 0.03;
    r.data["mc_max_error"] = mc_worst;
    r.data["ode_max_error"] = ode_worst;
    r.detail = fmt("Monte Carlo A/B by M: %s (max dev %.4f); ODE A/B: %s (max dev %.4f at type %c, M=%d); limit 0.03",
                   mc_vals.c_str(), mc_worst, ode_vals.c_str(), ode_worst, ode_type, ode_arg);
}

void kidney_sim(CriterionResult& r, const AcceptanceOptions& o) {
    r.name = "kidney exchange pool";
    const auto pop = kidney::generate_population({});
    kidney::HorizonOptions opts;
    opts.days = 100'000;
    opts.record_every = 0;
    // run_horizon audits the ledger sum after every day and throws on a breach.
    const auto run = kidney::run_horizon(pop, Rule::MinToken, opts);
    const auto cmp = kidney::compare_rules(pop, 20, 100'000, 1, o.workers);
    const auto& d = run.diagnostics;
    r.passed = d.ledger_audits == opts.days && cmp.share() >= 0.8;
    r.data = {{"diagnostics", kidney::to_json(d)},
              {"max_abs_min_token", cmp.max_abs_min_token},
              {"max_abs_uniform", cmp.max_abs_uniform},
              {"min_token_smaller_share", cmp.share()}};
    r.detail = fmt("zero-sum held on %llu of %llu days; min-token max|tokens| smaller in %zu/20 runs (need 16); "
                   "share of matches with >=2 candidates %.3f, mean candidates %.2f",
                   (unsigned long long)d.ledger_audits, (unsigned long long)opts.days, cmp.min_token_smaller,
                   d.multi_candidate_share(), d.mean_candidates());
}

using CriterionFn = void (*)(CriterionResult&, const AcceptanceOptions&);

constexpr CriterionFn kCriteria[] = {closed_form_vs_oracle, symmetric_two_agent_mc, equilibrium_solver,
                                     half_bound,            figure_one,             five_over_M,
                                     d1_instability,        mean_field_integration, lipschitz,
                                     intermediate,          group_reduction,        two_type,
                                     kidney_sim};

}  // namespace

int acceptance_criterion_count() { return static_cast<int>(std::size(kCriteria)); }

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options) {
    std::vector<CriterionResult> out;
    for (int id = 1; id <= acceptance_criterion_count(); ++id) {
        if (!options.only.empty() && std::find(options.only.begin(), options.only.end(), id) == options.only.end()) {
            continue;
        }
        CriterionResult r;
        r.id = id;
        const auto start = Clock::now();
        try {
            kCriteria[id - 1](r, options);
        } catch (const std::exception& e) {
            r.passed = false;
            r.detail = std::string("error: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
        if (options.on_result) options.on_result(r);
        out.push_back(std::move(r));
    }
    return out;
}

std::string format_line(const CriterionResult& r) {
    return fmt("%s  %2d  %-46s %s [%.2f s]", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(), r.detail.c_str(),
               r.seconds);
}

nlohmann::json to_json(const CriterionResult& r) {
    return {{"id", r.id},   {"name", r.name},       {"passed", r.passed},
            {"detail", r.detail}, {"seconds", r.seconds}, {"data", r.data}};
}

}  // namespace tokensys
