#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tokensys/acceptance.hpp"
#include "tokensys/config.hpp"
#include "tokensys/error.hpp"
#include "tokensys/exact_oracle.hpp"
#include "tokensys/group_reduction.hpp"
#include "tokensys/kidney.hpp"
#include "tokensys/mean_field.hpp"
#include "tokensys/monte_carlo.hpp"
#include "tokensys/two_agent.hpp"

#ifndef TOKENSIM_VERSION
#define TOKENSIM_VERSION "dev"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tokensys;

namespace {

/// Collects the files a run writes and emits the manifest next to them.
class Run {
public:
    Run(std::string subcommand, std::string dir, std::string tag, std::vector<std::string> argv)
        : subcommand_(std::move(subcommand)), dir_(std::move(dir)), tag_(std::move(tag)), argv_(std::move(argv)),
          start_(std::chrono::steady_clock::now()) {
        if (tag_.empty()) tag_ = subcommand_;
        fs::create_directories(dir_);
    }

    std::string path(const std::string& suffix) const { return (fs::path(dir_) / (tag_ + suffix)).string(); }

    std::ofstream open(const std::string& suffix) {
        const auto p = path(suffix);
        std::ofstream out(p);
        if (!out) throw ValidationError("cannot write " + p);
        out.precision(12);
        outputs_.push_back(p);
        return out;
    }

    void write_json(const std::string& suffix, const json& doc) { open(suffix) << doc.dump(2) << '\n'; }

    void finish(const json& config, std::uint64_t seed) {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        json m{{"subcommand", subcommand_}, {"config", config},   {"seed", seed},
               {"outputs", outputs_},       {"version", TOKENSIM_VERSION}, {"duration_seconds", secs},
               {"argv", argv_}};
        std::ofstream(path(".manifest.json")) << m.dump(2) << '\n';
        std::cerr << "wrote " << outputs_.size() << " file(s) and " << path(".manifest.json") << '\n';
    }

private:
    std::string subcommand_, dir_, tag_;
    std::vector<std::string> argv_;
    std::vector<std::string> outputs_;
    std::chrono::steady_clock::time_point start_;
};

struct Common {
    std::string dir = ".";
    std::string tag;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--out-dir", c.dir, "Directory for output files")->capture_default_str();
    sub->add_option("--tag", c.tag, "File name prefix (default: the subcommand name)");
}

struct SystemArgs {
    std::string config_file;
    std::size_t n = 0;  // 0: take it from --p / --q, else 2
    std::vector<double> p, q;
    int d = 2;
    std::string rule = "min_token";
    double beta = -1.0;
    std::uint64_t seed = 1;
};

void add_system(CLI::App* sub, SystemArgs& s) {
    sub->add_option("--config", s.config_file, "SystemConfig JSON file; flags below are ignored when given")
        ->check(CLI::ExistingFile);
    sub->add_option("--n", s.n, "Number of agents (default: length of --p, else 2)");
    sub->add_option("--p", s.p, "Request probabilities, comma separated (default uniform)")->delimiter(',');
    sub->add_option("--q", s.q, "Availability probabilities, comma separated (default uniform)")->delimiter(',');
    sub->add_option("--d", s.d, "Available agents per period")->capture_default_str();
    sub->add_option("--rule", s.rule, "min_token or uniform")->capture_default_str();
    sub->add_option("--beta", s.beta, "Use two available agents with this probability, one otherwise");
    sub->add_option("--seed", s.seed, "RNG seed")->capture_default_str();
}

SystemConfig resolve(const SystemArgs& s) {
    if (!s.config_file.empty()) {
        std::ifstream in(s.config_file);
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::exception& e) {
            throw ValidationError(std::string("cannot parse ") + s.config_file + ": " + e.what());
        }
        return config_from_json(doc);
    }
    std::size_t n = s.n;
    if (n == 0) n = !s.p.empty() ? s.p.size() : !s.q.empty() ? s.q.size() : 2;
    json doc{{"n", n}, {"d", s.d}, {"rule", s.rule}, {"seed", s.seed}};
    if (!s.p.empty()) doc["p"] = s.p;
    if (!s.q.empty()) doc["q"] = s.q;
    if (s.beta >= 0.0) doc["beta"] = s.beta;
    return config_from_json(doc);
}

void warn_if_unstable(const SystemConfig& c) {
    if (c.d == 1 && !c.beta) std::cerr << "warning: system is not stable for d=1\n";
}

json tails_json(const TailEstimates& t) {
    json rows = json::array();
    for (int M = 0; M <= t.M_max; ++M) {
        const auto m = static_cast<std::size_t>(M);
        rows.push_back({{"M", M}, {"p", t.p[m]}, {"q", t.q[m]}, {"r", t.r[m]}, {"stderr_p", t.stderr_p[m]}});
    }
    return rows;
}

void write_tails_csv(std::ostream& out, const TailEstimates& t) {
    out << "agent,M,p,q,r,stderr_p\n";
    for (int M = 0; M <= t.M_max; ++M) {
        const auto m = static_cast<std::size_t>(M);
        out << "mean," << M << ',' << t.p[m] << ',' << t.q[m] << ',' << t.r[m] << ',' << t.stderr_p[m] << '\n';
    }
    for (std::size_t a = 0; a < t.per_agent_p.size(); ++a) {
        for (int M = 0; M <= t.M_max; ++M) {
            const auto m = static_cast<std::size_t>(M);
            out << a << ',' << M << ',' << t.per_agent_p[a][m] << ',' << t.per_agent_q[a][m] << ','
                << t.per_agent_r[a][m] << ',' << t.per_agent_stderr_p[a][m] << '\n';
        }
    }
}

}  // namespace

int dispatch(std::vector<std::string> args) {
    const std::vector<std::string> argv_copy = args;
    CLI::App app{"Token system simulator and analysis tools", "tokensim"};
    app.set_version_flag("--version", TOKENSIM_VERSION);
    app.require_subcommand(1);
    std::string replay;
    app.add_option("--replay", replay, "Re-run the command recorded in a manifest file")->check(CLI::ExistingFile);

    std::function<void()> action;

    // simulate
    auto* sim = app.add_subcommand("simulate", "Monte Carlo run of one token system");
    Common sim_c;
    SystemArgs sim_s;
    std::uint64_t sim_T = 20'000'000, sim_burn = 500'000;
    int sim_M = 10;
    std::size_t sim_batches = 20;
    bool grouped = false;
    std::string grouped_p, grouped_q;
    std::uint64_t record_every = 0;
    add_common(sim, sim_c);
    add_system(sim, sim_s);
    sim->add_option("--T", sim_T, "Periods to simulate")->capture_default_str();
    sim->add_option("--burn", sim_burn, "Burn-in periods excluded from statistics")->capture_default_str();
    sim->add_option("--M-max", sim_M, "Largest M for tail estimates")->capture_default_str();
    sim->add_option("--batches", sim_batches, "Batches for batch-means errors")->capture_default_str();
    sim->add_flag("--grouped", grouped, "Run the grouped symmetric system built from rational --p");
    sim->add_option("--rational-p", grouped_p, "Rational request rates for --grouped, e.g. 1/2,3/10,1/5");
    sim->add_option("--rational-q", grouped_q, "Rational availability rates for --grouped (must equal p)");
    sim->add_option("--record-every", record_every, "Grouped trajectory spacing (0 keeps none)");
    sim->callback([&] {
        action = [&] {
            Run run("simulate", sim_c.dir, sim_c.tag, argv_copy);
            if (grouped) {
                if (grouped_p.empty()) throw ValidationError("--grouped needs --rational-p");
                const auto p = parse_rational_list(grouped_p);
                const auto gs = grouped_q.empty() ? reduce(p) : reduce(p, parse_rational_list(grouped_q));
                GroupedOptions opts;
                opts.T = sim_T;
                opts.seed = sim_s.seed;
                opts.d = sim_s.d;
                opts.record_every = record_every;
                if (opts.d == 1) std::cerr << "warning: system is not stable for d=1\n";
                const auto res = simulate_grouped(gs, opts);
                json doc{{"system", to_json(gs)},
                         {"steps", res.steps},
                         {"audits", res.audits},
                         {"violations", res.violations},
                         {"cross_group_transfers", res.cross_group_transfers},
                         {"final_groups", res.final_groups},
                         {"zero_return", to_json(summarize_zero_returns(res.zero_returns))}};
                std::cout << doc.dump(2) << '\n';
                run.write_json(".json", doc);
                if (record_every > 0) {
                    auto out = run.open(".csv");
                    out << "t,group,tokens\n";
                    for (std::size_t r = 0; r < res.trajectory_t.size(); ++r) {
                        for (std::size_t g = 0; g < res.trajectory[r].size(); ++g) {
                            out << res.trajectory_t[r] << ',' << g << ',' << res.trajectory[r][g] << '\n';
                        }
                    }
                }
                run.finish({{"p", grouped_p}, {"q", grouped_q}, {"d", opts.d}, {"T", opts.T}}, opts.seed);
                return;
            }
            const auto cfg = resolve(sim_s);
            warn_if_unstable(cfg);
            ChainOptions opts;
            opts.T = sim_T;
            opts.burn_in = sim_burn;
            opts.batches = sim_batches;
            const auto stats = run_chain(cfg, opts);
            const auto t = tails(stats, sim_M);
            json doc{{"config", to_json(cfg)},
                     {"T", sim_T},
                     {"burn_in", sim_burn},
                     {"tails", tails_json(t)},
                     {"zero_return", to_json(summarize_zero_returns(stats.zero_returns))},
                     {"final_state", stats.final_state.s}};
            std::cout << doc.dump(2) << '\n';
            run.write_json(".json", doc);
            auto csv = run.open(".csv");
            write_tails_csv(csv, t);
            run.finish({{"system", to_json(cfg)}, {"T", sim_T}, {"burn_in", sim_burn}, {"M_max", sim_M}},
                       cfg.seed);
        };
    });

    // sweep
    auto* sw = app.add_subcommand("sweep", "p_{n,M} over a range of n for symmetric systems");
    Common sw_c;
    SweepSpec spec;
    spec.n_values = {2, 3, 5, 10, 20, 50};
    add_common(sw, sw_c);
    sw->add_option("--n", spec.n_values, "Values of n, comma separated")->delimiter(',')->capture_default_str();
    sw->add_option("--d", spec.d)->capture_default_str();
    sw->add_option("--M-max", spec.M_max)->capture_default_str();
    sw->add_option("--T", spec.T)->capture_default_str();
    sw->add_option("--burn", spec.burn_in)->capture_default_str();
    sw->add_option("--seeds", spec.seeds, "Independent seeds per n")->capture_default_str();
    sw->add_option("--seed", spec.base_seed, "First seed")->capture_default_str();
    sw->add_option("--workers", spec.workers, "Threads")->capture_default_str();
    sw->callback([&] {
        action = [&] {
            Run run("sweep", sw_c.dir, sw_c.tag, argv_copy);
            if (spec.d == 1) std::cerr << "warning: system is not stable for d=1\n";
            const auto res = sweep_n(spec);
            auto csv = run.open(".csv");
            write_sweep_csv(csv, res);
            json notes = json::array();
            for (const auto& m : res.increases) {
                notes.push_back({{"M", m.M}, {"n_from", m.n_from}, {"n_to", m.n_to}, {"p_from", m.p_from},
                                 {"p_to", m.p_to}, {"combined_stderr", m.combined_stderr}});
            }
            json doc{{"rows", res.rows.size()}, {"increases_over_2_stderr", notes}};
            std::cout << doc.dump(2) << '\n';
            run.write_json(".json", doc);
            run.finish({{"n", spec.n_values}, {"d", spec.d}, {"M_max", spec.M_max}, {"T", spec.T},
                        {"burn_in", spec.burn_in}, {"seeds", spec.seeds}},
                       spec.base_seed);
        };
    });

    // exact2
    auto* ex = app.add_subcommand("exact2", "Closed-form steady state of a two-agent system");
    Common ex_c;
    std::vector<double> ex_p{0.5, 0.5}, ex_q{0.5, 0.5};
    int ex_d = 2, ex_M = 40;
    double ex_beta = -1.0;
    add_common(ex, ex_c);
    ex->add_option("--p", ex_p, "p1,p2")->delimiter(',')->expected(2)->capture_default_str();
    ex->add_option("--q", ex_q, "q1,q2")->delimiter(',')->expected(2)->capture_default_str();
    ex->add_option("--d", ex_d)->capture_default_str();
    ex->add_option("--beta", ex_beta, "Intermediate availability in (0, 1]; replaces --d");
    ex->add_option("--M-max", ex_M)->capture_default_str();
    ex->callback([&] {
        action = [&] {
            Run run("exact2", ex_c.dir, ex_c.tag, argv_copy);
            if (ex_p.size() != 2 || ex_q.size() != 2) throw ValidationError("exact2 needs exactly two p and q values");
            const Pair p{ex_p[0], ex_p[1]}, q{ex_q[0], ex_q[1]};
            if (ex_beta < 0.0 && ex_d == 1) std::cerr << "warning: system is not stable for d=1\n";
            const auto sol = ex_beta >= 0.0 ? solve_intermediate(p, q, ex_beta) : solve(p, q, ex_d);
            auto doc = to_json(sol, ex_M);
            if (sol.stable) doc["decay_a_grid"] = decay_constant_grid(sol);
            std::cout << doc.dump(2) << '\n';
            run.write_json(".json", doc);
            if (sol.stable) {
                auto csv = run.open(".csv");
                csv << "M,tail,p\n";
                for (int M = 0; M <= ex_M; ++M) csv << M << ',' << sol.tail(M) << ',' << 1.0 - sol.tail(M) << '\n';
            }
            json cfg{{"p", ex_p}, {"q", ex_q}, {"M_max", ex_M}};
            if (ex_beta >= 0.0) cfg["beta"] = ex_beta; else cfg["d"] = ex_d;
            run.finish(cfg, 0);
        };
    });

    // oracle
    auto* orc = app.add_subcommand("oracle", "Exact stationary law of the truncated chain");
    Common orc_c;
    SystemArgs orc_s;
    Tokens orc_B = 12;
    int orc_M = 10;
    std::string orc_method = "auto";
    add_common(orc, orc_c);
    add_system(orc, orc_s);
    orc->add_option("--B", orc_B, "Truncation radius")->capture_default_str();
    orc->add_option("--M-max", orc_M)->capture_default_str();
    orc->add_option("--method", orc_method, "auto, direct or power")
        ->check(CLI::IsMember({"auto", "direct", "power"}))
        ->capture_default_str();
    orc->callback([&] {
        action = [&] {
            Run run("oracle", orc_c.dir, orc_c.tag, argv_copy);
            const auto cfg = resolve(orc_s);
            warn_if_unstable(cfg);
            StationaryOptions so;
            so.method = orc_method == "direct" ? StationaryMethod::Direct
                        : orc_method == "power" ? StationaryMethod::Power
                                                : StationaryMethod::Auto;
            const TruncatedChain chain(cfg, orc_B);
            const auto st = stationary(chain, so);
            json agents = json::array();
            for (std::size_t a = 0; a < chain.agents(); ++a) {
                json rows = json::array();
                for (int M = 0; M <= std::min<int>(orc_M, static_cast<int>(orc_B)); ++M) {
                    rows.push_back({M, tail_probability(chain, st.pi, a, M)});
                }
                agents.push_back(rows);
            }
            const std::vector<Tokens> zero(chain.agents(), 0);
            json doc{{"states", chain.size()},
                     {"B", orc_B},
                     {"residual", st.residual},
                     {"method", st.method == StationaryMethod::Power ? "power" : "direct"},
                     {"iterations", st.iterations},
                     {"expected_return_zero", expected_return_time(chain, st.pi, zero)},
                     {"tail", agents}};
            std::cout << doc.dump(2) << '\n';
            run.write_json(".json", doc);
            auto csv = run.open(".csv");
            write_marginals_csv(csv, chain, st.pi);
            run.finish({{"system", to_json(cfg)}, {"B", orc_B}, {"method", orc_method}}, cfg.seed);
        };
    });

    // meanfield
    auto* mf = app.add_subcommand("meanfield", "Integrate the mean-field ODE from the step initial condition");
    Common mf_c;
    int mf_d = 2, mf_lo = -40, mf_hi = 30, mf_M = 4;
    IntegrateOptions mf_opts;
    double alpha = -1.0, type_beta = 1.0;
    add_common(mf, mf_c);
    mf->add_option("--d", mf_d)->capture_default_str();
    mf->add_option("--T", mf_opts.T)->capture_default_str();
    mf->add_option("--dt", mf_opts.dt)->capture_default_str();
    mf->add_option("--lo", mf_lo, "Leftmost tracked index")->capture_default_str();
    mf->add_option("--hi", mf_hi, "Rightmost tracked index")->capture_default_str();
    mf->add_option("--record-every", mf_opts.record_every, "Steps between CSV snapshots")->capture_default_str();
    mf->add_option("--alpha", alpha, "Two-type system with p_B = alpha p_A (d = 2)");
    mf->add_option("--type-beta", type_beta, "Two-type system: q_B = type-beta q_A")->capture_default_str();
    mf->add_option("--M-max", mf_M, "Largest M in the two-type report")->capture_default_str();
    mf->callback([&] {
        action = [&] {
            Run run("meanfield", mf_c.dir, mf_c.tag, argv_copy);
            json cfg{{"d", mf_d}, {"T", mf_opts.T}, {"dt", mf_opts.dt}, {"lo", mf_lo}, {"hi", mf_hi},
                     {"record_every", mf_opts.record_every}};
            if (alpha > 0.0) {
                const auto traj = two_type_integrate(TwoTypeState::step_initial(mf_lo, mf_hi, alpha, type_beta), mf_opts);
                json rows = json::array();
                for (int M = 0; M <= mf_M; ++M) {
                    rows.push_back({{"M", M},
                                    {"p_A", window_tail_mass(traj.final.zA, mf_lo, M)},
                                    {"p_B", window_tail_mass(traj.final.zB, mf_lo, M)}});
                }
                json doc{{"alpha", alpha},
                         {"beta", type_beta},
                         {"p", rows},
                         {"max_mass_error", traj.max_mass_error},
                         {"max_probability_error", traj.max_probability_error},
                         {"clamp_events", traj.clamp_events},
                         {"final_drift_norm", traj.final_drift_norm},
                         {"warnings", traj.warnings}};
                std::cout << doc.dump(2) << '\n';
                run.write_json(".json", doc);
                cfg["alpha"] = alpha;
                cfg["type_beta"] = type_beta;
                run.finish(cfg, 0);
                return;
            }
            const auto traj = integrate(MeanFieldState::step_initial(mf_lo, mf_hi, mf_d), mf_opts);
            for (const auto& w : traj.warnings) std::cerr << "warning: " << w << '\n';
            json doc{{"max_mass_error", traj.max_mass_error},
                     {"clamp_events", traj.clamp_events},
                     {"max_clamp", traj.max_clamp},
                     {"max_boundary_drift", traj.max_boundary_drift},
                     {"warnings", traj.warnings}};
            try {
                const auto eq = solve_equilibrium(mf_d, 1e-12, mf_lo, mf_hi);
                double l1 = 0.0;
                for (std::size_t k = 0; k < eq.window.size(); ++k) l1 += std::abs(traj.final.z[k] - eq.window[k]);
                doc["l1_to_equilibrium"] = l1;
            } catch (const ConvergenceError& e) {
                std::cerr << "warning: no equilibrium for comparison: " << e.what() << '\n';
            }
            std::cout << doc.dump(2) << '\n';
            run.write_json(".json", doc);
            auto csv = run.open(".csv");
            write_trajectory_csv(csv, traj, mf_lo);
            run.finish(cfg, 0);
        };
    });

    // equilibrium
    auto* eqc = app.add_subcommand("equilibrium", "Mean-field fixed point and the (1/2)^M check");
    Common eq_c;
    int eq_d = 2, eq_M = 10, eq_lo = -40, eq_hi = 30;
    double eq_tol = 1e-12;
    add_common(eqc, eq_c);
    eqc->add_option("--d", eq_d)->capture_default_str();
    eqc->add_option("--tol", eq_tol, "Balance residual tolerance")->capture_default_str();
    eqc->add_option("--M-max", eq_M)->capture_default_str();
    eqc->add_option("--lo", eq_lo)->capture_default_str();
    eqc->add_option("--hi", eq_hi)->capture_default_str();
    eqc->callback([&] {
        action = [&] {
            Run run("equilibrium", eq_c.dir, eq_c.tag, argv_copy);
            const auto eq = solve_equilibrium(eq_d, eq_tol, eq_lo, eq_hi);
            HalfBoundReport g;
            if (eq_d == 2) g = verify_half_bound(eq, 40);
            const auto doc = to_json(eq, eq_M, g);
            std::cout << doc.dump(2) << '\n';
            run.write_json(".json", doc);
            run.finish({{"d", eq_d}, {"tol", eq_tol}, {"lo", eq_lo}, {"hi", eq_hi}, {"M_max", eq_M}}, 0);
        };
    });

    // reduce
    auto* red = app.add_subcommand("reduce", "Group sizes for a rational system with p = q");
    Common red_c;
    std::string red_p, red_q;
    add_common(red, red_c);
    red->add_option("--p", red_p, "Rational rates, e.g. 0.5,0.3,0.2 or 1/2,3/10,1/5")->required();
    red->add_option("--q", red_q, "Availability rates (must equal p)");
    red->callback([&] {
        action = [&] {
            Run run("reduce", red_c.dir, red_c.tag, argv_copy);
            const auto p = parse_rational_list(red_p);
            const auto gs = red_q.empty() ? reduce(p) : reduce(p, parse_rational_list(red_q));
            const auto doc = to_json(gs);
            std::cout << doc.dump(2) << '\n';
            run.write_json(".json", doc);
            run.finish({{"p", red_p}, {"q", red_q}}, 0);
        };
    });

    // kidney
    auto* kid = app.add_subcommand("kidney", "Kidney exchange pool with a token ledger between hospitals");
    Common kid_c;
    std::string population_file, kid_rule = "min_token";
    kidney::PopulationConfig pop_cfg;
    kidney::HorizonOptions hz;
    bool events = false;
    std::size_t compare = 0, kid_workers = 1;
    add_common(kid, kid_c);
    kid->add_option("--population", population_file, "Population config JSON")->check(CLI::ExistingFile);
    kid->add_option("--pairs", pop_cfg.pairs, "Patient-donor pairs in the population")->capture_default_str();
    kid->add_option("--hospitals", pop_cfg.hospitals)->capture_default_str();
    kid->add_option("--population-seed", pop_cfg.seed)->capture_default_str();
    kid->add_option("--rule", kid_rule, "min_token or uniform")->capture_default_str();
    kid->add_option("--days", hz.days)->capture_default_str();
    kid->add_option("--seed", hz.seed)->capture_default_str();
    kid->add_option("--record-every", hz.record_every, "Days between ledger snapshots")->capture_default_str();
    kid->add_option("--departure-probability", hz.departure_probability)->capture_default_str();
    kid->add_flag("--events", events, "Write the per-day event log");
    kid->add_option("--compare", compare, "Also run this many matched-seed comparisons of both rules");
    kid->add_option("--workers", kid_workers, "Threads for --compare")->capture_default_str();
    kid->callback([&] {
        action = [&] {
            Run run("kidney", kid_c.dir, kid_c.tag, argv_copy);
            if (!population_file.empty()) {
                std::ifstream in(population_file);
                try {
                    pop_cfg = kidney::population_config_from_json(json::parse(in));
                } catch (const json::exception& e) {
                    throw ValidationError(std::string("cannot parse ") + population_file + ": " + e.what());
                }
            }
            pop_cfg.validate();
            const auto pop = kidney::generate_population(pop_cfg);
            const Rule rule = parse_rule(kid_rule);
            std::ofstream ev;
            if (events) {
                ev = run.open(".events.csv");
                hz.events = &ev;
            }
            const auto res = kidney::run_horizon(pop, rule, hz);
            json doc{{"rule", to_string(rule)},
                     {"days", hz.days},
                     {"hospitals", pop.hospitals.size()},
                     {"max_abs_tokens", res.max_abs_tokens},
                     {"final_ledger", res.final_ledger},
                     {"diagnostics", kidney::to_json(res.diagnostics)}};
            if (compare > 0) {
                const auto cmp = kidney::compare_rules(pop, compare, hz.days, hz.seed, kid_workers);
                doc["comparison"] = {{"max_abs_min_token", cmp.max_abs_min_token},
                                     {"max_abs_uniform", cmp.max_abs_uniform},
                                     {"min_token_smaller", cmp.min_token_smaller},
                                     {"share", cmp.share()}};
            }
            std::cout << doc.dump(2) << '\n';
            run.write_json(".json", doc);
            auto csv = run.open(".csv");
            kidney::write_trajectory_csv(csv, res);
            run.write_json(".population.json", kidney::to_json(pop_cfg));
            run.finish({{"population", kidney::to_json(pop_cfg)},
                        {"rule", to_string(rule)},
                        {"days", hz.days},
                        {"record_every", hz.record_every},
                        {"departure_probability", hz.departure_probability},
                        {"compare", compare}},
                       hz.seed);
        };
    });

    // check
    auto* chk = app.add_subcommand("check", "Run the acceptance criteria");
    Common chk_c;
    bool quick = false;
    AcceptanceOptions acc;
    add_common(chk, chk_c);
    chk->add_flag("--quick", quick, "Shorter Monte Carlo horizons");
    chk->add_option("--workers", acc.workers)->capture_default_str();
    chk->add_option("--only", acc.only, "Criterion ids, comma separated")->delimiter(',')->check(CLI::Range(1, 13));
    int check_status = 0;
    chk->callback([&] {
        action = [&] {
            Run run("check", chk_c.dir, chk_c.tag, argv_copy);
            acc.profile = quick ? Profile::Quick : Profile::Full;
            acc.on_result = [](const CriterionResult& r) { std::cout << format_line(r) << std::endl; };
            const auto results = run_acceptance(acc);
            json doc = json::array();
            std::size_t passed = 0;
            for (const auto& r : results) {
                passed += r.passed ? 1 : 0;
                auto j = to_json(r);
                j.erase("seconds");
                doc.push_back(j);
            }
            std::cout << passed << "/" << results.size() << " criteria passed\n";
            run.write_json(".json", doc);
            run.finish({{"profile", quick ? "quick" : "full"}, {"only", acc.only}}, 0);
            check_status = passed == results.size() ? 0 : 3;
        };
    });

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        if (!args.empty() && args.front() == "--replay") {
            if (args.size() != 2) throw CLI::ValidationError("--replay takes exactly one manifest path");
            std::ifstream in(args[1]);
            if (!in) throw ValidationError("cannot read " + args[1]);
            const auto manifest = json::parse(in);
            return dispatch(manifest.at("argv").get<std::vector<std::string>>());
        }
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const json::exception& e) {
        std::cerr << "error: bad manifest: " << e.what() << '\n';
        return 1;
    }
    if (!action) return 1;
    action();
    return check_status;
}

int main(int argc, char** argv) {
    try {
        return dispatch(std::vector<std::string>(argv + 1, argv + argc));
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const InfeasibleError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const InvariantViolation& e) {
        std::cerr << "invariant violated: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
}
