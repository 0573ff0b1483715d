#include "tokensys/mean_field.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>

#include "tokensys/error.hpp"
#include "tokensys/rng.hpp"

namespace tokensys {

namespace {

constexpr std::size_t kMaxWarnings = 8;

void warn(std::vector<std::string>& warnings, std::string text) {
    if (warnings.size() < kMaxWarnings) warnings.push_back(std::move(text));
}

void check_tail_vector(const std::vector<double>& z, int lo, int hi, const char* name) {
    if (lo >= 0 || hi <= 0) throw ValidationError("mean-field window must satisfy lo < 0 < hi");
    if (z.size() != static_cast<std::size_t>(hi - lo + 1)) {
        throw ValidationError(std::string(name) + ": vector length does not match the window");
    }
    double prev = 1.0;
    for (double v : z) {
        if (!(v >= -1e-9 && v <= 1.0 + 1e-9)) throw ValidationError(std::string(name) + ": entry outside [0, 1]");
        if (v > prev + 1e-9) throw ValidationError(std::string(name) + ": tail fractions must be non-increasing");
        prev = v;
    }
}

// Projects z back onto [0, 1] and makes it non-increasing; returns the largest correction.
double clamp_monotone(double* z, std::size_t n) {
    double worst = 0.0;
    double prev = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double fixed = std::clamp(std::min(z[k], prev), 0.0, 1.0);
        worst = std::max(worst, std::abs(fixed - z[k]));
        z[k] = fixed;
        prev = fixed;
    }
    return worst;
}

// One classic RK4 step for dy/dt = f(y).
template <typename F>
void rk4_step(std::vector<double>& y, double dt, F&& f, std::vector<double> (&k)[4], std::vector<double>& tmp) {
    const std::size_t n = y.size();
    f(y, k[0]);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k[0][i];
    f(tmp, k[1]);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k[1][i];
    f(tmp, k[2]);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + dt * k[2][i];
    f(tmp, k[3]);
    for (std::size_t i = 0; i < n; ++i) y[i] += dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
}

void single_drift(const double* z, std::size_t n, int d, double* out) {
    for (std::size_t k = 0; k < n; ++k) {
        const double left = k == 0 ? 1.0 : z[k - 1];
        const double right = k + 1 == n ? 0.0 : z[k + 1];
        out[k] = (std::pow(left, d) - std::pow(z[k], d)) - (z[k] - right);
    }
}

double single_mass(const double* z, std::size_t n, int lo) {
    double pos = 0.0, neg = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const int i = lo + static_cast<int>(k);
        if (i >= 1) pos += z[k];
        else neg += 1.0 - z[k];
    }
    return pos - neg;
}

void check_options(const IntegrateOptions& options) {
    if (!(options.dt > 0.0) || !(options.T >= 0.0)) throw ValidationError("integration needs dt > 0 and T >= 0");
}

}  // namespace

MeanFieldState MeanFieldState::step_initial(int lo, int hi, int d) {
    if (lo >= 0 || hi <= 0) throw ValidationError("mean-field window must satisfy lo < 0 < hi");
    if (d < 1) throw ValidationError("d must be at least 1");
    MeanFieldState s;
    s.lo = lo;
    s.hi = hi;
    s.d = d;
    s.z.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
    for (int i = lo; i <= 0; ++i) s.z[static_cast<std::size_t>(i - lo)] = 1.0;
    return s;
}

void MeanFieldState::validate() const {
    if (d < 1) throw ValidationError("d must be at least 1");
    check_tail_vector(z, lo, hi, "mean-field state");
}

std::vector<double> drift(const MeanFieldState& state) {
    std::vector<double> out(state.size());
    single_drift(state.z.data(), state.size(), state.d, out.data());
    return out;
}

double mass_identity(const MeanFieldState& state) { return single_mass(state.z.data(), state.size(), state.lo); }

Trajectory integrate(const MeanFieldState& initial, const IntegrateOptions& options) {
    initial.validate();
    check_options(options);
    Trajectory traj;
    std::vector<double> y = initial.z;
    const std::size_t n = y.size();
    std::vector<double> k[4] = {std::vector<double>(n), std::vector<double>(n), std::vector<double>(n),
                                std::vector<double>(n)};
    std::vector<double> tmp(n);
    const int d = initial.d;
    auto f = [&](const std::vector<double>& in, std::vector<double>& out) {
        single_drift(in.data(), n, d, out.data());
    };

    const auto steps = static_cast<std::size_t>(std::llround(options.T / options.dt));
    const std::size_t every = std::max<std::size_t>(options.record_every, 1);
    traj.t.push_back(0.0);
    traj.z.push_back(y);
    traj.max_mass_error = std::abs(single_mass(y.data(), n, initial.lo));
    bool boundary_warned = false;
    for (std::size_t s = 1; s <= steps; ++s) {
        rk4_step(y, options.dt, f, k, tmp);
        const double edge = std::max(std::abs(k[0].front()), std::abs(k[0].back()));
        traj.max_boundary_drift = std::max(traj.max_boundary_drift, edge);
        if (edge > options.boundary_tol && !boundary_warned) {
            warn(traj.warnings, "window too narrow: boundary drift " + std::to_string(edge) + " at t = " +
                                    std::to_string(static_cast<double>(s - 1) * options.dt));
            boundary_warned = true;
        }
        const double fix = clamp_monotone(y.data(), n);
        traj.max_clamp = std::max(traj.max_clamp, fix);
        if (fix > options.clamp_tol) {
            ++traj.clamp_events;
            warn(traj.warnings, "clamped a correction of " + std::to_string(fix) + " at step " + std::to_string(s));
        }
        traj.max_mass_error = std::max(traj.max_mass_error, std::abs(single_mass(y.data(), n, initial.lo)));
        if (s % every == 0 || s == steps) {
            traj.t.push_back(static_cast<double>(s) * options.dt);
            traj.z.push_back(y);
        }
    }
    traj.final = initial;
    traj.final.z = y;
    return traj;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, int lo) {
    out << "t,i,z\n";
    const auto old = out.precision(17);
    for (std::size_t r = 0; r < traj.t.size(); ++r) {
        for (std::size_t k = 0; k < traj.z[r].size(); ++k) {
            out << traj.t[r] << ',' << lo + static_cast<int>(k) << ',' << traj.z[r][k] << '\n';
        }
    }
    out.precision(old);
}

double balance_residual(double pi0, int d, double tol) {
    if (!(pi0 > 0.0 && pi0 < 1.0)) throw ValidationError("balance_residual needs pi0 in (0, 1)");
    if (d < 2) throw ValidationError("balance_residual needs d >= 2");
    const double log_pi = std::log(pi0);
    const double cut = tol * 1e-3;
    const double base = static_cast<double>(d);

    double right = 0.0;
    for (double e = base;; e *= base) {
        const double term = std::exp(e * log_pi);
        right += term;
        if (term < cut) break;
    }
    // 1 - pi0^(d^-i) <= -log(pi0) d^-i, so the remainder after index i is at
    // most -log(pi0) d^-i / (d - 1).
    double left = 0.0;
    for (double e = 1.0;; e /= base) {
        const double term = -std::expm1(e * log_pi);
        left += term;
        const double remainder = -log_pi * e / (base - 1.0);
        if (term < cut && remainder < cut) break;
    }
    return right - left;
}

double EquilibriumPoint::pi(int i) const { return std::exp(std::pow(static_cast<double>(d), i) * std::log(pi0)); }

double EquilibriumPoint::p_inf(int M) const { return pi(-M) - pi(M + 1); }

double EquilibriumPoint::p_inf_window(int M) const { return window_tail_mass(window, lo, M); }

MeanFieldState EquilibriumPoint::as_state() const {
    MeanFieldState s;
    s.lo = lo;
    s.hi = hi;
    s.d = d;
    s.z = window;
    return s;
}

EquilibriumPoint solve_equilibrium(int d, double tol, int lo, int hi) {
    if (d < 2) throw ValidationError("equilibrium requires d >= 2");
    if (lo >= 0 || hi <= 0) throw ValidationError("mean-field window must satisfy lo < 0 < hi");
    const auto R = [&](double x) { return balance_residual(x, d, tol); };

    double a = 0.5, b = 0.75;
    if (d > 2) {
        // The residual increases in pi0; scan for the first sign change.
        a = 1e-3;
        b = a;
        double prev = R(a);
        for (int k = 2; k < 1000 && prev < 0.0; ++k) {
            a = b;
            b = k * 1e-3;
            prev = R(b);
        }
    }
    double Ra = R(a), Rb = R(b);
    if (!(Ra < 0.0 && Rb > 0.0)) {
        throw ConvergenceError("equilibrium bracket does not change sign", std::min(std::abs(Ra), std::abs(Rb)));
    }
    for (int it = 0; it < 200 && b - a > 0.0; ++it) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        const double Rm = R(m);
        if (Rm < 0.0) {
            a = m;
            Ra = Rm;
        } else {
            b = m;
            Rb = Rm;
        }
    }
    EquilibriumPoint eq;
    eq.d = d;
    eq.lo = lo;
    eq.hi = hi;
    eq.pi0 = std::abs(Ra) < std::abs(Rb) ? a : b;
    eq.residual = std::abs(Ra) < std::abs(Rb) ? Ra : Rb;
    if (!(std::abs(eq.residual) < tol)) throw ConvergenceError("equilibrium residual above tolerance", eq.residual);
    eq.window.resize(static_cast<std::size_t>(hi - lo + 1));
    for (int i = lo; i <= hi; ++i) eq.window[static_cast<std::size_t>(i - lo)] = eq.pi(i);
    return eq;
}

HalfBoundReport verify_half_bound(const EquilibriumPoint& eq, int M_max) {
    if (eq.d != 2) throw ValidationError("the (1/2)^M bound check applies to d = 2");
    HalfBoundReport rep;
    const double log_pi = std::log(eq.pi0);
    rep.min_g = std::numeric_limits<double>::infinity();
    for (int M = 1; M <= M_max; ++M) {
        const double h = std::ldexp(1.0, -M);
        // pi0^(2^-M) - 1 evaluated as expm1 to keep precision for large M.
        const double g = h + std::expm1(h * log_pi) - std::exp(std::ldexp(1.0, M + 1) * log_pi);
        rep.g.push_back(g);
        if (g < rep.min_g) {
            rep.min_g = g;
            rep.argmin = M;
        }
        if (g < 0.0) rep.passed = false;
    }
    if (!rep.passed) {
        throw InvariantViolation("g(M) < 0 at M = " + std::to_string(rep.argmin) + " (g = " +
                                 std::to_string(rep.min_g) + ")");
    }
    return rep;
}

LipschitzReport lipschitz_spot_check(int d, std::size_t samples, std::uint64_t seed, int lo, int hi) {
    if (d < 1) throw ValidationError("d must be at least 1");
    LipschitzReport rep;
    rep.samples = samples;
    rep.bound = 2.0 + 2.0 * d;
    Rng rng(seed);
    const auto n = static_cast<std::size_t>(hi - lo + 1);
    auto x = MeanFieldState::step_initial(lo, hi, d);
    auto y = x;
    auto random_state = [&](std::vector<double>& z) {
        for (auto& v : z) v = rng.uniform();
        std::sort(z.begin(), z.end(), std::greater<>());
    };
    for (std::size_t s = 0; s < samples; ++s) {
        random_state(x.z);
        switch (s % 3) {
            case 0: random_state(y.z); break;
            case 1: {
                // Nearby state: small perturbation of a few coordinates.
                y.z = x.z;
                const double eps = std::pow(10.0, -1.0 - 6.0 * rng.uniform());
                for (int k = 0; k < 3; ++k) {
                    auto& v = y.z[rng.index(n)];
                    v = std::clamp(v + eps * (2.0 * rng.uniform() - 1.0), 0.0, 1.0);
                }
                break;
            }
            default: {
                // Arbitrary points of [0, 1]^n, not necessarily monotone.
                for (auto& v : x.z) v = rng.uniform();
                for (auto& v : y.z) v = rng.uniform();
                break;
            }
        }
        double dist = 0.0;
        for (std::size_t k = 0; k < n; ++k) dist += std::abs(x.z[k] - y.z[k]);
        if (dist == 0.0) continue;
        const auto fx = drift(x);
        const auto fy = drift(y);
        double num = 0.0;
        for (std::size_t k = 0; k < n; ++k) num += std::abs(fx[k] - fy[k]);
        const double ratio = num / dist;
        rep.max_ratio = std::max(rep.max_ratio, ratio);
        if (ratio > rep.bound) ++rep.violations;
    }
    return rep;
}

nlohmann::json to_json(const EquilibriumPoint& eq, int M_max, const HalfBoundReport& g) {
    nlohmann::json window = nlohmann::json::array();
    for (int i = eq.lo; i <= eq.hi; ++i) window.push_back({i, eq.window[static_cast<std::size_t>(i - eq.lo)]});
    nlohmann::json p_inf = nlohmann::json::array();
    for (int M = 0; M <= M_max; ++M) p_inf.push_back({M, eq.p_inf(M)});
    nlohmann::json out{{"pi0", eq.pi0},
                       {"d", eq.d},
                       {"residual", eq.residual},
                       {"window", window},
                       {"p_inf", p_inf}};
    if (eq.d == 2) {
        out["g_check"] = g.passed ? "pass" : "fail";
        out["g_min"] = g.min_g;
        out["g_argmin"] = g.argmin;
    }
    return out;
}

TwoTypeState TwoTypeState::step_initial(int lo, int hi, double alpha, double beta) {
    const auto base = MeanFieldState::step_initial(lo, hi, 2);
    TwoTypeState s;
    s.lo = lo;
    s.hi = hi;
    s.alpha = alpha;
    s.beta = beta;
    s.zA = base.z;
    s.zB = base.z;
    s.validate();
    return s;
}

void TwoTypeState::validate() const {
    if (!(alpha > 0.0 && beta > 0.0)) throw ValidationError("alpha and beta must be positive");
    check_tail_vector(zA, lo, hi, "type A state");
    check_tail_vector(zB, lo, hi, "type B state");
}

namespace {

// Drift of the packed vector [zA, zB]; also returns the probability totals.
void packed_two_type_drift(const double* zA, const double* zB, std::size_t n, double alpha, double beta,
                           double* outA, double* outB, double* request_total, double* provider_total) {
    const double a = 1.0 / (1.0 + beta);
    const double b = beta / (1.0 + beta);
    const auto A = [&](std::ptrdiff_t k) { return k < 0 ? 1.0 : (k >= static_cast<std::ptrdiff_t>(n) ? 0.0 : zA[k]); };
    const auto B = [&](std::ptrdiff_t k) { return k < 0 ? 1.0 : (k >= static_cast<std::ptrdiff_t>(n) ? 0.0 : zB[k]); };
    // Provider holding exactly k tokens (window offset), type A and type B.
    const auto dA = [&](std::ptrdiff_t k) {
        const double gapA = A(k) - A(k + 1);
        const double gapB = B(k) - B(k + 1);
        return a * a * (A(k) * A(k) - A(k + 1) * A(k + 1)) + 2.0 * a * b * gapA * B(k + 1) + a * b * gapA * gapB;
    };
    const auto dB = [&](std::ptrdiff_t k) {
        const double gapA = A(k) - A(k + 1);
        const double gapB = B(k) - B(k + 1);
        return b * b * (B(k) * B(k) - B(k + 1) * B(k + 1)) + 2.0 * a * b * gapB * A(k + 1) + a * b * gapA * gapB;
    };
    const auto cA = [&](std::ptrdiff_t k) { return (A(k) - A(k + 1)) / (1.0 + alpha); };
    const auto cB = [&](std::ptrdiff_t k) { return alpha * (B(k) - B(k + 1)) / (1.0 + alpha); };

    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::ptrdiff_t>(i);
        outA[i] = -cA(k) + dA(k - 1);
        outB[i] = -cB(k) + dB(k - 1);
    }
    if (request_total) {
        double c = 0.0, dd = 0.0;
        for (std::ptrdiff_t k = -1; k < static_cast<std::ptrdiff_t>(n); ++k) {
            c += cA(k) + cB(k);
            dd += dA(k) + dB(k);
        }
        *request_total = c;
        *provider_total = dd;
    }
}

}  // namespace

TwoTypeDrift two_type_drift(const TwoTypeState& state) {
    state.validate();
    TwoTypeDrift out;
    const std::size_t n = state.zA.size();
    out.A.resize(n);
    out.B.resize(n);
    packed_two_type_drift(state.zA.data(), state.zB.data(), n, state.alpha, state.beta, out.A.data(), out.B.data(),
                          &out.request_total, &out.provider_total);
    return out;
}

double two_type_mass_identity(const TwoTypeState& state) {
    return single_mass(state.zA.data(), state.zA.size(), state.lo) +
           single_mass(state.zB.data(), state.zB.size(), state.lo);
}

TwoTypeTrajectory two_type_integrate(const TwoTypeState& initial, const IntegrateOptions& options) {
    initial.validate();
    check_options(options);
    TwoTypeTrajectory traj;
    const std::size_t n = initial.zA.size();
    std::vector<double> y(2 * n);
    std::copy(initial.zA.begin(), initial.zA.end(), y.begin());
    std::copy(initial.zB.begin(), initial.zB.end(), y.begin() + static_cast<std::ptrdiff_t>(n));
    std::vector<double> k[4] = {std::vector<double>(2 * n), std::vector<double>(2 * n), std::vector<double>(2 * n),
                                std::vector<double>(2 * n)};
    std::vector<double> tmp(2 * n);
    const double alpha = initial.alpha, beta = initial.beta;
    auto f = [&](const std::vector<double>& in, std::vector<double>& out) {
        packed_two_type_drift(in.data(), in.data() + n, n, alpha, beta, out.data(), out.data() + n, nullptr,
                              nullptr);
    };
    auto mass = [&] { return single_mass(y.data(), n, initial.lo) + single_mass(y.data() + n, n, initial.lo); };
    auto probability_error = [&] {
        std::vector<double> da(n), db(n);
        double c = 0.0, dd = 0.0;
        packed_two_type_drift(y.data(), y.data() + n, n, alpha, beta, da.data(), db.data(), &c, &dd);
        return std::max(std::abs(c - 1.0), std::abs(dd - 1.0));
    };

    const auto steps = static_cast<std::size_t>(std::llround(options.T / options.dt));
    const std::size_t every = std::max<std::size_t>(options.record_every, 1);
    traj.t.push_back(0.0);
    traj.max_mass_error = std::abs(mass());
    traj.max_probability_error = probability_error();
    for (std::size_t s = 1; s <= steps; ++s) {
        rk4_step(y, options.dt, f, k, tmp);
        double fix = clamp_monotone(y.data(), n);
        fix = std::max(fix, clamp_monotone(y.data() + n, n));
        traj.max_clamp = std::max(traj.max_clamp, fix);
        if (fix > options.clamp_tol) {
            ++traj.clamp_events;
            warn(traj.warnings, "clamped a correction of " + std::to_string(fix) + " at step " + std::to_string(s));
        }
        traj.max_mass_error = std::max(traj.max_mass_error, std::abs(mass()));
        if (s % every == 0 || s == steps) {
            traj.t.push_back(static_cast<double>(s) * options.dt);
            traj.max_probability_error = std::max(traj.max_probability_error, probability_error());
        }
    }
    traj.final = initial;
    std::copy(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n), traj.final.zA.begin());
    std::copy(y.begin() + static_cast<std::ptrdiff_t>(n), y.end(), traj.final.zB.begin());
    f(y, k[0]);
    traj.final_drift_norm = 0.0;
    for (double v : k[0]) traj.final_drift_norm += std::abs(v);
    return traj;
}

double window_tail_mass(const std::vector<double>& z, int lo, int M) {
    const int hi = lo + static_cast<int>(z.size()) - 1;
    const auto at = [&](int i) {
        if (i < lo) return 1.0;
        if (i > hi) return 0.0;
        return z[static_cast<std::size_t>(i - lo)];
    };
    return at(-M) - at(M + 1);
}

}  // namespace tokensys
