#include <doctest.h>

#include <cmath>
#include <sstream>

#include "tokensys/error.hpp"
#include "tokensys/mean_field.hpp"

using namespace tokensys;

namespace {

// Balance equation summed term by term, solved by plain bisection.
double hand_pi0(int d) {
    auto f = [d](double x) {
        double s = 0.0;
        for (int i = 1; i < 60; ++i) s += std::pow(x, std::pow(d, i));
        for (int i = 0; i < 400; ++i) s -= 1.0 - std::pow(x, std::pow(d, -i));
        return s;
    };
    double lo = 0.3, hi = 0.95;
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("step initial condition has zero mean") {
    const auto s = MeanFieldState::step_initial(-10, 10, 2);
    CHECK(s.at(-11) == 1.0);
    CHECK(s.at(0) == 1.0);
    CHECK(s.at(1) == 0.0);
    CHECK(mass_identity(s) == doctest::Approx(0.0));
    CHECK_NOTHROW(s.validate());
}

TEST_CASE("validation rejects non-monotone tails") {
    auto s = MeanFieldState::step_initial(-5, 5, 2);
    s.z[7] = 0.5;
    CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("drift formula at a hand-checked point") {
    MeanFieldState s;
    s.lo = -1;
    s.hi = 1;
    s.d = 2;
    s.z = {0.9, 0.6, 0.2};
    const auto f = drift(s);
    // i = 0: (z_{-1}^2 - z_0^2) - (z_0 - z_1)
    CHECK(f[1] == doctest::Approx((0.81 - 0.36) - (0.6 - 0.2)));
    // i = -1 uses z_{-2} = 1
    CHECK(f[0] == doctest::Approx((1.0 - 0.81) - (0.9 - 0.6)));
    // i = 1 uses z_2 = 0
    CHECK(f[2] == doctest::Approx((0.36 - 0.04) - 0.2));
}

TEST_CASE("balance residual changes sign at the equilibrium") {
    CHECK(balance_residual(0.6, 2) < 0.0);
    CHECK(balance_residual(0.74, 2) > 0.0);
}

TEST_CASE("equilibrium for d = 2") {
    const auto eq = solve_equilibrium(2);
    CHECK(eq.pi0 == doctest::Approx(hand_pi0(2)).epsilon(1e-10));
    CHECK(eq.pi0 > 0.66);
    CHECK(eq.pi0 < 0.68);
    CHECK(std::abs(eq.residual) < 1e-12);
    CHECK(eq.pi(-4) > 0.970);
    CHECK(eq.pi(-4) < 0.980);
    CHECK(eq.pi(1) == doctest::Approx(eq.pi0 * eq.pi0));
    for (int M = 0; M <= 10; ++M) CHECK(eq.p_inf(M) == doctest::Approx(eq.p_inf_window(M)).epsilon(1e-12));
    // The fixed point should not move under the drift.
    double worst = 0.0;
    for (double v : drift(eq.as_state())) worst = std::max(worst, std::abs(v));
    CHECK(worst < 1e-9);
}

TEST_CASE("equilibrium for larger d") {
    for (int d : {3, 4}) {
        const auto eq = solve_equilibrium(d);
        CHECK(eq.pi0 == doctest::Approx(hand_pi0(d)).epsilon(1e-9));
        CHECK(eq.pi(1) == doctest::Approx(std::pow(eq.pi0, d)));
    }
}

TEST_CASE("(1/2)^M bound") {
    const auto eq = solve_equilibrium(2);
    const auto rep = verify_half_bound(eq, 40);
    CHECK(rep.passed);
    CHECK(rep.g.size() == 40);
    for (int M = 1; M <= 40; ++M) {
        const double g = std::pow(eq.pi0, std::pow(2.0, -M)) - std::pow(eq.pi0, std::pow(2.0, M + 1)) - 1 +
                         std::pow(2.0, -M);
        CHECK(rep.g[static_cast<std::size_t>(M - 1)] == doctest::Approx(g).epsilon(1e-9));
    }
    const auto j = to_json(eq, 4, rep);
    CHECK(j["g_check"] == "pass");
    CHECK(j["p_inf"].size() == 5);
}

TEST_CASE("integration converges to the equilibrium and keeps the mean") {
    IntegrateOptions opts;
    opts.T = 200.0;
    opts.record_every = 5000;
    const auto traj = integrate(MeanFieldState::step_initial(-40, 30, 2), opts);
    const auto eq = solve_equilibrium(2);
    double l1 = 0.0;
    for (std::size_t k = 0; k < eq.window.size(); ++k) l1 += std::abs(traj.final.z[k] - eq.window[k]);
    CHECK(l1 < 1e-4);
    CHECK(traj.max_mass_error < 1e-8);
    CHECK(traj.t.size() == traj.z.size());
    std::ostringstream csv;
    write_trajectory_csv(csv, traj, -40);
    CHECK(csv.str().rfind("t,i,z\n", 0) == 0);
}

TEST_CASE("Lipschitz spot check") {
    for (int d : {2, 3}) {
        const auto rep = lipschitz_spot_check(d, 2000, 7);
        CHECK(rep.violations == 0);
        CHECK(rep.bound == 2.0 + 2.0 * d);
        CHECK(rep.max_ratio > 0.0);
    }
}

TEST_CASE("two identical types split the single-type drift evenly") {
    auto single = MeanFieldState::step_initial(-10, 10, 2);
    for (std::size_t k = 0; k < single.z.size(); ++k) single.z[k] = 1.0 / (1.0 + std::exp(0.7 * (double(k) - 10.5)));
    auto two = TwoTypeState::step_initial(-10, 10, 1.0, 1.0);
    two.zA = single.z;
    two.zB = single.z;
    const auto f = drift(single);
    const auto g = two_type_drift(two);
    for (std::size_t k = 0; k < f.size(); ++k) {
        CHECK(g.A[k] == doctest::Approx(0.5 * f[k]).epsilon(1e-12));
        CHECK(g.B[k] == doctest::Approx(0.5 * f[k]).epsilon(1e-12));
    }
}

TEST_CASE("two-type integration keeps the joint mean and stays in [0, 1]") {
    IntegrateOptions opts;
    opts.T = 50.0;
    opts.record_every = 0;
    const auto traj = two_type_integrate(TwoTypeState::step_initial(-30, 30, 10.0, 10.0), opts);
    CHECK(traj.max_mass_error < 1e-8);
    CHECK(traj.max_probability_error < 1e-9);
    CHECK(window_tail_mass(traj.final.zA, -30, 0) > 0.0);
}
