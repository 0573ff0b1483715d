#include "tokensys/two_agent.hpp"

#include <algorithm>
#include <cmath>

#include "tokensys/error.hpp"

namespace tokensys {

namespace {

void check_pair(const Pair& v, const char* name) {
    if (!(v[0] > 0.0 && v[1] > 0.0) || std::abs(v[0] + v[1] - 1.0) > 1e-12) {
        throw ValidationError(std::string(name) + " must be a full-support two-point distribution");
    }
}

// Birth-death chain on {(0,0)} and the two rays: from (0,0) the ray of
// agent 1 is entered with probability up1, and along it the walk moves out
// with probability out1 and back with probability in1 (same for agent 2).
TwoAgentSolution assemble(double up1, double out1, double in1, double up2, double out2, double in2) {
    TwoAgentSolution sol;
    sol.x = out1 / in1;
    sol.y = out2 / in2;
    if (!(sol.x < 1.0 && sol.y < 1.0)) return sol;
    sol.stable = true;
    // pi(a, b) = pi00 * (up_b / in_b) * ratio_b^(a-1); summing a >= 1 gives
    // coefficient up_b / (in_b - out_b).
    const double A = up1 / (in1 - out1);
    const double B = up2 / (in2 - out2);
    const double norm = 1.0 + A + B;
    sol.pi00 = 1.0 / norm;
    sol.c1 = A / norm;
    sol.c2 = B / norm;
    sol.expected_return = norm;
    sol.decay_a = decay_constant(sol);
    return sol;
}

}  // namespace

double TwoAgentSolution::tail(int M) const {
    if (!stable) throw ValidationError("tail requested for an unstable two-agent system");
    if (M < 0) return 1.0;
    return c1 * std::pow(x, M) + c2 * std::pow(y, M);
}

double TwoAgentSolution::mass_positive(int a) const {
    if (!stable) throw ValidationError("mass requested for an unstable two-agent system");
    if (a <= 0) return a == 0 ? pi00 : 0.0;
    return c1 * (1.0 - x) * std::pow(x, a - 1);
}

double TwoAgentSolution::mass_negative(int a) const {
    if (!stable) throw ValidationError("mass requested for an unstable two-agent system");
    if (a <= 0) return a == 0 ? pi00 : 0.0;
    return c2 * (1.0 - y) * std::pow(y, a - 1);
}

TwoAgentSolution solve(const Pair& p, const Pair& q, int d) {
    check_pair(p, "p");
    check_pair(q, "q");
    if (d < 2) throw ValidationError("two-agent closed form needs d >= 2");
    const double q1d = std::pow(q[0], d);
    const double q2d = std::pow(q[1], d);
    // Leaving (0,0) towards agent 1 holding tokens has probability p2 q1.
    // Agent 1 keeps gaining only when it alone is available; it loses a token
    // whenever it requests and agent 2 is among the available.
    auto sol = assemble(p[1] * q[0], p[1] * q1d, p[0] * (1.0 - q1d), p[0] * q[1], p[0] * q2d, p[1] * (1.0 - q2d));
    sol.stable = sol.stable && q1d < p[0] && q2d < p[1];
    return sol;
}

TwoAgentSolution solve_intermediate(const Pair& p, const Pair& q, double beta) {
    check_pair(p, "p");
    check_pair(q, "q");
    if (!(beta > 0.0 && beta <= 1.0)) throw ValidationError("beta must lie in (0, 1]");
    const double q1s = q[0] * q[0];
    const double q2s = q[1] * q[1];
    const double out1 = beta * p[1] * q1s + (1.0 - beta) * p[1] * q[0];
    const double in1 = beta * p[0] * (1.0 - q1s) + (1.0 - beta) * p[0] * q[1];
    const double out2 = beta * p[0] * q2s + (1.0 - beta) * p[0] * q[1];
    const double in2 = beta * p[1] * (1.0 - q2s) + (1.0 - beta) * p[1] * q[0];
    return assemble(p[1] * q[0], out1, in1, p[0] * q[1], out2, in2);
}

double decay_constant(const TwoAgentSolution& sol) {
    if (!sol.stable) throw ValidationError("decay constant requires a stable system");
    return std::max(sol.x, sol.y);
}

double decay_constant_grid(const TwoAgentSolution& sol, int M_cap, double step) {
    if (!sol.stable) throw ValidationError("decay constant requires a stable system");
    const auto ok = [&](double a) {
        for (int M = 1; M <= M_cap; ++M) {
            if (std::pow(a, M) < sol.c1 * std::pow(sol.x, M) + sol.c2 * std::pow(sol.y, M)) return false;
        }
        return true;
    };
    // The predicate is monotone in a, so bisect over grid indices.
    long lo = 0;
    long hi = static_cast<long>(std::ceil(1.0 / step));
    while (hi - lo > 1) {
        const long mid = (lo + hi) / 2;
        if (ok(static_cast<double>(mid) * step)) hi = mid;
        else lo = mid;
    }
    return static_cast<double>(hi) * step;
}

nlohmann::json to_json(const TwoAgentSolution& sol, int M_max) {
    nlohmann::json out{{"stable", sol.stable}};
    if (!sol.stable) return out;
    out["pi00"] = sol.pi00;
    out["expected_return"] = sol.expected_return;
    out["decay_a"] = sol.decay_a;
    out["x"] = sol.x;
    out["y"] = sol.y;
    out["c1"] = sol.c1;
    out["c2"] = sol.c2;
    nlohmann::json tail = nlohmann::json::array();
    for (int M = 0; M <= M_max; ++M) tail.push_back({M, sol.tail(M)});
    out["tail"] = tail;
    return out;
}

}  // namespace tokensys
