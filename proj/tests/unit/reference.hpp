#pragma once

#include <cmath>
#include <vector>

// Two-agent chain written out by hand as a birth-death walk on x = s_1.
// Agent 1 provides when every draw is agent 1, or when draws are mixed and
// agent 1 holds fewer tokens (half the time at a tie).
namespace reference {

struct TwoAgentWalk {
    double p1, q1;
    int d = 2;
    double beta = -1.0;  // >= 0: two draws with probability beta, one otherwise
    int B = 400;

    double provider1(int x) const {
        auto law = [&](int draws) {
            const double all1 = std::pow(q1, draws);
            const double all2 = std::pow(1.0 - q1, draws);
            const double mixed = 1.0 - all1 - all2;
            const double share = x < 0 ? 1.0 : x > 0 ? 0.0 : 0.5;
            return all1 + mixed * share;
        };
        if (beta >= 0.0) return beta * law(2) + (1.0 - beta) * law(1);
        return law(d);
    }

    // pi over x = -B..B at index x + B, from detailed balance.
    std::vector<double> stationary() const {
        std::vector<double> w(2 * B + 1);
        w[B] = 1.0;
        for (int x = 0; x < B; ++x) {
            const double up = (1.0 - p1) * provider1(x);
            const double down = p1 * (1.0 - provider1(x + 1));
            w[x + 1 + B] = w[x + B] * up / down;
        }
        for (int x = 0; x > -B; --x) {
            const double down = p1 * (1.0 - provider1(x));
            const double up = (1.0 - p1) * provider1(x - 1);
            w[x - 1 + B] = w[x + B] * down / up;
        }
        double z = 0.0;
        for (double v : w) z += v;
        for (double& v : w) v /= z;
        return w;
    }

    double tail(int M) const {
        const auto pi = stationary();
        double t = 0.0;
        for (int x = -B; x <= B; ++x) {
            if (std::abs(x) > M) t += pi[x + B];
        }
        return t;
    }
};

}  // namespace reference
