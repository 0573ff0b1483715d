#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace tokensys {

/// Tail fractions z_i (share of agents holding at least i tokens) for
/// i in [lo, hi]. Outside the window z is 1 on the left and 0 on the right.
struct MeanFieldState {
    int lo = -40;
    int hi = 30;
    int d = 2;
    std::vector<double> z;

    std::size_t size() const { return z.size(); }
    double at(int i) const {
        if (i < lo) return 1.0;
        if (i > hi) return 0.0;
        return z[static_cast<std::size_t>(i - lo)];
    }

    // z_i = 1 for i <= 0 and 0 for i >= 1: every agent starts with no tokens.
    static MeanFieldState step_initial(int lo, int hi, int d);
    void validate() const;
};

// dz_i/dt = (z_{i-1}^d - z_i^d) - (z_i - z_{i+1}) over the window.
std::vector<double> drift(const MeanFieldState& state);

// sum_{i>=1} z_i - sum_{i<=0} (1 - z_i): the mean token holding, which is 0.
double mass_identity(const MeanFieldState& state);

struct IntegrateOptions {
    double T = 200.0;
    double dt = 0.01;
    std::size_t record_every = 100;  // steps between stored snapshots
    double boundary_tol = 1e-10;
    double clamp_tol = 1e-9;
};

struct Trajectory {
    std::vector<double> t;
    std::vector<std::vector<double>> z;
    MeanFieldState final;
    double max_mass_error = 0.0;
    std::size_t clamp_events = 0;  // corrections larger than clamp_tol
    double max_clamp = 0.0;
    double max_boundary_drift = 0.0;
    std::vector<std::string> warnings;
};

Trajectory integrate(const MeanFieldState& initial, const IntegrateOptions& options = {});

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, int lo);

/// Residual of the zero-mean balance equation at pi0:
///   sum_{i>=1} pi0^(d^i) - sum_{i>=0} (1 - pi0^(d^-i)).
/// Negative below the equilibrium value and positive above it.
double balance_residual(double pi0, int d, double tol = 1e-12);

/// Fixed point of the drift: pi_{i+1} = pi_i^d with pi_0 solving the balance equation.
struct EquilibriumPoint {
    double pi0 = 0.0;
    int d = 2;
    int lo = -40;
    int hi = 30;
    double residual = 0.0;
    std::vector<double> window;  // pi_i for i in [lo, hi]

    double pi(int i) const;  // from powers of pi0, any i
    // P(|s| <= M) in the limit: pi_{-M} - pi_{M+1}.
    double p_inf(int M) const;
    // Same quantity read off the stored window.
    double p_inf_window(int M) const;
    MeanFieldState as_state() const;
};

EquilibriumPoint solve_equilibrium(int d, double tol = 1e-12, int lo = -40, int hi = 30);

struct HalfBoundReport {
    std::vector<double> g;  // g[M-1] for M = 1..M_max
    double min_g = 0.0;
    int argmin = 0;
    bool passed = true;
};

/// g(M) = pi0^(2^-M) - pi0^(2^(M+1)) - 1 + 2^-M for M = 1..M_max. Throws
/// InvariantViolation when some g(M) < 0.
HalfBoundReport verify_half_bound(const EquilibriumPoint& eq, int M_max = 40);

struct LipschitzReport {
    std::size_t samples = 0;
    double max_ratio = 0.0;
    double bound = 0.0;  // 2 + 2d
    std::size_t violations = 0;
};

LipschitzReport lipschitz_spot_check(int d, std::size_t samples, std::uint64_t seed = 1, int lo = -20, int hi = 20);

nlohmann::json to_json(const EquilibriumPoint& eq, int M_max, const HalfBoundReport& g);

/// Two agent types of equal count with p_B = alpha p_A and q_B = beta q_A, d = 2.
struct TwoTypeState {
    int lo = -40;
    int hi = 30;
    double alpha = 1.0;
    double beta = 1.0;
    std::vector<double> zA, zB;

    double atA(int i) const { return edge(zA, i); }
    double atB(int i) const { return edge(zB, i); }

    static TwoTypeState step_initial(int lo, int hi, double alpha, double beta);
    void validate() const;

private:
    double edge(const std::vector<double>& z, int i) const {
        if (i < lo) return 1.0;
        if (i > hi) return 0.0;
        return z[static_cast<std::size_t>(i - lo)];
    }
};

struct TwoTypeDrift {
    std::vector<double> A, B;
    double request_total = 0.0;   // sum of c^A and c^B
    double provider_total = 0.0;  // sum of d^A and d^B
};

TwoTypeDrift two_type_drift(const TwoTypeState& state);

// Left-hand side of the joint zero-mean identity over both types.
double two_type_mass_identity(const TwoTypeState& state);

struct TwoTypeTrajectory {
    std::vector<double> t;
    TwoTypeState final;
    double max_mass_error = 0.0;
    double max_probability_error = 0.0;
    std::size_t clamp_events = 0;
    double max_clamp = 0.0;
    double final_drift_norm = 0.0;  // L1 norm of the drift at the end
    std::vector<std::string> warnings;
};

TwoTypeTrajectory two_type_integrate(const TwoTypeState& initial, const IntegrateOptions& options = {});

// z_{-M} - z_{M+1} for a tail-fraction vector on [lo, hi].
double window_tail_mass(const std::vector<double>& z, int lo, int M);

}  // namespace tokensys
