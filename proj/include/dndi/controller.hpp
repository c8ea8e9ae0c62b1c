// Distributed dynamic-inversion consensus tracking.
//
// Each follower i forms the graph-weighted tracking error
//
//   E_i = (d_i + b_i) Y_i - sum_j a_ij Y_j - b_i Y_L
//
// and picks U_i so that E_i' = -K_i E_i. Both output channels (t_go and
// lambda_dot) are coupled to the same channel of the neighbours only, so every
// computation below runs channel by channel.
#pragma once

#include <dndi/engagement.hpp>
#include <dndi/error.hpp>
#include <dndi/topology.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace dndi {

using OutputRate = OutputVector;
using ConsensusError = OutputVector;

/// Diagonal error-dynamics gain K_i = diag(k_tgo, k_los) [1/s].
struct GainMatrix {
    double k_tgo = 2.0;
    double k_los = 2.0;

    double operator[](std::size_t c) const { return c == 0 ? k_tgo : k_los; }
    bool valid() const { return std::isfinite(k_tgo) && std::isfinite(k_los) && k_tgo > 0.0 && k_los > 0.0; }
};

/// Virtual leader whose time-to-go falls along a straight line and whose LOS
/// rate is zero: Y_L(t) = (delta t + t_go_0, 0).
struct LeaderModel {
    double delta = -1.0;
    double t_go_0 = 0.0;
};

inline OutputVector leader_output(double t, const LeaderModel &m) {
    return {m.delta * t + m.t_go_0, 0.0};
}

inline OutputRate leader_output_rate(const LeaderModel &m) { return {m.delta, 0.0}; }

/// Mean of the initial times-to-go; every entry must be positive.
inline double leader_t_go_0_from_initial(std::span<const OutputVector> initial) {
    if (initial.empty()) {
        throw Error(ErrorCode::kNoMissiles, "missiles", "no initial outputs");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < initial.size(); ++i) {
        const double t = initial[i].t_go;
        if (!(std::isfinite(t) && t > 0.0)) {
            throw Error(ErrorCode::kNonpositiveTgo, "missiles[" + std::to_string(i + 1) + "]",
                        "initial time-to-go " + std::to_string(t) + " s is not positive");
        }
        sum += t;
    }
    return sum / static_cast<double>(initial.size());
}

namespace detail {

inline bool is_active(const ActiveMask &active, std::size_t j) {
    return active.empty() || active[j];
}

/// d_i counted over active neighbours only.
inline double active_degree(const CommGraph &g, std::size_t i, const ActiveMask &active) {
    double d = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        if (j != i && is_active(active, j)) d += g.weight(i, j);
    }
    return d;
}

} // namespace detail

/// E_i for follower i. Inactive followers (empty mask = all active) are
/// excluded from the neighbour sums.
inline ConsensusError consensus_error(std::size_t i, std::span<const OutputVector> stack,
                                      const OutputVector &y_leader, const CommGraph &g,
                                      const ActiveMask &active = {}) {
    const double d = detail::active_degree(g, i, active);
    const double b = g.leader_link(i);
    ConsensusError e;
    for (std::size_t c = 0; c < OutputVector::kChannels; ++c) {
        double neighbours = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (j != i && detail::is_active(active, j)) neighbours += g.weight(i, j) * stack[j][c];
        }
        e[c] = (d + b) * stack[i][c] - neighbours - b * y_leader[c];
    }
    return e;
}

/// Output rate that enforces E_i' = -K_i E_i given the neighbours' rates:
/// (d_i + b_i)^-1 (sum_j a_ij Y_j' + b_i Y_L' - K_i E_i).
inline OutputRate commanded_rate(std::size_t i, std::span<const OutputVector> stack,
                                 std::span<const OutputRate> rates, const OutputVector &y_leader,
                                 const OutputRate &ydot_leader, const CommGraph &g,
                                 const GainMatrix &k, const ActiveMask &active = {}) {
    const double d = detail::active_degree(g, i, active);
    const double b = g.leader_link(i);
    if (!(d + b > 0.0)) {
        throw Error(ErrorCode::kIsolatedAgent, "agent " + std::to_string(i + 1),
                    "d_i + beta_i = 0; control law undefined");
    }
    const auto e = consensus_error(i, stack, y_leader, g, active);
    OutputRate out;
    for (std::size_t c = 0; c < OutputVector::kChannels; ++c) {
        double neighbours = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (j != i && detail::is_active(active, j)) neighbours += g.weight(i, j) * rates[j][c];
        }
        out[c] = (neighbours + b * ydot_leader[c] - k[c] * e[c]) / (d + b);
    }
    return out;
}

/// U = g_Y^-1 (Y' - f_Y). Throws kControllerSingular when the guards fail.
inline PolarControl invert_output_dynamics(const EngagementState &s, const OutputRate &desired,
                                           const Guards &guards = {}) {
    Eigen::Vector2d f_y;
    Eigen::Matrix2d g_y;
    try {
        f_y = output_drift(s, guards);
        g_y = output_input_matrix(s, guards);
    } catch (const Error &e) {
        throw Error(ErrorCode::kControllerSingular, e.field(), e.what());
    }
    // g_Y is diagonal.
    return {(desired.t_go - f_y(0)) / g_y(0, 0), (desired.lambda_dot - f_y(1)) / g_y(1, 1)};
}

/// Y' = f_Y + g_Y U actually produced by a polar control.
inline OutputRate achieved_rate(const EngagementState &s, const PolarControl &u,
                                const Guards &guards = {}) {
    const Eigen::Vector2d ydot =
        output_drift(s, guards) + output_input_matrix(s, guards) * Eigen::Vector2d(u.u1, u.u2);
    return OutputVector::from(ydot);
}

/// Closed-form control of follower i using the supplied neighbour rates.
inline PolarControl control(std::size_t i, const EngagementState &state_i,
                            std::span<const OutputVector> stack, std::span<const OutputRate> rates,
                            const OutputVector &y_leader, const OutputRate &ydot_leader,
                            const CommGraph &g, const GainMatrix &k, const Guards &guards = {},
                            const ActiveMask &active = {}) {
    const auto desired = commanded_rate(i, stack, rates, y_leader, ydot_leader, g, k, active);
    return invert_output_dynamics(state_i, desired, guards);
}

/// How a follower takes part in the coupled rate solve.
enum class AgentRole {
    kControlled, // rate is an unknown of the solve
    kHeld,       // applies a held control; its rate is known
    kInactive,   // retired, ignored entirely
};

struct ExactSolution {
    std::vector<OutputRate> rates;
    std::vector<PolarControl> controls; // meaningful for controlled followers only
};

/// Simultaneous solve of every controlled follower's rate.
///
/// Substituting U_i into Y_i' = f_Y + g_Y U_i gives, per channel,
///   (d_i + b_i) y_i' - sum_{j controlled} a_ij y_j' =
///       sum_{j held} a_ij y_j' + b_i y_L' - k_i e_i,
/// a principal block of (L + B). Held followers must supply their rate in
/// `known_rates`; entries for controlled followers are overwritten.
inline std::vector<OutputRate> solve_coupled_rates(std::span<const OutputVector> outputs,
                                                   std::span<const OutputRate> known_rates,
                                                   std::span<const AgentRole> roles,
                                                   const OutputVector &y_leader,
                                                   const OutputRate &ydot_leader, const CommGraph &g,
                                                   std::span<const GainMatrix> gains) {
    const std::size_t n = g.size();
    ActiveMask active(n);
    std::vector<Eigen::Index> slot(n, -1);
    std::vector<std::size_t> controlled;
    for (std::size_t i = 0; i < n; ++i) {
        active[i] = roles[i] != AgentRole::kInactive;
        if (roles[i] == AgentRole::kControlled) {
            slot[i] = static_cast<Eigen::Index>(controlled.size());
            controlled.push_back(i);
        }
    }

    std::vector<OutputRate> rates(known_rates.begin(), known_rates.end());
    if (controlled.empty()) return rates;

    const auto m = static_cast<Eigen::Index>(controlled.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, 2);
    for (Eigen::Index r = 0; r < m; ++r) {
        const auto i = controlled[static_cast<std::size_t>(r)];
        const double b = g.leader_link(i);
        a(r, r) = detail::active_degree(g, i, active) + b;
        const auto e = consensus_error(i, outputs, y_leader, g, active);
        for (std::size_t c = 0; c < 2; ++c) {
            rhs(r, static_cast<Eigen::Index>(c)) = b * ydot_leader[c] - gains[i][c] * e[c];
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || !active[j]) continue;
            const double w = g.weight(i, j);
            if (w == 0.0) continue;
            if (slot[j] >= 0) {
                a(r, slot[j]) = -w;
            } else {
                for (std::size_t c = 0; c < 2; ++c) {
                    rhs(r, static_cast<Eigen::Index>(c)) += w * known_rates[j][c];
                }
            }
        }
    }

    const Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::kSingularCoupling, "graph",
                    "coupling matrix (L + B) is singular for the controlled followers");
    }
    const Eigen::MatrixXd ydot = llt.solve(rhs);
    for (Eigen::Index r = 0; r < m; ++r) {
        rates[controlled[static_cast<std::size_t>(r)]] = {ydot(r, 0), ydot(r, 1)};
    }
    return rates;
}

/// Coupled rates plus the control that realises each controlled follower's
/// rate, U_i = g_Y^-1 (Y_i' - f_Y).
inline ExactSolution ydot_exact_solve(std::span<const EngagementState> states,
                                      std::span<const OutputVector> outputs,
                                      std::span<const OutputRate> known_rates,
                                      std::span<const AgentRole> roles,
                                      const OutputVector &y_leader, const OutputRate &ydot_leader,
                                      const CommGraph &g, std::span<const GainMatrix> gains,
                                      const Guards &guards = {}) {
    ExactSolution sol;
    sol.rates = solve_coupled_rates(outputs, known_rates, roles, y_leader, ydot_leader, g, gains);
    sol.controls.assign(g.size(), PolarControl{});
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (roles[i] == AgentRole::kControlled) {
            sol.controls[i] = invert_output_dynamics(states[i], sol.rates[i], guards);
        }
    }
    return sol;
}

/// Convenience form: every follower active and controlled.
inline ExactSolution ydot_exact_solve(std::span<const EngagementState> states,
                                      std::span<const OutputVector> outputs,
                                      const OutputVector &y_leader, const OutputRate &ydot_leader,
                                      const CommGraph &g, std::span<const GainMatrix> gains,
                                      const Guards &guards = {}) {
    const std::vector<AgentRole> roles(g.size(), AgentRole::kControlled);
    const std::vector<OutputRate> none(g.size());
    return ydot_exact_solve(states, outputs, none, roles, y_leader, ydot_leader, g, gains, guards);
}

/// Neighbour rates for the delayed coupling mode: the previous step's
/// broadcast values, unchanged.
inline std::vector<OutputRate> ydot_delayed(std::span<const OutputRate> previous) {
    return {previous.begin(), previous.end()};
}

/// Broadcast rates assumed before the first step: every follower at Y_L'.
inline std::vector<OutputRate> initial_delayed_rates(std::size_t n, const OutputRate &ydot_leader) {
    return std::vector<OutputRate>(n, ydot_leader);
}

} // namespace dndi
