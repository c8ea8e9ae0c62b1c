// Planar missile/target engagement kinematics against a stationary target.
//
// Polar state X = (r, r_dot, lambda, lambda_dot) with lambda measured from the
// +x axis to the missile->target line of sight. Under polar-frame control
// U = (u1, u2) the state evolves as
//
//   r'          = r_dot
//   r_dot'      = r * lambda_dot^2 - u1
//   lambda'     = lambda_dot
//   lambda_dot' = -2 * r_dot * lambda_dot / r - u2 / r
//
// i.e. X' = f(X) + g(X) U with f control-free. The output map is
// Y = (t_go, lambda_dot) with t_go = -r / r_dot.
#pragma once

#include <dndi/error.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>

namespace dndi {

struct Position {
    double x{};
    double z{};
};

/// Polar engagement state relative to the target [m, m/s, rad, rad/s].
struct EngagementState {
    double r{};
    double r_dot{};
    double lambda{};
    double lambda_dot{};

    Eigen::Vector4d vec() const { return {r, r_dot, lambda, lambda_dot}; }
    static EngagementState from(const Eigen::Vector4d &v) { return {v(0), v(1), v(2), v(3)}; }

    bool finite() const {
        return std::isfinite(r) && std::isfinite(r_dot) && std::isfinite(lambda) &&
               std::isfinite(lambda_dot);
    }
};

/// Point-mass missile state: speed [m/s], flight-path angle [rad], position [m].
struct MissileState {
    double v{};
    double gamma{};
    double x{};
    double z{};
};

/// Control resolved along (u1) and across (u2) the line of sight [m/s^2].
struct PolarControl {
    double u1{};
    double u2{};
};

/// Tangential and normal acceleration of the missile [m/s^2].
struct BodyControl {
    double a_t{};
    double a_n{};
};

/// Output Y = (t_go [s], lambda_dot [rad/s]). A negative t_go marks an
/// opening geometry; it is reported as is, never clamped.
struct OutputVector {
    double t_go{};
    double lambda_dot{};

    static constexpr std::size_t kChannels = 2;

    double operator[](std::size_t c) const { return c == 0 ? t_go : lambda_dot; }
    double &operator[](std::size_t c) { return c == 0 ? t_go : lambda_dot; }

    Eigen::Vector2d vec() const { return {t_go, lambda_dot}; }
    static OutputVector from(const Eigen::Vector2d &v) { return {v(0), v(1)}; }
};

inline bool is_opening(const OutputVector &y) { return y.t_go < 0.0; }

/// Numerical guards below which g(X) / g_Y(X) are treated as singular.
struct Guards {
    double r_min = 1e-6;              // m
    double closing_rate_floor = 1e-3; // m/s
};

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(a, two_pi);
    if (w <= -std::numbers::pi) w += two_pi;
    if (w > std::numbers::pi) w -= two_pi;
    return w;
}

/// phi = gamma - lambda, wrapped to (-pi, pi].
inline double lead_angle(double gamma, double lambda) { return wrap_angle(gamma - lambda); }

inline EngagementState polar_from_cartesian(const MissileState &m, const Position &target,
                                            const Guards &guards = {}) {
    const double dx = target.x - m.x;
    const double dz = target.z - m.z;
    const double r = std::hypot(dx, dz);
    if (!(r >= guards.r_min)) {
        throw Error(ErrorCode::kCoincidentPosition, "missile",
                    "missile coincides with the target (r=" + std::to_string(r) + " m)");
    }
    const double lambda = std::atan2(dz, dx);
    const double phi = lead_angle(m.gamma, lambda);
    return {r, -m.v * std::cos(phi), lambda, -m.v * std::sin(phi) / r};
}

inline PolarControl body_to_polar(double phi, const BodyControl &c) {
    const double cp = std::cos(phi), sp = std::sin(phi);
    return {cp * c.a_t - sp * c.a_n, sp * c.a_t + cp * c.a_n};
}

inline BodyControl polar_to_body(double phi, const PolarControl &u) {
    const double cp = std::cos(phi), sp = std::sin(phi);
    return {cp * u.u1 + sp * u.u2, -sp * u.u1 + cp * u.u2};
}

/// Speed recovered from the polar state: V^2 = r_dot^2 + (r lambda_dot)^2.
inline double speed(const EngagementState &s) { return std::hypot(s.r_dot, s.r * s.lambda_dot); }

/// Lead angle recovered from the polar state (r_dot = -V cos phi,
/// r lambda_dot = -V sin phi).
inline double lead_angle(const EngagementState &s) {
    return std::atan2(-s.r * s.lambda_dot, -s.r_dot);
}

/// Missile position from range and LOS angle: target - r (cos lambda, sin lambda).
inline Position cartesian_step_reconstruction(const EngagementState &s, const Position &target) {
    return {target.x - s.r * std::cos(s.lambda), target.z - s.r * std::sin(s.lambda)};
}

inline MissileState missile_from_engagement(const EngagementState &s, const Position &target) {
    const auto p = cartesian_step_reconstruction(s, target);
    return {speed(s), wrap_angle(s.lambda + lead_angle(s)), p.x, p.z};
}

namespace detail {

inline void require_range(const EngagementState &s, const Guards &g) {
    if (!(s.r > g.r_min)) {
        throw Error(ErrorCode::kSingularRange, "r",
                    "range " + std::to_string(s.r) + " m at or below r_min");
    }
}

inline void require_closing_rate(const EngagementState &s, const Guards &g) {
    if (!(std::abs(s.r_dot) > g.closing_rate_floor)) {
        throw Error(ErrorCode::kStagnation, "r_dot",
                    "closing rate " + std::to_string(s.r_dot) +
                        " m/s within floor; time-to-go undefined");
    }
}

} // namespace detail

/// Control-free drift f(X).
inline Eigen::Vector4d drift(const EngagementState &s, const Guards &g = {}) {
    detail::require_range(s, g);
    return {s.r_dot, s.r * s.lambda_dot * s.lambda_dot, s.lambda_dot,
            -2.0 * s.r_dot * s.lambda_dot / s.r};
}

/// Input matrix g(X).
inline Eigen::Matrix<double, 4, 2> input_matrix(const EngagementState &s, const Guards &g = {}) {
    detail::require_range(s, g);
    Eigen::Matrix<double, 4, 2> m = Eigen::Matrix<double, 4, 2>::Zero();
    m(1, 0) = -1.0;
    m(3, 1) = -1.0 / s.r;
    return m;
}

/// Unguarded f(X) + g(X) U, for use inside the integrator.
inline Eigen::Vector4d state_rate(const Eigen::Vector4d &x, const PolarControl &u) {
    return {x(1), x(0) * x(3) * x(3) - u.u1, x(3), -2.0 * x(1) * x(3) / x(0) - u.u2 / x(0)};
}

/// Polar state rate with body-frame control held; the body-to-polar rotation
/// uses the lead angle implied by `x` itself.
inline Eigen::Vector4d state_rate(const Eigen::Vector4d &x, const BodyControl &c) {
    const double phi = std::atan2(-x(0) * x(3), -x(1));
    return state_rate(x, body_to_polar(phi, c));
}

/// Cartesian point-mass rates (V', gamma', x', z') under body control.
inline Eigen::Vector4d missile_rate(const Eigen::Vector4d &m, const BodyControl &c) {
    return {c.a_t, c.a_n / m(0), m(0) * std::cos(m(1)), m(0) * std::sin(m(1))};
}

/// t_go = -r / r_dot.
inline double time_to_go(const EngagementState &s, const Guards &g = {}) {
    detail::require_closing_rate(s, g);
    return -s.r / s.r_dot;
}

inline OutputVector output(const EngagementState &s, const Guards &g = {}) {
    return {time_to_go(s, g), s.lambda_dot};
}

/// f_Y(X) = (-1 + r^2 lambda_dot^2 / r_dot^2, -2 r_dot lambda_dot / r).
inline Eigen::Vector2d output_drift(const EngagementState &s, const Guards &g = {}) {
    detail::require_range(s, g);
    detail::require_closing_rate(s, g);
    const double q = s.r * s.lambda_dot / s.r_dot;
    return {-1.0 + q * q, -2.0 * s.r_dot * s.lambda_dot / s.r};
}

/// g_Y(X) = diag(-r / r_dot^2, -1 / r).
inline Eigen::Matrix2d output_input_matrix(const EngagementState &s, const Guards &g = {}) {
    detail::require_range(s, g);
    detail::require_closing_rate(s, g);
    Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
    m(0, 0) = -s.r / (s.r_dot * s.r_dot);
    m(1, 1) = -1.0 / s.r;
    return m;
}

} // namespace dndi
