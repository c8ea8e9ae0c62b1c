#include "fixtures.hpp"

#include <dndi/engagement.hpp>
#include <dndi/integrate.hpp>

#include <gtest/gtest.h>

#include <numbers>
#include <random>

namespace dndi {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(LeadAngle, Examples) {
    EXPECT_NEAR(lead_angle(0.3, 0.1), 0.2, 1e-15);
    EXPECT_EQ(lead_angle(0.7, 0.7), 0.0);
    EXPECT_NEAR(lead_angle(3.0, -3.0), 6.0 - 2.0 * kPi, 1e-12);
    EXPECT_NEAR(lead_angle(3.0, -3.0), test::normalize_by_shifting(6.0), 1e-12);
}

TEST(LeadAngle, WrapMatchesShiftingOracle) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ang(-20.0, 20.0);
    for (int k = 0; k < 2000; ++k) {
        const double g = ang(rng), l = ang(rng);
        const double w = lead_angle(g, l);
        EXPECT_GT(w, -kPi);
        EXPECT_LE(w, kPi);
        EXPECT_NEAR(w, test::normalize_by_shifting(g - l), 1e-12);
    }
    EXPECT_EQ(wrap_angle(kPi), kPi);
    EXPECT_EQ(wrap_angle(-kPi), kPi);
}

TEST(PolarFromCartesian, HeadOnFromBelow) {
    const auto s = polar_from_cartesian({200, kPi / 2, 0, 0}, {0, 2000});
    EXPECT_NEAR(s.r, 2000, 1e-12);
    EXPECT_NEAR(s.lambda, kPi / 2, 1e-15);
    EXPECT_NEAR(s.r_dot, -200, 1e-12);
    EXPECT_NEAR(s.lambda_dot, 0, 1e-15);
}

TEST(PolarFromCartesian, HeadOnFromTheRight) {
    const auto s = polar_from_cartesian({100, kPi, 2000, 2000}, {0, 2000});
    EXPECT_NEAR(s.lambda, kPi, 1e-15);
    EXPECT_NEAR(lead_angle(kPi, s.lambda), 0, 1e-15);
    EXPECT_NEAR(s.r_dot, -100, 1e-12);
    EXPECT_NEAR(s.lambda_dot, 0, 1e-15);
}

TEST(PolarFromCartesian, PureCrossing) {
    const auto s = polar_from_cartesian({200, 0, 0, 0}, {0, 2000});
    EXPECT_NEAR(s.lambda, kPi / 2, 1e-15);
    EXPECT_NEAR(lead_angle(0.0, s.lambda), -kPi / 2, 1e-15);
    EXPECT_NEAR(s.r_dot, 0, 1e-12);
    EXPECT_NEAR(s.lambda_dot, 0.1, 1e-15);
}

TEST(PolarFromCartesian, CoincidentPositionRejected) {
    try {
        polar_from_cartesian({200, 0, 5, 7}, {5, 7});
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::kCoincidentPosition);
    }
}

TEST(Rotation, Examples) {
    const auto a = body_to_polar(0.0, {3, 4});
    EXPECT_NEAR(a.u1, 3, 1e-15);
    EXPECT_NEAR(a.u2, 4, 1e-15);
    const auto b = body_to_polar(kPi / 2, {3, 4});
    EXPECT_NEAR(b.u1, -4, 1e-15);
    EXPECT_NEAR(b.u2, 3, 1e-15);
    const auto c = polar_to_body(0.0, {5, -2});
    EXPECT_NEAR(c.a_t, 5, 1e-15);
    EXPECT_NEAR(c.a_n, -2, 1e-15);
    const auto d = polar_to_body(kPi, {5, -2});
    EXPECT_NEAR(d.a_t, -5, 1e-15);
    EXPECT_NEAR(d.a_n, 2, 1e-15);
}

TEST(Rotation, OrthogonalAndInverse) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ang(-10, 10), acc(-300, 300);
    for (int k = 0; k < 1000; ++k) {
        const double phi = ang(rng);
        const BodyControl c{acc(rng), acc(rng)};
        const auto u = body_to_polar(phi, c);
        EXPECT_NEAR(std::hypot(u.u1, u.u2), std::hypot(c.a_t, c.a_n), 1e-12);
        const auto back = polar_to_body(phi, u);
        EXPECT_NEAR(back.a_t, c.a_t, 1e-12);
        EXPECT_NEAR(back.a_n, c.a_n, 1e-12);
    }
}

TEST(Drift, Examples) {
    EXPECT_EQ(drift({2000, -200, kPi / 2, 0}), Eigen::Vector4d(-200, 0, 0, 0));
    const auto f = drift({1000, -100, 0, 0.02});
    EXPECT_NEAR(f(0), -100, 1e-12);
    EXPECT_NEAR(f(1), 0.4, 1e-12);
    EXPECT_NEAR(f(2), 0.02, 1e-15);
    EXPECT_NEAR(f(3), 0.004, 1e-15);
}

TEST(Drift, SingularRange) {
    try {
        drift({1e-7, -100, 0, 0});
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::kSingularRange);
    }
}

TEST(InputMatrix, Entries) {
    EXPECT_NEAR(input_matrix({1000, -100, 0, 0})(3, 1), -0.001, 1e-18);
    const auto g = input_matrix({1, -100, 0, 0});
    EXPECT_EQ(g(3, 1), -1.0);
    EXPECT_EQ(g(1, 0), -1.0);
    EXPECT_EQ(g(0, 0) + g(0, 1) + g(2, 0) + g(2, 1) + g(1, 1) + g(3, 0), 0.0);
}

TEST(InputMatrix, AffineInControl) {
    const EngagementState s{1500, -180, 0.4, 0.01};
    const Eigen::Vector2d u(12, -7);
    const Eigen::Vector4d one = drift(s) + input_matrix(s) * u;
    const Eigen::Vector4d two = drift(s) + input_matrix(s) * (2 * u);
    EXPECT_TRUE((two - one).isApprox(input_matrix(s) * u, 1e-14));
    EXPECT_TRUE(one.isApprox(state_rate(s.vec(), PolarControl{u(0), u(1)}), 1e-14));
}

TEST(StateRate, MatchesFiniteDifferenceOfPropagation) {
    const EngagementState s{1200, -190, 0.9, 0.015};
    const PolarControl u{15, -25};
    const auto f = [&](const Eigen::Vector4d &x) { return state_rate(x, u); };
    const Eigen::Vector4d analytic = drift(s) + input_matrix(s) * Eigen::Vector2d(u.u1, u.u2);
    double prev = 0.0;
    for (double h : {1e-2, 5e-3}) {
        const Eigen::Vector4d fwd = rk4_step(s.vec(), h, f);
        const Eigen::Vector4d bwd = rk4_step(s.vec(), -h, f);
        const double err = ((fwd - bwd) / (2 * h) - analytic).norm();
        EXPECT_LT(err, 1e-4 * analytic.norm());
        if (prev > 0) {
            EXPECT_NEAR(prev / err, 4.0, 0.5); // second order
        }
        prev = err;
    }
}

TEST(TimeToGo, Examples) {
    EXPECT_EQ(time_to_go({1000, -200, 0, 0}), 5.0);
    EXPECT_EQ(time_to_go({2000, -200, 0, 0}), 10.0);
    EXPECT_EQ(time_to_go({500, 100, 0, 0}), -5.0);
}

TEST(TimeToGo, Stagnation) {
    try {
        time_to_go({500, 1e-4, 0, 0});
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::kStagnation);
    }
}

TEST(Output, Examples) {
    const auto y = output({1000, -200, 0.5, 0.01});
    EXPECT_EQ(y.t_go, 5.0);
    EXPECT_EQ(y.lambda_dot, 0.01);
    EXPECT_EQ(output({1000, -200, 0.5, 0.0}).lambda_dot, 0.0);
    const auto opening = output({500, 100, 0, 0});
    EXPECT_TRUE(is_opening(opening));
    EXPECT_EQ(opening.t_go, -5.0);
}

TEST(OutputDrift, Examples) {
    EXPECT_EQ(output_drift({1000, -100, 0, 0})(0), -1.0);
    const auto f = output_drift({1000, -100, 0, 0.02});
    EXPECT_NEAR(f(0), -0.96, 1e-14);
    EXPECT_NEAR(f(1), 0.004, 1e-15);
}

TEST(OutputInputMatrix, Examples) {
    const auto g = output_input_matrix({1000, -100, 0, 0});
    EXPECT_NEAR(g(0, 0), -0.1, 1e-15);
    EXPECT_NEAR(g(1, 1), -0.001, 1e-18);
    EXPECT_EQ(g(0, 1), 0.0);
    EXPECT_EQ(g(1, 0), 0.0);
    EXPECT_NEAR(g.determinant(), 1e-4, 1e-18);
}

TEST(OutputInputMatrix, EqualsJacobianTimesInputMatrix) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> r(50, 3000), rd(-300, -20), ld(-0.1, 0.1), l(-3, 3);
    for (int k = 0; k < 200; ++k) {
        const EngagementState s{r(rng), rd(rng), l(rng), ld(rng)};
        Eigen::Matrix<double, 2, 4> dh = Eigen::Matrix<double, 2, 4>::Zero();
        dh(0, 0) = -1.0 / s.r_dot;
        dh(0, 1) = s.r / (s.r_dot * s.r_dot);
        dh(1, 3) = 1.0;
        const Eigen::Matrix2d product = dh * input_matrix(s);
        EXPECT_LE((product - output_input_matrix(s)).cwiseAbs().maxCoeff(), 1e-12);
        const Eigen::Vector2d fy = dh * drift(s);
        EXPECT_LE((fy - output_drift(s)).cwiseAbs().maxCoeff(), 1e-12 * (1 + fy.norm()));
    }
}

TEST(OutputDerivative, MatchesFiniteDifferenceAlongTrajectory) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> r(200, 3000), rd(-300, -50), ld(-0.05, 0.05), acc(-50, 50);
    const double h = 1e-4;
    for (int k = 0; k < 200; ++k) {
        const EngagementState s{r(rng), rd(rng), 1.0, ld(rng)};
        const PolarControl u{acc(rng), acc(rng)};
        const auto f = [&](const Eigen::Vector4d &x) { return state_rate(x, u); };
        const Eigen::Vector2d fd =
            (test::output_of(rk4_step(s.vec(), h, f)) - test::output_of(rk4_step(s.vec(), -h, f))) / (2 * h);
        const Eigen::Vector2d analytic = output_drift(s) + output_input_matrix(s) * Eigen::Vector2d(u.u1, u.u2);
        for (int c = 0; c < 2; ++c) {
            EXPECT_LE(std::abs(fd(c) - analytic(c)), 1e-5 * std::abs(analytic(c)) + 1e-12)
                << "sample " << k << " channel " << c;
        }
    }
}

TEST(Reconstruction, Examples) {
    const auto p = cartesian_step_reconstruction({2000, -200, kPi / 2, 0}, {0, 2000});
    EXPECT_NEAR(p.x, 0, 1e-12);
    EXPECT_NEAR(p.z, 0, 1e-12);
    const auto q = cartesian_step_reconstruction({0, -200, 1.3, 0}, {4, 5});
    EXPECT_EQ(q.x, 4);
    EXPECT_EQ(q.z, 5);
}

TEST(Reconstruction, RoundTripAndSpeedHeading) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> pos(-3000, 3000), v(50, 400), g(-kPi, kPi);
    const Position target{100, 2000};
    for (int k = 0; k < 500; ++k) {
        const MissileState m{v(rng), g(rng), pos(rng), pos(rng)};
        const auto s = polar_from_cartesian(m, target);
        const auto p = cartesian_step_reconstruction(s, target);
        EXPECT_NEAR(p.x, m.x, 1e-9);
        EXPECT_NEAR(p.z, m.z, 1e-9);
        const auto back = missile_from_engagement(s, target);
        EXPECT_NEAR(back.v, m.v, 1e-9);
        EXPECT_NEAR(wrap_angle(back.gamma - m.gamma), 0.0, 1e-9);
    }
}

TEST(DualRepresentation, CartesianAndPolarPropagationAgree) {
    const Position target{0, 2000};
    MissileState m{210, 1.2, -300, 100};
    Eigen::Vector4d cart(m.v, m.gamma, m.x, m.z);
    Eigen::Vector4d polar = polar_from_cartesian(m, target).vec();
    const double dt = 1e-3;
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const double t = k * dt;
        const BodyControl c{5.0 * std::sin(0.7 * t), 30.0 * std::cos(0.3 * t)};
        cart = rk4_step(cart, dt, [&](const Eigen::Vector4d &x) { return missile_rate(x, c); });
        polar = rk4_step(polar, dt, [&](const Eigen::Vector4d &x) { return state_rate(x, c); });
        const double r = std::hypot(target.x - cart(2), target.z - cart(3));
        const double lam = std::atan2(target.z - cart(3), target.x - cart(2));
        worst = std::max({worst, std::abs(r - polar(0)), polar(0) * std::abs(wrap_angle(lam - polar(2)))});
    }
    EXPECT_LE(worst, 1e-3);
}

TEST(TimeToGo, AffineOnConstantClosing) {
    Eigen::Vector4d x(2000, -200, 0.3, 0.0);
    const double dt = 1e-3;
    double prev = test::output_of(x)(0);
    for (int k = 0; k < 5000; ++k) {
        x = rk4_step(x, dt, [](const Eigen::Vector4d &s) { return state_rate(s, PolarControl{}); });
        const double now = test::output_of(x)(0);
        EXPECT_NEAR(now - prev, -dt, 1e-9);
        prev = now;
    }
}

} // namespace
} // namespace dndi
