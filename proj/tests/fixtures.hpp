// Scenario builders and independent numerical oracles shared by the test
// binaries. Nothing here calls into the code paths it is used to check.
#pragma once

#include <dndi/simulator.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace dndi::test {

/// Missile placed at range `r` along LOS angle `lambda_deg` from the target,
/// flying `offset_deg` off the collision course.
struct Placement {
    double r;
    double lambda_deg;
    double v;
    double offset_deg;
};

inline MissileState place(const Position &target, const Placement &p) {
    const double lam = p.lambda_deg * std::numbers::pi / 180.0;
    return {p.v, lam + p.offset_deg * std::numbers::pi / 180.0, target.x - p.r * std::cos(lam),
            target.z - p.r * std::sin(lam)};
}

inline CommGraph path_graph(std::size_t n, const Eigen::VectorXd &links) {
    std::vector<Edge> edges;
    for (std::size_t i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0});
    return CommGraph::from_edges(n, edges, links);
}

inline Scenario make_scenario(const Position &target, const std::vector<Placement> &ps, CommGraph graph) {
    std::vector<MissileState> ms;
    for (const auto &p : ps) ms.push_back(place(target, p));
    const auto n = ms.size();
    return Scenario{target, std::move(ms), std::move(graph), std::vector<GainMatrix>(n)};
}

/// Four missiles, ranges 1800-2400 m, speeds 180-240 m/s, headings within
/// 20 deg of collision course, unit path graph, leader links (1,0,0,1).
inline Scenario reference_scenario(CouplingMode mode = CouplingMode::kExact, double dt = 1e-3) {
    const Position target{0.0, 2000.0};
    Eigen::VectorXd links(4);
    links << 1, 0, 0, 1;
    auto s = make_scenario(target,
                           {{1800, 60, 225, 10}, {2000, 80, 200, -15}, {2200, 100, 190, 20}, {2400, 120, 180, -5}},
                           path_graph(4, links));
    s.coupling = mode;
    s.dt = dt;
    return s;
}

/// One missile tracking a leader whose intercept is set explicitly, so both
/// error channels start away from zero.
inline Scenario single_agent_scenario(double dt, double t_go_0 = 12.0) {
    const Position target{0.0, 2000.0};
    Eigen::VectorXd links(1);
    links << 1;
    auto s = make_scenario(target, {{2000, 90, 200, 12}},
                           CommGraph(Eigen::MatrixXd::Zero(1, 1), links));
    s.coupling = CouplingMode::kExact;
    s.dt = dt;
    s.t_go_0_auto = false;
    s.leader.t_go_0 = t_go_0;
    return s;
}

// ---------------------------------------------------------------------------
// Oracles

/// Angle normalisation by repeated shifting.
inline double normalize_by_shifting(double a) {
    while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
    while (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
    return a;
}

/// Dense Gaussian elimination with partial pivoting.
inline std::vector<double> gauss_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        }
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t r = n; r-- > 0;) {
        double acc = b[r];
        for (std::size_t k = r + 1; k < n; ++k) acc -= a[r][k] * x[k];
        x[r] = acc / a[r][r];
    }
    return x;
}

/// Sorted eigenvalues of a symmetric matrix.
inline Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd &m) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues();
}

/// Laplacian straight from the definition, entry by entry.
inline Eigen::MatrixXd laplacian_by_definition(const Eigen::MatrixXd &w) {
    const auto n = w.rows();
    Eigen::MatrixXd l(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i != j) {
                l(i, j) = -w(i, j);
            } else {
                double d = 0.0;
                for (Eigen::Index k = 0; k < n; ++k) d += w(i, k);
                l(i, j) = d;
            }
        }
    }
    return l;
}

/// Tracking error in summation form: sum_j a_ij (y_i - y_j) + b_i (y_i - y_L).
inline double summation_error(std::size_t i, const std::vector<double> &y, double y_leader, const CommGraph &g) {
    double e = g.leader_link(i) * (y[i] - y_leader);
    for (std::size_t j = 0; j < g.size(); ++j) e += g.weight(i, j) * (y[i] - y[j]);
    return e;
}

/// Random weighted symmetric graph; each pair is an edge with probability p.
inline Eigen::MatrixXd random_weights(std::mt19937_64 &rng, std::size_t n, double p) {
    std::bernoulli_distribution edge(p);
    std::uniform_real_distribution<double> weight(0.1, 3.0);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (edge(rng)) {
                const double v = weight(rng);
                w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
                w(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
            }
        }
    }
    return w;
}

/// Random connected graph: a random spanning tree plus extra random edges.
inline Eigen::MatrixXd random_connected_weights(std::mt19937_64 &rng, std::size_t n) {
    Eigen::MatrixXd w = random_weights(rng, n, 0.3);
    std::uniform_real_distribution<double> weight(0.1, 3.0);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 1; k < n; ++k) {
        std::uniform_int_distribution<std::size_t> pick(0, k - 1);
        const auto a = static_cast<Eigen::Index>(order[k]);
        const auto b = static_cast<Eigen::Index>(order[pick(rng)]);
        if (w(a, b) == 0.0) w(a, b) = w(b, a) = weight(rng);
    }
    return w;
}

/// Random nonnegative leader links with at least one positive entry.
inline Eigen::VectorXd random_links(std::mt19937_64 &rng, std::size_t n) {
    std::bernoulli_distribution on(0.3);
    std::uniform_real_distribution<double> weight(0.1, 2.0);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (on(rng)) b(static_cast<Eigen::Index>(i)) = weight(rng);
    }
    b(static_cast<Eigen::Index>(pick(rng))) = weight(rng);
    return b;
}

/// Output map evaluated straight from the state: (-r / r_dot, lambda_dot).
inline Eigen::Vector2d output_of(const Eigen::Vector4d &x) { return {-x(0) / x(1), x(3)}; }

} // namespace dndi::test
