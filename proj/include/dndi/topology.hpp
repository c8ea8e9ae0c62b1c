// Communication topology for a follower group and its virtual leader.
#pragma once

#include <dndi/error.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <queue>
#include <span>
#include <algorithm>
#include <string>
#include <vector>

namespace dndi {

/// Per-follower flag; false marks a follower removed from the coupling.
using ActiveMask = std::vector<bool>;

/// Undirected weighted edge between followers `i` and `j` (0-based).
struct Edge {
    std::size_t i;
    std::size_t j;
    double w;
};

/// True iff a breadth-first search over entries with weight > 0 reaches every
/// vertex from vertex 0. An empty or single-vertex graph is connected.
inline bool is_connected(const Eigen::MatrixXd &weights) {
    const auto n = static_cast<std::size_t>(weights.rows());
    if (n <= 1) return true;
    std::vector<bool> seen(n, false);
    std::queue<std::size_t> frontier;
    frontier.push(0);
    seen[0] = true;
    std::size_t reached = 1;
    while (!frontier.empty()) {
        const auto v = frontier.front();
        frontier.pop();
        for (std::size_t u = 0; u < n; ++u) {
            if (!seen[u] && weights(v, u) > 0.0) {
                seen[u] = true;
                ++reached;
                frontier.push(u);
            }
        }
    }
    return reached == n;
}

/// Connected components of the subgraph induced by `active`. Inactive vertices
/// get label -1; active ones are labelled 0, 1, ... in order of discovery.
inline std::vector<int> connected_components(const Eigen::MatrixXd &weights,
                                             const ActiveMask &active) {
    const auto n = static_cast<std::size_t>(weights.rows());
    std::vector<int> label(n, -1);
    int next = 0;
    for (std::size_t s = 0; s < n; ++s) {
        if (!active[s] || label[s] >= 0) continue;
        std::queue<std::size_t> frontier;
        frontier.push(s);
        label[s] = next;
        while (!frontier.empty()) {
            const auto v = frontier.front();
            frontier.pop();
            for (std::size_t u = 0; u < n; ++u) {
                if (active[u] && label[u] < 0 && weights(v, u) > 0.0) {
                    label[u] = next;
                    frontier.push(u);
                }
            }
        }
        ++next;
    }
    return label;
}

/// Weighted undirected follower graph plus per-follower leader link weights.
///
/// Invariants are checked eagerly by the constructor: symmetric nonnegative
/// weights with zero diagonal, nonnegative leader links with at least one
/// positive entry, a connected follower graph, and no follower with
/// d_i + beta_i = 0. Instances are immutable.
class CommGraph {
public:
    CommGraph(Eigen::MatrixXd weights, Eigen::VectorXd leader_links)
        : weights_(std::move(weights)), leader_links_(std::move(leader_links)) {
        if (auto issues = check(weights_, leader_links_); !issues.empty()) {
            throw ValidationError(std::move(issues));
        }
    }

    /// Builds a graph from an unordered edge list. (i, j) implies (j, i);
    /// listing the same unordered pair twice is an error.
    static CommGraph from_edges(std::size_t n, std::span<const Edge> edges,
                                const Eigen::VectorXd &leader_links) {
        std::vector<Diagnostic> issues;
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                  static_cast<Eigen::Index>(n));
        std::vector<bool> used(n * n, false);
        for (std::size_t k = 0; k < edges.size(); ++k) {
            const auto &e = edges[k];
            const std::string field = "graph.edges[" + std::to_string(k + 1) + "]";
            if (e.i >= n || e.j >= n) {
                issues.push_back({ErrorCode::kAgentIndexRange, field,
                                  "agent index outside 1.." + std::to_string(n)});
                continue;
            }
            if (e.i == e.j) {
                issues.push_back({ErrorCode::kSelfLoop, field, "self loop on agent " +
                                                                   std::to_string(e.i + 1)});
                continue;
            }
            const auto lo = std::min(e.i, e.j), hi = std::max(e.i, e.j);
            if (used[lo * n + hi]) {
                issues.push_back({ErrorCode::kDuplicateEdge, field,
                                  "duplicate edge (" + std::to_string(lo + 1) + "," +
                                      std::to_string(hi + 1) + ")"});
                continue;
            }
            used[lo * n + hi] = true;
            w(static_cast<Eigen::Index>(e.i), static_cast<Eigen::Index>(e.j)) = e.w;
            w(static_cast<Eigen::Index>(e.j), static_cast<Eigen::Index>(e.i)) = e.w;
        }
        auto more = check(w, leader_links);
        issues.insert(issues.end(), more.begin(), more.end());
        if (!issues.empty()) throw ValidationError(std::move(issues));
        return CommGraph(std::move(w), leader_links);
    }

    /// All invariant violations of a candidate (weights, leader_links) pair.
    static std::vector<Diagnostic> check(const Eigen::MatrixXd &w, const Eigen::VectorXd &b) {
        std::vector<Diagnostic> out;
        const auto n = w.rows();
        if (n == 0 || w.cols() != n || b.size() != n) {
            out.push_back({ErrorCode::kShapeMismatch, "graph",
                           "weights must be NxN and leader_links length N (N >= 1)"});
            return out;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            if (w(i, i) != 0.0) {
                out.push_back({ErrorCode::kSelfLoop, "graph.weights",
                               "nonzero diagonal at agent " + std::to_string(i + 1)});
            }
            for (Eigen::Index j = i + 1; j < n; ++j) {
                if (!std::isfinite(w(i, j)) || w(i, j) < 0.0 || !std::isfinite(w(j, i)) ||
                    w(j, i) < 0.0) {
                    out.push_back({ErrorCode::kNegativeWeight, "graph.weights",
                                   "weight (" + std::to_string(i + 1) + "," +
                                       std::to_string(j + 1) + ") must be finite and >= 0"});
                } else if (w(i, j) != w(j, i)) {
                    out.push_back({ErrorCode::kAsymmetricWeights, "graph.weights",
                                   "a_" + std::to_string(i + 1) + std::to_string(j + 1) +
                                       " != a_" + std::to_string(j + 1) +
                                       std::to_string(i + 1)});
                }
            }
        }
        bool any_leader = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!std::isfinite(b(i)) || b(i) < 0.0) {
                out.push_back({ErrorCode::kNegativeWeight, "graph.leader_links",
                               "leader link of agent " + std::to_string(i + 1) +
                                   " must be finite and >= 0"});
            }
            any_leader = any_leader || b(i) > 0.0;
        }
        if (!any_leader) {
            out.push_back({ErrorCode::kNoLeaderLink, "graph.leader_links",
                           "no follower is linked to the leader"});
        }
        if (!is_connected(w)) {
            out.push_back({ErrorCode::kDisconnectedGraph, "graph.edges",
                           "follower graph is not connected"});
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            double row = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) row += std::max(w(i, j), 0.0);
            if (row + std::max(b(i), 0.0) <= 0.0 && n > 1) {
                out.push_back({ErrorCode::kIsolatedAgent, "graph",
                               "agent " + std::to_string(i + 1) +
                                   " has no neighbours and no leader link"});
            }
        }
        return out;
    }

    std::size_t size() const noexcept { return static_cast<std::size_t>(weights_.rows()); }
    const Eigen::MatrixXd &weights() const noexcept { return weights_; }
    const Eigen::VectorXd &leader_links() const noexcept { return leader_links_; }

    double weight(std::size_t i, std::size_t j) const {
        return weights_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    double leader_link(std::size_t i) const {
        return leader_links_(static_cast<Eigen::Index>(i));
    }

private:
    Eigen::MatrixXd weights_;
    Eigen::VectorXd leader_links_;
};

/// d_i = sum_j a_ij.
inline Eigen::VectorXd degree_vector(const CommGraph &g) { return g.weights().rowwise().sum(); }

/// L = D - A.
inline Eigen::MatrixXd laplacian(const CommGraph &g) {
    Eigen::MatrixXd l = -g.weights();
    l.diagonal() += degree_vector(g);
    return l;
}

inline bool is_connected(const CommGraph &g) { return is_connected(g.weights()); }

/// Row i of the adjacency matrix (0-based index).
inline Eigen::VectorXd neighbor_row(const CommGraph &g, std::size_t i) {
    if (i >= g.size()) {
        throw Error(ErrorCode::kAgentIndexRange, "agent",
                    "index " + std::to_string(i) + " out of range for N=" +
                        std::to_string(g.size()));
    }
    return g.weights().row(static_cast<Eigen::Index>(i)).transpose();
}

/// Per-channel coupling matrix L + diag(beta) restricted to the `active`
/// followers. Rows and columns of inactive followers are dropped, and their
/// edges no longer count toward the degree of the survivors.
inline Eigen::MatrixXd coupling_matrix(const CommGraph &g, const ActiveMask &active) {
    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (active[i]) idx.push_back(static_cast<Eigen::Index>(i));
    }
    const auto m = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index r = 0; r < m; ++r) {
        double deg = 0.0;
        for (Eigen::Index s = 0; s < m; ++s) {
            if (r == s) continue;
            const double a = g.weights()(idx[r], idx[s]);
            c(r, s) = -a;
            deg += a;
        }
        c(r, r) = deg + g.leader_links()(idx[r]);
    }
    return c;
}

inline Eigen::MatrixXd coupling_matrix(const CommGraph &g) {
    return coupling_matrix(g, ActiveMask(g.size(), true));
}

} // namespace dndi
