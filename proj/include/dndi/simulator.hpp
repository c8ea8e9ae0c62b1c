// Fixed-step multi-missile engagement simulation under consensus guidance.
#pragma once

#include <dndi/controller.hpp>
#include <dndi/engagement.hpp>
#include <dndi/error.hpp>
#include <dndi/format.hpp>
#include <dndi/integrate.hpp>
#include <dndi/topology.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dndi {

enum class CouplingMode { kExact, kDelayed };

inline const char *to_string(CouplingMode m) {
    return m == CouplingMode::kExact ? "exact" : "delayed";
}

struct Scenario {
    Scenario(Position target_, std::vector<MissileState> missiles_, CommGraph graph_, std::vector<GainMatrix> gains_)
        : target(target_), missiles(std::move(missiles_)), graph(std::move(graph_)), gains(std::move(gains_)) {}

    Position target;
    std::vector<MissileState> missiles;
    CommGraph graph;
    std::vector<GainMatrix> gains; // one per missile

    LeaderModel leader;
    bool t_go_0_auto = true; // leader.t_go_0 resolved from the mean rule

    double dt = 1e-3;
    double t_max = 0.0;
    bool t_max_auto = true; // t_max = 2 t_go_0
    double intercept_radius = 1.0;
    CouplingMode coupling = CouplingMode::kDelayed;
    std::optional<double> a_max; // symmetric clamp on a_t and a_n

    Guards guards;
    double blind_zone_factor = 10.0; // control held for r < factor * intercept_radius
    double spread_tolerance = 0.05;  // s, report PASS threshold

    std::size_t size() const { return missiles.size(); }
    double blind_zone_radius() const { return blind_zone_factor * intercept_radius; }
};

/// Resolves `auto` fields in place: t_go_0 from the mean of the initial
/// times-to-go, t_max = 2 t_go_0.
inline void resolve_auto(Scenario &s) {
    if (s.t_go_0_auto) {
        std::vector<OutputVector> initial;
        initial.reserve(s.size());
        for (const auto &m : s.missiles) {
            const auto polar = polar_from_cartesian(m, s.target, s.guards);
            initial.push_back({-polar.r / polar.r_dot, polar.lambda_dot});
        }
        s.leader.t_go_0 = leader_t_go_0_from_initial(initial);
    }
    if (s.t_max_auto) s.t_max = 2.0 * s.leader.t_go_0;
}

/// One logged row: follower state at time t and the control applied over
/// [t, t + dt].
struct AgentSample {
    std::size_t agent{}; // 0-based
    double r{}, r_dot{}, lambda{}, lambda_dot{}, t_go{};
    double x{}, z{};
    double u1{}, u2{}, a_t{}, a_n{};
    double e_tgo{}, e_los{}; // |E_i| per channel
    bool intercepted{};
};

/// Time-major log: samples[k * n_agents + i] is follower i at times[k].
struct SimLog {
    std::size_t n_agents{};
    std::vector<double> times;
    std::vector<AgentSample> samples;
    std::vector<std::string> events;

    std::size_t steps() const { return times.size(); }
    const AgentSample &at(std::size_t k, std::size_t i) const { return samples[k * n_agents + i]; }
};

struct AgentOutcome {
    bool intercepted{};
    double impact_time = std::numeric_limits<double>::quiet_NaN();
    double miss_distance = std::numeric_limits<double>::infinity();
};

struct InterceptReport {
    std::vector<AgentOutcome> agents;
    double impact_time_spread{};
    std::vector<double> consensus; // max_{i,j} |t_go_i - t_go_j| over active followers, per step
    double peak_consensus{};
    double final_consensus{}; // at the last step before the first interception
    std::vector<double> max_los_rate_final; // per follower, final 20% of flight outside the blind zone
    double spread_tolerance{};
    bool pass{};

    bool all_intercepted() const {
        return std::all_of(agents.begin(), agents.end(), [](const auto &a) { return a.intercepted; });
    }
};

/// Thresholds the report needs beyond the log itself.
struct ReportSettings {
    double intercept_radius = 1.0;
    double blind_zone_radius = 10.0;
    double spread_tolerance = 0.05;
};

/// Recomputes the intercept report from a log. Impact time is the linear
/// interpolation of r to the capture radius over the step in which the
/// follower was flagged intercepted.
inline InterceptReport assess(const SimLog &log, const ReportSettings &cfg) {
    InterceptReport rep;
    const std::size_t n = log.n_agents;
    rep.agents.assign(n, AgentOutcome{});
    rep.max_los_rate_final.assign(n, 0.0);
    rep.spread_tolerance = cfg.spread_tolerance;
    if (log.steps() == 0) return rep;

    for (std::size_t i = 0; i < n; ++i) {
        auto &out = rep.agents[i];
        for (std::size_t k = 0; k < log.steps(); ++k) {
            const auto &s = log.at(k, i);
            out.miss_distance = std::min(out.miss_distance, s.r);
            if (s.intercepted && !out.intercepted) {
                out.intercepted = true;
                if (k == 0) {
                    out.impact_time = log.times[0];
                } else {
                    const double r0 = log.at(k - 1, i).r, r1 = s.r;
                    const double t0 = log.times[k - 1], t1 = log.times[k];
                    const double frac = r0 > r1 ? (r0 - cfg.intercept_radius) / (r0 - r1) : 1.0;
                    out.impact_time = t0 + std::clamp(frac, 0.0, 1.0) * (t1 - t0);
                }
            }
        }
    }

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto &a : rep.agents) {
        if (!a.intercepted) continue;
        lo = std::min(lo, a.impact_time);
        hi = std::max(hi, a.impact_time);
    }
    rep.impact_time_spread = hi >= lo ? hi - lo : 0.0;

    rep.consensus.assign(log.steps(), 0.0);
    bool before_first = true;
    for (std::size_t k = 0; k < log.steps(); ++k) {
        double mn = std::numeric_limits<double>::infinity(), mx = -mn;
        bool all_active = true;
        for (std::size_t i = 0; i < n; ++i) {
            const auto &s = log.at(k, i);
            if (s.intercepted) {
                all_active = false;
                continue;
            }
            mn = std::min(mn, s.t_go);
            mx = std::max(mx, s.t_go);
        }
        rep.consensus[k] = mx >= mn ? mx - mn : 0.0;
        rep.peak_consensus = std::max(rep.peak_consensus, rep.consensus[k]);
        before_first = before_first && all_active;
        if (before_first) rep.final_consensus = rep.consensus[k];
    }

    const double t_start = log.times.front();
    for (std::size_t i = 0; i < n; ++i) {
        const double t_end = rep.agents[i].intercepted ? rep.agents[i].impact_time : log.times.back();
        const double from = t_start + 0.8 * (t_end - t_start);
        double peak = 0.0;
        for (std::size_t k = 0; k < log.steps(); ++k) {
            const auto &s = log.at(k, i);
            if (log.times[k] < from || log.times[k] > t_end || s.intercepted) continue;
            if (s.r < cfg.blind_zone_radius) continue;
            peak = std::max(peak, std::abs(s.lambda_dot));
        }
        rep.max_los_rate_final[i] = peak;
    }

    rep.pass = rep.all_intercepted() && rep.impact_time_spread <= cfg.spread_tolerance;
    return rep;
}

/// Optional replacement for the guidance law, used for open-loop studies.
using ControlOverride = std::function<PolarControl(std::size_t agent, double t, const EngagementState &)>;

/// Stepwise engagement simulation.
///
/// The polar state of each follower is the integrated quantity. Guidance runs
/// once per step at the step start; the resulting body-frame acceleration is
/// held over the step while RK4 rotates it into the polar frame at every stage.
class Simulator {
public:
    explicit Simulator(Scenario scenario, ControlOverride override_law = {})
        : scn_(std::move(scenario)), override_(std::move(override_law)) {
        resolve_auto(scn_);
        const std::size_t n = scn_.size();
        if (n == 0) throw Error(ErrorCode::kNoMissiles, "missiles", "scenario has no missiles");
        if (scn_.graph.size() != n) {
            throw Error(ErrorCode::kShapeMismatch, "graph", "graph size differs from missile count");
        }
        if (scn_.gains.size() != n) scn_.gains.resize(n, scn_.gains.empty() ? GainMatrix{} : scn_.gains.front());

        agents_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto &a = agents_[i];
            a.state = polar_from_cartesian(scn_.missiles[i], scn_.target, scn_.guards);
            a.min_r = a.state.r;
            if (a.state.r_dot >= 0.0) {
                log_.events.push_back("warning: missile " + std::to_string(i + 1) +
                                      " starts in an opening geometry (r_dot >= 0)");
            }
        }
        rates_ = initial_delayed_rates(n, leader_output_rate(scn_.leader));
        log_.n_agents = n;
        detect_interception();
        evaluate_controls();
        append_log();
    }

    const Scenario &scenario() const { return scn_; }
    const SimLog &log() const { return log_; }
    double time() const { return static_cast<double>(step_) * scn_.dt; }
    std::size_t step_count() const { return step_; }

    bool active(std::size_t i) const { return agents_[i].active; }
    const EngagementState &state(std::size_t i) const { return agents_[i].state; }
    const BodyControl &body_control(std::size_t i) const { return agents_[i].body; }
    const ConsensusError &error(std::size_t i) const { return agents_[i].error; }
    double impact_time(std::size_t i) const { return agents_[i].impact_time; }

    bool done() const {
        const bool any_active = std::any_of(agents_.begin(), agents_.end(), [](const auto &a) { return a.active; });
        return !any_active || time() >= scn_.t_max - 0.5 * scn_.dt;
    }

    void step() {
        for (std::size_t i = 0; i < agents_.size(); ++i) {
            auto &a = agents_[i];
            if (!a.active) continue;
            const BodyControl held = a.body;
            const Eigen::Vector4d next = rk4_step(a.state.vec(), scn_.dt, [&](const Eigen::Vector4d &x) {
                return state_rate(x, held);
            });
            const auto ns = EngagementState::from(next);
            if (!ns.finite()) {
                throw Error(ErrorCode::kNonFiniteState, "missile " + std::to_string(i + 1),
                            "non-finite state at t=" + std::to_string(time() + scn_.dt) + " s");
            }
            a.state = ns;
            a.min_r = std::min(a.min_r, ns.r);
        }
        ++step_;
        detect_interception();
        evaluate_controls();
        append_log();
    }

    void run_to_end() {
        while (!done()) step();
    }

    /// Report computed from the log exactly as it is written to CSV, so a
    /// stored trajectory reproduces it.
    InterceptReport report() const;

    ReportSettings report_settings() const {
        return {scn_.intercept_radius, scn_.blind_zone_radius(), scn_.spread_tolerance};
    }

private:
    struct Agent {
        EngagementState state;
        BodyControl body;
        PolarControl polar;
        OutputVector output;
        ConsensusError error;
        bool active = true;
        bool intercepted = false;
        bool has_output = false;
        bool frozen_logged = false;
        double impact_time = std::numeric_limits<double>::quiet_NaN();
        double min_r = std::numeric_limits<double>::infinity();
        double prev_r = 0.0;
    };

    void detect_interception() {
        const double t = time();
        for (std::size_t i = 0; i < agents_.size(); ++i) {
            auto &a = agents_[i];
            if (!a.active) continue;
            if (a.state.r <= scn_.intercept_radius) {
                a.active = false;
                a.intercepted = true;
                if (step_ == 0 || a.prev_r <= a.state.r) {
                    a.impact_time = t;
                } else {
                    const double frac = (a.prev_r - scn_.intercept_radius) / (a.prev_r - a.state.r);
                    a.impact_time = t - scn_.dt + std::clamp(frac, 0.0, 1.0) * scn_.dt;
                }
                log_.events.push_back("missile " + std::to_string(i + 1) + " intercepted at t=" +
                                      std::to_string(a.impact_time) + " s");
                warn_if_split();
            }
            a.prev_r = a.state.r;
        }
    }

    void warn_if_split() {
        ActiveMask mask(agents_.size());
        for (std::size_t i = 0; i < agents_.size(); ++i) mask[i] = agents_[i].active;
        const auto labels = connected_components(scn_.graph.weights(), mask);
        const int count = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
        if (count > 1) {
            log_.events.push_back("warning: remaining follower graph split into " +
                                  std::to_string(count) + " components");
        }
    }

    void hold(std::size_t i, std::vector<AgentRole> &roles) {
        roles[i] = AgentRole::kHeld;
        agents_[i].polar = body_to_polar(lead_angle(agents_[i].state), agents_[i].body);
    }

    void evaluate_controls() {
        const std::size_t n = agents_.size();
        const double t = time();
        const auto y_l = leader_output(t, scn_.leader);
        const auto ydot_l = leader_output_rate(scn_.leader);

        ActiveMask mask(n);
        std::vector<AgentRole> roles(n, AgentRole::kInactive);
        std::vector<OutputVector> outputs(n);
        std::vector<EngagementState> states(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto &a = agents_[i];
            states[i] = a.state;
            mask[i] = a.active;
            if (!a.active) {
                outputs[i] = a.output;
                continue;
            }
            roles[i] = AgentRole::kControlled;
            try {
                a.output = output(a.state, scn_.guards);
                a.has_output = true;
            } catch (const Error &) {
                // last valid output stays broadcast
                if (!a.has_output) a.output = {-a.state.r / a.state.r_dot, a.state.lambda_dot};
                roles[i] = AgentRole::kHeld;
            }
            outputs[i] = a.output;
            if (a.state.r < scn_.blind_zone_radius()) roles[i] = AgentRole::kHeld;
        }

        // Components with no leader link cannot be regulated; they keep their controls.
        const auto labels = connected_components(scn_.graph.weights(), mask);
        const int count = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
        for (int c = 0; c < count; ++c) {
            bool linked = false;
            for (std::size_t i = 0; i < n; ++i) linked = linked || (labels[i] == c && scn_.graph.leader_link(i) > 0.0);
            if (linked) continue;
            for (std::size_t i = 0; i < n; ++i) {
                if (labels[i] != c) continue;
                roles[i] = AgentRole::kHeld;
                if (!agents_[i].frozen_logged) {
                    log_.events.push_back("warning: missile " + std::to_string(i + 1) +
                                          " lost every path to the leader; holding control");
                    agents_[i].frozen_logged = true;
                }
            }
        }

        for (std::size_t i = 0; i < n; ++i) {
            if (mask[i]) agents_[i].error = consensus_error(i, outputs, y_l, scn_.graph, mask);
        }

        if (override_) {
            for (std::size_t i = 0; i < n; ++i) {
                if (!mask[i]) continue;
                apply(i, override_(i, t, agents_[i].state));
            }
            return;
        }

        for (std::size_t i = 0; i < n; ++i) {
            if (roles[i] == AgentRole::kHeld) hold(i, roles);
        }

        // Rates of held followers, as broadcast to their neighbours.
        std::vector<OutputRate> known = rates_;
        for (std::size_t i = 0; i < n; ++i) {
            if (roles[i] != AgentRole::kHeld) continue;
            try {
                known[i] = achieved_rate(agents_[i].state, agents_[i].polar, scn_.guards);
            } catch (const Error &) {
                // keep the previous broadcast
            }
        }

        std::vector<OutputRate> desired(n);
        if (scn_.coupling == CouplingMode::kExact) {
            desired = solve_coupled_rates(outputs, known, roles, y_l, ydot_l, scn_.graph, scn_.gains);
        } else {
            const auto neighbours = ydot_delayed(rates_);
            for (std::size_t i = 0; i < n; ++i) {
                if (roles[i] != AgentRole::kControlled) continue;
                desired[i] = commanded_rate(i, outputs, neighbours, y_l, ydot_l, scn_.graph,
                                            scn_.gains[i], mask);
            }
        }

        for (std::size_t i = 0; i < n; ++i) {
            if (roles[i] != AgentRole::kControlled) continue;
            PolarControl u;
            try {
                u = invert_output_dynamics(agents_[i].state, desired[i], scn_.guards);
            } catch (const Error &) {
                hold(i, roles);
                continue;
            }
            if (!std::isfinite(u.u1) || !std::isfinite(u.u2)) {
                hold(i, roles);
                continue;
            }
            apply(i, u);
        }

        for (std::size_t i = 0; i < n; ++i) {
            if (roles[i] == AgentRole::kInactive) continue;
            try {
                rates_[i] = achieved_rate(agents_[i].state, agents_[i].polar, scn_.guards);
            } catch (const Error &) {
                // previous broadcast stays
            }
        }
    }

    void apply(std::size_t i, const PolarControl &u) {
        auto &a = agents_[i];
        const double phi = lead_angle(a.state);
        BodyControl body = polar_to_body(phi, u);
        if (scn_.a_max) {
            const double lim = *scn_.a_max;
            body.a_t = std::clamp(body.a_t, -lim, lim);
            body.a_n = std::clamp(body.a_n, -lim, lim);
        }
        a.body = body;
        a.polar = body_to_polar(phi, body);
    }

    void append_log() {
        log_.times.push_back(time());
        for (std::size_t i = 0; i < agents_.size(); ++i) {
            const auto &a = agents_[i];
            const auto p = cartesian_step_reconstruction(a.state, scn_.target);
            AgentSample s;
            s.agent = i;
            s.r = a.state.r;
            s.r_dot = a.state.r_dot;
            s.lambda = a.state.lambda;
            s.lambda_dot = a.state.lambda_dot;
            s.t_go = -a.state.r / a.state.r_dot;
            s.x = p.x;
            s.z = p.z;
            s.u1 = a.polar.u1;
            s.u2 = a.polar.u2;
            s.a_t = a.body.a_t;
            s.a_n = a.body.a_n;
            s.e_tgo = std::abs(a.error.t_go);
            s.e_los = std::abs(a.error.lambda_dot);
            s.intercepted = a.intercepted;
            log_.samples.push_back(s);
        }
    }

    Scenario scn_;
    ControlOverride override_;
    std::vector<Agent> agents_;
    std::vector<OutputRate> rates_;
    SimLog log_;
    std::size_t step_ = 0;
};

inline InterceptReport Simulator::report() const {
    SimLog q;
    q.n_agents = log_.n_agents;
    q.times.reserve(log_.times.size());
    for (double t : log_.times) q.times.push_back(quantize(t));
    q.samples.reserve(log_.samples.size());
    for (auto s : log_.samples) {
        for (double *f : {&s.r, &s.r_dot, &s.lambda, &s.lambda_dot, &s.t_go, &s.x, &s.z, &s.u1,
                          &s.u2, &s.a_t, &s.a_n, &s.e_tgo, &s.e_los}) {
            *f = quantize(*f);
        }
        q.samples.push_back(s);
    }
    return assess(q, report_settings());
}

struct RunResult {
    SimLog log;
    InterceptReport report;
};

/// Runs a scenario until every follower is intercepted or t_max elapses.
inline RunResult run(const Scenario &s) {
    Simulator sim(s);
    sim.run_to_end();
    auto report = sim.report();
    return {sim.log(), std::move(report)};
}

} // namespace dndi
