// Scenario files (JSON), trajectory CSV, and the plain-text run report.
//
// Scenario document layout; angles are degrees in files, radians in memory:
//
//   {
//     "target":   {"x": 0, "z": 2000},
//     "missiles": [{"v": 200, "gamma_deg": 90, "x": 0, "z": 0}, ...],
//     "graph":    {"edges": [{"i": 1, "j": 2, "w": 1}], "leader_links": [1, 0]},
//     "control":  {"k_tgo": 2, "k_los": 2, "delta": -1, "t_go_0": "auto",
//                  "coupling": "delayed", "a_max": "none",
//                  "gains": [{"k_tgo": 2, "k_los": 2}, ...]},
//     "sim":      {"dt": 0.001, "t_max": "auto", "intercept_radius": 1,
//                  "spread_tolerance": 0.05, "blind_zone_factor": 10,
//                  "r_min": 1e-6, "closing_rate_floor": 1e-3}
//   }
//
// Agent indices in files are 1-based. Everything except `target` and
// `missiles` is optional; `graph` defaults to no edges with every follower
// linked to the leader.
#pragma once

#include <dndi/error.hpp>
#include <dndi/format.hpp>
#include <dndi/simulator.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace dndi {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kTrajectoryHeader =
    "t,agent,r,r_dot,lambda,lambda_dot,t_go,x,z,u1,u2,a_t,a_n,e_tgo,e_los,intercepted";

namespace detail {

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

/// Field access that records problems instead of throwing on the first one.
class FieldReader {
public:
    std::vector<Diagnostic> diags;

    void fail(ErrorCode code, const std::string &field, const std::string &msg) {
        diags.push_back({code, field, msg});
    }

    void only_keys(const Json &obj, const std::string &path, std::initializer_list<std::string_view> keys) {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) {
                fail(ErrorCode::kUnknownField, join(path, it.key()), "unknown field");
            }
        }
    }

    const Json *object(const Json &parent, const std::string &key, const std::string &path, bool required) {
        if (!parent.contains(key)) {
            if (required) fail(ErrorCode::kMissingField, join(path, key), "required section missing");
            return nullptr;
        }
        const auto &v = parent[key];
        if (!v.is_object()) {
            fail(ErrorCode::kTypeMismatch, join(path, key), "expected an object");
            return nullptr;
        }
        return &v;
    }

    const Json *array(const Json &parent, const std::string &key, const std::string &path, bool required) {
        if (!parent.contains(key)) {
            if (required) fail(ErrorCode::kMissingField, join(path, key), "required list missing");
            return nullptr;
        }
        const auto &v = parent[key];
        if (!v.is_array()) {
            fail(ErrorCode::kTypeMismatch, join(path, key), "expected a list");
            return nullptr;
        }
        return &v;
    }

    std::optional<double> number(const Json &parent, const std::string &key, const std::string &path,
                                 std::optional<double> fallback) {
        if (!parent.contains(key)) {
            if (!fallback) fail(ErrorCode::kMissingField, join(path, key), "required number missing");
            return fallback;
        }
        const auto &v = parent[key];
        if (!v.is_number() || !std::isfinite(v.get<double>())) {
            fail(ErrorCode::kTypeMismatch, join(path, key), "expected a finite number");
            return std::nullopt;
        }
        return v.get<double>();
    }

    /// A number or the marker word `word`. Returns nullopt for the marker.
    std::optional<double> number_or(const Json &parent, const std::string &key, const std::string &path,
                                    std::string_view word, bool &is_word, bool &ok) {
        ok = true;
        is_word = true;
        if (!parent.contains(key)) return std::nullopt;
        const auto &v = parent[key];
        if (v.is_string() && v.get<std::string>() == word) return std::nullopt;
        is_word = false;
        if (!v.is_number() || !std::isfinite(v.get<double>())) {
            fail(ErrorCode::kTypeMismatch, join(path, key),
                 "expected a number or \"" + std::string(word) + "\"");
            ok = false;
            return std::nullopt;
        }
        return v.get<double>();
    }

    static std::string join(const std::string &path, const std::string &key) {
        return path.empty() ? key : path + "." + key;
    }
};

inline std::string locate(std::string_view text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k < std::min(byte, text.size()); ++k) {
        if (text[k] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

} // namespace detail

/// Parses a JSON text into a document, reporting the line of a syntax error.
inline Json parse_document(std::string_view text) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error &e) {
        throw ValidationError({{ErrorCode::kParse, detail::locate(text, e.byte > 0 ? e.byte - 1 : 0),
                                "malformed scenario document: " + std::string(e.what())}});
    }
}

/// Validates a parsed document into a Scenario, collecting every diagnostic.
/// `auto` fields are resolved before returning.
inline Scenario scenario_from_document(const Json &doc) {
    detail::FieldReader rd;
    if (!doc.is_object()) {
        throw ValidationError({{ErrorCode::kTypeMismatch, "document", "top level must be an object"}});
    }
    rd.only_keys(doc, "", {"target", "missiles", "graph", "control", "sim"});

    Position target;
    if (const auto *t = rd.object(doc, "target", "", true)) {
        rd.only_keys(*t, "target", {"x", "z"});
        target.x = rd.number(*t, "x", "target", std::nullopt).value_or(0.0);
        target.z = rd.number(*t, "z", "target", std::nullopt).value_or(0.0);
    }

    std::vector<MissileState> missiles;
    if (const auto *ms = rd.array(doc, "missiles", "", true)) {
        if (ms->empty()) rd.fail(ErrorCode::kNoMissiles, "missiles", "at least one missile required");
        for (std::size_t k = 0; k < ms->size(); ++k) {
            const std::string path = "missiles[" + std::to_string(k + 1) + "]";
            const auto &m = (*ms)[k];
            if (!m.is_object()) {
                rd.fail(ErrorCode::kTypeMismatch, path, "expected an object");
                missiles.push_back({1.0, 0.0, 0.0, 0.0});
                continue;
            }
            rd.only_keys(m, path, {"v", "gamma_deg", "x", "z"});
            MissileState s;
            s.v = rd.number(m, "v", path, std::nullopt).value_or(1.0);
            s.gamma = detail::deg2rad(rd.number(m, "gamma_deg", path, std::nullopt).value_or(0.0));
            s.x = rd.number(m, "x", path, std::nullopt).value_or(0.0);
            s.z = rd.number(m, "z", path, std::nullopt).value_or(0.0);
            if (!(s.v > 0.0)) rd.fail(ErrorCode::kBadSpeed, path + ".v", "speed must be > 0");
            missiles.push_back(s);
        }
    }
    const std::size_t n = missiles.size();

    // graph
    std::vector<Edge> edges;
    Eigen::VectorXd links = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    if (const auto *g = rd.object(doc, "graph", "", false)) {
        rd.only_keys(*g, "graph", {"edges", "leader_links"});
        if (const auto *es = rd.array(*g, "edges", "graph", false)) {
            for (std::size_t k = 0; k < es->size(); ++k) {
                const std::string path = "graph.edges[" + std::to_string(k + 1) + "]";
                const auto &e = (*es)[k];
                if (!e.is_object()) {
                    rd.fail(ErrorCode::kTypeMismatch, path, "expected an object");
                    continue;
                }
                rd.only_keys(e, path, {"i", "j", "w"});
                const auto i = rd.number(e, "i", path, std::nullopt);
                const auto j = rd.number(e, "j", path, std::nullopt);
                const auto w = rd.number(e, "w", path, 1.0);
                if (!i || !j || !w) continue;
                const auto in_range = [n](double v) {
                    return v >= 1.0 && v <= static_cast<double>(n) && v == std::floor(v);
                };
                if (!in_range(*i) || !in_range(*j)) {
                    rd.fail(ErrorCode::kAgentIndexRange, path, "agent index outside 1.." + std::to_string(n));
                    continue;
                }
                if (!(*w > 0.0)) {
                    rd.fail(ErrorCode::kNegativeWeight, path + ".w", "edge weight must be > 0");
                    continue;
                }
                edges.push_back({static_cast<std::size_t>(*i) - 1, static_cast<std::size_t>(*j) - 1, *w});
            }
        }
        if (const auto *ls = rd.array(*g, "leader_links", "graph", false)) {
            if (ls->size() != n) {
                rd.fail(ErrorCode::kShapeMismatch, "graph.leader_links",
                        "expected " + std::to_string(n) + " entries, got " + std::to_string(ls->size()));
            } else {
                for (std::size_t k = 0; k < n; ++k) {
                    const auto &v = (*ls)[k];
                    if (!v.is_number()) {
                        rd.fail(ErrorCode::kTypeMismatch, "graph.leader_links[" + std::to_string(k + 1) + "]",
                                "expected a number");
                        continue;
                    }
                    links(static_cast<Eigen::Index>(k)) = v.get<double>();
                }
            }
        }
    }

    // control
    GainMatrix base;
    std::vector<GainMatrix> gains;
    LeaderModel leader;
    bool t_go_0_auto = true;
    CouplingMode coupling = CouplingMode::kDelayed;
    std::optional<double> a_max;
    if (const auto *c = rd.object(doc, "control", "", false)) {
        rd.only_keys(*c, "control", {"k_tgo", "k_los", "delta", "t_go_0", "coupling", "a_max", "gains"});
        base.k_tgo = rd.number(*c, "k_tgo", "control", 2.0).value_or(2.0);
        base.k_los = rd.number(*c, "k_los", "control", 2.0).value_or(2.0);
        leader.delta = rd.number(*c, "delta", "control", -1.0).value_or(-1.0);
        bool word = true, ok = true;
        if (auto t0 = rd.number_or(*c, "t_go_0", "control", "auto", word, ok); t0) {
            t_go_0_auto = false;
            leader.t_go_0 = *t0;
            if (!(*t0 > 0.0)) rd.fail(ErrorCode::kNonpositiveTgo, "control.t_go_0", "t_go_0 must be > 0");
        }
        if (c->contains("coupling")) {
            const auto &v = (*c)["coupling"];
            if (v == "exact") {
                coupling = CouplingMode::kExact;
            } else if (v == "delayed") {
                coupling = CouplingMode::kDelayed;
            } else {
                rd.fail(ErrorCode::kBadCoupling, "control.coupling", "expected \"exact\" or \"delayed\"");
            }
        }
        if (auto a = rd.number_or(*c, "a_max", "control", "none", word, ok); a) {
            a_max = *a;
            if (!(*a > 0.0)) rd.fail(ErrorCode::kBadSaturation, "control.a_max", "a_max must be > 0");
        }
        if (const auto *gs = rd.array(*c, "gains", "control", false)) {
            if (gs->size() != n) {
                rd.fail(ErrorCode::kShapeMismatch, "control.gains",
                        "expected " + std::to_string(n) + " entries, got " + std::to_string(gs->size()));
            } else {
                for (std::size_t k = 0; k < n; ++k) {
                    const std::string path = "control.gains[" + std::to_string(k + 1) + "]";
                    const auto &g = (*gs)[k];
                    if (!g.is_object()) {
                        rd.fail(ErrorCode::kTypeMismatch, path, "expected an object");
                        continue;
                    }
                    rd.only_keys(g, path, {"k_tgo", "k_los"});
                    gains.push_back({rd.number(g, "k_tgo", path, base.k_tgo).value_or(base.k_tgo),
                                     rd.number(g, "k_los", path, base.k_los).value_or(base.k_los)});
                }
            }
        }
    }
    if (gains.size() != n) gains.assign(n, base);
    for (std::size_t k = 0; k < n; ++k) {
        if (!gains[k].valid()) {
            rd.fail(ErrorCode::kBadGain, "control.gains[" + std::to_string(k + 1) + "]",
                    "gains must be finite and > 0");
        }
    }
    if (!(leader.delta < 0.0)) {
        rd.fail(ErrorCode::kNonnegativeDelta, "control.delta", "leader slope delta must be < 0");
    }

    // sim
    double dt = 1e-3, radius = 1.0, spread_tol = 0.05, blind = 10.0;
    Guards guards;
    std::optional<double> t_max;
    if (const auto *sm = rd.object(doc, "sim", "", false)) {
        rd.only_keys(*sm, "sim", {"dt", "t_max", "intercept_radius", "spread_tolerance", "blind_zone_factor",
                                  "r_min", "closing_rate_floor"});
        dt = rd.number(*sm, "dt", "sim", 1e-3).value_or(1e-3);
        radius = rd.number(*sm, "intercept_radius", "sim", 1.0).value_or(1.0);
        spread_tol = rd.number(*sm, "spread_tolerance", "sim", 0.05).value_or(0.05);
        blind = rd.number(*sm, "blind_zone_factor", "sim", 10.0).value_or(10.0);
        guards.r_min = rd.number(*sm, "r_min", "sim", guards.r_min).value_or(guards.r_min);
        guards.closing_rate_floor =
            rd.number(*sm, "closing_rate_floor", "sim", guards.closing_rate_floor).value_or(guards.closing_rate_floor);
        bool word = true, ok = true;
        t_max = rd.number_or(*sm, "t_max", "sim", "auto", word, ok);
    }
    if (!(dt > 0.0)) rd.fail(ErrorCode::kNonpositiveDt, "sim.dt", "dt must be > 0");
    if (!(radius > 0.0)) rd.fail(ErrorCode::kBadRadius, "sim.intercept_radius", "intercept_radius must be > 0");
    if (!(spread_tol >= 0.0)) rd.fail(ErrorCode::kBadRadius, "sim.spread_tolerance", "spread_tolerance must be >= 0");
    if (!(blind >= 1.0)) rd.fail(ErrorCode::kBadRadius, "sim.blind_zone_factor", "blind_zone_factor must be >= 1");
    if (!(guards.r_min > 0.0) || !(guards.closing_rate_floor > 0.0)) {
        rd.fail(ErrorCode::kBadRadius, "sim", "r_min and closing_rate_floor must be > 0");
    }
    if (t_max && !(*t_max > dt)) rd.fail(ErrorCode::kBadTimeout, "sim.t_max", "t_max must exceed dt");

    for (std::size_t k = 0; k < n; ++k) {
        const std::string path = "missiles[" + std::to_string(k + 1) + "]";
        const double r = std::hypot(target.x - missiles[k].x, target.z - missiles[k].z);
        if (r < guards.r_min) {
            rd.fail(ErrorCode::kCoincidentPosition, path, "missile placed at the target");
        } else if (r <= radius) {
            rd.fail(ErrorCode::kBadRadius, path, "missile starts inside the capture radius");
        }
    }

    std::optional<CommGraph> graph;
    if (n > 0) {
        try {
            graph = CommGraph::from_edges(n, edges, links);
        } catch (const ValidationError &e) {
            for (const auto &d : e.diagnostics()) rd.diags.push_back(d);
        }
    }

    if (!rd.diags.empty()) throw ValidationError(std::move(rd.diags));

    Scenario s{target, std::move(missiles), std::move(*graph), std::move(gains)};
    s.leader = leader;
    s.t_go_0_auto = t_go_0_auto;
    s.coupling = coupling;
    s.a_max = a_max;
    s.dt = dt;
    s.t_max_auto = !t_max.has_value();
    s.t_max = t_max.value_or(0.0);
    s.intercept_radius = radius;
    s.spread_tolerance = spread_tol;
    s.blind_zone_factor = blind;
    s.guards = guards;

    try {
        resolve_auto(s);
    } catch (const Error &e) {
        throw ValidationError({{e.code(), e.field(), e.what()}});
    }
    if (!(s.t_max > s.dt)) {
        throw ValidationError({{ErrorCode::kBadTimeout, "sim.t_max", "resolved t_max must exceed dt"}});
    }
    return s;
}

inline Scenario parse_scenario(std::string_view text) { return scenario_from_document(parse_document(text)); }

/// Scenario as a document. `auto` fields are written as `auto`, so a
/// round trip leaves them unresolved-then-resolved exactly as before.
inline Json scenario_to_document(const Scenario &s) {
    Json doc;
    doc["target"] = {{"x", s.target.x}, {"z", s.target.z}};
    Json ms = Json::array();
    for (const auto &m : s.missiles) {
        ms.push_back({{"v", m.v}, {"gamma_deg", detail::rad2deg(m.gamma)}, {"x", m.x}, {"z", m.z}});
    }
    doc["missiles"] = ms;

    Json edges = Json::array();
    for (std::size_t i = 0; i < s.graph.size(); ++i) {
        for (std::size_t j = i + 1; j < s.graph.size(); ++j) {
            if (s.graph.weight(i, j) > 0.0) edges.push_back({{"i", i + 1}, {"j", j + 1}, {"w", s.graph.weight(i, j)}});
        }
    }
    Json links = Json::array();
    for (std::size_t i = 0; i < s.graph.size(); ++i) links.push_back(s.graph.leader_link(i));
    doc["graph"] = {{"edges", edges}, {"leader_links", links}};

    Json gains = Json::array();
    for (const auto &g : s.gains) gains.push_back({{"k_tgo", g.k_tgo}, {"k_los", g.k_los}});
    const GainMatrix base = s.gains.empty() ? GainMatrix{} : s.gains.front();
    doc["control"] = {
        {"k_tgo", base.k_tgo},
        {"k_los", base.k_los},
        {"delta", s.leader.delta},
        {"t_go_0", s.t_go_0_auto ? Json("auto") : Json(s.leader.t_go_0)},
        {"coupling", to_string(s.coupling)},
        {"a_max", s.a_max ? Json(*s.a_max) : Json("none")},
        {"gains", gains},
    };
    doc["sim"] = {
        {"dt", s.dt},
        {"t_max", s.t_max_auto ? Json("auto") : Json(s.t_max)},
        {"intercept_radius", s.intercept_radius},
        {"spread_tolerance", s.spread_tolerance},
        {"blind_zone_factor", s.blind_zone_factor},
        {"r_min", s.guards.r_min},
        {"closing_rate_floor", s.guards.closing_rate_floor},
    };
    return doc;
}

inline std::string serialize_scenario(const Scenario &s) { return scenario_to_document(s).dump(2) + "\n"; }

/// Writes the trajectory log. Every numeric field uses `render_number`.
inline void write_trajectory_csv(const SimLog &log, std::ostream &out) {
    out << kTrajectoryHeader << '\n';
    for (std::size_t k = 0; k < log.steps(); ++k) {
        const std::string t = render_number(log.times[k]);
        for (std::size_t i = 0; i < log.n_agents; ++i) {
            const auto &s = log.at(k, i);
            out << t << ',' << (s.agent + 1);
            for (double v : {s.r, s.r_dot, s.lambda, s.lambda_dot, s.t_go, s.x, s.z, s.u1, s.u2, s.a_t, s.a_n,
                             s.e_tgo, s.e_los}) {
                out << ',' << render_number(v);
            }
            out << ',' << (s.intercepted ? 1 : 0) << '\n';
        }
    }
    if (!out) throw Error(ErrorCode::kIo, "trajectory", "failed writing trajectory CSV");
}

/// Reads a trajectory CSV back into a log (events are not stored in CSV).
inline SimLog read_trajectory_csv(std::istream &in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::kCsvHeader, "header", "empty CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTrajectoryHeader) throw Error(ErrorCode::kCsvHeader, "header", "unexpected CSV header");

    struct Row {
        double t;
        AgentSample s;
    };
    std::vector<Row> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        const std::string where = "line " + std::to_string(lineno);
        if (cells.size() != 16) throw Error(ErrorCode::kCsvRow, where, "expected 16 columns");
        std::vector<double> v(16);
        for (std::size_t c = 0; c < 16; ++c) {
            char *end = nullptr;
            v[c] = std::strtod(cells[c].c_str(), &end);
            if (cells[c].empty() || end != cells[c].c_str() + cells[c].size()) {
                throw Error(ErrorCode::kCsvRow, where, "column " + std::to_string(c + 1) + " is not a number");
            }
        }
        if (v[1] < 1.0 || v[1] != std::floor(v[1]) || (v[15] != 0.0 && v[15] != 1.0)) {
            throw Error(ErrorCode::kCsvRow, where, "bad agent index or intercepted flag");
        }
        AgentSample s;
        s.agent = static_cast<std::size_t>(v[1]) - 1;
        s.r = v[2];
        s.r_dot = v[3];
        s.lambda = v[4];
        s.lambda_dot = v[5];
        s.t_go = v[6];
        s.x = v[7];
        s.z = v[8];
        s.u1 = v[9];
        s.u2 = v[10];
        s.a_t = v[11];
        s.a_n = v[12];
        s.e_tgo = v[13];
        s.e_los = v[14];
        s.intercepted = v[15] == 1.0;
        rows.push_back({v[0], s});
    }
    if (rows.empty()) throw Error(ErrorCode::kCsvRow, "data", "no data rows");

    SimLog log;
    std::size_t n = 0;
    while (n < rows.size() && rows[n].t == rows[0].t) ++n;
    if (rows.size() % n != 0) throw Error(ErrorCode::kCsvRow, "data", "incomplete final time step");
    log.n_agents = n;
    for (std::size_t k = 0; k * n < rows.size(); ++k) {
        const double t = rows[k * n].t;
        if (k > 0 && !(t > log.times.back())) throw Error(ErrorCode::kCsvRow, "data", "time not increasing");
        log.times.push_back(t);
        for (std::size_t i = 0; i < n; ++i) {
            const auto &r = rows[k * n + i];
            if (r.t != t || r.s.agent != i) {
                throw Error(ErrorCode::kCsvRow, "line " + std::to_string(k * n + i + 2),
                            "rows must be time-major with agents 1..N");
            }
            log.samples.push_back(r.s);
        }
    }
    return log;
}

/// Metric block shared by the run report and the `metrics` subcommand.
inline void write_metrics(const InterceptReport &r, std::ostream &out) {
    out << "impact_time_spread_s " << render_number(r.impact_time_spread) << '\n';
    out << "peak_consensus_s " << render_number(r.peak_consensus) << '\n';
    out << "final_consensus_s " << render_number(r.final_consensus) << '\n';
    for (std::size_t i = 0; i < r.max_los_rate_final.size(); ++i) {
        out << "max_los_rate_final_rad_s agent " << (i + 1) << ' ' << render_number(r.max_los_rate_final[i]) << '\n';
    }
}

inline void write_report(const InterceptReport &r, std::ostream &out) {
    out << "# engagement report\n";
    for (std::size_t i = 0; i < r.agents.size(); ++i) {
        const auto &a = r.agents[i];
        out << "agent " << (i + 1) << ' ' << (a.intercepted ? "intercepted" : "MISSED") << " impact_time_s "
            << (a.intercepted ? render_number(a.impact_time) : std::string("-")) << " miss_distance_m "
            << render_number(a.miss_distance) << '\n';
    }
    write_metrics(r, out);
    out << "spread_tolerance_s " << render_number(r.spread_tolerance) << '\n';
    if (r.pass) {
        out << "PASS\n";
        return;
    }
    out << "FAIL";
    std::string sep = " missed agents:";
    for (std::size_t i = 0; i < r.agents.size(); ++i) {
        if (!r.agents[i].intercepted) {
            out << sep << ' ' << (i + 1);
            sep = "";
        }
    }
    if (r.all_intercepted()) out << " impact-time spread above tolerance";
    out << '\n';
}

} // namespace dndi
