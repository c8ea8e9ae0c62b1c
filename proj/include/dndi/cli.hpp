// Subcommand implementations behind the `dndi` executable. Exit codes:
// 0 success / PASS, 1 domain failure (validation error, FAIL report),
// 2 operational error (unreadable input, parse error, runtime abort).
#pragma once

#include <dndi/scenario_io.hpp>
#include <dndi/simulator.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace dndi::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitError = 2;

/// Applies `section.field=value` to a scenario document. Numeric path
/// segments index lists, 1-based (`missiles.2.v=210`). The value is read as
/// JSON when it parses (numbers, lists, quoted strings) and as a bare string
/// otherwise (`auto`, `exact`).
inline void apply_override(Json &doc, const std::string &assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw Error(ErrorCode::kBadOverride, assignment, "override must look like section.field=value");
    }
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    Json value;
    try {
        value = Json::parse(text);
    } catch (const nlohmann::json::parse_error &) {
        value = text;
    }

    std::vector<std::string> parts;
    std::stringstream ss(path);
    for (std::string p; std::getline(ss, p, '.');) {
        if (p.empty()) throw Error(ErrorCode::kBadOverride, path, "empty path segment");
        parts.push_back(p);
    }
    Json *node = &doc;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto &p = parts[k];
        const bool last = k + 1 == parts.size();
        if (node->is_array()) {
            std::size_t idx = 0;
            try {
                idx = std::stoul(p);
            } catch (const std::exception &) {
                throw Error(ErrorCode::kBadOverride, path, "list index expected at '" + p + "'");
            }
            if (idx < 1 || idx > node->size()) {
                throw Error(ErrorCode::kBadOverride, path, "list index " + p + " out of range");
            }
            node = &(*node)[idx - 1];
        } else {
            if (!node->is_object()) {
                throw Error(ErrorCode::kBadOverride, path, "'" + p + "' is not inside a section");
            }
            if (!last && !node->contains(p)) (*node)[p] = Json::object();
            node = &(*node)[p];
        }
        if (last) *node = value;
    }
}

inline std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, path.string(), "cannot read file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Loads, overrides, and validates a scenario. Parse errors surface as
/// ValidationError carrying kParse.
inline Scenario load_scenario(const std::filesystem::path &path, const std::vector<std::string> &overrides) {
    Json doc = parse_document(read_file(path));
    for (const auto &o : overrides) apply_override(doc, o);
    return scenario_from_document(doc);
}

namespace detail {

inline bool is_operational(const ValidationError &e) {
    for (const auto &d : e.diagnostics()) {
        if (d.code == ErrorCode::kParse) return true;
    }
    return false;
}

inline int report_validation(const ValidationError &e, std::ostream &err) {
    for (const auto &d : e.diagnostics()) err << "error: " << d.str() << '\n';
    return is_operational(e) ? kExitError : kExitFail;
}

} // namespace detail

inline int cmd_validate(const std::filesystem::path &path, const std::vector<std::string> &overrides,
                        std::ostream &out, std::ostream &err) {
    try {
        const Scenario s = load_scenario(path, overrides);
        out << "OK\n";
        out << "missiles " << s.size() << '\n';
        out << "coupling " << to_string(s.coupling) << '\n';
        out << "t_go_0 " << render_number(s.leader.t_go_0) << (s.t_go_0_auto ? " (auto)" : "") << '\n';
        out << "t_max " << render_number(s.t_max) << (s.t_max_auto ? " (auto)" : "") << '\n';
        return kExitOk;
    } catch (const ValidationError &e) {
        return detail::report_validation(e, err);
    } catch (const Error &e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
}

inline int cmd_run(const std::filesystem::path &path, const std::filesystem::path &out_dir,
                   const std::vector<std::string> &overrides, std::ostream &out, std::ostream &err,
                   bool verbose = false) {
    std::optional<Scenario> scenario;
    try {
        scenario = load_scenario(path, overrides);
    } catch (const ValidationError &e) {
        return detail::report_validation(e, err);
    } catch (const Error &e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }

    try {
        Simulator sim(std::move(*scenario));
        sim.run_to_end();
        const auto report = sim.report();
        if (verbose) {
            for (const auto &ev : sim.log().events) err << ev << '\n';
        }

        std::filesystem::create_directories(out_dir);
        {
            std::ofstream csv(out_dir / "trajectory.csv", std::ios::binary);
            if (!csv) throw Error(ErrorCode::kIo, (out_dir / "trajectory.csv").string(), "cannot open for writing");
            write_trajectory_csv(sim.log(), csv);
        }
        {
            std::ofstream txt(out_dir / "report.txt", std::ios::binary);
            if (!txt) throw Error(ErrorCode::kIo, (out_dir / "report.txt").string(), "cannot open for writing");
            write_report(report, txt);
            if (!txt) throw Error(ErrorCode::kIo, (out_dir / "report.txt").string(), "write failed");
        }
        write_report(report, out);
        return report.pass ? kExitOk : kExitFail;
    } catch (const Error &e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    } catch (const std::filesystem::filesystem_error &e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
}

/// Recomputes the report metrics from a stored trajectory.
inline int cmd_metrics(const std::filesystem::path &csv_path, const ReportSettings &settings, std::ostream &out,
                       std::ostream &err) {
    try {
        std::ifstream in(csv_path, std::ios::binary);
        if (!in) throw Error(ErrorCode::kIo, csv_path.string(), "cannot read file");
        const auto log = read_trajectory_csv(in);
        write_metrics(assess(log, settings), out);
        return kExitOk;
    } catch (const Error &e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
}

} // namespace dndi::cli
