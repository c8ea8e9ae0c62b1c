#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dndi {

/// Stable error codes. The numeric values are part of the CLI contract and
/// appear in diagnostics as `E<nnn>`; never renumber an existing entry.
enum class ErrorCode : int {
    // topology
    kShapeMismatch = 100,
    kAsymmetricWeights = 101,
    kSelfLoop = 102,
    kNegativeWeight = 103,
    kNoLeaderLink = 104,
    kDisconnectedGraph = 105,
    kIsolatedAgent = 106,
    kDuplicateEdge = 107,
    kAgentIndexRange = 108,
    kSingularCoupling = 109,

    // engagement / controller
    kCoincidentPosition = 200,
    kSingularRange = 201,
    kStagnation = 202,
    kControllerSingular = 203,
    kNonFiniteState = 204,

    // scenario
    kParse = 300,
    kMissingField = 301,
    kTypeMismatch = 302,
    kNonpositiveDt = 303,
    kNonnegativeDelta = 304,
    kBadTimeout = 305,
    kBadRadius = 306,
    kBadGain = 307,
    kBadSpeed = 308,
    kNonpositiveTgo = 309,
    kBadCoupling = 310,
    kBadSaturation = 311,
    kNoMissiles = 312,
    kBadOverride = 313,
    kUnknownField = 314,

    // csv / io
    kCsvHeader = 400,
    kCsvRow = 401,
    kIo = 402,
};

inline std::string code_label(ErrorCode code) {
    return "E" + std::to_string(static_cast<int>(code));
}

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string field, const std::string &message)
        : std::runtime_error(code_label(code) + " [" + field + "] " + message),
          code_(code), field_(std::move(field)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string &field() const noexcept { return field_; }

private:
    ErrorCode code_;
    std::string field_;
};

/// A single validation finding; validators collect these instead of stopping
/// at the first problem.
struct Diagnostic {
    ErrorCode code;
    std::string field;
    std::string message;

    std::string str() const { return code_label(code) + " [" + field + "] " + message; }
};

/// Raised when validation produced one or more diagnostics.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<Diagnostic> diagnostics)
        : Error(diagnostics.at(0).code, diagnostics.at(0).field, summarize(diagnostics)),
          diagnostics_(std::move(diagnostics)) {}

    const std::vector<Diagnostic> &diagnostics() const noexcept { return diagnostics_; }

private:
    static std::string summarize(const std::vector<Diagnostic> &d) {
        std::string out = d.front().message;
        if (d.size() > 1) out += " (+" + std::to_string(d.size() - 1) + " more)";
        return out;
    }

    std::vector<Diagnostic> diagnostics_;
};

} // namespace dndi
