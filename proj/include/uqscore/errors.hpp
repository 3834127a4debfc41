#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace uqscore {

// Every failure the library raises carries a stable machine-readable code.
// The CLI prints `what()` verbatim as a single line, so the format is
// always "<code>: <detail>".
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& detail)
        : std::runtime_error(code + ": " + detail), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

struct InvalidParameterError : Error {
    explicit InvalidParameterError(const std::string& detail)
        : Error("invalid-parameter", detail) {}
};

struct DegenerateDataError : Error {
    explicit DegenerateDataError(const std::string& detail)
        : Error("degenerate-data", detail) {}
};

struct MetricUndefinedError : Error {
    explicit MetricUndefinedError(const std::string& detail)
        : Error("metric-undefined", detail) {}
};

struct InfeasibleBudgetError : Error {
    explicit InfeasibleBudgetError(const std::string& detail)
        : Error("infeasible-budget", detail) {}
};

struct JoinFailureError : Error {
    explicit JoinFailureError(const std::string& detail)
        : Error("join-failure", detail) {}
};

struct SchemaViolationError : Error {
    explicit SchemaViolationError(const std::string& detail)
        : Error("schema-violation", detail) {}
};

struct IoError : Error {
    explicit IoError(const std::string& detail)
        : Error("io-error", detail) {}
};

} // namespace uqscore
