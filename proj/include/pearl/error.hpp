#pragma once

#include <stdexcept>
#include <string>

namespace pearl {

// Failure categories shared by the library and the CLI (which maps them to
// process exit codes).
enum class ErrorKind {
    invalid_parameter,
    invalid_state,
    invalid_data,
    invalid_artifact,
    io_error,
    numeric_failure,
    budget_violation,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    // CLI contract: 0 ok, 2 invalid input, 3 privacy-budget violation,
    // 4 numeric failure.
    int exit_code() const noexcept {
        switch (kind_) {
        case ErrorKind::budget_violation: return 3;
        case ErrorKind::numeric_failure: return 4;
        default: return 2;
        }
    }

    const char* kind_name() const noexcept {
        switch (kind_) {
        case ErrorKind::invalid_parameter: return "invalid-parameter";
        case ErrorKind::invalid_state: return "invalid-state";
        case ErrorKind::invalid_data: return "invalid-data";
        case ErrorKind::invalid_artifact: return "invalid-artifact";
        case ErrorKind::io_error: return "io-error";
        case ErrorKind::numeric_failure: return "numeric-failure";
        case ErrorKind::budget_violation: return "privacy-budget-violation";
        }
        return "error";
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) fail(kind, message);
}

}  // namespace pearl
