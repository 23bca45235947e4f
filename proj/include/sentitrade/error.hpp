#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sentitrade {

enum class ErrorKind {
    Io,
    Format,
    Validation,
    InsufficientData,
    Name,
    ZeroVariance,
    Alignment,
    Range,
    Argument,
    Protocol,
    Correlation,
    Capacity,
    Rank,
    Numerical,
    Spec,
    Schema,
    UndefinedClass,
    Fold,
    Division,
    Configuration,
    Dependency,
    Comparison,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it onto an exit status without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace sentitrade
