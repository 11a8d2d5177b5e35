#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace compare_kit {

// Machine-readable error codes shared by the library, the CLI and the
// HTTP service.
enum class ErrorCode {
    InfeasibleAssociation,
    UndetectableEffect,
    QuadratureFailure,
    Validation,
    Busy,
    Internal,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string field = {})
        : std::runtime_error(message), code_(code), field_(std::move(field)) {}

    ErrorCode code() const noexcept { return code_; }
    // Dotted path of the offending input, empty when not attributable.
    const std::string& field() const noexcept { return field_; }

private:
    ErrorCode code_;
    std::string field_;
};

// Numerical failure that still carries the best available estimate.
class NumericFailure : public Error {
public:
    NumericFailure(const std::string& message, double estimate, double error_bound)
        : Error(ErrorCode::QuadratureFailure, message),
          estimate_(estimate),
          error_bound_(error_bound) {}

    double estimate() const noexcept { return estimate_; }
    double error_bound() const noexcept { return error_bound_; }

private:
    double estimate_;
    double error_bound_;
};

[[noreturn]] void fail_validation(const std::string& field, const std::string& message);

}  // namespace compare_kit
