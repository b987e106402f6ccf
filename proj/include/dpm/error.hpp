#pragma once

#include <stdexcept>
#include <string>

namespace dpm {

enum class ErrorCategory { invalid_input, convergence, infeasible_geometry, io };

const char* to_string(ErrorCategory category);

/// Base of every error the toolkit throws. The category drives CLI exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

class InvalidInput : public Error {
public:
    explicit InvalidInput(const std::string& what)
        : Error(ErrorCategory::invalid_input, what) {}
};

class GeometryError : public Error {
public:
    explicit GeometryError(const std::string& what)
        : Error(ErrorCategory::infeasible_geometry, what) {}
};

/// Iteration cap hit or a linear solve failed. Carries the last residual seen.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_residual, long iterations)
        : Error(ErrorCategory::convergence, what),
          last_residual_(last_residual),
          iterations_(iterations) {}

    double last_residual() const noexcept { return last_residual_; }
    long iterations() const noexcept { return iterations_; }

private:
    double last_residual_;
    long iterations_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorCategory::io, what) {}
};

}  // namespace dpm
