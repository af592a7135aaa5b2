#pragma once

#include <stdexcept>
#include <string>

namespace metahunt {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A FuncSample was used with a grid it is not aligned to.
class AlignmentError : public Error {
public:
    explicit AlignmentError(const std::string& msg) : Error(msg) {}
};

/// Invalid argument (sizes, ranges, empty inputs).
class ArgumentError : public Error {
public:
    explicit ArgumentError(const std::string& msg) : Error(msg) {}
};

/// Model fitting failed (non-finite likelihood, singular design).
class FitError : public Error {
public:
    explicit FitError(const std::string& msg) : Error(msg) {}
};

/// Malformed or inconsistent data in a file.
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

} // namespace metahunt
