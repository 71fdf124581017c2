#pragma once

#include <stdexcept>
#include <string>

namespace ssfem {

/// Bad user input (sizes, flags, grid combinations).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Base for failures detected while computing.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MeshError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NotSpdError : public NumericalError {
public:
    explicit NotSpdError(const std::string& where) : NumericalError("matrix not SPD: " + where) {}
};

}  // namespace ssfem
