#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kcf {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Raised when the step map produces NaN/Inf. `step_index` is the simulation
/// step (0 for a single call) and `coordinate` the first offending entry.
class NonFiniteState : public Error {
public:
    NonFiniteState(std::size_t step_index, std::size_t coordinate)
        : Error("non-finite state at step " + std::to_string(step_index) + ", coordinate " +
                std::to_string(coordinate)),
          step_index(step_index),
          coordinate(coordinate) {}

    std::size_t step_index;
    std::size_t coordinate;
};

class DegenerateData : public Error {
public:
    using Error::Error;
};

class RankDeficientProbe : public Error {
public:
    using Error::Error;
};

class RankDeficientAtInput : public Error {
public:
    using Error::Error;
};

class UnknownInputValue : public Error {
public:
    using Error::Error;
};

class NonFiniteLoss : public Error {
public:
    using Error::Error;
};

class NonFiniteGradient : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace kcf
